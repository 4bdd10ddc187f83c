//! Resolves a TOML run configuration the way the CLI does and runs one
//! command through the library entry point.

use ionsense::cli::{execute, Command, RunConfig, SimulateArgs};

const CONFIG: &str = r#"
tier = "rwa-slow"

[acquisition]
n_points = 41

[seeds]
data = 12
"#;

fn main() -> ionsense::Result<()> {
    let config = RunConfig::from_toml(CONFIG)?;
    let plan = config.plan()?;
    println!("{} with {} points to {} ms, {} shots", plan.scenario, plan.n_points, plan.t_final, plan.n_shots);
    println!("resolved configuration:\n{}", config.to_toml()?);

    let out = std::env::temp_dir().join("ionsense-run-config");
    let cmd = Command::Simulate(SimulateArgs {
        rabi_khz: 2.2566,
        detuning_khz: 0.0,
        points: None,
        t_final: None,
        dt: None,
        harmonic: true,
    });
    let manifest = execute(&cmd, &config, &out)?;
    println!("wrote {:?} to {}", manifest.outputs, out.display());
    Ok(())
}
