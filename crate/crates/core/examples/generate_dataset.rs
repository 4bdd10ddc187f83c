//! Builds small averaged and single-shot corpora and writes the averaged
//! one to disk in the CLI's dataset format.

use ionsense::acquisition::{generate_scenario_i, generate_scenario_ii, linear_grid, AcquisitionPlan, Split};
use ionsense::cli::io::{read_dataset, write_dataset};
use ionsense::physics::{FidelityTier, SensorConfig, AVERAGED_CARRIER, SINGLE_SHOT_CARRIER};
use ionsense::units::two_pi_khz;

fn main() -> ionsense::Result<()> {
    let omega = linear_grid(two_pi_khz(0.5), two_pi_khz(10.0), 24);

    let cfg = SensorConfig::resonant_with(AVERAGED_CARRIER)?;
    let averaged = generate_scenario_i(&cfg, FidelityTier::RwaSlow, &AcquisitionPlan::averaged(), &omega, None, 20, 1)?;
    println!(
        "averaged: {} records of {} points, {} / {} / {} split",
        averaged.len(),
        averaged.input_len(),
        averaged.count(Split::Train),
        averaged.count(Split::Validation),
        averaged.count(Split::Test)
    );
    let first = &averaged.examples[0];
    println!("first record, target {:.4} rad/ms: {:?}", first.target[0], &first.input[..8]);

    let cfg = SensorConfig::resonant_with(SINGLE_SHOT_CARRIER)?;
    let plan = AcquisitionPlan::single_shot();
    let bits = generate_scenario_ii(&cfg, FidelityTier::RwaSlow, &plan, &omega[..4], 5, 2)?;
    let ones = bits.examples[0].input.iter().filter(|&&b| b == 1.0).count();
    println!("single-shot: {} strings of {} bits, first has {ones} ones", bits.len(), bits.input_len());

    let dir = std::env::temp_dir().join("ionsense-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("dataset.jsonl");
    write_dataset(&path, &averaged)?;
    assert_eq!(read_dataset(&path)?, averaged);
    println!("wrote and re-read {}", path.display());
    Ok(())
}
