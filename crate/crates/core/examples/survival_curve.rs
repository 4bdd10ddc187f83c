//! Sensor response at a weak and a strong target field, compared with the
//! closed-form two-level curve.

use ionsense::physics::{
    harmonic_survival, survival_curves, uniform_grid, FidelityTier, SensorConfig, TargetField, AVERAGED_CARRIER,
};
use ionsense::units::two_pi_khz;

fn main() -> ionsense::Result<()> {
    let cfg = SensorConfig::resonant_with(AVERAGED_CARRIER)?;
    let times = uniform_grid(2.828, 151);
    let targets = [TargetField::resonant(&cfg, two_pi_khz(1.1487))?, TargetField::resonant(&cfg, two_pi_khz(8.9493))?];
    let curves = survival_curves(&cfg, &targets, FidelityTier::Full, &times, None)?;

    for (target, curve) in targets.iter().zip(&curves) {
        let worst = times
            .iter()
            .zip(curve)
            .map(|(&t, &p)| (p - harmonic_survival(target, t)).abs())
            .fold(0.0, f64::max);
        println!("Omega = 2pi x {:.4} kHz: max |P_D - harmonic| = {worst:.4}", target.rabi() / two_pi_khz(1.0));
    }
    println!("t_ms,p_weak,p_strong");
    for (i, t) in times.iter().enumerate().step_by(15) {
        println!("{t},{},{}", curves[0][i], curves[1][i]);
    }
    Ok(())
}
