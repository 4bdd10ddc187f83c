//! Quantum Fisher information of the final state with respect to the target
//! Rabi frequency, and the precision bound it implies.

use ionsense::physics::{FidelityTier, SensorConfig, TargetField, SINGLE_SHOT_CARRIER};
use ionsense::precision::{qfi, QfiReport, Parameter};
use ionsense::units::{to_two_pi_khz, two_pi_khz};

fn main() -> ionsense::Result<()> {
    let cfg = SensorConfig::resonant_with(SINGLE_SHOT_CARRIER)?;
    let target = TargetField::resonant(&cfg, two_pi_khz(4.2265))?;

    for t in [1.0, 3.0, 6.0] {
        let q = qfi(&cfg, &target, FidelityTier::Harmonic, Parameter::Rabi, t, None, None)?;
        println!("harmonic, t = {t} ms: I = {:.6} ms^2 (t^2/2 = {})", q.value, t * t / 2.0);
    }
    let tier = FidelityTier::RwaSlow;
    let q = qfi(&cfg, &target, tier, Parameter::Rabi, 6.0, None, None)?;
    for n_total in [251, 5020] {
        let r = QfiReport::new(Parameter::Rabi, 6.0, &q, n_total, 1)?;
        println!(
            "{tier}, t = 6 ms, N_T = {n_total}: I = {:.4} ms^2, bound {:.6} kHz",
            r.qfi,
            r.bound.map_or(f64::INFINITY, to_two_pi_khz)
        );
    }
    Ok(())
}
