//! Grid posterior over the target Rabi frequency from one averaged record,
//! at increasing shot counts.

use ionsense::acquisition::{linear_grid, parameter_tuples, sample_dataset, simulate_curves, AcquisitionPlan};
use ionsense::bayes::{Counts, LikelihoodModel, Prior};
use ionsense::physics::{FidelityTier, SensorConfig, AVERAGED_CARRIER};
use ionsense::units::{to_two_pi_khz, two_pi_khz};

fn main() -> ionsense::Result<()> {
    let tier = FidelityTier::RwaSlow;
    let cfg = SensorConfig::resonant_with(AVERAGED_CARRIER)?;
    let plan = AcquisitionPlan::averaged();
    let truth = two_pi_khz(3.4429);
    let axis = linear_grid(truth - two_pi_khz(0.05), truth + two_pi_khz(0.05), 101);
    let model = LikelihoodModel::build(&cfg, tier, &plan, vec![axis])?;

    let tuple = parameter_tuples(&[truth], None);
    let curve = simulate_curves(&cfg, tier, &plan, &tuple)?;
    for n_m in [30, 100, 300] {
        let record = sample_dataset(&plan.with_shots(n_m), tier, &tuple, &curve, 1, 4)?;
        let counts = Counts::from_averages(&record.examples[0].input, n_m as u64)?;
        let post = model.posterior(&counts, &Prior::Uniform)?;
        let est = post.marginal_estimates()[0];
        println!(
            "N_m = {n_m:>3}: mean {:.5} kHz, SD {:.5} kHz, mode {:.5} kHz",
            to_two_pi_khz(est.mean),
            to_two_pi_khz(est.sd),
            to_two_pi_khz(est.mode)
        );
    }
    Ok(())
}
