//! Trains the regressor on an averaged corpus and estimates fresh
//! responses it has not seen.

use ionsense::acquisition::{
    linear_grid, parameter_tuples, sample_dataset, simulate_curves, AcquisitionPlan, Split,
};
use ionsense::physics::{FidelityTier, SensorConfig, AVERAGED_CARRIER};
use ionsense::regressor::{metrics, metrics_by_dimension, predict_split, train_with, Architecture, Hyperparameters};
use ionsense::units::{to_two_pi_khz, two_pi_khz};

fn main() -> ionsense::Result<()> {
    let tier = FidelityTier::RwaSlow;
    let cfg = SensorConfig::resonant_with(AVERAGED_CARRIER)?;
    let plan = AcquisitionPlan::averaged();
    let tuples = parameter_tuples(&linear_grid(two_pi_khz(0.5), two_pi_khz(10.0), 48), None);
    let curves = simulate_curves(&cfg, tier, &plan, &tuples)?;
    let corpus = sample_dataset(&plan, tier, &tuples, &curves, 60, 3)?;

    let hyper = Hyperparameters { epochs: 120, ..Hyperparameters::default() };
    let model = train_with(&corpus, &Architecture::default(), &hyper, |r| {
        if r.epoch % 20 == 0 {
            println!("epoch {:>3}: train {:.3e} validation {:.3e}", r.epoch, r.train_cost, r.validation_cost);
        }
    })?;
    let (t, o) = predict_split(&model, &corpus, Split::Test)?;
    let m = &metrics_by_dimension(&t, &o)?[0];
    println!("test split: R = {:.5}, alpha = {:.4}", m.correlation_r.unwrap_or(f64::NAN), m.fit_alpha.unwrap_or(f64::NAN));

    let fresh: Vec<Vec<f64>> = [1.7229, 4.5778, 7.9319].iter().map(|&k| vec![two_pi_khz(k)]).collect();
    let fresh_curves = simulate_curves(&cfg, tier, &plan, &fresh)?;
    let responses = sample_dataset(&plan, tier, &fresh, &fresh_curves, 1, 99)?;
    let mut targets = Vec::new();
    let mut outputs = Vec::new();
    for e in &responses.examples {
        let est = model.estimate(&e.input)?;
        println!("target {:.4} kHz -> {:.4} kHz", to_two_pi_khz(e.target[0]), to_two_pi_khz(est.values[0]));
        targets.push(e.target[0]);
        outputs.push(est.values[0]);
    }
    let f = metrics(&targets, &outputs)?.mean_accuracy.unwrap_or(f64::NAN);
    println!("mean accuracy {:.2}%", 100.0 * f);
    Ok(())
}
