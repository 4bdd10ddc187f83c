use super::*;
use crate::acquisition::{
    assign_split, generate_scenario_i, linear_grid, parameter_tuples, simulate_curves, AcquisitionPlan, Dataset,
    Example, ExampleMeta, RescaleRange, Scenario, Split,
};
use crate::physics::{FidelityTier, SensorConfig};
use crate::units::two_pi_khz;
use ndarray::Array2;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn tiny(n_in: usize, hidden: Vec<usize>, n_out: usize, activation: Activation, seed: u64) -> RegressorModel {
    let rescale = vec![RescaleRange::new(0.0, 1.0).unwrap(); n_out];
    RegressorModel::new(n_in, &Architecture { hidden, activation }, rescale, seed).unwrap()
}

/// Targets `2 + 3·x[2]` on random inputs.
fn linear_dataset(n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let examples: Vec<Example> = (0..n)
        .map(|j| {
            let input: Vec<f64> = (0..5).map(|_| rng.gen()).collect();
            Example {
                target: vec![2.0 + 3.0 * input[2]],
                input,
                meta: ExampleMeta { seed, tuple: j, repetition: 0, tier: FidelityTier::Harmonic },
            }
        })
        .collect();
    let rescale = vec![RescaleRange::covering(examples.iter().map(|e| e.target[0])).unwrap()];
    Dataset {
        scenario: Scenario::AveragedI,
        tier: FidelityTier::Harmonic,
        n_shots: 1,
        split: assign_split(examples.len(), seed),
        examples,
        rescale,
    }
}

#[test]
fn cost_arithmetic() {
    let m = tiny(1, vec![2], 1, Activation::Tanh, 0);
    let mut zero = m.clone();
    zero.set_parameters(&vec![0.0; zero.parameter_count()]).unwrap();
    assert_eq!(cost(&zero, &[vec![0.3]], &[vec![0.0]]).unwrap(), 0.0);
    assert_eq!(cost(&zero, &[vec![0.3]], &[vec![0.5]]).unwrap(), 0.25);
    let m2 = tiny(1, vec![2], 2, Activation::Tanh, 0);
    let mut zero2 = m2.clone();
    zero2.set_parameters(&vec![0.0; m2.parameter_count()]).unwrap();
    assert_eq!(cost(&zero2, &[vec![0.3]], &[vec![0.5, 0.0]]).unwrap(), 0.125);
    assert!(cost(&zero2, &[vec![0.3]], &[vec![0.5]]).is_err());
    assert!(cost(&zero2, &[vec![0.3, 0.1]], &[vec![0.5, 0.0]]).is_err());
    assert!(cost(&zero2, &[], &[]).is_err());
}

fn gradient_agreement(activation: Activation) {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let model = tiny(12, vec![9, 7], 2, activation, 3);
    let x = Array2::from_shape_simple_fn((17, 12), || rng.gen::<f64>());
    let t = Array2::from_shape_simple_fn((17, 2), || rng.gen::<f64>());
    let (_, grad) = model.cost_gradient(x.view(), t.view()).unwrap();
    let base = model.parameters();
    let cost_at = |p: &[f64]| {
        let mut m = model.clone();
        m.set_parameters(p).unwrap();
        m.cost_gradient(x.view(), t.view()).unwrap().0
    };
    for _ in 0..100 {
        let k = rng.gen_range(0..base.len());
        let h = 1e-5;
        let mut p = base.clone();
        p[k] += h;
        let up = cost_at(&p);
        p[k] -= 2.0 * h;
        let down = cost_at(&p);
        let numeric = (up - down) / (2.0 * h);
        let scale = grad[k].abs().max(numeric.abs()).max(1e-6);
        assert!((grad[k] - numeric).abs() / scale < 1e-5, "coordinate {k}: {} vs {numeric}", grad[k]);
    }
}

#[test]
fn analytic_gradient_matches_finite_differences() {
    gradient_agreement(Activation::Tanh);
    gradient_agreement(Activation::Relu);
}

#[test]
fn learns_a_linear_map() {
    let d = linear_dataset(600, 1);
    let hyper = Hyperparameters { epochs: 200, ..Hyperparameters::default() };
    let m = train(&d, &Architecture { hidden: vec![4], activation: Activation::Tanh }, &hyper).unwrap();
    let last = m.report().epochs[m.report().best_epoch];
    assert!(last.test_cost < 1e-4, "{last:?}");
    assert_eq!(m.report().epochs.len(), 201);
    assert_eq!(m.n_outputs(), d.target_len());
}

#[test]
fn training_is_deterministic_and_keeps_best_validation() {
    let d = linear_dataset(300, 2);
    let hyper = Hyperparameters { epochs: 20, seed: 9, ..Hyperparameters::default() };
    let a = train(&d, &Architecture::default(), &hyper).unwrap();
    let b = train(&d, &Architecture::default(), &hyper).unwrap();
    assert_eq!(a.parameters(), b.parameters());
    assert_eq!(a.report(), b.report());
    let r = a.report();
    let best = r.epochs.iter().map(|e| e.validation_cost).fold(f64::INFINITY, f64::min);
    assert_eq!(r.epochs[r.best_epoch].validation_cost, best);
}

#[test]
fn rescaling_is_equivariant() {
    let d = linear_dataset(300, 4);
    let mut shifted = d.clone();
    for e in &mut shifted.examples {
        e.target[0] = 7.5 * e.target[0] - 40.0;
    }
    shifted.rescale = vec![RescaleRange::covering(shifted.examples.iter().map(|e| e.target[0])).unwrap()];
    let hyper = Hyperparameters { epochs: 10, ..Hyperparameters::default() };
    let arch = Architecture { hidden: vec![8], activation: Activation::Tanh };
    let a = train(&d, &arch, &hyper).unwrap();
    let b = train(&shifted, &arch, &hyper).unwrap();
    for e in d.examples.iter().take(50) {
        let ya = a.estimate(&e.input).unwrap().values[0];
        let yb = b.estimate(&e.input).unwrap().values[0];
        assert!((yb - (7.5 * ya - 40.0)).abs() < 1e-9 * yb.abs().max(1.0), "{ya} {yb}");
    }
}

#[test]
fn rejects_bad_inputs() {
    let mut d = linear_dataset(50, 5);
    let hyper = Hyperparameters { epochs: 2, ..Hyperparameters::default() };
    let m = train(&d, &Architecture::default(), &hyper).unwrap();
    assert!(m.estimate(&[0.1, 0.2]).is_err());
    assert!(train(&d, &Architecture::default(), &Hyperparameters { learning_rate: 0.0, ..hyper }).is_err());
    assert!(matches!(
        train(&d, &Architecture::default(), &Hyperparameters { learning_rate: 1e300, ..hyper }),
        Err(crate::Error::NonFinite { .. })
    ));
    d.split.iter_mut().for_each(|s| {
        if *s == Split::Validation {
            *s = Split::Train
        }
    });
    assert!(matches!(train(&d, &Architecture::default(), &hyper), Err(crate::Error::Empty(_))));
}

#[test]
fn extrapolation_is_flagged() {
    let mut m = tiny(3, vec![2], 1, Activation::Tanh, 0);
    let n = m.parameter_count();
    let mut p = vec![0.0; n];
    *p.last_mut().unwrap() = 1.2;
    m.set_parameters(&p).unwrap();
    let e = m.estimate(&[0.0, 0.5, 1.0]).unwrap();
    assert!(e.extrapolated);
    assert!((e.values[0] - 1.2).abs() < 1e-15);
    *p.last_mut().unwrap() = 1.04;
    m.set_parameters(&p).unwrap();
    assert!(!m.estimate(&[0.0, 0.5, 1.0]).unwrap().extrapolated);
}

#[test]
fn persistence_round_trip() {
    let d = linear_dataset(100, 6);
    let m = train(&d, &Architecture::default(), &Hyperparameters { epochs: 3, ..Default::default() }).unwrap();
    let json = m.to_json().unwrap();
    let back = RegressorModel::from_json(&json).unwrap();
    assert_eq!(back, m);
    assert_eq!(back.to_json().unwrap(), json);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    m.save(&path).unwrap();
    assert_eq!(RegressorModel::load(&path).unwrap(), m);

    let mut rec = m.to_record();
    rec.version = 99;
    assert!(matches!(RegressorModel::from_record(rec), Err(crate::Error::Format(_))));
    let mut rec = m.to_record();
    rec.layers[0].weights.pop();
    assert!(RegressorModel::from_record(rec).is_err());
}

#[test]
fn perfect_outputs_give_unit_metrics() {
    let a = [1.0, 2.0, 3.5, 8.0];
    let m = metrics(&a, &a).unwrap();
    assert!((m.correlation_r.unwrap() - 1.0).abs() < 1e-15);
    assert!((m.fit_alpha.unwrap() - 1.0).abs() < 1e-15);
    assert!(m.fit_beta.unwrap().abs() < 1e-15);
    assert_eq!(m.mean_accuracy, Some(1.0));
    assert_eq!(m.accuracy_sd, Some(0.0));
    assert_eq!(m.error_histogram.counts.iter().sum::<usize>(), 4);
}

#[test]
fn degenerate_metrics_are_reported() {
    let m = metrics(&[2.0, 2.0, 2.0], &[1.9, 2.0, 2.2]).unwrap();
    assert_eq!(m.correlation_r, None);
    assert_eq!(m.fit_alpha, None);
    assert!(m.mean_accuracy.is_some());
    let z = metrics(&[0.0, 1.0], &[0.1, 1.0]).unwrap();
    assert_eq!(z.accuracy[0], None);
    assert_eq!(z.mean_accuracy, Some(1.0));
    assert!(metrics(&[], &[]).is_err());
    assert!(metrics(&[1.0], &[1.0, 2.0]).is_err());
}

proptest! {
    #[test]
    fn metric_ranges(pairs in prop::collection::vec((0.1f64..10.0, 0.0f64..12.0), 2..60)) {
        let (a, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let m = metrics(&a, &y).unwrap();
        if let Some(r) = m.correlation_r {
            prop_assert!((-1.0..=1.0).contains(&r));
        }
        prop_assert!(m.accuracy.iter().flatten().all(|&f| f <= 1.0));
        prop_assert_eq!(m.error_histogram.counts.iter().sum::<usize>(), a.len());
        prop_assert_eq!(m.error_histogram.edges.len(), HISTOGRAM_BINS + 1);
    }
}

#[test]
fn sample_sd_uses_n_minus_one() {
    assert!((sample_sd(&[1.0, 2.0, 3.0, 4.0]) - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    assert_eq!(sample_sd(&[3.0]), 0.0);
}

#[test]
fn repeated_identical_strings_have_zero_spread() {
    let d = linear_dataset(60, 7);
    let m = train(&d, &Architecture::default(), &Hyperparameters { epochs: 2, ..Default::default() }).unwrap();
    let s = vec![d.examples[0].input.clone(); 20];
    let r = evaluate_repeated(&m, &s).unwrap();
    assert!(r.sd[0] < 1e-12);
    assert_eq!(r.estimates.len(), 20);
    assert!(evaluate_repeated(&m, &s[..1]).is_err());
}

#[test]
fn estimates_increase_along_the_harmonic_grid() {
    let cfg = SensorConfig::default();
    let plan = AcquisitionPlan { n_points: 61, ..AcquisitionPlan::averaged() };
    let grid = linear_grid(two_pi_khz(0.5), two_pi_khz(3.0), 26);
    let d = generate_scenario_i(&cfg, FidelityTier::Harmonic, &plan, &grid, None, 40, 3).unwrap();
    let m = train(&d, &Architecture::default(), &Hyperparameters { epochs: 150, ..Default::default() }).unwrap();
    let curves = simulate_curves(&cfg, FidelityTier::Harmonic, &plan, &parameter_tuples(&grid, None)).unwrap();
    let est: Vec<f64> = curves.iter().map(|c| m.estimate(c).unwrap().values[0]).collect();
    assert!(est.windows(2).all(|w| w[1] > w[0]), "{est:?}");
}
