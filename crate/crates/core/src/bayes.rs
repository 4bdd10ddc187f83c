//! Grid Bayesian estimation of the target-field parameters from shot
//! counts, using a binomial likelihood per sampling instant.
//!
//! Node weights are probability masses: the prior density at each node
//! times its trapezoidal cell width (the product of widths on a 2-D grid).
//! The posterior is normalised in log space after shifting by the largest
//! log-likelihood.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::acquisition::{parameter_tuples, simulate_curves, AcquisitionPlan};
use crate::physics::{FidelityTier, SensorConfig};
use crate::{Error, Result};

/// `ln C(n, x)` as a sum of `min(x, n − x)` logarithms.
fn ln_choose(n: u64, x: u64) -> f64 {
    let k = x.min(n - x);
    (1..=k).map(|i| (((n - k + i) as f64) / i as f64).ln()).sum()
}

/// `ln[C(n, x) pˣ (1 − p)ⁿ⁻ˣ]`, `−∞` for impossible outcomes.
pub fn ln_binomial_pmf(x: u64, n: u64, p: f64) -> Result<f64> {
    if x > n {
        return Err(Error::invalid(format!("{x} successes out of {n} trials")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("probability {p} outside [0, 1]")));
    }
    Ok(ln_pmf_with(ln_choose(n, x), x, n, p))
}

fn ln_pmf_with(ln_c: f64, x: u64, n: u64, p: f64) -> f64 {
    if p == 0.0 {
        return if x == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if p == 1.0 {
        return if x == n { 0.0 } else { f64::NEG_INFINITY };
    }
    ln_c + x as f64 * p.ln() + (n - x) as f64 * (-p).ln_1p()
}

/// `C(n, x) pˣ (1 − p)ⁿ⁻ˣ`, evaluated in log space.
pub fn binomial_pmf(x: u64, n: u64, p: f64) -> Result<f64> {
    Ok(ln_binomial_pmf(x, n, p)?.exp())
}

/// Shot counts at each sampling instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counts {
    pub successes: Vec<u64>,
    pub n_shots: u64,
}

impl Counts {
    pub fn new(successes: Vec<u64>, n_shots: u64) -> Result<Self> {
        if n_shots == 0 {
            return Err(Error::invalid("n_shots must be >= 1"));
        }
        if let Some(&k) = successes.iter().find(|&&k| k > n_shots) {
            return Err(Error::invalid(format!("{k} successes out of {n_shots} shots")));
        }
        Ok(Self { successes, n_shots })
    }

    /// Counts from averaged populations `X_i`; each `X_i·N_m` must be an
    /// integer to within 1e-9.
    pub fn from_averages(averages: &[f64], n_shots: u64) -> Result<Self> {
        let successes = averages
            .iter()
            .map(|&x| {
                let k = x * n_shots as f64;
                let r = k.round();
                if !((k - r).abs() <= 1e-9 && r >= 0.0) {
                    return Err(Error::invalid(format!("average {x} is not a multiple of 1/{n_shots}")));
                }
                Ok(r as u64)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(successes, n_shots)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Prior {
    Uniform,
    /// Product of per-axis Gaussians truncated to the grid.
    TruncatedGaussian { mean: Vec<f64>, sd: Vec<f64> },
    /// Non-negative density at every node, row-major.
    Density(Vec<f64>),
}

/// Trapezoidal integration weights of a strictly increasing axis; a single
/// node gets weight 1.
pub fn trapezoid_weights(axis: &[f64]) -> Vec<f64> {
    let n = axis.len();
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| {
            let left = if i > 0 { axis[i] - axis[i - 1] } else { 0.0 };
            let right = if i + 1 < n { axis[i + 1] - axis[i] } else { 0.0 };
            0.5 * (left + right)
        })
        .collect()
}

fn check_axes(axes: &[Vec<f64>]) -> Result<()> {
    if axes.is_empty() || axes.len() > 2 {
        return Err(Error::invalid(format!("expected 1 or 2 parameter axes, got {}", axes.len())));
    }
    for a in axes {
        if a.is_empty() {
            return Err(Error::Empty("parameter axis"));
        }
        if !a.iter().all(|v| v.is_finite()) || a.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("parameter axes must be finite and strictly increasing"));
        }
    }
    Ok(())
}

/// Node coordinates in row-major order, first axis major.
fn nodes(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    parameter_tuples(&axes[0], axes.get(1).map(Vec::as_slice))
}

/// Prior masses per node, not yet normalised.
pub fn prior_masses(axes: &[Vec<f64>], prior: &Prior) -> Result<Vec<f64>> {
    check_axes(axes)?;
    let weights: Vec<Vec<f64>> = axes.iter().map(|a| trapezoid_weights(a)).collect();
    let cell = parameter_tuples(&weights[0], weights.get(1).map(Vec::as_slice))
        .into_iter()
        .map(|w| w.iter().product::<f64>());
    let coords = nodes(axes);
    let density: Vec<f64> = match prior {
        Prior::Uniform => vec![1.0; coords.len()],
        Prior::TruncatedGaussian { mean, sd } => {
            if mean.len() != axes.len() || sd.len() != axes.len() {
                return Err(Error::DimensionMismatch { expected: axes.len(), got: mean.len().min(sd.len()) });
            }
            if sd.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
                return Err(Error::invalid("prior standard deviations must be > 0"));
            }
            coords
                .iter()
                .map(|c| {
                    let q: f64 = c.iter().zip(mean).zip(sd).map(|((v, m), s)| ((v - m) / s).powi(2)).sum();
                    (-0.5 * q).exp()
                })
                .collect()
        }
        Prior::Density(d) => {
            if d.len() != coords.len() {
                return Err(Error::DimensionMismatch { expected: coords.len(), got: d.len() });
            }
            if d.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
                return Err(Error::invalid("prior density must be finite and non-negative"));
            }
            d.clone()
        }
    };
    let masses: Vec<f64> = density.iter().zip(cell).map(|(d, w)| d * w).collect();
    if masses.iter().all(|&m| m == 0.0) {
        return Err(Error::invalid("prior has no mass on the grid"));
    }
    Ok(masses)
}

/// Survival curves cached at every grid node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodModel {
    pub axes: Vec<Vec<f64>>,
    pub tier: FidelityTier,
    pub times: Vec<f64>,
    /// One curve per node, row-major.
    pub curves: Vec<Vec<f64>>,
}

/// Default Rabi-frequency node count over `[0.5, 10]` kHz.
pub const DEFAULT_RABI_NODES: usize = 191;
/// Default detuning node count over `[−0.6, 0.6]` kHz.
pub const DEFAULT_DETUNING_NODES: usize = 51;

impl LikelihoodModel {
    /// Integrates the survival curve at every node of `axes`: `[Ω_tg]` or
    /// `[Ω_tg, ξ]`, in rad/ms.
    pub fn build(cfg: &SensorConfig, tier: FidelityTier, plan: &AcquisitionPlan, axes: Vec<Vec<f64>>) -> Result<Self> {
        check_axes(&axes)?;
        let curves = simulate_curves(cfg, tier, plan, &nodes(&axes))?;
        Ok(Self { axes, tier, times: plan.times(), curves })
    }

    /// Wraps precomputed curves, e.g. from an analytic model.
    pub fn from_curves(axes: Vec<Vec<f64>>, times: Vec<f64>, curves: Vec<Vec<f64>>, tier: FidelityTier) -> Result<Self> {
        check_axes(&axes)?;
        let n: usize = axes.iter().map(Vec::len).product();
        if curves.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: curves.len() });
        }
        if let Some(c) = curves.iter().find(|c| c.len() != times.len()) {
            return Err(Error::DimensionMismatch { expected: times.len(), got: c.len() });
        }
        Ok(Self { axes, tier, times, curves })
    }

    pub fn node_count(&self) -> usize {
        self.curves.len()
    }

    /// Log-likelihood at every node. Instants are summed in order, nodes in
    /// parallel.
    pub fn log_likelihood(&self, counts: &Counts) -> Result<Vec<f64>> {
        if counts.successes.len() != self.times.len() {
            return Err(Error::DimensionMismatch { expected: self.times.len(), got: counts.successes.len() });
        }
        let n = counts.n_shots;
        let ln_c: Vec<f64> = (0..=n).map(|k| ln_choose(n, k)).collect();
        self.curves
            .par_iter()
            .map(|curve| {
                let mut ll = 0.0;
                for (&k, &p) in counts.successes.iter().zip(curve) {
                    if !(p >= -1e-9 && p <= 1.0 + 1e-9) {
                        return Err(Error::invalid(format!("model probability {p} outside [0, 1]")));
                    }
                    ll += ln_pmf_with(ln_c[k as usize], k, n, p.clamp(0.0, 1.0));
                }
                Ok(ll)
            })
            .collect()
    }

    pub fn posterior(&self, counts: &Counts, prior: &Prior) -> Result<PosteriorGrid> {
        let prior = prior_masses(&self.axes, prior)?;
        let log_likelihood = self.log_likelihood(counts)?;
        PosteriorGrid::from_parts(self.axes.clone(), prior, log_likelihood)
    }
}

/// Prior, likelihood and normalised posterior masses on a parameter grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorGrid {
    pub axes: Vec<Vec<f64>>,
    /// Normalised prior masses, row-major.
    pub prior: Vec<f64>,
    pub log_likelihood: Vec<f64>,
    pub posterior: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginalEstimate {
    pub mean: f64,
    pub sd: f64,
    /// Node with the largest marginal mass.
    pub mode: f64,
    /// The axis has one node, so the SD is zero by construction.
    pub single_node: bool,
}

impl PosteriorGrid {
    /// Bayes rule on node masses with max-shift normalisation.
    pub fn from_parts(axes: Vec<Vec<f64>>, prior: Vec<f64>, log_likelihood: Vec<f64>) -> Result<Self> {
        check_axes(&axes)?;
        let n: usize = axes.iter().map(Vec::len).product();
        if prior.len() != n || log_likelihood.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: prior.len().min(log_likelihood.len()) });
        }
        let prior_total: f64 = prior.iter().sum();
        if !(prior_total > 0.0 && prior_total.is_finite()) {
            return Err(Error::invalid("prior has no mass on the grid"));
        }
        let prior: Vec<f64> = prior.iter().map(|m| m / prior_total).collect();
        let max_ll = prior
            .iter()
            .zip(&log_likelihood)
            .filter(|(&m, _)| m > 0.0)
            .map(|(_, &l)| l)
            .fold(f64::NEG_INFINITY, f64::max);
        if !max_ll.is_finite() {
            return Err(Error::PosteriorUnderflow { max_log_likelihood: max_ll });
        }
        let weights: Vec<f64> = prior.iter().zip(&log_likelihood).map(|(m, l)| m * (l - max_ll).exp()).collect();
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::PosteriorUnderflow { max_log_likelihood: max_ll });
        }
        let posterior = weights.iter().map(|w| w / total).collect();
        Ok(Self { axes, prior, log_likelihood, posterior })
    }

    pub fn dims(&self) -> usize {
        self.axes.len()
    }

    /// Posterior mass summed over every axis but `d`.
    pub fn marginal(&self, d: usize) -> Vec<f64> {
        let inner = self.axes.get(1).map_or(1, Vec::len);
        let mut out = vec![0.0; self.axes[d].len()];
        for (idx, &p) in self.posterior.iter().enumerate() {
            let k = if d == 0 { idx / inner } else { idx % inner };
            out[k] += p;
        }
        out
    }

    /// Coordinates of the node with the largest joint posterior mass.
    pub fn mode(&self) -> Vec<f64> {
        let best = self
            .posterior
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |b, (i, &p)| if p > b.1 { (i, p) } else { b });
        nodes(&self.axes).swap_remove(best.0)
    }

    pub fn marginal_estimates(&self) -> Vec<MarginalEstimate> {
        (0..self.dims())
            .map(|d| {
                let axis = &self.axes[d];
                let m = self.marginal(d);
                let mean: f64 = axis.iter().zip(&m).map(|(v, p)| v * p).sum();
                let var: f64 = axis.iter().zip(&m).map(|(v, p)| (v - mean).powi(2) * p).sum();
                let mode = axis[m.iter().enumerate().fold(0, |b, (i, &p)| if p > m[b] { i } else { b })];
                MarginalEstimate { mean, sd: var.max(0.0).sqrt(), mode, single_node: axis.len() == 1 }
            })
            .collect()
    }

    /// CSV table: one column per axis, then prior, log-likelihood and
    /// posterior.
    pub fn write_table<W: Write>(&self, mut w: W, axis_names: &[&str]) -> Result<()> {
        if axis_names.len() != self.dims() {
            return Err(Error::DimensionMismatch { expected: self.dims(), got: axis_names.len() });
        }
        writeln!(w, "{},prior,log_likelihood,posterior", axis_names.join(","))?;
        for (i, node) in nodes(&self.axes).into_iter().enumerate() {
            let coords: Vec<String> = node.iter().map(|v| v.to_string()).collect();
            writeln!(
                w,
                "{},{},{},{}",
                coords.join(","),
                self.prior[i],
                self.log_likelihood[i],
                self.posterior[i]
            )?;
        }
        Ok(())
    }
}

/// Free-function form of [`PosteriorGrid::marginal_estimates`].
pub fn marginal_estimates(grid: &PosteriorGrid) -> Vec<MarginalEstimate> {
    grid.marginal_estimates()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acquisition::{count_shots, linear_grid};
    use crate::units::two_pi_khz;
    use num::{BigInt, BigRational, ToPrimitive};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn exact_pmf(x: u64, n: u64, p_num: i64, p_den: i64) -> f64 {
        let mut c = BigInt::from(1);
        for i in 0..x {
            c = c * BigInt::from(n - i) / BigInt::from(i + 1);
        }
        let p = BigRational::new(p_num.into(), p_den.into());
        let q = BigRational::from_integer(1.into()) - &p;
        let mut v = BigRational::from_integer(c);
        for _ in 0..x {
            v *= &p;
        }
        for _ in 0..(n - x) {
            v *= &q;
        }
        v.to_f64().unwrap()
    }

    #[test]
    fn closed_form_values() {
        assert!((binomial_pmf(0, 10, 0.3).unwrap() - 0.0282475249).abs() < 1e-12);
        assert!((binomial_pmf(1, 2, 0.5).unwrap() - 0.5).abs() < 1e-15);
        assert!((binomial_pmf(50, 100, 0.5).unwrap() - 0.0795892373871787).abs() < 1e-12);
        assert_eq!(binomial_pmf(0, 7, 0.0).unwrap(), 1.0);
        assert_eq!(binomial_pmf(3, 7, 0.0).unwrap(), 0.0);
        assert_eq!(binomial_pmf(7, 7, 1.0).unwrap(), 1.0);
        assert_eq!(binomial_pmf(6, 7, 1.0).unwrap(), 0.0);
        assert!(binomial_pmf(8, 7, 0.5).is_err());
        assert!(binomial_pmf(1, 7, 1.5).is_err());
    }

    #[test]
    fn matches_exact_rationals() {
        for n in [1u64, 2, 5, 17, 30, 64, 100] {
            for (pn, pd) in [(1, 2), (3, 10), (1, 7), (99, 100), (1, 1000)] {
                for x in 0..=n {
                    let got = binomial_pmf(x, n, pn as f64 / pd as f64).unwrap();
                    let want = exact_pmf(x, n, pn, pd);
                    assert!((got - want).abs() < 1e-12, "n={n} x={x} p={pn}/{pd}: {got} vs {want}");
                }
            }
        }
    }

    proptest! {
        #[test]
        fn pmf_sums_to_one(n in 1u64..200, p in 0.0f64..=1.0) {
            let s: f64 = (0..=n).map(|x| binomial_pmf(x, n, p).unwrap()).sum();
            prop_assert!((s - 1.0).abs() < 1e-10);
        }
    }

    fn harmonic_survival(rabi: f64, t: f64) -> f64 {
        (rabi * t / (2.0 * std::f64::consts::SQRT_2)).cos().powi(2)
    }

    fn harmonic_model(axis: Vec<f64>, times: &[f64]) -> LikelihoodModel {
        let curves = axis.iter().map(|&w| times.iter().map(|&t| harmonic_survival(w, t)).collect()).collect();
        LikelihoodModel::from_curves(vec![axis], times.to_vec(), curves, FidelityTier::Harmonic).unwrap()
    }

    fn synthetic_counts(rabi: f64, times: &[f64], n: usize, seed: u64) -> Counts {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = times.iter().map(|&t| count_shots(harmonic_survival(rabi, t), n, &mut rng).unwrap() as u64).collect();
        Counts::new(k, n as u64).unwrap()
    }

    #[test]
    fn two_node_ratio_is_the_likelihood_ratio() {
        let m = LikelihoodModel::from_curves(
            vec![vec![1.0, 2.0]],
            vec![0.0],
            vec![vec![0.8], vec![0.3]],
            FidelityTier::Harmonic,
        )
        .unwrap();
        let c = Counts::new(vec![7], 10).unwrap();
        let g = m.posterior(&c, &Prior::Uniform).unwrap();
        let ratio = binomial_pmf(7, 10, 0.8).unwrap() / binomial_pmf(7, 10, 0.3).unwrap();
        assert!((g.posterior[0] / g.posterior[1] / ratio - 1.0).abs() < 1e-12);
        assert!((g.posterior.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn flat_likelihood_returns_the_prior() {
        let axis = linear_grid(0.0, 3.0, 7);
        let prior = Prior::TruncatedGaussian { mean: vec![1.2], sd: vec![0.7] };
        let masses = prior_masses(&[axis.clone()], &prior).unwrap();
        let g = PosteriorGrid::from_parts(vec![axis], masses, vec![-12.5; 7]).unwrap();
        for (a, b) in g.prior.iter().zip(&g.posterior) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn marginal_oracles() {
        let axis = vec![1.0, 2.0, 4.0];
        let delta = PosteriorGrid { axes: vec![axis.clone()], prior: vec![1.0 / 3.0; 3], log_likelihood: vec![0.0; 3], posterior: vec![0.0, 1.0, 0.0] };
        let e = delta.marginal_estimates()[0];
        assert_eq!((e.mean, e.sd, e.mode), (2.0, 0.0, 2.0));
        let two = PosteriorGrid { posterior: vec![0.5, 0.0, 0.5], ..delta };
        let e = two.marginal_estimates()[0];
        assert!((e.mean - 2.5).abs() < 1e-15 && (e.sd - 1.5).abs() < 1e-15);
        let single = PosteriorGrid { axes: vec![vec![3.0]], prior: vec![1.0], log_likelihood: vec![0.0], posterior: vec![1.0] };
        let e = single.marginal_estimates()[0];
        assert!(e.single_node && e.sd == 0.0);
    }

    #[test]
    fn gaussian_posterior_moments() {
        let axis = linear_grid(-10.0, 10.0, 2001);
        let (mu, sigma) = (0.7, 1.3);
        let ll: Vec<f64> = axis.iter().map(|x| -0.5 * ((x - mu) / sigma).powi(2)).collect();
        let prior = prior_masses(&[axis.clone()], &Prior::Uniform).unwrap();
        let g = PosteriorGrid::from_parts(vec![axis], prior, ll).unwrap();
        let e = g.marginal_estimates()[0];
        assert!((e.mean / mu - 1.0).abs() < 1e-3);
        assert!((e.sd / sigma - 1.0).abs() < 1e-3);
    }

    #[test]
    fn mode_recovers_the_generating_frequency() {
        let times = linear_grid(0.0, 2.828, 151);
        let axis = linear_grid(two_pi_khz(0.5), two_pi_khz(10.0), DEFAULT_RABI_NODES);
        let step = axis[1] - axis[0];
        let m = harmonic_model(axis, &times);
        let truth = two_pi_khz(4.0);
        let g = m.posterior(&synthetic_counts(truth, &times, 100, 3), &Prior::Uniform).unwrap();
        assert!((g.mode()[0] - truth).abs() <= step);
        assert!((g.posterior.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn posterior_narrows_with_more_shots() {
        let times = linear_grid(0.0, 2.828, 151);
        let truth = two_pi_khz(3.3);
        let axis = linear_grid(truth - two_pi_khz(0.05), truth + two_pi_khz(0.05), 201);
        let m = harmonic_model(axis, &times);
        let sds: Vec<f64> = [100, 1000, 10_000]
            .iter()
            .map(|&n| m.posterior(&synthetic_counts(truth, &times, n, 8), &Prior::Uniform).unwrap().marginal_estimates()[0].sd)
            .collect();
        assert!(sds[0] > sds[1] && sds[1] > sds[2], "{sds:?}");
    }

    #[test]
    fn instant_order_does_not_matter() {
        let times = linear_grid(0.0, 2.828, 151);
        let axis = linear_grid(two_pi_khz(1.0), two_pi_khz(5.0), 41);
        let m = harmonic_model(axis.clone(), &times);
        let c = synthetic_counts(two_pi_khz(2.0), &times, 100, 4);
        let mut order: Vec<usize> = (0..times.len()).collect();
        order.reverse();
        order.rotate_left(37);
        let permuted_curves = m.curves.iter().map(|c| order.iter().map(|&i| c[i]).collect()).collect();
        let pm = LikelihoodModel::from_curves(vec![axis], order.iter().map(|&i| times[i]).collect(), permuted_curves, m.tier).unwrap();
        let pc = Counts::new(order.iter().map(|&i| c.successes[i]).collect(), c.n_shots).unwrap();
        for (a, b) in m.log_likelihood(&c).unwrap().iter().zip(pm.log_likelihood(&pc).unwrap()) {
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn prior_scale_does_not_change_the_posterior() {
        let axis = linear_grid(0.0, 1.0, 5);
        let ll = vec![-3.0, -1.0, -0.5, -2.0, -9.0];
        let d = vec![0.1, 0.5, 0.2, 0.9, 0.3];
        let a = PosteriorGrid::from_parts(vec![axis.clone()], prior_masses(&[axis.clone()], &Prior::Density(d.clone())).unwrap(), ll.clone()).unwrap();
        let scaled: Vec<f64> = d.iter().map(|v| v * 1e7).collect();
        let b = PosteriorGrid::from_parts(vec![axis.clone()], prior_masses(&[axis], &Prior::Density(scaled)).unwrap(), ll).unwrap();
        for (x, y) in a.posterior.iter().zip(&b.posterior) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn impossible_data_underflows() {
        let m = LikelihoodModel::from_curves(vec![vec![1.0, 2.0]], vec![0.0], vec![vec![1.0], vec![1.0]], FidelityTier::Harmonic).unwrap();
        let c = Counts::new(vec![3], 10).unwrap();
        assert!(matches!(m.posterior(&c, &Prior::Uniform), Err(Error::PosteriorUnderflow { .. })));
    }

    #[test]
    fn two_dimensional_marginals_and_table() {
        let axes = vec![vec![1.0, 2.0, 3.0], vec![-1.0, 1.0]];
        let ll = vec![0.0, -50.0, -50.0, -50.0, -50.0, -50.0];
        let g = PosteriorGrid::from_parts(axes.clone(), prior_masses(&axes, &Prior::Uniform).unwrap(), ll).unwrap();
        assert_eq!(g.mode(), vec![1.0, -1.0]);
        assert!((g.marginal(0).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(g.marginal(1).len(), 2);
        let mut buf = Vec::new();
        g.write_table(&mut buf, &["rabi", "detuning"]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 7);
        assert!(text.starts_with("rabi,detuning,prior,log_likelihood,posterior\n1,-1,"));
    }

    #[test]
    fn counts_from_averages() {
        assert_eq!(Counts::from_averages(&[0.0, 0.3, 1.0], 10).unwrap().successes, vec![0, 3, 10]);
        assert!(Counts::from_averages(&[0.35], 10).is_err());
        assert!(Counts::new(vec![11], 10).is_err());
        assert!(check_axes(&[vec![1.0, 1.0]]).is_err());
    }
}
