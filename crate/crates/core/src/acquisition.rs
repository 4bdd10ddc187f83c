//! Shot-noise sampling of survival curves and labelled datasets.
//!
//! Every parameter tuple is integrated once; its repetitions only redraw
//! the Bernoulli shots. Tuple `k` draws from ChaCha8 stream `k` of the
//! dataset seed, so the result does not depend on how tuples are scheduled
//! across threads.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::physics::{self, uniform_grid, FidelityTier, SensorConfig, TargetField, LANES};
use crate::{Error, Result};

/// Stream used for the train/validation/test shuffle.
const SPLIT_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scenario {
    /// `N_m` shots averaged at each of `N_p` instants.
    #[serde(rename = "averaged-i")]
    AveragedI,
    /// One shot per instant; the record is a bit string.
    #[serde(rename = "single-shot-ii")]
    SingleShotII,
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scenario::AveragedI => "averaged-i",
            Scenario::SingleShotII => "single-shot-ii",
        })
    }
}

/// Durations of the three stages of a single-shot cycle, in ms. They are
/// recorded with the data and do not enter the ideal dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageTimings {
    pub preparation: f64,
    pub interaction_max: f64,
    pub readout: f64,
}

impl Default for StageTimings {
    fn default() -> Self {
        Self { preparation: 6.097, interaction_max: 6.0, readout: 2.447 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcquisitionPlan {
    pub scenario: Scenario,
    pub n_points: usize,
    pub n_shots: usize,
    pub t_final: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage_timings: Option<StageTimings>,
    /// Integration step in ms; `None` uses the tier default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_step: Option<f64>,
}

impl AcquisitionPlan {
    /// 151 instants over 2.828 ms, 100 shots each.
    pub fn averaged() -> Self {
        Self {
            scenario: Scenario::AveragedI,
            n_points: 151,
            n_shots: 100,
            t_final: 2.828,
            stage_timings: None,
            time_step: None,
        }
    }

    /// 201 instants over 2.828 ms, for joint Rabi frequency and detuning
    /// estimation.
    pub fn two_parameter() -> Self {
        Self { n_points: 201, ..Self::averaged() }
    }

    /// 251 single shots spaced 0.024 ms over [0, 6] ms.
    pub fn single_shot() -> Self {
        Self {
            scenario: Scenario::SingleShotII,
            n_points: 251,
            n_shots: 1,
            t_final: 6.0,
            stage_timings: Some(StageTimings::default()),
            time_step: None,
        }
    }

    pub fn with_shots(self, n_shots: usize) -> Self {
        Self { n_shots, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_points < 2 {
            return Err(Error::invalid(format!("need at least 2 sampling instants, got {}", self.n_points)));
        }
        if self.n_shots == 0 {
            return Err(Error::invalid("n_shots must be >= 1"));
        }
        if self.scenario == Scenario::SingleShotII && self.n_shots != 1 {
            return Err(Error::invalid("single-shot acquisition takes exactly one shot per instant"));
        }
        if !(self.t_final.is_finite() && self.t_final > 0.0) {
            return Err(Error::invalid(format!("t_final must be > 0, got {}", self.t_final)));
        }
        if let Some(dt) = self.time_step {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(Error::invalid(format!("time_step must be > 0, got {dt}")));
            }
        }
        Ok(())
    }

    /// Sampling instants, `[0, t_final]` inclusive.
    pub fn times(&self) -> Vec<f64> {
        uniform_grid(self.t_final, self.n_points)
    }
}

/// Provenance of one example.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExampleMeta {
    pub seed: u64,
    /// Index of the parameter tuple, which is also the RNG stream.
    pub tuple: usize,
    pub repetition: usize,
    pub tier: FidelityTier,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub input: Vec<f64>,
    /// Raw targets in rad/ms: `[Ω_tg]` or `[Ω_tg, ξ]`.
    pub target: Vec<f64>,
    pub meta: ExampleMeta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

/// Affine map of `[min, max]` onto `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RescaleRange {
    pub min: f64,
    pub max: f64,
}

impl RescaleRange {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && min < max) {
            return Err(Error::invalid(format!("rescale range needs min < max, got [{min}, {max}]")));
        }
        Ok(Self { min, max })
    }

    /// Smallest range covering `values`. A single distinct value `v` maps
    /// to `[v − 1, v + 1]`.
    pub fn covering(values: impl IntoIterator<Item = f64>) -> Result<Self> {
        let (lo, hi) = values
            .into_iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::Empty("rescale values"));
        }
        if lo == hi {
            return Self::new(lo - 1.0, hi + 1.0);
        }
        Self::new(lo, hi)
    }

    pub fn contains(&self, v: f64) -> bool {
        (self.min..=self.max).contains(&v)
    }

    pub fn to_unit(&self, v: f64) -> f64 {
        (v - self.min) / (self.max - self.min)
    }

    pub fn from_unit(&self, u: f64) -> f64 {
        self.min + u * (self.max - self.min)
    }
}

/// Inverse of [`RescaleRange::to_unit`].
pub fn inverse_rescale(value: f64, range: &RescaleRange) -> f64 {
    range.from_unit(value)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub scenario: Scenario,
    pub tier: FidelityTier,
    pub n_shots: usize,
    pub examples: Vec<Example>,
    pub rescale: Vec<RescaleRange>,
    pub split: Vec<Split>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn input_len(&self) -> usize {
        self.examples.first().map_or(0, |e| e.input.len())
    }

    pub fn target_len(&self) -> usize {
        self.rescale.len()
    }

    /// Targets of example `i` mapped onto `[0, 1]`.
    pub fn rescaled_target(&self, i: usize) -> Vec<f64> {
        self.examples[i].target.iter().zip(&self.rescale).map(|(&v, r)| r.to_unit(v)).collect()
    }

    pub fn indices(&self, part: Split) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.split[i] == part).collect()
    }

    pub fn count(&self, part: Split) -> usize {
        self.split.iter().filter(|&&s| s == part).count()
    }

    /// Checks lengths, split labels and that every target lies inside its
    /// rescale range.
    pub fn validate(&self) -> Result<()> {
        if self.examples.is_empty() {
            return Err(Error::Empty("dataset"));
        }
        if self.split.len() != self.examples.len() {
            return Err(Error::DimensionMismatch { expected: self.examples.len(), got: self.split.len() });
        }
        let n_in = self.input_len();
        let n_out = self.rescale.len();
        for e in &self.examples {
            if e.input.len() != n_in {
                return Err(Error::DimensionMismatch { expected: n_in, got: e.input.len() });
            }
            if e.target.len() != n_out {
                return Err(Error::DimensionMismatch { expected: n_out, got: e.target.len() });
            }
            for (v, r) in e.target.iter().zip(&self.rescale) {
                if !r.contains(*v) {
                    return Err(Error::invalid(format!("target {v} outside rescale range [{}, {}]", r.min, r.max)));
                }
            }
        }
        Ok(())
    }
}

/// Replaces the rescale ranges of `dataset`. Every target must fall inside
/// its new range.
pub fn rescale(dataset: &Dataset, ranges: &[RescaleRange]) -> Result<Dataset> {
    if ranges.len() != dataset.target_len() {
        return Err(Error::DimensionMismatch { expected: dataset.target_len(), got: ranges.len() });
    }
    for r in ranges {
        RescaleRange::new(r.min, r.max)?;
    }
    let out = Dataset { rescale: ranges.to_vec(), ..dataset.clone() };
    out.validate()?;
    Ok(out)
}

fn check_probability(p: f64) -> Result<f64> {
    if !(p >= -1e-9 && p <= 1.0 + 1e-9) {
        return Err(Error::invalid(format!("probability {p} outside [0, 1]")));
    }
    Ok(p.clamp(0.0, 1.0))
}

/// Number of successes in `n_shots` Bernoulli(`p`) draws.
pub fn count_shots<R: Rng + ?Sized>(p: f64, n_shots: usize, rng: &mut R) -> Result<usize> {
    let p = check_probability(p)?;
    if n_shots == 0 {
        return Err(Error::invalid("n_shots must be >= 1"));
    }
    Ok((0..n_shots).filter(|_| rng.gen::<f64>() < p).count())
}

/// Mean of `n_shots` Bernoulli(`p`) draws.
pub fn sample_shots<R: Rng + ?Sized>(p: f64, n_shots: usize, rng: &mut R) -> Result<f64> {
    Ok(count_shots(p, n_shots, rng)? as f64 / n_shots as f64)
}

/// [`sample_shots`] on a fresh ChaCha8 generator.
pub fn sample_shots_seeded(p: f64, n_shots: usize, seed: u64) -> Result<f64> {
    sample_shots(p, n_shots, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn tuple_rng(seed: u64, tuple: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tuple as u64);
    rng
}

/// Cartesian product of the grids, Rabi frequency major.
pub fn parameter_tuples(omega_grid: &[f64], xi_grid: Option<&[f64]>) -> Vec<Vec<f64>> {
    match xi_grid {
        None => omega_grid.iter().map(|&w| vec![w]).collect(),
        Some(xs) => omega_grid.iter().flat_map(|&w| xs.iter().map(move |&x| vec![w, x])).collect(),
    }
}

fn target_of(cfg: &SensorConfig, tuple: &[f64]) -> Result<TargetField> {
    match *tuple {
        [rabi] => TargetField::resonant(cfg, rabi),
        [rabi, xi] => TargetField::detuned(cfg, rabi, xi),
        _ => Err(Error::DimensionMismatch { expected: 2, got: tuple.len() }),
    }
}

/// Noiseless survival curves for every tuple on the plan's grid.
///
/// Tuples sharing a detuning are integrated together; the work is spread
/// over the rayon pool and reassembled in input order.
pub fn simulate_curves(
    cfg: &SensorConfig,
    tier: FidelityTier,
    plan: &AcquisitionPlan,
    tuples: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>> {
    plan.validate()?;
    let targets = tuples.iter().map(|t| target_of(cfg, t)).collect::<Result<Vec<_>>>()?;
    let mut order: Vec<usize> = (0..targets.len()).collect();
    order.sort_by(|&a, &b| targets[a].detuning().total_cmp(&targets[b].detuning()).then(a.cmp(&b)));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for &i in &order {
        match groups.last_mut() {
            Some(g) if g.len() < LANES && targets[g[0]].detuning() == targets[i].detuning() => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    let times = plan.times();
    let computed = groups
        .par_iter()
        .map(|g| {
            let batch: Vec<TargetField> = g.iter().map(|&i| targets[i]).collect();
            physics::survival_curves(cfg, &batch, tier, &times, plan.time_step)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = vec![Vec::new(); targets.len()];
    for (g, curves) in groups.iter().zip(computed) {
        for (&i, c) in g.iter().zip(curves) {
            out[i] = c;
        }
    }
    Ok(out)
}

/// Draws `reps` shot-noise records per curve and assigns the split.
pub fn sample_dataset(
    plan: &AcquisitionPlan,
    tier: FidelityTier,
    tuples: &[Vec<f64>],
    curves: &[Vec<f64>],
    reps: usize,
    seed: u64,
) -> Result<Dataset> {
    plan.validate()?;
    if tuples.is_empty() {
        return Err(Error::Empty("parameter grid"));
    }
    if reps == 0 {
        return Err(Error::invalid("reps must be >= 1"));
    }
    if curves.len() != tuples.len() {
        return Err(Error::DimensionMismatch { expected: tuples.len(), got: curves.len() });
    }
    let dims = tuples[0].len();
    let rescale = (0..dims)
        .map(|d| RescaleRange::covering(tuples.iter().map(|t| t[d])))
        .collect::<Result<Vec<_>>>()?;
    let examples = tuples
        .par_iter()
        .zip(curves)
        .enumerate()
        .map(|(k, (tuple, curve))| {
            if curve.len() != plan.n_points {
                return Err(Error::DimensionMismatch { expected: plan.n_points, got: curve.len() });
            }
            let mut rng = tuple_rng(seed, k);
            (0..reps)
                .map(|r| {
                    let input = curve
                        .iter()
                        .map(|&p| sample_shots(p, plan.n_shots, &mut rng))
                        .collect::<Result<Vec<_>>>()?;
                    Ok(Example {
                        input,
                        target: tuple.clone(),
                        meta: ExampleMeta { seed, tuple: k, repetition: r, tier },
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect::<Vec<_>>();
    let split = assign_split(examples.len(), seed);
    Ok(Dataset { scenario: plan.scenario, tier, n_shots: plan.n_shots, examples, rescale, split })
}

/// `floor(0.7 N)` train, `floor(0.15 N)` validation, the rest test, placed
/// by a seeded shuffle.
pub fn assign_split(n: usize, seed: u64) -> Vec<Split> {
    let n_train = n * 7 / 10;
    let n_val = n * 15 / 100;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = tuple_rng(seed, 0);
    rng.set_stream(SPLIT_STREAM);
    order.shuffle(&mut rng);
    let mut split = vec![Split::Test; n];
    for (rank, &i) in order.iter().enumerate() {
        split[i] = if rank < n_train {
            Split::Train
        } else if rank < n_train + n_val {
            Split::Validation
        } else {
            Split::Test
        };
    }
    split
}

/// Averaged-response corpus over `omega_grid`, optionally crossed with
/// `xi_grid`.
pub fn generate_scenario_i(
    cfg: &SensorConfig,
    tier: FidelityTier,
    plan: &AcquisitionPlan,
    omega_grid: &[f64],
    xi_grid: Option<&[f64]>,
    reps: usize,
    seed: u64,
) -> Result<Dataset> {
    if plan.scenario != Scenario::AveragedI {
        return Err(Error::invalid("plan is not an averaged acquisition"));
    }
    if omega_grid.is_empty() || xi_grid.is_some_and(|x| x.is_empty()) {
        return Err(Error::Empty("parameter grid"));
    }
    let tuples = parameter_tuples(omega_grid, xi_grid);
    let curves = simulate_curves(cfg, tier, plan, &tuples)?;
    sample_dataset(plan, tier, &tuples, &curves, reps, seed)
}

/// Single-shot bit strings; bit `i` is 1 when the ion is found in `|D⟩`
/// after interacting for `t_i`.
pub fn generate_scenario_ii(
    cfg: &SensorConfig,
    tier: FidelityTier,
    plan: &AcquisitionPlan,
    omega_grid: &[f64],
    reps: usize,
    seed: u64,
) -> Result<Dataset> {
    if plan.scenario != Scenario::SingleShotII {
        return Err(Error::invalid("plan is not a single-shot acquisition"));
    }
    if omega_grid.is_empty() {
        return Err(Error::Empty("parameter grid"));
    }
    let tuples = parameter_tuples(omega_grid, None);
    let curves = simulate_curves(cfg, tier, plan, &tuples)?;
    sample_dataset(plan, tier, &tuples, &curves, reps, seed)
}

/// `n` evenly spaced values over `[lo, hi]`.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| if i == n - 1 { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
            .collect(),
    }
}
