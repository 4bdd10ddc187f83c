//! Adiabatic preparation and readout of the dark state.
//!
//! Two resonant dressing drives act on `|0⟩ ↔ |1⟩` (`Ω₁`) and
//! `|0⟩ ↔ |−1⟩` (`Ω₂`). Their amplitudes follow a pair of tanh ramps whose
//! sum is fixed at `2A_p`, so the instantaneous dark combination
//! `Ω₂|1⟩ − Ω₁|−1⟩` sweeps from `|1⟩` through `|D⟩` to `|−1⟩`. The
//! dynamics is integrated in the bare basis under the rotating-wave
//! approximation, since the dressed frame is itself time dependent here.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::physics::propagate::{norm_sqr, propagate_with, step_count, zero_matrix, Ket, Mat4};
use crate::physics::{bare, Basis, QuantumState, SensorConfig, NORM_DRIFT_LIMIT};
use crate::units::two_pi_khz;
use crate::{Error, Result};

/// Tanh pulse family. All times in ms, `amplitude` in rad/ms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StirapShape {
    pub amplitude: f64,
    pub b1: f64,
    pub b2: f64,
    pub c: f64,
    pub total_duration: f64,
}

impl Default for StirapShape {
    fn default() -> Self {
        let amplitude = two_pi_khz(5.5);
        Self { amplitude, b1: 1.0, b2: 9.0, c: 3.0 * std::f64::consts::PI / amplitude, total_duration: 10.0 }
    }
}

impl StirapShape {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.amplitude, self.b1, self.b2, self.c, self.total_duration]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("pulse parameters must be finite"));
        }
        if !(self.amplitude >= 0.0) {
            return Err(Error::invalid(format!("pulse amplitude must be >= 0, got {}", self.amplitude)));
        }
        if !(self.c > 0.0) {
            return Err(Error::invalid(format!("ramp width c must be > 0, got {}", self.c)));
        }
        if !(self.b1 < self.b2 && self.b2 < self.total_duration) {
            return Err(Error::invalid(format!(
                "need b1 < b2 < total_duration, got {} / {} / {}",
                self.b1, self.b2, self.total_duration
            )));
        }
        Ok(())
    }

    /// End of the preparation ramp, `2·b1`. `Ω₁ = Ω₂` from here until the
    /// mirrored point `total_duration − 2·b1`.
    pub fn ramp_end(&self) -> f64 {
        2.0 * self.b1
    }

    /// Same family on a time axis dilated by `factor`.
    pub fn stretched(&self, factor: f64) -> Self {
        Self {
            b1: self.b1 * factor,
            b2: self.b2 * factor,
            c: self.c * factor,
            total_duration: self.total_duration * factor,
            ..*self
        }
    }

    // Ω₁ without range checks
    fn first(&self, t: f64) -> f64 {
        let half = 0.5 * self.amplitude;
        half * (((t - self.b1) / self.c).tanh() + 1.0) + half * (((t - self.b2) / self.c).tanh() + 1.0)
    }

    fn pair_unchecked(&self, t: f64) -> (f64, f64) {
        let o1 = self.first(t);
        (o1, 2.0 * self.amplitude - o1)
    }
}

/// `(Ω₁(t), Ω₂(t))` for `0 ≤ t ≤ total_duration`.
pub fn pulse_pair(shape: &StirapShape, t: f64) -> Result<(f64, f64)> {
    shape.validate()?;
    if !(0.0..=shape.total_duration).contains(&t) {
        return Err(Error::invalid(format!("t = {t} outside [0, {}]", shape.total_duration)));
    }
    Ok(shape.pair_unchecked(t))
}

/// Populations along a pulse sequence, sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StirapTrajectory {
    pub times: Vec<f64>,
    pub plus_one: Vec<f64>,
    pub minus_one: Vec<f64>,
    pub zero_prime: Vec<f64>,
    pub zero: Vec<f64>,
    pub dark: Vec<f64>,
    #[serde(skip)]
    final_state: Option<QuantumState>,
}

impl StirapTrajectory {
    fn with_capacity(n: usize) -> Self {
        Self {
            times: Vec::with_capacity(n),
            plus_one: Vec::with_capacity(n),
            minus_one: Vec::with_capacity(n),
            zero_prime: Vec::with_capacity(n),
            zero: Vec::with_capacity(n),
            dark: Vec::with_capacity(n),
            final_state: None,
        }
    }

    fn push(&mut self, t: f64, psi: &Ket) {
        let s = QuantumState::from_raw(Basis::Lab, *psi);
        let p = s.populations();
        self.times.push(t);
        self.plus_one.push(p[bare::PLUS_ONE]);
        self.minus_one.push(p[bare::MINUS_ONE]);
        self.zero_prime.push(p[bare::ZERO_PRIME]);
        self.zero.push(p[bare::ZERO]);
        self.dark.push(s.dark_population());
        self.final_state = Some(s);
    }

    /// Lab-basis state at the last grid time.
    pub fn final_state(&self) -> &QuantumState {
        self.final_state.as_ref().expect("trajectories hold at least one sample")
    }

    /// Index of the grid point closest to `t`.
    pub fn nearest(&self, t: f64) -> usize {
        let mut best = 0;
        for (i, &ti) in self.times.iter().enumerate() {
            if (ti - t).abs() < (self.times[best] - t).abs() {
                best = i;
            }
        }
        best
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Grid spacing and integration step for a pulse simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sampling {
    pub sample_every: f64,
    pub dt: f64,
}

impl Default for Sampling {
    fn default() -> Self {
        Self { sample_every: 0.01, dt: 1e-4 }
    }
}

fn rwa_hamiltonian(o1: f64, o2: f64) -> Mat4 {
    let mut h = zero_matrix();
    let a = C64::new(0.5 * o1, 0.0);
    let b = C64::new(0.5 * o2, 0.0);
    h[bare::PLUS_ONE][bare::ZERO] = a;
    h[bare::ZERO][bare::PLUS_ONE] = a;
    h[bare::MINUS_ONE][bare::ZERO] = b;
    h[bare::ZERO][bare::MINUS_ONE] = b;
    h
}

fn run<F>(pulses: F, span: f64, initial: &QuantumState, sampling: Sampling, amplitude: f64) -> Result<StirapTrajectory>
where
    F: Fn(f64) -> (f64, f64),
{
    if !(sampling.sample_every > 0.0 && sampling.dt > 0.0) {
        return Err(Error::invalid("sampling interval and step must be > 0"));
    }
    // fastest frequency is the bright-state splitting, at most 2A_p/2 per drive
    let required = 1.0 / (50.0 * (2.0 * amplitude / (2.0 * std::f64::consts::PI)).max(1e-300));
    if sampling.dt > required {
        return Err(Error::StepTooLarge { dt: sampling.dt, required });
    }
    let n = (span / sampling.sample_every).round() as usize;
    let mut psi = *initial.to_lab().amplitudes();
    let mut out = StirapTrajectory::with_capacity(n + 1);
    out.push(0.0, &psi);
    let mut t = 0.0;
    for k in 1..=n {
        let next = if k == n { span } else { k as f64 * span / n as f64 };
        propagate_with(
            |s| {
                let (o1, o2) = pulses(s);
                rwa_hamiltonian(o1, o2)
            },
            &mut psi,
            t,
            next,
            step_count(t, next, sampling.dt),
        );
        let norm = norm_sqr(&psi).sqrt();
        let drift = (norm - 1.0).abs();
        if !(drift <= NORM_DRIFT_LIMIT) {
            return Err(Error::NormDrift { drift });
        }
        psi.iter_mut().for_each(|z| *z /= norm);
        t = next;
        out.push(t, &psi);
    }
    Ok(out)
}

/// Runs the full pulse sequence `[0, total_duration]` from `initial`.
///
/// The sensor configuration only needs to be valid: the dressing drives are
/// resonant in the rotating frame, so level energies drop out.
pub fn simulate_preparation(cfg: &SensorConfig, shape: &StirapShape, initial: &QuantumState) -> Result<StirapTrajectory> {
    simulate_preparation_with(cfg, shape, initial, Sampling::default())
}

pub fn simulate_preparation_with(
    cfg: &SensorConfig,
    shape: &StirapShape,
    initial: &QuantumState,
    sampling: Sampling,
) -> Result<StirapTrajectory> {
    cfg.validate()?;
    shape.validate()?;
    run(|t| shape.pair_unchecked(t), shape.total_duration, initial, sampling, shape.amplitude)
}

/// Mirrored preparation ramp, `Ω(s) = pulse(ramp_end − s)` for
/// `s ∈ [0, ramp_end]`: maps `|D⟩` back onto `|1⟩`.
pub fn readout(cfg: &SensorConfig, shape: &StirapShape, prepared: &QuantumState) -> Result<StirapTrajectory> {
    readout_with(cfg, shape, prepared, Sampling::default())
}

pub fn readout_with(
    cfg: &SensorConfig,
    shape: &StirapShape,
    prepared: &QuantumState,
    sampling: Sampling,
) -> Result<StirapTrajectory> {
    cfg.validate()?;
    shape.validate()?;
    let end = shape.ramp_end();
    run(|s| shape.pair_unchecked(end - s), end, prepared, sampling, shape.amplitude)
}

/// `P_D` at the end of the preparation ramp, starting from `|1⟩`.
pub fn prepared_dark_population(cfg: &SensorConfig, shape: &StirapShape, sampling: Sampling) -> Result<f64> {
    cfg.validate()?;
    shape.validate()?;
    let start = QuantumState::basis_state(Basis::Lab, bare::PLUS_ONE);
    let traj = run(|t| shape.pair_unchecked(t), shape.ramp_end(), &start, sampling, shape.amplitude)?;
    Ok(*traj.dark.last().expect("non-empty"))
}
