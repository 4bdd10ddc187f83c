//! Four-level dressed-state sensor model.
//!
//! Three fidelity tiers describe the same physics at different cost:
//!
//! - [`FidelityTier::Harmonic`]: the resonant `|D⟩ ↔ |0′⟩` two-level
//!   model with closed-form solution `P_D(t) = cos²(π t / t_R)`.
//! - [`FidelityTier::RwaSlow`]: the static dressing splitting plus every
//!   coupling rotating as `e^{∓iξt}`.
//! - [`FidelityTier::Full`]: every term of the dressed-frame Hamiltonian,
//!   including the counter-rotating contributions at the Zeeman frequency
//!   and the off-resonant `|0′⟩ ↔ |−1⟩` line at `γe²B_z²/2A`.

mod config;
mod hamiltonian;
mod lab;
pub(crate) mod propagate;
mod state;

use serde::{Deserialize, Serialize};
use std::f64::consts::SQRT_2;

pub use config::{SensorConfig, TargetField, AVERAGED_CARRIER, SINGLE_SHOT_CARRIER};
pub use lab::{lab_frame_oracle, Drive, LAB_ORACLE_MAX_SPAN, LAB_ORACLE_MAX_STEPS};
pub use propagate::{Ket, Mat4};
pub use state::{dressed, lab as bare, Basis, QuantumState};

use crate::{Error, Result};
use hamiltonian::dressed_terms;
use propagate::{norm_sqr, step_count, LaneSystem, PhasorHamiltonian};

/// Which terms of the dressed-frame Hamiltonian are integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FidelityTier {
    Harmonic,
    RwaSlow,
    Full,
}

impl std::fmt::Display for FidelityTier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FidelityTier::Harmonic => "harmonic",
            FidelityTier::RwaSlow => "rwa-slow",
            FidelityTier::Full => "full",
        })
    }
}

impl std::str::FromStr for FidelityTier {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "harmonic" => Ok(FidelityTier::Harmonic),
            "rwa-slow" | "rwa" => Ok(FidelityTier::RwaSlow),
            "full" => Ok(FidelityTier::Full),
            other => Err(Error::invalid(format!("unknown tier '{other}'"))),
        }
    }
}

/// Allowed drift of the state norm over an evolution call.
pub const NORM_DRIFT_LIMIT: f64 = 1e-6;
/// Upper bound on the default step, so slow tiers stay converged.
pub const DEFAULT_STEP_CAP: f64 = 1e-4;

/// Recurrence period of the harmonic response, `t_R = 2π√2/Ω_tg`.
pub fn recurrence_time(rabi: f64) -> f64 {
    2.0 * std::f64::consts::PI * SQRT_2 / rabi
}

/// `P_D(t) = cos²(π t / t_R)`. A zero Rabi frequency gives the constant 1.
pub fn harmonic_survival(target: &TargetField, t: f64) -> f64 {
    let c = (target.rabi() * t / (2.0 * SQRT_2)).cos();
    c * c
}

/// A sensor, a target and a tier, ready to be integrated.
#[derive(Debug, Clone)]
pub struct DressedModel {
    cfg: SensorConfig,
    target: TargetField,
    tier: FidelityTier,
    terms: PhasorHamiltonian,
}

impl DressedModel {
    pub fn new(cfg: &SensorConfig, target: &TargetField, tier: FidelityTier) -> Result<Self> {
        cfg.validate()?;
        if target.phase() != 0.0 {
            return Err(Error::invalid(
                "the dressed-frame model assumes a zero target phase; use the lab-frame oracle",
            ));
        }
        Ok(Self { cfg: *cfg, target: *target, tier, terms: dressed_terms(cfg, target, tier) })
    }

    pub fn tier(&self) -> FidelityTier {
        self.tier
    }

    pub fn target(&self) -> &TargetField {
        &self.target
    }

    pub fn sensor(&self) -> &SensorConfig {
        &self.cfg
    }

    /// Hamiltonian in the dressed basis at time `t` (rad/ms).
    pub fn hamiltonian(&self, t: f64) -> Mat4 {
        self.terms.matrix_at(t)
    }

    /// Largest oscillation frequency in cycles per ms.
    pub fn max_frequency(&self) -> f64 {
        self.terms.max_frequency()
    }

    /// Largest admissible step, `1/(50 f_max)`.
    pub fn max_step(&self) -> f64 {
        1.0 / (50.0 * self.max_frequency())
    }

    /// `min(1/(100 f_max), 1e-4 ms)`.
    pub fn default_step(&self) -> f64 {
        (1.0 / (100.0 * self.max_frequency())).min(DEFAULT_STEP_CAP)
    }

    fn check_step(&self, dt: f64) -> Result<()> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid(format!("time step must be > 0, got {dt}")));
        }
        if self.tier != FidelityTier::Harmonic && dt > self.max_step() {
            return Err(Error::StepTooLarge { dt, required: self.max_step() });
        }
        Ok(())
    }

    fn advance(&self, psi: &mut Ket, t0: f64, t1: f64, dt: f64) {
        match self.tier {
            FidelityTier::Harmonic => self.advance_harmonic(psi, t0, t1),
            _ => self.terms.propagate(psi, t0, t1, step_count(t0, t1, dt)),
        }
    }

    // Resonant D ↔ 0′ pair with coupling −g e^{−iξt}. In the frame
    // c₀′ = b e^{iξt} the generator is K = [[0, −g], [−g, ξ]].
    fn advance_harmonic(&self, psi: &mut Ket, t0: f64, t1: f64) {
        use num_complex::Complex64 as C64;
        let g = self.target.rabi() / (2.0 * SQRT_2);
        let xi = self.target.detuning();
        let tau = t1 - t0;
        let cd = psi[dressed::DARK];
        let b = psi[dressed::ZERO_PRIME] * C64::from_polar(1.0, -xi * t0);
        let lambda = (0.25 * xi * xi + g * g).sqrt();
        let (c, s_over) = if lambda * tau == 0.0 {
            (1.0, tau)
        } else {
            ((lambda * tau).cos(), (lambda * tau).sin() / lambda)
        };
        // exp(−iKτ) = e^{−iξτ/2} [cos(λτ) − i sin(λτ)/λ · M], M = K − ξ/2
        let global = C64::from_polar(1.0, -0.5 * xi * tau);
        let i = C64::new(0.0, 1.0);
        let m00 = -0.5 * xi;
        let m01 = -g;
        let m11 = 0.5 * xi;
        let new_d = global * (cd * c - i * s_over * (cd * m00 + b * m01));
        let new_b = global * (b * c - i * s_over * (cd * m01 + b * m11));
        psi[dressed::DARK] = new_d;
        psi[dressed::ZERO_PRIME] = new_b * C64::from_polar(1.0, xi * t1);
    }

    /// Integrates from `t_span.0` to `t_span.1` with steps of at most `dt`.
    pub fn evolve(&self, initial: &QuantumState, t_span: (f64, f64), dt: f64) -> Result<QuantumState> {
        let (t0, t1) = t_span;
        if !(t0.is_finite() && t1.is_finite() && t1 >= t0) {
            return Err(Error::invalid(format!("invalid time span [{t0}, {t1}]")));
        }
        self.check_step(dt)?;
        let mut psi = *initial.to_dressed().amplitudes();
        self.advance(&mut psi, t0, t1, dt);
        finish(psi)
    }

    /// Dark-state survival probabilities on an ascending grid, starting
    /// from `|D⟩` at `t = 0`. One trajectory serves the whole grid.
    pub fn survival_curve(&self, times: &[f64], dt: f64) -> Result<Vec<f64>> {
        Ok(self.trajectory(times, dt)?.iter().map(QuantumState::dark_population).collect())
    }

    /// States at every grid time, starting from `|D⟩` at `t = 0`.
    pub fn trajectory(&self, times: &[f64], dt: f64) -> Result<Vec<QuantumState>> {
        check_grid(times)?;
        self.check_step(dt)?;
        let mut psi = *QuantumState::dark().amplitudes();
        let mut t = 0.0;
        let mut out = Vec::with_capacity(times.len());
        for &ti in times {
            self.advance(&mut psi, t, ti, dt);
            t = ti;
            let n = norm_sqr(&psi).sqrt();
            if (n - 1.0).abs() > NORM_DRIFT_LIMIT {
                return Err(Error::NormDrift { drift: (n - 1.0).abs() });
            }
            psi.iter_mut().for_each(|z| *z /= n);
            out.push(QuantumState::from_raw(Basis::Dressed, psi));
        }
        Ok(out)
    }
}

fn finish(psi: Ket) -> Result<QuantumState> {
    let n = norm_sqr(&psi).sqrt();
    let drift = (n - 1.0).abs();
    if !(drift <= NORM_DRIFT_LIMIT) {
        return Err(Error::NormDrift { drift });
    }
    Ok(QuantumState::from_raw(Basis::Dressed, psi.map(|z| z / n)))
}

fn check_grid(times: &[f64]) -> Result<()> {
    match times.first() {
        None => return Err(Error::Empty("time grid")),
        Some(&t) if !(t >= 0.0) => {
            return Err(Error::invalid(format!("time grid must start at >= 0, got {t}")))
        }
        _ => {}
    }
    if times.windows(2).any(|w| !(w[1] >= w[0])) || times.iter().any(|t| !t.is_finite()) {
        return Err(Error::invalid("time grid must be finite and ascending"));
    }
    Ok(())
}

/// Number of parameter sets integrated side by side by [`survival_curves`].
pub const LANES: usize = 4;

fn lane_curves(models: [&DressedModel; LANES], times: &[f64], dt: f64) -> Result<[Vec<f64>; LANES]> {
    for m in models {
        m.check_step(dt)?;
    }
    let system = LaneSystem::<LANES>::new(models.map(|m| &m.terms));
    let Some(system) = system else {
        let mut out: [Vec<f64>; LANES] = Default::default();
        for (o, m) in out.iter_mut().zip(models) {
            *o = m.survival_curve(times, dt)?;
        }
        return Ok(out);
    };
    let mut kets = [*QuantumState::dark().amplitudes(); LANES];
    let mut out: [Vec<f64>; LANES] = std::array::from_fn(|_| Vec::with_capacity(times.len()));
    let mut t = 0.0;
    for &ti in times {
        system.propagate(&mut kets, t, ti, step_count(t, ti, dt));
        t = ti;
        for (k, o) in kets.iter_mut().zip(out.iter_mut()) {
            let n = norm_sqr(k).sqrt();
            if (n - 1.0).abs() > NORM_DRIFT_LIMIT {
                return Err(Error::NormDrift { drift: (n - 1.0).abs() });
            }
            k.iter_mut().for_each(|z| *z /= n);
            o.push(k[dressed::DARK].norm_sqr());
        }
    }
    Ok(out)
}

/// `P_D(t_i)` for many targets on one grid.
///
/// Consecutive targets with equal detuning are integrated [`LANES`] at a
/// time; each curve is bit-identical to a single [`DressedModel::survival_curve`]
/// call at the same step. `dt = None` selects the smallest default step
/// of each group.
pub fn survival_curves(
    cfg: &SensorConfig,
    targets: &[TargetField],
    tier: FidelityTier,
    times: &[f64],
    dt: Option<f64>,
) -> Result<Vec<Vec<f64>>> {
    check_grid(times)?;
    let models = targets
        .iter()
        .map(|t| DressedModel::new(cfg, t, tier))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(models.len());
    let mut start = 0;
    while start < models.len() {
        let xi = models[start].target.detuning();
        let mut end = start + 1;
        while end < models.len() && end - start < LANES && models[end].target.detuning() == xi {
            end += 1;
        }
        let group = &models[start..end];
        let step = dt.unwrap_or_else(|| group.iter().map(DressedModel::default_step).fold(f64::INFINITY, f64::min));
        if tier == FidelityTier::Harmonic || group.len() == 1 {
            for m in group {
                out.push(m.survival_curve(times, step)?);
            }
        } else {
            // pad with the last lane
            let lanes: [&DressedModel; LANES] = std::array::from_fn(|i| &group[i.min(group.len() - 1)]);
            let curves = lane_curves(lanes, times, step)?;
            out.extend(curves.into_iter().take(group.len()));
        }
        start = end;
    }
    Ok(out)
}

/// States at `t_final` for many targets, each starting from `|D⟩` at
/// `t = 0` and integrated with the same step. Consecutive targets with
/// equal detuning share lanes as in [`survival_curves`].
pub fn final_states(
    cfg: &SensorConfig,
    targets: &[TargetField],
    tier: FidelityTier,
    t_final: f64,
    dt: f64,
) -> Result<Vec<QuantumState>> {
    if !(t_final.is_finite() && t_final >= 0.0) {
        return Err(Error::invalid(format!("final time must be >= 0, got {t_final}")));
    }
    let models = targets
        .iter()
        .map(|t| DressedModel::new(cfg, t, tier))
        .collect::<Result<Vec<_>>>()?;
    for m in &models {
        m.check_step(dt)?;
    }
    let steps = step_count(0.0, t_final, dt);
    let mut out = Vec::with_capacity(models.len());
    let mut start = 0;
    while start < models.len() {
        let xi = models[start].target.detuning();
        let mut end = start + 1;
        while end < models.len() && end - start < LANES && models[end].target.detuning() == xi {
            end += 1;
        }
        let group = &models[start..end];
        let lanes: [&DressedModel; LANES] = std::array::from_fn(|i| &group[i.min(group.len() - 1)]);
        let system = LaneSystem::<LANES>::new(lanes.map(|m| &m.terms));
        match system {
            Some(system) if tier != FidelityTier::Harmonic && group.len() > 1 => {
                let mut kets = [*QuantumState::dark().amplitudes(); LANES];
                system.propagate(&mut kets, 0.0, t_final, steps);
                for k in kets.into_iter().take(group.len()) {
                    out.push(finish(k)?);
                }
            }
            _ => {
                for m in group {
                    out.push(m.evolve(&QuantumState::dark(), (0.0, t_final), dt)?);
                }
            }
        }
        start = end;
    }
    Ok(out)
}

/// Dressed-basis Hamiltonian `H(t)` for `tier`.
pub fn dressed_hamiltonian(
    cfg: &SensorConfig,
    target: &TargetField,
    tier: FidelityTier,
    t: f64,
) -> Result<Mat4> {
    Ok(DressedModel::new(cfg, target, tier)?.hamiltonian(t))
}

/// Evolves `initial` over `t_span` with steps of at most `dt`.
pub fn evolve(
    cfg: &SensorConfig,
    target: &TargetField,
    tier: FidelityTier,
    initial: &QuantumState,
    t_span: (f64, f64),
    dt: f64,
) -> Result<QuantumState> {
    DressedModel::new(cfg, target, tier)?.evolve(initial, t_span, dt)
}

/// `P_D(t_i)` at the tier's default step.
pub fn survival_curve(
    cfg: &SensorConfig,
    target: &TargetField,
    tier: FidelityTier,
    times: &[f64],
) -> Result<Vec<f64>> {
    let model = DressedModel::new(cfg, target, tier)?;
    model.survival_curve(times, model.default_step())
}

/// Uniform grid of `n` points on `[0, t_final]`, both ends included.
pub fn uniform_grid(t_final: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => {
            let step = t_final / (n - 1) as f64;
            (0..n).map(|i| if i == n - 1 { t_final } else { i as f64 * step }).collect()
        }
    }
}
