//! Quantum Fisher information of the evolved dressed state and the
//! shot-limited bound `Δθ ≥ (N_T I)^{−1/2}`.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::physics::{final_states, DressedModel, FidelityTier, Ket, SensorConfig, TargetField};
use crate::{Error, Result};

/// Relative agreement required between `I(δ)` and `I(δ/2)`.
pub const QFI_TOLERANCE: f64 = 1e-3;
/// Halvings attempted before giving up.
pub const MAX_REFINEMENTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parameter {
    /// `Ω_tg`, rad/ms.
    Rabi,
    /// `ξ`, rad/ms.
    Detuning,
}

impl std::fmt::Display for Parameter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Parameter::Rabi => "rabi",
            Parameter::Detuning => "detuning",
        })
    }
}

impl std::str::FromStr for Parameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rabi" => Ok(Parameter::Rabi),
            "detuning" => Ok(Parameter::Detuning),
            _ => Err(Error::invalid(format!("unknown parameter '{s}' (expected rabi or detuning)"))),
        }
    }
}

impl Parameter {
    pub fn value(self, target: &TargetField) -> f64 {
        match self {
            Parameter::Rabi => target.rabi(),
            Parameter::Detuning => target.detuning(),
        }
    }

    fn shifted(self, target: &TargetField, by: f64) -> Result<TargetField> {
        match self {
            Parameter::Rabi => target.with_rabi(target.rabi() + by),
            Parameter::Detuning => Ok(target.with_detuning(target.detuning() + by)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Qfi {
    /// Fisher information in (rad/ms)⁻².
    pub value: f64,
    /// Accepted finite-difference step.
    pub delta: f64,
    /// Value at `2·delta`, for the convergence record.
    pub coarse_value: f64,
}

/// Index of the largest-magnitude amplitude.
fn pivot(psi: &Ket) -> usize {
    (0..4).fold(0, |b, i| if psi[i].norm_sqr() > psi[b].norm_sqr() { i } else { b })
}

/// Rotates `psi` so that component `k` is real and non-negative.
fn align(psi: &Ket, k: usize) -> Ket {
    let z = psi[k];
    if z.norm() == 0.0 {
        return *psi;
    }
    let phase = z.conj() / z.norm();
    psi.map(|a| a * phase)
}

fn inner(a: &Ket, b: &Ket) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// `4[⟨∂ψ|∂ψ⟩ − |⟨ψ|∂ψ⟩|²]` with `|∂ψ⟩ = (ψ₊ − ψ₋)/2δ`, after aligning
/// all three states on the pivot component of `ψ`.
pub fn qfi_from_states(psi: &Ket, plus: &Ket, minus: &Ket, delta: f64) -> f64 {
    let k = pivot(psi);
    let (psi, plus, minus) = (align(psi, k), align(plus, k), align(minus, k));
    let mut d = [C64::new(0.0, 0.0); 4];
    for i in 0..4 {
        d[i] = (plus[i] - minus[i]) / (2.0 * delta);
    }
    let dd = inner(&d, &d).re;
    let pd = inner(&psi, &d).norm_sqr();
    (4.0 * (dd - pd)).max(0.0)
}

/// Starting step `1e-4·max(|θ|, 1)`.
pub fn default_delta(theta: f64) -> f64 {
    1e-4 * theta.abs().max(1.0)
}

fn converged(coarse: f64, fine: f64) -> bool {
    (coarse - fine).abs() <= QFI_TOLERANCE * fine.abs().max(coarse.abs()) || (coarse.abs() < 1e-300 && fine.abs() < 1e-300)
}

/// Fisher information of the state reached from `|D⟩` after `t_final` with
/// respect to `parameter`.
///
/// The step starts at `delta` (or [`default_delta`]) and is halved until two
/// successive estimates agree to [`QFI_TOLERANCE`]. Every evolution uses
/// the same time step: `dt`, or the smallest default over the perturbed
/// models.
pub fn qfi(
    cfg: &SensorConfig,
    target: &TargetField,
    tier: FidelityTier,
    parameter: Parameter,
    t_final: f64,
    delta: Option<f64>,
    dt: Option<f64>,
) -> Result<Qfi> {
    let theta = parameter.value(target);
    let mut delta = delta.unwrap_or_else(|| default_delta(theta));
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::invalid(format!("finite-difference step must be > 0, got {delta}")));
    }
    let probe = [
        *target,
        parameter.shifted(target, delta)?,
        parameter.shifted(target, -delta)?,
    ];
    let step = match dt {
        Some(dt) => dt,
        None => probe
            .iter()
            .map(|t| DressedModel::new(cfg, t, tier).map(|m| m.default_step()))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(f64::INFINITY, f64::min),
    };
    let pair = |d: f64| -> Result<[TargetField; 2]> {
        Ok([parameter.shifted(target, d)?, parameter.shifted(target, -d)?])
    };
    // centre, ±δ and ±δ/2 in one batch
    let [p1, m1] = pair(delta)?;
    let [p2, m2] = pair(0.5 * delta)?;
    let states = final_states(cfg, &[*target, p1, m1, p2, m2], tier, t_final, step)?;
    let psi = *states[0].amplitudes();
    let mut coarse = qfi_from_states(&psi, states[1].amplitudes(), states[2].amplitudes(), delta);
    let mut fine = qfi_from_states(&psi, states[3].amplitudes(), states[4].amplitudes(), 0.5 * delta);
    delta *= 0.5;
    for _ in 0..MAX_REFINEMENTS {
        if converged(coarse, fine) {
            return Ok(Qfi { value: fine, delta, coarse_value: coarse });
        }
        let [p, m] = pair(0.5 * delta)?;
        let s = final_states(cfg, &[p, m], tier, t_final, step)?;
        coarse = fine;
        fine = qfi_from_states(&psi, s[0].amplitudes(), s[1].amplitudes(), 0.5 * delta);
        delta *= 0.5;
    }
    if converged(coarse, fine) {
        return Ok(Qfi { value: fine, delta, coarse_value: coarse });
    }
    Err(Error::NotConverged {
        suggested: 0.5 * delta,
        relative_change: (coarse - fine).abs() / fine.abs().max(coarse.abs()),
    })
}

/// `(N_p N_m I)^{−1/2}`; infinite when `I = 0`.
pub fn variance_bound(qfi: f64, n_points: usize, n_shots: usize) -> Result<f64> {
    if !(qfi >= 0.0 && qfi.is_finite()) {
        return Err(Error::invalid(format!("Fisher information must be finite and >= 0, got {qfi}")));
    }
    if n_points == 0 || n_shots == 0 {
        return Err(Error::invalid("N_p and N_m must be >= 1"));
    }
    if qfi == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(1.0 / ((n_points as f64) * (n_shots as f64) * qfi).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QfiReport {
    pub parameter: Parameter,
    pub t_final: f64,
    pub qfi: f64,
    pub delta: f64,
    pub total_shots: usize,
    /// Lower bound on the estimator SD, same units as the parameter;
    /// `None` when unbounded.
    pub bound: Option<f64>,
}

impl QfiReport {
    pub fn new(parameter: Parameter, t_final: f64, qfi: &Qfi, n_points: usize, n_shots: usize) -> Result<Self> {
        let b = variance_bound(qfi.value, n_points, n_shots)?;
        Ok(Self {
            parameter,
            t_final,
            qfi: qfi.value,
            delta: qfi.delta,
            total_shots: n_points * n_shots,
            bound: b.is_finite().then_some(b),
        })
    }
}
