use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::propagate::{norm_sqr, step_count, zero_matrix, PhasorHamiltonian};
use super::state::lab::{MINUS_ONE, PLUS_ONE, ZERO, ZERO_PRIME};
use super::{Basis, QuantumState, SensorConfig, NORM_DRIFT_LIMIT};
use crate::{Error, Result};

/// Longest span the lab-frame oracle accepts, 5 μs.
pub const LAB_ORACLE_MAX_SPAN: f64 = 5e-3;
/// Largest number of integration steps the lab-frame oracle accepts.
pub const LAB_ORACLE_MAX_STEPS: usize = 10_000_000;

/// A classical drive `amplitude · cos(frequency·t + phase)` coupling every
/// magnetic-dipole-allowed pair of lab states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Drive {
    pub amplitude: f64,
    pub frequency: f64,
    pub phase: f64,
}

impl Drive {
    pub fn new(amplitude: f64, frequency: f64, phase: f64) -> Self {
        Self { amplitude, frequency, phase }
    }
}

const PAIRS: [(usize, usize); 4] =
    [(PLUS_ONE, ZERO_PRIME), (PLUS_ONE, ZERO), (ZERO_PRIME, MINUS_ONE), (ZERO, MINUS_ONE)];

/// Integrates the undressed four-level Hamiltonian with explicit `cos`
/// drives, keeping every counter-rotating term.
///
/// `initial` is the Schrödinger-picture state at `t_span.0`; the result is
/// the Schrödinger-picture state at `t_span.1` in the lab basis.
pub fn lab_frame_oracle(
    cfg: &SensorConfig,
    drives: &[Drive],
    initial: &QuantumState,
    t_span: (f64, f64),
    dt: f64,
) -> Result<QuantumState> {
    cfg.validate()?;
    let (t0, t1) = t_span;
    if !(t0.is_finite() && t1.is_finite() && t1 >= t0) {
        return Err(Error::invalid(format!("invalid time span [{t0}, {t1}]")));
    }
    let span = t1 - t0;
    if span > LAB_ORACLE_MAX_SPAN {
        return Err(Error::SpanTooLong { span, limit: LAB_ORACLE_MAX_SPAN });
    }
    let required = 2.0 * std::f64::consts::PI / (50.0 * cfg.hyperfine_splitting);
    if !(dt > 0.0) {
        return Err(Error::invalid(format!("time step must be > 0, got {dt}")));
    }
    if dt > required {
        return Err(Error::StepTooLarge { dt, required });
    }
    let steps = step_count(t0, t1, dt);
    if steps > LAB_ORACLE_MAX_STEPS {
        return Err(Error::SpanTooLong { span, limit: LAB_ORACLE_MAX_STEPS as f64 * dt });
    }
    for d in drives {
        if !(d.amplitude.is_finite() && d.frequency.is_finite() && d.phase.is_finite()) {
            return Err(Error::invalid("drive parameters must be finite"));
        }
    }

    let energies = cfg.level_energies();
    let mut h = PhasorHamiltonian::new(zero_matrix());
    for d in drives {
        let half = 0.5 * d.amplitude;
        for (a, b) in PAIRS {
            let gap = energies[a] - energies[b];
            let up = h.phasor(gap + d.frequency);
            h.couple_complex(up, a, b, C64::from_polar(half, d.phase));
            let down = h.phasor(gap - d.frequency);
            h.couple_complex(down, a, b, C64::from_polar(half, -d.phase));
        }
    }

    let mut psi = *initial.to_lab().amplitudes();
    for (c, e) in psi.iter_mut().zip(energies) {
        *c *= C64::from_polar(1.0, e * t0);
    }
    h.propagate(&mut psi, t0, t1, steps);
    let n = norm_sqr(&psi).sqrt();
    let drift = (n - 1.0).abs();
    if !(drift <= NORM_DRIFT_LIMIT) {
        return Err(Error::NormDrift { drift });
    }
    for (c, e) in psi.iter_mut().zip(energies) {
        *c *= C64::from_polar(1.0 / n, -e * t1);
    }
    Ok(QuantumState::from_raw(Basis::Lab, psi))
}
