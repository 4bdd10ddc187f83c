use std::f64::consts::SQRT_2;

use super::propagate::{zero_matrix, PhasorHamiltonian};
use super::state::dressed::{DARK, DOWN, UP, ZERO_PRIME};
use super::{FidelityTier, SensorConfig, TargetField};
use num_complex::Complex64 as C64;

/// Dressed-frame Hamiltonian terms in the basis `(u, d, D, 0′)`.
pub(super) fn dressed_terms(cfg: &SensorConfig, target: &TargetField, tier: FidelityTier) -> PhasorHamiltonian {
    let omega = cfg.dressing_rabi;
    let rabi = target.rabi();
    let xi = target.detuning();
    let zeeman = cfg.zeeman_splitting();
    let quad = cfg.quadratic_shift();
    let g = rabi / (2.0 * SQRT_2);
    let q = rabi / 4.0;

    let mut s = zero_matrix();
    if tier != FidelityTier::Harmonic {
        s[UP][UP] = C64::new(omega / SQRT_2, 0.0);
        s[DOWN][DOWN] = C64::new(-omega / SQRT_2, 0.0);
    }
    let mut h = PhasorHamiltonian::new(s);

    let slow = h.phasor(-xi);
    h.couple(slow, DARK, ZERO_PRIME, -g);
    if tier == FidelityTier::Harmonic {
        return h;
    }
    h.couple(slow, UP, ZERO_PRIME, q);
    h.couple(slow, DOWN, ZERO_PRIME, q);
    if tier == FidelityTier::RwaSlow {
        return h;
    }

    let dressing = h.phasor(zeeman);
    let w = omega / (2.0 * SQRT_2);
    let v = omega / 4.0;
    for (r, c, k) in [
        (UP, UP, w),
        (DOWN, DOWN, -w),
        (UP, DARK, v),
        (DARK, DOWN, v),
        (DARK, UP, -v),
        (DOWN, DARK, -v),
    ] {
        h.couple(dressing, r, c, k);
    }

    let mirrored = h.phasor(zeeman - quad + xi);
    h.couple(mirrored, UP, ZERO_PRIME, q);
    h.couple(mirrored, DOWN, ZERO_PRIME, q);
    h.couple(mirrored, DARK, ZERO_PRIME, -g);

    for freq in [zeeman + xi, quad - xi] {
        let p = h.phasor(freq);
        h.couple(p, ZERO_PRIME, UP, q);
        h.couple(p, ZERO_PRIME, DOWN, q);
        h.couple(p, ZERO_PRIME, DARK, g);
    }
    h
}
