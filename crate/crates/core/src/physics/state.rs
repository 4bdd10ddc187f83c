use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;

use super::propagate::{norm_sqr, Ket, ZERO};
use super::SensorConfig;
use crate::{Error, Result};

/// Index order of the dressed basis `(|u⟩, |d⟩, |D⟩, |0′⟩)`.
pub mod dressed {
    pub const UP: usize = 0;
    pub const DOWN: usize = 1;
    pub const DARK: usize = 2;
    pub const ZERO_PRIME: usize = 3;
}

/// Index order of the bare hyperfine basis `(|1⟩, |0′⟩, |−1⟩, |0⟩)`.
pub mod lab {
    pub const PLUS_ONE: usize = 0;
    pub const ZERO_PRIME: usize = 1;
    pub const MINUS_ONE: usize = 2;
    pub const ZERO: usize = 3;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Basis {
    Dressed,
    Lab,
}

const NORM_TOLERANCE: f64 = 1e-9;

/// A normalised four-level pure state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantumState {
    basis: Basis,
    amps: Ket,
}

impl QuantumState {
    /// Wraps `amps`, which must already be normalised to within 1e-9.
    pub fn new(basis: Basis, amps: Ket) -> Result<Self> {
        let n = norm_sqr(&amps);
        if !((n - 1.0).abs() <= NORM_TOLERANCE) {
            return Err(Error::invalid(format!("state norm² is {n}, expected 1")));
        }
        Ok(Self { basis, amps })
    }

    pub fn normalized(basis: Basis, amps: Ket) -> Result<Self> {
        let n = norm_sqr(&amps).sqrt();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::invalid("cannot normalise a zero or non-finite state"));
        }
        Ok(Self { basis, amps: amps.map(|z| z / n) })
    }

    pub fn basis_state(basis: Basis, index: usize) -> Self {
        assert!(index < 4, "basis index out of range");
        let mut amps = [ZERO; 4];
        amps[index] = C64::new(1.0, 0.0);
        Self { basis, amps }
    }

    /// The dark state `|D⟩ = (|−1⟩ − |1⟩)/√2` in the dressed basis.
    pub fn dark() -> Self {
        Self::basis_state(Basis::Dressed, dressed::DARK)
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn amplitudes(&self) -> &Ket {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.amps)
    }

    pub fn populations(&self) -> [f64; 4] {
        self.amps.map(|z| z.norm_sqr())
    }

    pub fn dark_amplitude(&self) -> C64 {
        match self.basis {
            Basis::Dressed => self.amps[dressed::DARK],
            Basis::Lab => (self.amps[lab::MINUS_ONE] - self.amps[lab::PLUS_ONE]) * FRAC_1_SQRT_2,
        }
    }

    /// `|⟨D|ψ⟩|²`
    pub fn dark_population(&self) -> f64 {
        self.dark_amplitude().norm_sqr()
    }

    /// Same state expressed in the bare basis.
    pub fn to_lab(&self) -> Self {
        match self.basis {
            Basis::Lab => *self,
            Basis::Dressed => Self { basis: Basis::Lab, amps: dressed_to_bare(&self.amps) },
        }
    }

    pub fn to_dressed(&self) -> Self {
        match self.basis {
            Basis::Dressed => *self,
            Basis::Lab => Self { basis: Basis::Dressed, amps: bare_to_dressed(&self.amps) },
        }
    }

    /// `|⟨self|other⟩|²` after bringing both states to the same basis.
    pub fn fidelity(&self, other: &Self) -> f64 {
        let other = match self.basis {
            Basis::Dressed => other.to_dressed(),
            Basis::Lab => other.to_lab(),
        };
        let overlap: C64 = self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum();
        overlap.norm_sqr()
    }

    /// Converts a dressed-frame state at time `t` into the Schrödinger
    /// picture of the static lab Hamiltonian: bare amplitudes acquire the
    /// free phases `e^{-iω_k t}`.
    pub fn dressed_frame_to_lab(&self, cfg: &SensorConfig, t: f64) -> Self {
        let bare = self.to_lab();
        let energies = cfg.level_energies();
        let mut amps = bare.amps;
        for (a, w) in amps.iter_mut().zip(energies) {
            *a *= C64::from_polar(1.0, -w * t);
        }
        Self { basis: Basis::Lab, amps }
    }

    /// Inverse of [`Self::dressed_frame_to_lab`].
    pub fn lab_to_dressed_frame(&self, cfg: &SensorConfig, t: f64) -> Self {
        let bare = self.to_lab();
        let energies = cfg.level_energies();
        let mut amps = bare.amps;
        for (a, w) in amps.iter_mut().zip(energies) {
            *a *= C64::from_polar(1.0, w * t);
        }
        Self { basis: Basis::Lab, amps }.to_dressed()
    }

    pub(crate) fn from_raw(basis: Basis, amps: Ket) -> Self {
        Self { basis, amps }
    }
}

// |u⟩ = ½|1⟩ + ½|−1⟩ + |0⟩/√2,  |d⟩ = ½|1⟩ + ½|−1⟩ − |0⟩/√2,
// |D⟩ = (|−1⟩ − |1⟩)/√2
fn dressed_to_bare(c: &Ket) -> Ket {
    use dressed::*;
    let b = (c[UP] + c[DOWN]) * 0.5;
    let d = c[DARK] * FRAC_1_SQRT_2;
    let mut out = [ZERO; 4];
    out[lab::PLUS_ONE] = b - d;
    out[lab::MINUS_ONE] = b + d;
    out[lab::ZERO] = (c[UP] - c[DOWN]) * FRAC_1_SQRT_2;
    out[lab::ZERO_PRIME] = c[ZERO_PRIME];
    out
}

fn bare_to_dressed(c: &Ket) -> Ket {
    use lab::{MINUS_ONE, PLUS_ONE};
    let bright = (c[PLUS_ONE] + c[MINUS_ONE]) * FRAC_1_SQRT_2;
    let mut out = [ZERO; 4];
    out[dressed::UP] = (bright + c[lab::ZERO]) * FRAC_1_SQRT_2;
    out[dressed::DOWN] = (bright - c[lab::ZERO]) * FRAC_1_SQRT_2;
    out[dressed::DARK] = (c[MINUS_ONE] - c[PLUS_ONE]) * FRAC_1_SQRT_2;
    out[dressed::ZERO_PRIME] = c[lab::ZERO_PRIME];
    out
}
