use serde::{Deserialize, Serialize};

use crate::units::{two_pi_ghz, two_pi_khz, two_pi_mhz};
use crate::{Error, Result};

/// RF carrier used for the averaged-acquisition experiments (rad/ms).
pub const AVERAGED_CARRIER: f64 = 2.0 * std::f64::consts::PI * 10.56e3;
/// RF carrier used for the single-shot and two-parameter experiments (rad/ms).
pub const SINGLE_SHOT_CARRIER: f64 = 2.0 * std::f64::consts::PI * 10.03e3;

/// Ion constants and dressing-field settings.
///
/// All frequencies are angular (rad/ms), gyromagnetic ratios are rad/ms/G
/// and `b_z` is in gauss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorConfig {
    pub hyperfine_splitting: f64,
    pub gamma_e: f64,
    pub gamma_n: f64,
    pub b_z: f64,
    pub dressing_rabi: f64,
}

impl SensorConfig {
    pub const DEFAULT_HYPERFINE_GHZ: f64 = 12.643;
    pub const DEFAULT_GAMMA_E_MHZ_PER_G: f64 = 2.8024;
    pub const DEFAULT_GAMMA_N_KHZ_PER_G: f64 = 4.7248;
    pub const DEFAULT_DRESSING_KHZ: f64 = 5.5;

    /// Default ion constants with `B_z` chosen so that the `|0′⟩ ↔ |1⟩`
    /// transition sits exactly at `carrier` (rad/ms).
    pub fn resonant_with(carrier: f64) -> Result<Self> {
        let mut cfg = Self {
            hyperfine_splitting: two_pi_ghz(Self::DEFAULT_HYPERFINE_GHZ),
            gamma_e: two_pi_mhz(Self::DEFAULT_GAMMA_E_MHZ_PER_G),
            gamma_n: two_pi_khz(Self::DEFAULT_GAMMA_N_KHZ_PER_G),
            b_z: 1.0,
            dressing_rabi: two_pi_khz(Self::DEFAULT_DRESSING_KHZ),
        };
        cfg.b_z = cfg.field_for_transition(carrier)?;
        Ok(cfg)
    }

    pub fn with_dressing_rabi(mut self, omega: f64) -> Self {
        self.dressing_rabi = omega;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("hyperfine_splitting", self.hyperfine_splitting),
            ("gamma_e", self.gamma_e),
            ("gamma_n", self.gamma_n),
            ("b_z", self.b_z),
            ("dressing_rabi", self.dressing_rabi),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        Ok(())
    }

    fn quadratic_coefficient(&self) -> f64 {
        let g = self.gamma_e + self.gamma_n;
        g * g / (4.0 * self.hyperfine_splitting)
    }

    /// Solves `(γe−γn)B/2 − (γe+γn)²B²/4A = ω` for the smaller root `B`.
    pub fn field_for_transition(&self, omega: f64) -> Result<f64> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::invalid(format!("transition frequency must be > 0, got {omega}")));
        }
        let lin = 0.5 * (self.gamma_e - self.gamma_n);
        let quad = self.quadratic_coefficient();
        let disc = lin * lin - 4.0 * quad * omega;
        if disc < 0.0 {
            return Err(Error::invalid(format!("no static field reaches transition frequency {omega}")));
        }
        Ok(2.0 * omega / (lin + disc.sqrt()))
    }

    /// Level energies `(ω₁, ω₀′, ω₋₁, ω₀)` of the diagonalised static
    /// Hamiltonian.
    pub fn level_energies(&self) -> [f64; 4] {
        let a = self.hyperfine_splitting;
        let lin = 0.5 * (self.gamma_e - self.gamma_n) * self.b_z;
        let quad = self.quadratic_coefficient() * self.b_z * self.b_z;
        [0.25 * a + lin, 0.25 * a + quad, 0.25 * a - lin, -0.75 * a - quad]
    }

    /// `ω₁ − ω₀′`, the transition the RF target addresses.
    pub fn target_transition(&self) -> f64 {
        let [w1, w0p, _, _] = self.level_energies();
        w1 - w0p
    }

    /// `γe·B_z`
    pub fn zeeman_splitting(&self) -> f64 {
        self.gamma_e * self.b_z
    }

    /// `γe²B_z²/2A`, the offset of the `|0′⟩ ↔ |−1⟩` line from the target
    /// transition.
    pub fn quadratic_shift(&self) -> f64 {
        let z = self.zeeman_splitting();
        z * z / (2.0 * self.hyperfine_splitting)
    }
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self::resonant_with(AVERAGED_CARRIER).expect("default carrier is reachable")
    }
}

/// Parameters of the RF target field.
///
/// The carrier and detuning are kept consistent with the sensor level
/// energies by the constructors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetField {
    rabi: f64,
    carrier: f64,
    phase: f64,
    detuning: f64,
}

impl TargetField {
    /// Target resonant with `|0′⟩ ↔ |1⟩` (ξ = 0).
    pub fn resonant(cfg: &SensorConfig, rabi: f64) -> Result<Self> {
        Self::detuned(cfg, rabi, 0.0)
    }

    pub fn detuned(cfg: &SensorConfig, rabi: f64, detuning: f64) -> Result<Self> {
        Self::check_rabi(rabi)?;
        if !detuning.is_finite() {
            return Err(Error::invalid("detuning must be finite"));
        }
        Ok(Self { rabi, carrier: cfg.target_transition() + detuning, phase: 0.0, detuning })
    }

    pub fn from_carrier(cfg: &SensorConfig, rabi: f64, carrier: f64, phase: f64) -> Result<Self> {
        Self::check_rabi(rabi)?;
        if !(carrier.is_finite() && phase.is_finite()) {
            return Err(Error::invalid("carrier and phase must be finite"));
        }
        Ok(Self { rabi, carrier, phase, detuning: carrier - cfg.target_transition() })
    }

    fn check_rabi(rabi: f64) -> Result<()> {
        if !(rabi.is_finite() && rabi >= 0.0) {
            return Err(Error::invalid(format!("target Rabi frequency must be >= 0, got {rabi}")));
        }
        Ok(())
    }

    pub fn rabi(&self) -> f64 {
        self.rabi
    }
    pub fn carrier(&self) -> f64 {
        self.carrier
    }
    pub fn phase(&self) -> f64 {
        self.phase
    }
    pub fn detuning(&self) -> f64 {
        self.detuning
    }

    /// Same carrier and phase, different Rabi frequency.
    pub fn with_rabi(&self, rabi: f64) -> Result<Self> {
        Self::check_rabi(rabi)?;
        Ok(Self { rabi, ..*self })
    }

    /// Shifts the carrier so that the detuning becomes `detuning`.
    pub fn with_detuning(&self, detuning: f64) -> Self {
        Self { carrier: self.carrier + (detuning - self.detuning), detuning, ..*self }
    }
}
