//! TOML run configuration. Frequencies are given as `2π × kHz` (or MHz and
//! GHz where named) and converted to rad/ms on resolution.

use serde::{Deserialize, Serialize};

use crate::acquisition::{linear_grid, AcquisitionPlan, Scenario, StageTimings};
use crate::physics::{FidelityTier, SensorConfig};
use crate::regressor::{Activation, Architecture, Hyperparameters};
use crate::units::{two_pi_ghz, two_pi_khz, two_pi_mhz};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensorBlock {
    pub hyperfine_ghz: f64,
    pub gamma_e_mhz_per_gauss: f64,
    pub gamma_n_khz_per_gauss: f64,
    pub dressing_khz: f64,
    /// Target carrier; `B_z` is solved so the sensor is resonant with it.
    /// Defaults to 10.56 MHz for averaged single-parameter runs and
    /// 10.03 MHz otherwise. Ignored when `b_z_gauss` is set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub carrier_mhz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b_z_gauss: Option<f64>,
}

impl Default for SensorBlock {
    fn default() -> Self {
        Self {
            hyperfine_ghz: SensorConfig::DEFAULT_HYPERFINE_GHZ,
            gamma_e_mhz_per_gauss: SensorConfig::DEFAULT_GAMMA_E_MHZ_PER_G,
            gamma_n_khz_per_gauss: SensorConfig::DEFAULT_GAMMA_N_KHZ_PER_G,
            dressing_khz: SensorConfig::DEFAULT_DRESSING_KHZ,
            carrier_mhz: None,
            b_z_gauss: None,
        }
    }
}

impl SensorBlock {
    pub fn resolve(&self, default_carrier_mhz: f64) -> Result<SensorConfig> {
        let mut cfg = SensorConfig {
            hyperfine_splitting: two_pi_ghz(self.hyperfine_ghz),
            gamma_e: two_pi_mhz(self.gamma_e_mhz_per_gauss),
            gamma_n: two_pi_khz(self.gamma_n_khz_per_gauss),
            b_z: 1.0,
            dressing_rabi: two_pi_khz(self.dressing_khz),
        };
        cfg.b_z = match self.b_z_gauss {
            Some(b) => b,
            None => cfg.field_for_transition(two_pi_mhz(self.carrier_mhz.unwrap_or(default_carrier_mhz)))?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// `count` evenly spaced values from `start` to `stop`, in `2π × kHz`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeSpec {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl RangeSpec {
    fn validate(&self, name: &str) -> Result<()> {
        if !(self.start.is_finite() && self.stop.is_finite()) || self.count == 0 {
            return Err(Error::invalid(format!("{name}: need finite bounds and count >= 1")));
        }
        if self.count > 1 && self.stop <= self.start {
            return Err(Error::invalid(format!("{name}: stop must exceed start")));
        }
        Ok(())
    }

    /// Values in rad/ms.
    pub fn values(&self) -> Vec<f64> {
        linear_grid(self.start, self.stop, self.count).into_iter().map(two_pi_khz).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridBlock {
    pub rabi_khz: RangeSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detuning_khz: Option<RangeSpec>,
    /// Noisy records drawn per parameter tuple; 100 for averaged and
    /// 1800 for single-shot acquisition when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub repetitions: Option<usize>,
}

impl Default for GridBlock {
    fn default() -> Self {
        Self { rabi_khz: RangeSpec { start: 0.5, stop: 10.0, count: 96 }, detuning_khz: None, repetitions: None }
    }
}

/// Acquisition settings; unset fields take the scenario's preset.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AcquisitionBlock {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<Scenario>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_shots: Option<usize>,
    /// ms
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_final: Option<f64>,
    /// Integration step in ms.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time_step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stage_timings: Option<StageTimings>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegressorBlock {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
}

impl Default for RegressorBlock {
    fn default() -> Self {
        let a = Architecture::default();
        let h = Hyperparameters::default();
        Self {
            hidden: a.hidden,
            activation: a.activation,
            learning_rate: h.learning_rate,
            batch_size: h.batch_size,
            epochs: h.epochs,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SeedsBlock {
    pub data: u64,
    pub training: u64,
}

impl Default for SeedsBlock {
    fn default() -> Self {
        Self { data: 1, training: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub tier: FidelityTier,
    pub sensor: SensorBlock,
    pub grid: GridBlock,
    pub acquisition: AcquisitionBlock,
    pub regressor: RegressorBlock,
    pub seeds: SeedsBlock,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            tier: FidelityTier::Full,
            sensor: SensorBlock::default(),
            grid: GridBlock::default(),
            acquisition: AcquisitionBlock::default(),
            regressor: RegressorBlock::default(),
            seeds: SeedsBlock::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::invalid(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.sensor()?;
        self.grid.rabi_khz.validate("grid.rabi_khz")?;
        if let Some(d) = &self.grid.detuning_khz {
            d.validate("grid.detuning_khz")?;
        }
        if self.grid.repetitions == Some(0) {
            return Err(Error::invalid("grid.repetitions must be >= 1"));
        }
        self.plan()?;
        self.hyperparameters().validate()?;
        if self.regressor.hidden.iter().any(|&h| h == 0) {
            return Err(Error::invalid("regressor.hidden sizes must be >= 1"));
        }
        Ok(())
    }

    pub fn sensor(&self) -> Result<SensorConfig> {
        let carrier = match (self.scenario(), self.grid.detuning_khz.is_some()) {
            (Scenario::AveragedI, false) => 10.56,
            _ => 10.03,
        };
        self.sensor.resolve(carrier)
    }

    pub fn scenario(&self) -> Scenario {
        self.acquisition.scenario.unwrap_or(Scenario::AveragedI)
    }

    /// Preset for the scenario (two-parameter when a detuning grid is
    /// set), overridden field by field.
    pub fn plan(&self) -> Result<AcquisitionPlan> {
        let preset = match (self.scenario(), self.grid.detuning_khz.is_some()) {
            (Scenario::SingleShotII, _) => AcquisitionPlan::single_shot(),
            (Scenario::AveragedI, true) => AcquisitionPlan::two_parameter(),
            (Scenario::AveragedI, false) => AcquisitionPlan::averaged(),
        };
        let a = &self.acquisition;
        let plan = AcquisitionPlan {
            scenario: preset.scenario,
            n_points: a.n_points.unwrap_or(preset.n_points),
            n_shots: a.n_shots.unwrap_or(preset.n_shots),
            t_final: a.t_final.unwrap_or(preset.t_final),
            stage_timings: a.stage_timings.or(preset.stage_timings),
            time_step: a.time_step,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn repetitions(&self) -> usize {
        self.grid.repetitions.unwrap_or(match self.scenario() {
            Scenario::AveragedI => 100,
            Scenario::SingleShotII => 1800,
        })
    }

    pub fn rabi_grid(&self) -> Vec<f64> {
        self.grid.rabi_khz.values()
    }

    pub fn detuning_grid(&self) -> Option<Vec<f64>> {
        self.grid.detuning_khz.map(|d| d.values())
    }

    pub fn architecture(&self) -> Architecture {
        Architecture { hidden: self.regressor.hidden.clone(), activation: self.regressor.activation }
    }

    pub fn hyperparameters(&self) -> Hyperparameters {
        Hyperparameters {
            learning_rate: self.regressor.learning_rate,
            batch_size: self.regressor.batch_size,
            epochs: self.regressor.epochs,
            seed: self.seeds.training,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_resolve() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.plan().unwrap(), AcquisitionPlan::averaged());
        assert_eq!(cfg.rabi_grid().len(), 96);
        let s = cfg.sensor().unwrap();
        assert!((s.target_transition() / two_pi_mhz(10.56) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn toml_round_trip_and_presets() {
        let text = r#"
            tier = "rwa-slow"
            [sensor]
            carrier_mhz = 10.03
            [grid]
            rabi_khz = { start = 6.9, stop = 10.0, count = 32 }
            detuning_khz = { start = -0.6, stop = 0.6, count = 51 }
            repetitions = 3
            [seeds]
            data = 5
        "#;
        let cfg = RunConfig::from_toml(text).unwrap();
        assert_eq!(cfg.tier, FidelityTier::RwaSlow);
        assert_eq!(cfg.plan().unwrap().n_points, 201);
        assert_eq!(cfg.seeds.training, 2);
        assert_eq!(cfg.detuning_grid().unwrap().len(), 51);
        let back = RunConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(back, cfg);

        let ss = RunConfig::from_toml("[acquisition]\nscenario = \"single-shot-ii\"\n").unwrap();
        let s = ss.sensor().unwrap();
        assert!((s.target_transition() / two_pi_mhz(10.03) - 1.0).abs() < 1e-12);
        assert_eq!(ss.plan().unwrap(), AcquisitionPlan::single_shot());
        assert_eq!(ss.repetitions() * ss.rabi_grid().len(), 172_800);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(RunConfig::from_toml("colour = 3").is_err());
        assert!(RunConfig::from_toml("[sensor]\nfield = 1.0").is_err());
        assert!(RunConfig::from_toml("[grid]\nrepetitions = 0").is_err());
        assert!(RunConfig::from_toml("[grid]\nrabi_khz = { start = 2.0, stop = 1.0, count = 5 }").is_err());
        assert!(RunConfig::from_toml("[acquisition]\nscenario = \"single-shot-ii\"\nn_shots = 3").is_err());
        assert!(RunConfig::from_toml("[regressor]\nlearning_rate = -1.0").is_err());
        assert!(RunConfig::from_toml("tier = \"exact\"").is_err());
    }
}
