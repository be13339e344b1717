use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{ComparisonOptions, Dither, Measurement};
use crate::modulator::SimConfig;
use crate::signal::Stimulus;

pub const SCHEMA_VERSION: u32 = 1;

/// Settings for `sweep-amp`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepAmpSettings {
    pub levels_dbv: Vec<f64>,
    pub measurement: Measurement,
}

impl Default for SweepAmpSettings {
    fn default() -> Self {
        Self {
            levels_dbv: vec![
                -100.0, -90.0, -80.0, -60.0, -40.0, -20.0, -10.0, -8.0, -6.0, -5.0, -4.0, -3.0,
                -2.0, -1.0, 0.0,
            ],
            measurement: Measurement::sweep(),
        }
    }
}

/// Settings for `sweep-freq`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepFreqSettings {
    pub level_dbv: f64,
    pub freqs_hz: Vec<f64>,
    /// Replaces the last DCO's polynomial nonlinearity when present.
    pub dco_poly_nl: Option<Vec<f64>>,
    pub measurement: Measurement,
}

impl Default for SweepFreqSettings {
    fn default() -> Self {
        Self {
            level_dbv: -10.0,
            freqs_hz: vec![1e3, 2e3, 5e3, 1e4, 2e4, 5e4, 1e5],
            dco_poly_nl: Some(vec![0.0, 2.0]),
            measurement: Measurement::sweep(),
        }
    }
}

/// Settings for `ntf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NtfSettings {
    /// Log-spaced points of the closed-form curve.
    pub points: usize,
    /// Also estimate the NTF by injection into the sampled word.
    pub measure: bool,
    pub amplitude: i32,
    pub nfft: usize,
    pub n_avg: usize,
    pub settle: usize,
}

impl Default for NtfSettings {
    fn default() -> Self {
        Self {
            points: 400,
            measure: true,
            amplitude: 4,
            nfft: 4096,
            n_avg: 16,
            settle: 1024,
        }
    }
}

/// Settings for `stf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StfSettings {
    pub points: usize,
}

impl Default for StfSettings {
    fn default() -> Self {
        Self { points: 400 }
    }
}

/// Settings for `higher-order`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HigherOrderSettings {
    /// Effective gain of each DCO stage, states per second per LSB. The
    /// loop order is one more than the number of stages.
    pub stage_gains_hz: Vec<f64>,
}

impl Default for HigherOrderSettings {
    fn default() -> Self {
        Self {
            stage_gains_hz: vec![1.536e6, 1.536e6],
        }
    }
}

/// Top-level JSON configuration. Every section except `schema` is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default)]
    pub stimulus: Stimulus,
    /// Move tones onto odd FFT bin centres.
    #[serde(default = "default_true")]
    pub coherent: bool,
    #[serde(default)]
    pub dither: Dither,
    #[serde(default)]
    pub measurement: Measurement,
    /// Band of the reported noise-shaping slope fit.
    #[serde(default = "default_slope_band")]
    pub slope_band_hz: [f64; 2],
    #[serde(default)]
    pub sweep_amp: SweepAmpSettings,
    #[serde(default)]
    pub sweep_freq: SweepFreqSettings,
    #[serde(default)]
    pub ntf: NtfSettings,
    #[serde(default)]
    pub stf: StfSettings,
    #[serde(default)]
    pub compare: ComparisonOptions,
    #[serde(default)]
    pub higher_order: HigherOrderSettings,
}

fn default_true() -> bool {
    true
}

fn default_slope_band() -> [f64; 2] {
    [20e3, 200e3]
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema: SCHEMA_VERSION,
            sim: SimConfig::default(),
            stimulus: Stimulus::default(),
            coherent: true,
            dither: Dither::default(),
            measurement: Measurement::default(),
            slope_band_hz: default_slope_band(),
            sweep_amp: SweepAmpSettings::default(),
            sweep_freq: SweepFreqSettings::default(),
            ntf: NtfSettings::default(),
            stf: StfSettings::default(),
            compare: ComparisonOptions::default(),
            higher_order: HigherOrderSettings::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            return Err(Error::config(format!(
                "unsupported schema {} (expected {SCHEMA_VERSION})",
                self.schema
            )));
        }
        self.sim.validate()?;
        self.stimulus.validate(self.sim.engine_rate())?;
        if let Some(c) = self.stimulus.components().first() {
            if c.frequency_hz >= self.sim.fs_hz / 2.0 {
                return Err(Error::config("tone must lie below fs/2"));
            }
        }
        self.dither.validate()?;
        self.measurement.validate()?;
        self.sweep_amp.measurement.validate()?;
        self.sweep_freq.measurement.validate()?;
        let [lo, hi] = self.slope_band_hz;
        if !(lo > 0.0 && lo < hi && hi <= self.sim.fs_hz / 2.0) {
            return Err(Error::config(format!("slope band [{lo}, {hi}] invalid")));
        }
        if self.ntf.points < 2 || self.stf.points < 2 {
            return Err(Error::config("curve point counts must be at least 2"));
        }
        if self.higher_order.stage_gains_hz.is_empty() {
            return Err(Error::config("higher_order needs at least one stage gain"));
        }
        if !(self.compare.bands_per_octave > 0.0) {
            return Err(Error::config("bands_per_octave must be positive"));
        }
        Ok(())
    }

    /// Canonical serialization, the input of the config hash.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}
