use serde::{Deserialize, Serialize};

use crate::digital::{SamplerMode, SamplerModel};
use crate::error::{Error, Result};
use crate::oscillator::{instantaneous_frequency, DacModel, OscillatorParams};

/// Largest fraction of a counter state any oscillator may advance per
/// engine step.
pub const MAX_STATES_PER_STEP: f64 = 0.25;

/// One DAC-driven DCO integrator stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DcoStageConfig {
    pub dac: DacModel,
    pub dco: OscillatorParams,
}

impl DcoStageConfig {
    /// Ideal stage whose state rate is `k_eff_per_lsb * code` above mid-scale
    /// reference, with a 16-tap differential ring and 6-bit DAC.
    pub fn for_gain(k_eff_per_lsb: f64) -> Self {
        Self::with_width(k_eff_per_lsb, 6, 16)
    }

    pub fn with_width(k_eff_per_lsb: f64, dac_bits: u32, taps: u32) -> Self {
        let dac = DacModel::mid_scale(dac_bits, 1.0 / f64::from(1u32 << dac_bits));
        let dco = OscillatorParams::dco_for_gain(k_eff_per_lsb, taps, dac_bits, dac.v_lsb);
        Self { dac, dco }
    }

    /// States per second per DAC LSB, from the nominal DAC step.
    pub fn effective_gain(&self) -> f64 {
        self.dco.k_tune * self.dac.v_lsb * f64::from(self.dco.states_per_cycle)
    }

    /// Highest state rate over all DAC codes.
    pub fn max_state_rate(&self) -> f64 {
        self.dac
            .transfer_table()
            .into_iter()
            .map(|v| instantaneous_frequency(&self.dco, v).hz)
            .fold(0.0, f64::max)
            * f64::from(self.dco.states_per_cycle)
    }

    fn validate(&self, word_bits: u32, fs: f64, gray: bool) -> Result<()> {
        self.dac.validate()?;
        self.dco.validate(gray)?;
        if self.dac.n_bits != word_bits {
            return Err(Error::config(format!(
                "DAC width {} must equal the word width {word_bits}",
                self.dac.n_bits
            )));
        }
        if self.dco.states_per_cycle != 2 * self.dco.taps {
            return Err(Error::config(format!(
                "a differential ring with {} taps has {} states per cycle, got {}",
                self.dco.taps,
                2 * self.dco.taps,
                self.dco.states_per_cycle
            )));
        }
        if gray {
            let bits = self.dco.taps.trailing_zeros();
            if !self.dco.taps.is_power_of_two() || !(2..=word_bits.min(6)).contains(&bits) {
                return Err(Error::config(format!(
                    "Gray-counted DCO needs 2^b taps with 2 <= b <= {}, got {}",
                    word_bits.min(6),
                    self.dco.taps
                )));
            }
        }
        let ratio = self.effective_gain() / fs;
        if !(ratio > 0.0 && ratio < 2.0) {
            return Err(Error::config(format!(
                "k_DCO/fs = {ratio:.4} puts the loop pole outside the unit circle"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerSettings {
    /// Metastability window in seconds; `None` uses one engine step.
    pub aperture_s: Option<f64>,
    pub mode: SamplerMode,
}

/// Full parameterization of one modulator instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub fs_hz: f64,
    /// Engine steps per sampling period.
    pub oversampling: u32,
    /// Width of the counters, subtractor and DAC.
    pub word_bits: u32,
    pub stage1: OscillatorParams,
    pub stage2: DcoStageConfig,
    /// Two branches fed with `+x/2` and `-x/2`; output is their difference.
    pub pseudo_differential: bool,
    pub sampler: SamplerSettings,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            fs_hz: 3.072e6,
            oversampling: 512,
            word_bits: 6,
            stage1: OscillatorParams::input_vco(),
            stage2: DcoStageConfig::for_gain(1.2e6),
            pseudo_differential: true,
            sampler: SamplerSettings::default(),
            seed: 1,
        }
    }
}

impl SimConfig {
    pub fn ts(&self) -> f64 {
        1.0 / self.fs_hz
    }

    pub fn engine_rate(&self) -> f64 {
        self.fs_hz * f64::from(self.oversampling)
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.engine_rate()
    }

    /// Input VCO gain in states per second per volt.
    pub fn k_vco_eff(&self) -> f64 {
        self.stage1.k_tune * f64::from(self.stage1.states_per_cycle)
    }

    /// Output counts per sample per volt of (differential) input.
    pub fn counts_per_volt(&self) -> f64 {
        self.k_vco_eff() / self.fs_hz
    }

    /// Mean per-branch output at rest, in counts per sample.
    pub fn rest_counts(&self) -> f64 {
        self.stage1.rest_state_rate() / self.fs_hz
    }

    pub fn sampler_model(&self, seed: u64) -> SamplerModel {
        SamplerModel {
            aperture_s: self.sampler.aperture_s.unwrap_or_else(|| self.dt()),
            seed,
            mode: self.sampler.mode,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_stages(std::slice::from_ref(&self.stage2))
    }

    pub(crate) fn validate_stages(&self, stages: &[DcoStageConfig]) -> Result<()> {
        if !(self.fs_hz.is_finite() && self.fs_hz > 0.0) {
            return Err(Error::config(format!(
                "fs must be positive, got {}",
                self.fs_hz
            )));
        }
        if self.oversampling < 2 {
            return Err(Error::config("oversampling K must be at least 2"));
        }
        if !(2..=16).contains(&self.word_bits) {
            return Err(Error::config(format!(
                "word width {} outside 2..=16",
                self.word_bits
            )));
        }
        if stages.is_empty() {
            return Err(Error::config("at least one DCO stage is required"));
        }
        self.stage1.validate(false)?;
        for (i, st) in stages.iter().enumerate() {
            st.validate(self.word_bits, self.fs_hz, i + 1 == stages.len())?;
        }
        // The input VCO is checked at +1 V control, the DCOs at their top code.
        let vco_max =
            instantaneous_frequency(&self.stage1, 1.0).hz * f64::from(self.stage1.states_per_cycle);
        let fastest = stages
            .iter()
            .map(DcoStageConfig::max_state_rate)
            .fold(vco_max, f64::max);
        if fastest * self.dt() > MAX_STATES_PER_STEP {
            return Err(Error::config(format!(
                "engine step too coarse: {:.3} states per step (limit {MAX_STATES_PER_STEP})",
                fastest * self.dt()
            )));
        }
        let model = self.sampler_model(0);
        model.validate()?;
        if model.aperture_s > 2.0 * self.dt() {
            return Err(Error::config(format!(
                "aperture {:.3e} s exceeds two engine steps",
                model.aperture_s
            )));
        }
        Ok(())
    }
}
