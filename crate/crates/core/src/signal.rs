//! Test stimuli in volts with dBV bookkeeping.
//!
//! Levels are RMS referred to 1 V (dBV), the unit used on audio ADC
//! amplitude axes; peak conversion happens internally.

use std::f64::consts::{SQRT_2, TAU};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Samples between exact phase re-anchoring in chunked generation.
const ANCHOR: u64 = 1024;

/// Peak amplitude in volts of a sine whose RMS level is `level_dbv`.
pub fn dbv_to_peak(level_dbv: f64) -> f64 {
    SQRT_2 * 10f64.powf(level_dbv / 20.0)
}

/// Inverse of [`dbv_to_peak`].
pub fn peak_to_dbv(peak_v: f64) -> f64 {
    20.0 * (peak_v / SQRT_2).log10()
}

/// Parses a textual dBV level such as `-36` or `-36 dBV`, rejecting
/// infinities and NaN.
pub fn parse_dbv(text: &str) -> Result<f64> {
    let t = text.trim();
    let t = match t.len().checked_sub(3) {
        Some(i) if t.is_char_boundary(i) && t[i..].eq_ignore_ascii_case("dbv") => t[..i].trim_end(),
        _ => t,
    };
    let level: f64 = t
        .parse()
        .map_err(|_| Error::config(format!("not a number: {text:?}")))?;
    if !level.is_finite() {
        return Err(Error::config(format!("level must be finite, got {text:?}")));
    }
    Ok(level)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToneComponent {
    pub amplitude_dbv: f64,
    pub frequency_hz: f64,
    #[serde(default)]
    pub phase_rad: f64,
}

impl ToneComponent {
    pub fn new(amplitude_dbv: f64, frequency_hz: f64) -> Self {
        Self {
            amplitude_dbv,
            frequency_hz,
            phase_rad: 0.0,
        }
    }
}

/// A test signal, described independently of any sample rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Stimulus {
    Silence,
    /// Constant voltage `10^(amplitude_dbv/20)`.
    Dc {
        amplitude_dbv: f64,
    },
    Tone(ToneComponent),
    Multitone {
        components: Vec<ToneComponent>,
    },
}

impl Default for Stimulus {
    fn default() -> Self {
        Stimulus::Tone(ToneComponent::new(-36.0, 1_000.0))
    }
}

impl Stimulus {
    pub fn silence() -> Self {
        Stimulus::Silence
    }

    pub fn tone(amplitude_dbv: f64, frequency_hz: f64) -> Self {
        Stimulus::Tone(ToneComponent::new(amplitude_dbv, frequency_hz))
    }

    pub fn components(&self) -> &[ToneComponent] {
        match self {
            Stimulus::Tone(c) => std::slice::from_ref(c),
            Stimulus::Multitone { components } => components,
            Stimulus::Silence | Stimulus::Dc { .. } => &[],
        }
    }

    /// Same stimulus with every component level replaced by `level_dbv`.
    pub fn with_level(&self, level_dbv: f64) -> Self {
        match self {
            Stimulus::Silence => Stimulus::Silence,
            Stimulus::Dc { .. } => Stimulus::Dc {
                amplitude_dbv: level_dbv,
            },
            Stimulus::Tone(c) => Stimulus::Tone(ToneComponent {
                amplitude_dbv: level_dbv,
                ..*c
            }),
            Stimulus::Multitone { components } => Stimulus::Multitone {
                components: components
                    .iter()
                    .map(|c| ToneComponent {
                        amplitude_dbv: level_dbv,
                        ..*c
                    })
                    .collect(),
            },
        }
    }

    /// Same stimulus with the (first) tone frequency replaced.
    pub fn with_frequency(&self, frequency_hz: f64) -> Self {
        match self {
            Stimulus::Tone(c) => Stimulus::Tone(ToneComponent { frequency_hz, ..*c }),
            Stimulus::Multitone { components } if !components.is_empty() => {
                let mut components = components.clone();
                components[0].frequency_hz = frequency_hz;
                Stimulus::Multitone { components }
            }
            other => other.clone(),
        }
    }

    pub fn validate(&self, rate_hz: f64) -> Result<()> {
        if !(rate_hz.is_finite() && rate_hz > 0.0) {
            return Err(Error::config(format!("invalid sample rate {rate_hz}")));
        }
        if let Stimulus::Dc { amplitude_dbv } = self {
            if !amplitude_dbv.is_finite() {
                return Err(Error::config("DC level must be finite"));
            }
        }
        for c in self.components() {
            if !c.amplitude_dbv.is_finite() {
                return Err(Error::config("tone level must be finite"));
            }
            if !c.phase_rad.is_finite() {
                return Err(Error::config("tone phase must be finite"));
            }
            if !(c.frequency_hz >= 0.0 && c.frequency_hz < rate_hz / 2.0) {
                return Err(Error::config(format!(
                    "tone frequency {} Hz outside [0, {} Hz)",
                    c.frequency_hz,
                    rate_hz / 2.0
                )));
            }
        }
        Ok(())
    }
}

/// Anything that can supply input voltages on the engine time grid.
pub trait Excitation: Sync {
    /// Writes samples `start .. start + out.len()` taken at `rate_hz`.
    fn fill(&self, start: u64, rate_hz: f64, out: &mut [f64]);

    /// Number of samples available, if finite.
    fn len_hint(&self) -> Option<u64> {
        None
    }
}

impl Excitation for Stimulus {
    fn fill(&self, start: u64, rate_hz: f64, out: &mut [f64]) {
        match self {
            Stimulus::Silence => out.fill(0.0),
            Stimulus::Dc { amplitude_dbv } => out.fill(10f64.powf(amplitude_dbv / 20.0)),
            Stimulus::Tone(_) | Stimulus::Multitone { .. } => {
                out.fill(0.0);
                for c in self.components() {
                    add_tone(c, start, rate_hz, out);
                }
            }
        }
    }
}

impl Excitation for [f64] {
    fn fill(&self, start: u64, _rate_hz: f64, out: &mut [f64]) {
        let start = start as usize;
        out.copy_from_slice(&self[start..start + out.len()]);
    }

    fn len_hint(&self) -> Option<u64> {
        Some(self.len() as u64)
    }
}

impl Excitation for Vec<f64> {
    fn fill(&self, start: u64, rate_hz: f64, out: &mut [f64]) {
        self.as_slice().fill(start, rate_hz, out)
    }

    fn len_hint(&self) -> Option<u64> {
        Some(self.len() as u64)
    }
}

/// `base` plus white Gaussian dither of `rms_v`, held constant over blocks
/// of `hold` samples. Each block draws from its own seeded stream, so the
/// values depend only on the absolute sample index.
#[derive(Debug, Clone, Copy)]
pub struct Dithered<'a, E: ?Sized> {
    pub base: &'a E,
    pub rms_v: f64,
    pub hold: u64,
    pub seed: u64,
}

impl<E: Excitation + ?Sized> Dithered<'_, E> {
    fn block_value(&self, block: u64) -> f64 {
        let mut rng =
            ChaCha8Rng::seed_from_u64(self.seed ^ block.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let z: f64 = StandardNormal.sample(&mut rng);
        self.rms_v * z
    }
}

impl<E: Excitation + ?Sized> Excitation for Dithered<'_, E> {
    fn fill(&self, start: u64, rate_hz: f64, out: &mut [f64]) {
        self.base.fill(start, rate_hz, out);
        if self.rms_v == 0.0 {
            return;
        }
        let hold = self.hold.max(1);
        let mut block = u64::MAX;
        let mut value = 0.0;
        for (i, slot) in out.iter_mut().enumerate() {
            let b = (start + i as u64) / hold;
            if b != block {
                block = b;
                value = self.block_value(b);
            }
            *slot += value;
        }
    }

    fn len_hint(&self) -> Option<u64> {
        self.base.len_hint()
    }
}

/// Accumulates one sine into `out`. The phasor is re-anchored from exact
/// `sin`/`cos` every [`ANCHOR`] absolute samples, so the result does not
/// depend on how a long record is split into calls.
fn add_tone(c: &ToneComponent, start: u64, rate_hz: f64, out: &mut [f64]) {
    let amp = dbv_to_peak(c.amplitude_dbv);
    let cycles_per_sample = c.frequency_hz / rate_hz;
    let (rot_s, rot_c) = (TAU * cycles_per_sample).sin_cos();
    let anchor_phasor = |index: u64| {
        let turns = (cycles_per_sample * index as f64).fract();
        (TAU * turns + c.phase_rad).sin_cos()
    };

    let mut index = start;
    let mut pos = 0;
    while pos < out.len() {
        let anchor = index - index % ANCHOR;
        let (mut s, mut co) = anchor_phasor(anchor);
        for _ in anchor..index {
            (s, co) = (s * rot_c + co * rot_s, co * rot_c - s * rot_s);
        }
        let run = ((anchor + ANCHOR - index) as usize).min(out.len() - pos);
        for slot in &mut out[pos..pos + run] {
            *slot += amp * s;
            (s, co) = (s * rot_c + co * rot_s, co * rot_c - s * rot_s);
        }
        pos += run;
        index += run as u64;
    }
}

/// Generates `n` samples of `stim` at `rate_hz`.
pub fn generate(stim: &Stimulus, rate_hz: f64, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::config("sample count must be positive"));
    }
    stim.validate(rate_hz)?;
    let mut out = vec![0.0; n];
    stim.fill(0, rate_hz, &mut out);
    Ok(out)
}
