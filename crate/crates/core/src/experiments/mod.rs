//! Measurement recipes: single-tone runs, amplitude and frequency sweeps,
//! transfer-function estimates, architecture comparison and the
//! higher-order cascade.

mod compare;
mod sweep;
mod transfer;

pub use compare::{compare_architectures, Comparison, ComparisonOptions};
pub use sweep::{
    acoustic_overload, amplitude_sweep, dynamic_range, frequency_sweep, AmplitudeSweep, StfPoint,
    SweepPoint, AOP_THD_PCT,
};
pub use transfer::{measure_ntf, stage2_tone_response, InjectedTonePoint, NtfPoint};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modulator::{
    lock_check, simulate_higher_order, DcoStageConfig, LockReport, ModulatorTrace, SimConfig,
};
use crate::signal::{Dithered, Stimulus};
use crate::spectrum::{
    analyze_tone, averaged_periodogram, band_power, power_db, BandPlan, SpectrumRecord,
    ToneMetrics, Weighting, Window,
};

/// How a run is turned into a spectrum and metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Measurement {
    pub nfft: usize,
    pub n_avg: usize,
    /// Leading samples discarded before the analysed record.
    pub settle: usize,
    pub window: Window,
    pub weighting: Weighting,
    pub plan: BandPlan,
}

impl Default for Measurement {
    fn default() -> Self {
        Self {
            nfft: 16_384,
            n_avg: 32,
            settle: 2_048,
            window: Window::Hann,
            weighting: Weighting::A,
            plan: BandPlan::default(),
        }
    }
}

impl Measurement {
    /// Fewer averages, for sweeps.
    pub fn sweep() -> Self {
        Self {
            n_avg: 4,
            ..Self::default()
        }
    }

    pub fn n_samples(&self) -> usize {
        self.settle + self.nfft * self.n_avg
    }

    pub fn validate(&self) -> Result<()> {
        if self.nfft < 16 || !self.nfft.is_power_of_two() {
            return Err(Error::config(format!(
                "nfft {} must be a power of two >= 16",
                self.nfft
            )));
        }
        if self.n_avg == 0 {
            return Err(Error::config("n_avg must be positive"));
        }
        if !(self.plan.f_lo >= 0.0 && self.plan.f_lo < self.plan.f_hi) {
            return Err(Error::config("band edges must satisfy 0 <= f_lo < f_hi"));
        }
        Ok(())
    }

    pub fn spectrum(&self, fs: f64, y: &[f64]) -> Result<SpectrumRecord> {
        averaged_periodogram(y, self.nfft, self.n_avg, fs, self.window)
    }
}

/// Nearest odd FFT bin centre to `f`, so a tone completes a whole number
/// of cycles in every segment and visits distinct phases.
pub fn coherent_frequency(f: f64, fs: f64, nfft: usize) -> f64 {
    let df = fs / nfft as f64;
    let k = (f / df).round().max(1.0) as i64;
    let odd = if k % 2 == 1 {
        k
    } else if (k + 1) as f64 * df - f <= f - (k - 1) as f64 * df {
        k + 1
    } else {
        k - 1
    };
    odd as f64 * df
}

/// Stimulus with every tone moved to [`coherent_frequency`].
pub fn snap_stimulus(stim: &Stimulus, fs: f64, nfft: usize) -> Stimulus {
    match stim {
        Stimulus::Tone(c) => Stimulus::Tone(crate::signal::ToneComponent {
            frequency_hz: coherent_frequency(c.frequency_hz, fs, nfft),
            ..*c
        }),
        Stimulus::Multitone { components } => Stimulus::Multitone {
            components: components
                .iter()
                .map(|c| crate::signal::ToneComponent {
                    frequency_hz: coherent_frequency(c.frequency_hz, fs, nfft),
                    ..*c
                })
                .collect(),
        },
        other => other.clone(),
    }
}

/// Input dither: white Gaussian noise held for one sampling period.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Dither {
    pub rms_v: f64,
}

impl Dither {
    pub fn validate(&self) -> Result<()> {
        if !(self.rms_v.is_finite() && self.rms_v >= 0.0) {
            return Err(Error::config(format!("dither rms {} invalid", self.rms_v)));
        }
        Ok(())
    }

    fn apply<'a>(&self, cfg: &SimConfig, stim: &'a Stimulus) -> Dithered<'a, Stimulus> {
        Dithered {
            base: stim,
            rms_v: self.rms_v,
            hold: u64::from(cfg.oversampling),
            seed: cfg.seed ^ 0xD17E_u64,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ToneRun {
    pub trace: ModulatorTrace,
    pub spectrum: SpectrumRecord,
    /// Present when the stimulus has a tone.
    pub metrics: Option<ToneMetrics>,
    /// Weighted in-band output power in dB re 1 count^2.
    pub inband_noise_db: f64,
    pub lock: LockReport,
}

impl ToneRun {
    pub fn f_sig(&self) -> Option<f64> {
        self.metrics.map(|m| m.f_sig)
    }
}

/// Simulates `stages` on `stim` and analyses the differential output.
pub fn run_tone_with(
    cfg: &SimConfig,
    stages: &[DcoStageConfig],
    stim: &Stimulus,
    dither: Dither,
    meas: &Measurement,
) -> Result<ToneRun> {
    meas.validate()?;
    dither.validate()?;
    stim.validate(cfg.engine_rate())?;
    let input = dither.apply(cfg, stim);
    let trace = simulate_higher_order(cfg, stages, &input, meas.n_samples())?;
    let spectrum = meas.spectrum(cfg.fs_hz, &trace.dout_f64())?;
    let metrics = stim
        .components()
        .first()
        .map(|c| analyze_tone(&spectrum, c.frequency_hz, &meas.plan, meas.weighting));
    let inband_noise_db = power_db(band_power(&spectrum, &meas.plan, meas.weighting));
    let lock = lock_check(&trace);
    Ok(ToneRun {
        trace,
        spectrum,
        metrics,
        inband_noise_db,
        lock,
    })
}

/// [`run_tone_with`] on the configured second-order loop.
pub fn run_tone(
    cfg: &SimConfig,
    stim: &Stimulus,
    dither: Dither,
    meas: &Measurement,
) -> Result<ToneRun> {
    run_tone_with(cfg, std::slice::from_ref(&cfg.stage2), stim, dither, meas)
}

/// Stage list for an order-`gains.len() + 1` cascade, one DCO per gain
/// (effective states per second per LSB).
pub fn cascade_stages(gains: &[f64]) -> Vec<DcoStageConfig> {
    gains.iter().map(|&k| DcoStageConfig::for_gain(k)).collect()
}

/// Least-squares line through `(x, y)`; returns `(slope, intercept)`.
pub fn fit_line(pts: &[(f64, f64)]) -> Option<(f64, f64)> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx;
    Some((slope, my - slope * mx))
}

/// Slope in dB per decade of `(freq_hz, level_db)` pairs.
pub fn decade_slope(pts: &[(f64, f64)]) -> Option<f64> {
    let logged: Vec<(f64, f64)> = pts.iter().map(|&(f, v)| (f.log10(), v)).collect();
    fit_line(&logged).map(|(s, _)| s)
}
