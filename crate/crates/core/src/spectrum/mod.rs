//! Averaged periodograms and the audio metrics computed from them.

mod metrics;
mod weighting;

pub use metrics::{
    analyze_tone, band_average_db, band_power, fold_frequency, max_band_delta_db,
    slope_fit_db_per_decade, sndr_db, snr_db, thd_pct, tone_amplitude, tone_power, BandPlan,
    ToneMetrics,
};
pub use weighting::{a_weight_db, Weighting};

use std::f64::consts::TAU;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modulator::transfer::DB_FLOOR;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    #[default]
    Hann,
    Rectangular,
}

impl Window {
    /// Periodic window of length `n` (exact for averaged spectra).
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            Window::Hann => (0..n)
                .map(|i| 0.5 - 0.5 * (TAU * i as f64 / n as f64).cos())
                .collect(),
            Window::Rectangular => vec![1.0; n],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PsdUnit {
    /// Output counts squared per Hz.
    #[default]
    Lsb2PerHz,
    /// Volts squared per Hz.
    V2PerHz,
}

/// One-sided power spectral density.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumRecord {
    pub fs: f64,
    pub nfft: usize,
    pub n_avg: usize,
    pub window: Window,
    pub unit: PsdUnit,
    /// Linear density for bins `0..=nfft/2`.
    pub psd: Vec<f64>,
}

impl SpectrumRecord {
    pub fn bin_width(&self) -> f64 {
        self.fs / self.nfft as f64
    }

    pub fn freq(&self, bin: usize) -> f64 {
        bin as f64 * self.bin_width()
    }

    pub fn freqs(&self) -> Vec<f64> {
        (0..self.psd.len()).map(|k| self.freq(k)).collect()
    }

    /// Nearest bin to `f`.
    pub fn bin_of(&self, f: f64) -> usize {
        ((f / self.bin_width()).round() as usize).min(self.psd.len() - 1)
    }

    /// Density in dB, floored at [`DB_FLOOR`].
    pub fn psd_db(&self) -> Vec<f64> {
        self.psd.iter().map(|&p| power_db(p)).collect()
    }

    /// Total power, `sum(psd) * df`.
    pub fn total_power(&self) -> f64 {
        self.psd.iter().sum::<f64>() * self.bin_width()
    }
}

pub fn power_db(p: f64) -> f64 {
    if p > 0.0 {
        (10.0 * p.log10()).max(DB_FLOOR)
    } else {
        DB_FLOOR
    }
}

/// Mean of `n_avg` non-overlapping windowed periodograms of length `nfft`,
/// taken from the end of `y` so start-up transients are skipped.
///
/// Scaling is `2 |X_k|^2 / (fs * sum w^2)` (no doubling at DC and Nyquist),
/// which makes `sum(psd) * df` the mean power and keeps noise densities
/// independent of the window.
pub fn averaged_periodogram(
    y: &[f64],
    nfft: usize,
    n_avg: usize,
    fs: f64,
    window: Window,
) -> Result<SpectrumRecord> {
    if nfft < 4 || n_avg == 0 {
        return Err(Error::config(format!(
            "nfft {nfft} and n_avg {n_avg} must be >= 4 and >= 1"
        )));
    }
    if !(fs.is_finite() && fs > 0.0) {
        return Err(Error::config(format!("invalid sample rate {fs}")));
    }
    let needed = nfft * n_avg;
    if y.len() < needed {
        return Err(Error::InsufficientSamples {
            needed,
            available: y.len(),
        });
    }
    let w = window.coefficients(nfft);
    let sum_w2: f64 = w.iter().map(|v| v * v).sum();
    let fft = FftPlanner::new().plan_fft_forward(nfft);
    let half = nfft / 2;
    let mut acc = vec![0.0; half + 1];
    let mut buf = vec![Complex64::default(); nfft];
    let start = y.len() - needed;
    for seg in y[start..].chunks_exact(nfft) {
        for ((b, &x), &wi) in buf.iter_mut().zip(seg).zip(&w) {
            *b = Complex64::new(x * wi, 0.0);
        }
        fft.process(&mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b.norm_sqr();
        }
    }
    let scale = 1.0 / (fs * sum_w2 * n_avg as f64);
    let psd = acc
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let one_sided = if k == 0 || (k == half && nfft.is_multiple_of(2)) {
                1.0
            } else {
                2.0
            };
            p * scale * one_sided
        })
        .collect();
    Ok(SpectrumRecord {
        fs,
        nfft,
        n_avg,
        window,
        unit: PsdUnit::default(),
        psd,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn white(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn white_noise_density() {
        let fs = 48_000.0;
        let (nfft, n_avg) = (1024, 32);
        let spec =
            averaged_periodogram(&white(nfft * n_avg, 3), nfft, n_avg, fs, Window::Hann).unwrap();
        let analytic = 1.0 / (fs / 2.0);
        // 32 averages leave about 0.77 dB of per-bin spread (1 sigma); check
        // the band mean tightly and individual bins loosely.
        let inner = &spec.psd[4..nfft / 2 - 4];
        let mean = inner.iter().sum::<f64>() / inner.len() as f64;
        assert!((10.0 * (mean / analytic).log10()).abs() < 0.2);
        let within = inner
            .iter()
            .filter(|&&p| (10.0 * (p / analytic).log10()).abs() < 0.5)
            .count() as f64
            / inner.len() as f64;
        assert!(within > 0.4, "fraction within 0.5 dB: {within}");
    }

    #[test]
    fn parseval_holds() {
        let x = white(8192, 9);
        let power = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
        let spec = averaged_periodogram(&x, 8192, 1, 1.0, Window::Rectangular).unwrap();
        assert!((spec.total_power() / power - 1.0).abs() < 1e-9);
        let hann = averaged_periodogram(&x, 1024, 8, 1.0, Window::Hann).unwrap();
        assert!((hann.total_power() / power - 1.0).abs() < 0.05);
    }

    #[test]
    fn bin_centred_tone_amplitude() {
        let (fs, nfft) = (1.0e6, 4096);
        let f = 37.0 * fs / nfft as f64;
        let x: Vec<f64> = (0..nfft * 4)
            .map(|n| 0.8 * (TAU * f * n as f64 / fs).sin())
            .collect();
        let spec = averaged_periodogram(&x, nfft, 4, fs, Window::Hann).unwrap();
        let amp = tone_amplitude(&spec, f, 3);
        assert!((20.0 * (amp / 0.8).log10()).abs() < 0.05);
    }

    #[test]
    fn zero_input_floor() {
        let spec = averaged_periodogram(&[0.0; 256], 64, 4, 1.0, Window::Hann).unwrap();
        assert!(spec.psd_db().iter().all(|&v| v == DB_FLOOR));
    }

    #[test]
    fn short_input_rejected() {
        let r = averaged_periodogram(&[0.0; 100], 64, 2, 1.0, Window::Hann);
        assert!(matches!(r, Err(Error::InsufficientSamples { .. })));
    }
}
