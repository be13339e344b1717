use serde::{Deserialize, Serialize};

use super::{power_db, SpectrumRecord, Weighting};
use crate::error::{Error, Result};
use crate::modulator::transfer::DB_FLOOR;

/// Which bins count as signal, harmonics and in-band noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BandPlan {
    pub f_lo: f64,
    pub f_hi: f64,
    /// Bins on each side of a tone absorbed into its power.
    pub skirt_bins: usize,
    /// Bins `0..=dc_bins` are never counted.
    pub dc_bins: usize,
    /// Harmonics `2..=n_harmonics` are removed from the SNR noise integral.
    pub n_harmonics: usize,
}

impl Default for BandPlan {
    fn default() -> Self {
        Self {
            f_lo: 20.0,
            f_hi: 20e3,
            skirt_bins: 3,
            dc_bins: 1,
            n_harmonics: 10,
        }
    }
}

impl BandPlan {
    fn in_band(&self, spec: &SpectrumRecord, k: usize) -> bool {
        let f = spec.freq(k);
        k > self.dc_bins && f >= self.f_lo && f <= self.f_hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToneMetrics {
    pub f_sig: f64,
    /// Unweighted power in the signal skirt.
    pub signal_power: f64,
    /// Weighted in-band noise, harmonics excluded.
    pub noise_power: f64,
    /// Weighted in-band noise plus distortion.
    pub nd_power: f64,
    pub snr_db: f64,
    pub sndr_db: f64,
    pub thd_pct: f64,
    /// Signal at or below the noise-plus-distortion floor.
    pub below_floor: bool,
}

/// `f` aliased into `[0, fs/2]`.
pub fn fold_frequency(f: f64, fs: f64) -> f64 {
    let r = f.rem_euclid(fs);
    if r > fs / 2.0 {
        fs - r
    } else {
        r
    }
}

fn skirt(spec: &SpectrumRecord, f: f64, skirt_bins: usize) -> std::ops::RangeInclusive<usize> {
    let k = spec.bin_of(f);
    k.saturating_sub(skirt_bins)..=(k + skirt_bins).min(spec.psd.len() - 1)
}

/// Power in the bins within `skirt_bins` of `f`.
pub fn tone_power(spec: &SpectrumRecord, f: f64, skirt_bins: usize) -> f64 {
    spec.psd[skirt(spec, f, skirt_bins)].iter().sum::<f64>() * spec.bin_width()
}

/// Peak amplitude of the sinusoid at `f`.
pub fn tone_amplitude(spec: &SpectrumRecord, f: f64, skirt_bins: usize) -> f64 {
    (2.0 * tone_power(spec, f, skirt_bins)).sqrt()
}

fn ratio_db(num: f64, den: f64) -> f64 {
    if num <= 0.0 {
        DB_FLOOR
    } else if den <= 0.0 {
        -DB_FLOOR
    } else {
        10.0 * (num / den).log10()
    }
}

pub fn analyze_tone(
    spec: &SpectrumRecord,
    f_sig: f64,
    plan: &BandPlan,
    weighting: Weighting,
) -> ToneMetrics {
    let n = spec.psd.len();
    let df = spec.bin_width();
    let mut signal = vec![false; n];
    for k in skirt(spec, f_sig, plan.skirt_bins) {
        signal[k] = true;
    }
    let mut harmonic = vec![false; n];
    for h in 2..=plan.n_harmonics {
        let fh = fold_frequency(h as f64 * f_sig, spec.fs);
        for k in skirt(spec, fh, plan.skirt_bins) {
            if !signal[k] && k > plan.dc_bins {
                harmonic[k] = true;
            }
        }
    }

    let signal_power: f64 = (0..n)
        .filter(|&k| signal[k])
        .map(|k| spec.psd[k])
        .sum::<f64>()
        * df;
    let harmonic_power: f64 = (0..n)
        .filter(|&k| harmonic[k])
        .map(|k| spec.psd[k])
        .sum::<f64>()
        * df;

    let (mut noise, mut nd) = (0.0, 0.0);
    for k in (0..n).filter(|&k| !signal[k] && plan.in_band(spec, k)) {
        let p = spec.psd[k] * df * weighting.power_gain(spec.freq(k));
        nd += p;
        if !harmonic[k] {
            noise += p;
        }
    }
    let weighted_signal = signal_power * weighting.power_gain(f_sig);
    let sndr_db = ratio_db(weighted_signal, nd);
    let thd_pct = if signal_power > 0.0 {
        100.0 * (harmonic_power / signal_power).sqrt()
    } else {
        0.0
    };
    ToneMetrics {
        f_sig,
        signal_power,
        noise_power: noise,
        nd_power: nd,
        snr_db: ratio_db(weighted_signal, noise),
        sndr_db,
        thd_pct,
        below_floor: sndr_db <= 0.0,
    }
}

pub fn sndr_db(spec: &SpectrumRecord, f_sig: f64, weighting: Weighting) -> f64 {
    analyze_tone(spec, f_sig, &BandPlan::default(), weighting).sndr_db
}

pub fn snr_db(spec: &SpectrumRecord, f_sig: f64, weighting: Weighting) -> f64 {
    analyze_tone(spec, f_sig, &BandPlan::default(), weighting).snr_db
}

pub fn thd_pct(spec: &SpectrumRecord, f_sig: f64, n_harmonics: usize) -> f64 {
    let plan = BandPlan {
        n_harmonics,
        ..BandPlan::default()
    };
    analyze_tone(spec, f_sig, &plan, Weighting::Flat).thd_pct
}

/// Weighted power of all in-band bins.
pub fn band_power(spec: &SpectrumRecord, plan: &BandPlan, weighting: Weighting) -> f64 {
    (0..spec.psd.len())
        .filter(|&k| plan.in_band(spec, k))
        .map(|k| spec.psd[k] * weighting.power_gain(spec.freq(k)))
        .sum::<f64>()
        * spec.bin_width()
}

/// Least-squares slope of `psd_db` against `log10 f` over `[f_lo, f_hi]`.
pub fn slope_fit_db_per_decade(spec: &SpectrumRecord, f_lo: f64, f_hi: f64) -> Result<f64> {
    if !(f_lo < f_hi) {
        return Err(Error::config(format!(
            "fit range [{f_lo}, {f_hi}] is empty"
        )));
    }
    let pts: Vec<(f64, f64)> = (1..spec.psd.len())
        .map(|k| (spec.freq(k), spec.psd[k]))
        .filter(|&(f, _)| f >= f_lo && f <= f_hi)
        .map(|(f, p)| (f.log10(), power_db(p)))
        .collect();
    if pts.len() < 10 {
        return Err(Error::InsufficientSamples {
            needed: 10,
            available: pts.len(),
        });
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Mean density over fractional-octave bands spanning `[f_lo, f_hi]`,
/// widened to hold at least `min_bins` bins each. Returns
/// `(centre_hz, mean_db)` pairs.
pub fn band_average_db(
    spec: &SpectrumRecord,
    f_lo: f64,
    f_hi: f64,
    bands_per_octave: f64,
    min_bins: usize,
) -> Vec<(f64, f64)> {
    let df = spec.bin_width();
    let first = ((f_lo / df).ceil() as usize).max(1);
    let last = ((f_hi / df).floor() as usize).min(spec.psd.len() - 1);
    let step = 2f64.powf(1.0 / bands_per_octave);
    let min_bins = min_bins.max(1);
    let mut out = Vec::new();
    let mut start = first;
    while start <= last {
        let edge = spec.freq(start) * step;
        let mut end = start;
        while end <= last && (spec.freq(end) < edge || end - start < min_bins) {
            end += 1;
        }
        if last + 1 - end < min_bins {
            end = last + 1;
        }
        let mean = spec.psd[start..end].iter().sum::<f64>() / (end - start) as f64;
        let centre = (spec.freq(start) * spec.freq(end - 1)).sqrt();
        out.push((centre, power_db(mean)));
        start = end;
    }
    out
}

/// Largest band-averaged difference between two spectra on the same grid.
pub fn max_band_delta_db(
    a: &SpectrumRecord,
    b: &SpectrumRecord,
    f_lo: f64,
    f_hi: f64,
    bands_per_octave: f64,
    min_bins: usize,
) -> Result<f64> {
    if a.fs != b.fs || a.nfft != b.nfft {
        return Err(Error::config(format!(
            "spectra differ in grid: fs {} vs {}, nfft {} vs {}",
            a.fs, b.fs, a.nfft, b.nfft
        )));
    }
    let ba = band_average_db(a, f_lo, f_hi, bands_per_octave, min_bins);
    let bb = band_average_db(b, f_lo, f_hi, bands_per_octave, min_bins);
    Ok(ba
        .iter()
        .zip(&bb)
        .map(|(x, y)| (x.1 - y.1).abs())
        .fold(0.0, f64::max))
}
