use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{coherent_frequency, fit_line, run_tone, Dither, Measurement};
use crate::error::{Error, Result};
use crate::modulator::SimConfig;
use crate::signal::{dbv_to_peak, Stimulus};
use crate::spectrum::{fold_frequency, power_db, tone_power};

/// THD that defines the acoustic overload point.
pub const AOP_THD_PCT: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub level_dbv: f64,
    pub snr_dba: f64,
    pub sndr_dba: f64,
    pub thd_pct: f64,
    pub locked: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeSweep {
    pub points: Vec<SweepPoint>,
    pub aop_dbv: Option<f64>,
    /// Input level where the low-level SNR line crosses 0 dB.
    pub snr_zero_dbv: Option<f64>,
    pub dr_db: Option<f64>,
}

/// One run per level of `base` (levels ascending), in parallel; results
/// keep the input order.
pub fn amplitude_sweep(
    cfg: &SimConfig,
    base: &Stimulus,
    levels_dbv: &[f64],
    dither: Dither,
    meas: &Measurement,
) -> Result<AmplitudeSweep> {
    if base.components().is_empty() {
        return Err(Error::config("amplitude sweep needs a tone stimulus"));
    }
    if levels_dbv.is_empty() || levels_dbv.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::config(
            "sweep levels must be non-empty and ascending",
        ));
    }
    let points = levels_dbv
        .par_iter()
        .map(|&level| {
            let run = run_tone(cfg, &base.with_level(level), dither, meas)?;
            let m = run.metrics.expect("tone stimulus has metrics");
            Ok(SweepPoint {
                level_dbv: level,
                snr_dba: m.snr_db,
                sndr_dba: m.sndr_db,
                thd_pct: m.thd_pct,
                locked: run.lock.locked,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let aop_dbv = acoustic_overload(&points);
    let (snr_zero_dbv, dr_db) = match dynamic_range(&points, aop_dbv) {
        Some((zero, dr)) => (Some(zero), dr),
        None => (None, None),
    };
    Ok(AmplitudeSweep {
        points,
        aop_dbv,
        snr_zero_dbv,
        dr_db,
    })
}

/// Level where THD first reaches [`AOP_THD_PCT`] above the SNDR peak,
/// interpolated linearly between the neighbouring sweep points. Searching
/// from the peak keeps noise in the harmonic bins of small signals from
/// being read as distortion.
pub fn acoustic_overload(points: &[SweepPoint]) -> Option<f64> {
    let peak =
        (0..points.len()).max_by(|&a, &b| points[a].sndr_dba.total_cmp(&points[b].sndr_dba))?;
    let i = (peak..points.len()).find(|&i| points[i].thd_pct >= AOP_THD_PCT)?;
    if i == peak {
        return Some(points[i].level_dbv);
    }
    let (a, b) = (&points[i - 1], &points[i]);
    let t = (AOP_THD_PCT - a.thd_pct) / (b.thd_pct - a.thd_pct);
    Some(a.level_dbv + t * (b.level_dbv - a.level_dbv))
}

/// Extrapolates the SNR of the three lowest levels to 0 dB. Returns that
/// level and, when `aop_dbv` is known, the dynamic range.
pub fn dynamic_range(points: &[SweepPoint], aop_dbv: Option<f64>) -> Option<(f64, Option<f64>)> {
    let low: Vec<(f64, f64)> = points
        .iter()
        .take(3)
        .map(|p| (p.level_dbv, p.snr_dba))
        .collect();
    if low.len() < 3 {
        return None;
    }
    let (slope, intercept) = fit_line(&low)?;
    if slope <= 0.0 {
        return None;
    }
    let zero = -intercept / slope;
    Some((zero, aop_dbv.map(|aop| aop - zero)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StfPoint {
    pub freq_hz: f64,
    /// Output counts per volt of input, in dB.
    pub gain_db: f64,
    /// Third harmonic relative to the fundamental.
    pub h3_dbc: f64,
    pub locked: bool,
}

/// Fundamental gain and third harmonic at each frequency (snapped to
/// coherent bins), in parallel.
pub fn frequency_sweep(
    cfg: &SimConfig,
    level_dbv: f64,
    freqs_hz: &[f64],
    dither: Dither,
    meas: &Measurement,
) -> Result<Vec<StfPoint>> {
    if freqs_hz.is_empty() {
        return Err(Error::config("frequency list is empty"));
    }
    if let Some(f) = freqs_hz
        .iter()
        .find(|&&f| !(f > 0.0 && f < cfg.fs_hz / 2.0))
    {
        return Err(Error::config(format!("frequency {f} Hz outside (0, fs/2)")));
    }
    let peak_v = dbv_to_peak(level_dbv);
    let skirt = meas.plan.skirt_bins;
    let df = cfg.fs_hz / meas.nfft as f64;
    for &f in freqs_hz {
        let f = coherent_frequency(f, cfg.fs_hz, meas.nfft);
        let k1 = (f / df).round() as usize;
        let k3 = (fold_frequency(3.0 * f, cfg.fs_hz) / df).round() as usize;
        if k1 <= skirt || k1.abs_diff(k3) <= 2 * skirt {
            return Err(Error::config(format!(
                "{f} Hz is too close to DC or its third harmonic for nfft {}",
                meas.nfft
            )));
        }
    }
    freqs_hz
        .par_iter()
        .map(|&f| {
            let f = coherent_frequency(f, cfg.fs_hz, meas.nfft);
            let run = run_tone(cfg, &Stimulus::tone(level_dbv, f), dither, meas)?;
            let fund = tone_power(&run.spectrum, f, skirt);
            let h3 = tone_power(&run.spectrum, fold_frequency(3.0 * f, cfg.fs_hz), skirt);
            Ok(StfPoint {
                freq_hz: f,
                gain_db: power_db(2.0 * fund) - 20.0 * peak_v.log10(),
                h3_dbc: power_db(h3) - power_db(fund),
                locked: run.lock.locked,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(level: f64, snr: f64, thd: f64) -> SweepPoint {
        SweepPoint {
            level_dbv: level,
            snr_dba: snr,
            sndr_dba: snr.min(-20.0 * (thd / 100.0).log10()),
            thd_pct: thd,
            locked: true,
        }
    }

    #[test]
    fn aop_interpolates_above_peak() {
        let pts = vec![
            pt(-100.0, 6.0, 60.0),
            pt(-90.0, 16.0, 20.0),
            pt(-80.0, 26.0, 6.0),
            pt(-20.0, 86.0, 0.01),
            pt(-6.0, 98.0, 1.0),
            pt(-4.0, 99.0, 9.0),
        ];
        let aop = acoustic_overload(&pts).unwrap();
        assert!((aop - -5.0).abs() < 1e-12);
        let (zero, dr) = dynamic_range(&pts, Some(aop)).unwrap();
        assert!((zero - -106.0).abs() < 1e-9);
        assert!((dr.unwrap() - 101.0).abs() < 1e-9);
    }

    #[test]
    fn no_overload_reported_as_none() {
        let pts = vec![
            pt(-60.0, 40.0, 0.1),
            pt(-50.0, 50.0, 0.1),
            pt(-40.0, 60.0, 0.1),
        ];
        assert!(acoustic_overload(&pts).is_none());
        assert_eq!(dynamic_range(&pts, None).unwrap().1, None);
    }

    #[test]
    fn unsorted_levels_rejected() {
        let cfg = SimConfig::default();
        let r = amplitude_sweep(
            &cfg,
            &Stimulus::default(),
            &[-10.0, -20.0],
            Dither::default(),
            &Measurement::sweep(),
        );
        assert!(matches!(r, Err(Error::Config(_))));
    }

    #[test]
    fn unresolvable_frequency_rejected() {
        let meas = Measurement {
            nfft: 4096,
            ..Measurement::sweep()
        };
        let r = frequency_sweep(
            &SimConfig::default(),
            -10.0,
            &[1e3],
            Dither::default(),
            &meas,
        );
        assert!(matches!(r, Err(Error::Config(_))));
    }
}
