use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::{coherent_frequency, Measurement};
use crate::error::{Error, Result};
use crate::modulator::transfer::{ntf_magnitude_db, to_db};
use crate::modulator::{lock_check, simulate_with, Injection, SimConfig};
use crate::signal::{dbv_to_peak, Stimulus};
use crate::spectrum::{tone_amplitude, Window};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NtfPoint {
    pub freq_hz: f64,
    pub measured_db: f64,
    pub closed_form_db: f64,
}

/// Estimates the NTF by adding a seeded integer sequence uniform on
/// `[-amplitude, amplitude]` to the sampled word and dividing the
/// output/injection cross spectrum by the injection spectrum.
pub fn measure_ntf(
    cfg: &SimConfig,
    amplitude: i32,
    nfft: usize,
    n_avg: usize,
    settle: usize,
) -> Result<Vec<NtfPoint>> {
    if amplitude < 1 {
        return Err(Error::config("injection amplitude must be at least 1"));
    }
    if nfft < 16 || !nfft.is_power_of_two() || n_avg == 0 {
        return Err(Error::config(
            "nfft must be a power of two >= 16 and n_avg >= 1",
        ));
    }
    let n = settle + nfft * n_avg;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x004E_5446);
    let d: Vec<i32> = (0..n)
        .map(|_| rng.random_range(-amplitude..=amplitude))
        .collect();
    let injection = Injection {
        quantizer: Some(&d),
        dco_input: None,
    };
    let trace = simulate_with(
        cfg,
        std::slice::from_ref(&cfg.stage2),
        &Stimulus::Silence,
        n,
        injection,
    )?;
    let paths = if cfg.pseudo_differential { 2.0 } else { 1.0 };

    let w = Window::Hann.coefficients(nfft);
    let fft = FftPlanner::new().plan_fft_forward(nfft);
    let half = nfft / 2;
    let mut sxy = vec![Complex64::default(); half + 1];
    let mut sxx = vec![0.0; half + 1];
    let mut ybuf = vec![Complex64::default(); nfft];
    let mut dbuf = vec![Complex64::default(); nfft];
    for s in 0..n_avg {
        let start = settle + s * nfft;
        for i in 0..nfft {
            ybuf[i] = Complex64::new(f64::from(trace.dout[start + i]) * w[i], 0.0);
            dbuf[i] = Complex64::new(f64::from(d[start + i]) * w[i], 0.0);
        }
        fft.process(&mut ybuf);
        fft.process(&mut dbuf);
        for k in 0..=half {
            sxy[k] += ybuf[k] * dbuf[k].conj();
            sxx[k] += dbuf[k].norm_sqr();
        }
    }
    let k_eff = cfg.stage2.effective_gain();
    Ok((1..=half)
        .map(|k| {
            let f = k as f64 * cfg.fs_hz / nfft as f64;
            NtfPoint {
                freq_hz: f,
                measured_db: to_db((sxy[k] / sxx[k]).norm() / paths),
                closed_form_db: ntf_magnitude_db(k_eff, cfg.fs_hz, f),
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InjectedTonePoint {
    pub freq_hz: f64,
    /// Output counts per volt injected at the last DCO input, in dB.
    pub gain_db: f64,
    /// Suppression relative to the same tone at the DCO output with the
    /// loop open.
    pub attenuation_db: f64,
    pub locked: bool,
}

/// Output response to a tone added at the control input of the last DCO,
/// with the main input silent.
pub fn stage2_tone_response(
    cfg: &SimConfig,
    level_dbv: f64,
    freqs_hz: &[f64],
    meas: &Measurement,
) -> Result<Vec<InjectedTonePoint>> {
    meas.validate()?;
    let peak_v = dbv_to_peak(level_dbv);
    let open_loop =
        peak_v * cfg.stage2.dco.k_tune * f64::from(cfg.stage2.dco.states_per_cycle) / cfg.fs_hz;
    freqs_hz
        .par_iter()
        .map(|&f| {
            let f = coherent_frequency(f, cfg.fs_hz, meas.nfft);
            let tone = Stimulus::tone(level_dbv, f);
            let injection = Injection {
                quantizer: None,
                dco_input: Some(&tone),
            };
            let trace = simulate_with(
                cfg,
                std::slice::from_ref(&cfg.stage2),
                &Stimulus::Silence,
                meas.n_samples(),
                injection,
            )?;
            let spec = meas.spectrum(cfg.fs_hz, &trace.dout_f64())?;
            let amp = tone_amplitude(&spec, f, meas.plan.skirt_bins);
            Ok(InjectedTonePoint {
                freq_hz: f,
                gain_db: to_db(amp / peak_v),
                attenuation_db: to_db(open_loop / amp),
                locked: lock_check(&trace).locked,
            })
        })
        .collect()
}
