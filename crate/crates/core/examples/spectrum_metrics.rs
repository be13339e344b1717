//! Audio metrics of a synthetic record: a 1 kHz tone, a -60 dBc third
//! harmonic and white noise, flat and A-weighted.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use vcosim::spectrum::{
    a_weight_db, analyze_tone, averaged_periodogram, BandPlan, Weighting, Window,
};

fn main() -> vcosim::Result<()> {
    let fs = 48_000.0;
    let nfft = 8192;
    let f = 171.0 * fs / nfft as f64;
    let noise = Normal::new(0.0, 1e-4).expect("valid sigma");
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let y: Vec<f64> = (0..nfft * 8)
        .map(|n| {
            let t = n as f64 / fs;
            let w = 2.0 * std::f64::consts::PI * f * t;
            w.sin() + 1e-3 * (3.0 * w).sin() + noise.sample(&mut rng)
        })
        .collect();
    let spec = averaged_periodogram(&y, nfft, 8, fs, Window::Hann)?;
    for weighting in [Weighting::Flat, Weighting::A] {
        let m = analyze_tone(&spec, f, &BandPlan::default(), weighting);
        println!(
            "{weighting:?}: SNR {:.2} dB  SNDR {:.2} dB  THD {:.4} %",
            m.snr_db, m.sndr_db, m.thd_pct
        );
    }
    for fr in [100.0, 1e3, 2.5e3, 10e3, 20e3] {
        println!("A({fr} Hz) = {:+.2} dB", a_weight_db(fr));
    }
    Ok(())
}
