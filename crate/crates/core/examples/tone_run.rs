//! One second-order run at -36 dBV, 1 kHz: audio metrics, lock report and the
//! noise-shaping slope.

use vcosim::experiments::{coherent_frequency, run_tone, Dither, Measurement};
use vcosim::modulator::SimConfig;
use vcosim::signal::Stimulus;
use vcosim::spectrum::slope_fit_db_per_decade;

fn main() -> vcosim::Result<()> {
    let cfg = SimConfig::default();
    let meas = Measurement {
        n_avg: 8,
        ..Measurement::default()
    };
    let f = coherent_frequency(1e3, cfg.fs_hz, meas.nfft);
    let r = run_tone(&cfg, &Stimulus::tone(-36.0, f), Dither::default(), &meas)?;
    let m = r.metrics.expect("tone stimulus");
    println!("tone {f} Hz, {} samples", r.trace.len());
    println!(
        "SNDR {:.2} dB-A  SNR {:.2} dB-A  THD {:.4} %",
        m.sndr_db, m.snr_db, m.thd_pct
    );
    println!(
        "noise slope 20-200 kHz {:.1} dB/dec",
        slope_fit_db_per_decade(&r.spectrum, 20e3, 200e3)?
    );
    println!("lock: {:?}", r.lock);
    println!(
        "outputs after settling: {:?}",
        &r.trace.dout[meas.settle..meas.settle + 16]
    );
    Ok(())
}
