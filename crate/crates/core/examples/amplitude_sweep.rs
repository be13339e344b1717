//! SNR, SNDR and THD against input level, with the overload point and the
//! dynamic range derived from them.

use vcosim::experiments::{amplitude_sweep, coherent_frequency, Dither, Measurement};
use vcosim::modulator::SimConfig;
use vcosim::signal::Stimulus;

fn main() -> vcosim::Result<()> {
    let cfg = SimConfig::default();
    let meas = Measurement {
        nfft: 8192,
        n_avg: 2,
        ..Measurement::sweep()
    };
    let tone = Stimulus::tone(-36.0, coherent_frequency(1e3, cfg.fs_hz, meas.nfft));
    let levels = [
        -100.0, -90.0, -80.0, -40.0, -10.0, -6.0, -4.0, -3.0, -2.0, 0.0,
    ];
    let s = amplitude_sweep(&cfg, &tone, &levels, Dither { rms_v: 3e-6 }, &meas)?;
    println!("level_dbv  snr_dba  sndr_dba  thd_pct  locked");
    for p in &s.points {
        println!(
            "{:>9.1}  {:>7.2}  {:>8.2}  {:>7.3}  {}",
            p.level_dbv, p.snr_dba, p.sndr_dba, p.thd_pct, p.locked
        );
    }
    println!(
        "AOP {:?} dBV, SNR = 0 at {:?} dBV, DR {:?} dB",
        s.aop_dbv, s.snr_zero_dbv, s.dr_db
    );
    Ok(())
}
