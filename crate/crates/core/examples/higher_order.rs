//! Cascading extra DCO stages raises the shaping order by one per stage.

use vcosim::experiments::{cascade_stages, coherent_frequency, run_tone_with, Dither, Measurement};
use vcosim::modulator::SimConfig;
use vcosim::signal::Stimulus;
use vcosim::spectrum::slope_fit_db_per_decade;

fn main() -> vcosim::Result<()> {
    let cfg = SimConfig::default();
    let meas = Measurement {
        n_avg: 4,
        ..Measurement::default()
    };
    let stim = Stimulus::tone(-36.0, coherent_frequency(1e3, cfg.fs_hz, meas.nfft));
    let half = 0.5 * cfg.fs_hz;
    for gains in [vec![cfg.stage2.effective_gain()], vec![half, half]] {
        let r = run_tone_with(
            &cfg,
            &cascade_stages(&gains),
            &stim,
            Dither::default(),
            &meas,
        )?;
        println!(
            "order {}: slope {:.1} dB/dec, SNDR {:.1} dB-A, locked {}",
            r.trace.order,
            slope_fit_db_per_decade(&r.spectrum, 20e3, 200e3)?,
            r.metrics.expect("tone").sndr_db,
            r.lock.locked
        );
    }
    Ok(())
}
