//! Signal gain and third harmonic across frequency with a weakly nonlinear
//! DCO, next to the closed-form STF.

use vcosim::experiments::{frequency_sweep, Dither, Measurement};
use vcosim::modulator::transfer::stf_magnitude_db;
use vcosim::modulator::SimConfig;

fn main() -> vcosim::Result<()> {
    let mut cfg = SimConfig::default();
    cfg.stage2.dco.poly_nl = vec![0.0, 2.0];
    let meas = Measurement {
        n_avg: 2,
        ..Measurement::sweep()
    };
    let freqs = [1e3, 2e3, 5e3, 1e4, 2e4, 5e4, 1e5];
    let pts = frequency_sweep(&cfg, -10.0, &freqs, Dither::default(), &meas)?;
    println!("freq_hz   gain_db  model_db  h3_dbc");
    for p in pts {
        println!(
            "{:>8.1}  {:>7.3}  {:>8.3}  {:>6.1}",
            p.freq_hz,
            p.gain_db,
            stf_magnitude_db(cfg.k_vco_eff(), cfg.fs_hz, p.freq_hz),
            p.h3_dbc
        );
    }
    Ok(())
}
