//! Reduces the loop block diagram to its noise transfer function, then
//! measures the NTF by injecting noise at the sampled word.

use vcosim::experiments::measure_ntf;
use vcosim::modulator::linear::{evaluate, ntf_closed_form, ntf_from_blocks};
use vcosim::modulator::transfer::ntf_pole;
use vcosim::modulator::SimConfig;

fn main() -> vcosim::Result<()> {
    let cfg = SimConfig::default();
    let a = cfg.stage2.effective_gain() / cfg.fs_hz;
    let derived = ntf_from_blocks();
    println!(
        "reduced form equals closed form: {}",
        derived.equivalent(&ntf_closed_form())
    );
    let (num, den) = evaluate(&derived, a);
    println!(
        "a = {a}: num {num:?}, den {den:?}, pole {:?}",
        ntf_pole(cfg.stage2.effective_gain(), cfg.fs_hz)
    );

    let pts = measure_ntf(&cfg, 4, 2048, 8, 512)?;
    println!("freq_hz     measured_db  closed_form_db");
    for p in pts.iter().step_by(64) {
        println!(
            "{:>10.0}  {:>11.2}  {:>14.2}",
            p.freq_hz, p.measured_db, p.closed_form_db
        );
    }
    Ok(())
}
