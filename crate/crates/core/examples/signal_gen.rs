//! dBV bookkeeping and the stimuli the loop is driven with, sampled on the
//! engine grid.

use vcosim::modulator::SimConfig;
use vcosim::signal::{
    dbv_to_peak, parse_dbv, peak_to_dbv, Dithered, Excitation, Stimulus, ToneComponent,
};

fn main() -> vcosim::Result<()> {
    for text in ["-36 dBV", "0dBV", "-4.4"] {
        let dbv = parse_dbv(text)?;
        println!("{text:>8}: {:.6} V peak", dbv_to_peak(dbv));
    }
    println!("1 V peak = {:.3} dBV", peak_to_dbv(1.0));

    let cfg = SimConfig::default();
    let rate = cfg.engine_rate();
    let two_tone = Stimulus::Multitone {
        components: vec![
            ToneComponent::new(-20.0, 1e3),
            ToneComponent::new(-26.0, 7e3),
        ],
    };
    two_tone.validate(rate)?;
    let mut buf = vec![0.0; 4];
    for n in 0..4u64 {
        two_tone.fill(n * 96 * 512, rate, &mut buf);
        println!(
            "t = {:>8.3} us: {buf:.6?}",
            (n * 96 * 512) as f64 / rate * 1e6
        );
    }

    // Dither held for one sampling period of 512 engine steps.
    let quiet = Stimulus::Silence;
    let dithered = Dithered {
        base: &quiet,
        rms_v: 1e-5,
        hold: u64::from(cfg.oversampling),
        seed: 1,
    };
    let mut held = vec![0.0; 2048];
    dithered.fill(0, rate, &mut held);
    let levels: Vec<String> = held
        .iter()
        .step_by(512)
        .map(|v| format!("{v:+.3e}"))
        .collect();
    println!("dither per sampling period: {}", levels.join(" "));
    Ok(())
}
