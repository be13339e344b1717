//! Tuning curves of the input VCO and the DAC-driven DCO, and a free-running
//! phase accumulator read through a 6-bit counter.

use vcosim::modulator::SimConfig;
use vcosim::oscillator::{counter_view, instantaneous_frequency, OscillatorState};

fn main() -> vcosim::Result<()> {
    let cfg = SimConfig::default();
    let vco = &cfg.stage1;
    println!(
        "input VCO: {} MHz rest, {} states/cycle",
        vco.f0_hz / 1e6,
        vco.states_per_cycle
    );
    for v in [-0.5, -0.25, 0.0, 0.25, 0.5] {
        let f = instantaneous_frequency(vco, v);
        println!("  v = {v:+.2} V -> {:.3} MHz", f.hz / 1e6);
    }

    let dco = &cfg.stage2;
    let table = dco.dac.transfer_table();
    println!("DCO: {} MHz effective per LSB", dco.effective_gain() / 1e6);
    for code in [0u32, 16, 32, 48, 63] {
        let f = instantaneous_frequency(&dco.dco, table[code as usize]);
        println!(
            "  code {code:>2} -> {:+.4} V -> {:.3} MHz ({:.1} M states/s)",
            table[code as usize],
            f.hz / 1e6,
            f.hz * f64::from(dco.dco.states_per_cycle) / 1e6
        );
    }

    let dt = cfg.dt();
    let mut st = OscillatorState::new(0.0);
    let f = instantaneous_frequency(vco, 0.0).hz;
    print!("counter at fs:");
    for _ in 0..8 {
        for _ in 0..cfg.oversampling {
            st.advance(f, dt);
        }
        print!(
            " {}",
            counter_view(st.theta, vco.states_per_cycle, cfg.word_bits).value
        );
    }
    println!();
    Ok(())
}
