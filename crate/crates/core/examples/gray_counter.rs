//! Walks a 16-tap differential ring through one full period and shows the
//! Gray word, its binary value and the 6-bit extended count.

use vcosim::digital::{gray_to_binary, DigitalWord, GrayEncoder, GrayExtender};
use vcosim::oscillator::tap_waveforms;

fn main() -> vcosim::Result<()> {
    let taps = 16;
    let states = 2 * taps;
    let enc = GrayEncoder::new(4)?;
    println!("{} XOR gates for {taps} taps", enc.xor_gate_count());

    let word = |s: u32| -> vcosim::Result<DigitalWord> {
        let theta = (f64::from(s) + 0.5) / f64::from(states);
        let levels = tap_waveforms(theta, taps, true)?.mirrored();
        Ok(DigitalWord::gray(enc.encode(levels), 4))
    };
    let mut ext = GrayExtender::new(word(0)?, 6)?;
    println!("state  taps              gray  bin  extended");
    for s in 0..2 * states {
        let g = word(s)?;
        let wide = if s == 0 { ext.output() } else { ext.push(g)? };
        let theta = (f64::from(s % states) + 0.5) / f64::from(states);
        let pattern: String = tap_waveforms(theta, taps, true)?
            .to_vec()
            .iter()
            .map(|&b| if b { '1' } else { '0' })
            .collect();
        println!(
            "{s:>5}  {pattern}  {:04b}  {:>3}  {:>8}",
            g.value,
            gray_to_binary(g)?.value,
            gray_to_binary(wide)?.value
        );
    }
    Ok(())
}
