//! Finite-width subtraction standing in for the difference of two unbounded
//! counters, and the wrapped first difference at the output.

use vcosim::digital::{first_difference, mod_subtract, DigitalWord};

fn main() -> vcosim::Result<()> {
    let r = mod_subtract(DigitalWord::binary(3, 4), DigitalWord::binary(14, 4))?;
    println!("(3 - 14) mod 16 = {}", r.value);

    // Two counters that have each wrapped a different number of times.
    let (x_true, w_true) = (1000u32, 973u32);
    let d = mod_subtract(
        DigitalWord::binary(x_true % 64, 6),
        DigitalWord::binary(w_true % 64, 6),
    )?;
    println!(
        "x = {x_true}, w = {w_true}: 6-bit difference {} (true {})",
        d.value,
        x_true - w_true
    );

    // A counter advancing 13 to 15 counts per sample, read through 6 bits.
    let counts: Vec<u32> = (0..12u32)
        .scan(0, |acc, i| {
            *acc += 13 + i % 3;
            Some(*acc)
        })
        .collect();
    let wrapped: Vec<u32> = counts.iter().map(|c| c % 64).collect();
    let y = first_difference(&wrapped, 6)?;
    println!("count   {counts:?}");
    println!("wrapped {wrapped:?}");
    println!("y       {y:?}");
    Ok(())
}
