use super::{mask, DigitalWord, Encoding};
use crate::error::{Error, Result};
use crate::oscillator::Taps;

/// Binary-reflected Gray code of `b`.
#[inline]
pub fn gray_encode(b: u32) -> u32 {
    b ^ (b >> 1)
}

/// Inverse of [`gray_encode`] (XOR prefix from the MSB down).
#[inline]
pub fn gray_decode(mut g: u32) -> u32 {
    g ^= g >> 16;
    g ^= g >> 8;
    g ^= g >> 4;
    g ^= g >> 2;
    g ^= g >> 1;
    g
}

pub fn binary_to_gray(b: DigitalWord) -> Result<DigitalWord> {
    b.expect(Encoding::Binary)?;
    Ok(DigitalWord::gray(gray_encode(b.value), b.width))
}

pub fn gray_to_binary(g: DigitalWord) -> Result<DigitalWord> {
    g.expect(Encoding::Gray)?;
    Ok(DigitalWord::binary(
        gray_decode(g.value) & g.mask(),
        g.width,
    ))
}

/// XOR network turning the `M = 2^B` taps of a differential ring into a
/// `B`-bit Gray word.
///
/// Bit `n < B-1` is the parity of taps `k = 2^n (2j - 1)`, `j = 1..M/2^(n+1)`;
/// the MSB is `phi_{M/2} xor phi_0`. Each bit is one parity mask.
#[derive(Debug, Clone)]
pub struct GrayEncoder {
    bits: u32,
    masks: Vec<u64>,
}

impl GrayEncoder {
    pub fn new(bits: u32) -> Result<Self> {
        if !(2..=6).contains(&bits) {
            return Err(Error::config(format!(
                "Gray encoder supports 2..=6 bits (4..=64 taps), got {bits}"
            )));
        }
        let taps = 1u32 << bits;
        let mut masks = Vec::with_capacity(bits as usize);
        for n in 0..bits - 1 {
            let stride = 1u32 << n;
            let mut m = 0u64;
            for j in 1..=taps >> (n + 1) {
                m |= 1 << (stride * (2 * j - 1));
            }
            masks.push(m);
        }
        masks.push(1 << (taps / 2) | 1);
        Ok(Self { bits, masks })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// Number of two-input XOR gates in the network.
    pub fn xor_gate_count(&self) -> u32 {
        self.masks.iter().map(|m| m.count_ones() - 1).sum()
    }

    #[inline]
    pub fn encode(&self, taps: Taps) -> u32 {
        self.masks.iter().enumerate().fold(0, |acc, (n, m)| {
            acc | ((taps.bits & m).count_ones() & 1) << n
        })
    }
}

/// Encodes the taps of a `2^B`-tap differential ring as a `B`-bit Gray word.
pub fn gray_from_phases(taps: Taps, bits: u32) -> Result<DigitalWord> {
    if !taps.len.is_power_of_two() || taps.len != 1 << bits {
        return Err(Error::config(format!(
            "{} taps cannot drive a {bits}-bit encoder (need 2^B taps)",
            taps.len
        )));
    }
    let enc = GrayEncoder::new(bits)?;
    Ok(DigitalWord::gray(enc.encode(taps), bits))
}

/// Widens a short Gray count by counting its wraps, as the start-up-reset
/// extension logic does in hardware.
///
/// Must see every state change in order; the output is `gray(c mod 2^W)`
/// with `c` the number of input steps since reset, up to a constant offset.
#[derive(Debug, Clone)]
pub struct GrayExtender {
    in_bits: u32,
    out_bits: u32,
    high: u32,
    low: u32,
}

impl GrayExtender {
    /// Resets with the current short Gray word `initial`.
    pub fn new(initial: DigitalWord, out_bits: u32) -> Result<Self> {
        initial.expect(Encoding::Gray)?;
        if out_bits < initial.width || out_bits > 31 {
            return Err(Error::config(format!(
                "cannot extend {} bits to {out_bits}",
                initial.width
            )));
        }
        Ok(Self {
            in_bits: initial.width,
            out_bits,
            high: 0,
            low: gray_decode(initial.value) & mask(initial.width),
        })
    }

    pub fn output(&self) -> DigitalWord {
        let count = (self.high << self.in_bits | self.low) & mask(self.out_bits);
        DigitalWord::gray(gray_encode(count), self.out_bits)
    }

    /// Feeds the next short word; it must equal the current one or be its
    /// successor.
    pub fn push(&mut self, gc: DigitalWord) -> Result<DigitalWord> {
        gc.expect(Encoding::Gray)?;
        if gc.width != self.in_bits {
            return Err(Error::WidthMismatch {
                left: gc.width,
                right: self.in_bits,
            });
        }
        self.push_raw(gc.value)?;
        Ok(self.output())
    }

    #[inline]
    pub(crate) fn push_raw(&mut self, gc: u32) -> Result<u32> {
        let low_mask = mask(self.in_bits);
        let low = gray_decode(gc) & low_mask;
        match low.wrapping_sub(self.low) & low_mask {
            0 => {}
            1 => {
                if low == 0 {
                    self.high = (self.high + 1) & mask(self.out_bits - self.in_bits);
                }
                self.low = low;
            }
            step => {
                return Err(Error::logic(format!(
                    "Gray count jumped by {step} states ({} -> {low})",
                    self.low
                )))
            }
        }
        Ok(gray_encode(
            (self.high << self.in_bits | self.low) & mask(self.out_bits),
        ))
    }
}

/// One-shot form: advance `ext` with `gc` and return the widened word.
pub fn extend_gray_width(ext: &mut GrayExtender, gc: DigitalWord) -> Result<DigitalWord> {
    ext.push(gc)
}
