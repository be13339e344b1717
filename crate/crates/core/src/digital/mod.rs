//! Bit-accurate digital loop elements.

mod gray;
mod sampler;

pub use gray::{
    binary_to_gray, extend_gray_width, gray_decode, gray_encode, gray_from_phases, gray_to_binary,
    GrayEncoder, GrayExtender,
};
pub use sampler::{
    sample, CounterTrajectory, SampleOutcome, Sampler, SamplerMode, SamplerModel, Transition,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Encoding {
    Binary,
    Gray,
}

impl Encoding {
    pub fn name(self) -> &'static str {
        match self {
            Encoding::Binary => "binary",
            Encoding::Gray => "gray",
        }
    }
}

/// Unsigned word of a declared width, tagged with its encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DigitalWord {
    pub value: u32,
    pub width: u32,
    pub encoding: Encoding,
}

impl DigitalWord {
    pub fn new(value: u32, width: u32, encoding: Encoding) -> Result<Self> {
        if !(1..=32).contains(&width) {
            return Err(Error::config(format!("word width {width} outside 1..=32")));
        }
        if u64::from(value) >= 1u64 << width {
            return Err(Error::logic(format!(
                "value {value} does not fit {width} bits"
            )));
        }
        Ok(Self {
            value,
            width,
            encoding,
        })
    }

    /// # Panics
    /// If `value` does not fit `width` bits.
    pub fn binary(value: u32, width: u32) -> Self {
        Self::new(value, width, Encoding::Binary).expect("binary word out of range")
    }

    /// # Panics
    /// If `value` does not fit `width` bits.
    pub fn gray(value: u32, width: u32) -> Self {
        Self::new(value, width, Encoding::Gray).expect("gray word out of range")
    }

    pub fn mask(&self) -> u32 {
        mask(self.width)
    }

    pub(crate) fn expect_binary(&self) -> Result<()> {
        self.expect(Encoding::Binary)
    }

    pub(crate) fn expect(&self, encoding: Encoding) -> Result<()> {
        if self.encoding == encoding {
            Ok(())
        } else {
            Err(Error::EncodingMismatch {
                expected: encoding.name(),
                found: self.encoding.name(),
            })
        }
    }
}

#[inline]
pub(crate) fn mask(width: u32) -> u32 {
    if width >= 32 {
        u32::MAX
    } else {
        (1u32 << width) - 1
    }
}

/// Modulo subtraction `(x + 2^B - w) mod 2^B` on binary words.
pub fn mod_subtract(x: DigitalWord, w: DigitalWord) -> Result<DigitalWord> {
    x.expect_binary()?;
    w.expect_binary()?;
    if x.width != w.width {
        return Err(Error::WidthMismatch {
            left: x.width,
            right: w.width,
        });
    }
    Ok(DigitalWord::binary(
        x.value.wrapping_sub(w.value) & x.mask(),
        x.width,
    ))
}

/// Streaming modular first difference with a signed, zero-centred result.
#[derive(Debug, Clone)]
pub struct FirstDifference {
    width: u32,
    prev: u32,
}

impl FirstDifference {
    /// Starts from `w[-1] = 0`.
    pub fn new(width: u32) -> Self {
        Self { width, prev: 0 }
    }

    #[inline]
    pub fn push(&mut self, w: u32) -> i32 {
        let half = 1i64 << (self.width - 1);
        let modulus = 1i64 << self.width;
        let d = (i64::from(w) - i64::from(self.prev) + half).rem_euclid(modulus) - half;
        self.prev = w;
        d as i32
    }
}

/// `y[n] = ((w[n] - w[n-1] + 2^(B-1)) mod 2^B) - 2^(B-1)` with `w[-1] = 0`.
pub fn first_difference(w: &[u32], width: u32) -> Result<Vec<i32>> {
    if w.len() < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            available: w.len(),
        });
    }
    if !(1..=31).contains(&width) {
        return Err(Error::config(format!("width {width} outside 1..=31")));
    }
    let mut fd = FirstDifference::new(width);
    Ok(w.iter().map(|&v| fd.push(v & mask(width))).collect())
}
