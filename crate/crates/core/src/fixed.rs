//! Fixed-point words as they travel on the NoC links and sit in LUT banks.
//!
//! A word is stored in an `i64` regardless of its format width so that
//! 32-bit unsigned formats fit without a second code path.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Word = i64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedPointFormat {
    pub total_bits: u32,
    pub frac_bits: u32,
    pub signed: bool,
}

impl Default for FixedPointFormat {
    /// Signed Q5.10 in a 16-bit word.
    fn default() -> Self {
        Self {
            total_bits: 16,
            frac_bits: 10,
            signed: true,
        }
    }
}

impl FixedPointFormat {
    pub fn new(total_bits: u32, frac_bits: u32, signed: bool) -> Result<Self> {
        let fmt = Self {
            total_bits,
            frac_bits,
            signed,
        };
        fmt.validate()?;
        Ok(fmt)
    }

    pub fn validate(&self) -> Result<()> {
        if self.frac_bits >= self.total_bits || self.total_bits > 32 {
            return Err(Error::InvalidArgument(format!(
                "fixed-point format needs 0 <= frac_bits < total_bits <= 32, got {}/{}",
                self.frac_bits, self.total_bits
            )));
        }
        Ok(())
    }

    pub fn min_word(&self) -> Word {
        if self.signed {
            -(1i64 << (self.total_bits - 1))
        } else {
            0
        }
    }

    pub fn max_word(&self) -> Word {
        if self.signed {
            (1i64 << (self.total_bits - 1)) - 1
        } else {
            (1i64 << self.total_bits) - 1
        }
    }

    /// Weight of one LSB.
    pub fn resolution(&self) -> f64 {
        (-(self.frac_bits as f64)).exp2()
    }

    pub fn min_value(&self) -> f64 {
        self.dequantize(self.min_word())
    }

    pub fn max_value(&self) -> f64 {
        self.dequantize(self.max_word())
    }

    pub fn saturate(&self, v: i128) -> Word {
        v.clamp(self.min_word() as i128, self.max_word() as i128) as Word
    }

    /// Round-to-nearest-even of `x * 2^frac_bits`, saturating. NaN maps to 0.
    pub fn quantize(&self, x: f64) -> Word {
        if x.is_nan() {
            return 0;
        }
        let scaled = (x * (self.frac_bits as f64).exp2()).round_ties_even();
        if scaled <= self.min_word() as f64 {
            self.min_word()
        } else if scaled >= self.max_word() as f64 {
            self.max_word()
        } else {
            scaled as Word
        }
    }

    pub fn dequantize(&self, w: Word) -> f64 {
        w as f64 * self.resolution()
    }

    /// Comparator threshold for a real breakpoint: `dequantize(w) >= d`
    /// holds exactly when `w >= threshold_word(d)`. Not saturated, so it may
    /// sit outside the representable word range.
    pub fn threshold_word(&self, d: f64) -> i64 {
        (d * (self.frac_bits as f64).exp2()).ceil() as i64
    }

    /// `slope * x + bias` with a full-width product, rounded back to the
    /// format with ties-to-even and saturated.
    pub fn mac(&self, slope: Word, x: Word, bias: Word) -> Word {
        let acc = slope as i128 * x as i128 + ((bias as i128) << self.frac_bits);
        self.saturate(shift_round_even(acc, self.frac_bits))
    }

    /// Bytes needed to hold one word in a memory bank.
    pub fn word_bytes(&self) -> usize {
        self.total_bits.div_ceil(8) as usize
    }

    /// Sign- or zero-extends the low `total_bits` of `raw`.
    pub fn from_raw_bits(&self, raw: u64) -> Word {
        let mask = if self.total_bits == 64 {
            u64::MAX
        } else {
            (1u64 << self.total_bits) - 1
        };
        let v = raw & mask;
        if self.signed && (v >> (self.total_bits - 1)) & 1 == 1 {
            (v | !mask) as i64
        } else {
            v as i64
        }
    }

    pub fn to_raw_bits(&self, w: Word) -> u64 {
        (w as u64) & ((1u64 << self.total_bits) - 1)
    }
}

fn shift_round_even(v: i128, shift: u32) -> i128 {
    if shift == 0 {
        return v;
    }
    let floor = v >> shift;
    let rem = v - (floor << shift);
    let half = 1i128 << (shift - 1);
    if rem > half || (rem == half && floor & 1 == 1) {
        floor + 1
    } else {
        floor
    }
}

impl fmt::Display for FixedPointFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.signed {
            write!(f, "Q{}.{}", self.total_bits - self.frac_bits - 1, self.frac_bits)
        } else {
            write!(f, "UQ{}.{}", self.total_bits - self.frac_bits, self.frac_bits)
        }
    }
}
