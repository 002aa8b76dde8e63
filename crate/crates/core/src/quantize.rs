//! Uniform quantizer for the Uniform[-1, 1] source.
//!
//! `x = (2 D - q + 1) / q + C` with `D = Q(x)` the cell index and `C` the
//! in-cell offset, uniform on `[-1/q, 1/q]` and independent of `D`.

use serde::{Deserialize, Serialize};

use crate::error::{check_domain, Result, SenseError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UniformQuantizer {
    levels: u32,
}

impl UniformQuantizer {
    pub fn new(levels: u32) -> Result<Self> {
        if levels < 2 {
            return Err(SenseError::Domain {
                name: "q",
                value: levels as f64,
                domain: "[2, inf)",
            });
        }
        Ok(Self { levels })
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    /// Cell index in `0..q`. Cells are `[a, b)` except the last, which also
    /// holds `x = 1`.
    pub fn quantize(&self, x: f64) -> Result<u32> {
        check_domain("x", x, "[-1, 1]", (-1.0..=1.0).contains(&x))?;
        let q = self.levels as f64;
        let cell = ((x + 1.0) * q / 2.0).floor() as u32;
        Ok(cell.min(self.levels - 1))
    }

    /// Cell midpoint `(2 d - q + 1) / q`.
    pub fn dequantize(&self, d: u32) -> Result<f64> {
        if d >= self.levels {
            return Err(SenseError::IndexRange {
                index: d as usize,
                max: self.levels as usize - 1,
            });
        }
        Ok((2.0 * d as f64 - self.levels as f64 + 1.0) / self.levels as f64)
    }

    /// Mean squared error of reconstructing by the cell midpoint:
    /// the variance of Uniform[-1/q, 1/q], `1 / (3 q^2)`.
    pub fn mmse(&self) -> f64 {
        let q = self.levels as f64;
        1.0 / (3.0 * q * q)
    }
}

/// Lower bound `1 - ε / log2 q` on the measurement rate, clamped at zero.
pub fn rate_lower_bound(epsilon: f64, q: u32) -> Result<f64> {
    check_domain("epsilon", epsilon, "(0, inf)", epsilon > 0.0)?;
    let quantizer = UniformQuantizer::new(q)?;
    Ok((1.0 - epsilon / (quantizer.levels() as f64).log2()).max(0.0))
}
