//! Kronecker-power transforms `J_N = [[1, 1], [-1, 1]]^{⊗n}` (Sylvester
//! Hadamard) and `G_N = [[1, 1], [0, 1]]^{⊗n}`, in natural row order.
//!
//! Each butterfly stage maps a pair `(a, b)` at distance `h` to
//! `(a + b, b - a)` for `J` and `(a + b, b)` for `G`. Row `i` of the output
//! therefore equals the inner product of row `i` of the Kronecker matrix with
//! the input, with no bit-reversal permutation.

use std::ops::{Add, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Result, SenseError};

/// Largest supported depth; `N = 2^20` is already far beyond what the
/// entropy computations can handle.
pub const MAX_DEPTH: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TransformKind {
    /// Sylvester Hadamard `[[1, 1], [-1, 1]]^{⊗n}`.
    J,
    /// Polar kernel over ℤ, `[[1, 1], [0, 1]]^{⊗n}`.
    G,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransformPlan {
    depth: u32,
    kind: TransformKind,
}

impl TransformPlan {
    pub fn new(depth: u32, kind: TransformKind) -> Result<Self> {
        if depth > MAX_DEPTH {
            return Err(SenseError::DepthTooLarge {
                depth,
                max: MAX_DEPTH,
            });
        }
        Ok(Self { depth, kind })
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// `N = 2^n`.
    pub fn size(&self) -> usize {
        1usize << self.depth
    }

    pub fn kind(&self) -> TransformKind {
        self.kind
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.size() {
            return Err(SenseError::LengthMismatch {
                expected: self.size(),
                actual: len,
            });
        }
        Ok(())
    }

    /// Matrix entry at zero-based `(row, col)`.
    pub fn entry(&self, row: usize, col: usize) -> i64 {
        // Per bit, the 2x2 kernel entry is 1 except at (1, 0): 0 for G, -1 for J.
        let below = row & !col;
        match self.kind {
            TransformKind::G => (below == 0) as i64,
            TransformKind::J => {
                if below.count_ones().is_multiple_of(2) {
                    1
                } else {
                    -1
                }
            }
        }
    }

    /// One-based row `i` of the matrix.
    pub fn row(&self, i: usize) -> Result<Vec<i64>> {
        if i == 0 || i > self.size() {
            return Err(SenseError::IndexRange {
                index: i,
                max: self.size(),
            });
        }
        Ok((0..self.size()).map(|c| self.entry(i - 1, c)).collect())
    }

    /// Dense matrix, row-major.
    pub fn matrix(&self) -> Vec<Vec<i64>> {
        let n = self.size();
        (0..n)
            .map(|r| (0..n).map(|c| self.entry(r, c)).collect())
            .collect()
    }
}

/// Applies the transform in place with `n` butterfly stages.
pub fn apply_in_place<T>(plan: &TransformPlan, x: &mut [T]) -> Result<()>
where
    T: Copy + Add<Output = T> + Sub<Output = T>,
{
    plan.check_len(x.len())?;
    let n = x.len();
    let mut h = 1;
    while h < n {
        for block in x.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (u, v) = (*a, *b);
                *a = u + v;
                if plan.kind == TransformKind::J {
                    *b = v - u;
                }
            }
        }
        h *= 2;
    }
    Ok(())
}

/// `Y = M x` via the fast butterfly, `O(N log N)`.
pub fn apply_fast<T>(plan: &TransformPlan, x: &[T]) -> Result<Vec<T>>
where
    T: Copy + Add<Output = T> + Sub<Output = T>,
{
    let mut y = x.to_vec();
    apply_in_place(plan, &mut y)?;
    Ok(y)
}

/// `Y = M x` by building the dense matrix, `O(N^2)`.
pub fn apply_naive<T>(plan: &TransformPlan, x: &[T]) -> Result<Vec<T>>
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Neg<Output = T> + Default,
{
    plan.check_len(x.len())?;
    let matrix = plan.matrix();
    Ok(matrix
        .iter()
        .map(|row| {
            row.iter().zip(x).fold(T::default(), |acc, (m, v)| match m {
                1 => acc + *v,
                -1 => acc - *v,
                _ => acc,
            })
        })
        .collect())
}

/// Floating-point inverse. `J^{-1} = J^T / N` stage by stage; `G` is
/// unit triangular.
pub fn invert(plan: &TransformPlan, y: &[f64]) -> Result<Vec<f64>> {
    plan.check_len(y.len())?;
    let mut x = y.to_vec();
    let n = x.len();
    let mut h = n / 2;
    while h >= 1 {
        for block in x.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (s, t) = (*a, *b);
                match plan.kind {
                    TransformKind::G => *a = s - t,
                    TransformKind::J => {
                        *a = 0.5 * (s - t);
                        *b = 0.5 * (s + t);
                    }
                }
            }
        }
        h /= 2;
    }
    Ok(x)
}

/// Exact integer inverse. Fails if `y` is not the image of an integer
/// vector.
pub fn invert_exact(plan: &TransformPlan, y: &[i64]) -> Result<Vec<i64>> {
    plan.check_len(y.len())?;
    let mut x = y.to_vec();
    let n = x.len();
    let mut h = n / 2;
    while h >= 1 {
        for block in x.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (s, t) = (*a, *b);
                match plan.kind {
                    TransformKind::G => *a = s - t,
                    TransformKind::J => {
                        if (s - t) % 2 != 0 {
                            return Err(SenseError::Unsupported(
                                "vector is not the Hadamard image of an integer vector",
                            ));
                        }
                        *a = (s - t) / 2;
                        *b = (s + t) / 2;
                    }
                }
            }
        }
        h /= 2;
    }
    Ok(x)
}

/// `J_N J_N^T`, computed densely. Only defined for `J`.
pub fn gram(plan: &TransformPlan) -> Result<Vec<Vec<i64>>> {
    if plan.kind != TransformKind::J {
        return Err(SenseError::Unsupported(
            "gram matrix is only defined for the orthogonal J family",
        ));
    }
    let m = plan.matrix();
    Ok(m.iter()
        .map(|r1| {
            m.iter()
                .map(|r2| r1.iter().zip(r2).map(|(a, b)| a * b).sum())
                .collect()
        })
        .collect())
}

/// Most-significant-first binary expansion of `index - 1`; bit 0 selects the
/// sum (minus) branch, bit 1 the plus branch.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitPath {
    bits: Vec<u8>,
}

impl BitPath {
    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    /// One-based index this path addresses.
    pub fn index(&self) -> usize {
        1 + self
            .bits
            .iter()
            .fold(0usize, |acc, b| (acc << 1) | *b as usize)
    }
}

pub fn bit_path(index: usize, depth: u32) -> Result<BitPath> {
    let max = 1usize << depth;
    if index == 0 || index > max {
        return Err(SenseError::IndexRange { index, max });
    }
    let v = index - 1;
    let bits = (0..depth)
        .rev()
        .map(|k| ((v >> k) & 1) as u8)
        .collect();
    Ok(BitPath { bits })
}
