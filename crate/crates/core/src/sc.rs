//! Successive-cancellation recursion over ℤ.
//!
//! For a block of size `M` with independent inputs `x_a = x[..M/2]`,
//! `x_b = x[M/2..]`, the first half of the outputs is the half-size transform
//! of the sums `x_a + x_b`, and the second half is the half-size transform of
//! `x_b` (kind `G`) or `x_b - x_a` (kind `J`). Walking the halves in order,
//! every leaf receives the exact pmf of its output given all earlier outputs;
//! a [`LeafRule`] then fixes the leaf value (the true value when estimating
//! entropies, a MAP decision when decoding).
//!
//! Per-coordinate messages are stored as indices into a palette of distinct
//! pmfs, so identical messages are combined once per block.

use std::collections::HashMap;

use crate::error::{Result, SenseError};
use crate::transform::TransformKind;
use crate::zdist::{convolve, ZDist};

/// Decides the value of each synthesized output as the recursion reaches it.
pub(crate) trait LeafRule {
    /// `index` is zero-based. Returning `Ok(None)` stops the recursion.
    fn decide(&mut self, index: usize, message: &ZDist) -> Result<Option<i64>>;
}

/// Runs the recursion for `N = 2^depth` i.i.d. inputs with pmf `prior`.
/// Returns the input values implied by the leaf decisions, or `None` if the
/// rule stopped early.
pub(crate) fn run<R: LeafRule>(
    kind: TransformKind,
    depth: u32,
    prior: &ZDist,
    rule: &mut R,
) -> Result<Option<Vec<i64>>> {
    let n = 1usize << depth;
    let palette = vec![prior.clone()];
    let idx = vec![0u32; n];
    descend(kind, &palette, &idx, 0, rule)
}

fn descend<R: LeafRule>(
    kind: TransformKind,
    palette: &[ZDist],
    idx: &[u32],
    base: usize,
    rule: &mut R,
) -> Result<Option<Vec<i64>>> {
    if idx.len() == 1 {
        return Ok(rule.decide(base, &palette[idx[0] as usize])?.map(|v| vec![v]));
    }
    let h = idx.len() / 2;
    let (ia, ib) = idx.split_at(h);

    let mut sums: Vec<ZDist> = Vec::new();
    let mut seen: HashMap<(u32, u32), u32> = HashMap::new();
    let top_idx: Vec<u32> = ia
        .iter()
        .zip(ib)
        .map(|(&a, &b)| {
            *seen.entry((a, b)).or_insert_with(|| {
                sums.push(convolve(&palette[a as usize], &palette[b as usize]));
                (sums.len() - 1) as u32
            })
        })
        .collect();
    drop(seen);

    let Some(s) = descend(kind, &sums, &top_idx, base, rule)? else {
        return Ok(None);
    };
    drop(sums);

    let mut cond: Vec<ZDist> = Vec::new();
    let mut seen: HashMap<(u32, u32, i64), u32> = HashMap::new();
    let mut bottom_idx = Vec::with_capacity(h);
    for k in 0..h {
        let key = (ia[k], ib[k], s[k]);
        let slot = match seen.get(&key) {
            Some(slot) => *slot,
            None => {
                let m = plus_message(
                    kind,
                    &palette[ia[k] as usize],
                    &palette[ib[k] as usize],
                    s[k],
                )
                .ok_or(SenseError::InconsistentEvidence { index: base + 1 })?;
                cond.push(m);
                let slot = (cond.len() - 1) as u32;
                seen.insert(key, slot);
                slot
            }
        };
        bottom_idx.push(slot);
    }
    drop(seen);

    let Some(u) = descend(kind, &cond, &bottom_idx, base + h, rule)? else {
        return Ok(None);
    };

    let mut x = vec![0i64; 2 * h];
    for k in 0..h {
        let (xa, xb) = match kind {
            TransformKind::G => (s[k] - u[k], u[k]),
            TransformKind::J => ((s[k] - u[k]) / 2, (s[k] + u[k]) / 2),
        };
        x[k] = xa;
        x[k + h] = xb;
    }
    Ok(Some(x))
}

/// Law of the second-half variable given `x_a + x_b = s`: `x_b` for `G`,
/// `x_b - x_a = 2 x_b - s` for `J`. `None` when `s` has zero probability.
pub(crate) fn plus_message(kind: TransformKind, a: &ZDist, b: &ZDist, s: i64) -> Option<ZDist> {
    let weights: Vec<f64> = b.iter().map(|(v, m)| m * a.prob(s - v)).collect();
    match kind {
        TransformKind::G => ZDist::from_weights(b.min(), weights),
        TransformKind::J => {
            if weights.len() == 1 {
                return ZDist::from_weights(2 * b.min() - s, weights);
            }
            let mut spread = vec![0.0; 2 * weights.len() - 1];
            for (i, w) in weights.into_iter().enumerate() {
                spread[2 * i] = w;
            }
            ZDist::from_weights(2 * b.min() - s, spread)
        }
    }
}

/// Replays known outputs and records `-log2 P(y_i | y_1^{i-1})`.
pub(crate) struct KnownOutputs<'a> {
    pub outputs: &'a [i64],
    pub surprisal: Vec<f64>,
}

impl<'a> KnownOutputs<'a> {
    pub fn new(outputs: &'a [i64]) -> Self {
        Self {
            outputs,
            surprisal: vec![0.0; outputs.len()],
        }
    }
}

impl LeafRule for KnownOutputs<'_> {
    fn decide(&mut self, index: usize, message: &ZDist) -> Result<Option<i64>> {
        let y = self.outputs[index];
        let p = message.prob(y);
        if p <= 0.0 {
            return Err(SenseError::InconsistentEvidence { index: index + 1 });
        }
        self.surprisal[index] = 0.0 - p.log2();
        Ok(Some(y))
    }
}

/// Replays a prefix and captures the message at the first unknown index.
pub(crate) struct PrefixProbe<'a> {
    pub prefix: &'a [i64],
    pub captured: Option<ZDist>,
}

impl LeafRule for PrefixProbe<'_> {
    fn decide(&mut self, index: usize, message: &ZDist) -> Result<Option<i64>> {
        if index == self.prefix.len() {
            self.captured = Some(message.clone());
            return Ok(None);
        }
        let y = self.prefix[index];
        if message.prob(y) <= 0.0 {
            return Err(SenseError::InconsistentEvidence { index: index + 1 });
        }
        Ok(Some(y))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::{apply_fast, TransformPlan};

    #[test]
    fn replay_recovers_inputs() {
        let prior = ZDist::new(-1, vec![0.2, 0.5, 0.3]).unwrap();
        let x: Vec<i64> = vec![1, -1, 0, 0, 1, 1, -1, 0];
        for kind in [TransformKind::G, TransformKind::J] {
            let y = apply_fast(&TransformPlan::new(3, kind).unwrap(), &x).unwrap();
            let mut rule = KnownOutputs::new(&y);
            let back = run(kind, 3, &prior, &mut rule).unwrap().unwrap();
            assert_eq!(back, x);
            assert!(rule.surprisal.iter().all(|s| *s >= 0.0 && s.is_finite()));
        }
    }

    #[test]
    fn plus_message_j_has_parity_gaps() {
        let b = ZDist::bernoulli(0.5).unwrap();
        let m = plus_message(TransformKind::J, &b, &b, 1).unwrap();
        assert_eq!(m.offset(), -1);
        assert_eq!(m.masses(), &[0.5, 0.0, 0.5]);
        assert!(plus_message(TransformKind::J, &b, &b, 3).is_none());
    }
}
