//! Finitely supported probability mass functions over the integers.
//!
//! A [`ZDist`] is stored densely as an integer offset (the support minimum)
//! and a vector of masses for `offset, offset + 1, ...`. Values are kept in a
//! canonical trimmed form: both end masses are strictly positive and the
//! masses sum to one. All entropies are reported in bits.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{check_domain, Result, SenseError};

/// Input masses may be off from one by this much before they are rejected;
/// accepted inputs are renormalized exactly.
const INPUT_SUM_SLACK: f64 = 1e-6;

/// Finitely supported pmf on ℤ in canonical trimmed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawZDist")]
pub struct ZDist {
    offset: i64,
    masses: Vec<f64>,
}

#[derive(Deserialize)]
struct RawZDist {
    offset: i64,
    masses: Vec<f64>,
}

impl TryFrom<RawZDist> for ZDist {
    type Error = SenseError;

    fn try_from(raw: RawZDist) -> Result<Self> {
        ZDist::new(raw.offset, raw.masses)
    }
}

/// Result of cutting a pmf into its scaled restrictions to `(-inf, cut]` and
/// `[cut + 1, inf)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitResult {
    /// Mass of the left part.
    pub alpha1: f64,
    pub left: ZDist,
    pub right: ZDist,
    pub cut: i64,
}

impl SplitResult {
    /// Mixture `alpha1 * left + (1 - alpha1) * right`.
    pub fn recombine(&self) -> ZDist {
        let lo = self.left.min();
        let hi = self.right.max();
        let weights = (lo..=hi)
            .map(|k| self.alpha1 * self.left.prob(k) + (1.0 - self.alpha1) * self.right.prob(k))
            .collect();
        ZDist::from_weights(lo, weights).expect("mixture of valid pmfs has positive mass")
    }
}

impl ZDist {
    /// Validates and canonicalizes a pmf given as offset plus masses.
    ///
    /// Masses must be finite and nonnegative and sum to one up to a small
    /// slack; the stored copy is trimmed and renormalized.
    pub fn new(offset: i64, masses: Vec<f64>) -> Result<Self> {
        if masses.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(SenseError::InvalidDistribution(
                "masses must be finite and nonnegative".into(),
            ));
        }
        let total = neumaier_sum(masses.iter().copied());
        if (total - 1.0).abs() > INPUT_SUM_SLACK {
            return Err(SenseError::InvalidDistribution(format!(
                "masses sum to {total}, expected 1"
            )));
        }
        Self::from_weights(offset, masses).ok_or_else(|| {
            SenseError::InvalidDistribution("support must contain at least one point".into())
        })
    }

    /// Normalizes arbitrary nonnegative weights into a pmf. Returns `None`
    /// when the total weight is zero.
    pub(crate) fn from_weights(offset: i64, mut weights: Vec<f64>) -> Option<Self> {
        let first = weights.iter().position(|w| *w > 0.0)?;
        let last = weights.iter().rposition(|w| *w > 0.0)?;
        weights.truncate(last + 1);
        weights.drain(..first);
        let total = neumaier_sum(weights.iter().copied());
        if !(total > 0.0) || !total.is_finite() {
            return None;
        }
        for w in &mut weights {
            *w /= total;
        }
        Some(Self {
            offset: offset + first as i64,
            masses: weights,
        })
    }

    /// Point mass at `k`.
    pub fn point(k: i64) -> Self {
        Self {
            offset: k,
            masses: vec![1.0],
        }
    }

    /// Bernoulli(p) on {0, 1}.
    pub fn bernoulli(p: f64) -> Result<Self> {
        check_domain("p", p, "[0, 1]", (0.0..=1.0).contains(&p))?;
        Ok(Self::from_weights(0, vec![1.0 - p, p]).expect("bernoulli weights sum to one"))
    }

    /// Uniform pmf on `lo..=hi`.
    pub fn uniform(lo: i64, hi: i64) -> Result<Self> {
        if hi < lo {
            return Err(SenseError::InvalidDistribution(format!(
                "empty range {lo}..={hi}"
            )));
        }
        let len = (hi - lo + 1) as usize;
        Ok(Self {
            offset: lo,
            masses: vec![1.0 / len as f64; len],
        })
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// Smallest support point.
    pub fn min(&self) -> i64 {
        self.offset
    }

    /// Largest support point.
    pub fn max(&self) -> i64 {
        self.offset + self.masses.len() as i64 - 1
    }

    /// Width of the stored range (`max - min + 1`).
    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Points carrying positive mass, ascending.
    pub fn support(&self) -> Vec<i64> {
        self.iter()
            .filter(|(_, m)| *m > 0.0)
            .map(|(k, _)| k)
            .collect()
    }

    pub fn is_point_mass(&self) -> bool {
        self.masses.len() == 1
    }

    /// Probability of `k` (zero outside the stored range).
    pub fn prob(&self, k: i64) -> f64 {
        let idx = k - self.offset;
        if idx < 0 || idx >= self.masses.len() as i64 {
            0.0
        } else {
            self.masses[idx as usize]
        }
    }

    /// `(value, mass)` pairs over the stored range.
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.masses
            .iter()
            .enumerate()
            .map(move |(i, m)| (self.offset + i as i64, *m))
    }

    /// Most probable value; ties go to the smaller value.
    pub fn mode(&self) -> i64 {
        let mut best = 0;
        for (i, m) in self.masses.iter().enumerate() {
            if *m > self.masses[best] {
                best = i;
            }
        }
        self.offset + best as i64
    }

    pub fn mean(&self) -> f64 {
        neumaier_sum(self.iter().map(|(k, m)| k as f64 * m))
    }

    pub fn second_moment(&self) -> f64 {
        neumaier_sum(self.iter().map(|(k, m)| (k as f64) * (k as f64) * m))
    }

    /// Translate by `delta`.
    pub fn shift(&self, delta: i64) -> Self {
        Self {
            offset: self.offset + delta,
            masses: self.masses.clone(),
        }
    }
}

/// Shannon entropy in bits.
pub fn entropy(d: &ZDist) -> f64 {
    let h = neumaier_sum(d.masses.iter().filter(|m| **m > 0.0).map(|m| -m * m.log2()));
    h.max(0.0)
}

/// Binary entropy `h2(x)` in bits.
pub fn binary_entropy(x: f64) -> Result<f64> {
    check_domain("x", x, "[0, 1]", (0.0..=1.0).contains(&x))?;
    Ok(h2(x))
}

/// Binary entropy without the domain check; inputs outside (0, 1) give 0.
pub(crate) fn h2(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    // 1 - x is exact on [0.5, 1], so folding makes h2 exactly symmetric;
    // ln_1p keeps the (1 - y) term accurate for tiny y.
    let y = x.min(1.0 - x);
    -y * y.log2() - (1.0 - y) * (-y).ln_1p() / LN_2
}

/// Distribution of `X + Y` for independent `X ~ p`, `Y ~ q`.
pub fn convolve(p: &ZDist, q: &ZDist) -> ZDist {
    let mut out = vec![0.0; p.len() + q.len() - 1];
    for (i, a) in p.masses.iter().enumerate() {
        if *a == 0.0 {
            continue;
        }
        for (o, b) in out[i..].iter_mut().zip(&q.masses) {
            *o += a * b;
        }
    }
    ZDist::from_weights(p.offset + q.offset, out).expect("convolution of pmfs has positive mass")
}

/// Distribution of `-X`.
pub fn reflect(d: &ZDist) -> ZDist {
    let mut masses = d.masses.clone();
    masses.reverse();
    ZDist {
        offset: -d.max(),
        masses,
    }
}

/// Scaled restrictions of `d` to `(-inf, cut]` and `[cut + 1, inf)`.
pub fn split(d: &ZDist, cut: i64) -> Result<SplitResult> {
    if cut < d.min() || cut >= d.max() {
        return Err(SenseError::InvalidCut { cut });
    }
    let at = (cut - d.offset + 1) as usize;
    let (lo, hi) = d.masses.split_at(at);
    let alpha1 = neumaier_sum(lo.iter().copied());
    let beta = neumaier_sum(hi.iter().copied());
    if !(alpha1 > 0.0 && beta > 0.0) {
        return Err(SenseError::InvalidCut { cut });
    }
    let left = ZDist::from_weights(d.offset, lo.to_vec()).ok_or(SenseError::InvalidCut { cut })?;
    let right = ZDist::from_weights(cut + 1, hi.to_vec()).ok_or(SenseError::InvalidCut { cut })?;
    Ok(SplitResult {
        alpha1: alpha1 / (alpha1 + beta),
        left,
        right,
        cut,
    })
}

/// ℓ1 distance over the union of supports, in `[0, 2]`.
pub fn l1_distance(p: &ZDist, q: &ZDist) -> f64 {
    let lo = p.min().min(q.min());
    let hi = p.max().max(q.max());
    neumaier_sum((lo..=hi).map(|k| (p.prob(k) - q.prob(k)).abs()))
}

/// Relative entropy `D(p || q)` in bits; infinite when `p` is not
/// absolutely continuous with respect to `q`.
pub fn kl_divergence(p: &ZDist, q: &ZDist) -> f64 {
    kl_divergence_nats(p, q) / LN_2
}

/// Relative entropy in nats.
pub fn kl_divergence_nats(p: &ZDist, q: &ZDist) -> f64 {
    let mut terms = Vec::with_capacity(p.len());
    for (k, pk) in p.iter() {
        if pk == 0.0 {
            continue;
        }
        let qk = q.prob(k);
        if qk == 0.0 {
            return f64::INFINITY;
        }
        terms.push(pk * (pk / qk).ln());
    }
    neumaier_sum(terms).max(0.0)
}

/// Drops tail entries whose cumulative mass from either end is at most
/// `tau`, then renormalizes. Returns the pruned pmf and the removed mass.
pub fn prune(d: &ZDist, tau: f64) -> Result<(ZDist, f64)> {
    check_domain("tau", tau, "[0, 0.5)", (0.0..0.5).contains(&tau))?;
    if tau == 0.0 {
        return Ok((d.clone(), 0.0));
    }
    Ok(prune_tails(d, tau))
}

pub(crate) fn prune_tails(d: &ZDist, tau: f64) -> (ZDist, f64) {
    let m = &d.masses;
    let mut lo = 0;
    let mut cut_lo = 0.0;
    while lo + 1 < m.len() && cut_lo + m[lo] <= tau {
        cut_lo += m[lo];
        lo += 1;
    }
    let mut hi = m.len();
    let mut cut_hi = 0.0;
    while hi > lo + 1 && cut_hi + m[hi - 1] <= tau {
        cut_hi += m[hi - 1];
        hi -= 1;
    }
    if lo == 0 && hi == m.len() {
        return (d.clone(), 0.0);
    }
    let kept = ZDist::from_weights(d.offset + lo as i64, m[lo..hi].to_vec())
        .expect("pruning keeps positive mass");
    (kept, cut_lo + cut_hi)
}

/// Compensated (Neumaier) summation.
pub(crate) fn neumaier_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
