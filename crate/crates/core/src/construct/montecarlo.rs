//! Monte-Carlo estimation of `H_i = H(Y_i | Y_1^{i-1})`.
//!
//! Each sample draws `X ~ p^N`, computes `Y = G X` and replays `Y` through
//! the successive-cancellation recursion, which yields the exact
//! `P(y_i | y_1^{i-1})` for every `i`. The estimate of `H_i` is the sample
//! mean of `-log2 P(y_i | y_1^{i-1})`.

use crate::error::{Result, SenseError};
use crate::rng::{stream_rng, Domain, ZSampler};
use crate::sc::{self, KnownOutputs, PrefixProbe};
use crate::transform::{apply_fast, TransformKind, TransformPlan};
use crate::zdist::ZDist;

/// Exact `P(Y_i = · | Y_1^{i-1} = prefix)` for `Y = M X`, `X ~ p^N`, where
/// `M` is the plan's matrix and `i = prefix.len() + 1`.
pub fn sc_conditional_pmf(
    plan: &TransformPlan,
    p: &ZDist,
    prefix: &[i64],
    i: usize,
) -> Result<ZDist> {
    let n = plan.size();
    if i == 0 || i > n {
        return Err(SenseError::IndexRange { index: i, max: n });
    }
    if prefix.len() != i - 1 {
        return Err(SenseError::LengthMismatch {
            expected: i - 1,
            actual: prefix.len(),
        });
    }
    let mut probe = PrefixProbe {
        prefix,
        captured: None,
    };
    sc::run(plan.kind(), plan.depth(), p, &mut probe)?;
    Ok(probe
        .captured
        .expect("recursion reaches every index before stopping"))
}

/// `-log2 P(y_i | y_1^{i-1})` for every `i`, for one realized input `x`.
pub fn surprisal_profile(plan: &TransformPlan, p: &ZDist, x: &[i64]) -> Result<Vec<f64>> {
    let y = apply_fast(plan, x)?;
    let mut rule = KnownOutputs::new(&y);
    sc::run(plan.kind(), plan.depth(), p, &mut rule)?;
    Ok(rule.surprisal)
}

/// Sample means and standard errors of the per-index surprisal.
#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate {
    pub entropies: Vec<f64>,
    /// Standard error of each mean; NaN when only one sample was drawn.
    pub stderr: Vec<f64>,
    pub samples: usize,
}

/// Estimates all `N = 2^n` conditional entropies from `samples` draws.
/// Sample `k` uses stream `k` of the source-sample domain of `seed`.
pub fn estimate_entropies_mc(p: &ZDist, n: u32, samples: usize, seed: u64) -> Result<McEstimate> {
    if samples == 0 {
        return Err(SenseError::Domain {
            name: "samples",
            value: 0.0,
            domain: "[1, inf)",
        });
    }
    let plan = TransformPlan::new(n, TransformKind::G)?;
    let size = plan.size();
    let sampler = ZSampler::new(p);

    // Welford accumulators, updated in sample order.
    let mut mean = vec![0.0f64; size];
    let mut m2 = vec![0.0f64; size];
    for k in 0..samples {
        let mut rng = stream_rng(seed, Domain::SourceSample, k as u64);
        let x = sampler.sample_vec(&mut rng, size);
        let s = surprisal_profile(&plan, p, &x)?;
        let count = (k + 1) as f64;
        for ((mu, acc), v) in mean.iter_mut().zip(m2.iter_mut()).zip(s) {
            let delta = v - *mu;
            *mu += delta / count;
            *acc += delta * (v - *mu);
        }
    }
    let stderr = m2
        .iter()
        .map(|acc| {
            if samples < 2 {
                f64::NAN
            } else {
                (acc / (samples - 1) as f64 / samples as f64).sqrt()
            }
        })
        .collect();
    Ok(McEstimate {
        entropies: mean,
        stderr,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conditional_pmf_examples() {
        let fair = ZDist::bernoulli(0.5).unwrap();
        let plan = TransformPlan::new(1, TransformKind::G).unwrap();
        let first = sc_conditional_pmf(&plan, &fair, &[], 1).unwrap();
        assert_eq!(first.masses(), &[0.25, 0.5, 0.25]);
        assert_eq!(sc_conditional_pmf(&plan, &fair, &[2], 2).unwrap(), ZDist::point(1));
        let mid = sc_conditional_pmf(&plan, &fair, &[1], 2).unwrap();
        assert_eq!(mid, ZDist::new(0, vec![0.5, 0.5]).unwrap());
    }

    #[test]
    fn conditional_pmf_errors() {
        let fair = ZDist::bernoulli(0.5).unwrap();
        let plan = TransformPlan::new(1, TransformKind::G).unwrap();
        assert_eq!(
            sc_conditional_pmf(&plan, &fair, &[5], 2),
            Err(SenseError::InconsistentEvidence { index: 1 })
        );
        assert!(sc_conditional_pmf(&plan, &fair, &[], 3).is_err());
        assert!(sc_conditional_pmf(&plan, &fair, &[1], 1).is_err());
    }

    #[test]
    fn j_plan_conditionals() {
        let fair = ZDist::bernoulli(0.5).unwrap();
        let plan = TransformPlan::new(1, TransformKind::J).unwrap();
        // Y_2 = X_2 - X_1 given X_1 + X_2 = 1 is ±1 with equal odds.
        let d = sc_conditional_pmf(&plan, &fair, &[1], 2).unwrap();
        assert_eq!(d.offset(), -1);
        assert_eq!(d.masses(), &[0.5, 0.0, 0.5]);
    }

    #[test]
    fn mc_examples() {
        let fair = ZDist::bernoulli(0.5).unwrap();
        let est = estimate_entropies_mc(&fair, 1, 10_000, 11).unwrap();
        assert!((est.entropies[0] - 1.5).abs() <= 3.0 * est.stderr[0]);
        assert!((est.entropies[1] - 0.5).abs() <= 3.0 * est.stderr[1]);

        let point = estimate_entropies_mc(&ZDist::point(0), 3, 50, 1).unwrap();
        assert!(point.entropies.iter().all(|h| *h == 0.0));

        let again = estimate_entropies_mc(&fair, 1, 10_000, 11).unwrap();
        assert_eq!(est, again);

        assert!(estimate_entropies_mc(&fair, 1, 0, 11).is_err());
        let one = estimate_entropies_mc(&fair, 1, 1, 11).unwrap();
        assert!(one.stderr[0].is_nan());
    }
}
