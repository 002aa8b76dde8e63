//! Exact density evolution of synthesized sources over ℤ.
//!
//! A [`SynthSource`] is the law of a pair `(U, S)` written as a mixture over
//! realized side information `S = s`: each context carries `P(S = s)` and the
//! conditional pmf of `U`. Taking two independent copies,
//!
//! * the minus child is `(U1 + U2, (S1, S2))`,
//! * the plus child is `(U2, (U1 + U2, S1, S2))`.
//!
//! Conditional entropies are invariant under translating a conditional pmf,
//! and both operations commute with such translations, so contexts whose
//! conditionals agree up to a shift are merged.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{check_domain, Result, SenseError};
use crate::sc::plus_message;
use crate::transform::{TransformKind, MAX_DEPTH};
use crate::zdist::{convolve, entropy, neumaier_sum, prune_tails, ZDist};

#[derive(Debug, Clone, PartialEq)]
pub struct Context {
    pub weight: f64,
    pub cond: ZDist,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSource {
    contexts: Vec<Context>,
    /// Upper bound on probability mass discarded by pruning so far.
    pruned_mass: f64,
}

/// Knobs for exact evolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolveOptions {
    /// Contexts lighter than this are dropped and conditional tails with at
    /// most this much mass are trimmed. Zero disables pruning.
    pub prune_tau: f64,
    /// ℓ1 tolerance under which two conditionals (up to shift) merge.
    pub merge_tol: f64,
    /// Refuse to build a source with more contexts (or pair products) than
    /// this.
    pub max_contexts: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            prune_tau: 1e-12,
            merge_tol: 1e-9,
            max_contexts: 1_000_000,
        }
    }
}

impl EvolveOptions {
    /// No pruning; merging only absorbs floating-point noise.
    pub fn unpruned() -> Self {
        Self {
            prune_tau: 0.0,
            merge_tol: 1e-12,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        check_domain(
            "prune_tau",
            self.prune_tau,
            "[0, 0.5)",
            (0.0..0.5).contains(&self.prune_tau),
        )?;
        check_domain(
            "merge_tol",
            self.merge_tol,
            "[0, 2]",
            (0.0..=2.0).contains(&self.merge_tol),
        )
    }
}

impl SynthSource {
    /// A single context with no side information.
    pub fn base(p: &ZDist) -> Self {
        Self {
            contexts: vec![Context {
                weight: 1.0,
                cond: p.clone(),
            }],
            pruned_mass: 0.0,
        }
    }

    pub fn contexts(&self) -> &[Context] {
        &self.contexts
    }

    pub fn len(&self) -> usize {
        self.contexts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contexts.is_empty()
    }

    pub fn pruned_mass(&self) -> f64 {
        self.pruned_mass
    }

    pub fn total_weight(&self) -> f64 {
        neumaier_sum(self.contexts.iter().map(|c| c.weight))
    }
}

/// `H(U | S) = Σ weight · H(cond)`, in bits.
pub fn entropy_of(s: &SynthSource) -> f64 {
    neumaier_sum(s.contexts.iter().map(|c| c.weight * entropy(&c.cond)))
}

struct Merger {
    tol: f64,
    prune_tau: f64,
    index: HashMap<Vec<i64>, usize>,
    out: Vec<Context>,
    removed: f64,
}

impl Merger {
    fn new(opts: &EvolveOptions) -> Self {
        Self {
            tol: opts.merge_tol,
            prune_tau: opts.prune_tau,
            index: HashMap::new(),
            out: Vec::new(),
            removed: 0.0,
        }
    }

    fn key(&self, cond: &ZDist) -> Vec<i64> {
        let m = cond.masses();
        if self.tol == 0.0 {
            m.iter().map(|v| v.to_bits() as i64).collect()
        } else {
            let step = self.tol / m.len() as f64;
            m.iter().map(|v| (v / step).round() as i64).collect()
        }
    }

    fn push(&mut self, weight: f64, cond: ZDist) {
        if weight <= 0.0 {
            return;
        }
        let cond = if self.prune_tau > 0.0 && !cond.is_point_mass() {
            let (kept, lost) = prune_tails(&cond, self.prune_tau);
            self.removed += weight * lost;
            kept
        } else {
            cond
        };
        let key = self.key(&cond);
        match self.index.get(&key) {
            Some(&i) => self.out[i].weight += weight,
            None => {
                self.index.insert(key, self.out.len());
                self.out.push(Context { weight, cond });
            }
        }
    }

    fn finish(self, inherited: f64, depth: u32, cap: usize) -> Result<SynthSource> {
        let prune_tau = self.prune_tau;
        let mut removed = self.removed;
        let mut contexts = self.out;
        if prune_tau > 0.0 {
            contexts.retain(|c| {
                if c.weight < prune_tau {
                    removed += c.weight;
                    false
                } else {
                    true
                }
            });
        }
        if contexts.len() > cap {
            return Err(SenseError::Budget {
                depth,
                count: contexts.len(),
                cap,
            });
        }
        let total = neumaier_sum(contexts.iter().map(|c| c.weight));
        for c in &mut contexts {
            c.weight /= total;
        }
        Ok(SynthSource {
            contexts,
            pruned_mass: inherited + removed,
        })
    }
}

fn check_pairs(s: &SynthSource, depth: u32, cap: usize) -> Result<()> {
    let pairs = s.len().saturating_mul(s.len());
    if pairs > cap.saturating_mul(16) {
        return Err(SenseError::Budget {
            depth,
            count: pairs,
            cap,
        });
    }
    Ok(())
}

/// Minus child: `U1 + U2` given both pasts.
pub fn evolve_minus(s: &SynthSource, opts: &EvolveOptions) -> Result<SynthSource> {
    evolve_minus_at(s, opts, 0)
}

/// Plus child: `U2` given `U1 + U2` and both pasts.
pub fn evolve_plus(s: &SynthSource, opts: &EvolveOptions) -> Result<SynthSource> {
    evolve_plus_at(s, opts, 0)
}

fn evolve_minus_at(s: &SynthSource, opts: &EvolveOptions, depth: u32) -> Result<SynthSource> {
    opts.validate()?;
    check_pairs(s, depth, opts.max_contexts)?;
    let mut merger = Merger::new(opts);
    let cs = &s.contexts;
    for (i, a) in cs.iter().enumerate() {
        merger.push(a.weight * a.weight, convolve(&a.cond, &a.cond));
        for b in &cs[i + 1..] {
            merger.push(2.0 * a.weight * b.weight, convolve(&a.cond, &b.cond));
        }
    }
    merger.finish(2.0 * s.pruned_mass, depth, opts.max_contexts)
}

fn evolve_plus_at(s: &SynthSource, opts: &EvolveOptions, depth: u32) -> Result<SynthSource> {
    opts.validate()?;
    check_pairs(s, depth, opts.max_contexts)?;
    let mut merger = Merger::new(opts);
    for a in &s.contexts {
        for b in &s.contexts {
            let sum = convolve(&a.cond, &b.cond);
            let w = a.weight * b.weight;
            for (sigma, ps) in sum.iter() {
                if ps <= 0.0 {
                    continue;
                }
                if let Some(cond) = plus_message(TransformKind::G, &a.cond, &b.cond, sigma) {
                    merger.push(w * ps, cond);
                }
            }
        }
    }
    merger.finish(2.0 * s.pruned_mass, depth, opts.max_contexts)
}

/// `(H(minus), H(plus))` without building either child. For each pair of
/// contexts, `H(U1 + U2)` is the entropy of the convolution and
/// `H(U2 | U1 + U2) = H(a) + H(b) - H(a ⋆ b)`.
pub fn child_entropies(s: &SynthSource) -> (f64, f64) {
    let cs = &s.contexts;
    let h: Vec<f64> = cs.iter().map(|c| entropy(&c.cond)).collect();
    let mut minus = Vec::with_capacity(cs.len() * (cs.len() + 1) / 2);
    let mut plus = Vec::with_capacity(minus.capacity());
    for (i, a) in cs.iter().enumerate() {
        for (j, b) in cs.iter().enumerate().skip(i) {
            let w = if i == j { a.weight * a.weight } else { 2.0 * a.weight * b.weight };
            let hs = entropy(&convolve(&a.cond, &b.cond));
            minus.push(w * hs);
            plus.push(w * (h[i] + h[j] - hs).max(0.0));
        }
    }
    (neumaier_sum(minus), neumaier_sum(plus))
}

/// Entropies of every node of the synthesis tree, level by level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyTree {
    /// `levels[k][j]` is the entropy of the node at depth `k` whose path,
    /// read most-significant bit first, is the binary expansion of `j`.
    pub levels: Vec<Vec<f64>>,
    pub pruned_mass_bound: f64,
    /// Largest context count encountered.
    pub max_contexts_seen: usize,
}

impl EntropyTree {
    /// Leaf entropies `H_1, ..., H_N`.
    pub fn leaves(&self) -> &[f64] {
        self.levels.last().expect("tree has a root level")
    }
}

/// Exact conditional entropies for every node down to depth `n`.
pub fn exact_tree(p: &ZDist, n: u32, opts: &EvolveOptions) -> Result<EntropyTree> {
    opts.validate()?;
    if n > MAX_DEPTH {
        return Err(SenseError::DepthTooLarge {
            depth: n,
            max: MAX_DEPTH,
        });
    }
    let mut tree = EntropyTree {
        levels: (0..=n).map(|k| Vec::with_capacity(1 << k)).collect(),
        pruned_mass_bound: 0.0,
        max_contexts_seen: 0,
    };
    walk(SynthSource::base(p), 0, n, opts, &mut tree)?;
    Ok(tree)
}

fn walk(
    s: SynthSource,
    depth: u32,
    n: u32,
    opts: &EvolveOptions,
    tree: &mut EntropyTree,
) -> Result<()> {
    tree.levels[depth as usize].push(entropy_of(&s));
    tree.max_contexts_seen = tree.max_contexts_seen.max(s.len());
    if depth == n {
        tree.pruned_mass_bound = tree.pruned_mass_bound.max(s.pruned_mass);
        return Ok(());
    }
    if depth + 1 == n {
        // Leaves only need entropies, which follow from the pairs directly.
        check_pairs(&s, n, opts.max_contexts)?;
        let (minus, plus) = child_entropies(&s);
        tree.levels[n as usize].extend([minus, plus]);
        tree.pruned_mass_bound = tree.pruned_mass_bound.max(2.0 * s.pruned_mass);
        return Ok(());
    }
    let minus = evolve_minus_at(&s, opts, depth + 1)?;
    let plus = evolve_plus_at(&s, opts, depth + 1)?;
    drop(s);
    walk(minus, depth + 1, n, opts, tree)?;
    walk(plus, depth + 1, n, opts, tree)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> EvolveOptions {
        EvolveOptions::unpruned()
    }

    #[test]
    fn minus_examples() {
        let fair = ZDist::bernoulli(0.5).unwrap();
        let m = evolve_minus(&SynthSource::base(&fair), &opts()).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m.contexts()[0].cond.masses(), &[0.25, 0.5, 0.25]);
        assert!((entropy_of(&m) - 1.5).abs() < 1e-15);

        let d = evolve_minus(&SynthSource::base(&ZDist::point(0)), &opts()).unwrap();
        assert_eq!(d.contexts()[0].cond, ZDist::point(0));

        let skew = ZDist::bernoulli(0.05).unwrap();
        let m = evolve_minus(&SynthSource::base(&skew), &opts()).unwrap();
        for (got, want) in m.contexts()[0].cond.masses().iter().zip([0.9025, 0.095, 0.0025]) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn plus_examples() {
        let fair = ZDist::bernoulli(0.5).unwrap();
        let p = evolve_plus(&SynthSource::base(&fair), &opts()).unwrap();
        // σ = 0 and σ = 2 give point masses (merged), σ = 1 a fair bit.
        assert_eq!(p.len(), 2);
        assert!((p.total_weight() - 1.0).abs() < 1e-15);
        assert!((entropy_of(&p) - 0.5).abs() < 1e-15);

        let d = evolve_plus(&SynthSource::base(&ZDist::point(4)), &opts()).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.contexts()[0].cond, ZDist::point(4));
    }

    #[test]
    fn entropy_of_examples() {
        let fair = ZDist::bernoulli(0.5).unwrap();
        assert_eq!(entropy_of(&SynthSource::base(&fair)), 1.0);
        let t = exact_tree(&fair, 1, &opts()).unwrap();
        assert_eq!(t.levels[0], vec![1.0]);
        assert!((t.leaves()[0] - 1.5).abs() < 1e-15);
        assert!((t.leaves()[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn depth_two_first_index_is_binomial_four() {
        let fair = ZDist::bernoulli(0.5).unwrap();
        let t = exact_tree(&fair, 2, &opts()).unwrap();
        let oracle = -[1.0f64, 4.0, 6.0, 4.0, 1.0]
            .iter()
            .map(|c| c / 16.0 * (c / 16.0).log2())
            .sum::<f64>();
        assert!((t.leaves()[0] - oracle).abs() < 1e-14);
        assert!((t.leaves()[0] - 2.0306).abs() < 1e-4);
        assert!((t.leaves().iter().sum::<f64>() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn budget_is_enforced() {
        let p = ZDist::new(0, vec![0.3, 0.2, 0.5]).unwrap();
        let tight = EvolveOptions {
            max_contexts: 4,
            ..opts()
        };
        let err = exact_tree(&p, 4, &tight).unwrap_err();
        assert!(matches!(err, SenseError::Budget { cap: 4, .. }), "{err}");
    }

    #[test]
    fn child_entropies_match_built_children() {
        let p = ZDist::new(-1, vec![0.2, 0.5, 0.3]).unwrap();
        let mut s = SynthSource::base(&p);
        for _ in 0..3 {
            let (hm, hp) = child_entropies(&s);
            let minus = evolve_minus(&s, &opts()).unwrap();
            let plus = evolve_plus(&s, &opts()).unwrap();
            assert!((hm - entropy_of(&minus)).abs() < 1e-12);
            assert!((hp - entropy_of(&plus)).abs() < 1e-12);
            s = plus;
        }
    }

    #[test]
    fn pruning_tracks_removed_mass() {
        let p = ZDist::bernoulli(0.05).unwrap();
        let pruned = EvolveOptions {
            prune_tau: 1e-6,
            ..EvolveOptions::default()
        };
        let t = exact_tree(&p, 4, &pruned).unwrap();
        assert!(t.pruned_mass_bound > 0.0);
        let exact = exact_tree(&p, 4, &opts()).unwrap();
        assert_eq!(exact.pruned_mass_bound, 0.0);
        for (a, b) in t.leaves().iter().zip(exact.leaves()) {
            assert!((a - b).abs() < 1e-3);
        }
    }
}
