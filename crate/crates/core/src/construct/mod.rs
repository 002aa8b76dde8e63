//! Truncated Hadamard construction.
//!
//! The synthesized conditional entropies `H_i = H(Y_i | Y_1^{i-1})` of
//! `Y = J_N X` (equal to those of `Y = G_N X`) decide which rows of `J_N` are
//! kept: row `i` survives iff `H_i > ε`. Entropies come either from exact
//! density evolution ([`density`]) or from Monte-Carlo replay of the
//! successive-cancellation recursion ([`montecarlo`]).

pub mod density;
pub mod montecarlo;

use serde::{Deserialize, Serialize};

use crate::error::{check_domain, Result, SenseError};
use crate::transform::{TransformKind, TransformPlan};
use crate::zdist::ZDist;

pub use density::{
    entropy_of, evolve_minus, evolve_plus, exact_tree, Context, EntropyTree, EvolveOptions,
    SynthSource,
};
pub use montecarlo::{estimate_entropies_mc, sc_conditional_pmf, surprisal_profile, McEstimate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Exact,
    #[serde(rename = "mc", alias = "monte-carlo")]
    MonteCarlo,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::MonteCarlo => "mc",
        }
    }
}

/// How to obtain the entropies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EntropyMethod {
    Exact(EvolveOptions),
    MonteCarlo { samples: usize, seed: u64 },
}

impl EntropyMethod {
    pub fn method(&self) -> Method {
        match self {
            EntropyMethod::Exact(_) => Method::Exact,
            EntropyMethod::MonteCarlo { .. } => Method::MonteCarlo,
        }
    }
}

/// Per-index entropies at one depth, with their provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyProfile {
    pub depth: u32,
    pub method: Method,
    pub entropies: Vec<f64>,
    pub stderr: Option<Vec<f64>>,
    /// Mass discarded by pruning (exact method); zero otherwise.
    pub pruned_mass_bound: f64,
}

impl EntropyProfile {
    /// Wraps externally supplied entropies; length must be a power of two.
    pub fn from_entropies(entropies: Vec<f64>, method: Method) -> Result<Self> {
        let len = entropies.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(SenseError::LengthMismatch {
                expected: len.next_power_of_two().max(1),
                actual: len,
            });
        }
        Ok(Self {
            depth: len.trailing_zeros(),
            method,
            entropies,
            stderr: None,
            pruned_mass_bound: 0.0,
        })
    }
}

pub fn compute_entropies_exact(p: &ZDist, n: u32, opts: &EvolveOptions) -> Result<EntropyProfile> {
    let tree = exact_tree(p, n, opts)?;
    Ok(EntropyProfile {
        depth: n,
        method: Method::Exact,
        entropies: tree.leaves().to_vec(),
        stderr: None,
        pruned_mass_bound: tree.pruned_mass_bound,
    })
}

pub fn compute_entropies(p: &ZDist, n: u32, method: &EntropyMethod) -> Result<EntropyProfile> {
    match method {
        EntropyMethod::Exact(opts) => compute_entropies_exact(p, n, opts),
        EntropyMethod::MonteCarlo { samples, seed } => {
            let est = estimate_entropies_mc(p, n, *samples, *seed)?;
            Ok(EntropyProfile {
                depth: n,
                method: Method::MonteCarlo,
                entropies: est.entropies,
                stderr: Some(est.stderr),
                pruned_mass_bound: 0.0,
            })
        }
    }
}

/// Rows kept by thresholding the entropies at `epsilon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowSelection {
    pub depth: u32,
    pub epsilon: f64,
    pub entropies: Vec<f64>,
    /// One-based, ascending.
    pub kept: Vec<usize>,
    pub method: Method,
    pub mc_stderr: Option<Vec<f64>>,
    pub pruned_mass_bound: f64,
}

impl RowSelection {
    pub fn size(&self) -> usize {
        self.entropies.len()
    }

    /// `m_N`.
    pub fn m(&self) -> usize {
        self.kept.len()
    }

    pub fn rate(&self) -> f64 {
        self.m() as f64 / self.size() as f64
    }

    /// Keeps every row.
    pub fn full(profile: &EntropyProfile) -> Self {
        Self {
            depth: profile.depth,
            epsilon: 0.0,
            entropies: profile.entropies.clone(),
            kept: (1..=profile.entropies.len()).collect(),
            method: profile.method,
            mc_stderr: profile.stderr.clone(),
            pruned_mass_bound: profile.pruned_mass_bound,
        }
    }

    /// Membership mask indexed from zero.
    pub fn mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.size()];
        for &i in &self.kept {
            mask[i - 1] = true;
        }
        mask
    }
}

/// Keeps `{i : H_i > epsilon}` (strict).
pub fn select_rows(profile: &EntropyProfile, epsilon: f64) -> Result<RowSelection> {
    check_domain(
        "epsilon",
        epsilon,
        "(0, inf)",
        epsilon > 0.0 && epsilon.is_finite(),
    )?;
    let kept = profile
        .entropies
        .iter()
        .enumerate()
        .filter(|(_, h)| **h > epsilon)
        .map(|(i, _)| i + 1)
        .collect();
    Ok(RowSelection {
        depth: profile.depth,
        epsilon,
        entropies: profile.entropies.clone(),
        kept,
        method: profile.method,
        mc_stderr: profile.stderr.clone(),
        pruned_mass_bound: profile.pruned_mass_bound,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub n: u32,
    #[serde(rename = "N")]
    pub size: usize,
    pub m: usize,
    pub rate: f64,
}

/// `(N, m_N, m_N / N)` for each requested depth.
pub fn absorption_trace(
    p: &ZDist,
    epsilon: f64,
    depths: &[u32],
    method: &EntropyMethod,
) -> Result<Vec<TraceRow>> {
    if depths.is_empty() {
        return Err(SenseError::Unsupported("absorption trace needs at least one depth"));
    }
    depths
        .iter()
        .map(|&n| {
            let sel = select_rows(&compute_entropies(p, n, method)?, epsilon)?;
            Ok(TraceRow {
                n,
                size: sel.size(),
                m: sel.m(),
                rate: sel.rate(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleReport {
    /// `max |parent - (minus + plus) / 2|` over internal nodes.
    pub max_deviation: f64,
    /// `|Σ H_i - N H(p)|` at the deepest level.
    pub conservation_error: f64,
    pub pruned_mass_bound: f64,
    pub within_tol: bool,
}

/// Checks the averaging identity at every internal node and the chain rule
/// at the leaves. The Monte-Carlo variant estimates every level with the same
/// seed, so its deviations are statistical.
pub fn martingale_check(
    p: &ZDist,
    n: u32,
    method: &EntropyMethod,
    tol: f64,
) -> Result<MartingaleReport> {
    if n == 0 {
        return Err(SenseError::Domain {
            name: "n",
            value: 0.0,
            domain: "[1, 20]",
        });
    }
    let (levels, pruned) = match method {
        EntropyMethod::Exact(opts) => {
            let tree = exact_tree(p, n, opts)?;
            (tree.levels, tree.pruned_mass_bound)
        }
        EntropyMethod::MonteCarlo { samples, seed } => {
            let mut levels = vec![vec![crate::zdist::entropy(p)]];
            for k in 1..=n {
                levels.push(estimate_entropies_mc(p, k, *samples, *seed)?.entropies);
            }
            (levels, 0.0)
        }
    };
    let mut max_deviation = 0.0f64;
    for k in 0..n as usize {
        for (j, parent) in levels[k].iter().enumerate() {
            let avg = 0.5 * (levels[k + 1][2 * j] + levels[k + 1][2 * j + 1]);
            max_deviation = max_deviation.max((parent - avg).abs());
        }
    }
    let leaves = &levels[n as usize];
    let total = crate::zdist::neumaier_sum(leaves.iter().copied());
    let conservation_error = (total - leaves.len() as f64 * crate::zdist::entropy(p)).abs();
    Ok(MartingaleReport {
        max_deviation,
        conservation_error,
        pruned_mass_bound: pruned,
        within_tol: max_deviation <= tol && conservation_error <= tol,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NestedReport {
    pub p_list: Vec<f64>,
    pub m: Vec<usize>,
    /// `inclusion[a][b]`: fraction of `kept(p_a)` contained in `kept(p_b)`.
    pub inclusion: Vec<Vec<f64>>,
    pub jaccard: Vec<Vec<f64>>,
    /// `inclusion[k][k + 1]` for adjacent pairs.
    pub adjacent_inclusion: Vec<f64>,
}

fn inclusion(a: &[bool], b: &[bool]) -> f64 {
    let size_a = a.iter().filter(|v| **v).count();
    if size_a == 0 {
        return 1.0;
    }
    let both = a.iter().zip(b).filter(|(x, y)| **x && **y).count();
    both as f64 / size_a as f64
}

fn jaccard(a: &[bool], b: &[bool]) -> f64 {
    let union = a.iter().zip(b).filter(|(x, y)| **x || **y).count();
    if union == 0 {
        return 1.0;
    }
    let both = a.iter().zip(b).filter(|(x, y)| **x && **y).count();
    both as f64 / union as f64
}

/// Nesting of kept sets across Bernoulli sources with increasing `p`.
pub fn nested_report(
    p_list: &[f64],
    n: u32,
    epsilon: f64,
    method: &EntropyMethod,
) -> Result<NestedReport> {
    if p_list.is_empty() {
        return Err(SenseError::Unsupported("nested report needs at least one p"));
    }
    for w in p_list.windows(2) {
        if w[1] < w[0] {
            return Err(SenseError::Unsupported("p list must be sorted ascending"));
        }
    }
    for &p in p_list {
        check_domain("p", p, "(0, 0.5]", p > 0.0 && p <= 0.5)?;
    }
    let masks = p_list
        .iter()
        .map(|&p| {
            let source = ZDist::bernoulli(p)?;
            Ok(select_rows(&compute_entropies(&source, n, method)?, epsilon)?.mask())
        })
        .collect::<Result<Vec<_>>>()?;
    let inclusion_m: Vec<Vec<f64>> = masks
        .iter()
        .map(|a| masks.iter().map(|b| inclusion(a, b)).collect())
        .collect();
    let jaccard_m = masks
        .iter()
        .map(|a| masks.iter().map(|b| jaccard(a, b)).collect())
        .collect();
    let adjacent_inclusion = if masks.len() == 1 {
        vec![1.0]
    } else {
        (0..masks.len() - 1).map(|k| inclusion_m[k][k + 1]).collect()
    };
    Ok(NestedReport {
        p_list: p_list.to_vec(),
        m: masks.iter().map(|m| m.iter().filter(|v| **v).count()).collect(),
        inclusion: inclusion_m,
        jaccard: jaccard_m,
        adjacent_inclusion,
    })
}

/// Kept rows of `J_N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixExport {
    pub rows: Vec<usize>,
    pub matrix: Vec<Vec<i64>>,
}

impl MatrixExport {
    /// One line per kept row, comma-separated entries in {-1, 1}.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in &self.matrix {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

pub fn export_matrix(selection: &RowSelection, plan: &TransformPlan) -> Result<MatrixExport> {
    if plan.kind() != TransformKind::J {
        return Err(SenseError::Unsupported("exported matrices are rows of J"));
    }
    if selection.depth != plan.depth() {
        return Err(SenseError::DepthMismatch {
            selection: selection.depth,
            plan: plan.depth(),
        });
    }
    let matrix = selection
        .kept
        .iter()
        .map(|&i| plan.row(i))
        .collect::<Result<Vec<_>>>()?;
    Ok(MatrixExport {
        rows: selection.kept.clone(),
        matrix,
    })
}
