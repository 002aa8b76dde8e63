//! Entropy power inequality for integer-valued random variables.
//!
//! For every pmf `p` on ℤ, `H(p ⋆ p) - H(p) >= g(H(p))` where
//!
//! ```text
//! g(c) = min_{y in [0,1]} max( (1-y)^4 / (8 ln 2),  c y - (1+y) h2(y) )
//! ```
//!
//! The first branch comes from splitting `p` at a cut with mass at least
//! `(1 - y) / 2` on each side; the second from the largest atom `y = max p_i`.
//! Entropies are in bits, constants use the natural log exactly as written.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{check_domain, Result};
use crate::zdist::{convolve, entropy, h2, l1_distance, split, ZDist};

/// `lim_{c -> inf} g(c) = 1 / (8 ln 2)`.
pub const EPI_ASYMPTOTE: f64 = 1.0 / (8.0 * LN_2);

const GRID_INTERVALS: usize = 1024;
const GOLDEN: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    Quartic,
    LinearEntropy,
}

impl Branch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Branch::Quartic => "quartic",
            Branch::LinearEntropy => "linear-entropy",
        }
    }
}

/// A solved point of the minimax defining `g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpiGapPoint {
    pub c: f64,
    pub g_of_c: f64,
    pub argmin_y: f64,
    pub active_branch: Branch,
}

/// Outcome of checking the inequality on one pmf.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpiCheck {
    /// `H(p ⋆ p) - H(p)`.
    pub gap: f64,
    /// `g(H(p))`.
    pub bound: f64,
    pub holds: bool,
}

/// Atom bound: `c x - (1 + x) h2(x)`, where `x` is the mass of any single
/// point of a pmf with entropy `c`.
pub fn lemma2_bound(c: f64, x: f64) -> Result<f64> {
    check_domain("x", x, "[0, 1]", (0.0..=1.0).contains(&x))?;
    Ok(linear_entropy(c, x))
}

/// `(1 - y)^4 / (8 ln 2)`.
pub fn quartic_bound(y: f64) -> Result<f64> {
    check_domain("y", y, "[0, 1]", (0.0..=1.0).contains(&y))?;
    Ok(quartic(y))
}

/// Split bound `2 α^4 / ln 2` for a cut leaving mass at least `α` on each
/// side.
pub fn split_bound(alpha: f64) -> f64 {
    2.0 * alpha.powi(4) / LN_2
}

/// Pinsker-type bound `α^2 / (2 ln 2) · ‖p⋆p1 - p⋆p2‖_1^2`.
pub fn split_distance_bound(alpha: f64, l1: f64) -> f64 {
    alpha * alpha / (2.0 * LN_2) * l1 * l1
}

/// Quantities attached to cutting `p` at `cut`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutWitness {
    /// `min(α1, 1 - α1)`.
    pub alpha: f64,
    /// `‖p ⋆ p1 - p ⋆ p2‖_1`.
    pub l1: f64,
}

pub fn cut_witness(p: &ZDist, cut: i64) -> Result<CutWitness> {
    let s = split(p, cut)?;
    let l1 = l1_distance(&convolve(p, &s.left), &convolve(p, &s.right));
    Ok(CutWitness {
        alpha: s.alpha1.min(1.0 - s.alpha1),
        l1,
    })
}

fn quartic(y: f64) -> f64 {
    (1.0 - y).powi(4) / (8.0 * LN_2)
}

fn linear_entropy(c: f64, y: f64) -> f64 {
    c * y - (1.0 + y) * h2(y)
}

fn objective(c: f64, y: f64) -> f64 {
    quartic(y).max(linear_entropy(c, y))
}

/// Minimizes `max(quartic, linear_entropy)` over `[lo, 1]`: grid bracketing,
/// then golden-section on the bracket around the best grid point.
fn solve_minimax(c: f64, lo: f64, tol: f64) -> (f64, f64) {
    let step = (1.0 - lo) / GRID_INTERVALS as f64;
    let at = |k: usize| {
        if k == GRID_INTERVALS {
            1.0
        } else {
            lo + step * k as f64
        }
    };
    let mut best_k = 0;
    let mut best_v = f64::INFINITY;
    for k in 0..=GRID_INTERVALS {
        let v = objective(c, at(k));
        if v < best_v {
            best_v = v;
            best_k = k;
        }
    }
    let mut a = at(best_k.saturating_sub(1));
    let mut b = at((best_k + 1).min(GRID_INTERVALS));

    // The slope of the objective is bounded by roughly c plus the slope of
    // h2 near the crossing; this converts the g tolerance into a y width.
    let width = (tol / (c + 64.0)).max(1e-17);
    let mut x1 = b - GOLDEN * (b - a);
    let mut x2 = a + GOLDEN * (b - a);
    let mut f1 = objective(c, x1);
    let mut f2 = objective(c, x2);
    let mut iterations = 0;
    while b - a > width && iterations < 300 {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - GOLDEN * (b - a);
            f1 = objective(c, x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + GOLDEN * (b - a);
            f2 = objective(c, x2);
        }
        iterations += 1;
    }

    let mut best = (best_v, at(best_k));
    for y in [a, x1, x2, b] {
        let v = objective(c, y);
        if v < best.0 {
            best = (v, y);
        }
    }
    best
}

/// `g(c)` solved to absolute accuracy `tol`.
pub fn gap_function_g(c: f64, tol: f64) -> Result<EpiGapPoint> {
    check_domain("c", c, "[0, inf)", c >= 0.0 && c.is_finite())?;
    check_domain("tol", tol, "(0, inf)", tol > 0.0)?;
    let (g, y) = solve_minimax(c, 0.0, tol);
    // At a crossing both sides agree up to solver noise; call it quartic,
    // the side that dominates just left of the crossing.
    let active_branch = if linear_entropy(c, y) - quartic(y) <= 1e-9 * (1.0 + g) {
        Branch::Quartic
    } else {
        Branch::LinearEntropy
    };
    Ok(EpiGapPoint {
        c,
        g_of_c: g,
        argmin_y: y,
        active_branch,
    })
}

/// `t(c)`: the same minimax restricted to `y >= 2^{-c}`, which the largest
/// atom of an entropy-`c` pmf always satisfies. `t(c) >= g(c)`.
pub fn gap_function_t(c: f64, tol: f64) -> Result<f64> {
    check_domain("c", c, "(0, inf)", c > 0.0 && c.is_finite())?;
    check_domain("tol", tol, "(0, inf)", tol > 0.0)?;
    let lo = (-c).exp2();
    Ok(solve_minimax(c, lo, tol).0)
}

/// Checks `H(p ⋆ p) - H(p) >= g(H(p)) - tol`.
pub fn verify_epi(p: &ZDist, tol: f64) -> Result<EpiCheck> {
    check_domain("tol", tol, "[0, inf)", tol >= 0.0)?;
    let h = entropy(p);
    let gap = entropy(&convolve(p, p)) - h;
    let solver_tol = if tol > 0.0 { tol.min(1e-12) } else { 1e-12 };
    let bound = gap_function_g(h, solver_tol)?.g_of_c;
    Ok(EpiCheck {
        gap,
        bound,
        holds: gap >= bound - tol,
    })
}

/// `g` sampled on `steps` uniformly spaced entropies in `[0, c_max]`.
pub fn epi_curve(c_max: f64, steps: usize, tol: f64) -> Result<Vec<EpiGapPoint>> {
    check_domain("c_max", c_max, "(0, inf)", c_max > 0.0 && c_max.is_finite())?;
    check_domain("steps", steps as f64, "[2, inf)", steps >= 2)?;
    (0..steps)
        .map(|k| {
            let c = if k + 1 == steps {
                c_max
            } else {
                c_max * k as f64 / (steps - 1) as f64
            };
            gap_function_g(c, tol)
        })
        .collect()
}

/// CSV rendering with header `c,g,argmin_y,branch`.
pub fn curve_to_csv(points: &[EpiGapPoint]) -> String {
    let mut out = String::from("c,g,argmin_y,branch\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{},{}\n",
            p.c,
            p.g_of_c,
            p.argmin_y,
            p.active_branch.as_str()
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-12;

    #[test]
    fn lemma2_examples() {
        assert_eq!(lemma2_bound(3.7, 0.0).unwrap(), 0.0);
        assert!((lemma2_bound(1.0, 0.5).unwrap() + 1.0).abs() < 1e-15);
        assert!((lemma2_bound(10.0, 0.5).unwrap() - 3.5).abs() < 1e-15);
        assert!(lemma2_bound(1.0, 1.5).is_err());
    }

    #[test]
    fn quartic_examples() {
        assert_eq!(quartic_bound(1.0).unwrap(), 0.0);
        assert!((quartic_bound(0.0).unwrap() - EPI_ASYMPTOTE).abs() < 1e-16);
        assert!((EPI_ASYMPTOTE - 0.180337).abs() < 1e-6);
        assert!((quartic_bound(0.5).unwrap() - 0.0625 / (8.0 * LN_2)).abs() < 1e-16);
        assert!((quartic_bound(0.5).unwrap() - 0.011271).abs() < 1e-6);
        assert!(quartic_bound(-0.1).is_err());
    }

    // Golden values from a 40-digit nested-grid minimization.
    #[test]
    fn g_golden_values() {
        let golden = [
            (0.5, 4.877652084156512e-7),
            (1.0, 1.903606851205106e-5),
            (2.0, 9.713225440076374e-4),
            (10.0, 0.15258633399446672),
            (30.0, 0.174_563_658_402_739_2),
            (200.0, 0.17965042307607163),
        ];
        for (c, want) in golden {
            let got = gap_function_g(c, TOL).unwrap().g_of_c;
            assert!((got - want).abs() < 1e-10, "g({c}) = {got}, want {want}");
        }
    }

    #[test]
    fn g_examples() {
        let zero = gap_function_g(0.0, TOL).unwrap();
        assert_eq!(zero.g_of_c, 0.0);
        let one = gap_function_g(1.0, TOL).unwrap();
        assert!(one.g_of_c > 0.0 && one.g_of_c < 0.180337);
        assert!(gap_function_g(200.0, TOL).unwrap().g_of_c >= 0.17);
        assert!(gap_function_g(-1.0, TOL).is_err());
    }

    #[test]
    fn t_examples() {
        for c in [0.001, 0.1, 1.0, 3.0, 10.0, 50.0] {
            let g = gap_function_g(c, TOL).unwrap().g_of_c;
            let t = gap_function_t(c, TOL).unwrap();
            assert!(t >= g - 1e-12, "t({c}) = {t} < g = {g}");
        }
        let g = gap_function_g(0.001, TOL).unwrap().g_of_c;
        assert!((gap_function_t(0.001, TOL).unwrap() - g).abs() < 1e-3);
        let g = gap_function_g(10.0, TOL).unwrap().g_of_c;
        assert!(gap_function_t(10.0, TOL).unwrap() - g < 1e-6);
        assert!(gap_function_t(0.0, TOL).is_err());
    }

    #[test]
    fn verify_examples() {
        let d = verify_epi(&ZDist::point(0), 1e-9).unwrap();
        assert_eq!((d.gap, d.bound, d.holds), (0.0, 0.0, true));

        let fair = ZDist::bernoulli(0.5).unwrap();
        let r = verify_epi(&fair, 1e-9).unwrap();
        assert!((r.gap - 0.5).abs() < 1e-14);
        assert!(r.bound < 0.180337 && r.holds);

        let skew = ZDist::bernoulli(0.05).unwrap();
        let r = verify_epi(&skew, 1e-9).unwrap();
        let oracle = -[0.9025f64, 0.095, 0.0025]
            .iter()
            .map(|m| m * m.log2())
            .sum::<f64>()
            - h2(0.05);
        assert!((r.gap - oracle).abs() < 1e-14);
        assert!(r.gap > 0.0 && r.holds);
    }

    #[test]
    fn curve_examples() {
        let pts = epi_curve(10.0, 11, TOL).unwrap();
        assert_eq!(pts.len(), 11);
        assert_eq!(pts[0].g_of_c, 0.0);
        assert_eq!(pts[10].c, 10.0);
        for w in pts.windows(2) {
            assert!(w[1].g_of_c >= w[0].g_of_c - TOL);
        }
        assert!(pts.iter().all(|p| p.g_of_c <= EPI_ASYMPTOTE + 1e-9));
        assert!(epi_curve(10.0, 1, TOL).is_err());
        assert!(epi_curve(0.0, 5, TOL).is_err());
        let csv = curve_to_csv(&pts);
        assert!(csv.starts_with("c,g,argmin_y,branch\n"));
        assert_eq!(csv.lines().count(), 12);
    }

    #[test]
    fn single_crossing_for_large_c() {
        let c = 50.0;
        let mut changes = 0;
        let mut prev = quartic(0.0) >= linear_entropy(c, 0.0);
        for k in 1..=10_000 {
            let y = k as f64 / 10_000.0;
            let cur = quartic(y) >= linear_entropy(c, y);
            if cur != prev {
                changes += 1;
            }
            prev = cur;
        }
        assert_eq!(changes, 1);
    }
}
