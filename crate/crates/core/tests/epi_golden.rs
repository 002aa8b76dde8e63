use std::f64::consts::LN_2;

use hadamard_sensing::epi::{curve_to_csv, epi_curve, gap_function_g, gap_function_t};

const GOLDEN: &str = include_str!("data/epi_curve_c30.csv");

fn h2(y: f64) -> f64 {
    if y <= 0.0 || y >= 1.0 {
        0.0
    } else {
        -y * y.log2() - (1.0 - y) * (1.0 - y).log2()
    }
}

/// Root of the two branches by bisection, then a dense scan of the
/// right-hand branch in case it dips after the crossing.
fn oracle_g(c: f64) -> f64 {
    let quartic = |y: f64| (1.0 - y).powi(4) / (8.0 * LN_2);
    let linear = |y: f64| c * y - (1.0 + y) * h2(y);
    if c == 0.0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if quartic(mid) > linear(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut best = quartic(hi).max(linear(hi));
    let steps = 100_000;
    for k in 0..=steps {
        let y = hi + (1.0 - hi) * k as f64 / steps as f64;
        best = best.min(quartic(y).max(linear(y)));
    }
    best
}

#[test]
fn golden_curve_is_reproduced() {
    let fresh = curve_to_csv(&epi_curve(30.0, 61, 1e-12).unwrap());
    let mut golden_lines = GOLDEN.lines();
    let mut fresh_lines = fresh.lines();
    assert_eq!(golden_lines.next(), fresh_lines.next());
    for (g, f) in golden_lines.zip(fresh_lines.by_ref()) {
        let gv: Vec<&str> = g.split(',').collect();
        let fv: Vec<&str> = f.split(',').collect();
        for k in 0..3 {
            let a: f64 = gv[k].parse().unwrap();
            let b: f64 = fv[k].parse().unwrap();
            let scale = if k == 2 { 1e-6 } else { 1e-12 };
            assert!((a - b).abs() <= scale, "{g} vs {f}");
        }
        assert_eq!(gv[3], fv[3]);
    }
    assert_eq!(fresh.lines().count(), GOLDEN.lines().count());
}

#[test]
fn golden_curve_matches_independent_solver() {
    for line in GOLDEN.lines().skip(1) {
        let v: Vec<f64> = line.split(',').take(2).map(|s| s.parse().unwrap()).collect();
        let oracle = oracle_g(v[0]);
        assert!((v[1] - oracle).abs() < 1e-10, "c={} g={} oracle={}", v[0], v[1], oracle);
    }
}

#[test]
fn high_precision_reference_values() {
    // Nested-grid minimax evaluated at 40 significant digits.
    let refs = [
        (0.5, 4.877652084156512e-7),
        (1.0, 1.903606851205106e-5),
        (2.0, 9.713225440076374e-4),
        (10.0, 0.15258633399446672),
        (30.0, 0.174_563_658_402_739_2),
        (200.0, 0.17965042307607163),
    ];
    for (c, g) in refs {
        let got = gap_function_g(c, 1e-13).unwrap().g_of_c;
        assert!((got - g).abs() < 1e-10, "c={c}: {got} vs {g}");
        assert!(gap_function_t(c, 1e-13).unwrap() >= got - 1e-12);
    }
}
