//! Independent oracles: everything here is computed from first principles by
//! enumerating the joint law, without the density-evolution or SC code.

#![allow(dead_code)]

use std::collections::HashMap;

use hadamard_sensing::ZDist;
use rand::Rng;

/// Dense Kronecker power of a 2x2 kernel, rows in natural order.
pub fn kron_power(kernel: [[i64; 2]; 2], n: u32) -> Vec<Vec<i64>> {
    let mut m = vec![vec![1i64]];
    for _ in 0..n {
        let size = m.len();
        let mut next = vec![vec![0i64; 2 * size]; 2 * size];
        for (bi, krow) in kernel.iter().enumerate() {
            for (bj, &k) in krow.iter().enumerate() {
                for r in 0..size {
                    for c in 0..size {
                        next[bi * size + r][bj * size + c] = k * m[r][c];
                    }
                }
            }
        }
        m = next;
    }
    m
}

pub const J_KERNEL: [[i64; 2]; 2] = [[1, 1], [-1, 1]];
pub const G_KERNEL: [[i64; 2]; 2] = [[1, 1], [0, 1]];

fn entropy_of_map(m: &HashMap<Vec<i64>, f64>) -> f64 {
    m.values()
        .filter(|p| **p > 0.0)
        .map(|p| -p * p.log2())
        .sum()
}

/// `H(Y_i | Y_1^{i-1})` for `Y = M X`, `X ~ p^N`, by full enumeration.
pub fn brute_force_entropies(p: &ZDist, matrix: &[Vec<i64>]) -> Vec<f64> {
    let n = matrix.len();
    let support: Vec<(i64, f64)> = p.iter().filter(|(_, q)| *q > 0.0).collect();
    let mut joint: HashMap<Vec<i64>, f64> = HashMap::new();
    let mut digits = vec![0usize; n];
    'outer: loop {
        let mut prob = 1.0;
        let x: Vec<i64> = digits
            .iter()
            .map(|&d| {
                prob *= support[d].1;
                support[d].0
            })
            .collect();
        let y: Vec<i64> = matrix
            .iter()
            .map(|row| row.iter().zip(&x).map(|(a, b)| a * b).sum())
            .collect();
        *joint.entry(y).or_insert(0.0) += prob;
        for pos in (0..n).rev() {
            digits[pos] += 1;
            if digits[pos] < support.len() {
                continue 'outer;
            }
            digits[pos] = 0;
        }
        break;
    }
    let mut prefix_entropy = vec![0.0; n + 1];
    for (k, slot) in prefix_entropy.iter_mut().enumerate().skip(1) {
        let mut marg: HashMap<Vec<i64>, f64> = HashMap::new();
        for (y, q) in &joint {
            *marg.entry(y[..k].to_vec()).or_insert(0.0) += q;
        }
        *slot = entropy_of_map(&marg);
    }
    (0..n)
        .map(|i| prefix_entropy[i + 1] - prefix_entropy[i])
        .collect()
}

/// Random pmf with the given support length and a random offset.
pub fn random_pmf<R: Rng>(rng: &mut R, len: usize) -> ZDist {
    let w: Vec<f64> = (0..len).map(|_| rng.random::<f64>() + 1e-3).collect();
    let total: f64 = w.iter().sum();
    let offset = rng.random_range(-5..=5);
    ZDist::new(offset, w.into_iter().map(|v| v / total).collect()).unwrap()
}

/// Random pmf whose masses may include exact zeros in the interior.
pub fn random_sparse_pmf<R: Rng>(rng: &mut R, len: usize) -> ZDist {
    let mut w: Vec<f64> = (0..len)
        .map(|_| if rng.random::<f64>() < 0.25 { 0.0 } else { rng.random::<f64>() })
        .collect();
    w[0] += 0.1;
    w[len - 1] += 0.1;
    let total: f64 = w.iter().sum();
    ZDist::new(0, w.into_iter().map(|v| v / total).collect()).unwrap()
}

/// Direct Shannon entropy in bits, naive summation.
pub fn naive_entropy(p: &ZDist) -> f64 {
    p.masses()
        .iter()
        .filter(|q| **q > 0.0)
        .map(|q| -q * q.log2())
        .sum()
}

/// Direct convolution by double loop over values.
pub fn naive_convolve(a: &ZDist, b: &ZDist) -> HashMap<i64, f64> {
    let mut out = HashMap::new();
    for (x, p) in a.iter() {
        for (y, q) in b.iter() {
            *out.entry(x + y).or_insert(0.0) += p * q;
        }
    }
    out
}
