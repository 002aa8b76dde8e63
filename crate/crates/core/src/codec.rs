//! Measurement and recovery with truncated Hadamard matrices.
//!
//! Encoding applies `J_N` and keeps the selected rows. The primary decoder
//! is successive-cancellation MAP over ℤ: outputs are decided in index order,
//! each from its exact conditional pmf given earlier decisions, weighted by
//! the Gaussian likelihood of its measurement when the row was kept. Dropped
//! rows carry no likelihood and are decided from the prior alone. An
//! exhaustive MAP search serves as the oracle for small `N`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::construct::RowSelection;
use crate::error::{check_domain, Result, SenseError};
use crate::rng::{stream_rng, Domain, ZSampler};
use crate::sc::{self, LeafRule};
use crate::transform::{apply_fast, TransformKind, TransformPlan};
use crate::zdist::{neumaier_sum, ZDist};

/// Observed values of the kept rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    /// One-based row indices, ascending.
    pub kept: Vec<usize>,
    pub values: Vec<f64>,
    /// Standard deviation of the additive noise; zero when noiseless.
    pub sigma: f64,
}

impl Measurement {
    fn leaf_observations(&self, size: usize) -> Result<Vec<Option<f64>>> {
        if self.values.len() != self.kept.len() {
            return Err(SenseError::LengthMismatch {
                expected: self.kept.len(),
                actual: self.values.len(),
            });
        }
        let mut obs = vec![None; size];
        for (&i, &v) in self.kept.iter().zip(&self.values) {
            if i == 0 || i > size {
                return Err(SenseError::IndexRange {
                    index: i,
                    max: size,
                });
            }
            obs[i - 1] = Some(v);
        }
        Ok(obs)
    }
}

fn j_plan(depth: u32) -> Result<TransformPlan> {
    TransformPlan::new(depth, TransformKind::J)
}

fn require_j(plan: &TransformPlan) -> Result<()> {
    if plan.kind() != TransformKind::J {
        return Err(SenseError::Unsupported("measurements are rows of J"));
    }
    Ok(())
}

/// Noiseless measurement `(J_N x)_K`.
pub fn encode(x: &[i64], selection: &RowSelection) -> Result<Measurement> {
    let y = apply_fast(&j_plan(selection.depth)?, x)?;
    Ok(Measurement {
        kept: selection.kept.clone(),
        values: selection.kept.iter().map(|&i| y[i - 1] as f64).collect(),
        sigma: 0.0,
    })
}

/// Adds i.i.d. `N(0, sigma^2)` noise drawn from the noise stream of `seed`.
pub fn add_noise(m: &Measurement, sigma: f64, seed: u64) -> Result<Measurement> {
    let mut rng = stream_rng(seed, Domain::MeasurementNoise, 0);
    add_noise_with(m, sigma, &mut rng)
}

pub(crate) fn add_noise_with<R: Rng + ?Sized>(
    m: &Measurement,
    sigma: f64,
    rng: &mut R,
) -> Result<Measurement> {
    check_domain("sigma", sigma, "[0, inf)", sigma >= 0.0 && sigma.is_finite())?;
    if sigma == 0.0 {
        return Ok(m.clone());
    }
    let values = m
        .values
        .iter()
        .map(|v| {
            let z: f64 = rng.sample(StandardNormal);
            v + sigma * z
        })
        .collect();
    Ok(Measurement {
        kept: m.kept.clone(),
        values,
        sigma: m.sigma.hypot(sigma),
    })
}

struct MapRule {
    obs: Vec<Option<f64>>,
    sigma: f64,
    decisions: Vec<i64>,
}

impl LeafRule for MapRule {
    fn decide(&mut self, index: usize, message: &ZDist) -> Result<Option<i64>> {
        let choice = match self.obs[index] {
            None => message.mode(),
            Some(v) if self.sigma == 0.0 => {
                let candidate = v.round();
                if candidate != v || message.prob(candidate as i64) <= 0.0 {
                    return Err(SenseError::DecodeFailure { index: index + 1 });
                }
                candidate as i64
            }
            Some(v) => {
                let inv = 0.5 / (self.sigma * self.sigma);
                let mut best: Option<(f64, i64)> = None;
                for (c, p) in message.iter() {
                    if p <= 0.0 {
                        continue;
                    }
                    let d = v - c as f64;
                    let score = p.ln() - d * d * inv;
                    if best.is_none_or(|(s, _)| score > s) {
                        best = Some((score, c));
                    }
                }
                best.ok_or(SenseError::DecodeFailure { index: index + 1 })?.1
            }
        };
        self.decisions[index] = choice;
        Ok(Some(choice))
    }
}

/// Decoder output: the input estimate and the decided outputs `ŷ = J x̂`.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub x: Vec<i64>,
    pub y: Vec<i64>,
}

/// Successive-cancellation MAP decoding. Ties go to the smaller value.
pub fn decode_sc(m: &Measurement, p: &ZDist, plan: &TransformPlan) -> Result<Decoded> {
    require_j(plan)?;
    let mut rule = MapRule {
        obs: m.leaf_observations(plan.size())?,
        sigma: m.sigma,
        decisions: vec![0; plan.size()],
    };
    let x = sc::run(plan.kind(), plan.depth(), p, &mut rule)?
        .expect("decoder never stops early");
    Ok(Decoded {
        x,
        y: rule.decisions,
    })
}

/// `ln P(x) + ln L(m | J x)` up to an `x`-independent constant.
pub fn posterior_log_score(x: &[i64], m: &Measurement, p: &ZDist, plan: &TransformPlan) -> Result<f64> {
    require_j(plan)?;
    let obs = m.leaf_observations(plan.size())?;
    let y = apply_fast(plan, x)?;
    let mut terms = Vec::with_capacity(x.len() + m.kept.len());
    for v in x {
        let pv = p.prob(*v);
        if pv <= 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        terms.push(pv.ln());
    }
    for (o, yi) in obs.iter().zip(&y) {
        if let Some(v) = o {
            let d = v - *yi as f64;
            if m.sigma == 0.0 {
                if d != 0.0 {
                    return Ok(f64::NEG_INFINITY);
                }
            } else {
                terms.push(-0.5 * d * d / (m.sigma * m.sigma));
            }
        }
    }
    Ok(neumaier_sum(terms))
}

/// Upper limit on candidates for [`decode_ml_exhaustive`].
pub const EXHAUSTIVE_CAP: u128 = 1 << 22;

/// Exact MAP by enumerating `supp(p)^N` in lexicographic order; the first
/// maximizer wins ties.
pub fn decode_ml_exhaustive(m: &Measurement, p: &ZDist, plan: &TransformPlan) -> Result<Vec<i64>> {
    require_j(plan)?;
    let support = p.support();
    let n = plan.size();
    let count = (support.len() as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if count > EXHAUSTIVE_CAP {
        return Err(SenseError::SearchBudget {
            count,
            cap: EXHAUSTIVE_CAP,
        });
    }
    let mut digits = vec![0usize; n];
    let mut best: Option<(f64, Vec<i64>)> = None;
    loop {
        let x: Vec<i64> = digits.iter().map(|&d| support[d]).collect();
        let score = posterior_log_score(&x, m, p, plan)?;
        if score > f64::NEG_INFINITY && best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, x));
        }
        // Odometer with x_1 most significant.
        let mut pos = n;
        loop {
            if pos == 0 {
                return best
                    .map(|(_, x)| x)
                    .ok_or(SenseError::DecodeFailure { index: 0 });
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < support.len() {
                break;
            }
            digits[pos] = 0;
        }
    }
}

/// Upper bound on `H(X | J̄ X) / N` from the dropped entropies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepCheck {
    /// `Σ_{i ∉ K} H_i / N`.
    pub value: f64,
    /// `ε (N - m_N) / N`.
    pub bound: f64,
    pub holds: bool,
}

pub fn rep_check(selection: &RowSelection) -> RepCheck {
    let mask = selection.mask();
    let n = selection.size() as f64;
    let dropped = neumaier_sum(
        selection
            .entropies
            .iter()
            .zip(&mask)
            .filter(|(_, kept)| !**kept)
            .map(|(h, _)| *h),
    );
    let value = dropped / n;
    let bound = selection.epsilon * (selection.size() - selection.m()) as f64 / n;
    RepCheck {
        value,
        bound,
        holds: value <= bound + 1e-9 && bound <= selection.epsilon,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrConfig {
    pub grid_db: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    /// Keep per-trial records.
    pub trace: bool,
}

/// One point of the robustness curve. `snr_in_db` is signal power over noise
/// power at the decoder input; `snr_out_db` is `E X^2 / mse_out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrPoint {
    pub snr_in_db: f64,
    pub mse_out: f64,
    pub snr_out_db: f64,
    pub trials: usize,
    pub decode_failures: usize,
    pub sigma: f64,
    /// `|K| σ^2 / Σ_{i∈K} E(Y_i^2)`, the input noise-to-signal ratio.
    pub nsr_in: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub snr_in_db: f64,
    pub trial: usize,
    pub squared_error: f64,
    pub failed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrReport {
    pub points: Vec<SnrPoint>,
    /// `Σ_{i∈K} E(Y_i^2) / |K|`.
    pub signal_power: f64,
    pub records: Vec<TrialRecord>,
}

impl SnrReport {
    /// CSV with header `snr_in_db,mse_out,snr_out_db,trials,decode_failures`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("snr_in_db,mse_out,snr_out_db,trials,decode_failures\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                p.snr_in_db, p.mse_out, p.snr_out_db, p.trials, p.decode_failures
            ));
        }
        out
    }
}

/// `Σ_{i∈K} E(Y_i^2) / |K|` for `Y = J_N X`, `X ~ p^N`: every row has variance
/// `N Var(X)`, and only the all-ones first row has a nonzero mean `N E X`.
pub fn measurement_power(p: &ZDist, selection: &RowSelection) -> f64 {
    if selection.kept.is_empty() {
        return 0.0;
    }
    let n = selection.size() as f64;
    let mean = p.mean();
    let var = (p.second_moment() - mean * mean).max(0.0);
    let mut total = selection.m() as f64 * n * var;
    if selection.kept.first() == Some(&1) {
        total += (n * mean) * (n * mean);
    }
    total / selection.m() as f64
}

/// Encode, add noise at each input SNR, decode, and average the squared
/// error. Trial `t` draws its source vector from trial stream `t` and its
/// noise from noise stream `t`; the same unit-variance draws are rescaled at
/// every grid point, and no record depends on the trial count.
pub fn snr_sim(p: &ZDist, selection: &RowSelection, cfg: &SnrConfig) -> Result<SnrReport> {
    check_domain("trials", cfg.trials as f64, "[1, inf)", cfg.trials >= 1)?;
    let plan = j_plan(selection.depth)?;
    let n = plan.size();
    let sampler = ZSampler::new(p);
    let signal_power = measurement_power(p, selection);
    let source_power = p.second_moment();

    let inputs: Vec<Vec<i64>> = (0..cfg.trials)
        .map(|t| sampler.sample_vec(&mut stream_rng(cfg.seed, Domain::Trial, t as u64), n))
        .collect();
    let clean = inputs
        .iter()
        .map(|x| encode(x, selection))
        .collect::<Result<Vec<_>>>()?;

    let mut points = Vec::with_capacity(cfg.grid_db.len());
    let mut records = Vec::new();
    for &snr_db in &cfg.grid_db {
        let sigma = (signal_power / 10f64.powf(snr_db / 10.0)).sqrt();
        let mut total_err = 0.0;
        let mut ok = 0usize;
        let mut failures = 0usize;
        for (t, (x, m)) in inputs.iter().zip(&clean).enumerate() {
            let mut rng = stream_rng(cfg.seed, Domain::MeasurementNoise, t as u64);
            let noisy = add_noise_with(m, sigma, &mut rng)?;
            let (err, failed) = match decode_sc(&noisy, p, &plan) {
                Ok(d) => {
                    let e: i64 = x.iter().zip(&d.x).map(|(a, b)| (a - b) * (a - b)).sum();
                    (e as f64, false)
                }
                Err(SenseError::DecodeFailure { .. }) => (f64::NAN, true),
                Err(e) => return Err(e),
            };
            if failed {
                failures += 1;
            } else {
                total_err += err;
                ok += 1;
            }
            if cfg.trace {
                records.push(TrialRecord {
                    snr_in_db: snr_db,
                    trial: t,
                    squared_error: err,
                    failed,
                });
            }
        }
        let mse_out = if ok == 0 {
            f64::NAN
        } else {
            total_err / (ok * n) as f64
        };
        points.push(SnrPoint {
            snr_in_db: snr_db,
            mse_out,
            snr_out_db: 10.0 * (source_power / mse_out).log10(),
            trials: cfg.trials,
            decode_failures: failures,
            sigma,
            nsr_in: if signal_power > 0.0 {
                sigma * sigma / signal_power
            } else {
                f64::NAN
            },
        });
    }
    Ok(SnrReport {
        points,
        signal_power,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::{select_rows, EntropyProfile, Method};
    use crate::transform::invert_exact;

    fn selection(entropies: &[f64], eps: f64) -> RowSelection {
        select_rows(
            &EntropyProfile::from_entropies(entropies.to_vec(), Method::Exact).unwrap(),
            eps,
        )
        .unwrap()
    }

    fn plan(n: u32) -> TransformPlan {
        TransformPlan::new(n, TransformKind::J).unwrap()
    }

    #[test]
    fn encode_examples() {
        let all = selection(&[1.0, 1.0], 0.5);
        assert_eq!(encode(&[1, 0], &all).unwrap().values, vec![1.0, -1.0]);
        let first = selection(&[1.0, 0.1], 0.5);
        assert_eq!(encode(&[1, 1], &first).unwrap().values, vec![2.0]);
        let none = selection(&[0.1, 0.1], 0.5);
        let m = encode(&[1, 1], &none).unwrap();
        assert!(m.values.is_empty() && m.kept.is_empty());
        assert!(encode(&[1, 1, 1], &all).is_err());
    }

    #[test]
    fn noise_examples() {
        let all = selection(&[1.0; 4], 0.5);
        let m = encode(&[1, 0, 1, 1], &all).unwrap();
        assert_eq!(add_noise(&m, 0.0, 3).unwrap(), m);
        let a = add_noise(&m, 0.7, 3).unwrap();
        assert_eq!(a, add_noise(&m, 0.7, 3).unwrap());
        assert_ne!(a, add_noise(&m, 0.7, 4).unwrap());
        assert_eq!(a.sigma, 0.7);
        assert!(add_noise(&m, -1.0, 3).is_err());

        let zeros = Measurement {
            kept: (1..=100_000).collect(),
            values: vec![0.0; 100_000],
            sigma: 0.0,
        };
        let noisy = add_noise(&zeros, 2.0, 9).unwrap();
        let var = noisy.values.iter().map(|v| v * v).sum::<f64>() / 1e5;
        assert!((var / 4.0 - 1.0).abs() < 0.02, "variance {var}");
    }

    #[test]
    fn decode_full_selection_noiseless() {
        let p = ZDist::new(-1, vec![0.3, 0.4, 0.3]).unwrap();
        let all = selection(&[1.0; 8], 0.5);
        for x in [[0, 1, -1, 0, 0, 1, 1, -1], [-1; 8], [1, 0, 0, 0, 0, 0, 0, 1]] {
            let d = decode_sc(&encode(&x, &all).unwrap(), &p, &plan(3)).unwrap();
            assert_eq!(d.x, x.to_vec());
            assert_eq!(invert_exact(&plan(3), &d.y).unwrap(), d.x);
        }
    }

    #[test]
    fn decode_forced_and_tie() {
        let fair = ZDist::bernoulli(0.5).unwrap();
        let first = selection(&[1.0, 0.1], 0.5);
        let m = Measurement {
            kept: vec![1],
            values: vec![2.0],
            sigma: 0.0,
        };
        assert_eq!(decode_sc(&m, &fair, &plan(1)).unwrap().x, vec![1, 1]);

        // Y_1 = 1: (0,1) and (1,0) are equally likely; SC takes the smaller
        // Y_2 = x_2 - x_1 = -1, i.e. x = (1, 0).
        let skew = ZDist::bernoulli(0.05).unwrap();
        let m = encode(&[0, 1], &first).unwrap();
        let sc = decode_sc(&m, &skew, &plan(1)).unwrap().x;
        assert_eq!(sc, vec![1, 0]);
        let ml = decode_ml_exhaustive(&m, &skew, &plan(1)).unwrap();
        assert_eq!(ml, vec![0, 1]);
        let s_sc = posterior_log_score(&sc, &m, &skew, &plan(1)).unwrap();
        let s_ml = posterior_log_score(&ml, &m, &skew, &plan(1)).unwrap();
        assert_eq!(s_sc, s_ml);
    }

    #[test]
    fn decode_failure_on_impossible_measurement() {
        let fair = ZDist::bernoulli(0.5).unwrap();
        let m = Measurement {
            kept: vec![1],
            values: vec![3.0],
            sigma: 0.0,
        };
        assert_eq!(
            decode_sc(&m, &fair, &plan(1)),
            Err(SenseError::DecodeFailure { index: 1 })
        );
        assert!(decode_ml_exhaustive(&m, &fair, &plan(1)).is_err());
    }

    #[test]
    fn exhaustive_examples() {
        let p = ZDist::bernoulli(0.3).unwrap();
        let all = selection(&[1.0; 4], 0.5);
        let x = [1, 0, 0, 1];
        assert_eq!(
            decode_ml_exhaustive(&encode(&x, &all).unwrap(), &p, &plan(2)).unwrap(),
            x.to_vec()
        );
        let none = Measurement {
            kept: vec![],
            values: vec![],
            sigma: 0.0,
        };
        assert_eq!(decode_ml_exhaustive(&none, &p, &plan(2)).unwrap(), vec![0; 4]);
        let wide = ZDist::uniform(0, 9).unwrap();
        assert!(matches!(
            decode_ml_exhaustive(&none, &wide, &plan(3)),
            Err(SenseError::SearchBudget { .. })
        ));
    }

    #[test]
    fn rep_check_examples() {
        let all = selection(&[1.0, 0.7], 0.5);
        assert_eq!(rep_check(&all).value, 0.0);
        let one = selection(&[1.5, 0.5], 0.6);
        let r = rep_check(&one);
        assert!((r.value - 0.25).abs() < 1e-15);
        assert!(r.holds && r.value <= 0.6);
        let zero = selection(&[0.0; 4], 0.1);
        assert_eq!(rep_check(&zero).value, 0.0);
    }

    #[test]
    fn measurement_power_matches_empirical() {
        let p = ZDist::bernoulli(0.05).unwrap();
        let sel = selection(&[1.0; 64], 0.5);
        let analytic = measurement_power(&p, &sel);
        let sampler = ZSampler::new(&p);
        let mut acc = 0.0;
        let draws = 4000;
        for t in 0..draws {
            let x = sampler.sample_vec(&mut stream_rng(5, Domain::Trial, t), 64);
            let m = encode(&x, &sel).unwrap();
            acc += m.values.iter().map(|v| v * v).sum::<f64>() / 64.0;
        }
        let empirical = acc / draws as f64;
        assert!((empirical / analytic - 1.0).abs() < 0.03, "{empirical} vs {analytic}");
    }
}
