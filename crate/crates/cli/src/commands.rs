//! One function per subcommand. Each returns the artifacts to write; `main`
//! decides where they go.

use hadamard_sensing::codec::{self, SnrConfig};
use hadamard_sensing::construct::{
    absorption_trace, compute_entropies, export_matrix, nested_report, select_rows, EntropyProfile,
    Method, RowSelection,
};
use hadamard_sensing::epi::{curve_to_csv, epi_curve};
use hadamard_sensing::quantize::{rate_lower_bound, UniformQuantizer};
use hadamard_sensing::rng::{stream_rng, Domain, ZSampler};
use hadamard_sensing::{SenseError, TransformKind, TransformPlan, ZDist};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Command, ExperimentConfig};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Sense(SenseError),
    /// A check the command exists to perform did not hold.
    Check(String),
    Io(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Sense(
                SenseError::Budget { .. }
                | SenseError::SearchBudget { .. }
                | SenseError::DepthTooLarge { .. },
            ) => 3,
            CliError::Sense(_) | CliError::Check(_) => 4,
            CliError::Io(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.exit_code() {
            2 => "usage",
            3 => "budget",
            4 => "numeric",
            _ => "io",
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Check(m) => f.write_str(m),
            CliError::Sense(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<SenseError> for CliError {
    fn from(e: SenseError) -> Self {
        CliError::Sense(e)
    }
}

/// What a command produced: a JSON body (merged with the config echo) and,
/// for tabular results, a CSV rendering.
pub struct Report {
    pub body: Value,
    pub csv: Option<String>,
    /// Extra files: the matrix CSV for `construct`, the JSONL trace for
    /// `noise-sim`.
    pub matrix_csv: Option<String>,
    pub trace_jsonl: Option<String>,
    /// Set when the command's own check failed; artifacts are still written.
    pub failed_check: Option<String>,
}

impl Report {
    fn table(body: impl Serialize, csv: String) -> Self {
        Self {
            body: serde_json::to_value(body).expect("reports serialize"),
            csv: Some(csv),
            matrix_csv: None,
            trace_jsonl: None,
            failed_check: None,
        }
    }
}

fn source(cfg: &ExperimentConfig) -> Result<ZDist, CliError> {
    cfg.source.resolve().map_err(CliError::Usage)
}

fn selection(cfg: &ExperimentConfig, p: &ZDist) -> Result<RowSelection, CliError> {
    let profile = compute_entropies(p, cfg.n, &cfg.entropy_method())?;
    Ok(select_rows(&profile, cfg.epsilon)?)
}

pub fn run(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    match cfg.command {
        Command::Construct => construct(cfg),
        Command::Trace => trace(cfg),
        Command::Nested => nested(cfg),
        Command::EpiCurve => epi(cfg),
        Command::NoiseSim => noise_sim(cfg),
        Command::Roundtrip => roundtrip(cfg),
        Command::RepCheck => rep_check(cfg),
        Command::Quantize => quantize(cfg),
    }
}

fn construct(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let p = source(cfg)?;
    let sel = selection(cfg, &p)?;
    let plan = TransformPlan::new(cfg.n, TransformKind::J)?;
    let matrix = export_matrix(&sel, &plan)?;
    let mut body = json!({
        "n": cfg.n,
        "epsilon": cfg.epsilon,
        "method": sel.method,
        "entropies": sel.entropies,
        "kept": sel.kept,
        "m_N": sel.m(),
        "pruned_mass_bound": sel.pruned_mass_bound,
    });
    if let Some(se) = &sel.mc_stderr {
        body["mc_stderr"] = json!(se);
    }
    Ok(Report {
        body,
        csv: None,
        matrix_csv: Some(matrix.to_csv()),
        trace_jsonl: None,
        failed_check: None,
    })
}

fn trace(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let p = source(cfg)?;
    let rows = absorption_trace(&p, cfg.epsilon, &cfg.n_list, &cfg.entropy_method())?;
    let mut csv = String::from("n,N,m,rate\n");
    for r in &rows {
        csv.push_str(&format!("{},{},{},{}\n", r.n, r.size, r.m, r.rate));
    }
    Ok(Report::table(json!({ "rows": rows }), csv))
}

fn nested(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let report = nested_report(&cfg.p_list, cfg.n, cfg.epsilon, &cfg.entropy_method())?;
    let mut csv = String::from("p_a,p_b,m_a,m_b,inclusion,jaccard\n");
    for (a, pa) in report.p_list.iter().enumerate() {
        for (b, pb) in report.p_list.iter().enumerate() {
            csv.push_str(&format!(
                "{},{},{},{},{},{}\n",
                pa, pb, report.m[a], report.m[b], report.inclusion[a][b], report.jaccard[a][b]
            ));
        }
    }
    Ok(Report::table(report, csv))
}

fn epi(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let points = epi_curve(cfg.c_max, cfg.steps, cfg.tol)?;
    let csv = curve_to_csv(&points);
    Ok(Report::table(json!({ "points": points }), csv))
}

fn noise_sim(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let p = source(cfg)?;
    let sel = selection(cfg, &p)?;
    let sim = SnrConfig {
        grid_db: cfg.snr_grid_db.clone(),
        trials: cfg.trials,
        seed: cfg.seed,
        trace: cfg.trace_path.is_some(),
    };
    let report = codec::snr_sim(&p, &sel, &sim)?;
    let trace_jsonl = sim.trace.then(|| {
        report
            .records
            .iter()
            .map(|r| serde_json::to_string(r).expect("records serialize") + "\n")
            .collect::<String>()
    });
    let csv = report.to_csv();
    let body = json!({
        "m_N": sel.m(),
        "kept": sel.kept,
        "signal_power": report.signal_power,
        "points": report.points,
    });
    Ok(Report {
        trace_jsonl,
        ..Report::table(body, csv)
    })
}

#[derive(Serialize)]
struct RoundtripSummary {
    trials: usize,
    exact_recoveries: usize,
    exact_fraction: f64,
    mse_out: f64,
    decode_failures: usize,
    m: usize,
    #[serde(rename = "N")]
    size: usize,
}

fn roundtrip(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let p = source(cfg)?;
    let plan = TransformPlan::new(cfg.n, TransformKind::J)?;
    let sel = if cfg.full {
        // Entropies are irrelevant when every row is kept.
        let profile = EntropyProfile::from_entropies(vec![0.0; plan.size()], Method::Exact)?;
        RowSelection::full(&profile)
    } else {
        selection(cfg, &p)?
    };
    let sampler = ZSampler::new(&p);
    let mut exact = 0;
    let mut failures = 0;
    let mut sq = 0i64;
    for t in 0..cfg.trials {
        let x = sampler.sample_vec(
            &mut stream_rng(cfg.seed, Domain::Trial, t as u64),
            plan.size(),
        );
        let m = codec::encode(&x, &sel)?;
        let m = codec::add_noise(&m, cfg.sigma, cfg.seed.wrapping_add(t as u64))?;
        match codec::decode_sc(&m, &p, &plan) {
            Ok(d) => {
                if d.x == x {
                    exact += 1;
                }
                sq += x.iter().zip(&d.x).map(|(a, b)| (a - b) * (a - b)).sum::<i64>();
            }
            Err(SenseError::DecodeFailure { .. }) => failures += 1,
            Err(e) => return Err(e.into()),
        }
    }
    let decoded = cfg.trials - failures;
    let summary = RoundtripSummary {
        trials: cfg.trials,
        exact_recoveries: exact,
        exact_fraction: exact as f64 / cfg.trials as f64,
        mse_out: if decoded == 0 {
            f64::NAN
        } else {
            sq as f64 / (decoded * plan.size()) as f64
        },
        decode_failures: failures,
        m: sel.m(),
        size: plan.size(),
    };
    let csv = format!(
        "trials,exact_recoveries,exact_fraction,mse_out,decode_failures\n{},{},{},{},{}\n",
        summary.trials,
        summary.exact_recoveries,
        summary.exact_fraction,
        summary.mse_out,
        summary.decode_failures
    );
    Ok(Report::table(summary, csv))
}

fn rep_check(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let p = source(cfg)?;
    let sel = selection(cfg, &p)?;
    let r = codec::rep_check(&sel);
    let csv = format!("value,bound,epsilon,holds\n{},{},{},{}\n", r.value, r.bound, cfg.epsilon, r.holds);
    let mut report = Report::table(r, csv);
    if !r.holds {
        report.failed_check = Some(format!(
            "dropped entropy per symbol {} exceeds bound {}",
            r.value, r.bound
        ));
    }
    Ok(report)
}

#[derive(Serialize)]
struct QuantizeSummary {
    q: u32,
    mmse: f64,
    epsilon: f64,
    rate_lower_bound: f64,
}

fn quantize(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let quant = UniformQuantizer::new(cfg.q)?;
    let s = QuantizeSummary {
        q: cfg.q,
        mmse: quant.mmse(),
        epsilon: cfg.epsilon,
        rate_lower_bound: rate_lower_bound(cfg.epsilon, cfg.q)?,
    };
    let csv = format!(
        "q,mmse,epsilon,rate_lower_bound\n{},{},{},{}\n",
        s.q, s.mmse, s.epsilon, s.rate_lower_bound
    );
    Ok(Report::table(s, csv))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Source;

    fn cfg(command: Command) -> ExperimentConfig {
        ExperimentConfig {
            command,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn construct_fair_coin_single_row() {
        let c = ExperimentConfig {
            source: Source::Preset("bernoulli:0.5".into()),
            n: 1,
            epsilon: 0.6,
            ..cfg(Command::Construct)
        };
        let r = run(&c).unwrap();
        assert_eq!(r.matrix_csv.as_deref(), Some("1,1\n"));
        assert_eq!(r.body["m_N"], 1);
        assert_eq!(r.body["kept"], json!([1]));
    }

    #[test]
    fn roundtrip_full_is_exact() {
        let c = ExperimentConfig {
            n: 5,
            trials: 50,
            full: true,
            ..cfg(Command::Roundtrip)
        };
        let r = run(&c).unwrap();
        assert_eq!(r.body["exact_fraction"], 1.0);
        assert_eq!(r.body["decode_failures"], 0);
    }

    #[test]
    fn budget_maps_to_exit_three() {
        let c = ExperimentConfig {
            source: Source::Preset("uniform:0:3".into()),
            n: 5,
            prune_tau: 0.0,
            max_contexts: 3,
            ..cfg(Command::Construct)
        };
        let err = run(&c).err().unwrap();
        assert_eq!(err.exit_code(), 3, "{err}");
    }

    #[test]
    fn quantize_summary() {
        let c = ExperimentConfig {
            q: 16,
            epsilon: 0.1,
            ..cfg(Command::Quantize)
        };
        let r = run(&c).unwrap();
        assert_eq!(r.body["rate_lower_bound"], 0.975);
    }
}
