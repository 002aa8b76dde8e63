//! `hsense`: construct truncated Hadamard matrices and run the experiments.
//!
//! Every subcommand accepts `--config <file>` with an `ExperimentConfig` in
//! JSON; flags given on the command line override it. Results go to stdout,
//! or to `--out`: a `.json` path gets the report with the resolved config
//! embedded, anything else gets CSV plus a `<out>.config.json` sidecar.
//!
//! Exit codes: 0 success, 1 I/O, 2 usage, 3 resource budget, 4 numeric
//! failure.

mod commands;
mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use hadamard_sensing::construct::Method;
use serde_json::json;

use commands::{CliError, Report};
use config::{parse_grid, Command, ExperimentConfig, Source};

#[derive(Parser)]
#[command(name = "hsense", version, about = "Entropy-preserving partial Hadamard matrices")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Exact,
    Mc,
}

#[derive(Args, Default)]
struct Common {
    /// JSON config file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `bernoulli:p`, `uniform:lo:hi`, `point:k`, inline ZDist JSON, or a
    /// path to a ZDist JSON file.
    #[arg(long)]
    source: Option<String>,
    /// Depth; the block length is N = 2^n.
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    /// Monte-Carlo sample count.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    prune_tau: Option<f64>,
    #[arg(long)]
    merge_tol: Option<f64>,
    #[arg(long)]
    max_contexts: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Select rows and export the measurement matrix.
    Construct {
        #[command(flatten)]
        common: Common,
        /// Matrix CSV path; defaults to `<out>.matrix.csv`.
        #[arg(long)]
        matrix_out: Option<PathBuf>,
    },
    /// Measurement rate m_N / N across depths.
    Trace {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        n_list: Option<Vec<u32>>,
    },
    /// Inclusion of kept sets across Bernoulli sources.
    Nested {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        p_list: Option<Vec<f64>>,
    },
    /// The EPI gap function g(c) on a grid.
    EpiCurve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        c_max: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Output SNR and MSE of SC decoding under Gaussian measurement noise.
    NoiseSim {
        #[command(flatten)]
        common: Common,
        /// `lo:hi:step` or a comma-separated list, in dB.
        #[arg(long)]
        snr_grid: Option<String>,
        #[arg(long)]
        trials: Option<usize>,
        /// Per-trial JSONL log.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Encode, optionally add noise, decode, and count exact recoveries.
    Roundtrip {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        sigma: Option<f64>,
        /// Keep every row instead of thresholding.
        #[arg(long)]
        full: bool,
    },
    /// Dropped entropy per symbol against its bound.
    RepCheck {
        #[command(flatten)]
        common: Common,
    },
    /// Quantizer MMSE and the measurement-rate lower bound.
    Quantize {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        q: Option<u32>,
    },
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn apply_common(cfg: &mut ExperimentConfig, c: Common) -> Result<(), CliError> {
    if let Some(s) = c.source {
        cfg.source = Source::parse(&s).map_err(CliError::Usage)?;
    }
    set(&mut cfg.n, c.n);
    set(&mut cfg.epsilon, c.epsilon);
    set(
        &mut cfg.method,
        c.method.map(|m| match m {
            MethodArg::Exact => Method::Exact,
            MethodArg::Mc => Method::MonteCarlo,
        }),
    );
    set(&mut cfg.samples, c.samples);
    set(&mut cfg.seed, c.seed);
    set(&mut cfg.prune_tau, c.prune_tau);
    set(&mut cfg.merge_tol, c.merge_tol);
    set(&mut cfg.max_contexts, c.max_contexts);
    if c.out.is_some() {
        cfg.output_path = c.out;
    }
    Ok(())
}

fn load(path: Option<&Path>) -> Result<ExperimentConfig, CliError> {
    let Some(path) = path else {
        return Ok(ExperimentConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(CliError::Io)?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn resolve(cmd: Cmd) -> Result<ExperimentConfig, CliError> {
    let (command, common) = match &cmd {
        Cmd::Construct { common, .. } => (Command::Construct, common),
        Cmd::Trace { common, .. } => (Command::Trace, common),
        Cmd::Nested { common, .. } => (Command::Nested, common),
        Cmd::EpiCurve { common, .. } => (Command::EpiCurve, common),
        Cmd::NoiseSim { common, .. } => (Command::NoiseSim, common),
        Cmd::Roundtrip { common, .. } => (Command::Roundtrip, common),
        Cmd::RepCheck { common } => (Command::RepCheck, common),
        Cmd::Quantize { common, .. } => (Command::Quantize, common),
    };
    let mut cfg = load(common.config.as_deref())?;
    cfg.command = command;
    match cmd {
        Cmd::Construct { common, matrix_out } => {
            apply_common(&mut cfg, common)?;
            if matrix_out.is_some() {
                cfg.matrix_path = matrix_out;
            }
        }
        Cmd::Trace { common, n_list } => {
            apply_common(&mut cfg, common)?;
            set(&mut cfg.n_list, n_list);
        }
        Cmd::Nested { common, p_list } => {
            apply_common(&mut cfg, common)?;
            set(&mut cfg.p_list, p_list);
        }
        Cmd::EpiCurve {
            common,
            c_max,
            steps,
            tol,
        } => {
            apply_common(&mut cfg, common)?;
            set(&mut cfg.c_max, c_max);
            set(&mut cfg.steps, steps);
            set(&mut cfg.tol, tol);
        }
        Cmd::NoiseSim {
            common,
            snr_grid,
            trials,
            trace,
        } => {
            apply_common(&mut cfg, common)?;
            if let Some(g) = snr_grid {
                cfg.snr_grid_db = parse_grid(&g).map_err(CliError::Usage)?;
            }
            set(&mut cfg.trials, trials);
            if trace.is_some() {
                cfg.trace_path = trace;
            }
        }
        Cmd::Roundtrip {
            common,
            trials,
            sigma,
            full,
        } => {
            apply_common(&mut cfg, common)?;
            set(&mut cfg.trials, trials);
            set(&mut cfg.sigma, sigma);
            cfg.full |= full;
        }
        Cmd::RepCheck { common } => apply_common(&mut cfg, common)?,
        Cmd::Quantize { common, q } => {
            apply_common(&mut cfg, common)?;
            set(&mut cfg.q, q);
        }
    }
    cfg.validate().map_err(CliError::Usage)?;
    Ok(cfg)
}

fn write(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    output::write_atomic(path, contents).map_err(CliError::Io)
}

fn json_bytes(value: &serde_json::Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("values serialize");
    s.push('\n');
    s.into_bytes()
}

fn emit(cfg: &ExperimentConfig, report: Report) -> Result<(), CliError> {
    let config = serde_json::to_value(cfg).expect("config serializes");
    let mut full = json!({ "config": config });
    if let serde_json::Value::Object(fields) = &report.body {
        for (k, v) in fields {
            full[k] = v.clone();
        }
    }

    match &cfg.output_path {
        None => match &report.csv {
            Some(csv) => print!("{csv}"),
            None => print!("{}", String::from_utf8(json_bytes(&full)).expect("utf8")),
        },
        Some(out) if output::is_json(out) || report.csv.is_none() => write(out, &json_bytes(&full))?,
        Some(out) => {
            write(out, report.csv.as_deref().unwrap_or_default().as_bytes())?;
            write(&output::sidecar_path(out), &json_bytes(&json!({ "config": config })))?;
        }
    }

    if let Some(matrix) = &report.matrix_csv {
        let path = cfg
            .matrix_path
            .clone()
            .or_else(|| cfg.output_path.as_deref().map(output::matrix_path));
        if let Some(path) = path {
            write(&path, matrix.as_bytes())?;
            write(&output::sidecar_path(&path), &json_bytes(&json!({ "config": config })))?;
        }
    }
    if let (Some(trace), Some(path)) = (&report.trace_jsonl, &cfg.trace_path) {
        write(path, trace.as_bytes())?;
    }
    match report.failed_check {
        Some(msg) => Err(CliError::Check(msg)),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = resolve(cli.command).and_then(|cfg| {
        let report = commands::run(&cfg)?;
        emit(&cfg, report)
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{msg}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
