//! Resolved experiment configuration, echoed into every artifact.

use std::path::PathBuf;

use hadamard_sensing::construct::density::EvolveOptions;
use hadamard_sensing::construct::{EntropyMethod, Method};
use hadamard_sensing::ZDist;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Construct,
    Trace,
    Nested,
    EpiCurve,
    NoiseSim,
    Roundtrip,
    RepCheck,
    Quantize,
}

/// A preset such as `bernoulli:0.05`, or an explicit pmf.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Source {
    Preset(String),
    Dist(ZDist),
}

impl Source {
    /// Accepts `bernoulli:p`, `uniform:lo:hi`, `point:k`, inline ZDist JSON,
    /// or a path to a ZDist JSON file.
    pub fn parse(spec: &str) -> Result<Self, String> {
        let spec = spec.trim();
        if spec.starts_with('{') {
            let d: ZDist = serde_json::from_str(spec).map_err(|e| format!("source: {e}"))?;
            return Ok(Source::Dist(d));
        }
        if spec.contains(':') {
            let s = Source::Preset(spec.to_string());
            s.resolve()?;
            return Ok(s);
        }
        let text = std::fs::read_to_string(spec).map_err(|e| format!("source file {spec}: {e}"))?;
        let d: ZDist = serde_json::from_str(&text).map_err(|e| format!("source file {spec}: {e}"))?;
        Ok(Source::Dist(d))
    }

    pub fn resolve(&self) -> Result<ZDist, String> {
        let preset = match self {
            Source::Dist(d) => return Ok(d.clone()),
            Source::Preset(s) => s,
        };
        let parts: Vec<&str> = preset.split(':').collect();
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| format!("source {preset}: bad number {s:?}"))
        };
        let int = |s: &str| {
            s.parse::<i64>()
                .map_err(|_| format!("source {preset}: bad integer {s:?}"))
        };
        let d = match parts.as_slice() {
            ["bernoulli", p] => ZDist::bernoulli(num(p)?),
            ["uniform", lo, hi] => ZDist::uniform(int(lo)?, int(hi)?),
            ["point", k] => Ok(ZDist::point(int(k)?)),
            _ => return Err(format!("unknown source preset {preset:?}")),
        };
        d.map_err(|e| format!("source {preset}: {e}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    pub source: Source,
    pub n: u32,
    pub epsilon: f64,
    pub method: Method,
    pub samples: usize,
    pub seed: u64,
    pub prune_tau: f64,
    pub merge_tol: f64,
    pub max_contexts: usize,
    pub output_path: Option<PathBuf>,
    pub matrix_path: Option<PathBuf>,
    pub n_list: Vec<u32>,
    pub p_list: Vec<f64>,
    pub c_max: f64,
    pub steps: usize,
    pub tol: f64,
    pub snr_grid_db: Vec<f64>,
    pub trials: usize,
    pub sigma: f64,
    pub full: bool,
    pub trace_path: Option<PathBuf>,
    pub q: u32,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let evolve = EvolveOptions::default();
        Self {
            command: Command::Construct,
            source: Source::Preset("bernoulli:0.05".into()),
            n: 6,
            epsilon: 0.1,
            method: Method::Exact,
            samples: 10_000,
            seed: 1,
            prune_tau: evolve.prune_tau,
            merge_tol: evolve.merge_tol,
            max_contexts: evolve.max_contexts,
            output_path: None,
            matrix_path: None,
            n_list: vec![6, 7, 8, 9],
            p_list: vec![0.01, 0.05, 0.1],
            c_max: 30.0,
            steps: 300,
            tol: 1e-12,
            snr_grid_db: (0..=16).map(|k| 2.5 * k as f64).collect(),
            trials: 200,
            sigma: 0.0,
            full: false,
            trace_path: None,
            q: 16,
        }
    }
}

impl ExperimentConfig {
    pub fn entropy_method(&self) -> EntropyMethod {
        match self.method {
            Method::Exact => EntropyMethod::Exact(EvolveOptions {
                prune_tau: self.prune_tau,
                merge_tol: self.merge_tol,
                max_contexts: self.max_contexts,
            }),
            Method::MonteCarlo => EntropyMethod::MonteCarlo {
                samples: self.samples,
                seed: self.seed,
            },
        }
    }

    /// Range checks on every field the command reads. Violations are usage
    /// errors.
    pub fn validate(&self) -> Result<(), String> {
        fn need(ok: bool, msg: &str) -> Result<(), String> {
            if ok {
                Ok(())
            } else {
                Err(msg.to_string())
            }
        }
        need(self.n <= 20, "n must be at most 20")?;
        need(self.epsilon > 0.0 && self.epsilon.is_finite(), "epsilon must be positive")?;
        need(self.samples >= 1, "samples must be at least 1")?;
        need((0.0..0.5).contains(&self.prune_tau), "prune_tau must be in [0, 0.5)")?;
        need((0.0..=2.0).contains(&self.merge_tol), "merge_tol must be in [0, 2]")?;
        need(self.max_contexts >= 1, "max_contexts must be at least 1")?;
        match self.command {
            Command::Trace => {
                need(!self.n_list.is_empty(), "n_list must not be empty")?;
                need(self.n_list.iter().all(|n| *n <= 20), "n_list entries must be at most 20")?;
            }
            Command::Nested => {
                need(!self.p_list.is_empty(), "p_list must not be empty")?;
                need(
                    self.p_list.iter().all(|p| *p > 0.0 && *p <= 0.5),
                    "p_list entries must be in (0, 0.5]",
                )?;
            }
            Command::EpiCurve => {
                need(self.c_max > 0.0 && self.c_max.is_finite(), "c_max must be positive")?;
                need(self.steps >= 2, "steps must be at least 2")?;
                need(self.tol > 0.0, "tol must be positive")?;
            }
            Command::NoiseSim => {
                need(!self.snr_grid_db.is_empty(), "snr grid must not be empty")?;
                need(self.snr_grid_db.iter().all(|v| v.is_finite()), "snr grid must be finite")?;
                need(self.trials >= 1, "trials must be at least 1")?;
            }
            Command::Roundtrip => {
                need(self.trials >= 1, "trials must be at least 1")?;
                need(self.sigma >= 0.0 && self.sigma.is_finite(), "sigma must be nonnegative")?;
            }
            Command::Quantize => need(self.q >= 2, "q must be at least 2")?,
            Command::Construct | Command::RepCheck => {}
        }
        if !matches!(self.command, Command::Nested | Command::EpiCurve | Command::Quantize) {
            self.source.resolve()?;
        }
        Ok(())
    }
}

/// Parses `a:b:step` (inclusive) or a comma-separated list.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, String> {
    let bad = || format!("bad grid {spec:?}");
    if spec.contains(':') {
        let parts: Vec<f64> = spec
            .split(':')
            .map(|s| s.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_, _>>()?;
        let [lo, hi, step] = parts[..] else {
            return Err(bad());
        };
        if !(step > 0.0) || hi < lo {
            return Err(bad());
        }
        let count = ((hi - lo) / step + 1e-9).floor() as usize;
        return Ok((0..=count).map(|k| lo + step * k as f64).collect());
    }
    spec.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| bad()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets() {
        assert_eq!(
            Source::parse("bernoulli:0.25").unwrap().resolve().unwrap(),
            ZDist::bernoulli(0.25).unwrap()
        );
        assert_eq!(
            Source::parse("uniform:-1:1").unwrap().resolve().unwrap(),
            ZDist::uniform(-1, 1).unwrap()
        );
        let d = Source::parse(r#"{"offset": 2, "masses": [0.5, 0.5]}"#).unwrap();
        assert_eq!(d.resolve().unwrap(), ZDist::new(2, vec![0.5, 0.5]).unwrap());
        assert!(Source::parse("bernoulli:1.5").is_err());
        assert!(Source::parse("poisson:1").is_err());
        assert!(Source::parse(r#"{"offset": 0, "masses": [0.5]}"#).is_err());
    }

    #[test]
    fn config_round_trip() {
        let cfg = ExperimentConfig {
            source: Source::Dist(ZDist::new(-1, vec![0.25, 0.5, 0.25]).unwrap()),
            method: Method::MonteCarlo,
            ..ExperimentConfig::default()
        };
        let text = serde_json::to_string(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(serde_json::to_string(&back).unwrap(), text);
    }

    #[test]
    fn partial_config_uses_defaults() {
        let cfg: ExperimentConfig =
            serde_json::from_str(r#"{"command": "trace", "epsilon": 0.2}"#).unwrap();
        assert_eq!(cfg.command, Command::Trace);
        assert_eq!(cfg.epsilon, 0.2);
        assert_eq!(cfg.n_list, vec![6, 7, 8, 9]);
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn validation() {
        let mut cfg = ExperimentConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.epsilon = 0.0;
        assert!(cfg.validate().is_err());
        cfg.epsilon = 0.1;
        cfg.command = Command::Quantize;
        cfg.q = 1;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0:10:2.5").unwrap(), vec![0.0, 2.5, 5.0, 7.5, 10.0]);
        assert_eq!(parse_grid("1, 3,7").unwrap(), vec![1.0, 3.0, 7.0]);
        assert!(parse_grid("0:10:0").is_err());
        assert!(parse_grid("a,b").is_err());
    }
}
