//! Experiment configuration files.
//!
//! A config is flat `key = value` text with section headers:
//!
//! ```text
//! reps = 20
//! seed = 1
//! output_dir = "out/spectrum"
//!
//! [qubit]
//! f = 1.0
//! kappa = 0.02
//!
//! [plan.interleaved]
//! f_L = 0.8
//! B = 0.4
//! M = 160
//! N = 100
//!
//! [sweep]
//! axis = "N"
//! values = [10, 25, 50, 100, 200]
//! ```

use std::path::{Path, PathBuf};

use qubit_interleave::{
    build_interleaved_schedule, build_sinc_schedule, FitModel, PipelineOptions, QubitParams, SamplingPlan, Scheme,
};
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("{path}:{line}: field `{field}`: {message}", line = line.map(|l| l.to_string()).unwrap_or_else(|| "?".into()))]
    Invalid {
        path: String,
        field: String,
        line: Option<usize>,
        message: String,
    },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    reps: Option<usize>,
    seed: Option<u64>,
    output_dir: Option<PathBuf>,
    noiseless: Option<bool>,
    oversample: Option<usize>,
    zero_pad: Option<usize>,
    model: Option<FitModel>,
    fit_band: Option<(f64, f64)>,
    qubit: RawQubit,
    #[serde(default)]
    plan: RawPlans,
    sweep: Option<RawSweep>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawQubit {
    f: f64,
    kappa: f64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPlans {
    sinc: Option<RawPlan>,
    interleaved: Option<RawPlan>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPlan {
    #[serde(alias = "f_L")]
    f_low: f64,
    #[serde(alias = "B")]
    bandwidth: f64,
    #[serde(alias = "M")]
    m: usize,
    #[serde(alias = "N")]
    n: u32,
    k: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    axis: String,
    values: Vec<i64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    N,
    M,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::N => "N",
            SweepAxis::M => "M",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub axis: SweepAxis,
    pub values: Vec<u64>,
}

/// A validated experiment configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub params: QubitParams,
    /// Plans in scheme order (sinc first).
    pub plans: Vec<SamplingPlan>,
    pub reps: usize,
    pub base_seed: u64,
    pub sweep: Option<Sweep>,
    pub output_dir: PathBuf,
    pub options: PipelineOptions,
}

/// Line number (1-based) of `key` inside `[section]`, or at top level when
/// `section` is empty.
fn locate(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if let Some(header) = trimmed.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            current = header.trim().to_string();
            if key.is_empty() && current == section {
                return Some(i + 1);
            }
            continue;
        }
        if current == section && !key.is_empty() {
            if let Some((k, _)) = trimmed.split_once('=') {
                if k.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    None
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Parses and validates config text; `origin` names the source in errors.
    pub fn parse(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
        let invalid = |section: &str, keys: &[&str], message: String| {
            let line = keys
                .iter()
                .find_map(|k| locate(text, section, k))
                .or_else(|| locate(text, section, ""));
            let field = if section.is_empty() {
                keys[0].to_string()
            } else {
                format!("{section}.{}", keys[0])
            };
            ConfigError::Invalid {
                path: origin.to_string(),
                field,
                line,
                message,
            }
        };

        let params = QubitParams::new(raw.qubit.f, raw.qubit.kappa)
            .map_err(|e| invalid("qubit", &["kappa", "f"], e.to_string()))?;

        let mut plans = Vec::new();
        for (scheme, raw_plan) in [
            (Scheme::Sinc, &raw.plan.sinc),
            (Scheme::Interleaved, &raw.plan.interleaved),
        ] {
            let Some(p) = raw_plan else { continue };
            let section = format!("plan.{}", scheme.name());
            let plan = match scheme {
                Scheme::Sinc => {
                    if p.k.is_some() {
                        return Err(invalid(
                            &section,
                            &["k"],
                            "offset k only applies to interleaved plans".into(),
                        ));
                    }
                    build_sinc_schedule(p.f_low, p.bandwidth, p.m, p.n)
                }
                Scheme::Interleaved => build_interleaved_schedule(p.f_low, p.bandwidth, p.k, p.m, p.n),
            };
            let plan = plan.map_err(|e| {
                let keys: &[&str] = match e {
                    qubit_interleave::Error::InvalidBand { .. } => &["B", "bandwidth", "f_L", "f_low"],
                    qubit_interleave::Error::OddM(_) => &["M", "m"],
                    qubit_interleave::Error::KernelSingular { .. } => &["k", "B", "bandwidth"],
                    _ => &["M", "m", "N", "n", "k"],
                };
                invalid(&section, keys, e.to_string())
            })?;
            plans.push(plan);
        }
        if plans.is_empty() {
            return Err(invalid(
                "plan",
                &["plan"],
                "at least one of [plan.sinc] or [plan.interleaved] is required".into(),
            ));
        }

        let reps = raw.reps.unwrap_or(20);
        if reps < 1 {
            return Err(invalid("", &["reps"], "reps must be at least 1".into()));
        }

        let sweep = match raw.sweep {
            None => None,
            Some(s) => {
                let axis = match s.axis.as_str() {
                    "N" | "n" => SweepAxis::N,
                    "M" | "m" => SweepAxis::M,
                    other => {
                        return Err(invalid(
                            "sweep",
                            &["axis"],
                            format!("axis must be N or M, got {other:?}"),
                        ))
                    }
                };
                if s.values.is_empty() || s.values.iter().any(|&v| v <= 0) {
                    return Err(invalid(
                        "sweep",
                        &["values"],
                        "values must be a non-empty list of positive integers".into(),
                    ));
                }
                Some(Sweep {
                    axis,
                    values: s.values.into_iter().map(|v| v as u64).collect(),
                })
            }
        };

        let defaults = PipelineOptions::default();
        let options = PipelineOptions {
            oversample: raw.oversample.unwrap_or(defaults.oversample),
            zero_pad: raw.zero_pad.unwrap_or(defaults.zero_pad),
            model: raw.model.unwrap_or(defaults.model),
            noiseless: raw.noiseless.unwrap_or(false),
            fit_band: raw.fit_band,
        };
        if let Some((lo, hi)) = options.fit_band {
            if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
                return Err(invalid(
                    "",
                    &["fit_band"],
                    format!("fit band [{lo}, {hi}] must satisfy 0 <= lo < hi"),
                ));
            }
        }
        if options.oversample < 4 {
            return Err(invalid("", &["oversample"], "oversample must be at least 4".into()));
        }
        if options.zero_pad < 1 {
            return Err(invalid("", &["zero_pad"], "zero_pad must be at least 1".into()));
        }

        Ok(Self {
            params,
            plans,
            reps,
            base_seed: raw.seed.unwrap_or(0),
            sweep,
            output_dir: raw.output_dir.unwrap_or_else(|| PathBuf::from("out")),
            options,
        })
    }

    pub fn plan(&self, scheme: Scheme) -> Option<&SamplingPlan> {
        self.plans.iter().find(|p| p.scheme() == scheme)
    }

    /// Seed of trial `j`.
    pub fn trial_seed(&self, j: usize) -> u64 {
        self.base_seed.wrapping_add(j as u64)
    }
}
