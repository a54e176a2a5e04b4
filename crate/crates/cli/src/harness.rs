//! Experiment runners writing CSV and JSON artifacts.
//!
//! Every artifact is a pure function of the configuration and its base seed:
//! trial `j` uses seed `base_seed + j`, and within a trial sample point `i`
//! draws its outcomes from stream `i` of a ChaCha8 generator with that seed.
//! Trials run concurrently but results are collected in trial order and each
//! file is written by a single thread.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use qubit_interleave::measurement::simulate_record;
use qubit_interleave::pipeline::{analyze, sample_plan};
use qubit_interleave::reconstruction::central_rms_error;
use qubit_interleave::spectral::DEFAULT_OVERSAMPLE;
use qubit_interleave::{min_total_time, reconstruct, Error as CoreError, SampleSet, SamplingPlan, Scheme};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::config::{ConfigError, ExperimentConfig, SweepAxis};

pub const SEED_NOTE: &str =
    "trial j uses seed base_seed + j; sample point i draws its N outcomes from ChaCha8 stream i of that seed";

/// Points used for the central-half-window RMS error.
const RMS_POINTS: usize = 2000;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Precondition(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    /// Process exit code: 2 for configuration problems, 3 for runtime or fit failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Precondition(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })
}

fn write_pairs(path: &Path, header: [&str; 2], rows: impl IntoIterator<Item = (f64, f64)>) -> Result<()> {
    let mut wr = csv::Writer::from_writer(create(path)?);
    let io_err = |e: csv::Error| HarnessError::Core(CoreError::from(e));
    wr.write_record(header).map_err(io_err)?;
    for (a, b) in rows {
        wr.write_record([a.to_string(), b.to_string()]).map_err(io_err)?;
    }
    wr.flush().map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w).and_then(|_| w.flush()).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PlanInfo {
    pub scheme: Scheme,
    pub f_low: f64,
    pub bandwidth: f64,
    pub m: usize,
    pub n: u32,
    pub k: Option<f64>,
    pub dt: f64,
    pub sample_rate: f64,
    pub window_end: f64,
    pub min_total_time: f64,
}

impl From<&SamplingPlan> for PlanInfo {
    fn from(p: &SamplingPlan) -> Self {
        Self {
            scheme: p.scheme(),
            f_low: p.f_low(),
            bandwidth: p.bandwidth(),
            m: p.m(),
            n: p.n(),
            k: (p.scheme() == Scheme::Interleaved).then(|| p.k()),
            dt: p.dt(),
            sample_rate: p.sample_rate(),
            window_end: p.window_end(),
            min_total_time: min_total_time(p),
        }
    }
}

// ---------------------------------------------------------------------------
// Timing

#[derive(Debug, Clone, Serialize)]
pub struct PairRatio {
    pub numerator: usize,
    pub denominator: usize,
    pub sample_ratio: f64,
    pub sample_rate_ratio: f64,
    pub time_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TimingReport {
    pub plans: Vec<PlanInfo>,
    /// One entry per ordered pair `i < j`: plan `i` over plan `j`.
    pub ratios: Vec<PairRatio>,
}

/// Minimum measurement time, sample counts and pairwise ratios of plans
/// observing the same window.
pub fn report_timing(plans: &[SamplingPlan]) -> std::result::Result<TimingReport, CoreError> {
    if plans.len() < 2 {
        return Err(CoreError::InvalidPlan(
            "timing comparison needs at least two plans".into(),
        ));
    }
    let w0 = plans[0].window_end();
    for p in &plans[1..] {
        let w = p.window_end();
        if (w - w0).abs() > 0.01 * w.max(w0) {
            return Err(CoreError::WindowMismatch(w0, w));
        }
    }
    let infos: Vec<PlanInfo> = plans.iter().map(PlanInfo::from).collect();
    let mut ratios = Vec::new();
    for i in 0..infos.len() {
        for j in i + 1..infos.len() {
            let (a, b) = (&infos[i], &infos[j]);
            ratios.push(PairRatio {
                numerator: i,
                denominator: j,
                sample_ratio: a.m as f64 / b.m as f64,
                sample_rate_ratio: a.sample_rate / b.sample_rate,
                time_ratio: a.min_total_time / b.min_total_time,
            });
        }
    }
    Ok(TimingReport { plans: infos, ratios })
}

/// Timing of the configured plans; a single plan is compared with its
/// equivalent sinc plan.
pub fn run_timing(cfg: &ExperimentConfig, out: &Path) -> Result<TimingReport> {
    let plans = if cfg.plans.len() == 1 {
        vec![cfg.plans[0].equivalent_sinc()?, cfg.plans[0].clone()]
    } else {
        cfg.plans.clone()
    };
    let report = report_timing(&plans)?;
    write_json(&out.join("timing.json"), &report)?;
    Ok(report)
}

// ---------------------------------------------------------------------------
// Reconstruction

#[derive(Debug, Clone, Serialize)]
pub struct SchemeReconstruction {
    pub plan: PlanInfo,
    pub samples: usize,
    /// Central-half-window RMS error against `rz(t)`, one per repetition.
    pub rms_errors: Vec<f64>,
    pub mean_rms_error: f64,
    pub window: (f64, f64),
}

#[derive(Debug, Clone, Serialize)]
pub struct ReconstructionSummary {
    pub f: f64,
    pub kappa: f64,
    pub reps: usize,
    pub base_seed: u64,
    pub seeds: Vec<u64>,
    pub seed_derivation: &'static str,
    pub noiseless: bool,
    pub schemes: Vec<SchemeReconstruction>,
    /// Interleaved over sinc sample count.
    pub sample_ratio: f64,
    /// Interleaved over sinc sample rate, `2B / 2(f_L + B)`.
    pub sample_rate_ratio: f64,
}

/// Samples, dense reconstructions and the exact reference for both schemes.
///
/// Writes per scheme `<scheme>_reference.csv` and, per repetition `j`,
/// `<scheme>_record_<j>.csv` (omitted when noiseless), `<scheme>_samples_<j>.csv`
/// and `<scheme>_reconstruction_<j>.csv`; then `summary.json`.
pub fn run_reconstruction(cfg: &ExperimentConfig, out: &Path) -> Result<ReconstructionSummary> {
    let (Some(sinc), Some(inter)) = (cfg.plan(Scheme::Sinc), cfg.plan(Scheme::Interleaved)) else {
        return Err(HarnessError::Precondition(
            "reconstruct needs both [plan.sinc] and [plan.interleaved]".into(),
        ));
    };
    let seeds: Vec<u64> = (0..cfg.reps).map(|j| cfg.trial_seed(j)).collect();
    let params = cfg.params;
    let mut schemes = Vec::new();
    for plan in [sinc, inter] {
        let name = plan.scheme().name();
        let step = plan.dt() / DEFAULT_OVERSAMPLE as f64;
        let mut rms_errors = Vec::with_capacity(seeds.len());
        let mut window = (0.0, 0.0);
        for (j, &seed) in seeds.iter().enumerate() {
            let samples = if cfg.options.noiseless {
                sample_plan(&params, plan, seed, true)?
            } else {
                let record = simulate_record(&params, plan, seed)?;
                record.write_csv(create(&out.join(format!("{name}_record_{j}.csv")))?)?;
                SampleSet::from(&record)
            };
            write_pairs(
                &out.join(format!("{name}_samples_{j}.csv")),
                ["time", "average"],
                samples.times.iter().copied().zip(samples.values.iter().copied()),
            )?;
            let signal = reconstruct(&samples, plan)?;
            window = signal.window();
            signal
                .render(step)?
                .write_csv(create(&out.join(format!("{name}_reconstruction_{j}.csv")))?)?;
            rms_errors.push(central_rms_error(&signal, |t| exact_rz(&params, t), RMS_POINTS));
        }
        let count = ((window.1 - window.0) / step + 1e-9).floor() as usize + 1;
        write_pairs(
            &out.join(format!("{name}_reference.csv")),
            ["time", "amplitude"],
            (0..count).map(|i| {
                let t = window.0 + i as f64 * step;
                (t, exact_rz(&params, t))
            }),
        )?;
        let mean_rms_error = rms_errors.iter().sum::<f64>() / rms_errors.len() as f64;
        schemes.push(SchemeReconstruction {
            plan: plan.into(),
            samples: plan.m(),
            rms_errors,
            mean_rms_error,
            window,
        });
    }
    let summary = ReconstructionSummary {
        f: params.f,
        kappa: params.kappa,
        reps: cfg.reps,
        base_seed: cfg.base_seed,
        seeds,
        seed_derivation: SEED_NOTE,
        noiseless: cfg.options.noiseless,
        sample_ratio: inter.m() as f64 / sinc.m() as f64,
        sample_rate_ratio: inter.sample_rate() / sinc.sample_rate(),
        schemes,
    };
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

fn exact_rz(params: &qubit_interleave::QubitParams, t: f64) -> f64 {
    // Parameters were validated when the config was built, and render grids start at t > 0.
    qubit_interleave::dynamics::rz_at(params, t).expect("validated parameters")
}

// ---------------------------------------------------------------------------
// Spectrum

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumSummary {
    pub f: f64,
    pub kappa: f64,
    pub seed: u64,
    pub seed_derivation: &'static str,
    pub noiseless: bool,
    pub plan: PlanInfo,
    pub resolution: f64,
    pub fft_len: usize,
    pub f_hat: f64,
    pub kappa_hat: f64,
    pub tau_hat: f64,
    pub amp_hat: f64,
    pub residual: f64,
    pub f_rel_error: f64,
    /// Equivalent sinc plan against the interleaved plan.
    pub timing: TimingReport,
    pub time_saving: f64,
}

/// Spectrum of the interleaved reconstruction and its resonance fit.
///
/// Writes `spectrum.csv`, then on success `fit_model.csv` (model over the
/// fit band at the spectrum's bins), `fit.txt` and `summary.json`. A failed fit
/// leaves `spectrum.csv` behind for inspection.
pub fn run_spectrum(cfg: &ExperimentConfig, out: &Path) -> Result<SpectrumSummary> {
    let Some(plan) = cfg.plan(Scheme::Interleaved) else {
        return Err(HarnessError::Precondition(
            "spectrum needs an [plan.interleaved] section".into(),
        ));
    };
    let seed = cfg.trial_seed(0);
    let samples = sample_plan(&cfg.params, plan, seed, cfg.options.noiseless)?;
    let signal = reconstruct(&samples, plan)?;
    let spectrum = qubit_interleave::amplitude_spectrum(&signal, cfg.options.oversample, cfg.options.zero_pad)?;
    spectrum.write_csv(create(&out.join("spectrum.csv"))?)?;
    let run = analyze(samples, plan, &cfg.options)?;
    let fit = run.fit;

    let band = run.spectrum.band_indices(fit.band.0, fit.band.1);
    write_pairs(
        &out.join("fit_model.csv"),
        ["freq", "amp"],
        run.spectrum.freqs[band].iter().map(|&f| (f, fit.model_at(f))),
    )?;
    let mut w = create(&out.join("fit.txt"))?;
    w.write_all(fit.to_kv_text(&run.grid).as_bytes())
        .and_then(|_| w.flush())
        .map_err(|source| HarnessError::Io {
            path: out.join("fit.txt"),
            source,
        })?;

    let timing = report_timing(&[plan.equivalent_sinc()?, plan.clone()])?;
    let summary = SpectrumSummary {
        f: cfg.params.f,
        kappa: cfg.params.kappa,
        seed,
        seed_derivation: SEED_NOTE,
        noiseless: cfg.options.noiseless,
        plan: plan.into(),
        resolution: run.spectrum.resolution,
        fft_len: run.spectrum.fft_len,
        f_hat: fit.f_hat,
        kappa_hat: fit.kappa_hat,
        tau_hat: fit.tau_hat,
        amp_hat: fit.amp_hat,
        residual: fit.residual,
        f_rel_error: (fit.f_hat - cfg.params.f).abs() / cfg.params.f,
        time_saving: timing.ratios[0].time_ratio,
        timing,
    };
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

// ---------------------------------------------------------------------------
// Sweeps

/// Outcome of a single seeded trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Trial {
    Ok { f_hat: f64, tau_hat: f64 },
    Failed(String),
}

/// One row per (axis value, scheme).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub axis: SweepAxis,
    pub value: u64,
    pub scheme: Scheme,
    pub reps: usize,
    pub ok: usize,
    pub failed: usize,
    pub mean_tau: f64,
    /// Sample standard deviation of `tau_hat` over successful trials; 0 for a single trial.
    pub std_tau: f64,
    pub mean_f: f64,
    pub min_total_time: f64,
    pub status: String,
    #[serde(skip)]
    pub trials: Vec<Trial>,
}

impl Serialize for SweepAxis {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

fn plan_at(plan: &SamplingPlan, axis: SweepAxis, value: u64) -> std::result::Result<SamplingPlan, CoreError> {
    match axis {
        SweepAxis::N => {
            let n = u32::try_from(value).map_err(|_| CoreError::InvalidPlan(format!("N = {value} too large")))?;
            plan.with_n(n)
        }
        SweepAxis::M => plan.with_m(value as usize),
    }
}

fn summarize(axis: SweepAxis, value: u64, scheme: Scheme, tmin: f64, trials: Vec<Trial>) -> SweepRow {
    let ok: Vec<(f64, f64)> = trials
        .iter()
        .filter_map(|t| match t {
            Trial::Ok { f_hat, tau_hat } => Some((*f_hat, *tau_hat)),
            Trial::Failed(_) => None,
        })
        .collect();
    let failed = trials.len() - ok.len();
    let n = ok.len() as f64;
    let (mean_tau, mean_f, std_tau) = if ok.is_empty() {
        (f64::NAN, f64::NAN, f64::NAN)
    } else {
        let mt = ok.iter().map(|x| x.1).sum::<f64>() / n;
        let mf = ok.iter().map(|x| x.0).sum::<f64>() / n;
        let sd = if ok.len() > 1 {
            (ok.iter().map(|x| (x.1 - mt).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        (mt, mf, sd)
    };
    let status = if failed == 0 {
        "ok".to_string()
    } else {
        let first = trials.iter().find_map(|t| match t {
            Trial::Failed(e) => Some(e.as_str()),
            Trial::Ok { .. } => None,
        });
        let tag = if ok.is_empty() { "failed" } else { "partial" };
        format!(
            "{tag}: {failed}/{} trials failed ({})",
            trials.len(),
            first.unwrap_or("")
        )
    };
    SweepRow {
        axis,
        value,
        scheme,
        reps: trials.len(),
        ok: ok.len(),
        failed,
        mean_tau,
        std_tau,
        mean_f,
        min_total_time: tmin,
        status,
        trials,
    }
}

/// Runs `reps` seeded pipelines for every axis value and configured scheme.
/// Failures are recorded per row; the sweep itself only fails on a missing
/// `[sweep]` section.
pub fn sweep_estimates(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    let Some(sweep) = &cfg.sweep else {
        return Err(HarnessError::Precondition("sweep needs a [sweep] section".into()));
    };
    let cells: Vec<(u64, &SamplingPlan)> = sweep
        .values
        .iter()
        .flat_map(|&v| cfg.plans.iter().map(move |p| (v, p)))
        .collect();
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..cfg.reps).map(move |j| (c, j)))
        .collect();
    let results: Vec<Trial> = jobs
        .par_iter()
        .map(|&(c, j)| {
            let (value, base) = cells[c];
            let run = plan_at(base, sweep.axis, value)
                .and_then(|plan| qubit_interleave::run_pipeline(&cfg.params, &plan, cfg.trial_seed(j), &cfg.options));
            match run {
                Ok(r) => Trial::Ok {
                    f_hat: r.fit.f_hat,
                    tau_hat: r.fit.tau_hat,
                },
                Err(e) => Trial::Failed(e.to_string()),
            }
        })
        .collect();
    let rows = cells
        .iter()
        .zip(results.chunks(cfg.reps))
        .map(|(&(value, base), trials)| {
            let tmin = plan_at(base, sweep.axis, value)
                .map(|p| min_total_time(&p))
                .unwrap_or(f64::NAN);
            summarize(sweep.axis, value, base.scheme(), tmin, trials.to_vec())
        })
        .collect();
    Ok(rows)
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary<'a> {
    pub f: f64,
    pub kappa: f64,
    pub reps: usize,
    pub base_seed: u64,
    pub seed_derivation: &'static str,
    pub noiseless: bool,
    pub rows: &'a [SweepRow],
}

/// Writes `sweep.csv` and `summary.json`.
pub fn write_sweep(cfg: &ExperimentConfig, rows: &[SweepRow], out: &Path) -> Result<()> {
    let path = out.join("sweep.csv");
    let mut wr = csv::Writer::from_writer(create(&path)?);
    let io_err = |e: csv::Error| HarnessError::Core(CoreError::from(e));
    wr.write_record([
        "axis",
        "value",
        "scheme",
        "reps",
        "ok",
        "failed",
        "mean_tau",
        "std_tau",
        "mean_f",
        "min_total_time",
        "status",
    ])
    .map_err(io_err)?;
    for r in rows {
        wr.write_record([
            r.axis.name().to_string(),
            r.value.to_string(),
            r.scheme.name().to_string(),
            r.reps.to_string(),
            r.ok.to_string(),
            r.failed.to_string(),
            r.mean_tau.to_string(),
            r.std_tau.to_string(),
            r.mean_f.to_string(),
            r.min_total_time.to_string(),
            r.status.clone(),
        ])
        .map_err(io_err)?;
    }
    wr.flush().map_err(|source| HarnessError::Io { path, source })?;
    let summary = SweepSummary {
        f: cfg.params.f,
        kappa: cfg.params.kappa,
        reps: cfg.reps,
        base_seed: cfg.base_seed,
        seed_derivation: SEED_NOTE,
        noiseless: cfg.options.noiseless,
        rows,
    };
    write_json(&out.join("summary.json"), &summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use qubit_interleave::{build_interleaved_schedule, build_sinc_schedule};

    #[test]
    fn identical_plans_ratio_one() {
        let p = build_interleaved_schedule(0.8, 0.4, None, 160, 100).unwrap();
        let r = report_timing(&[p.clone(), p]).unwrap();
        assert_eq!(r.ratios.len(), 1);
        assert_eq!(r.ratios[0].time_ratio, 1.0);
        assert_eq!(r.ratios[0].sample_ratio, 1.0);
    }

    #[test]
    fn timing_rejects_mismatched_windows() {
        let a = build_sinc_schedule(0.8, 0.4, 100, 100).unwrap();
        let b = build_sinc_schedule(0.8, 0.4, 120, 100).unwrap();
        assert!(matches!(
            report_timing(&[a.clone(), b]),
            Err(CoreError::WindowMismatch(..))
        ));
        assert!(report_timing(&[a]).is_err());
    }

    #[test]
    fn sample_rate_ratio_is_analytic() {
        let p = build_interleaved_schedule(0.8, 0.4, None, 160, 100).unwrap();
        let r = report_timing(&[p.clone(), p.equivalent_sinc().unwrap()]).unwrap();
        let expected = 0.4 / (2.0 * (0.8 + 0.4)) * 2.0;
        assert!((r.ratios[0].sample_rate_ratio - expected).abs() < 1e-12);
    }

    #[test]
    fn single_trial_has_zero_std() {
        let row = summarize(
            SweepAxis::N,
            10,
            Scheme::Sinc,
            1.0,
            vec![Trial::Ok {
                f_hat: 1.0,
                tau_hat: 40.0,
            }],
        );
        assert_eq!(row.std_tau, 0.0);
        assert_eq!(row.status, "ok");
    }

    #[test]
    fn failures_are_recorded() {
        let trials = vec![
            Trial::Ok {
                f_hat: 1.0,
                tau_hat: 40.0,
            },
            Trial::Ok {
                f_hat: 1.0,
                tau_hat: 44.0,
            },
            Trial::Failed("no resonance".into()),
        ];
        let row = summarize(SweepAxis::M, 160, Scheme::Interleaved, 1.0, trials);
        assert_eq!((row.ok, row.failed), (2, 1));
        assert_eq!(row.mean_tau, 42.0);
        assert!((row.std_tau - 8f64.sqrt()).abs() < 1e-12);
        assert!(row.status.starts_with("partial: 1/3"), "{}", row.status);

        let row = summarize(SweepAxis::M, 160, Scheme::Sinc, 1.0, vec![Trial::Failed("x".into())]);
        assert!(row.mean_tau.is_nan() && row.status.starts_with("failed"));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(HarnessError::Precondition("x".into()).exit_code(), 2);
        assert_eq!(HarnessError::Core(CoreError::EmptyWindow).exit_code(), 3);
    }
}
