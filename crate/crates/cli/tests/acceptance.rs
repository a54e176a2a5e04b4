//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Built with `harness = false` so the lines are always printed; the process
//! exits non-zero if any criterion fails.

use std::f64::consts::TAU;
use std::path::Path;
use std::time::{Duration, Instant};

use proptest::test_runner::{Config as PropConfig, TestCaseError, TestRunner};
use qinterleave_cli::harness::Trial;
use qinterleave_cli::{
    report_timing, run_reconstruction, run_spectrum, sweep_estimates, write_sweep, ExperimentConfig, SweepRow,
};
use qubit_interleave::dynamics::BlochIntegrator;
use qubit_interleave::reconstruction::{central_rms_error, sinc};
use qubit_interleave::{
    bloch_at, build_interleaved_schedule, interleaved_reconstruct, simulate_record, InterleaveKernelParams,
    QubitParams, SampleSet, Scheme,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(id: u32, title: &str, limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    let elapsed = start.elapsed();
    let in_time = limit.is_none_or(|l| elapsed <= l);
    let pass = out.pass && in_time;
    let budget = limit.map(|l| format!(" / {:.0}s", l.as_secs_f64())).unwrap_or_default();
    println!(
        "C{id} {} {title}: {} [{:.2}s{budget}]",
        if pass { "PASS" } else { "FAIL" },
        out.detail,
        elapsed.as_secs_f64()
    );
    pass
}

// --- 1 ---------------------------------------------------------------------

fn oracle_equivalence() -> Outcome {
    let dt = 1e-3;
    let steps = 200_000;
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for kappa in [0.0, 0.02, 0.1, 0.3] {
        let p = QubitParams::new(1.0, kappa).unwrap();
        let mut ode = BlochIntegrator::new(&p);
        let mut err = 0.0f64;
        for i in 1..=steps {
            ode.step(dt);
            let t = i as f64 * dt;
            let s = ode.state();
            let c = bloch_at(&p, t).unwrap();
            err = err
                .max((s.rx - c.rx).abs())
                .max((s.ry - c.ry).abs())
                .max((s.rz - c.rz).abs());
        }
        parts.push(format!("kappa={kappa}: {err:.1e}"));
        worst = worst.max(err);
    }
    Outcome {
        pass: worst < 1e-6,
        detail: format!("max |closed - RK4| on [0, 200] = {worst:.2e} ({})", parts.join(", ")),
    }
}

// --- 2 ---------------------------------------------------------------------

fn kernel_identities() -> Outcome {
    let (fl, b) = (0.8, 0.4003);
    let k = InterleaveKernelParams::default_offset(fl, b);
    let s = InterleaveKernelParams::new(fl, b, k).unwrap();
    let dt = 1.0 / b;
    let origin = s.eval(0.0);
    let mut lattice = 0.0f64;
    for n in -25i32..25 {
        if n != 0 {
            lattice = lattice.max(s.eval(n as f64 * dt).abs());
        }
        lattice = lattice.max(s.eval(n as f64 * dt + k).abs());
    }
    let bb = 0.5;
    let base = InterleaveKernelParams::new(0.0, bb, 0.5 / bb).unwrap();
    let mut reduction = 0.0f64;
    for i in 0..10_000 {
        let t = -40.0 + 80.0 * i as f64 / 9999.0;
        reduction = reduction.max((base.eval(t) - sinc(2.0 * bb * t)).abs());
    }
    Outcome {
        pass: origin == 1.0 && lattice < 1e-9 && reduction < 1e-9,
        detail: format!(
            "S(0) = {origin}, max |S| on 50 lattice points = {lattice:.1e}, baseband vs sinc on 1e4 points = {reduction:.1e}"
        ),
    }
}

// --- 3 ---------------------------------------------------------------------

fn two_tone_rms(tones: [(f64, f64, f64); 2], m: usize) -> f64 {
    let (fl, b) = (0.8, 0.4003);
    let plan = build_interleaved_schedule(fl, b, None, m, 1).unwrap();
    let x = move |t: f64| tones.iter().map(|(f, a, ph)| a * (TAU * f * t + ph).cos()).sum::<f64>();
    let (ta, tb) = plan.series_times();
    let a = SampleSet::from_fn(ta, x);
    let bs = SampleSet::from_fn(tb, x);
    let sig = interleaved_reconstruct(&a, &bs, &plan).unwrap();
    central_rms_error(&sig, x, 2000)
}

fn band_limited_exactness() -> Outcome {
    let ms = [50, 100, 200, 400];
    let fixed = [(0.93, 1.0, 0.0), (1.08, 0.6, 0.7)];
    let errs: Vec<f64> = ms.iter().map(|&m| two_tone_rms(fixed, m)).collect();
    let monotone = errs.windows(2).all(|w| w[1] < w[0]);
    let at200 = errs[2];

    let mut runner = TestRunner::new(PropConfig {
        cases: 24,
        failure_persistence: None,
        ..PropConfig::default()
    });
    let strategy = (0.88f64..1.12, 0.88f64..1.12, 0.2f64..1.0, 0.0f64..TAU);
    let prop = runner.run(&strategy, |(f1, f2, a2, ph)| {
        let tones = [(f1, 1.0, 0.0), (f2, a2, ph)];
        let (e50, e200, e400) = (
            two_tone_rms(tones, 50),
            two_tone_rms(tones, 200),
            two_tone_rms(tones, 400),
        );
        if e200 >= 1e-2 {
            return Err(TestCaseError::fail(format!("rms(200) = {e200}")));
        }
        if e400 >= e50 {
            return Err(TestCaseError::fail(format!("rms(400) = {e400} >= rms(50) = {e50}")));
        }
        Ok(())
    });
    let prop_msg = match &prop {
        Ok(()) => "property (24 random in-band pairs) ok".to_string(),
        Err(e) => format!("property failed: {e}"),
    };
    Outcome {
        pass: monotone && at200 < 1e-2 && prop.is_ok(),
        detail: format!(
            "RMS at M = {ms:?}: [{}]; {prop_msg}",
            errs.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>().join(", ")
        ),
    }
}

// --- 4 ---------------------------------------------------------------------

const SHORT: &str = r#"
reps = 1
seed = 1
[qubit]
f = 1.0
kappa = 0.1
[plan.sinc]
f_L = 0.8
B = 0.4003
M = 42
N = 100
[plan.interleaved]
f_L = 0.8
B = 0.4003
M = 18
N = 100
"#;

const LONG: &str = r#"
reps = 20
seed = 0
[qubit]
f = 1.0
kappa = 0.02
[plan.interleaved]
f_L = 0.8
B = 0.4
M = 160
N = 100
[sweep]
axis = "N"
values = [100]
"#;

const M_SWEEP: &str = r#"
reps = 20
seed = 0
[qubit]
f = 1.0
kappa = 0.05
[plan.sinc]
f_L = 0.8
B = 0.4
M = 160
N = 100
[plan.interleaved]
f_L = 0.8
B = 0.4
M = 160
N = 100
[sweep]
axis = "M"
values = [160, 200, 240]
"#;

fn sample_and_time_ratio() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::parse(SHORT, "short").unwrap();
    let summary = run_reconstruction(&cfg, dir.path()).unwrap();
    let ratio_ok = summary.sample_ratio == 18.0 / 42.0;

    let plan = build_interleaved_schedule(0.8, 0.4, None, 160, 100).unwrap();
    let report = report_timing(&[plan.equivalent_sinc().unwrap(), plan]).unwrap();
    let t = report.ratios[0].time_ratio;
    Outcome {
        pass: ratio_ok && (t - 3.0).abs() <= 0.15,
        detail: format!(
            "short-window sample ratio = {:.4} (18/42), 200-cycle time ratio = {t:.4} (3.0 +- 5%)",
            summary.sample_ratio
        ),
    }
}

// --- 5, 6 ------------------------------------------------------------------

fn long_record_trials() -> Vec<Trial> {
    let cfg = ExperimentConfig::parse(LONG, "long").unwrap();
    let rows = sweep_estimates(&cfg).unwrap();
    assert_eq!(rows.len(), 1);
    rows[0].trials.clone()
}

fn frequency_accuracy(trials: &[Trial]) -> Outcome {
    let good = trials
        .iter()
        .filter(|t| matches!(t, Trial::Ok { f_hat, .. } if (f_hat - 1.0).abs() < 0.01))
        .count();
    let worst = trials
        .iter()
        .map(|t| match t {
            Trial::Ok { f_hat, .. } => (f_hat - 1.0).abs(),
            Trial::Failed(_) => f64::INFINITY,
        })
        .fold(0.0, f64::max);
    Outcome {
        pass: good * 10 >= trials.len() * 9,
        detail: format!("{good}/{} seeds with |f_hat - 1| < 1%, worst {worst:.2e}", trials.len()),
    }
}

fn decoherence_bias(trials: &[Trial]) -> Outcome {
    let taus: Vec<f64> = trials
        .iter()
        .filter_map(|t| match t {
            Trial::Ok { tau_hat, .. } => Some(*tau_hat),
            Trial::Failed(_) => None,
        })
        .collect();
    let failed = trials.len() - taus.len();
    let mean = taus.iter().sum::<f64>() / taus.len() as f64;
    Outcome {
        pass: failed == 0 && mean > 30.0 && mean < 50.0,
        detail: format!(
            "mean tau_hat = {mean:.2} over {} seeds ({failed} failed), bounds (30, 50)",
            trials.len()
        ),
    }
}

// --- 7 ---------------------------------------------------------------------

fn mean_abs_error(row: &SweepRow, target: f64) -> f64 {
    let errs: Vec<f64> = row
        .trials
        .iter()
        .filter_map(|t| match t {
            Trial::Ok { tau_hat, .. } => Some((tau_hat - target).abs()),
            Trial::Failed(_) => None,
        })
        .collect();
    errs.iter().sum::<f64>() / errs.len() as f64
}

fn method_superiority() -> Outcome {
    let cfg = ExperimentConfig::parse(M_SWEEP, "m_sweep").unwrap();
    let rows = sweep_estimates(&cfg).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for chunk in rows.chunks(2) {
        let (sinc, inter) = (&chunk[0], &chunk[1]);
        assert_eq!((sinc.scheme, inter.scheme), (Scheme::Sinc, Scheme::Interleaved));
        let (es, ei) = (mean_abs_error(sinc, 20.0), mean_abs_error(inter, 20.0));
        // Failed trials cannot count as better.
        pass &= ei < es && inter.failed == 0;
        parts.push(format!(
            "M={}: interleaved {ei:.2} ({} failed) vs sinc {es:.2} ({} failed)",
            sinc.value, inter.failed, sinc.failed
        ));
    }
    Outcome {
        pass,
        detail: format!("mean |tau_hat - 20|: {}", parts.join("; ")),
    }
}

// --- 8 ---------------------------------------------------------------------

fn projection_noise() -> Outcome {
    let p = QubitParams::new(1.0, 0.02).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for n in [10u32, 100, 1000] {
        let plan = build_interleaved_schedule(0.8, 0.4, None, 160, n).unwrap();
        let records: Vec<_> = (0..200u64).map(|s| simulate_record(&p, &plan, s).unwrap()).collect();
        let points = plan.m();
        let (mut emp, mut pred) = (0.0, 0.0);
        for i in 0..points {
            let xs: Vec<f64> = records.iter().map(|r| r.averages()[i]).collect();
            let mean = xs.iter().sum::<f64>() / xs.len() as f64;
            emp += xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
            let rz = qubit_interleave::dynamics::rz_at(&p, records[0].times()[i]).unwrap();
            pred += (1.0 - rz * rz) / n as f64;
        }
        let ratio = (emp / pred).sqrt();
        pass &= (ratio - 1.0).abs() < 0.2;
        parts.push(format!("N={n}: {ratio:.4}"));
    }
    Outcome {
        pass,
        detail: format!("pooled empirical/binomial std over 200 seeds: {}", parts.join(", ")),
    }
}

// --- 9 ---------------------------------------------------------------------

fn run_all_artifacts(out: &Path) {
    let short = ExperimentConfig::parse(SHORT, "short").unwrap();
    run_reconstruction(&short, &out.join("reconstruct")).unwrap();
    let mut long = ExperimentConfig::parse(LONG, "long").unwrap();
    run_spectrum(&long, &out.join("spectrum")).unwrap();
    long.reps = 3;
    long.sweep.as_mut().unwrap().values = vec![25, 100];
    let rows = sweep_estimates(&long).unwrap();
    write_sweep(&long, &rows, &out.join("sweep")).unwrap();
}

fn files(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            out.extend(files(&path));
        } else {
            out.push(path);
        }
    }
    out.sort();
    out
}

fn determinism() -> Outcome {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_all_artifacts(a.path());
    run_all_artifacts(b.path());
    let fa = files(a.path());
    let fb = files(b.path());
    let rel = |base: &Path, v: &[std::path::PathBuf]| {
        v.iter()
            .map(|p| p.strip_prefix(base).unwrap().to_path_buf())
            .collect::<Vec<_>>()
    };
    let same_names = rel(a.path(), &fa) == rel(b.path(), &fb);
    let differing: Vec<String> = fa
        .iter()
        .zip(&fb)
        .filter(|(x, y)| std::fs::read(x).unwrap() != std::fs::read(y).unwrap())
        .map(|(x, _)| x.strip_prefix(a.path()).unwrap().display().to_string())
        .collect();
    Outcome {
        pass: same_names && differing.is_empty() && !fa.is_empty(),
        detail: format!(
            "{} artifacts compared byte for byte, {} differ {:?}",
            fa.len(),
            differing.len(),
            differing
        ),
    }
}

fn main() {
    // Honour `cargo test -- --list` style probes without running the suite.
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let secs = Duration::from_secs;
    let mut ok = true;
    ok &= check(1, "oracle equivalence", Some(secs(10)), oracle_equivalence);
    ok &= check(2, "kernel identities", Some(secs(5)), kernel_identities);
    ok &= check(3, "band-limited exactness", None, band_limited_exactness);
    ok &= check(4, "sample-count and timing ratio", Some(secs(1)), sample_and_time_ratio);
    let start = Instant::now();
    let trials = long_record_trials();
    let shared = start.elapsed();
    ok &= check(5, "frequency accuracy", Some(secs(120).saturating_sub(shared)), || {
        frequency_accuracy(&trials)
    });
    ok &= check(6, "decoherence bias", None, || decoherence_bias(&trials));
    ok &= check(7, "method superiority", Some(secs(600)), method_superiority);
    ok &= check(8, "projection noise", Some(secs(60)), projection_noise);
    ok &= check(9, "determinism", None, determinism);
    if !ok {
        std::process::exit(1);
    }
}
