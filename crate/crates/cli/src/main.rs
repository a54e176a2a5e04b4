use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qinterleave_cli::{
    run_reconstruction, run_spectrum, run_timing, sweep_estimates, write_sweep, ExperimentConfig, HarnessError,
};

#[derive(Parser)]
#[command(
    name = "qinterleave",
    version,
    about = "Sinc vs interleaved sampling of a decohering qubit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reconstruct the oscillation with both schemes and compare to rz(t).
    Reconstruct(Common),
    /// Spectrum of the interleaved reconstruction and its resonance fit.
    Spectrum(Common),
    /// Repeated estimates over an N or M sweep.
    Sweep(Common),
    /// Minimum measurement time of the configured plans.
    Timing(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Base seed; trial j uses seed + j.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    reps: Option<usize>,
    /// Replace the simulated averages by the exact rz(t).
    #[arg(long)]
    noiseless: bool,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig, HarnessError> {
        let mut cfg = ExperimentConfig::from_path(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.base_seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        if let Some(reps) = self.reps {
            if reps == 0 {
                return Err(HarnessError::Precondition("--reps must be at least 1".into()));
            }
            cfg.reps = reps;
        }
        cfg.options.noiseless |= self.noiseless;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Reconstruct(c) => {
            let cfg = c.load()?;
            let s = run_reconstruction(&cfg, &cfg.output_dir)?;
            for sc in &s.schemes {
                println!(
                    "{:<12} M = {:<4} mean rms = {:.4e}",
                    sc.plan.scheme.name(),
                    sc.samples,
                    sc.mean_rms_error
                );
            }
            println!("sample ratio interleaved/sinc = {:.4}", s.sample_ratio);
        }
        Command::Spectrum(c) => {
            let cfg = c.load()?;
            let s = run_spectrum(&cfg, &cfg.output_dir)?;
            println!(
                "f_hat = {:.6}  kappa_hat = {:.5}  tau_hat = {:.3}",
                s.f_hat, s.kappa_hat, s.tau_hat
            );
            println!("time saving vs equivalent sinc plan = x{:.3}", s.time_saving);
        }
        Command::Sweep(c) => {
            let cfg = c.load()?;
            let rows = sweep_estimates(&cfg)?;
            write_sweep(&cfg, &rows, &cfg.output_dir)?;
            for r in &rows {
                println!(
                    "{}={:<5} {:<12} tau = {:8.3} +- {:7.3}  f = {:.5}  {}",
                    r.axis.name(),
                    r.value,
                    r.scheme.name(),
                    r.mean_tau,
                    r.std_tau,
                    r.mean_f,
                    r.status
                );
            }
        }
        Command::Timing(c) => {
            let cfg = c.load()?;
            let report = run_timing(&cfg, &cfg.output_dir)?;
            for (i, p) in report.plans.iter().enumerate() {
                println!(
                    "[{i}] {:<12} M = {:<5} T_min = {:.6e}",
                    p.scheme.name(),
                    p.m,
                    p.min_total_time
                );
            }
            for r in &report.ratios {
                println!(
                    "[{}]/[{}] samples {:.4}  rate {:.4}  time {:.4}",
                    r.numerator, r.denominator, r.sample_ratio, r.sample_rate_ratio, r.time_ratio
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
