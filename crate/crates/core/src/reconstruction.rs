//! Continuous-time reconstruction from averaged sample records.
//!
//! Two interpolators are provided: the Whittaker-Shannon sinc series for a
//! uniform baseband schedule, and Kohlenberg's second-order (interleaved)
//! bandpass interpolation for two series at rate `B` offset by `k`. Both
//! truncate the infinite sums to the available samples.

use std::f64::consts::PI;
use std::io;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurement::{MeasurementRecord, SamplingPlan, Scheme};

/// Below this `|t|` the kernel terms use their Taylor expansion.
const SERIES_THRESHOLD: f64 = 1e-7;
/// Minimum `|sin|` in the kernel denominators.
const MIN_SIN: f64 = 1e-6;

/// Normalized sinc, `sin(pi x) / (pi x)`.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        let px = PI * x;
        1.0 - px * px / 6.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

/// Smallest integer strictly greater than `2 f_L / B`.
pub fn interleave_order(f_low: f64, bandwidth: f64) -> u32 {
    (2.0 * f_low / bandwidth).floor() as u32 + 1
}

/// One of the two pieces of the interleave kernel: a sub-band `[lo, hi]`
/// with denominator phase `phase`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct KernelPiece {
    lo: f64,
    hi: f64,
    phase: f64,
    multiple: u32,
}

impl KernelPiece {
    fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// `[cos(2 pi hi t - phase) - cos(2 pi lo t - phase)] / (2 pi B t sin(phase))`
    fn eval(&self, t: f64, bandwidth: f64) -> f64 {
        let w = self.width();
        if w == 0.0 {
            return 0.0;
        }
        let c = PI * (self.hi + self.lo);
        let (s, co) = self.phase.sin_cos();
        if t.abs() < SERIES_THRESHOLD {
            let lin = co / s * c * t;
            let quad = (0.5 * c * c + PI * PI * w * w / 6.0) * t * t;
            return w * (1.0 - lin - quad) / bandwidth;
        }
        // Product form of the cosine difference; no cancellation near t = 0.
        -(c * t - self.phase).sin() * w * sinc(w * t) / (bandwidth * s)
    }
}

/// Parameters of the interleave kernel `S = S0 + S1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterleaveKernelParams {
    pub f_low: f64,
    pub bandwidth: f64,
    pub k: f64,
    pub order: u32,
}

impl InterleaveKernelParams {
    /// Validates the kernel: every sub-band of non-zero width needs its
    /// `sin` denominator bounded away from zero.
    pub fn new(f_low: f64, bandwidth: f64, k: f64) -> Result<Self> {
        if !(bandwidth > 0.0 && bandwidth.is_finite()) || !(f_low >= 0.0 && f_low.is_finite()) {
            return Err(Error::InvalidBand { f_low, bandwidth });
        }
        let p = Self {
            f_low,
            bandwidth,
            k,
            order: interleave_order(f_low, bandwidth),
        };
        for piece in p.pieces() {
            if p.is_active(&piece) && piece.phase.sin().abs() <= MIN_SIN {
                return Err(Error::KernelSingular {
                    order: piece.multiple,
                    k,
                    sin: piece.phase.sin().abs(),
                });
            }
        }
        Ok(p)
    }

    fn pieces(&self) -> [KernelPiece; 2] {
        let r = self.order as f64;
        let b = self.bandwidth;
        let mid = r * b - self.f_low;
        let unit = PI * b * self.k;
        [
            KernelPiece {
                lo: self.f_low,
                hi: mid,
                phase: r * unit,
                multiple: self.order,
            },
            KernelPiece {
                lo: mid,
                hi: self.f_low + b,
                phase: (r + 1.0) * unit,
                multiple: self.order + 1,
            },
        ]
    }

    /// A sub-band narrower than `1e-9 B` carries no signal; its numerator
    /// vanishes identically.
    fn is_active(&self, piece: &KernelPiece) -> bool {
        piece.width() > 1e-9 * self.bandwidth
    }

    /// `S0(t)` for the lower sub-band `[f_L, r B - f_L]`.
    pub fn s0(&self, t: f64) -> f64 {
        let [p0, _] = self.pieces();
        if self.is_active(&p0) {
            p0.eval(t, self.bandwidth)
        } else {
            0.0
        }
    }

    /// `S1(t)` for the upper sub-band `[r B - f_L, f_L + B]`.
    pub fn s1(&self, t: f64) -> f64 {
        let [_, p1] = self.pieces();
        if self.is_active(&p1) {
            p1.eval(t, self.bandwidth)
        } else {
            0.0
        }
    }

    /// The interleave kernel `S(t) = S0(t) + S1(t)`.
    pub fn eval(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 1.0;
        }
        self.s0(t) + self.s1(t)
    }

    /// Offset `k` in `(0, 1/B)` that maximizes the smallest active
    /// `|sin|` denominator. Ties go to the candidate nearest `1 / (2B)`.
    pub fn default_offset(f_low: f64, bandwidth: f64) -> f64 {
        const STEPS: usize = 20_000;
        let probe = Self {
            f_low,
            bandwidth,
            k: 0.0,
            order: interleave_order(f_low, bandwidth),
        };
        let multiples: Vec<f64> = probe
            .pieces()
            .iter()
            .filter(|p| probe.is_active(p))
            .map(|p| p.multiple as f64)
            .collect();
        let mut best = (f64::NEG_INFINITY, usize::MAX);
        for j in 1..STEPS {
            let u = PI * j as f64 / STEPS as f64;
            let score = multiples
                .iter()
                .map(|m| (m * u).sin().abs())
                .fold(f64::INFINITY, f64::min);
            let dist = j.abs_diff(STEPS / 2);
            if score > best.0 + 1e-12 || ((score - best.0).abs() <= 1e-12 && dist < best.1.abs_diff(STEPS / 2)) {
                best = (score, j);
            }
        }
        best.1 as f64 / STEPS as f64 / bandwidth
    }

    /// Largest `|S(t) - S(-t)|` over `t` in `[0, span]` on `points` samples.
    pub fn evenness_defect(&self, span: f64, points: usize) -> f64 {
        (0..points)
            .map(|i| {
                let t = span * i as f64 / (points.max(2) - 1) as f64;
                (self.eval(t) - self.eval(-t)).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Sample values bound to their times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl SampleSet {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::PlanMismatch(format!(
                "{} times but {} values",
                times.len(),
                values.len()
            )));
        }
        Ok(Self { times, values })
    }

    /// Samples `f` at the given times.
    pub fn from_fn(times: Vec<f64>, f: impl Fn(f64) -> f64) -> Self {
        let values = times.iter().map(|&t| f(t)).collect();
        Self { times, values }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Splits an interleaved plan's samples into series A and series B.
    pub fn split_interleaved(&self, plan: &SamplingPlan) -> Result<(SampleSet, SampleSet)> {
        if plan.scheme() != Scheme::Interleaved {
            return Err(Error::PlanMismatch("plan is not interleaved".into()));
        }
        if self.len() != plan.m() {
            return Err(Error::PlanMismatch(format!(
                "{} samples for M = {}",
                self.len(),
                plan.m()
            )));
        }
        let pick = |offset: usize| -> SampleSet {
            let idx = (offset..self.len()).step_by(2);
            SampleSet {
                times: idx.clone().map(|i| self.times[i]).collect(),
                values: idx.map(|i| self.values[i]).collect(),
            }
        };
        Ok((pick(0), pick(1)))
    }
}

impl From<&MeasurementRecord> for SampleSet {
    fn from(rec: &MeasurementRecord) -> Self {
        Self {
            times: rec.times().to_vec(),
            values: rec.averages().to_vec(),
        }
    }
}

fn check_times(got: &[f64], want: &[f64], what: &str) -> Result<()> {
    if got.len() != want.len() {
        return Err(Error::PlanMismatch(format!(
            "{what}: {} samples, plan expects {}",
            got.len(),
            want.len()
        )));
    }
    for (i, (g, w)) in got.iter().zip(want).enumerate() {
        if (g - w).abs() > 1e-9 * w.abs().max(1.0) {
            return Err(Error::PlanMismatch(format!(
                "{what}: sample {i} at {g}, plan expects {w}"
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
enum Interpolator {
    Sinc {
        samples: SampleSet,
        dt: f64,
    },
    Interleaved {
        kernel: InterleaveKernelParams,
        a: SampleSet,
        b: SampleSet,
    },
}

/// A reconstructed continuous-time signal over `[window.0, window.1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructedSignal {
    scheme: Scheme,
    dt: f64,
    window: (f64, f64),
    interp: Interpolator,
}

/// A signal evaluated on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseRendering {
    pub t0: f64,
    pub step: f64,
    pub values: Vec<f64>,
}

impl DenseRendering {
    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.step
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.values.len()).map(|i| self.time(i)).collect()
    }

    /// Writes `time,amplitude` rows.
    pub fn write_csv<W: io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["time", "amplitude"])?;
        for (i, v) in self.values.iter().enumerate() {
            wr.write_record([self.time(i).to_string(), v.to_string()])?;
        }
        wr.flush().map_err(|e| Error::Csv(e.to_string()))?;
        Ok(())
    }
}

impl ReconstructedSignal {
    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    /// Sample interval of a single series.
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    /// The samples the signal was built from, in time order.
    pub fn samples(&self) -> SampleSet {
        match &self.interp {
            Interpolator::Sinc { samples, .. } => samples.clone(),
            Interpolator::Interleaved { a, b, .. } => {
                let mut pairs: Vec<(f64, f64)> = a
                    .times
                    .iter()
                    .zip(&a.values)
                    .chain(b.times.iter().zip(&b.values))
                    .map(|(t, v)| (*t, *v))
                    .collect();
                pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
                let (times, values) = pairs.into_iter().unzip();
                SampleSet { times, values }
            }
        }
    }

    /// Reconstructed amplitude at time `t`.
    pub fn eval(&self, t: f64) -> f64 {
        match &self.interp {
            Interpolator::Sinc { samples, dt } => samples
                .times
                .iter()
                .zip(&samples.values)
                .map(|(tn, x)| x * sinc((t - tn) / dt))
                .sum(),
            Interpolator::Interleaved { kernel, a, b } => {
                let sa: f64 = a
                    .times
                    .iter()
                    .zip(&a.values)
                    .map(|(tn, x)| x * kernel.eval(t - tn))
                    .sum();
                let sb: f64 = b
                    .times
                    .iter()
                    .zip(&b.values)
                    .map(|(tnk, x)| x * kernel.eval(-t + tnk))
                    .sum();
                sa + sb
            }
        }
    }

    /// Evaluates `count` points starting at `t0` spaced by `step`.
    pub fn render_grid(&self, t0: f64, step: f64, count: usize) -> DenseRendering {
        let values = (0..count)
            .into_par_iter()
            .map(|i| self.eval(t0 + i as f64 * step))
            .collect();
        DenseRendering { t0, step, values }
    }

    /// Uniform rendering over the validity window with spacing `step`.
    pub fn render(&self, step: f64) -> Result<DenseRendering> {
        let (a, b) = self.window;
        if !(step > 0.0) || !(b > a) {
            return Err(Error::EmptyWindow);
        }
        let count = ((b - a) / step + 1e-9).floor() as usize + 1;
        Ok(self.render_grid(a, step, count))
    }
}

/// Sinc series over samples on a uniform lattice of spacing `dt`.
pub fn sinc_series(samples: SampleSet, dt: f64) -> Result<ReconstructedSignal> {
    if samples.len() < 2 {
        return Err(Error::EmptyWindow);
    }
    if !(dt > 0.0) {
        return Err(Error::PlanMismatch(format!("invalid sample interval {dt}")));
    }
    let t0 = samples.times[0];
    let lattice: Vec<f64> = (0..samples.len()).map(|i| t0 + i as f64 * dt).collect();
    check_times(&samples.times, &lattice, "sinc lattice")?;
    let window = (t0, *samples.times.last().unwrap());
    Ok(ReconstructedSignal {
        scheme: Scheme::Sinc,
        dt,
        window,
        interp: Interpolator::Sinc { samples, dt },
    })
}

/// Whittaker-Shannon reconstruction of a sinc plan's samples.
pub fn sinc_reconstruct(samples: &SampleSet, plan: &SamplingPlan) -> Result<ReconstructedSignal> {
    if plan.scheme() != Scheme::Sinc {
        return Err(Error::PlanMismatch("sinc reconstruction needs a sinc plan".into()));
    }
    check_times(&samples.times, &plan.times(), "sinc record")?;
    sinc_series(samples.clone(), plan.dt())
}

/// Second-order bandpass reconstruction from series A (at `n dt`) and
/// series B (at `n dt + k`). Series B enters through `S(-t + t_{n,k})`.
pub fn interleaved_reconstruct(
    series_a: &SampleSet,
    series_b: &SampleSet,
    plan: &SamplingPlan,
) -> Result<ReconstructedSignal> {
    if plan.scheme() != Scheme::Interleaved {
        return Err(Error::PlanMismatch(
            "interleaved reconstruction needs an interleaved plan".into(),
        ));
    }
    let kernel = InterleaveKernelParams::new(plan.f_low(), plan.bandwidth(), plan.k())?;
    let (ta, tb) = plan.series_times();
    check_times(&series_a.times, &ta, "series A")?;
    check_times(&series_b.times, &tb, "series B")?;
    let window = (ta[0], *tb.last().unwrap());
    Ok(ReconstructedSignal {
        scheme: Scheme::Interleaved,
        dt: plan.dt(),
        window,
        interp: Interpolator::Interleaved {
            kernel,
            a: series_a.clone(),
            b: series_b.clone(),
        },
    })
}

/// Reconstructs with whichever scheme the plan uses.
pub fn reconstruct(samples: &SampleSet, plan: &SamplingPlan) -> Result<ReconstructedSignal> {
    match plan.scheme() {
        Scheme::Sinc => sinc_reconstruct(samples, plan),
        Scheme::Interleaved => {
            let (a, b) = samples.split_interleaved(plan)?;
            interleaved_reconstruct(&a, &b, plan)
        }
    }
}

/// Root-mean-square difference between `signal` and `reference` over the
/// central half of the signal window, on `points` uniform grid points.
pub fn central_rms_error(signal: &ReconstructedSignal, reference: impl Fn(f64) -> f64, points: usize) -> f64 {
    let (a, b) = signal.window();
    let (lo, hi) = (a + 0.25 * (b - a), a + 0.75 * (b - a));
    let step = (hi - lo) / (points.max(2) - 1) as f64;
    let grid = signal.render_grid(lo, step, points.max(2));
    let sum: f64 = grid
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| (v - reference(grid.time(i))).powi(2))
        .sum();
    (sum / grid.values.len() as f64).sqrt()
}
