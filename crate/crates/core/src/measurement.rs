//! Sampling schedules, simulated projective-measurement records and the
//! measurement-time cost of a schedule.

use std::io;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{bloch_at, prob_plus, QubitParams};
use crate::error::{Error, Result};
use crate::reconstruction::InterleaveKernelParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Sinc,
    Interleaved,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Sinc => "sinc",
            Scheme::Interleaved => "interleaved",
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A sampling schedule for one reconstruction scheme.
///
/// Sinc plans sample uniformly at `2 (f_L + B)`; interleaved plans take two
/// series at rate `B`, the second offset by `k`. `m` counts every sample
/// point (both series for interleaved plans) and `n` is the number of
/// projective measurements taken at each point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    scheme: Scheme,
    f_low: f64,
    bandwidth: f64,
    k: f64,
    m: usize,
    n: u32,
}

fn check_band(f_low: f64, bandwidth: f64) -> Result<()> {
    if !(bandwidth.is_finite() && bandwidth > 0.0) || !(f_low.is_finite() && f_low >= 0.0) {
        return Err(Error::InvalidBand { f_low, bandwidth });
    }
    Ok(())
}

fn check_counts(m: usize, n: u32) -> Result<()> {
    if m < 2 {
        return Err(Error::InvalidPlan(format!("M must be at least 2, got {m}")));
    }
    if n < 1 {
        return Err(Error::InvalidPlan("N must be at least 1".into()));
    }
    Ok(())
}

/// Uniform schedule `t_n = n / (2 (f_L + B))`, `n = 1..=M`.
pub fn build_sinc_schedule(f_low: f64, bandwidth: f64, m: usize, n: u32) -> Result<SamplingPlan> {
    check_band(f_low, bandwidth)?;
    check_counts(m, n)?;
    Ok(SamplingPlan {
        scheme: Scheme::Sinc,
        f_low,
        bandwidth,
        k: 0.0,
        m,
        n,
    })
}

/// Two interleaved series at `n / B` and `n / B + k`, `n = 1..=M/2`.
///
/// With `k = None` the offset is chosen by [`InterleaveKernelParams::default_offset`].
pub fn build_interleaved_schedule(
    f_low: f64,
    bandwidth: f64,
    k: Option<f64>,
    m: usize,
    n: u32,
) -> Result<SamplingPlan> {
    check_band(f_low, bandwidth)?;
    check_counts(m, n)?;
    if !m.is_multiple_of(2) {
        return Err(Error::OddM(m));
    }
    let k = k.unwrap_or_else(|| InterleaveKernelParams::default_offset(f_low, bandwidth));
    let dt = 1.0 / bandwidth;
    if !(k > 0.0 && k < dt) {
        return Err(Error::InvalidPlan(format!("offset k = {k} must lie in (0, {dt})")));
    }
    InterleaveKernelParams::new(f_low, bandwidth, k)?;
    Ok(SamplingPlan {
        scheme: Scheme::Interleaved,
        f_low,
        bandwidth,
        k,
        m,
        n,
    })
}

impl SamplingPlan {
    pub fn scheme(&self) -> Scheme {
        self.scheme
    }
    pub fn f_low(&self) -> f64 {
        self.f_low
    }
    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }
    pub fn f_high(&self) -> f64 {
        self.f_low + self.bandwidth
    }
    /// Intra-pair offset; zero for sinc plans.
    pub fn k(&self) -> f64 {
        self.k
    }
    pub fn m(&self) -> usize {
        self.m
    }
    pub fn n(&self) -> u32 {
        self.n
    }

    /// Same plan with a different number of measurements per point.
    pub fn with_n(&self, n: u32) -> Result<Self> {
        check_counts(self.m, n)?;
        Ok(Self { n, ..self.clone() })
    }

    /// Same plan with a different number of sample points.
    pub fn with_m(&self, m: usize) -> Result<Self> {
        match self.scheme {
            Scheme::Sinc => build_sinc_schedule(self.f_low, self.bandwidth, m, self.n),
            Scheme::Interleaved => build_interleaved_schedule(self.f_low, self.bandwidth, Some(self.k), m, self.n),
        }
    }

    /// Sample interval of a single series.
    pub fn dt(&self) -> f64 {
        match self.scheme {
            Scheme::Sinc => 1.0 / (2.0 * (self.f_low + self.bandwidth)),
            Scheme::Interleaved => 1.0 / self.bandwidth,
        }
    }

    /// Total sample rate: `2 (f_L + B)` for sinc, `2 B` for interleaved.
    pub fn sample_rate(&self) -> f64 {
        match self.scheme {
            Scheme::Sinc => 2.0 * (self.f_low + self.bandwidth),
            Scheme::Interleaved => 2.0 * self.bandwidth,
        }
    }

    pub fn kernel_params(&self) -> Option<InterleaveKernelParams> {
        match self.scheme {
            Scheme::Sinc => None,
            Scheme::Interleaved => InterleaveKernelParams::new(self.f_low, self.bandwidth, self.k).ok(),
        }
    }

    /// All sample times in increasing order.
    pub fn times(&self) -> Vec<f64> {
        let dt = self.dt();
        match self.scheme {
            Scheme::Sinc => (1..=self.m).map(|i| i as f64 * dt).collect(),
            Scheme::Interleaved => (1..=self.m / 2)
                .flat_map(|i| {
                    let t = i as f64 * dt;
                    [t, t + self.k]
                })
                .collect(),
        }
    }

    /// Series A (`n dt`) and series B (`n dt + k`) of an interleaved plan.
    pub fn series_times(&self) -> (Vec<f64>, Vec<f64>) {
        let dt = self.dt();
        let a: Vec<f64> = (1..=self.m / 2).map(|i| i as f64 * dt).collect();
        let b = a.iter().map(|t| t + self.k).collect();
        (a, b)
    }

    /// Time of the last sample point.
    pub fn window_end(&self) -> f64 {
        match self.scheme {
            Scheme::Sinc => self.m as f64 * self.dt(),
            Scheme::Interleaved => (self.m / 2) as f64 * self.dt() + self.k,
        }
    }

    /// Sinc plan over the same band whose last sample lands closest to this
    /// plan's last sample.
    pub fn equivalent_sinc(&self) -> Result<SamplingPlan> {
        let dt = 1.0 / (2.0 * self.f_high());
        let m = ((self.window_end() / dt).round() as usize).max(2);
        build_sinc_schedule(self.f_low, self.bandwidth, m, self.n)
    }
}

/// Counts of `+1` outcomes out of `n` at each sample time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    times: Vec<f64>,
    counts: Vec<u32>,
    n: u32,
    averages: Vec<f64>,
}

/// `2 count / n - 1`, the averaged `+-1` outcome.
pub fn average_of(count: u32, n: u32) -> f64 {
    2.0 * count as f64 / n as f64 - 1.0
}

#[derive(Debug, Serialize, Deserialize)]
struct RecordRow {
    time: f64,
    count: u32,
    n: u32,
    average: f64,
}

impl MeasurementRecord {
    pub fn from_counts(times: Vec<f64>, counts: Vec<u32>, n: u32) -> Result<Self> {
        if times.len() != counts.len() {
            return Err(Error::InvalidPlan("times and counts differ in length".into()));
        }
        if n == 0 || counts.iter().any(|&c| c > n) {
            return Err(Error::InvalidPlan(format!("counts must lie in [0, {n}]")));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidPlan("record times must strictly increase".into()));
        }
        let averages = counts.iter().map(|&c| average_of(c, n)).collect();
        Ok(Self {
            times,
            counts,
            n,
            averages,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }
    pub fn counts(&self) -> &[u32] {
        &self.counts
    }
    pub fn n(&self) -> u32 {
        self.n
    }
    pub fn averages(&self) -> &[f64] {
        &self.averages
    }
    pub fn len(&self) -> usize {
        self.times.len()
    }
    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Writes `time,count,n,average` rows.
    pub fn write_csv<W: io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for i in 0..self.len() {
            wr.serialize(RecordRow {
                time: self.times[i],
                count: self.counts[i],
                n: self.n,
                average: self.averages[i],
            })?;
        }
        wr.flush().map_err(|e| Error::Csv(e.to_string()))?;
        Ok(())
    }

    pub fn read_csv<R: io::Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let mut times = Vec::new();
        let mut counts = Vec::new();
        let mut n = None;
        for row in rd.deserialize() {
            let row: RecordRow = row?;
            if *n.get_or_insert(row.n) != row.n {
                return Err(Error::Csv("inconsistent n column".into()));
            }
            times.push(row.time);
            counts.push(row.count);
        }
        let n = n.ok_or_else(|| Error::Csv("empty record".into()))?;
        Self::from_counts(times, counts, n)
    }
}

/// Random stream for sample point `index` of the run seeded with `seed`.
///
/// The ChaCha stream id carries the point index, so each point draws from
/// its own sub-stream regardless of evaluation order.
pub fn point_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Simulates `N` projective `sigma_z` measurements at every sample time.
///
/// Each measurement is a fresh experiment: the qubit is prepared in the `+1`
/// state at `t = 0`, evolves to `t` and is measured once.
pub fn simulate_record(params: &QubitParams, plan: &SamplingPlan, seed: u64) -> Result<MeasurementRecord> {
    params.validate()?;
    let times = plan.times();
    let probs = times
        .iter()
        .map(|&t| bloch_at(params, t).and_then(|s| prob_plus(&s)))
        .collect::<Result<Vec<f64>>>()?;
    let n = plan.n();
    let counts = probs
        .par_iter()
        .enumerate()
        .map(|(i, &p)| {
            let mut rng = point_rng(seed, i);
            (0..n).filter(|_| rng.random::<f64>() < p).count() as u32
        })
        .collect();
    MeasurementRecord::from_counts(times, counts, n)
}

/// `N (dt + 2 dt + ... + M dt) = N M (M + 1) dt / 2`.
pub fn uniform_min_total_time(n: u32, m: usize, dt: f64) -> f64 {
    0.5 * n as f64 * m as f64 * (m as f64 + 1.0) * dt
}

/// Minimum wall time to collect the plan's record: every measurement at
/// time `t` needs a fresh evolution of length `t`, so the cost is `N` times
/// the sum of all sample times. Read-out and re-preparation are free.
pub fn min_total_time(plan: &SamplingPlan) -> f64 {
    let n = plan.n();
    match plan.scheme() {
        Scheme::Sinc => uniform_min_total_time(n, plan.m(), plan.dt()),
        Scheme::Interleaved => {
            let pairs = plan.m() / 2;
            2.0 * uniform_min_total_time(n, pairs, plan.dt()) + n as f64 * pairs as f64 * plan.k()
        }
    }
}
