//! Amplitude spectra of reconstructed signals and resonance fitting.
//!
//! The fit is an exhaustive search over a `(f0, kappa, amplitude)` grid
//! that minimizes the squared amplitude error over the in-band bins.

use std::f64::consts::TAU;
use std::io;

use rayon::prelude::*;
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reconstruction::ReconstructedSignal;

pub const DEFAULT_OVERSAMPLE: usize = 16;
pub const DEFAULT_ZERO_PAD: usize = 4;

/// One-sided amplitude spectrum on a uniform frequency grid starting at 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub freqs: Vec<f64>,
    pub amps: Vec<f64>,
    pub resolution: f64,
    /// Number of signal samples (before zero padding).
    pub samples: usize,
    /// Transform length (after zero padding).
    pub fft_len: usize,
}

impl Spectrum {
    /// Indices of bins with `lo <= f <= hi`.
    pub fn band_indices(&self, lo: f64, hi: f64) -> std::ops::Range<usize> {
        let start = self.freqs.partition_point(|&f| f < lo);
        let end = self.freqs.partition_point(|&f| f <= hi);
        start..end.max(start)
    }

    /// Writes `freq,amp` rows.
    pub fn write_csv<W: io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["freq", "amp"])?;
        for (f, a) in self.freqs.iter().zip(&self.amps) {
            wr.write_record([f.to_string(), a.to_string()])?;
        }
        wr.flush().map_err(|e| Error::Csv(e.to_string()))?;
        Ok(())
    }
}

/// DFT magnitude of uniformly spaced samples, zero padded to
/// `zero_pad * len` points and normalized by `len`.
pub fn spectrum_of_samples(values: &[f64], step: f64, zero_pad: usize) -> Result<Spectrum> {
    if values.len() < 2 || !(step > 0.0) {
        return Err(Error::EmptyWindow);
    }
    if zero_pad < 1 {
        return Err(Error::InvalidGrid(format!("zero_pad must be >= 1, got {zero_pad}")));
    }
    let n = values.len();
    let len = n * zero_pad;
    let mut buf: Vec<Complex<f64>> = values.iter().map(|&v| Complex::new(v, 0.0)).collect();
    buf.resize(len, Complex::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);
    let resolution = 1.0 / (len as f64 * step);
    let bins = len / 2 + 1;
    Ok(Spectrum {
        freqs: (0..bins).map(|k| k as f64 * resolution).collect(),
        amps: buf[..bins].iter().map(|c| c.norm() / n as f64).collect(),
        resolution,
        samples: n,
        fft_len: len,
    })
}

/// Amplitude spectrum of a reconstruction rendered at `dt / oversample`
/// over its window, with a rectangular window.
pub fn amplitude_spectrum(signal: &ReconstructedSignal, oversample: usize, zero_pad: usize) -> Result<Spectrum> {
    if oversample < 4 {
        return Err(Error::InvalidGrid(format!("oversample must be >= 4, got {oversample}")));
    }
    let dense = signal.render(signal.dt() / oversample as f64)?;
    spectrum_of_samples(&dense.values, dense.step, zero_pad)
}

/// Line shape used by the fit.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitModel {
    /// Magnitude of the one-sided Laplace transform of `rz(t)`.
    #[default]
    Transform,
    /// Magnitude of a single complex pole, `1 / |2 kappa + i 2 pi (f - f0)|`.
    Lorentzian,
}

/// `amp * |i w + 4 kappa| / |(i w + 2 kappa)^2 + mu^2|` with `w = 2 pi freq`
/// and `mu^2 = (2 pi f0)^2 - 4 kappa^2`.
pub fn resonance_model(freq: f64, f0: f64, kappa: f64, amp: f64) -> f64 {
    amp * unit_transform(TAU * freq, TAU * f0, kappa)
}

fn unit_transform(w: f64, w0: f64, kappa: f64) -> f64 {
    let k16 = 16.0 * kappa * kappa;
    let detune = w0 * w0 - w * w;
    ((w * w + k16) / (detune * detune + k16 * w * w)).sqrt()
}

pub fn lorentzian_model(freq: f64, f0: f64, kappa: f64, amp: f64) -> f64 {
    let d = TAU * (freq - f0);
    amp / (4.0 * kappa * kappa + d * d).sqrt()
}

impl FitModel {
    pub fn eval(self, freq: f64, f0: f64, kappa: f64, amp: f64) -> f64 {
        match self {
            FitModel::Transform => resonance_model(freq, f0, kappa, amp),
            FitModel::Lorentzian => lorentzian_model(freq, f0, kappa, amp),
        }
    }
}

/// Sub-bin peak frequency from a parabola through the log-amplitudes of
/// the largest in-band bin and its two neighbours.
pub fn refine_peak(spec: &Spectrum, band: (f64, f64)) -> Result<f64> {
    let idx = spec.band_indices(band.0, band.1);
    if idx.is_empty() {
        return Err(Error::NoPeakInBand { ratio: 0.0 });
    }
    let peak = idx
        .clone()
        .max_by(|&a, &b| spec.amps[a].total_cmp(&spec.amps[b]).then(b.cmp(&a)))
        .unwrap();
    if peak == idx.start || peak + 1 == idx.end {
        return Err(Error::PeakAtEdge(spec.freqs[peak]));
    }
    let (l, c, r) = (spec.amps[peak - 1], spec.amps[peak], spec.amps[peak + 1]);
    if l <= 0.0 || r <= 0.0 {
        return Ok(spec.freqs[peak]);
    }
    let (yl, yc, yr) = (l.ln(), c.ln(), r.ln());
    let curv = yl - 2.0 * yc + yr;
    if curv >= 0.0 {
        return Ok(spec.freqs[peak]);
    }
    let delta = 0.5 * (yl - yr) / curv;
    Ok(spec.freqs[peak] + delta * spec.resolution)
}

/// Candidate values for the enumerative fit.
///
/// `amp_scales` are multipliers of the amplitude that makes the model's
/// value at `f0` equal the observed in-band maximum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchGrid {
    pub freqs: Vec<f64>,
    pub kappas: Vec<f64>,
    pub amp_scales: Vec<f64>,
}

fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

impl SearchGrid {
    /// Frequencies centred on the refined peak at a quarter-bin step
    /// spanning the band, `kappa` log-spaced over `[0.001, 0.5]` (200
    /// points), amplitude scale log-spaced over `[0.1, 10]` (51 points).
    pub fn default_for(spec: &Spectrum, band: (f64, f64)) -> Result<Self> {
        let centre = refine_peak(spec, band)?;
        let step = spec.resolution / 4.0;
        let below = ((centre - band.0) / step).floor() as i64;
        let above = ((band.1 - centre) / step).floor() as i64;
        let freqs = (-below..=above).map(|j| centre + j as f64 * step).collect();
        Ok(Self {
            freqs,
            kappas: log_spaced(0.001, 0.5, 200),
            amp_scales: log_spaced(0.1, 10.0, 51),
        })
    }

    pub fn len(&self) -> usize {
        self.freqs.len() * self.kappas.len() * self.amp_scales.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn describe(&self) -> String {
        let range = |v: &[f64]| {
            let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            format!("[{lo}, {hi}] x {}", v.len())
        };
        format!(
            "f {} ; kappa {} ; amp_scale {}",
            range(&self.freqs),
            range(&self.kappas),
            range(&self.amp_scales)
        )
    }

    fn validate(&self, band: (f64, f64)) -> Result<()> {
        if self.is_empty() {
            return Err(Error::InvalidGrid("every axis needs at least one value".into()));
        }
        if self.kappas.iter().any(|&k| !(k > 0.0)) {
            return Err(Error::InvalidGrid("kappa values must be positive".into()));
        }
        if self.amp_scales.iter().any(|&a| !(a > 0.0)) {
            return Err(Error::InvalidGrid("amplitude scales must be positive".into()));
        }
        if self.freqs.iter().any(|&f| f < band.0 || f > band.1) {
            return Err(Error::InvalidGrid("frequency values must lie inside the band".into()));
        }
        Ok(())
    }
}

/// Result of the resonance fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonanceFit {
    pub f_hat: f64,
    pub kappa_hat: f64,
    pub amp_hat: f64,
    pub tau_hat: f64,
    pub residual: f64,
    pub band: (f64, f64),
    pub model: FitModel,
}

impl ResonanceFit {
    /// Model amplitude at `freq`.
    pub fn model_at(&self, freq: f64) -> f64 {
        self.model.eval(freq, self.f_hat, self.kappa_hat, self.amp_hat)
    }

    /// Flat `key = value` summary.
    pub fn to_kv_text(&self, grid: &SearchGrid) -> String {
        format!(
            "f_hat = {}\nkappa_hat = {}\ntau_hat = {}\namp_hat = {}\nresidual = {}\nband = [{}, {}]\nmodel = {:?}\ngrid = {}\n",
            self.f_hat,
            self.kappa_hat,
            self.tau_hat,
            self.amp_hat,
            self.residual,
            self.band.0,
            self.band.1,
            self.model,
            grid.describe()
        )
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// In-band max/median at or below which the band is taken to hold no line.
pub const NO_PEAK_CONTRAST: f64 = 3.0;

/// Ratio of the in-band maximum to the in-band median amplitude.
pub fn peak_contrast(spec: &Spectrum, band: (f64, f64)) -> f64 {
    let idx = spec.band_indices(band.0, band.1);
    if idx.is_empty() {
        return 0.0;
    }
    let amps = spec.amps[idx].to_vec();
    let max = amps.iter().copied().fold(0.0, f64::max);
    let med = median(amps);
    if med > 0.0 {
        max / med
    } else if max > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    residual: f64,
    kappa: f64,
    f0: f64,
    amp: f64,
}

impl Candidate {
    fn better(self, other: Self) -> Self {
        let ord = self
            .residual
            .total_cmp(&other.residual)
            .then(self.kappa.total_cmp(&other.kappa))
            .then(self.f0.total_cmp(&other.f0))
            .then(self.amp.total_cmp(&other.amp));
        if ord.is_le() {
            self
        } else {
            other
        }
    }
}

/// Exhaustive least-squares fit of the resonance line shape over the
/// in-band bins. Ties go to smaller `kappa`, then `f0`, then amplitude.
pub fn fit_resonance(spec: &Spectrum, band: (f64, f64), grid: &SearchGrid, model: FitModel) -> Result<ResonanceFit> {
    let idx = spec.band_indices(band.0, band.1);
    if idx.len() < 3 {
        return Err(Error::NoPeakInBand { ratio: 0.0 });
    }
    let contrast = peak_contrast(spec, band);
    if contrast <= NO_PEAK_CONTRAST {
        return Err(Error::NoPeakInBand { ratio: contrast });
    }
    grid.validate(band)?;
    let freqs = &spec.freqs[idx.clone()];
    let ys = &spec.amps[idx];
    let peak = ys.iter().copied().fold(0.0, f64::max);
    let syy: f64 = ys.iter().map(|y| y * y).sum();

    let best = grid
        .freqs
        .par_iter()
        .flat_map_iter(|&f0| grid.kappas.iter().map(move |&kappa| (f0, kappa)))
        .map(|(f0, kappa)| {
            let reference = model.eval(f0, f0, kappa, 1.0);
            let (mut syg, mut sgg) = (0.0, 0.0);
            for (f, y) in freqs.iter().zip(ys) {
                let g = model.eval(*f, f0, kappa, 1.0);
                syg += y * g;
                sgg += g * g;
            }
            grid.amp_scales
                .iter()
                .map(|&s| {
                    let amp = s * peak / reference;
                    let residual = (syy - 2.0 * amp * syg + amp * amp * sgg).max(0.0);
                    Candidate {
                        residual,
                        kappa,
                        f0,
                        amp,
                    }
                })
                .reduce(Candidate::better)
                .unwrap()
        })
        .reduce_with(Candidate::better)
        .unwrap();

    Ok(ResonanceFit {
        f_hat: best.f0,
        kappa_hat: best.kappa,
        amp_hat: best.amp,
        tau_hat: 1.0 / best.kappa,
        residual: best.residual,
        band,
        model,
    })
}

/// Sum of squared differences between the spectrum and a fitted model over
/// the fit band.
pub fn band_residual(spec: &Spectrum, fit: &ResonanceFit) -> f64 {
    spec.band_indices(fit.band.0, fit.band.1)
        .map(|i| (spec.amps[i] - fit.model_at(spec.freqs[i])).powi(2))
        .sum()
}
