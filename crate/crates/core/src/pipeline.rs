//! End-to-end estimate: simulate a record, reconstruct, transform and fit.

use serde::{Deserialize, Serialize};

use crate::dynamics::{rz_at, QubitParams};
use crate::error::{Error, Result};
use crate::measurement::{simulate_record, SamplingPlan};
use crate::reconstruction::{reconstruct, ReconstructedSignal, SampleSet};
use crate::spectral::{
    amplitude_spectrum, fit_resonance, peak_contrast, FitModel, ResonanceFit, SearchGrid, Spectrum, DEFAULT_OVERSAMPLE,
    DEFAULT_ZERO_PAD, NO_PEAK_CONTRAST,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineOptions {
    pub oversample: usize,
    pub zero_pad: usize,
    pub model: FitModel,
    /// Replace the simulated averages by the exact `rz(t)`.
    pub noiseless: bool,
    /// Fit band; the plan's `[f_L, f_L + B]` when unset.
    pub fit_band: Option<(f64, f64)>,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            oversample: DEFAULT_OVERSAMPLE,
            zero_pad: DEFAULT_ZERO_PAD,
            model: FitModel::Transform,
            noiseless: false,
            fit_band: None,
        }
    }
}

/// Every intermediate product of one run.
#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub samples: SampleSet,
    pub signal: ReconstructedSignal,
    pub spectrum: Spectrum,
    pub grid: SearchGrid,
    pub fit: ResonanceFit,
}

/// Averaged samples for `plan`: simulated with `seed`, or exact when
/// `noiseless` is set.
pub fn sample_plan(params: &QubitParams, plan: &SamplingPlan, seed: u64, noiseless: bool) -> Result<SampleSet> {
    if noiseless {
        let values = plan
            .times()
            .iter()
            .map(|&t| rz_at(params, t))
            .collect::<Result<Vec<_>>>()?;
        SampleSet::new(plan.times(), values)
    } else {
        Ok(SampleSet::from(&simulate_record(params, plan, seed)?))
    }
}

/// Reconstructs the samples and fits the resonance inside the fit band.
pub fn analyze(samples: SampleSet, plan: &SamplingPlan, opts: &PipelineOptions) -> Result<PipelineRun> {
    let signal = reconstruct(&samples, plan)?;
    let spectrum = amplitude_spectrum(&signal, opts.oversample, opts.zero_pad)?;
    let band = opts.fit_band.unwrap_or((plan.f_low(), plan.f_high()));
    // A featureless band would otherwise surface as a peak on its edge.
    let contrast = peak_contrast(&spectrum, band);
    if contrast <= NO_PEAK_CONTRAST {
        return Err(Error::NoPeakInBand { ratio: contrast });
    }
    let grid = SearchGrid::default_for(&spectrum, band)?;
    let fit = fit_resonance(&spectrum, band, &grid, opts.model)?;
    Ok(PipelineRun {
        samples,
        signal,
        spectrum,
        grid,
        fit,
    })
}

pub fn run_pipeline(
    params: &QubitParams,
    plan: &SamplingPlan,
    seed: u64,
    opts: &PipelineOptions,
) -> Result<PipelineRun> {
    let samples = sample_plan(params, plan, seed, opts.noiseless)?;
    analyze(samples, plan, opts)
}
