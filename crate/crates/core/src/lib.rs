//! Characterizing a decohering qubit from projective measurements.
//!
//! The crate simulates `sigma_z` measurement records of a driven, dephased
//! qubit, reconstructs the coherent oscillation either by sinc interpolation
//! at the baseband Nyquist rate or by interleaved (second-order bandpass)
//! sampling at rate `B` per series, and estimates the oscillation frequency
//! and decoherence rate by fitting the resonance line in the reconstructed
//! spectrum.

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod measurement;
pub mod pipeline;
pub mod reconstruction;
pub mod spectral;

pub use dynamics::{bloch_at, damped_frequency, ode_evolve, prob_plus, BlochState, QubitParams};
pub use error::{Error, Result};
pub use measurement::{
    build_interleaved_schedule, build_sinc_schedule, min_total_time, simulate_record, MeasurementRecord, SamplingPlan,
    Scheme,
};
pub use pipeline::{run_pipeline, PipelineOptions, PipelineRun};
pub use reconstruction::{
    interleave_order, interleaved_reconstruct, reconstruct, sinc_reconstruct, InterleaveKernelParams,
    ReconstructedSignal, SampleSet,
};
pub use spectral::{
    amplitude_spectrum, fit_resonance, refine_peak, resonance_model, FitModel, ResonanceFit, SearchGrid, Spectrum,
};
