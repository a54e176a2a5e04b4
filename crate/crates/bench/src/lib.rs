//! Shared fixtures for the benchmarks.

use qubit_interleave::pipeline::sample_plan;
use qubit_interleave::{build_interleaved_schedule, QubitParams, SampleSet, SamplingPlan};

/// 200-cycle interleaved plan around `f = 1` with its simulated samples.
pub fn long_record_fixture() -> (QubitParams, SamplingPlan, SampleSet) {
    let params = QubitParams::new(1.0, 0.02).expect("valid parameters");
    let plan = build_interleaved_schedule(0.8, 0.4, None, 160, 100).expect("valid plan");
    let samples = sample_plan(&params, &plan, 7, false).expect("simulated record");
    (params, plan, samples)
}
