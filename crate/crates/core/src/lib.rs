//! Collective error of capacity-constrained majority-vote aggregation of
//! noisy binary observations under lossy compression.
//!
//! `L` sensors observe a uniform binary source through independent binary
//! symmetric channels (flip probability `p`), compress their observations at
//! rate `R` with per-bit distortion `D(R)`, and an aggregator majority-votes
//! the reproductions. The total rate `lambda = L * R` is fixed, so lowering
//! `R` buys more sensors at the price of noisier reproductions.
//!
//! - [`analytic`]: rate-distortion function, combined error, exact and
//!   asymptotic collective error, decay rates, scaling exponents.
//! - [`distortion`]: pluggable `R -> D(R)` models (Shannon bound, tables).
//! - [`optimizer`]: optimal/pessimistic rates and noise thresholds.
//! - [`simulate`]: seeded Monte Carlo of the whole pipeline.

pub mod analytic;
pub mod distortion;
pub mod error;
pub mod optimizer;
pub mod search;
pub mod simulate;
pub mod special;
pub mod types;

pub use analytic::{
    binary_entropy, collective_error_asymptotic, collective_error_exact, combined_error,
    decay_rate, decay_rate_from_distortion, decay_rate_limit_zero, derive_sensor_count,
    distortion_of_rate, error_ratio_curve, fit_scaling_beta, ln_collective_error_asymptotic,
    ln_collective_error_exact, ln_error_ratio, rate_of_distortion, AggregationPoint,
    AsymptoticInputs, RatioPoint,
};
pub use distortion::{
    check_table_csv, shannon_model, table_model, validate_against_bound, DistortionModel,
    DistortionTable, EmpiricalCodeSpec, ShannonModel, TableModel,
};
pub use error::{Error, Result};
pub use optimizer::{
    critical_p0, optimal_rate, peak_gain_noise, pessimistic_rate, sweep_fig2_fig3, threshold_p1,
    threshold_p1_closed_form, threshold_report, GainRow, OptimalRateResult, RateProfile,
    SweepEntry, ThresholdReport,
};
pub use simulate::{
    compress_reconstruct, majority_vote, observe, run_batch, run_batch_with_workers, sample_source,
    BitBlock, TrialBatchResult, TrialConfig,
};
pub use types::{Capacity, Distortion, NoiseLevel, Rate};
