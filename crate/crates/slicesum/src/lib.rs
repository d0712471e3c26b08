//! Fast summation of radial kernels by slicing.
//!
//! A radial kernel sum `s_m = Σ_n w_n F(‖x_n − y_m‖)` is replaced by an
//! average of one-dimensional kernel sums over projections onto directions
//! on the unit sphere. Each 1D sum is computed fast, either by a
//! non-equispaced FFT (Fourier backend) or by sorting (negative distance
//! kernel), giving `O(P(N + M + N_ft log N_ft))` instead of `O(NM)`.
//!
//! The crate has five parts:
//!
//! * [`kernels`] — radial basis functions `F`, their sliced counterparts
//!   `f` with `E_ξ[f(|⟨ξ,x⟩|)] = F(‖x‖)`, 1D spectral densities, and the
//!   median bandwidth rule.
//! * [`directions`] — direction sets on `S^{d−1}`: iid, projected Sobol,
//!   orthogonal frames, and distance designs optimized by Adam on a
//!   symmetrized distance energy.
//! * [`nfft`] — 1D non-equispaced discrete Fourier transforms (gridded
//!   fast path plus exact direct oracles).
//! * [`fastsum`] — the summation backends: naive, direct slicing, Fourier
//!   slicing, sorting slicing, and RFF/ORF baselines.
//! * [`analysis`] — closed-form slicing variances, Monte Carlo checks,
//!   and convergence-rate experiments.
//!
//! All randomized operations take explicit seeds and run on a fixed
//! counter-based generator (SplitMix64), so results reproduce across
//! platforms.

pub mod analysis;
pub mod data;
pub mod directions;
pub mod fastsum;
pub mod kernels;
pub mod nfft;
pub mod points;

pub(crate) mod math;
pub(crate) mod quad;
pub mod rng;
mod sobol;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A constructor or operation received an invalid parameter.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested kernel/operation combination is not supported.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A numerical evaluation failed to converge within its budget.
    #[error("evaluation failed: {msg} (residual estimate {residual:.3e})")]
    Evaluation { msg: String, residual: f64 },

    /// Sampled data is degenerate (e.g. all pairwise distances zero).
    #[error("degenerate data: {0}")]
    DegenerateData(String),

    /// An energy optimization produced a non-finite value.
    #[error("optimization diverged after {steps} steps")]
    OptimizationDiverged { steps: usize },

    /// Data summed against a plan built for different geometry.
    #[error("plan mismatch: {0}")]
    PlanMismatch(String),

    /// A file could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
