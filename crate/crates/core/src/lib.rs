//! Test for long-range dependence in possibly non-stationary time series.
//!
//! The observed series is split into blocks; on each block a FARIMA(k, d, 0)
//! model is fitted to the mean-corrected local periodogram by Whittle
//! estimation, and the averaged memory parameter, scaled by the inverse
//! Fisher information, is compared against standard normal critical values.
//!
//! Modules follow the pipeline: [`spectral`] evaluates model spectra and
//! information matrices, [`periodogram`] builds local periodograms,
//! [`whittle`] fits blocks and selects the sieve order, [`lrtest`]
//! aggregates fits into the decision, and [`simulate`] generates the
//! time-varying processes used for calibration experiments.

pub mod error;
pub mod normal;
pub mod optim;
pub mod pacf;
pub mod periodogram;
pub mod rng;
pub mod lrtest;
pub mod simulate;
pub mod spectral;
pub mod whittle;

pub use error::{LrdError, Result};
pub use spectral::{gamma_inverse, gamma_matrix, GammaInverse, QuadratureGrid, SieveParams};
pub use lrtest::{run_test, RunSettings, TestReport, VarianceMode};
pub use simulate::{monte_carlo, simulate_named_model, simulate_tvfarima, NamedModel, TvProcessSpec};
pub use whittle::{BlockFit, ScaleMode};
