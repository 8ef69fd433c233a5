//! Data-adaptive kernel smoothing of sampled signals.
//!
//! Kernel smoothers with optimal interior and boundary kernels, exact and
//! asymptotic error analysis, goodness-of-fit halfwidth selection, and a
//! three-stage plug-in estimator with a variable halfwidth.

// `!(x >= 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod cli;
pub mod error;
pub mod io;
pub mod kernels;
pub mod oracle;
pub mod pipeline;
pub mod quadrature;
pub mod selection;
pub mod series;
pub mod smoother;

pub use error::{Error, Result};
pub use kernels::Kernel;
pub use series::TimeSeries;
