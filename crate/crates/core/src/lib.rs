//! Relevant sampling of the discrete short-time Fourier transform.
//!
//! Works in `ℂ^L` with the cyclic time-frequency grid `Z_L × Z_L`:
//! localization operators and their eigenspaces, random sampling from a
//! region of the grid, probabilistic sampling-inequality certificates, and
//! least-squares reconstruction from local STFT samples.

// `!(x > 0.0)` guards are written that way so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod linalg;
pub mod locop;
pub mod par;
pub mod recon;
pub mod regions;
pub mod sampling;
pub mod signal_io;
pub mod tfcore;
pub mod witnesses;

pub use error::{Error, Result};
pub use locop::{EigenSystem, LocalizationOperator};
pub use par::Execution;
pub use regions::{SampleSet, TFRegion};
pub use tfcore::{Signal, TFMatrix, TFPoint, Window, C64};
