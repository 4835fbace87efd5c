//! Federated nonparametric regression under heterogeneous differential
//! privacy constraints.
//!
//! Each server holds its own regression sample and privacy budget and releases
//! a single privatized transcript: a noisy vector of clipped wavelet
//! coefficients (Gaussian mechanism) for estimating the whole function, or a
//! noisy local estimate at a point (Laplace mechanism). A central aggregator
//! combines the transcripts with weights reflecting each server's sample size
//! and budget. The [`harness`] module runs Monte Carlo experiments comparing
//! empirical risks with the predicted convergence rates.

// negated comparisons are how parameter checks reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod besov;
pub mod error;
pub mod federation;
pub mod harness;
pub mod privacy;
pub mod rng;
pub mod theory;
pub mod wavelet;

pub use besov::{BesovParams, CoeffTree, RegressionSample, SampleStyle};
pub use error::{Error, Result};
pub use federation::{GlobalTranscript, PointTranscript, ProtocolPlan, ServerSpec, Target};
pub use privacy::PrivacyBudget;
pub use wavelet::{build_family, Basis, FamilyName, LevelIndex, WaveletFamily};
