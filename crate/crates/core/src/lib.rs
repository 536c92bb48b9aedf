//! Bulk Johnson-Lindenstrauss dimension reduction.
//!
//! A random `k x D` matrix `Z` with iid sub-gaussian entries is only asked to
//! preserve *most* pairwise distances of a point set, which allows target
//! dimensions well below the classical `O(eps^-2 log N)`. The crate provides
//! the pieces needed to evaluate and check that claim at desk scale:
//!
//! * [`matrix`]: dense matrices, singular spectra, stable ranks `r_inf` and
//!   `r_4`, intrinsic dimension and power iteration.
//! * [`walecki`]: the Walecki decomposition of the complete graph `K_N` into
//!   Hamiltonian cycles and 1-regular subgraphs.
//! * [`batching`]: difference-vector batches over those subgraphs, with the
//!   effective `eta`/`zeta` bookkeeping for uneven batch sizes.
//! * [`projection`]: reproducible sub-gaussian projection matrices driven by a
//!   counter-based generator.
//! * [`bounds`]: closed-form tail rates, the epsilon adjustment between the
//!   squared and unsquared distortion statements, and target dimensions.
//! * [`estimation`]: empirical second moments of unit difference vectors and
//!   the intrinsic-dimension estimator.
//! * [`harness`]: Monte-Carlo experiments measuring preserved-distance
//!   fractions and empirical tail probabilities.
//! * [`io`]: datasets, the `BJLD` binary format, CSV, and JSON reports.
//!
//! The linear-algebra layer is generic over the scalar type (see [`Scalar`]);
//! the aliases below fix it to `f64`, which is what the bounds and the
//! experiment harness use.

// `!(x > 0.0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::manual_is_multiple_of)]

pub mod batching;
pub mod bounds;
pub mod error;
pub mod estimation;
pub mod harness;
pub mod io;
pub mod matrix;
pub mod projection;
pub mod rng;
pub mod walecki;

pub use error::{Error, Result};
pub use matrix::{DenseMatrix, Scalar, SingularSpectrum, StableRanks};

/// Double precision matrix.
pub type Matrix = DenseMatrix<f64>;
/// Single precision matrix.
pub type Matrix32 = DenseMatrix<f32>;
/// Double precision dataset.
pub type Dataset = io::Dataset<f64>;
/// Double precision batch of difference vectors.
pub type Batch = batching::Batch<f64>;
/// Double precision batch plan.
pub type BatchPlan = batching::BatchPlan<f64>;
/// Double precision projection matrix.
pub type ProjectionMatrix = projection::ProjectionMatrix<f64>;
/// Double precision empirical second moment.
pub type EmpiricalSecondMoment = estimation::EmpiricalSecondMoment<f64>;
