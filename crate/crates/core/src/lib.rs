//! Gradient multi-normalization and the stateless optimizers built on it.
//!
//! The crate provides:
//!
//! - dense 64-bit matrix kernels and two whitening routines
//!   ([`matrix`]);
//! - a catalog of norms with closed-form normalized projections and dual
//!   norms ([`norms`]);
//! - the alternating multi-normalization engine with fixed-point
//!   diagnostics ([`multinorm`]);
//! - square-root Sinkhorn scaling, the classic Sinkhorn oracle on the
//!   squared matrix, and Hilbert-metric convergence diagnostics
//!   ([`sinkhorn`]);
//! - an optimizer suite (Adam, SGD, SignGD, steepest descent under a
//!   norm, SWAN, MNGD, SinkGD) with schedules, group-wise scaling, and
//!   state-memory accounting ([`optim`]);
//! - dual solvers for the convex relaxation of the multi-norm problem:
//!   norm-ball projections, proximal operators, Chambolle-Pock, and
//!   coordinate dual descent ([`dualproj`]);
//! - deterministic desk-scale training problems with analytic gradients
//!   and persisted run records ([`harness`]);
//! - a named invariant suite for end-to-end verification ([`verify`]).
//!
//! # Example
//!
//! Five alternating row/column normalizations of a gradient pin every
//! column norm to `sqrt(m)` and the Frobenius norm to `sqrt(n m)`:
//!
//! ```
//! use multinorm_core::matrix::DenseMatrix;
//! use multinorm_core::norms::Mode;
//! use multinorm_core::sinkhorn::sr_sinkhorn;
//!
//! let grad = DenseMatrix::from_vec(2, 3, vec![0.4, -1.2, 0.7, -0.9, 0.3, -0.5]).unwrap();
//! let scaled = sr_sinkhorn(&grad, 5, Mode::Optimizer).unwrap();
//! for &c in scaled.col_l2_norms().as_slice() {
//!     assert!((c - 2.0_f64.sqrt()).abs() < 1e-12);
//! }
//! assert!((scaled.frobenius_norm() - 6.0_f64.sqrt()).abs() < 1e-12);
//! ```

pub mod dualproj;
pub mod error;
pub mod harness;
pub mod matrix;
pub mod multinorm;
pub mod norms;
pub mod optim;
pub mod prng;
pub mod sinkhorn;
pub mod verify;

pub use error::{Error, Result};
pub use matrix::{DenseMatrix, Vector};
pub use norms::{Mode, NormKind, NormSpec};
