//! Certify or refute convexity of `C -> f(det C)` on symmetric positive
//! definite matrices.
//!
//! The map is convex on the cone of `n x n` positive definite matrices
//! exactly when, for every `s > 0`,
//!
//! ```text
//! f''(s) + (n - 1) / (n s) * f'(s) >= 0   and   f'(s) <= 0.
//! ```
//!
//! The crate checks that inequality on a grid, builds explicit `(C, H)`
//! counterexamples where it fails, and cross-checks every closed-form
//! derivative against finite differences.
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below fix the scalar to `f64`.

// `!(x > 0.0)` is used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod certifier;
pub mod detcalculus;
pub mod error;
pub mod expr;
pub mod function;
pub mod jet;
pub mod linalg;
pub mod odelimit;
pub mod scalar;

pub use error::{Error, Result};
pub use expr::Expr;
pub use function::{family_f_a, neo_hooke_volumetric, BuiltinFamily, ScalarFunction};
pub use jet::Jet2;
pub use linalg::{EigenDecomposition, Matrix, PosDefMatrix, SymMatrix};
pub use scalar::Real;

pub type Matrix64 = Matrix<f64>;
pub type SymMatrix64 = SymMatrix<f64>;
pub type PosDefMatrix64 = PosDefMatrix<f64>;
pub type EigenDecomposition64 = EigenDecomposition<f64>;
pub type Jet64 = Jet2<f64>;
pub type CertificationReport64 = certifier::CertificationReport<f64>;
pub type Witness64 = certifier::Witness<f64>;
pub type CurveTable64 = odelimit::CurveTable<f64>;
