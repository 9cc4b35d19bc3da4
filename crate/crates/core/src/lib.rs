//! Computational toolkit for sup-norm experiments on half-integral weight
//! cusp forms of level `4N`.
//!
//! The crate is organised bottom-up:
//!
//! - [`modular`]: integer matrices, Kronecker symbols, the theta multiplier
//!   cocycle, Atkin–Lehner matrices and `Γ₀(M)` bookkeeping.
//! - [`qexp`]: exact q-expansions (theta series, eta products, dilations),
//!   JSON ingestion and numerical modularity checks.
//! - [`geometry`]: the upper half plane, point-pair distance, the set
//!   `ℱ(2N)` and reduction into it.
//! - [`hecke`]: Hecke operators `T(p²)` on q-expansions and normalized
//!   eigenvalues.
//! - [`amplifier`]: amplifier weights built from Hecke eigenvalues.
//! - [`latcount`]: enumeration of integral matrices moving a point a bounded
//!   hyperbolic distance.
//! - [`kernel`]: point-pair invariants, the Selberg transform, truncated
//!   automorphic kernels and the geometric majorant.
//! - [`supnorm`]: certified evaluation, `L²` norms, sup search and level
//!   scans.

pub mod amplifier;
pub mod error;
pub mod geometry;
pub mod hecke;
pub mod kernel;
pub mod latcount;
pub mod modular;
pub mod qexp;
pub mod quadrature;
pub mod selftest;
pub mod supnorm;

pub use error::{Error, Result};
pub use geometry::UHPoint;
pub use modular::{DirichletCharacter, GroupElement, Weight};
pub use qexp::QExpansion;
