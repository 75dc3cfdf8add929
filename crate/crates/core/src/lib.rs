//! Numerical toolkit for Riesz means of eigenvalues of convolution operators
//! `(K u)(x) = int_Omega K(x - y) u(y) dy` with homogeneous kernels on
//! finite-measure domains.
//!
//! * [`geometry`]: domains and the translation-overlap function eta.
//! * [`kernels`]: kernel/symbol pairs and the second-order constant gamma.
//! * [`spectral`]: piecewise-constant Galerkin discretisation and empirical
//!   Riesz means and counting functions.
//! * [`bounds`]: closed-form upper, two-term lower and counting bounds, and the
//!   scalar two-term asymptotics behind the lower bound.
//! * [`dirichlet`]: exact Dirichlet-Laplacian spectra on boxes and the
//!   counting bounds they are checked against.
//! * [`experiment`]: configuration, pipelines and report files behind the CLI.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod dirichlet;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod kernels;
pub mod quadrature;
pub mod spectral;
pub mod special;

pub use error::{Error, Result};
pub use geometry::{ConvexDomain, DomainKind, OverlapExpansion};
pub use kernels::{HelmholtzSymbol, KernelPair, LowerBoundSymbol};
pub use spectral::{DiscreteSpectrum, Mesh};
