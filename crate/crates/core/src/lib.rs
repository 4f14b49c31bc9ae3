//! Identification of spatially varying velocity and diffusivity fields in
//! advection–diffusion equations
//!
//! ```text
//! ∂u/∂t + ∇·(α(x) F(u)) − ∇·(κ(x)∇u) = 0
//! ```
//!
//! from snapshots of the state `u`. The unknown fields are expanded in an
//! orthonormal Legendre basis and their coefficients are found by weighted
//! least squares, either in weak (Galerkin) form, which needs spatial
//! derivatives of `u` only on the boundary, or in strong (collocation) form.
//!
//! The crate also carries the pieces needed to run the method end to end on
//! synthetic data: spectral forward solvers, snapshot sampling with noise
//! and local-polynomial filtering, and separability diagnostics that flag
//! data unable to determine the coefficients uniquely.

pub mod basis;
pub mod data;
pub mod diagnostics;
pub mod error;
pub mod experiment;
pub mod forward;
pub mod quadrature;
pub mod recovery;

pub use basis::{build_basis, BasisSet, BoxDomain, Truncation};
pub use error::{Error, Result};
pub use forward::{CoefficientFields, FluxSpec, SolutionTrajectory, SolverConfig};
pub use quadrature::{gauss_boundary, gauss_interior, BoundaryRule, QuadratureRule};
