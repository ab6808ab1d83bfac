//! Parameter-robust geometric multigrid for nearly incompressible linear
//! elasticity, discretized with `[P2]^2` Scott-Vogelius elements on
//! barycentrically refined (Alfeld) triangulations of the unit square.
//!
//! The preconditioner is a W-cycle with Chebyshev-accelerated additive
//! Schwarz smoothing over macro-vertex stars and a prolongation that is
//! corrected by local solves inside each coarse macro cell.

pub mod assembly;
pub mod error;
pub mod experiment;
pub mod krylov;
pub mod linalg;
pub mod mesh;
pub mod multigrid;
pub mod relaxation;
pub mod space;
pub mod transfer;

pub use error::{Error, Result};
