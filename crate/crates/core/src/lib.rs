//! Gaussian recursive filters as stand-ins for discrete Gaussian
//! convolution inside a conjugate-gradient 3D-Var solver.
//!
//! - [`operator`]: grids, signals, dense operators, ∞-norms, dense solves
//! - [`gaussian`]: the exact convolution operator `V`
//! - [`recfilter`]: first- and third-order recursive filters and `F = (LU)^-K`
//! - [`analysis`]: operator distances, edge trimming, per-step CG error bounds,
//!   conditioning of the primal and dual systems
//! - [`var3d`]: observation operator, `Psi`, CG, exact and filtered
//!   matrix-vector products, end-to-end assimilation
//! - [`experiments`]: table and figure generators plus CSV/JSON output
//!
//! Runnable walkthroughs live in the crate's `examples/` directory.

pub mod analysis;
pub mod error;
pub mod experiments;
pub mod gaussian;
pub mod operator;
pub mod recfilter;
pub mod var3d;

pub use error::{Error, Result};
pub use operator::{DenseOperator, DiagonalOperator, Grid1D, Signal};
pub use recfilter::{FilterCoefficients, FilterOrder, FilterSpec};
