//! Steady-state quantum dynamics of a χ⁽²⁾ microtoroid with two optical modes
//! (fundamental F, second harmonic S) and one mechanical mode M.
//!
//! The pipeline for a single parameter point is
//!
//! ```text
//! SystemParams -> MeanFields -> (DriftMatrix, DiffusionMatrix)
//!              -> StabilityReport -> CovarianceMatrix -> EntanglementReport
//! ```
//!
//! and [`pipeline::evaluate_point`] runs it end to end. [`sweep`] maps the
//! same pipeline over two-dimensional parameter grids, and [`inference`]
//! models reconstruction of the intracavity state from finite-bandwidth
//! homodyne records.
//!
//! Quadratures follow `x = (a + a†)/√2`, so the vacuum has variance 1/2 and
//! physical states have symplectic eigenvalues ≥ 1/2.

pub mod dynamics;
pub mod entanglement;
pub mod error;
pub mod gaussian;
pub mod inference;
pub mod linalg;
pub mod model;
pub mod pipeline;
pub mod sweep;

pub use error::{Error, Result};
pub use gaussian::CovarianceMatrix;
pub use model::{MeanFieldMode, MeanFields, SystemParams};
