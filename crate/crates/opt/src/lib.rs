//! Linear and mixed-integer programming layer.
//!
//! The solver works over any [`Scalar`] (`f32` or `f64`); the crate-root
//! aliases fix the scalar to `f64`, which is what the domain models use.

pub mod duals;
pub mod error;
pub mod lp;
pub mod mip;
pub mod scalar;
pub mod simplex;

pub use duals::{extract_duals, kkt_residuals, KktResiduals, Multipliers};
pub use error::SolveError;
pub use lp::{Duals, LinearProgram, Row, Sense, SolveResult, Status};
pub use mip::{solve_mip, solve_mip_with, Indicator, MipModel, MipOptions};
pub use scalar::Scalar;
pub use simplex::solve_lp;

pub type Lp = LinearProgram<f64>;
pub type Mip = MipModel<f64>;
pub type LpResult = SolveResult<f64>;
pub type LpError = SolveError<f64>;
