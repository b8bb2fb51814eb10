//! Lagrangian mean curvature flow `∂u/∂t = Σ arctan λᵢ(D²u)` with the second
//! boundary condition `Du(Ω) = Ω̃`, written as `h(Du) = 0` on `∂Ω`.

pub mod cli;
pub mod discretization;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod legendre;
pub mod monitors;
pub mod steady;

pub use error::{Error, Result};
