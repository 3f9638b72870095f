//! Shared function families and discrete carriers: growth penalties,
//! jump costs, sampled grids, piecewise-constant partitions and the
//! Hessian norm.

pub mod grid;
pub mod growth;
pub mod jump;
pub mod matrix;
pub mod piecewise;

pub use grid::{Extent, GridFunction};
pub use growth::{
    default_p_grid, growth_exponent_estimate, jump_exponent, GrowthExponentEstimate,
    GrowthFunction, GrowthKind,
};
pub use jump::{JumpCost, JumpKind};
pub use matrix::{HessianNormMode, SymmetricMatrix2};
pub use piecewise::{Cell, Edge, PiecewisePoly1, PiecewisePoly2};
