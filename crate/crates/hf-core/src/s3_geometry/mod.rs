//! S^3 as the unit quaternions, with a structured grid supporting accurate
//! quadrature and differentiation along the left-invariant frame E_a(q) = q*e_a.

mod quaternion;
mod spectral;
mod grid;

pub use quaternion::{Quat, E1, E2, E3};
pub use grid::{build_grid, frame_derivative, frame_derivative_all, integrate, Grid, MatrixField, ScalarField};
