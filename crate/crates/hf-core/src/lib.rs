//! Numerical laboratory for the homogeneous flow on framings of the 3-sphere.
//!
//! The 3-sphere is represented as the unit quaternions. A framing is a field of
//! positive 3x3 matrices giving a global trivialization of the tangent bundle
//! relative to the left-invariant reference frame E_a(q) = q*e_a. The library
//! computes structure functions, linear curvature and its contraction H,
//! integrates the flow dA/dt = H(A)*A in framing and gauge form, classifies
//! framings into homotopy orbits by a self-calibrated mapping degree, detects
//! convergence plateaus, and decides whether limits carry a Lie group structure
//! (Killing-form classification).

// Tensor components are addressed by index throughout (c[k][i][j]); index
// loops mirror the formulas and are clearer here than iterator pipelines.
#![allow(clippy::needless_range_loop)]
// Positivity guards are written `!(x > 0.0)` on purpose: unlike `x <= 0.0`
// they also reject NaN, which must never pass a validation gate.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod s3_geometry;
pub mod framing;
pub mod curvature;
pub mod flow;
pub mod topology;
pub mod analysis;
pub mod container;
pub mod config;
pub mod harness;

pub use error::HfError;
