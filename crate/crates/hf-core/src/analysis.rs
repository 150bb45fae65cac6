//! Lie-algebra analysis of a framing: does it define a local Lie group,
//! and which algebra does it realize?
//!
//! A framing whose structure functions are constant over the manifold
//! closes a 3-dimensional Lie algebra; on a compact simply connected
//! manifold such a local structure globalizes to a group action. The
//! analysis therefore measures how far the structure functions are from
//! their mean, and classifies the mean constants through the Killing form:
//! negative definite Killing form in dimension 3 pins the algebra to
//! su(2), whose simply connected group is the 3-sphere itself.

use nalgebra::Matrix3;
use serde::Serialize;

use crate::curvature::{structure_functions, CTensor};
use crate::error::{HfError, Result};
use crate::framing::Framing;
use crate::s3_geometry::integrate;

/// Tolerance separating "numerically zero" eigenvalues / constants from
/// structurally meaningful ones during classification.
pub const CLASS_TOL: f64 = 1e-6;

/// Antisymmetry gate for classification input.
const ANTISYM_TOL: f64 = 1e-12;

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LieClass {
    Su2,
    Abelian,
    Other,
}

impl std::fmt::Display for LieClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LieClass::Su2 => "su2",
            LieClass::Abelian => "abelian",
            LieClass::Other => "other",
        })
    }
}

/// Outcome of the local-Lie-group check on a framing.
#[derive(Clone, Debug, Serialize)]
pub struct LieLimitReport {
    /// sup over nodes of the Frobenius distance between the structure
    /// functions and their mean
    pub constancy_residual: f64,
    /// quadrature-weighted mean structure constants
    pub mean_constants: CTensor,
    /// worst violation of the Jacobi identity by the mean constants
    pub jacobi_residual: f64,
    /// eigenvalues of the Killing form, ascending
    pub killing_eigenvalues: [f64; 3],
    pub classification: LieClass,
    /// true when the constancy residual is inside the requested tolerance:
    /// the local structure then extends to a global group action because
    /// the underlying manifold is compact and simply connected
    pub globalizable: bool,
}

/// Quadrature-weighted mean of the structure functions, and the sup-norm
/// residual measuring how far the field is from that constant value.
pub fn mean_structure(w: &Framing) -> Result<(CTensor, f64)> {
    let cs = structure_functions(w)?;
    let grid = &cs.grid;
    let n = grid.node_count();
    let vol = integrate(grid, &vec![1.0; n]);
    let mut cbar = [[[0.0f64; 3]; 3]; 3];
    let mut comp = vec![0.0f64; n];
    for k in 0..3 {
        for i in 0..3 {
            for j in 0..3 {
                for (dst, t) in comp.iter_mut().zip(&cs.c) {
                    *dst = t[k][i][j];
                }
                cbar[k][i][j] = integrate(grid, &comp) / vol;
            }
        }
    }
    let mut residual = 0.0f64;
    for t in &cs.c {
        let mut s = 0.0;
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    let d = t[k][i][j] - cbar[k][i][j];
                    s += d * d;
                }
            }
        }
        residual = residual.max(s.sqrt());
    }
    Ok((cbar, residual))
}

/// Classify constant structure coefficients: Jacobi residual, Killing
/// eigenvalues (ascending), and the algebra class.
///
/// The input must be antisymmetric in the two lower indices (it encodes a
/// bracket); anything else is rejected.
pub fn lie_classify(c: &CTensor) -> Result<(f64, [f64; 3], LieClass)> {
    for k in 0..3 {
        for i in 0..3 {
            for j in 0..3 {
                if (c[k][i][j] + c[k][j][i]).abs() > ANTISYM_TOL {
                    return Err(HfError::InvalidInput(format!(
                        "structure constants must be antisymmetric in the lower indices; \
                         component ({k},{i},{j}) breaks symmetry by {:.3e}",
                        (c[k][i][j] + c[k][j][i]).abs()
                    )));
                }
            }
        }
    }

    let mut jacobi = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                for m in 0..3 {
                    let mut s = 0.0;
                    for l in 0..3 {
                        s += c[l][i][j] * c[m][l][k]
                            + c[l][j][k] * c[m][l][i]
                            + c[l][k][i] * c[m][l][j];
                    }
                    jacobi = jacobi.max(s.abs());
                }
            }
        }
    }

    let killing = Matrix3::from_fn(|i, j| {
        let mut s = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                s += c[a][i][b] * c[b][j][a];
            }
        }
        s
    });
    let killing = (killing + killing.transpose()) * 0.5;
    let mut eigs: Vec<f64> = killing.symmetric_eigen().eigenvalues.iter().copied().collect();
    eigs.sort_by(|a, b| a.partial_cmp(b).expect("Killing eigenvalues are finite"));
    let eigs = [eigs[0], eigs[1], eigs[2]];

    let frob = c
        .iter()
        .flat_map(|p| p.iter())
        .flat_map(|r| r.iter())
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt();
    let class = if frob <= CLASS_TOL {
        LieClass::Abelian
    } else if eigs.iter().all(|&e| e < -CLASS_TOL) {
        LieClass::Su2
    } else {
        LieClass::Other
    };
    Ok((jacobi, eigs, class))
}

/// Full local-Lie-group check of a framing at a given constancy tolerance.
pub fn llg_check(w: &Framing, tol: f64) -> Result<LieLimitReport> {
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(HfError::InvalidInput(format!("tolerance must be positive and finite, got {tol}")));
    }
    let (cbar, residual) = mean_structure(w)?;
    let (jacobi, eigs, class) = lie_classify(&cbar)?;
    Ok(LieLimitReport {
        constancy_residual: residual,
        mean_constants: cbar,
        jacobi_residual: jacobi,
        killing_eigenvalues: eigs,
        classification: class,
        globalizable: residual <= tol,
    })
}
