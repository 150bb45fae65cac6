//! Framings of S^3 and the gauge action on them.
//!
//! A framing is stored as a field of positive 3x3 matrices A(q): its frame is
//! W_i = A^i_s E_s relative to the global left-invariant reference frame, so
//! no coordinate atlas is involved and the gauge action "compose at the
//! source" is plain pointwise matrix multiplication. Gauge transformations
//! are stored the same way. Polar projection retracts a positive gauge field
//! onto its rotation-valued part without changing its homotopy class.

use std::sync::Arc;

use nalgebra::Matrix3;

use crate::error::{HfError, Result};
use crate::s3_geometry::{Grid, MatrixField};

/// Maximum admissible Frobenius condition number before a matrix field is
/// treated as numerically singular.
pub(crate) const COND_LIMIT: f64 = 1e12;

/// A positive framing: one matrix A(q) with det A > 0 per grid node.
#[derive(Clone)]
pub struct Framing {
    pub grid: Arc<Grid>,
    pub field: MatrixField,
}

/// A positive gauge transformation field acting on framings at the source.
#[derive(Clone)]
pub struct GaugeField {
    pub grid: Arc<Grid>,
    pub field: MatrixField,
}

/// A sampled deformation: a path of gauge fields starting at the identity.
#[derive(Clone)]
pub struct Deformation {
    pub samples: Vec<(f64, GaugeField)>,
}

fn check_positive(grid: &Grid, field: &MatrixField, what: &str) -> Result<()> {
    if field.len() != grid.node_count() {
        return Err(HfError::InvalidInput(format!(
            "{what} has {} matrices for a grid of {} nodes",
            field.len(),
            grid.node_count()
        )));
    }
    for (i, m) in field.iter().enumerate() {
        let det = m.determinant();
        if !(det > 0.0) {
            return Err(HfError::InvalidInput(format!(
                "{what} must have positive determinant everywhere; node {i} has det {det:.6e}"
            )));
        }
    }
    Ok(())
}

impl Framing {
    /// Validating constructor: the field must be one matrix per node with
    /// positive determinant at every node.
    pub fn new(grid: Arc<Grid>, field: MatrixField) -> Result<Self> {
        check_positive(&grid, &field, "framing")?;
        Ok(Framing { grid, field })
    }

    /// The framing scaled by a positive constant (A -> lambda A).
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(HfError::InvalidInput(format!("scale must be positive, got {lambda}")));
        }
        Ok(Framing { grid: self.grid.clone(), field: self.field.iter().map(|m| m * lambda).collect() })
    }
}

impl GaugeField {
    /// Validating constructor; same invariants as framings.
    pub fn new(grid: Arc<Grid>, field: MatrixField) -> Result<Self> {
        check_positive(&grid, &field, "gauge field")?;
        Ok(GaugeField { grid, field })
    }

    /// The identity gauge transformation.
    pub fn identity(grid: Arc<Grid>) -> Self {
        let field = vec![Matrix3::identity(); grid.node_count()];
        GaugeField { grid, field }
    }
}

impl Deformation {
    /// Validating constructor: strictly increasing times starting at 0, the
    /// first gauge field equal to the identity within 1e-12, and all samples
    /// sharing one grid layout.
    pub fn new(samples: Vec<(f64, GaugeField)>) -> Result<Self> {
        let first = samples
            .first()
            .ok_or_else(|| HfError::InvalidInput("deformation needs at least one sample".into()))?;
        if first.0 != 0.0 {
            return Err(HfError::InvalidInput(format!("deformation must start at t = 0, got {}", first.0)));
        }
        let mut worst = 0.0f64;
        for m in &first.1.field {
            worst = worst.max((m - Matrix3::identity()).abs().max());
        }
        if worst > 1e-12 {
            return Err(HfError::InvalidInput(format!(
                "deformation must start at the identity gauge; deviation {worst:.3e}"
            )));
        }
        for pair in samples.windows(2) {
            if pair[1].0 <= pair[0].0 {
                return Err(HfError::InvalidInput("deformation times must be strictly increasing".into()));
            }
            if !pair[1].1.grid.same_layout(&pair[0].1.grid) {
                return Err(HfError::InvalidInput("deformation samples must share one grid".into()));
            }
        }
        Ok(Deformation { samples })
    }

    /// The gauge field at the final sampled time.
    pub fn final_gauge(&self) -> &GaugeField {
        &self.samples.last().expect("deformation is never empty").1
    }
}

/// The left reference framing: A = identity everywhere (the reference frame
/// itself, whose frame fields satisfy [E_i, E_j] = 2 eps_{ijk} E_k).
pub fn reference_left_framing(grid: &Arc<Grid>) -> Framing {
    Framing { grid: grid.clone(), field: vec![Matrix3::identity(); grid.node_count()] }
}

/// The right reference framing: A(q) = rho(q), the image of q under the 2:1
/// covering map onto SO(3). Its frame fields are the right-invariant ones,
/// with brackets [F_i, F_j] = -2 eps_{ijk} F_k.
pub fn reference_right_framing(grid: &Arc<Grid>) -> Framing {
    Framing { grid: grid.clone(), field: grid.nodes.iter().map(|q| q.rotation_matrix()).collect() }
}

/// The gauge action at the source: (w compose a) has matrix field A*a.
pub fn gauge_apply(w: &Framing, a: &GaugeField) -> Result<Framing> {
    if !w.grid.same_layout(&a.grid) {
        return Err(HfError::InvalidInput("framing and gauge field live on different grids".into()));
    }
    let field: MatrixField = w.field.iter().zip(&a.field).map(|(m, g)| m * g).collect();
    Ok(Framing { grid: w.grid.clone(), field })
}

/// The unique gauge field carrying `w` to `z`: a(x) = A_w(x)^{-1} A_z(x).
pub fn relative_gauge(w: &Framing, z: &Framing) -> Result<GaugeField> {
    if !w.grid.same_layout(&z.grid) {
        return Err(HfError::InvalidInput("framings live on different grids".into()));
    }
    let inv = invert_field(&w.field)?;
    let field: MatrixField = inv.iter().zip(&z.field).map(|(wi, zm)| wi * zm).collect();
    Ok(GaugeField { grid: w.grid.clone(), field })
}

/// Matrix exponential by scaling-and-squaring with a Taylor tail. exp of any
/// real matrix has positive determinant, which makes this the canonical way
/// to manufacture positive gauge fields.
pub(crate) fn matrix_exp(m: &Matrix3<f64>) -> Matrix3<f64> {
    let k = (m.norm().log2().ceil() + 4.0).max(4.0) as i32;
    let s = m / 2f64.powi(k);
    let mut term = Matrix3::identity();
    let mut sum = Matrix3::identity();
    for j in 1..=14 {
        term = term * s / j as f64;
        sum += term;
    }
    for _ in 0..k {
        sum = sum * sum;
    }
    sum
}

/// Pointwise inverse of a matrix field, rejecting numerically singular nodes
/// by a Frobenius condition-number estimate.
pub(crate) fn invert_field(field: &MatrixField) -> Result<MatrixField> {
    let mut out = Vec::with_capacity(field.len());
    for (node, m) in field.iter().enumerate() {
        let inv = m
            .try_inverse()
            .ok_or(HfError::SingularField { node, cond: f64::INFINITY })?;
        let cond = m.norm() * inv.norm();
        if !cond.is_finite() || cond > COND_LIMIT {
            return Err(HfError::SingularField { node, cond });
        }
        out.push(inv);
    }
    Ok(out)
}

/// Rotation-valued part of a positive gauge field: per node
/// R = a (a^T a)^{-1/2}, computed through the symmetric eigendecomposition
/// of a^T a. R is the closest rotation and is homotopic to `a` through
/// positive fields (interpolate the symmetric factor to the identity).
pub fn polar_project(a: &GaugeField) -> Result<GaugeField> {
    let mut out = Vec::with_capacity(a.field.len());
    for (node, m) in a.field.iter().enumerate() {
        let s = m.transpose() * m;
        let eig = s.symmetric_eigen();
        let lmax = eig.eigenvalues.max();
        let lmin = eig.eigenvalues.min();
        if !(lmin > 0.0) || lmax / lmin > COND_LIMIT * COND_LIMIT {
            return Err(HfError::SingularField { node, cond: (lmax / lmin.max(f64::MIN_POSITIVE)).sqrt() });
        }
        let isqrt = Matrix3::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
        let mut r = m * (eig.eigenvectors * isqrt * eig.eigenvectors.transpose());
        // Newton-Schulz polish: the eigensolver leaves an orthogonality
        // defect around 1e-10 on conditioned inputs; each step squares it.
        for _ in 0..2 {
            let gram = r.transpose() * r;
            if (gram - Matrix3::identity()).abs().max() < 1e-14 {
                break;
            }
            r *= Matrix3::identity() * 1.5 - gram * 0.5;
        }
        let defect = (r.transpose() * r - Matrix3::identity()).abs().max();
        if defect > 1e-10 {
            return Err(HfError::Numeric(format!(
                "polar projection failed to produce a rotation at node {node} (defect {defect:.3e})"
            )));
        }
        out.push(r);
    }
    // det = +1 follows from det a > 0; the constructor re-checks positivity.
    GaugeField::new(a.grid.clone(), out)
}
