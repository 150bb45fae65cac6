//! Homotopy classification of framings by mapping degree.
//!
//! On the 3-sphere the homotopy classes of rotation-valued fields form a
//! group isomorphic to the integers, generated by the 2:1 covering map rho
//! onto SO(3). The degree of a rotation-valued field R is computed as the
//! pullback-volume integral of the Maurer-Cartan form,
//!
//!   deg(R) = (1/K) * Int det[m_1 m_2 m_3] dV,
//!
//! where m_a is the axial vector of the antisymmetric matrix R^T E_a(R) and
//! K is the same integral evaluated on the covering map, so that
//! deg(rho) = +1 by convention. Self-calibration removes any dependence on
//! volume normalization conventions.

use std::sync::Arc;

use nalgebra::Matrix3;

use crate::error::{HfError, Result};
use crate::framing::{
    gauge_apply, polar_project, reference_left_framing, reference_right_framing, relative_gauge, Framing,
    GaugeField,
};
use crate::s3_geometry::{frame_derivative_all, integrate, Grid};

/// Which reference framing a canonical construction starts from.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Side {
    Left,
    Right,
}

/// Homotopy-orbit bookkeeping for a framing, relative to the left reference
/// framing as base point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrbitClass {
    pub degree: i64,
    pub label: OrbitLabel,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OrbitLabel {
    LeftCanonical,
    RightCanonical,
    /// Twisted orbit; carries the total degree of the class.
    Twisted(i64),
    Unknown,
}

/// Defect value attached to an orbit, when one is defined.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DefectValue {
    pub value: Option<i64>,
}

/// Which canonical orbit receives defect +2. The two canonical orbits carry
/// the values {+2, -2} as an unordered pair; the assignment of sign to side
/// is not determined here and is therefore explicit configuration.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum DefectAssignment {
    #[default]
    LeftPlus,
    LeftMinus,
}

/// The covering map as a rotation-valued gauge field: node q maps to the
/// rotation by which q conjugates imaginary quaternions.
pub fn covering_map_field(grid: &Arc<Grid>) -> GaugeField {
    GaugeField { grid: grid.clone(), field: grid.nodes.iter().map(|q| q.rotation_matrix()).collect() }
}

/// Degree-k twist representative: node q maps to rho(q^k). Bounded |k| <= 8
/// so the twisted field stays resolvable on moderate grids.
pub fn power_twist_field(grid: &Arc<Grid>, k: i64) -> Result<GaugeField> {
    if k.abs() > 8 {
        return Err(HfError::InvalidInput(format!(
            "twist exponent {k} out of range (|k| <= 8; higher twists need finer grids)"
        )));
    }
    let field = grid.nodes.iter().map(|q| q.powi(k).rotation_matrix()).collect();
    Ok(GaugeField { grid: grid.clone(), field })
}

/// Pullback-volume integral of a rotation-valued field (uncalibrated).
fn pullback_volume(r: &GaugeField) -> Result<f64> {
    let grid = &r.grid;
    let n = grid.node_count();
    for (node, m) in r.field.iter().enumerate() {
        let defect = (m.transpose() * m - Matrix3::identity()).abs().max();
        if defect > 1e-8 {
            return Err(HfError::InvalidInput(format!(
                "field is not rotation-valued at node {node} (orthogonality defect {defect:.3e}); \
                 apply polar_project first"
            )));
        }
    }
    // reference-frame derivatives of all nine entries of R
    let mut er: Vec<[Vec<f64>; 3]> = Vec::with_capacity(9);
    for rr in 0..3 {
        for cc in 0..3 {
            let entry: Vec<f64> = r.field.iter().map(|m| m[(rr, cc)]).collect();
            er.push(frame_derivative_all(grid, &entry));
        }
    }
    let mut integrand = vec![0.0; n];
    for (idx, out) in integrand.iter_mut().enumerate() {
        let rm = &r.field[idx];
        let mut mm = Matrix3::zeros();
        for a in 0..3 {
            let ea = Matrix3::from_fn(|rr, cc| er[rr * 3 + cc][a][idx]);
            let om = rm.transpose() * ea;
            // axial vector of the (numerically) antisymmetric om
            mm[(0, a)] = om[(2, 1)];
            mm[(1, a)] = om[(0, 2)];
            mm[(2, a)] = om[(1, 0)];
        }
        *out = mm.determinant();
    }
    Ok(integrate(grid, &integrand))
}

/// Reusable degree evaluator: computes the covering-map calibration integral
/// once per grid and normalizes all subsequent degree integrals by it.
pub struct DegreeCalibrator {
    grid: Arc<Grid>,
    /// calibration integral K (the covering map's pullback volume)
    pub constant: f64,
}

impl DegreeCalibrator {
    pub fn new(grid: &Arc<Grid>) -> Result<Self> {
        let k = pullback_volume(&covering_map_field(grid))?;
        // The covering map's integrand is a constant, so K is quadrature-
        // exact on any admissible grid; a large deviation means the grid or
        // derivative machinery is broken, not that calibration drifted.
        let expected = 16.0 * std::f64::consts::PI.powi(2);
        if !k.is_finite() || (k.abs() / expected) < 0.5 || (k.abs() / expected) > 2.0 {
            return Err(HfError::Numeric(format!(
                "degree calibration integral {k:.6e} is far from its expected magnitude {expected:.6e}"
            )));
        }
        Ok(DegreeCalibrator { grid: grid.clone(), constant: k })
    }

    /// Raw (real-valued) degree of a rotation-valued field.
    pub fn raw_degree(&self, r: &GaugeField) -> Result<f64> {
        if !r.grid.same_layout(&self.grid) {
            return Err(HfError::InvalidInput("field grid does not match calibrator grid".into()));
        }
        Ok(pullback_volume(r)? / self.constant)
    }

    /// (raw, rounded) degree; fails when the raw value is not close to an
    /// integer, since then the calibrated integral cannot be trusted.
    pub fn degree_of(&self, r: &GaugeField) -> Result<(f64, i64)> {
        let raw = self.raw_degree(r)?;
        let rounded = raw.round();
        if (raw - rounded).abs() > 0.25 {
            return Err(HfError::CalibrationUnstable { raw });
        }
        Ok((raw, rounded as i64))
    }
}

/// Degree of a rotation-valued gauge field (one-shot; builds the calibrator).
pub fn degree(r: &GaugeField) -> Result<(f64, i64)> {
    DegreeCalibrator::new(&r.grid)?.degree_of(r)
}

/// Pointwise product of gauge fields; on rotation-valued fields the degree
/// adds under this composition.
pub fn orbit_compose(a: &GaugeField, b: &GaugeField) -> Result<GaugeField> {
    if !a.grid.same_layout(&b.grid) {
        return Err(HfError::InvalidInput("gauge fields live on different grids".into()));
    }
    let field = a.field.iter().zip(&b.field).map(|(x, y)| x * y).collect();
    Ok(GaugeField { grid: a.grid.clone(), field })
}

/// Canonical orbit representative: the chosen reference framing twisted by
/// rho^twist. The right side's base degree is measured (from the left/right
/// relative gauge), not assumed.
pub fn canonical_framing(grid: &Arc<Grid>, side: Side, twist: i64) -> Result<(Framing, OrbitClass)> {
    let twist_field = power_twist_field(grid, twist)?;
    let (base, base_degree, base_label) = match side {
        Side::Left => (reference_left_framing(grid), 0, OrbitLabel::LeftCanonical),
        Side::Right => {
            let left = reference_left_framing(grid);
            let right = reference_right_framing(grid);
            let rel = polar_project(&relative_gauge(&left, &right)?)?;
            let (_, d) = degree(&rel)?;
            (right, d, OrbitLabel::RightCanonical)
        }
    };
    let w = gauge_apply(&base, &twist_field)?;
    let total = base_degree + twist;
    let label = if twist == 0 { base_label } else { OrbitLabel::Twisted(total) };
    Ok((w, OrbitClass { degree: total, label }))
}

/// Defect values are only known on the two canonical orbits, where they are
/// {+2, -2} as an unordered pair; `assignment` selects which side gets +2.
pub fn defect_report(class: &OrbitClass, assignment: DefectAssignment) -> DefectValue {
    let left_sign = match assignment {
        DefectAssignment::LeftPlus => 2,
        DefectAssignment::LeftMinus => -2,
    };
    let value = match class.label {
        OrbitLabel::LeftCanonical => Some(left_sign),
        OrbitLabel::RightCanonical => Some(-left_sign),
        OrbitLabel::Twisted(_) | OrbitLabel::Unknown => None,
    };
    DefectValue { value }
}
