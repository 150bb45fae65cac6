//! Structure functions, linear curvature, and the H-tensor of a framing.
//!
//! For a framing with matrix field A and dual field B = A^{-1}, the frame
//! vector fields are X_i = B^a_i E_a. Their brackets define the structure
//! functions C^k_{ij} through [X_i, X_j] = C^k_{ij} X_k; expanding the
//! bracket against the reference frame (whose own brackets are
//! [E_a, E_b] = 2 eps_{abc} E_c) gives the assembled formula
//!
//!   C^k_{ij} = A^k_c [ 2 B^a_i B^b_j eps_{abc} + X_i(B^c_j) - X_j(B^c_i) ].
//!
//! The linear curvature is the frame derivative of the structure functions,
//! R^k_{ij,l} = X_l(C^k_{ij}); it vanishes exactly when C is constant over
//! the (connected) sphere, which is the integrability criterion for the
//! framing to come from a Lie group structure. H is a single contraction of
//! R; the divergence-style contraction over the derivative slot is the
//! default, and the alternative trace is selectable per call.

use std::sync::Arc;

use nalgebra::{Matrix3, Vector3};

use crate::error::Result;
use crate::framing::{invert_field, Framing, GaugeField};
use crate::s3_geometry::{frame_derivative_all, integrate, Grid, MatrixField};

/// Per-node structure-function components, indexed [k][i][j].
pub type CTensor = [[[f64; 3]; 3]; 3];
/// Per-node linear-curvature components, indexed [k][i][j][l].
pub type RTensor = [[[[f64; 3]; 3]; 3]; 3];

pub(crate) const INDEX_PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

/// Structure functions C^k_{ij} of a framing, antisymmetric in (i, j) by
/// construction.
pub struct StructureField {
    pub grid: Arc<Grid>,
    pub c: Vec<CTensor>,
}

/// Linear curvature R^k_{ij,l} = X_l(C^k_{ij}).
pub struct CurvatureField {
    pub grid: Arc<Grid>,
    pub r: Vec<RTensor>,
}

/// Contraction H of the linear curvature; h[node][(k, j)].
pub struct HField {
    pub grid: Arc<Grid>,
    pub h: MatrixField,
}

/// Which single contraction of the linear curvature defines H.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum Contraction {
    /// Divergence-style pairing of the derivative slot with a bracket slot,
    /// H^k_j = sum_i R^k_{ji,i}. With this orientation the linearized flow
    /// damps high-frequency modes (heat-like sign); the opposite pairing
    /// anti-damps them.
    #[default]
    DivK,
    /// Trace over the upper index against one bracket slot, with the
    /// derivative slot left free: H^k_j = sum_l R^l_{lj,k}.
    TraceI,
}

/// B = A^{-1} and the structure functions, shared so downstream passes reuse
/// the inverse field.
pub(crate) fn structure_with_frame(w: &Framing) -> Result<(MatrixField, StructureField)> {
    let grid = &w.grid;
    let n = grid.node_count();
    let b = invert_field(&w.field)?;

    // reference-frame derivatives of all nine entries of B
    let mut eb: Vec<[Vec<f64>; 3]> = Vec::with_capacity(9);
    for c in 0..3 {
        for j in 0..3 {
            let entry: Vec<f64> = b.iter().map(|m| m[(c, j)]).collect();
            eb.push(frame_derivative_all(grid, &entry));
        }
    }

    let mut cf = vec![[[[0.0; 3]; 3]; 3]; n];
    for idx in 0..n {
        let bm = &b[idx];
        let am = &w.field[idx];
        // X_i(B^c_j) = sum_a B^a_i E_a(B^c_j)
        let xb = |c: usize, j: usize, i: usize| -> f64 {
            (0..3).map(|a| bm[(a, i)] * eb[c * 3 + j][a][idx]).sum()
        };
        for (i, j) in INDEX_PAIRS {
            let bi = Vector3::new(bm[(0, i)], bm[(1, i)], bm[(2, i)]);
            let bj = Vector3::new(bm[(0, j)], bm[(1, j)], bm[(2, j)]);
            let cross = bi.cross(&bj); // eps_{abc} B^a_i B^b_j
            let mut inner = [0.0; 3];
            for (c, v) in inner.iter_mut().enumerate() {
                *v = 2.0 * cross[c] + xb(c, j, i) - xb(c, i, j);
            }
            for k in 0..3 {
                let v: f64 = (0..3).map(|c| am[(k, c)] * inner[c]).sum();
                cf[idx][k][i][j] = v;
                cf[idx][k][j][i] = -v;
            }
        }
    }
    Ok((b, StructureField { grid: grid.clone(), c: cf }))
}

/// B, C, and R of a framing in one pass (18 spectral transforms total).
pub(crate) fn curvature_with_structure(w: &Framing) -> Result<(MatrixField, StructureField, CurvatureField)> {
    let (b, cs) = structure_with_frame(w)?;
    let grid = &w.grid;
    let n = grid.node_count();
    let mut r = vec![[[[[0.0; 3]; 3]; 3]; 3]; n];
    for k in 0..3 {
        for (i, j) in INDEX_PAIRS {
            let comp: Vec<f64> = cs.c.iter().map(|t| t[k][i][j]).collect();
            let ec = frame_derivative_all(grid, &comp);
            for (idx, t) in r.iter_mut().enumerate() {
                let bm = &b[idx];
                for l in 0..3 {
                    let v: f64 = (0..3).map(|a| bm[(a, l)] * ec[a][idx]).sum();
                    t[k][i][j][l] = v;
                    t[k][j][i][l] = -v;
                }
            }
        }
    }
    Ok((b, cs, CurvatureField { grid: grid.clone(), r }))
}

/// Contract an assembled curvature field into H.
pub(crate) fn contract_h(rf: &CurvatureField, contraction: Contraction) -> HField {
    let h = rf
        .r
        .iter()
        .map(|t| {
            Matrix3::from_fn(|k, j| match contraction {
                Contraction::DivK => (0..3).map(|i| t[k][j][i][i]).sum(),
                Contraction::TraceI => (0..3).map(|l| t[l][l][j][k]).sum(),
            })
        })
        .collect();
    HField { grid: rf.grid.clone(), h }
}

/// Structure functions of a framing.
pub fn structure_functions(w: &Framing) -> Result<StructureField> {
    structure_with_frame(w).map(|p| p.1)
}

/// Linear curvature (frame derivative of the structure functions).
pub fn linear_curvature(w: &Framing) -> Result<CurvatureField> {
    curvature_with_structure(w).map(|t| t.2)
}

/// H-tensor of a framing under the chosen contraction.
pub fn h_tensor(w: &Framing, contraction: Contraction) -> Result<HField> {
    curvature_with_structure(w).map(|t| contract_h(&t.2, contraction))
}

/// Anything with a per-node tensor whose size can be measured.
pub trait TensorField {
    fn grid(&self) -> &Grid;
    /// Squared Frobenius norm of the tensor at one node.
    fn frobenius_sq(&self, node: usize) -> f64;
}

impl TensorField for StructureField {
    fn grid(&self) -> &Grid {
        &self.grid
    }
    fn frobenius_sq(&self, node: usize) -> f64 {
        self.c[node].iter().flatten().flatten().map(|v| v * v).sum()
    }
}

impl TensorField for CurvatureField {
    fn grid(&self) -> &Grid {
        &self.grid
    }
    fn frobenius_sq(&self, node: usize) -> f64 {
        self.r[node].iter().flatten().flatten().flatten().map(|v| v * v).sum()
    }
}

impl TensorField for HField {
    fn grid(&self) -> &Grid {
        &self.grid
    }
    fn frobenius_sq(&self, node: usize) -> f64 {
        self.h[node].norm_squared()
    }
}

impl TensorField for Framing {
    fn grid(&self) -> &Grid {
        &self.grid
    }
    fn frobenius_sq(&self, node: usize) -> f64 {
        self.field[node].norm_squared()
    }
}

impl TensorField for GaugeField {
    fn grid(&self) -> &Grid {
        &self.grid
    }
    fn frobenius_sq(&self, node: usize) -> f64 {
        self.field[node].norm_squared()
    }
}

/// (sup, L2) norms of a tensor field: the sup of the per-node Frobenius norm
/// and the quadrature L2 norm of it.
pub fn field_norms<T: TensorField + ?Sized>(f: &T) -> (f64, f64) {
    let grid = f.grid();
    let sq: Vec<f64> = (0..grid.node_count()).map(|i| f.frobenius_sq(i)).collect();
    let sup = sq.iter().fold(0.0f64, |m, &v| m.max(v)).sqrt();
    let l2 = integrate(grid, &sq).max(0.0).sqrt();
    (sup, l2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::framing::{matrix_exp, reference_left_framing, reference_right_framing};
    use crate::s3_geometry::{build_grid, Quat, E1, E2, E3};
    use nalgebra::{Matrix4x3, Vector4};
    use std::f64::consts::PI;

    fn eps(i: usize, j: usize, k: usize) -> f64 {
        match (i, j, k) {
            (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
            (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
            _ => 0.0,
        }
    }

    /// Smooth matrix of low-degree component polynomials.
    fn poly_matrix(q: Quat) -> Matrix3<f64> {
        Matrix3::new(
            q.w * q.x,
            q.y,
            q.z * q.z,
            q.x * q.x,
            q.w * q.z,
            q.y * q.z,
            q.z,
            q.x * q.y,
            q.w * q.w,
        )
    }

    /// Closed-form positive framing A(q) = exp(strength * poly_matrix(q)).
    fn perturbed_framing(grid: &Arc<Grid>, strength: f64) -> Framing {
        let field: MatrixField = grid.nodes.iter().map(|&q| matrix_exp(&(poly_matrix(q) * strength))).collect();
        Framing::new(grid.clone(), field).unwrap()
    }

    #[test]
    fn left_framing_has_constant_brackets_and_no_curvature() {
        let g = Arc::new(build_grid(8, 8, 16).unwrap());
        let w = reference_left_framing(&g);
        let cs = structure_functions(&w).unwrap();
        for t in &cs.c {
            for i in 0..3 {
                for j in 0..3 {
                    for k in 0..3 {
                        assert_eq!(t[k][i][j], 2.0 * eps(i, j, k), "C^{k}_{{{i}{j}}}");
                    }
                }
            }
        }
        // with constant integer-valued inputs the derivative passes are
        // exactly zero, so R and H vanish bitwise
        let rf = linear_curvature(&w).unwrap();
        assert!(rf.r.iter().all(|t| t.iter().flatten().flatten().flatten().all(|&v| v == 0.0)));
        for con in [Contraction::DivK, Contraction::TraceI] {
            let hf = h_tensor(&w, con).unwrap();
            assert!(hf.h.iter().all(|m| m.iter().all(|&v| v == 0.0)));
        }
    }

    #[test]
    fn right_framing_has_opposite_constant_brackets() {
        let g = Arc::new(build_grid(8, 8, 16).unwrap());
        let w = reference_right_framing(&g);
        let cs = structure_functions(&w).unwrap();
        let mut worst = 0.0f64;
        for t in &cs.c {
            for i in 0..3 {
                for j in 0..3 {
                    for k in 0..3 {
                        worst = worst.max((t[k][i][j] + 2.0 * eps(i, j, k)).abs());
                    }
                }
            }
        }
        assert!(worst < 1e-12, "right-framing brackets deviate by {worst:.3e}");
        let (sup_r, _) = field_norms(&linear_curvature(&w).unwrap());
        assert!(sup_r < 1e-10, "right framing should be flat, sup R = {sup_r:.3e}");
        let (sup_h, _) = field_norms(&h_tensor(&w, Contraction::DivK).unwrap());
        assert!(sup_h < 1e-10);
    }

    #[test]
    fn rescaling_divides_brackets_and_flatness_survives() {
        let g = Arc::new(build_grid(8, 8, 16).unwrap());
        let left3 = reference_left_framing(&g).scaled(3.0).unwrap();
        let (sup_r, _) = field_norms(&linear_curvature(&left3).unwrap());
        assert!(sup_r < 1e-12);
        // C(lambda w) = C(w)/lambda on a non-constant framing as well
        let w = perturbed_framing(&g, 0.05);
        let c1 = structure_functions(&w).unwrap();
        let c2 = structure_functions(&w.scaled(2.0).unwrap()).unwrap();
        for (t1, t2) in c1.c.iter().zip(&c2.c) {
            for i in 0..3 {
                for j in 0..3 {
                    for k in 0..3 {
                        assert!((t2[k][i][j] - 0.5 * t1[k][i][j]).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn h_contractions_match_direct_index_sums() {
        let g = Arc::new(build_grid(8, 8, 16).unwrap());
        let w = perturbed_framing(&g, 0.05);
        let rf = linear_curvature(&w).unwrap();
        let h_div = h_tensor(&w, Contraction::DivK).unwrap();
        let h_tr = h_tensor(&w, Contraction::TraceI).unwrap();
        for (idx, t) in rf.r.iter().enumerate() {
            for k in 0..3 {
                for j in 0..3 {
                    let mut div = 0.0;
                    let mut tr = 0.0;
                    for s in 0..3 {
                        div += t[k][j][s][s];
                        tr += t[s][s][j][k];
                    }
                    assert!((h_div.h[idx][(k, j)] - div).abs() < 1e-12);
                    assert!((h_tr.h[idx][(k, j)] - tr).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn norms_of_simple_fields() {
        let g = Arc::new(build_grid(8, 8, 16).unwrap());
        let n = g.node_count();
        // zero field
        let zero = HField { grid: g.clone(), h: vec![Matrix3::zeros(); n] };
        assert_eq!(field_norms(&zero), (0.0, 0.0));
        // constant c * eps has Frobenius norm |c| sqrt(6) per node
        let c = -1.75;
        let mut t = [[[0.0; 3]; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    t[k][i][j] = c * eps(i, j, k);
                }
            }
        }
        let cf = StructureField { grid: g.clone(), c: vec![t; n] };
        let (sup, l2) = field_norms(&cf);
        let frob = c.abs() * 6f64.sqrt();
        assert!((sup - frob).abs() < 1e-13);
        assert!((l2 - frob * (2.0 * PI * PI).sqrt()).abs() < 1e-12);
        // homogeneity
        let mut t2 = t;
        t2.iter_mut().flatten().flatten().for_each(|v| *v *= 2.0);
        let cf2 = StructureField { grid: g.clone(), c: vec![t2; n] };
        let (sup2, l22) = field_norms(&cf2);
        assert!((sup2 - 2.0 * sup).abs() < 1e-13 && (l22 - 2.0 * l2).abs() < 1e-12);
    }

    #[test]
    fn flatness_is_equivalent_to_constant_brackets() {
        let g = Arc::new(build_grid(8, 8, 16).unwrap());
        let cases: Vec<(Framing, &str)> = vec![
            (reference_left_framing(&g), "left"),
            (reference_right_framing(&g), "right"),
            (reference_left_framing(&g).scaled(3.0).unwrap(), "scaled"),
            (perturbed_framing(&g, 0.05), "perturbed"),
        ];
        for (w, name) in cases {
            let cs = structure_functions(&w).unwrap();
            let rf = linear_curvature(&w).unwrap();
            let (sup_r, _) = field_norms(&rf);
            let first = cs.c[0];
            let mut variation = 0.0f64;
            for t in &cs.c {
                for i in 0..3 {
                    for j in 0..3 {
                        for k in 0..3 {
                            variation = variation.max((t[k][i][j] - first[k][i][j]).abs());
                        }
                    }
                }
            }
            let flat = sup_r <= 1e-5;
            let constant = variation <= 1e-5;
            assert_eq!(flat, constant, "{name}: sup R = {sup_r:.3e}, variation = {variation:.3e}");
            if name == "perturbed" {
                assert!(!flat, "perturbed framing should be visibly curved");
            }
        }
    }

    #[test]
    fn constant_target_gauge_rescales_curvature_pointwise() {
        let g = Arc::new(build_grid(8, 8, 16).unwrap());
        let w = perturbed_framing(&g, 0.05);
        let rf = linear_curvature(&w).unwrap();
        // constant g0 = lambda * rotation, applied at the target: A -> g0 A
        let lambda = 1.7;
        let rot = matrix_exp(&Matrix3::new(0.0, -0.4, 0.1, 0.4, 0.0, -0.2, -0.1, 0.2, 0.0));
        let g0 = rot * lambda;
        let moved = Framing::new(g.clone(), w.field.iter().map(|m| g0 * m).collect()).unwrap();
        let rf2 = linear_curvature(&moved).unwrap();
        let expected = rf2.frobenius_sq(0) / rf.frobenius_sq(0);
        for idx in (0..g.node_count()).step_by(37) {
            let ratio = rf2.frobenius_sq(idx) / rf.frobenius_sq(idx);
            assert!(
                (ratio / expected - 1.0).abs() < 1e-6,
                "pointwise rescaling broken at node {idx}: {ratio} vs {expected}"
            );
        }
        // and zero curvature maps to zero curvature
        let left_moved = Framing::new(
            g.clone(),
            reference_left_framing(&g).field.iter().map(|m| g0 * m).collect(),
        )
        .unwrap();
        let (sup_r, _) = field_norms(&linear_curvature(&left_moved).unwrap());
        assert!(sup_r < 1e-10);
    }

    #[test]
    fn spectral_tensors_match_nested_differencing_oracle() {
        // Independent check of C and R on a smooth closed-form framing: the
        // brackets are reproduced by nested central differences along the
        // one-parameter flows of the frame fields, and R by differencing the
        // bracket oracle itself.
        let g = Arc::new(build_grid(16, 16, 32).unwrap());
        let strength = 0.05;
        let w = perturbed_framing(&g, strength);
        let cs = structure_functions(&w).unwrap();
        let rf = linear_curvature(&w).unwrap();

        let a_of = |q: Quat| matrix_exp(&(poly_matrix(q) * strength));
        let b_of = |q: Quat| a_of(q).try_inverse().unwrap();
        let (h1, h2) = (1e-3, 1e-5);

        // X_i f (q) by central differences along the reference flows
        let x_dir = |q: Quat, i: usize, f: &dyn Fn(Quat) -> f64, h: f64| -> f64 {
            let b = b_of(q);
            (0..3)
                .map(|a| {
                    b[(a, i)] * (f(q.mul(Quat::exp_axis(a + 1, h))) - f(q.mul(Quat::exp_axis(a + 1, -h))))
                        / (2.0 * h)
                })
                .sum()
        };

        // C^._{ij}(q) from brackets applied to the four coordinates, solved
        // in least squares against the (exact) frame derivatives of those
        // coordinates
        let c_oracle = |q: Quat, i: usize, j: usize| -> Vector3<f64> {
            let b = b_of(q);
            let m = Matrix4x3::from_fn(|c, k| {
                (0..3).map(|a| b[(a, k)] * q.mul([E1, E2, E3][a]).comp(c)).sum::<f64>()
            });
            let mut rhs = Vector4::zeros();
            for c in 0..4 {
                let f = move |p: Quat| p.comp(c);
                let xi_f = |p: Quat| x_dir(p, i, &f, h2);
                let xj_f = |p: Quat| x_dir(p, j, &f, h2);
                rhs[c] = x_dir(q, i, &xj_f, h1) - x_dir(q, j, &xi_f, h1);
            }
            (m.transpose() * m).try_inverse().unwrap() * (m.transpose() * rhs)
        };

        let stride = g.node_count() / 30;
        for idx in (0..g.node_count()).step_by(stride) {
            let q = g.nodes[idx];
            let b = b_of(q);
            for (i, j) in INDEX_PAIRS {
                let ck = c_oracle(q, i, j);
                for k in 0..3 {
                    let diff = (cs.c[idx][k][i][j] - ck[k]).abs();
                    assert!(diff < 1e-4, "C^{k}_{{{i}{j}}} at node {idx}: off by {diff:.2e}");
                }
                // R^k_{ij,l} = X_l(C^k_{ij}) by differencing the oracle
                let mut dc = [Vector3::zeros(); 3];
                for (a, d) in dc.iter_mut().enumerate() {
                    let plus = c_oracle(q.mul(Quat::exp_axis(a + 1, h1)), i, j);
                    let minus = c_oracle(q.mul(Quat::exp_axis(a + 1, -h1)), i, j);
                    *d = (plus - minus) / (2.0 * h1);
                }
                for l in 0..3 {
                    let rl: Vector3<f64> = (0..3).map(|a| dc[a] * b[(a, l)]).sum();
                    for k in 0..3 {
                        let diff = (rf.r[idx][k][i][j][l] - rl[k]).abs();
                        assert!(diff < 1e-4, "R^{k}_{{{i}{j}}},{l} at node {idx}: off by {diff:.2e}");
                    }
                }
            }
        }
    }
}
