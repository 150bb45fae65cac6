//! Property tests for the algebraic invariants of the field operations:
//! polar projection, the gauge group action, scaling homogeneity of the
//! structure functions, and invariance of the Lie classification.

// index loops mirror the tensor formulas; see the library crate root
#![allow(clippy::needless_range_loop)]

use std::sync::{Arc, OnceLock};

use nalgebra::Matrix3;
use proptest::prelude::*;

use hf_core::analysis::lie_classify;
use hf_core::curvature::{structure_functions, CTensor};
use hf_core::framing::{gauge_apply, polar_project, relative_gauge, GaugeField};
use hf_core::framing::reference_left_framing;
use hf_core::harness::random_deformation;
use hf_core::s3_geometry::{build_grid, Grid};
use hf_core::topology::orbit_compose;

fn small_grid() -> &'static Arc<Grid> {
    static GRID: OnceLock<Arc<Grid>> = OnceLock::new();
    GRID.get_or_init(|| Arc::new(build_grid(6, 4, 8).expect("valid grid")))
}

fn sup_diff(a: &[Matrix3<f64>], b: &[Matrix3<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs().max()).fold(0.0, f64::max)
}

fn deformation(seed: u64, eps: f64) -> GaugeField {
    random_deformation(small_grid(), seed, eps, 2).expect("deformation")
}

/// Build an antisymmetric coefficient tensor from 9 free components.
fn antisym(free: [[f64; 3]; 3]) -> CTensor {
    let pairs = [(0usize, 1usize), (0, 2), (1, 2)];
    let mut c = [[[0.0; 3]; 3]; 3];
    for k in 0..3 {
        for (p, &(i, j)) in pairs.iter().enumerate() {
            c[k][i][j] = free[k][p];
            c[k][j][i] = -free[k][p];
        }
    }
    c
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// Polar projection lands on rotations and is idempotent.
    #[test]
    fn polar_projection_is_an_idempotent_retraction(seed in any::<u64>(), eps in 0.0f64..0.6) {
        let a = deformation(seed, eps);
        let r = polar_project(&a).unwrap();
        for m in &r.field {
            let orth = (m.transpose() * m - Matrix3::identity()).abs().max();
            prop_assert!(orth <= 1e-12, "R^T R deviates from I by {orth:.3e}");
            prop_assert!(m.determinant() > 0.0);
        }
        let again = polar_project(&r).unwrap();
        prop_assert!(sup_diff(&r.field, &again.field) <= 1e-12);
    }

    /// The gauge action respects composition and fixes nothing under the
    /// identity: w . id == w bitwise and (w . a) . b == w . (a b).
    #[test]
    fn gauge_action_respects_the_group_structure(s1 in any::<u64>(), s2 in any::<u64>(), eps in 0.0f64..0.4) {
        let g = small_grid();
        let w = reference_left_framing(g);
        let id = GaugeField::identity(g.clone());
        let fixed = gauge_apply(&w, &id).unwrap();
        prop_assert_eq!(sup_diff(&w.field, &fixed.field), 0.0);

        let a = deformation(s1, eps);
        let b = deformation(s2, eps);
        let two_steps = gauge_apply(&gauge_apply(&w, &a).unwrap(), &b).unwrap();
        let one_step = gauge_apply(&w, &orbit_compose(&a, &b).unwrap()).unwrap();
        prop_assert!(sup_diff(&two_steps.field, &one_step.field) <= 1e-12);
    }

    /// relative_gauge recovers the gauge field that connects two framings
    /// on the same orbit.
    #[test]
    fn relative_gauge_inverts_the_action(seed in any::<u64>(), eps in 0.0f64..0.5) {
        let g = small_grid();
        let w = reference_left_framing(g);
        let a = deformation(seed, eps);
        let moved = gauge_apply(&w, &a).unwrap();
        let recovered = relative_gauge(&w, &moved).unwrap();
        prop_assert!(sup_diff(&a.field, &recovered.field) <= 1e-9);
    }

    /// Structure functions are (-1)-homogeneous in the framing scale:
    /// C(lambda A) = C(A) / lambda.
    #[test]
    fn structure_functions_scale_inversely(seed in any::<u64>(), eps in 0.0f64..0.4, lambda in 0.2f64..5.0) {
        let g = small_grid();
        let w = gauge_apply(&reference_left_framing(g), &deformation(seed, eps)).unwrap();
        let base = structure_functions(&w).unwrap();
        let scaled = structure_functions(&w.scaled(lambda).unwrap()).unwrap();
        let mut sup = 0.0f64;
        let mut dev = 0.0f64;
        for (cb, cs) in base.c.iter().zip(&scaled.c) {
            for k in 0..3 {
                for i in 0..3 {
                    for j in 0..3 {
                        sup = sup.max(cb[k][i][j].abs());
                        dev = dev.max((cs[k][i][j] * lambda - cb[k][i][j]).abs());
                    }
                }
            }
        }
        prop_assert!(dev <= 1e-9 * sup.max(1.0), "homogeneity broken: dev {dev:.3e}, sup {sup:.3e}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Killing eigenvalues scale as lambda^2 and the classification does
    /// not change under rescaling (away from the tolerance boundary).
    #[test]
    fn classification_is_scale_invariant(
        free in prop::array::uniform3(prop::array::uniform3(-5.0f64..5.0)),
        lambda in 0.1f64..10.0,
    ) {
        let c = antisym(free);
        let (_, eigs, class) = lie_classify(&c).unwrap();
        // skip tensors that sit near a decision boundary, where any finite
        // tolerance makes the label scale-dependent
        let frob: f64 = c
            .iter()
            .flatten()
            .flatten()
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt();
        prop_assume!(!(1e-9..=1e-3).contains(&frob));
        for e in eigs {
            prop_assume!(!(1e-9..=1e-3).contains(&e.abs()));
        }
        let mut scaled = c;
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    scaled[k][i][j] *= lambda;
                }
            }
        }
        let (_, eigs_scaled, class_scaled) = lie_classify(&scaled).unwrap();
        prop_assert_eq!(class_scaled, class);
        for (e, es) in eigs.iter().zip(eigs_scaled) {
            let want = lambda * lambda * e;
            prop_assert!(
                (es - want).abs() <= 1e-9 * want.abs().max(1.0),
                "eigenvalue {es} vs lambda^2 * {e}"
            );
        }
    }
}
