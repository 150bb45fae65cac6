//! Structured grid on the unit quaternions.
//!
//! Nodes are Euler-angle products q = e^{(alpha/2) e3} e^{(beta/2) e2}
//! e^{(gamma/2) e3} with alpha equispaced on [0, 2*pi), gamma equispaced on
//! [0, 4*pi), and beta at Gauss-Legendre nodes of u = cos(beta). The product
//! quadrature integrates smooth functions over S^3 (total measure 2*pi^2) to
//! machine precision once the integrand is resolved, and the periodic/Jacobi
//! structure of the chart is what the spectral differentiation relies on.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};

use super::quaternion::{Quat, E1, E2, E3};
use super::spectral::SpectralOps;
use crate::error::{HfError, Result};

/// One sample per grid node, in node order (gamma fastest, then beta, alpha).
pub type ScalarField = Vec<f64>;
/// One 3x3 matrix per grid node, in node order.
pub type MatrixField = Vec<Matrix3<f64>>;

/// Euler-angle product grid with quadrature weights and the per-node change
/// of frame from coordinate partials to the left-invariant frame.
pub struct Grid {
    pub n_alpha: usize,
    pub n_beta: usize,
    pub n_gamma: usize,
    /// unit-quaternion position of every node
    pub nodes: Vec<Quat>,
    /// quadrature weight of every node; sums to the measure 2*pi^2 of S^3
    pub weights: Vec<f64>,
    /// alpha values, equispaced on [0, 2*pi)
    pub alpha: Vec<f64>,
    /// beta values, ascending in (0, pi)
    pub beta: Vec<f64>,
    /// gamma values, equispaced on [0, 4*pi)
    pub gamma: Vec<f64>,
    /// worst residual of the per-node tangent solves (diagnostic)
    pub solve_residual: f64,
    /// row a-1 holds the coefficients of E_a in (d/dalpha, d/dbeta, d/dgamma)
    pub(crate) frame_change: Vec<Matrix3<f64>>,
    pub(crate) spectral: SpectralOps,
}

impl Grid {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.n_alpha, self.n_beta, self.n_gamma)
    }

    /// True when `other` uses the same node layout, making fields
    /// interchangeable between the two.
    pub fn same_layout(&self, other: &Grid) -> bool {
        self.dims() == other.dims()
    }
}

/// Build the grid. Requires at least 4 points per direction and even counts
/// in the periodic directions (alpha, gamma).
pub fn build_grid(n_alpha: usize, n_beta: usize, n_gamma: usize) -> Result<Grid> {
    if n_alpha < 4 || n_beta < 4 || n_gamma < 4 {
        return Err(HfError::InvalidInput(format!(
            "grid needs at least 4 points per direction, got {n_alpha}x{n_beta}x{n_gamma}"
        )));
    }
    if !n_alpha.is_multiple_of(2) || !n_gamma.is_multiple_of(2) {
        return Err(HfError::InvalidInput(format!(
            "periodic directions need even point counts, got {n_alpha}x{n_beta}x{n_gamma}"
        )));
    }

    let (u, wgl) = gauss_legendre(n_beta); // u descending, so beta ascends
    let beta: Vec<f64> = u.iter().map(|&x| x.acos()).collect();
    let alpha: Vec<f64> = (0..n_alpha).map(|i| 2.0 * PI * i as f64 / n_alpha as f64).collect();
    let gamma: Vec<f64> = (0..n_gamma).map(|i| 4.0 * PI * i as f64 / n_gamma as f64).collect();
    let spectral = SpectralOps::new(n_alpha, n_beta, n_gamma, &beta, &u, &wgl)?;

    let n = n_alpha * n_beta * n_gamma;
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let mut frame_change = Vec::with_capacity(n);
    // angle cell sizes times the 1/8 Jacobian of the half-angle chart
    let wfac = (2.0 * PI / n_alpha as f64) * (4.0 * PI / n_gamma as f64) / 8.0;
    let mut residual = 0.0f64;
    let mut min_det = f64::INFINITY;

    for ia in 0..n_alpha {
        let qa = Quat::exp_axis(3, 0.5 * alpha[ia]);
        for ib in 0..n_beta {
            let qb = Quat::exp_axis(2, 0.5 * beta[ib]);
            let qab = qa.mul(qb);
            let dqab = qa.mul(E2.scale(0.5).mul(qb)); // d(qa*qb)/dbeta
            for ig in 0..n_gamma {
                let qg = Quat::exp_axis(3, 0.5 * gamma[ig]);
                let q = qab.mul(qg);
                // chart Jacobian columns in R^4
                let cols = [E3.scale(0.5).mul(q), dqab.mul(qg), q.mul(E3).scale(0.5)];
                let jtj = Matrix3::from_fn(|r, c| dot4(cols[r], cols[c]));
                let chol = jtj
                    .cholesky()
                    .ok_or_else(|| HfError::Numeric("degenerate chart Jacobian on grid node".into()))?;
                let mut m = Matrix3::zeros();
                for (a, ea) in [E1, E2, E3].into_iter().enumerate() {
                    let target = q.mul(ea);
                    let rhs = Vector3::new(dot4(cols[0], target), dot4(cols[1], target), dot4(cols[2], target));
                    let sol = chol.solve(&rhs);
                    for i in 0..4 {
                        let r = sol[0] * cols[0].comp(i) + sol[1] * cols[1].comp(i) + sol[2] * cols[2].comp(i)
                            - target.comp(i);
                        residual = residual.max(r.abs());
                    }
                    m.set_row(a, &sol.transpose());
                }
                min_det = min_det.min(m.determinant().abs());
                nodes.push(q);
                weights.push(wfac * wgl[ib]);
                frame_change.push(m);
            }
        }
    }

    if residual > 1e-9 {
        return Err(HfError::FrameSolve { residual });
    }
    if min_det <= 1e-10 {
        return Err(HfError::Numeric(format!(
            "frame change nearly singular on some node (|det| = {min_det:.3e})"
        )));
    }

    Ok(Grid {
        n_alpha,
        n_beta,
        n_gamma,
        nodes,
        weights,
        alpha,
        beta,
        gamma,
        solve_residual: residual,
        frame_change,
        spectral,
    })
}

/// Quadrature of a scalar field over S^3.
pub fn integrate(grid: &Grid, f: &[f64]) -> f64 {
    assert_eq!(f.len(), grid.nodes.len(), "field length does not match grid");
    let terms: Vec<f64> = grid.weights.iter().zip(f).map(|(&w, &v)| w * v).collect();
    pairwise_sum(&terms)
}

/// All three frame derivatives X_a f (a = 1..3) from a single transform pass.
pub fn frame_derivative_all(grid: &Grid, f: &[f64]) -> [ScalarField; 3] {
    let n = grid.nodes.len();
    assert_eq!(f.len(), n, "field length does not match grid");
    let mut da = vec![0.0; n];
    let mut db = vec![0.0; n];
    let mut dg = vec![0.0; n];
    grid.spectral.partials(f, &mut da, &mut db, &mut dg);
    let mut out = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for i in 0..n {
        let m = &grid.frame_change[i];
        for (a, o) in out.iter_mut().enumerate() {
            o[i] = m[(a, 0)] * da[i] + m[(a, 1)] * db[i] + m[(a, 2)] * dg[i];
        }
    }
    out
}

/// Derivative of a scalar field along the frame field E_a, a in 1..=3.
pub fn frame_derivative(grid: &Grid, f: &[f64], a: usize) -> ScalarField {
    assert!((1..=3).contains(&a), "frame index must be 1, 2, or 3");
    let mut all = frame_derivative_all(grid, f);
    std::mem::take(&mut all[a - 1])
}

fn dot4(p: Quat, q: Quat) -> f64 {
    p.w * q.w + p.x * q.x + p.y * q.y + p.z * q.z
}

/// Recursive pairwise summation. Besides the usual accuracy gain, it sums
/// equal values exactly whenever the count is a power of two (every combine
/// is then a doubling), which downstream code uses to annihilate constant
/// fields exactly rather than to roundoff.
pub(crate) fn pairwise_sum(x: &[f64]) -> f64 {
    match x.len() {
        0 => 0.0,
        1 => x[0],
        2 => x[0] + x[1],
        n => {
            let h = n / 2;
            pairwise_sum(&x[..h]) + pairwise_sum(&x[h..])
        }
    }
}

/// Gauss-Legendre nodes (descending) and weights on [-1, 1] by Newton
/// iteration on the Legendre recurrence.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut xi = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..60 {
            let (p, dp) = legendre_pair(n, xi);
            let dx = p / dp;
            xi -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_pair(n, xi);
        x[i] = xi;
        w[i] = 2.0 / ((1.0 - xi * xi) * dp * dp);
    }
    (x, w)
}

/// Legendre P_n and its derivative at x.
fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    (p1, n as f64 * (x * p1 - p0) / (x * x - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn grid8() -> Grid {
        build_grid(8, 8, 16).unwrap()
    }

    /// Sample a closed-form function of position onto the grid.
    fn sample(grid: &Grid, f: impl Fn(Quat) -> f64) -> Vec<f64> {
        grid.nodes.iter().map(|&q| f(q)).collect()
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(build_grid(3, 8, 16).is_err());
        assert!(build_grid(8, 3, 16).is_err());
        assert!(build_grid(8, 8, 3).is_err());
        assert!(build_grid(7, 8, 16).is_err());
        assert!(build_grid(8, 8, 15).is_err());
        assert!(build_grid(8, 7, 16).is_ok()); // odd is fine in beta
    }

    #[test]
    fn gauss_nodes_integrate_polynomials_exactly() {
        let (x, w) = gauss_legendre(8);
        for k in 0..=15usize {
            let q: f64 = x.iter().zip(&w).map(|(&xi, &wi)| wi * xi.powi(k as i32)).sum();
            let exact = if k % 2 == 0 { 2.0 / (k as f64 + 1.0) } else { 0.0 };
            assert!((q - exact).abs() < 1e-13, "moment {k}: {q} vs {exact}");
        }
        assert!(x.windows(2).all(|p| p[0] > p[1]), "nodes should descend");
    }

    #[test]
    fn node_positions_match_closed_form() {
        let g = grid8();
        for (ia, ib, ig) in [(0usize, 0usize, 0usize), (3, 2, 5), (5, 7, 11), (7, 4, 15)] {
            let (a, b, c) = (g.alpha[ia], g.beta[ib], g.gamma[ig]);
            let q = g.nodes[(ia * g.n_beta + ib) * g.n_gamma + ig];
            let (sb, cb) = ((0.5 * b).sin(), (0.5 * b).cos());
            assert!((q.w - cb * (0.5 * (a + c)).cos()).abs() < 1e-14);
            assert!((q.x - sb * (0.5 * (c - a)).sin()).abs() < 1e-14);
            assert!((q.y - sb * (0.5 * (a - c)).cos()).abs() < 1e-14);
            assert!((q.z - cb * (0.5 * (a + c)).sin()).abs() < 1e-14);
            assert!((q.norm() - 1.0).abs() < 1e-14);
        }
        assert_eq!(g.node_count(), 8 * 8 * 16);
    }

    #[test]
    fn volume_is_two_pi_squared() {
        let g = grid8();
        let vol = integrate(&g, &vec![1.0; g.node_count()]);
        let exact = 2.0 * PI * PI;
        assert!((vol - exact).abs() < 1e-12 * exact, "volume {vol}");
    }

    #[test]
    fn volume_agrees_with_monte_carlo_hit_counting() {
        // Independent check of the 2*pi^2 normalization: the measure of the
        // unit 3-sphere equals 4x the volume of the unit 4-ball, estimated by
        // hit counting in the cube [-1,1]^4 of volume 16.
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let n = 4_000_000usize;
        let mut hits = 0usize;
        for _ in 0..n {
            let mut s = 0.0;
            for _ in 0..4 {
                let v: f64 = rng.gen::<f64>() * 2.0 - 1.0;
                s += v * v;
            }
            if s <= 1.0 {
                hits += 1;
            }
        }
        let mc = 64.0 * hits as f64 / n as f64;
        let g = grid8();
        let vol = integrate(&g, &vec![1.0; g.node_count()]);
        assert!((vol - mc).abs() < 0.06, "quadrature {vol} vs Monte Carlo {mc}");
    }

    #[test]
    fn component_moments() {
        let g = grid8();
        // odd moments vanish; by symmetry each squared component integrates
        // to a quarter of the total measure
        let wx = integrate(&g, &sample(&g, |q| q.w * q.x));
        assert!(wx.abs() < 1e-12);
        let ww = integrate(&g, &sample(&g, |q| q.w * q.w));
        assert!((ww - 0.5 * PI * PI).abs() < 1e-12);
    }

    #[test]
    fn frame_derivatives_of_coordinates_are_exact() {
        // E_a q = q e_a in components: X1(w,x,y,z) = (-x, w, z, -y),
        // X2 = (-y, -z, w, x), X3 = (-z, y, -x, w).
        let g = grid8();
        let comps: Vec<Vec<f64>> = (0..4).map(|c| sample(&g, |q| q.comp(c))).collect();
        let expect = |a: usize, c: usize, q: Quat| -> f64 {
            q.mul([E1, E2, E3][a - 1]).comp(c)
        };
        for c in 0..4 {
            let d = frame_derivative_all(&g, &comps[c]);
            for a in 1..=3usize {
                let mut worst = 0.0f64;
                for (i, &q) in g.nodes.iter().enumerate() {
                    worst = worst.max((d[a - 1][i] - expect(a, c, q)).abs());
                }
                assert!(worst < 1e-11, "X_{a} of component {c}: err {worst:.3e}");
            }
        }
    }

    #[test]
    fn derivative_of_constant_is_exactly_zero() {
        let g = grid8();
        for c in [1.0, 0.37] {
            let d = frame_derivative_all(&g, &vec![c; g.node_count()]);
            for a in 0..3 {
                assert!(d[a].iter().all(|&v| v == 0.0), "constant {c} leaked through axis {a}");
            }
        }
    }

    #[test]
    fn derivative_is_linear() {
        let g = grid8();
        let f = sample(&g, |q| q.w * q.w - q.y);
        let h = sample(&g, |q| q.x * q.z + q.w);
        let combined: Vec<f64> = f.iter().zip(&h).map(|(&a, &b)| a + 2.0 * b).collect();
        let dc = frame_derivative(&g, &combined, 1);
        let df = frame_derivative(&g, &f, 1);
        let dh = frame_derivative(&g, &h, 1);
        for i in 0..g.node_count() {
            assert!((dc[i] - df[i] - 2.0 * dh[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn derivative_matches_flow_line_differencing() {
        // X_a f (q) = d/dt f(q exp(t e_a)) at t = 0, approximated by central
        // differences along the one-parameter flow.
        let g = grid8();
        let f = |q: Quat| q.w * q.x + q.y * q.y;
        let field = sample(&g, f);
        let h = 1e-4;
        for a in 0..3 {
            let d = frame_derivative(&g, &field, a + 1);
            for i in (0..g.node_count()).step_by(97) {
                let q = g.nodes[i];
                let plus = f(q.mul(Quat::exp_axis(a + 1, h)));
                let minus = f(q.mul(Quat::exp_axis(a + 1, -h)));
                let fd = (plus - minus) / (2.0 * h);
                assert!((d[i] - fd).abs() < 1e-7, "node {i} axis {}: {} vs {}", a + 1, d[i], fd);
            }
        }
    }

    #[test]
    fn frame_fields_close_under_bracket() {
        // [X_1, X_2] f = 2 X_3 f on resolved fields (cyclically).
        let g = grid8();
        let f = sample(&g, |q| q.w * q.x * q.y);
        let d: Vec<Vec<f64>> = (1..=3).map(|a| frame_derivative(&g, &f, a)).collect();
        for (a, b, c) in [(1usize, 2usize, 3usize), (2, 3, 1), (3, 1, 2)] {
            let ab = frame_derivative(&g, &d[b - 1], a);
            let ba = frame_derivative(&g, &d[a - 1], b);
            for i in 0..g.node_count() {
                let bracket = ab[i] - ba[i];
                assert!(
                    (bracket - 2.0 * d[c - 1][i]).abs() < 1e-9,
                    "bracket ({a},{b}) vs 2 X_{c} at node {i}"
                );
            }
        }
    }

    #[test]
    fn solve_residual_is_reported_small() {
        let g = grid8();
        assert!(g.solve_residual < 1e-12, "residual {:.3e}", g.solve_residual);
    }
}
