//! FFT/least-squares coordinate partials on the Euler-angle grid.
//!
//! alpha (period 2*pi) and gamma (period 4*pi) are periodic and handled by
//! FFT. A single-valued function on the unit quaternions couples the two
//! directions: its modes e^{i*me*alpha} e^{i*pe*gamma} have me and pe = p/2
//! simultaneously integral or simultaneously half-integral, so odd-p Fourier
//! columns are demodulated by e^{-i*alpha/2} before the alpha transform
//! (shifting their alpha content onto integer bins) and remodulated on the
//! way back.
//!
//! beta is differentiated mode by mode through a weighted least-squares fit:
//! the (me, pe) mode of a smooth function behaves near the coordinate poles
//! like sin(beta/2)^a * cos(beta/2)^b * poly(cos beta) with a = |me - pe| and
//! b = |me + pe|. The fit uses the Jacobi-(a,b) basis under the
//! Gauss-Legendre quadrature weight, which keeps the normal equations well
//! conditioned and never divides by the pole-vanishing envelope. Fit
//! coefficients beyond the band resolvable after pointwise products are
//! smoothly damped (exponential filter), so repeated multiply-differentiate
//! cycles cannot pump energy into unresolved modes.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};

use super::grid::pairwise_sum;
use crate::error::{HfError, Result};

/// Projection/derivative matrix pair of one boundary-exponent sector;
/// `None` marks a sector entirely outside the resolvable band.
type SectorTables = Option<(Arc<Vec<f64>>, Arc<Vec<f64>>)>;

/// Differentiation data of one (alpha-mode, gamma-mode) pair. `q1`/`q2` are
/// nb x nb row-major real matrices acting on the beta line of the mode;
/// `None` marks a mode outside the resolvable band (annihilated).
struct ModeOp {
    /// projection onto the admissible beta basis (feeds d/dalpha, d/dgamma)
    q1: Option<Arc<Vec<f64>>>,
    /// beta derivative of the fitted line
    q2: Option<Arc<Vec<f64>>>,
    /// i * (alpha frequency); zero on the sign-ambiguous alpha-Nyquist bin
    ma: Complex64,
    /// i * (gamma frequency); zero on the gamma-Nyquist bin
    mg: Complex64,
}

pub(crate) struct SpectralOps {
    na: usize,
    nb: usize,
    ng: usize,
    /// half-spectrum length of the real gamma transform, ng/2 + 1
    ngh: usize,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    fft_a: Arc<dyn Fft<f64>>,
    ifft_a: Arc<dyn Fft<f64>>,
    /// e^{-i alpha/2} per alpha node
    demod: Vec<Complex64>,
    /// e^{+i alpha/2} per alpha node
    remod: Vec<Complex64>,
    /// per-mode operators, indexed im * ngh + ip
    ops: Vec<ModeOp>,
}

impl SpectralOps {
    pub(crate) fn new(na: usize, nb: usize, ng: usize, beta: &[f64], u: &[f64], wgl: &[f64]) -> Result<Self> {
        let ngh = ng / 2 + 1;
        let mut rp = RealFftPlanner::<f64>::new();
        let r2c = rp.plan_fft_forward(ng);
        let c2r = rp.plan_fft_inverse(ng);
        let mut cp = FftPlanner::<f64>::new();
        let fft_a = cp.plan_fft_forward(na);
        let ifft_a = cp.plan_fft_inverse(na);

        let alpha: Vec<f64> = (0..na).map(|i| 2.0 * PI * i as f64 / na as f64).collect();
        let demod: Vec<Complex64> = alpha.iter().map(|&a| Complex64::from_polar(1.0, -0.5 * a)).collect();
        let remod: Vec<Complex64> = alpha.iter().map(|&a| Complex64::from_polar(1.0, 0.5 * a)).collect();

        // Highest band whose pointwise products stay below the grid Nyquist in
        // both periodic directions; everything fitted above it is damped.
        let malias = (na / 2).min(ng / 4);
        let trunc = 2usize; // keep the top fit degrees away from the node count
        let jcap = (nb - 1 - trunc).min(malias);
        let fit = BetaFit {
            nb,
            u,
            wgl,
            sb2: beta.iter().map(|&b| (0.5 * b).sin()).collect(),
            cb2: beta.iter().map(|&b| (0.5 * b).cos()).collect(),
            sinb: beta.iter().map(|&b| b.sin()).collect(),
            jcap,
            j0: 0.5 * malias as f64,
            // fold the (unnormalized) FFT round trip into the beta matrices
            norm: 1.0 / (na as f64 * ng as f64),
        };

        let mut cache: HashMap<(usize, usize), SectorTables> = HashMap::new();
        let mut ops = Vec::with_capacity(na * ngh);
        for im in 0..na {
            let msig = if im < na / 2 { im as f64 } else { im as f64 - na as f64 };
            for ip in 0..ngh {
                let odd = ip % 2 == 1;
                let me = msig + if odd { 0.5 } else { 0.0 };
                let pe = 0.5 * ip as f64;
                let aa = (me - pe).abs().round() as usize;
                let bb = (me + pe).abs().round() as usize;
                let pair = match cache.get(&(aa, bb)) {
                    Some(v) => v.clone(),
                    None => {
                        let v = fit.sector(aa, bb)?;
                        cache.insert((aa, bb), v.clone());
                        v
                    }
                };
                let ma = if im == na / 2 && !odd {
                    Complex64::default()
                } else {
                    Complex64::new(0.0, me)
                };
                let mg = if ip == ng / 2 { Complex64::default() } else { Complex64::new(0.0, pe) };
                let (q1, q2) = match pair {
                    Some((q1, q2)) => (Some(q1), Some(q2)),
                    None => (None, None),
                };
                ops.push(ModeOp { q1, q2, ma, mg });
            }
        }

        Ok(SpectralOps { na, nb, ng, ngh, r2c, c2r, fft_a, ifft_a, demod, remod, ops })
    }

    /// Coordinate partial derivatives (d/dalpha, d/dbeta, d/dgamma) of a
    /// scalar field, all from one transform pass. Output slices must have the
    /// field's length.
    pub(crate) fn partials(&self, f: &[f64], da: &mut [f64], db: &mut [f64], dg: &mut [f64]) {
        let (na, nb, ngh) = (self.na, self.nb, self.ngh);
        let ng = self.ng;
        let n = na * nb * ng;
        assert_eq!(f.len(), n, "field length does not match grid");
        assert!(da.len() == n && db.len() == n && dg.len() == n, "output length mismatch");

        // Remove the mean so constants are annihilated exactly instead of
        // surviving as roundoff through the beta fit (pairwise summation is
        // exact for a constant field on power-of-two node counts).
        let mean = pairwise_sum(f) / n as f64;

        // gamma transform, one real row per (alpha, beta) line
        let mut buf1 = vec![Complex64::default(); na * nb * ngh];
        let mut row = vec![0.0f64; ng];
        for ab in 0..na * nb {
            for (r, &s) in row.iter_mut().zip(&f[ab * ng..(ab + 1) * ng]) {
                *r = s - mean;
            }
            self.r2c
                .process(&mut row, &mut buf1[ab * ngh..(ab + 1) * ngh])
                .expect("forward gamma transform");
        }

        // odd-p columns: shift half-integral alpha content onto integer bins
        for ia in 0..na {
            let d = self.demod[ia];
            for ib in 0..nb {
                let base = (ia * nb + ib) * ngh;
                let mut ip = 1;
                while ip < ngh {
                    buf1[base + ip] *= d;
                    ip += 2;
                }
            }
        }

        // transpose so alpha is contiguous, then alpha transform per (beta, p)
        let mut buf2 = vec![Complex64::default(); nb * ngh * na];
        for ia in 0..na {
            for ib in 0..nb {
                let src = (ia * nb + ib) * ngh;
                for ip in 0..ngh {
                    buf2[(ib * ngh + ip) * na + ia] = buf1[src + ip];
                }
            }
        }
        drop(buf1);
        let mut scratch = vec![
            Complex64::default();
            self.fft_a.get_inplace_scratch_len().max(self.ifft_a.get_inplace_scratch_len())
        ];
        self.fft_a.process_with_scratch(&mut buf2, &mut scratch);

        // per-mode beta fit and diagonal derivative multipliers
        let mut da2 = vec![Complex64::default(); nb * ngh * na];
        let mut db2 = vec![Complex64::default(); nb * ngh * na];
        let mut dg2 = vec![Complex64::default(); nb * ngh * na];
        let mut line = vec![Complex64::default(); nb];
        for im in 0..na {
            for ip in 0..ngh {
                let op = &self.ops[im * ngh + ip];
                let (q1, q2) = match (&op.q1, &op.q2) {
                    (Some(q1), Some(q2)) => (q1, q2),
                    // unresolvable mode: all derivative lines stay zero
                    _ => continue,
                };
                for (ib, l) in line.iter_mut().enumerate() {
                    *l = buf2[(ib * ngh + ip) * na + im];
                }
                for rr in 0..nb {
                    let mut proj = Complex64::default();
                    let mut der = Complex64::default();
                    let q1r = &q1[rr * nb..(rr + 1) * nb];
                    let q2r = &q2[rr * nb..(rr + 1) * nb];
                    for c in 0..nb {
                        proj += line[c] * q1r[c];
                        der += line[c] * q2r[c];
                    }
                    let idx = (rr * ngh + ip) * na + im;
                    da2[idx] = op.ma * proj;
                    dg2[idx] = op.mg * proj;
                    db2[idx] = der;
                }
            }
        }
        drop(buf2);

        self.invert_to_real(&mut da2, da, &mut scratch);
        self.invert_to_real(&mut db2, db, &mut scratch);
        self.invert_to_real(&mut dg2, dg, &mut scratch);
    }

    /// Inverse alpha transform, odd-column remodulation, and inverse gamma
    /// transform back to a real field.
    fn invert_to_real(&self, buf: &mut [Complex64], out: &mut [f64], scratch: &mut [Complex64]) {
        let (na, nb, ngh, ng) = (self.na, self.nb, self.ngh, self.ng);
        self.ifft_a.process_with_scratch(buf, scratch);
        let mut col = vec![Complex64::default(); ngh];
        for ia in 0..na {
            for ib in 0..nb {
                for (ip, c) in col.iter_mut().enumerate() {
                    *c = buf[(ib * ngh + ip) * na + ia];
                }
                let mut ip = 1;
                while ip < ngh {
                    col[ip] *= self.remod[ia];
                    ip += 2;
                }
                // half-spectrum end bins of a real signal carry no imaginary
                // part; clear the roundoff residue before reconstruction
                col[0].im = 0.0;
                col[ngh - 1].im = 0.0;
                let ab = ia * nb + ib;
                self.c2r
                    .process(&mut col, &mut out[ab * ng..(ab + 1) * ng])
                    .expect("inverse gamma transform");
            }
        }
    }
}

/// Shared context for building the per-sector beta matrices.
struct BetaFit<'a> {
    nb: usize,
    u: &'a [f64],
    wgl: &'a [f64],
    sb2: Vec<f64>,
    cb2: Vec<f64>,
    sinb: Vec<f64>,
    jcap: usize,
    j0: f64,
    norm: f64,
}

impl BetaFit<'_> {
    /// Projection and beta-derivative matrices for the weighted sector
    /// spanned by sin(b/2)^aa cos(b/2)^bb * poly(cos b), or None when the
    /// sector's lowest band already exceeds the resolvable cap.
    fn sector(&self, aa: usize, bb: usize) -> Result<SectorTables> {
        let knum = 2 * self.jcap as i64 - aa as i64 - bb as i64;
        if knum < 0 {
            return Ok(None);
        }
        let kmax = (knum / 2) as usize;
        let nb = self.nb;
        let ncol = kmax + 1;

        let v = jacobi_table(kmax, aa, bb, self.u);
        // d/dx P_k^{(a,b)} = (k + a + b + 1)/2 * P_{k-1}^{(a+1,b+1)}
        let vd_inner = if kmax >= 1 { jacobi_table(kmax - 1, aa + 1, bb + 1, self.u) } else { Vec::new() };

        let mut w = vec![0.0; nb];
        let mut wp = vec![0.0; nb];
        for i in 0..nb {
            let (s, c) = (self.sb2[i], self.cb2[i]);
            w[i] = s.powi(aa as i32) * c.powi(bb as i32);
            let mut d = 0.0;
            if aa > 0 {
                d += 0.5 * aa as f64 * s.powi(aa as i32 - 1) * c.powi(bb as i32 + 1);
            }
            if bb > 0 {
                d -= 0.5 * bb as f64 * s.powi(aa as i32 + 1) * c.powi(bb as i32 - 1);
            }
            wp[i] = d;
        }

        // weighted normal equations: G = V^T diag(wgl W^2) V, always SPD here
        // because the fit degree stays below the quadrature exactness bound
        let g = DMatrix::from_fn(ncol, ncol, |r, c| {
            (0..nb).map(|i| v[r][i] * self.wgl[i] * w[i] * w[i] * v[c][i]).sum::<f64>()
        });
        let rhs = DMatrix::from_fn(ncol, nb, |r, i| v[r][i] * self.wgl[i] * w[i]);
        let chol = g.cholesky().ok_or_else(|| {
            HfError::Numeric(format!("beta fit normal equations not positive definite in sector ({aa},{bb})"))
        })?;
        let mut p = chol.solve(&rhs);

        // smooth damping above the half-band edge: identity below j0, about
        // machine epsilon at the cap
        for k in 0..ncol {
            let j = 0.5 * (aa + bb) as f64 + k as f64;
            if j > self.j0 {
                let d = (j - self.j0) / (self.jcap as f64 - self.j0).max(1.0);
                let damp = (-36.0 * d.powi(4)).exp();
                for i in 0..nb {
                    p[(k, i)] *= damp;
                }
            }
        }

        let mut q1 = vec![0.0; nb * nb];
        let mut q2 = vec![0.0; nb * nb];
        for r in 0..nb {
            for c in 0..nb {
                let mut s1 = 0.0;
                let mut s2 = 0.0;
                for k in 0..ncol {
                    let pv = p[(k, c)];
                    let vd = if k == 0 { 0.0 } else { 0.5 * (k + aa + bb + 1) as f64 * vd_inner[k - 1][r] };
                    s1 += v[k][r] * pv;
                    s2 += (wp[r] * v[k][r] - w[r] * self.sinb[r] * vd) * pv;
                }
                q1[r * nb + c] = self.norm * w[r] * s1;
                q2[r * nb + c] = self.norm * s2;
            }
        }
        Ok(Some((Arc::new(q1), Arc::new(q2))))
    }
}

/// Jacobi polynomials P_k^{(a,b)}(x) for k = 0..=kmax at every x, as rows.
fn jacobi_table(kmax: usize, a: usize, b: usize, x: &[f64]) -> Vec<Vec<f64>> {
    let (af, bf) = (a as f64, b as f64);
    let n = x.len();
    let mut t = Vec::with_capacity(kmax + 1);
    t.push(vec![1.0; n]);
    if kmax >= 1 {
        t.push(x.iter().map(|&xi| 0.5 * (af - bf) + 0.5 * (af + bf + 2.0) * xi).collect());
    }
    for k in 2..=kmax {
        let kf = k as f64;
        let c0 = 2.0 * kf * (kf + af + bf) * (2.0 * kf + af + bf - 2.0);
        let c1 = 2.0 * kf + af + bf - 1.0;
        let c2 = (2.0 * kf + af + bf) * (2.0 * kf + af + bf - 2.0);
        let c3 = af * af - bf * bf;
        let c4 = 2.0 * (kf + af - 1.0) * (kf + bf - 1.0) * (2.0 * kf + af + bf);
        let row: Vec<f64> = (0..n)
            .map(|i| (c1 * (c2 * x[i] + c3) * t[k - 1][i] - c4 * t[k - 2][i]) / c0)
            .collect();
        t.push(row);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::jacobi_table;

    #[test]
    fn jacobi_reduces_to_legendre() {
        // P_k^{(0,0)} are the Legendre polynomials
        let x = [-0.9, -0.3, 0.2, 0.7];
        let t = jacobi_table(3, 0, 0, &x);
        for (i, &xi) in x.iter().enumerate() {
            assert!((t[2][i] - 0.5 * (3.0 * xi * xi - 1.0)).abs() < 1e-14);
            assert!((t[3][i] - 0.5 * (5.0 * xi * xi * xi - 3.0 * xi)).abs() < 1e-14);
        }
    }

    #[test]
    fn jacobi_value_at_one() {
        // P_k^{(a,b)}(1) = C(k + a, k)
        let t = jacobi_table(3, 2, 1, &[1.0]);
        assert!((t[1][0] - 3.0).abs() < 1e-13); // C(3,1)
        assert!((t[2][0] - 6.0).abs() < 1e-13); // C(4,2)
        assert!((t[3][0] - 10.0).abs() < 1e-13); // C(5,3)
    }
}
