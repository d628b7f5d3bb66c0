//! The real/complex dictionary: the almost complex structure J in chart
//! coordinates, the homogeneity equivalences for (p,q)-homogeneous
//! functions, J-invariance of the fundamental tensor, the spray
//! correspondence, parallelism of J along geodesics, and the orthogonal
//! Ricci curvature.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::expr::ast::MetricExpr;
use crate::expr::eval::{eval_cjet, eval_scalar, JetVars};
use crate::jet::table::EvalPoint;
use crate::metric::MetricSpec;
use crate::real_engine::{self, idx3, RealTensorSet};

/// u = J y: in chart coordinates u^a = -y^{a+n}, u^{a+n} = y^a.
pub fn apply_j(y: &[f64]) -> Vec<f64> {
    let n = y.len() / 2;
    let mut u = vec![0.0; y.len()];
    for a in 0..n {
        u[a] = -y[n + a];
        u[n + a] = y[a];
    }
    u
}

/// The constant matrix of J in chart coordinates.
pub fn j_matrix(n: usize) -> DMatrix<f64> {
    let d = 2 * n;
    DMatrix::from_fn(d, d, |i, k| {
        if k < n && i == k + n {
            1.0
        } else if k >= n && i == k - n {
            -1.0
        } else {
            0.0
        }
    })
}

/// v^a = y^a + i y^{a+n}.
pub fn to_complex(y: &[f64]) -> Vec<Complex64> {
    let n = y.len() / 2;
    (0..n).map(|a| Complex64::new(y[a], y[n + a])).collect()
}

pub fn to_real(v: &[Complex64]) -> Vec<f64> {
    let n = v.len();
    let mut y = vec![0.0; 2 * n];
    for a in 0..n {
        y[a] = v[a].re;
        y[n + a] = v[a].im;
    }
    y
}

/// Deterministic g_y-orthonormal frame `[E_1 .. E_{2n-2}, Jy/F, y/F]`.
///
/// Gram-Schmidt in the g_y inner product, seeded with {y/F, Jy/F} and
/// completed with coordinate axes in index order; candidates whose
/// residual norm falls below 1e-8 are skipped.
pub fn gy_orthonormal_frame(g: &DMatrix<f64>, y: &[f64]) -> Result<Vec<DVector<f64>>> {
    let d = y.len();
    let gdot = |a: &DVector<f64>, b: &DVector<f64>| (a.transpose() * g * b)[(0, 0)];
    let yv = DVector::from_column_slice(y);
    let f = gdot(&yv, &yv);
    if f <= 0.0 {
        return Err(Error::NotStronglyConvex { min_eig: f });
    }
    let t = &yv / f.sqrt();
    let mut basis: Vec<DVector<f64>> = vec![t.clone()];
    let ju = DVector::from_column_slice(&apply_j(y));
    let mut v = ju.clone();
    let proj = gdot(&t, &v);
    v -= proj * &t;
    let vn = gdot(&v, &v);
    if vn <= 1e-16 {
        return Err(Error::DegenerateFlag { denom: vn });
    }
    v /= vn.sqrt();
    basis.push(v.clone());
    let mut rest: Vec<DVector<f64>> = Vec::new();
    for axis in 0..d {
        if basis.len() + rest.len() >= d {
            break;
        }
        let mut w = DVector::zeros(d);
        w[axis] = 1.0;
        for e in basis.iter().chain(rest.iter()) {
            let c = gdot(e, &w);
            w -= c * e;
        }
        let norm2 = gdot(&w, &w);
        if norm2.sqrt() < 1e-8 {
            continue;
        }
        rest.push(w / norm2.sqrt());
    }
    if basis.len() + rest.len() < d {
        return Err(Error::Eval("frame completion failed".into()));
    }
    rest.push(v);
    rest.push(t);
    Ok(rest)
}

// ------------------------------------------------------------------
// Homogeneity equivalences

/// A complex-valued test function with a declared bidegree (p, q).
pub enum HomogeneitySubject {
    /// The metric function itself (bidegree (1,1), identically real).
    MetricG(MetricSpec),
    /// An arbitrary expression subject.
    Expr {
        expr: MetricExpr,
        n: usize,
        p: i32,
        q: i32,
    },
}

impl HomogeneitySubject {
    pub fn bidegree(&self) -> (i32, i32) {
        match self {
            HomogeneitySubject::MetricG(_) => (1, 1),
            HomogeneitySubject::Expr { p, q, .. } => (*p, *q),
        }
    }

    fn expr(&self) -> &MetricExpr {
        match self {
            HomogeneitySubject::MetricG(spec) => &spec.expr,
            HomogeneitySubject::Expr { expr, .. } => expr,
        }
    }

    pub fn n(&self) -> usize {
        match self {
            HomogeneitySubject::MetricG(spec) => spec.n,
            HomogeneitySubject::Expr { n, .. } => *n,
        }
    }

    pub fn value(&self, x: &[f64], y: &[f64]) -> Result<Complex64> {
        eval_scalar(self.expr(), self.n(), x, y)
    }
}

/// Residuals of the four real-coordinate homogeneity identities plus
/// the two complex Euler identities, all scaled by max(1, |H|).
#[derive(Debug, Clone, Copy)]
pub struct HomogeneityResiduals {
    /// |R_k y^k - (p+q) R|
    pub r_radial: f64,
    /// |I_k y^k - (p+q) I|
    pub i_radial: f64,
    /// |R_k u^k - (q-p) I|
    pub r_rotated: f64,
    /// |I_k u^k - (p-q) R|
    pub i_rotated: f64,
    /// |H_a v^a - p H|
    pub euler_holo: f64,
    /// |H_abar vbar^a - q H|
    pub euler_anti: f64,
    /// |H(zeta v) - zeta^p zetabar^q H(v)| at a random zeta
    pub scaling: f64,
}

impl HomogeneityResiduals {
    pub fn max_real_identities(&self) -> f64 {
        self.r_radial
            .max(self.i_radial)
            .max(self.r_rotated)
            .max(self.i_rotated)
    }
}

/// Checks the homogeneity identity block for a declared (p, q) subject.
pub fn homogeneity_check(
    subject: &HomogeneitySubject,
    point: &EvalPoint,
    zeta: Complex64,
) -> Result<HomogeneityResiduals> {
    let n = subject.n();
    let (p, q) = subject.bidegree();
    let vars = JetVars::seed(n, 0, 1, &point.x, &point.y);
    let h = eval_cjet(subject.expr(), &vars)?;
    let r0 = h.re.value();
    let i0 = h.im.as_ref().map_or(0.0, |j| j.value());
    let scale = 1.0f64.max((r0 * r0 + i0 * i0).sqrt());
    let d = 2 * n;
    let u = apply_j(&point.y);
    let mut r_y = -(p + q) as f64 * r0;
    let mut i_y = -(p + q) as f64 * i0;
    let mut r_u = -(q - p) as f64 * i0;
    let mut i_u = -(p - q) as f64 * r0;
    for k in 0..d {
        let rk = h.re.diff_y(k).value();
        let ik = h.im.as_ref().map_or(0.0, |j| j.diff_y(k).value());
        r_y += rk * point.y[k];
        i_y += ik * point.y[k];
        r_u += rk * u[k];
        i_u += ik * u[k];
    }
    // Complex Euler identities via Wirtinger combinations.
    let mut ha_v = Complex64::ZERO;
    let mut hab_vb = Complex64::ZERO;
    for a in 0..n {
        let va = Complex64::new(point.y[a], point.y[n + a]);
        ha_v += crate::complex_engine::d_v(&h, a, n).value() * va;
        hab_vb += crate::complex_engine::d_vbar(&h, a, n).value() * va.conj();
    }
    let h0 = Complex64::new(r0, i0);
    let euler_holo = (ha_v - (p as f64) * h0).norm() / scale;
    let euler_anti = (hab_vb - (q as f64) * h0).norm() / scale;
    // Direct scaling law at the supplied zeta.
    let ys = crate::metric::scale_fiber(n, &point.y, zeta);
    let hs = subject.value(&point.x, &ys)?;
    let expected = zeta.powi(p) * zeta.conj().powi(q) * h0;
    let scaling = (hs - expected).norm() / scale;
    Ok(HomogeneityResiduals {
        r_radial: r_y.abs() / scale,
        i_radial: i_y.abs() / scale,
        r_rotated: r_u.abs() / scale,
        i_rotated: i_u.abs() / scale,
        euler_holo,
        euler_anti,
        scaling,
    })
}

// ------------------------------------------------------------------
// J-invariance of the fundamental tensor

#[derive(Debug, Clone, Copy)]
pub struct JInvarianceResiduals {
    /// |g_y(Jy, JX) - g_y(y, X)|
    pub pairing: f64,
    /// |g_y(y, Jy)|
    pub orthogonality: f64,
    /// |g_y(y, y) - g_y(Jy, Jy)|
    pub norm_match: f64,
    /// max |g_ij J^i_p J^j_q - g_pq| (vanishes only for Hermitian metrics)
    pub full_invariance: f64,
    /// max |C_ijs J^i_p J^j_q - C_pqs| (vanishes with the Cartan torsion)
    pub cartan_invariance: f64,
}

/// The unconditional partial J-invariance identities plus the two
/// full-invariance diagnostics.
pub fn j_invariance_check(ts: &RealTensorSet, x_dir: &[f64]) -> JInvarianceResiduals {
    let d = ts.dim();
    let y = &ts.point.y;
    let u = apply_j(y);
    let jx = apply_j(x_dir);
    let pairing = (ts.gy(&u, &jx) - ts.gy(y, x_dir)).abs();
    let orthogonality = ts.gy(y, &u).abs();
    let norm_match = (ts.gy(y, y) - ts.gy(&u, &u)).abs();
    let jm = j_matrix(ts.n);
    let mut full = 0.0f64;
    for p in 0..d {
        for q in 0..d {
            let mut acc = -ts.g[(p, q)];
            for i in 0..d {
                for j in 0..d {
                    acc += ts.g[(i, j)] * jm[(i, p)] * jm[(j, q)];
                }
            }
            full = full.max(acc.abs());
        }
    }
    let mut cart = 0.0f64;
    for p in 0..d {
        for q in 0..d {
            for s in 0..d {
                let mut acc = -ts.cartan[idx3(d, p, q, s)];
                for i in 0..d {
                    for j in 0..d {
                        acc += ts.cartan[idx3(d, i, j, s)] * jm[(i, p)] * jm[(j, q)];
                    }
                }
                cart = cart.max(acc.abs());
            }
        }
    }
    JInvarianceResiduals {
        pairing,
        orthogonality,
        norm_match,
        full_invariance: full,
        cartan_invariance: cart,
    }
}

/// Max |C_ijk| over all indices (Riemannian-ness diagnostic).
pub fn cartan_norm(ts: &RealTensorSet) -> f64 {
    ts.cartan.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

// ------------------------------------------------------------------
// Spray correspondence and parallelism of J

/// max_b |complex_spray^b - (real_spray^b + i real_spray^{b+n})|, scaled.
pub fn spray_correspondence(spec: &MetricSpec, p: &EvalPoint) -> Result<f64> {
    let real = real_engine::spray_values(spec, &p.x, &p.y)?;
    let ts = crate::complex_engine::complex_tensors(spec, p)?;
    let n = spec.n;
    let scale = 1.0f64.max(real.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    let mut worst = 0.0f64;
    for b in 0..n {
        let expected = Complex64::new(real[b], real[n + b]);
        worst = worst.max((ts.spray[b] - expected).norm());
    }
    Ok(worst / scale)
}

#[derive(Debug, Clone, Copy)]
pub struct ParallelismResiduals {
    /// |N^i_k u^k - 2 J^i_k spray^k|
    pub contracted: f64,
    /// |conn^i_{sk} u^k + N^i_k J^k_s - 2 J^i_k N^k_s|
    pub differentiated: f64,
    /// |(J^s_k conn^i_{sl} - J^i_s conn^s_{kl}) y^k y^l| (covariant form)
    pub covariant: f64,
}

impl ParallelismResiduals {
    pub fn max(&self) -> f64 {
        self.contracted.max(self.differentiated).max(self.covariant)
    }
}

/// The two fiberwise parallelism identities and the covariant-derivative
/// form of D_T(Jy) along the spray direction.
pub fn parallelism_residual(spec: &MetricSpec, p: &EvalPoint) -> Result<ParallelismResiduals> {
    let data = real_engine::berwald_data_full(spec, &p.x, &p.y)?;
    let d = 2 * spec.n;
    let u = apply_j(&p.y);
    let jm = j_matrix(spec.n);
    let spray_scale = 1.0f64.max(data.spray.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    let n_scale = 1.0f64.max(data.nconn.amax());
    let mut contracted = 0.0f64;
    for i in 0..d {
        let mut acc = 0.0;
        for k in 0..d {
            acc += data.nconn[(i, k)] * u[k] - 2.0 * jm[(i, k)] * data.spray[k];
        }
        contracted = contracted.max(acc.abs() / spray_scale);
    }
    let mut differentiated = 0.0f64;
    for i in 0..d {
        for s in 0..d {
            let mut acc = 0.0;
            for k in 0..d {
                acc += data.conn[idx3(d, i, s, k)] * u[k] + data.nconn[(i, k)] * jm[(k, s)]
                    - 2.0 * jm[(i, k)] * data.nconn[(k, s)];
            }
            differentiated = differentiated.max(acc.abs() / n_scale);
        }
    }
    let mut covariant = 0.0f64;
    for i in 0..d {
        let mut acc = 0.0;
        for k in 0..d {
            for l in 0..d {
                let mut term = 0.0;
                for s in 0..d {
                    term += jm[(s, k)] * data.conn[idx3(d, i, s, l)]
                        - jm[(i, s)] * data.conn[idx3(d, s, k, l)];
                }
                acc += term * p.y[k] * p.y[l];
            }
        }
        covariant = covariant.max(acc.abs() / spray_scale);
    }
    Ok(ParallelismResiduals {
        contracted,
        differentiated,
        covariant,
    })
}

// ------------------------------------------------------------------
// Orthogonal Ricci curvature

#[derive(Debug, Clone, Copy)]
pub struct OrthogonalRicci {
    /// Ric(y) - K(y, Jy).
    pub value: f64,
    /// Frame sum over the 2n-2 directions completing {y/F, Jy/F}.
    pub frame_sum: f64,
    /// K(y, Jy) at the point.
    pub holomorphic_flag: f64,
    pub ricci: f64,
    /// n = 1: the quantity is identically zero.
    pub degenerate: bool,
}

pub fn orthogonal_ricci(spec: &MetricSpec, p: &EvalPoint) -> Result<OrthogonalRicci> {
    let ts = real_engine::real_tensors(spec, p)?;
    let ric = real_engine::ricci(&ts)?;
    let u = apply_j(&p.y);
    let k_holo = real_engine::flag_curvature(&ts, &u)?;
    let frame = gy_orthonormal_frame(&ts.g, &p.y)?;
    let d = ts.dim();
    let mut frame_sum = 0.0;
    for e in frame.iter().take(d.saturating_sub(2)) {
        frame_sum += real_engine::flag_curvature(&ts, e.as_slice())?;
    }
    Ok(OrthogonalRicci {
        value: ric.value - k_holo,
        frame_sum,
        holomorphic_flag: k_holo,
        ricci: ric.value,
        degenerate: spec.n == 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn j_maps_match_examples() {
        // n=1: y=(1,0) -> v=(1); Jy=(0,1)
        let y = [1.0, 0.0];
        let v = to_complex(&y);
        assert_eq!(v, vec![Complex64::new(1.0, 0.0)]);
        assert_eq!(apply_j(&y), vec![0.0, 1.0]);
        // n=2: v=(i, 2) -> y=(0,2,1,0)
        let v = [Complex64::new(0.0, 1.0), Complex64::new(2.0, 0.0)];
        assert_eq!(to_real(&v), vec![0.0, 2.0, 1.0, 0.0]);
        // J^2 = -1
        let y = [3.0, 4.0];
        assert_eq!(apply_j(&apply_j(&y)), vec![-3.0, -4.0]);
        let n = 3;
        let jm = j_matrix(n);
        let id = &jm * &jm;
        for i in 0..2 * n {
            for k in 0..2 * n {
                let expect = if i == k { -1.0 } else { 0.0 };
                assert_eq!(id[(i, k)], expect);
            }
        }
    }

    #[test]
    fn round_trip_real_complex() {
        let y = [0.3, -0.7, 1.1, 0.2];
        assert_eq!(to_real(&to_complex(&y)), y.to_vec());
    }
}
