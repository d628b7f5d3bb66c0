//! Complex-side objects: Levi matrix, complex nonlinear connection and
//! spray, the canonical complex (Chern-Finsler type) connection, its
//! contracted curvature, the holomorphic curvature scalar, and the two
//! Kahler symmetry residuals.
//!
//! All complex derivatives are Wirtinger combinations of the real jet
//! coefficients; there is no separate complex differentiation engine.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::expr::eval::{eval_cjet, JetVars};
use crate::jet::matrix::invert_cjet_matrix;
use crate::jet::table::{EvalPoint, JetTable, PartialSpec};
use crate::jet::{CJet, Jet};
use crate::metric::MetricSpec;

/// Complex-side tensors at one point.
#[derive(Debug, Clone)]
pub struct ComplexTensorSet {
    pub n: usize,
    pub point: EvalPoint,
    pub metric_id: String,
    pub g_value: f64,
    /// Levi matrix G_{a bbar}, rows a, columns b.
    pub levi: DMatrix<Complex64>,
    /// Inverse, `levi_inv[(t, a)]` = G^{tbar a}.
    pub levi_inv: DMatrix<Complex64>,
    pub min_eigenvalue: f64,
    pub condition: f64,
    /// Nonlinear connection coefficients `gamma_n[a*n + mu]`.
    pub gamma_n: Vec<Complex64>,
    /// Complex spray coefficients.
    pub spray: Vec<Complex64>,
    /// Connection coefficients `gamma[(a*n + b)*n + mu]`.
    pub gamma: Vec<Complex64>,
    /// Vertical coefficients `cartan[(a*n + b)*n + c]`.
    pub cartan: Vec<Complex64>,
    /// Fully contracted curvature coefficient.
    pub curvature_contracted: Complex64,
    /// Holomorphic curvature (real part; imaginary residual recorded).
    pub holomorphic: f64,
    pub holomorphic_imag_residual: f64,
    /// max |gamma^a_{b;mu} - gamma^a_{mu;b}|.
    pub kahler_strong: f64,
    /// max_b |G_a (gamma^a_{b;mu} - gamma^a_{mu;b}) v^mu|.
    pub kahler_weak: f64,
}

// Wirtinger derivatives of complex jets. For f = u + iv:
//   d/dz^mu     = ((u_x + v_x') + i (v_x - u_x')) / 2
//   d/dzbar^mu  = ((u_x - v_x') + i (v_x + u_x')) / 2
// with x = x^mu, x' = x^{mu+n}; the fiber versions use y instead.

fn im_or_zero(f: &CJet) -> Jet {
    match &f.im {
        Some(j) => j.clone(),
        None => f.re.zero_like(),
    }
}

pub fn d_z(f: &CJet, mu: usize, n: usize) -> CJet {
    let u = &f.re;
    let v = im_or_zero(f);
    let re = u.diff_x(mu).add(&v.diff_x(mu + n)).scale(0.5);
    let im = v.diff_x(mu).sub(&u.diff_x(mu + n)).scale(0.5);
    CJet::new(re, im)
}

pub fn d_zbar(f: &CJet, mu: usize, n: usize) -> CJet {
    let u = &f.re;
    let v = im_or_zero(f);
    let re = u.diff_x(mu).sub(&v.diff_x(mu + n)).scale(0.5);
    let im = v.diff_x(mu).add(&u.diff_x(mu + n)).scale(0.5);
    CJet::new(re, im)
}

pub fn d_v(f: &CJet, a: usize, n: usize) -> CJet {
    let u = &f.re;
    let v = im_or_zero(f);
    let re = u.diff_y(a).add(&v.diff_y(a + n)).scale(0.5);
    let im = v.diff_y(a).sub(&u.diff_y(a + n)).scale(0.5);
    CJet::new(re, im)
}

pub fn d_vbar(f: &CJet, a: usize, n: usize) -> CJet {
    let u = &f.re;
    let v = im_or_zero(f);
    let re = u.diff_y(a).sub(&v.diff_y(a + n)).scale(0.5);
    let im = v.diff_y(a).add(&u.diff_y(a + n)).scale(0.5);
    CJet::new(re, im)
}

/// Min eigenvalue of a Hermitian matrix via its real symmetric embedding.
fn hermitian_min_eig(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    let emb = DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let (bi, bj) = (i / n, j / n);
        let e = m[(i % n, j % n)];
        match (bi, bj) {
            (0, 0) | (1, 1) => e.re,
            (0, 1) => -e.im,
            _ => e.im,
        }
    });
    emb.symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Levi matrix and inverse straight from a derivative table.
pub fn levi_metric(
    table: &JetTable,
) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>, f64)> {
    if table.max_y < 2 {
        return Err(Error::Eval("Levi matrix needs y-order 2".into()));
    }
    let n = table.n;
    let d = 2 * n;
    let part = |i: usize, j: usize| table.get(&PartialSpec::from_vars(d, &[], &[i, j])).unwrap();
    let levi = DMatrix::from_fn(n, n, |a, b| {
        let re = part(a, b) + part(n + a, n + b);
        let im = part(a, n + b) - part(n + a, b);
        Complex64::new(0.25 * re, 0.25 * im)
    });
    let min_eig = hermitian_min_eig(&levi);
    if min_eig <= 1e-12 {
        return Err(Error::NotStronglyPseudoconvex { min_eig });
    }
    let inv = levi
        .clone()
        .try_inverse()
        .ok_or(Error::NotStronglyPseudoconvex { min_eig })?;
    Ok((levi, inv, min_eig))
}

/// Full complex tensor set at a point (G-caps (2,4)).
pub fn complex_tensors(spec: &MetricSpec, p: &EvalPoint) -> Result<ComplexTensorSet> {
    spec.check_point(p)?;
    let n = spec.n;
    let vars = JetVars::seed(n, 2, 4, &p.x, &p.y);
    let g = eval_cjet(&spec.expr, &vars)?;
    let g_real = g.expect_real(1e-12)?;
    let g_value = g_real.value();
    if !(g_value > 0.0) {
        return Err(Error::DomainViolation(format!("G = {g_value} not positive")));
    }
    let gc = CJet::real(g_real);

    // Levi matrix as jets: levi[b*n + t] = d_v(d_vbar(G, t), b), caps (2,2).
    let d_vbar_g: Vec<CJet> = (0..n).map(|t| d_vbar(&gc, t, n)).collect();
    let levi_jets: Vec<CJet> = (0..n * n)
        .map(|k| d_v(&d_vbar_g[k % n], k / n, n))
        .collect();
    let levi = DMatrix::from_fn(n, n, |b, t| levi_jets[b * n + t].value());
    let min_eigenvalue = hermitian_min_eig(&levi);
    if min_eigenvalue <= 1e-12 {
        return Err(Error::NotStronglyPseudoconvex {
            min_eig: min_eigenvalue,
        });
    }
    let (levi_inv_jets, condition) = invert_cjet_matrix(&levi_jets, n)?;
    let levi_inv = DMatrix::from_fn(n, n, |t, a| levi_inv_jets[t * n + a].value());

    // Nonlinear connection gamma_n[a][mu] = G^{tbar a} d_mu(d_vbar(G, t)).
    let mut gamma_n_jets: Vec<CJet> = Vec::with_capacity(n * n);
    for a in 0..n {
        for mu in 0..n {
            let mut acc: Option<CJet> = None;
            for t in 0..n {
                let term = levi_inv_jets[t * n + a].mul(&d_z(&d_vbar_g[t], mu, n));
                acc = Some(match acc {
                    None => term,
                    Some(s) => s.add(&term),
                });
            }
            gamma_n_jets.push(acc.unwrap());
        }
    }
    let gamma_n: Vec<Complex64> = gamma_n_jets.iter().map(CJet::value).collect();

    // Complex spray = 1/2 gamma_n[a][b] v^b.
    let v_vals: Vec<Complex64> = (0..n)
        .map(|b| Complex64::new(p.y[b], p.y[n + b]))
        .collect();
    let spray: Vec<Complex64> = (0..n)
        .map(|a| {
            0.5 * (0..n)
                .map(|b| gamma_n[a * n + b] * v_vals[b])
                .sum::<Complex64>()
        })
        .collect();

    // Horizontal derivative: delta_mu f = d_z f - gamma_n[g][mu] d_v f.
    let horiz = |f: &CJet, mu: usize| -> CJet {
        let mut out = d_z(f, mu, n);
        for gamma_idx in 0..n {
            let term = gamma_n_jets[gamma_idx * n + mu].mul(&d_v(f, gamma_idx, n));
            out = out.sub(&term);
        }
        out
    };
    // Conjugate horizontal derivative:
    // delta_nubar f = d_zbar f - conj(gamma_n[g][nu]) d_vbar f.
    let horiz_bar = |f: &CJet, nu: usize| -> CJet {
        let mut out = d_zbar(f, nu, n);
        for gamma_idx in 0..n {
            let term = gamma_n_jets[gamma_idx * n + nu]
                .conj()
                .mul(&d_vbar(f, gamma_idx, n));
            out = out.sub(&term);
        }
        out
    };

    // Connection coefficients gamma[a][b][mu] = G^{tbar a} delta_mu(G_{b tbar}),
    // kept as jets exact to (1,1) so one more conjugate-horizontal
    // derivative stays exact.
    let mut gamma_jets: Vec<CJet> = Vec::with_capacity(n * n * n);
    for a in 0..n {
        for b in 0..n {
            for mu in 0..n {
                let mut acc: Option<CJet> = None;
                for t in 0..n {
                    let term = levi_inv_jets[t * n + a].mul(&horiz(&levi_jets[b * n + t], mu));
                    acc = Some(match acc {
                        None => term,
                        Some(s) => s.add(&term),
                    });
                }
                gamma_jets.push(acc.unwrap());
            }
        }
    }
    let gamma: Vec<Complex64> = gamma_jets.iter().map(CJet::value).collect();

    // Vertical coefficients cartan[a][b][c] = G^{tbar a} d_v(G_{b tbar}, c).
    let mut cartan: Vec<Complex64> = Vec::with_capacity(n * n * n);
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let mut acc = Complex64::ZERO;
                for t in 0..n {
                    acc += levi_inv_jets[t * n + a].value()
                        * d_v(&levi_jets[b * n + t], c, n).value();
                }
                cartan.push(acc);
            }
        }
    }

    // Contracted curvature coefficient of the dz^mu ^ dzbar^nu block:
    // R^a_{b;mu nubar} = -delta_nubar(gamma[a][b][mu])
    //                    - cartan[a][b][g] delta_nubar(gamma_n[g][mu]).
    // Sign convention pinned by the constant-curvature catalog oracles.
    let mut delta_bar_gamma_n = vec![Complex64::ZERO; n * n * n]; // [g][mu][nu]
    for gamma_idx in 0..n {
        for mu in 0..n {
            let f = &gamma_n_jets[gamma_idx * n + mu];
            for nu in 0..n {
                delta_bar_gamma_n[(gamma_idx * n + mu) * n + nu] = horiz_bar(f, nu).value();
            }
        }
    }
    let mut r_upper = vec![Complex64::ZERO; n * n * n * n]; // [a][b][mu][nu]
    for a in 0..n {
        for b in 0..n {
            for mu in 0..n {
                let f = &gamma_jets[(a * n + b) * n + mu];
                for nu in 0..n {
                    let mut v = -horiz_bar(f, nu).value();
                    for gamma_idx in 0..n {
                        v -= cartan[(a * n + b) * n + gamma_idx]
                            * delta_bar_gamma_n[(gamma_idx * n + mu) * n + nu];
                    }
                    r_upper[((a * n + b) * n + mu) * n + nu] = v;
                }
            }
        }
    }
    // Lower with the Levi matrix and contract four times with v.
    let mut contracted = Complex64::ZERO;
    for a in 0..n {
        for b in 0..n {
            for mu in 0..n {
                for nu in 0..n {
                    let mut lowered = Complex64::ZERO;
                    for s in 0..n {
                        lowered += levi[(s, b)] * r_upper[((s * n + a) * n + mu) * n + nu];
                    }
                    contracted +=
                        lowered * v_vals[a] * v_vals[b].conj() * v_vals[mu] * v_vals[nu].conj();
                }
            }
        }
    }
    let h_complex = 2.0 * contracted / (g_value * g_value);
    let holomorphic_imag_residual = h_complex.im.abs() / 1.0f64.max(h_complex.re.abs());

    // Kahler residuals.
    let mut strong = 0.0f64;
    for a in 0..n {
        for b in 0..n {
            for mu in 0..n {
                strong = strong
                    .max((gamma[(a * n + b) * n + mu] - gamma[(a * n + mu) * n + b]).norm());
            }
        }
    }
    let g_alpha: Vec<Complex64> = (0..n).map(|a| d_v(&gc, a, n).value()).collect();
    let mut weak = 0.0f64;
    for b in 0..n {
        let mut acc = Complex64::ZERO;
        for a in 0..n {
            for mu in 0..n {
                acc += g_alpha[a]
                    * (gamma[(a * n + b) * n + mu] - gamma[(a * n + mu) * n + b])
                    * v_vals[mu];
            }
        }
        weak = weak.max(acc.norm());
    }

    Ok(ComplexTensorSet {
        n,
        point: p.clone(),
        metric_id: spec.id.clone(),
        g_value,
        levi,
        levi_inv,
        min_eigenvalue,
        condition,
        gamma_n,
        spray,
        gamma,
        cartan,
        curvature_contracted: contracted,
        holomorphic: h_complex.re,
        holomorphic_imag_residual,
        kahler_strong: strong,
        kahler_weak: weak,
    })
}

/// The connection data only (nonlinear + linear + vertical coefficients).
pub fn cf_connection(spec: &MetricSpec, p: &EvalPoint) -> Result<ComplexTensorSet> {
    complex_tensors(spec, p)
}

/// Holomorphic curvature scalar at (p, v).
pub fn holomorphic_curvature(spec: &MetricSpec, p: &EvalPoint) -> Result<f64> {
    let ts = complex_tensors(spec, p)?;
    if ts.holomorphic_imag_residual > 1e-9 {
        return Err(Error::Eval(format!(
            "holomorphic curvature has imaginary residual {:.3e}",
            ts.holomorphic_imag_residual
        )));
    }
    Ok(ts.holomorphic)
}

/// Strong and weak Kahler residuals at a point.
pub fn kahler_residuals(spec: &MetricSpec, p: &EvalPoint) -> Result<(f64, f64)> {
    let ts = complex_tensors(spec, p)?;
    Ok((ts.kahler_strong, ts.kahler_weak))
}

fn c64(v: Complex64) -> serde_json::Value {
    serde_json::json!([v.re, v.im])
}

impl ComplexTensorSet {
    pub fn complex_spray(&self) -> &[Complex64] {
        &self.spray
    }

    pub fn to_json(&self) -> serde_json::Value {
        let n = self.n;
        let cmat = |m: &DMatrix<Complex64>| -> serde_json::Value {
            serde_json::Value::Array(
                (0..m.nrows())
                    .map(|i| {
                        serde_json::Value::Array((0..m.ncols()).map(|j| c64(m[(i, j)])).collect())
                    })
                    .collect(),
            )
        };
        let cvec = |v: &[Complex64]| -> serde_json::Value {
            serde_json::Value::Array(v.iter().map(|&w| c64(w)).collect())
        };
        serde_json::json!({
            "metric": self.metric_id,
            "n": n,
            "point": {"x": self.point.x, "y": self.point.y},
            "complex_format": "[re, im]",
            "index_order": "row-major over greek indices 1..=n; gamma is [alpha][beta][mu], cartan is [alpha][beta][gamma]",
            "g_value": self.g_value,
            "min_eigenvalue": self.min_eigenvalue,
            "levi": cmat(&self.levi),
            "levi_inv": cmat(&self.levi_inv),
            "nonlinear_connection": cvec(&self.gamma_n),
            "complex_spray": cvec(&self.spray),
            "connection": cvec(&self.gamma),
            "vertical_connection": cvec(&self.cartan),
            "curvature_contracted": c64(self.curvature_contracted),
            "holomorphic_curvature": self.holomorphic,
            "kahler_strong_residual": self.kahler_strong,
            "kahler_weak_residual": self.kahler_weak,
        })
    }
}
