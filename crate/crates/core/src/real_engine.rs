//! Real Finsler tensors: fundamental tensor, Cartan torsion, geodesic
//! spray, nonlinear/Berwald connection, Riemann and Berwald curvature,
//! flag and Ricci curvature.
//!
//! Everything is computed by jet arithmetic from the metric expression;
//! in particular the horizontal derivative inside the Riemann curvature
//! is taken by differentiating the connection jets themselves, not by a
//! transcribed closed formula.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::expr::eval::{eval_cjet, JetVars};
use crate::jet::table::{EvalPoint, JetTable, PartialSpec};
use crate::jet::Jet;
use crate::metric::MetricSpec;

#[inline]
pub fn idx3(d: usize, i: usize, j: usize, k: usize) -> usize {
    (i * d + j) * d + k
}

#[inline]
pub fn idx4(d: usize, i: usize, j: usize, k: usize, l: usize) -> usize {
    ((i * d + j) * d + k) * d + l
}

/// All real-side tensors at one point of the slit tangent bundle.
#[derive(Debug, Clone)]
pub struct RealTensorSet {
    pub n: usize,
    pub point: EvalPoint,
    pub metric_id: String,
    pub g_value: f64,
    /// Fundamental tensor g_ij (2n x 2n).
    pub g: DMatrix<f64>,
    pub g_inv: DMatrix<f64>,
    pub min_eigenvalue: f64,
    pub condition: f64,
    /// Cartan torsion C_ijk, layout `idx3`.
    pub cartan: Vec<f64>,
    /// Spray coefficients.
    pub spray: Vec<f64>,
    /// Nonlinear connection, `spray_grad[(i, j)]` = d(spray^i)/dy^j.
    pub spray_grad: DMatrix<f64>,
    /// Berwald connection coefficients, layout `idx3`.
    pub berwald_conn: Vec<f64>,
    /// Berwald curvature B^i_jkl, layout `idx4`.
    pub berwald_curv: Vec<f64>,
    /// Riemann curvature R^i_jkl, layout `idx4`.
    pub riemann: Vec<f64>,
    /// Flag-curvature numerator tensor R_ik.
    pub r_flag: DMatrix<f64>,
}

/// Spray data as jets, shared by the tensor assembly and the lean
/// entry points used inside ODE right-hand sides.
struct SprayJets {
    d: usize,
    g_fn: Jet,
    dg_y: Vec<Jet>,
    g: Vec<Jet>,
    spray: Vec<Jet>,
    min_eigenvalue: f64,
    condition: f64,
}

fn check_convex(gv: &DMatrix<f64>) -> Result<f64> {
    let eig = gv.clone().symmetric_eigenvalues();
    let min_eig = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    if min_eig <= 1e-12 {
        return Err(Error::NotStronglyConvex { min_eig });
    }
    Ok(min_eig)
}

/// Builds G, g, g^{-1} and the spray as jets with G-caps `(cx, cy)`.
/// The spray comes out exact to `(cx - 1, cy - 2)`.
fn compute_spray_jets(spec: &MetricSpec, p: &EvalPoint, cx: usize, cy: usize) -> Result<SprayJets> {
    assert!(cx >= 1 && cy >= 2);
    spec.check_point(p)?;
    let d = 2 * spec.n;
    let vars = JetVars::seed(spec.n, cx, cy, &p.x, &p.y);
    let g_fn = eval_cjet(&spec.expr, &vars)?.expect_real(1e-12)?;
    if !(g_fn.value() > 0.0) {
        return Err(Error::DomainViolation(format!(
            "G = {} not positive",
            g_fn.value()
        )));
    }
    let dg_y: Vec<Jet> = (0..d).map(|k| g_fn.diff_y(k)).collect();
    let mut g: Vec<Jet> = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            if j < i {
                let mirrored = g[j * d + i].clone();
                g.push(mirrored);
            } else {
                g.push(dg_y[i].diff_y(j).scale(0.5));
            }
        }
    }
    let gv = DMatrix::from_fn(d, d, |i, j| g[i * d + j].value());
    let min_eigenvalue = check_convex(&gv)?;
    // spray^i = 1/4 g^{il} (dG/dy^l;x^k y^k - dG/dx^l), realized as a
    // linear solve over jets
    let y_jets: Vec<Jet> = {
        let (xr, yr) = g_fn.rings();
        (0..d)
            .map(|k| Jet::var_y(xr.clone(), yr.clone(), cx, cy, k, p.y[k]))
            .collect()
    };
    let mut terms = Vec::with_capacity(d);
    for l in 0..d {
        let mut acc = dg_y[l].diff_x(0).mul(&y_jets[0]);
        for k in 1..d {
            acc = acc.add(&dg_y[l].diff_x(k).mul(&y_jets[k]));
        }
        terms.push(acc.sub(&g_fn.diff_x(l)));
    }
    let (solved, condition) = crate::jet::matrix::jet_linear_solve(&g, &terms, d)?;
    let spray: Vec<Jet> = solved.into_iter().map(|s| s.scale(0.25)).collect();
    Ok(SprayJets {
        d,
        g_fn,
        dg_y,
        g,
        spray,
        min_eigenvalue,
        condition,
    })
}

/// Fundamental tensor and inverse from a derivative table.
pub fn fundamental_tensor(table: &JetTable) -> Result<(DMatrix<f64>, DMatrix<f64>, f64)> {
    if table.max_y < 2 {
        return Err(Error::Eval("fundamental tensor needs y-order 2".into()));
    }
    let d = 2 * table.n;
    let g = DMatrix::from_fn(d, d, |i, j| {
        0.5 * table
            .get(&PartialSpec::from_vars(d, &[], &[i, j]))
            .unwrap()
    });
    let min_eig = check_convex(&g)?;
    let inv = g
        .clone()
        .try_inverse()
        .ok_or(Error::NotStronglyConvex { min_eig })?;
    Ok((g, inv, min_eig))
}

/// Full tensor set at a point (G-caps (2,5)).
pub fn real_tensors(spec: &MetricSpec, p: &EvalPoint) -> Result<RealTensorSet> {
    let sj = compute_spray_jets(spec, p, 2, 5)?;
    let d = sj.d;
    let gv = DMatrix::from_fn(d, d, |i, j| sj.g[i * d + j].value());
    let ginvv = gv
        .clone()
        .try_inverse()
        .ok_or(Error::NotStronglyConvex {
            min_eig: sj.min_eigenvalue,
        })?;

    let mut cartan = vec![0.0; d * d * d];
    for i in 0..d {
        let di = &sj.dg_y[i];
        for j in i..d {
            let dij = di.diff_y(j);
            for k in j..d {
                let v = 0.25 * dij.diff_y(k).value();
                for perm in permutations3(i, j, k) {
                    cartan[idx3(d, perm.0, perm.1, perm.2)] = v;
                }
            }
        }
    }

    let spray_vals: Vec<f64> = sj.spray.iter().map(Jet::value).collect();
    // nonlinear connection jets N^i_j, caps (1,3)
    let nconn: Vec<Jet> = (0..d * d)
        .map(|k| sj.spray[k / d].diff_y(k % d))
        .collect();
    let spray_grad = DMatrix::from_fn(d, d, |i, j| nconn[i * d + j].value());
    // Berwald connection jets, caps (1,2)
    let bconn: Vec<Jet> = (0..d * d * d)
        .map(|k| {
            let (i, jk) = (k / (d * d), k % (d * d));
            nconn[i * d + jk / d].diff_y(jk % d)
        })
        .collect();
    let berwald_conn: Vec<f64> = bconn.iter().map(Jet::value).collect();
    let mut berwald_curv = vec![0.0; d * d * d * d];
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    berwald_curv[idx4(d, i, j, k, l)] = bconn[idx3(d, i, j, k)].diff_y(l).value();
                }
            }
        }
    }
    // horizontal derivative of the Berwald connection:
    // delta_k f = df/dx^k - N^s_k df/dy^s, with df/dy^s = B^i_{jls}.
    let mut hderiv = vec![0.0; d * d * d * d]; // [i][j][l][k] = delta_k(conn^i_{jl})
    for i in 0..d {
        for j in 0..d {
            for l in 0..d {
                for k in 0..d {
                    let mut v = bconn[idx3(d, i, j, l)].diff_x(k).value();
                    for s in 0..d {
                        v -= spray_grad[(s, k)] * berwald_curv[idx4(d, i, j, l, s)];
                    }
                    hderiv[idx4(d, i, j, l, k)] = v;
                }
            }
        }
    }
    let mut riemann = vec![0.0; d * d * d * d];
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    let mut v = hderiv[idx4(d, i, j, l, k)] - hderiv[idx4(d, i, j, k, l)];
                    for s in 0..d {
                        v += berwald_conn[idx3(d, i, k, s)] * berwald_conn[idx3(d, s, j, l)]
                            - berwald_conn[idx3(d, s, j, k)] * berwald_conn[idx3(d, i, l, s)];
                    }
                    riemann[idx4(d, i, j, k, l)] = v;
                }
            }
        }
    }
    // R_ik = g_si R^s_jkl y^j y^l
    let mut contracted = vec![0.0; d * d]; // W^s_k
    for s in 0..d {
        for k in 0..d {
            let mut acc = 0.0;
            for j in 0..d {
                for l in 0..d {
                    acc += riemann[idx4(d, s, j, k, l)] * p.y[j] * p.y[l];
                }
            }
            contracted[s * d + k] = acc;
        }
    }
    let r_flag = DMatrix::from_fn(d, d, |i, k| {
        (0..d).map(|s| gv[(s, i)] * contracted[s * d + k]).sum()
    });

    Ok(RealTensorSet {
        n: spec.n,
        point: p.clone(),
        metric_id: spec.id.clone(),
        g_value: sj.g_fn.value(),
        g: gv,
        g_inv: ginvv,
        min_eigenvalue: sj.min_eigenvalue,
        condition: sj.condition,
        cartan,
        spray: spray_vals,
        spray_grad,
        berwald_conn,
        berwald_curv,
        riemann,
        r_flag,
    })
}

fn permutations3(i: usize, j: usize, k: usize) -> [(usize, usize, usize); 6] {
    [
        (i, j, k),
        (i, k, j),
        (j, i, k),
        (j, k, i),
        (k, i, j),
        (k, j, i),
    ]
}

/// Spray values only (geodesic right-hand side). G-caps (1,2).
pub fn spray_values(spec: &MetricSpec, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let p = EvalPoint {
        x: x.to_vec(),
        y: y.to_vec(),
    };
    let sj = compute_spray_jets(spec, &p, 1, 2)?;
    Ok(sj.spray.iter().map(Jet::value).collect())
}

/// Spray values with first derivatives in x and y (variational systems).
pub fn spray_jacobians(
    spec: &MetricSpec,
    x: &[f64],
    y: &[f64],
) -> Result<(Vec<f64>, DMatrix<f64>, DMatrix<f64>)> {
    let p = EvalPoint {
        x: x.to_vec(),
        y: y.to_vec(),
    };
    let sj = compute_spray_jets(spec, &p, 2, 3)?;
    let d = sj.d;
    let vals: Vec<f64> = sj.spray.iter().map(Jet::value).collect();
    let dx = DMatrix::from_fn(d, d, |i, j| sj.spray[i].diff_x(j).value());
    let dy = DMatrix::from_fn(d, d, |i, j| sj.spray[i].diff_y(j).value());
    Ok((vals, dx, dy))
}

/// Nonlinear connection values N^i_j (parallel transport). G-caps (1,3).
pub fn nonlinear_connection(spec: &MetricSpec, x: &[f64], y: &[f64]) -> Result<DMatrix<f64>> {
    Ok(spray_and_connection(spec, x, y)?.1)
}

/// Spray values together with the nonlinear connection. G-caps (1,3).
pub fn spray_and_connection(
    spec: &MetricSpec,
    x: &[f64],
    y: &[f64],
) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let p = EvalPoint {
        x: x.to_vec(),
        y: y.to_vec(),
    };
    let sj = compute_spray_jets(spec, &p, 1, 3)?;
    let d = sj.d;
    let n = DMatrix::from_fn(d, d, |i, j| sj.spray[i].diff_y(j).value());
    Ok((sj.spray.iter().map(Jet::value).collect(), n))
}

/// Spray + connection data needed along geodesics (covariant derivatives
/// with a reference vector). G-caps (1,4).
pub struct BerwaldData {
    /// Berwald connection coefficients, layout `idx3`.
    pub conn: Vec<f64>,
    /// Fundamental tensor at the point.
    pub g: DMatrix<f64>,
    /// Nonlinear connection N^i_j.
    pub nconn: DMatrix<f64>,
    /// Spray values.
    pub spray: Vec<f64>,
}

pub fn berwald_data_full(spec: &MetricSpec, x: &[f64], y: &[f64]) -> Result<BerwaldData> {
    let p = EvalPoint {
        x: x.to_vec(),
        y: y.to_vec(),
    };
    let sj = compute_spray_jets(spec, &p, 1, 4)?;
    let d = sj.d;
    let mut conn = vec![0.0; d * d * d];
    let mut nconn = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            let nij = sj.spray[i].diff_y(j);
            nconn[(i, j)] = nij.value();
            for k in 0..d {
                conn[idx3(d, i, j, k)] = nij.diff_y(k).value();
            }
        }
    }
    let g = DMatrix::from_fn(d, d, |i, j| sj.g[i * d + j].value());
    let spray = sj.spray.iter().map(Jet::value).collect();
    Ok(BerwaldData {
        conn,
        g,
        nconn,
        spray,
    })
}

impl RealTensorSet {
    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn gy(&self, a: &[f64], b: &[f64]) -> f64 {
        let d = self.dim();
        let mut acc = 0.0;
        for i in 0..d {
            for j in 0..d {
                acc += self.g[(i, j)] * a[i] * b[j];
            }
        }
        acc
    }

    /// Max relative residual of the spray homogeneity chain
    /// (N^i_j y^j = 2 spray^i and conn^i_{jk} y^k = N^i_j).
    pub fn homogeneity_chain_residual(&self) -> f64 {
        let d = self.dim();
        let scale = 1.0f64.max(self.spray.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        let mut worst = 0.0f64;
        for i in 0..d {
            let mut acc = -2.0 * self.spray[i];
            for j in 0..d {
                acc += self.spray_grad[(i, j)] * self.point.y[j];
            }
            worst = worst.max(acc.abs() / scale);
        }
        let nscale = 1.0f64.max(self.spray_grad.amax());
        for i in 0..d {
            for j in 0..d {
                let mut acc = -self.spray_grad[(i, j)];
                for k in 0..d {
                    acc += self.berwald_conn[idx3(d, i, j, k)] * self.point.y[k];
                }
                worst = worst.max(acc.abs() / nscale);
            }
        }
        worst
    }

    /// Max |C_ijk y^k| (Euler identity for the Cartan torsion).
    pub fn cartan_euler_residual(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let mut acc = 0.0;
                for k in 0..d {
                    acc += self.cartan[idx3(d, i, j, k)] * self.point.y[k];
                }
                worst = worst.max(acc.abs());
            }
        }
        worst
    }

    /// Max |R^i_jkl + R^i_jlk| (antisymmetry in the last index pair).
    pub fn riemann_antisymmetry_residual(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        worst = worst.max(
                            (self.riemann[idx4(d, i, j, k, l)] + self.riemann[idx4(d, i, j, l, k)])
                                .abs(),
                        );
                    }
                }
            }
        }
        worst
    }

    /// Max |B^i_jkl y^l| and symmetry defect of B in its lower indices.
    pub fn berwald_residuals(&self) -> (f64, f64) {
        let d = self.dim();
        let mut euler = 0.0f64;
        let mut sym = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    let mut acc = 0.0;
                    for l in 0..d {
                        acc += self.berwald_curv[idx4(d, i, j, k, l)] * self.point.y[l];
                        sym = sym.max(
                            (self.berwald_curv[idx4(d, i, j, k, l)]
                                - self.berwald_curv[idx4(d, i, k, j, l)])
                            .abs(),
                        );
                        sym = sym.max(
                            (self.berwald_curv[idx4(d, i, j, k, l)]
                                - self.berwald_curv[idx4(d, i, l, k, j)])
                            .abs(),
                        );
                    }
                    euler = euler.max(acc.abs());
                }
            }
        }
        (euler, sym)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "metric": self.metric_id,
            "n": self.n,
            "point": {"x": self.point.x, "y": self.point.y},
            "index_order": "row-major over [i][j][k][l]; latin indices run over 1..=2n in chart order",
            "g_value": self.g_value,
            "min_eigenvalue": self.min_eigenvalue,
            "condition": self.condition,
            "g": matrix_rows(&self.g),
            "g_inv": matrix_rows(&self.g_inv),
            "cartan": self.cartan,
            "spray": self.spray,
            "nonlinear_connection": matrix_rows(&self.spray_grad),
            "berwald_connection": self.berwald_conn,
            "berwald_curvature": self.berwald_curv,
            "riemann_curvature": self.riemann,
            "flag_numerator": matrix_rows(&self.r_flag),
        })
    }
}

pub fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

/// Flag curvature K(y, V) from a tensor set.
pub fn flag_curvature(ts: &RealTensorSet, v: &[f64]) -> Result<f64> {
    let d = ts.dim();
    assert_eq!(v.len(), d);
    let y = &ts.point.y;
    let gyy = ts.gy(y, y);
    let gvv = ts.gy(v, v);
    let gyv = ts.gy(y, v);
    let denom = gyy * gvv - gyv * gyv;
    if denom <= 1e-12 {
        return Err(Error::DegenerateFlag { denom });
    }
    let mut num = 0.0;
    for i in 0..d {
        for k in 0..d {
            num += ts.r_flag[(i, k)] * v[i] * v[k];
        }
    }
    Ok(num / denom)
}

#[derive(Debug, Clone, Copy)]
pub struct RicciValue {
    /// Trace form g^{ik} R_ik / G.
    pub value: f64,
    /// Independent orthonormal-frame sum of flag curvatures.
    pub frame_sum: f64,
}

impl RicciValue {
    pub fn cross_residual(&self) -> f64 {
        (self.value - self.frame_sum).abs() / 1.0f64.max(self.value.abs())
    }
}

/// Ricci curvature with its internal double-computation.
pub fn ricci(ts: &RealTensorSet) -> Result<RicciValue> {
    let d = ts.dim();
    let mut trace = 0.0;
    for i in 0..d {
        for k in 0..d {
            trace += ts.g_inv[(i, k)] * ts.r_flag[(i, k)];
        }
    }
    let value = trace / ts.g_value;
    let frame = crate::bridge::gy_orthonormal_frame(&ts.g, &ts.point.y)?;
    let mut frame_sum = 0.0;
    for e in frame.iter().take(d - 1) {
        frame_sum += flag_curvature(ts, e.as_slice())?;
    }
    Ok(RicciValue { value, frame_sum })
}

/// S-curvature of the metric at (p, y) for a volume measure: the rate of
/// change of the measure distortion along the geodesic through the point.
pub fn s_curvature(
    spec: &MetricSpec,
    p: &EvalPoint,
    measure: &crate::measure::VolumeMeasure,
) -> Result<f64> {
    crate::measure::s_curvature(spec, p, measure)
}

/// DVector helper for frames.
pub fn dvec(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}
