//! Geodesics, parallel frames, Jacobi fields, index forms and distance
//! Hessians.

pub mod bvp;
pub mod compare;
pub mod ode;
pub mod riccati;
pub mod spline;

use nalgebra::{DMatrix, DVector};

use crate::bridge;
use crate::error::{Error, Result};
use crate::jet::table::EvalPoint;
use crate::metric::MetricSpec;
use crate::real_engine;
use ode::{integrate, OdeOptions, OdeSolution, OdeStatus};
use spline::UniformSpline;

#[derive(Debug, Clone, Copy)]
pub struct GeodesicControl {
    pub rtol: f64,
    pub atol: f64,
    /// Cap on the integrator step (keeps dense output sharp); `None`
    /// picks length/32.
    pub max_step: Option<f64>,
    /// Curvature sample nodes along the path for the Jacobi equation.
    pub curvature_nodes: usize,
}

impl Default for GeodesicControl {
    fn default() -> Self {
        GeodesicControl {
            rtol: 1e-10,
            atol: 1e-12,
            max_step: None,
            curvature_nodes: 65,
        }
    }
}

impl GeodesicControl {
    fn ode_options(&self, len: f64) -> OdeOptions {
        OdeOptions {
            rtol: self.rtol,
            atol: self.atol,
            h_max: self.max_step.unwrap_or(len / 32.0),
            max_steps: 200_000,
        }
    }
}

/// Exponential-map integration: raw geodesic flow from (x0, w), not
/// necessarily unit speed, over parameter time `t_end`.
pub fn exp_map_flow(
    spec: &MetricSpec,
    x0: &[f64],
    w: &[f64],
    t_end: f64,
    ctl: &GeodesicControl,
) -> Result<OdeSolution> {
    let d = 2 * spec.n;
    let rhs = |_t: f64, state: &[f64], out: &mut [f64]| -> Result<()> {
        let (x, v) = state.split_at(d);
        let spray = real_engine::spray_values(spec, x, v)?;
        out[..d].copy_from_slice(v);
        for i in 0..d {
            out[d + i] = -2.0 * spray[i];
        }
        Ok(())
    };
    let mut state = Vec::with_capacity(2 * d);
    state.extend_from_slice(x0);
    state.extend_from_slice(w);
    let guard = |s: &[f64]| spec.domain.contains_x(&s[..d]);
    integrate(&rhs, 0.0, &state, t_end, &ctl.ode_options(t_end), Some(&guard))
}

/// A sampled unit-speed geodesic with dense interpolation.
pub struct GeodesicPath {
    pub spec: MetricSpec,
    pub x0: Vec<f64>,
    pub y0: Vec<f64>,
    /// Requested length.
    pub length: f64,
    /// Parameter actually covered (shorter iff the chart was left).
    pub reached: f64,
    pub chart_exit: bool,
    sol: OdeSolution,
}

impl GeodesicPath {
    pub fn dim(&self) -> usize {
        2 * self.spec.n
    }

    pub fn state(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        let d = self.dim();
        let s = self.sol.state_at(t);
        (s[..d].to_vec(), s[d..2 * d].to_vec())
    }

    pub fn accepted_times(&self) -> &[f64] {
        &self.sol.ts
    }

    /// Max |F(velocity) - 1| over uniformly sampled times.
    pub fn unit_speed_drift(&self, samples: usize) -> Result<f64> {
        let mut worst = 0.0f64;
        for k in 0..=samples {
            let t = self.reached * k as f64 / samples as f64;
            let (x, v) = self.state(t);
            worst = worst.max((self.spec.f(&x, &v)? - 1.0).abs());
        }
        Ok(worst)
    }

    /// Max |v' + 2 spray| over sampled interior times, comparing the
    /// derivative of the dense interpolant with the right-hand side.
    pub fn geodesic_residual(&self, samples: usize) -> Result<f64> {
        let d = self.dim();
        let mut state = vec![0.0; 2 * d];
        let mut deriv = vec![0.0; 2 * d];
        let mut worst = 0.0f64;
        for k in 1..samples {
            let t = self.reached * (k as f64 + 0.5) / samples as f64;
            if t >= self.reached {
                break;
            }
            self.sol.eval_with_derivative(t, &mut state, &mut deriv);
            let spray = real_engine::spray_values(&self.spec, &state[..d], &state[d..])?;
            for i in 0..d {
                worst = worst.max((deriv[d + i] + 2.0 * spray[i]).abs());
            }
        }
        Ok(worst)
    }

    /// CSV rows `t, x_1.., x_2n, v_1.., v_2n` at the accepted steps.
    pub fn write_csv(&self, out: &mut dyn std::io::Write) -> Result<()> {
        let d = self.dim();
        write!(out, "t")?;
        for i in 1..=d {
            write!(out, ",x{i}")?;
        }
        for i in 1..=d {
            write!(out, ",xdot{i}")?;
        }
        writeln!(out)?;
        for (t, s) in self.sol.ts.iter().zip(&self.sol.states) {
            write!(out, "{t}")?;
            for v in &s[..2 * d] {
                write!(out, ",{v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Integrate a unit-speed geodesic. The initial velocity is renormalized
/// when within 1e-6 of unit norm, rejected otherwise.
pub fn integrate_geodesic(
    spec: &MetricSpec,
    x0: &[f64],
    y0: &[f64],
    length: f64,
    ctl: &GeodesicControl,
) -> Result<GeodesicPath> {
    if length <= 0.0 {
        return Err(Error::Eval("geodesic length must be positive".into()));
    }
    let f0 = spec.f(x0, y0)?;
    if (f0 - 1.0).abs() > 1e-6 {
        return Err(Error::Eval(format!(
            "initial velocity has F = {f0}, more than 1e-6 from unit speed"
        )));
    }
    let y_unit: Vec<f64> = y0.iter().map(|c| c / f0).collect();
    let sol = exp_map_flow(spec, x0, &y_unit, length, ctl)?;
    let (reached, chart_exit) = match sol.status {
        OdeStatus::Complete => (length, false),
        OdeStatus::GuardStop { t } => (t, true),
    };
    Ok(GeodesicPath {
        spec: spec.clone(),
        x0: x0.to_vec(),
        y0: y_unit,
        length,
        reached,
        chart_exit,
        sol,
    })
}

/// A geodesic together with a parallel orthonormal frame
/// `[E_1 .. E_{2n-2}, V = J T, T]` transported along it.
pub struct FramedPath {
    pub spec: MetricSpec,
    pub x0: Vec<f64>,
    pub y0: Vec<f64>,
    pub length: f64,
    pub reached: f64,
    pub chart_exit: bool,
    pub frame0: Vec<DVector<f64>>,
    sol: OdeSolution,
}

impl FramedPath {
    pub fn dim(&self) -> usize {
        2 * self.spec.n
    }

    /// Index of V = JT within the frame (last perpendicular slot).
    pub fn v_index(&self) -> usize {
        self.dim() - 2
    }

    pub fn state(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        let d = self.dim();
        let s = self.sol.state_at(t);
        (s[..d].to_vec(), s[d..2 * d].to_vec())
    }

    /// Frame columns at parameter t.
    pub fn frame(&self, t: f64) -> Vec<DVector<f64>> {
        let d = self.dim();
        let s = self.sol.state_at(t);
        (0..d)
            .map(|a| DVector::from_column_slice(&s[2 * d + a * d..2 * d + (a + 1) * d]))
            .collect()
    }

    /// Max |E^T g E - I| over sampled times (orthonormality drift).
    pub fn orthonormality_drift(&self, samples: usize) -> Result<f64> {
        let d = self.dim();
        let mut worst = 0.0f64;
        for k in 0..=samples {
            let t = self.reached * k as f64 / samples as f64;
            let (x, v) = self.state(t);
            let table = crate::jet::table::eval_partials(
                &self.spec,
                &EvalPoint { x, y: v },
                2,
                0,
            )?;
            let (g, _, _) = real_engine::fundamental_tensor(&table)?;
            let frame = self.frame(t);
            for a in 0..d {
                for b in 0..d {
                    let dot = (frame[a].transpose() * &g * &frame[b])[(0, 0)];
                    let expect = if a == b { 1.0 } else { 0.0 };
                    worst = worst.max((dot - expect).abs());
                }
            }
        }
        Ok(worst)
    }
}

/// Integrate geodesic + parallel frame as one augmented system.
pub fn integrate_framed(
    spec: &MetricSpec,
    x0: &[f64],
    y0: &[f64],
    length: f64,
    ctl: &GeodesicControl,
) -> Result<FramedPath> {
    let f0 = spec.f(x0, y0)?;
    if (f0 - 1.0).abs() > 1e-6 {
        return Err(Error::Eval(format!(
            "initial velocity has F = {f0}, more than 1e-6 from unit speed"
        )));
    }
    let y_unit: Vec<f64> = y0.iter().map(|c| c / f0).collect();
    let d = 2 * spec.n;
    let table = crate::jet::table::eval_partials(
        spec,
        &EvalPoint {
            x: x0.to_vec(),
            y: y_unit.clone(),
        },
        2,
        0,
    )?;
    let (g0, _, _) = real_engine::fundamental_tensor(&table)?;
    let frame0 = bridge::gy_orthonormal_frame(&g0, &y_unit)?;
    let rhs = |_t: f64, state: &[f64], out: &mut [f64]| -> Result<()> {
        let (x, rest) = state.split_at(d);
        let (v, frame_flat) = rest.split_at(d);
        let (spray, nconn) = real_engine::spray_and_connection(spec, x, v)?;
        out[..d].copy_from_slice(v);
        for i in 0..d {
            out[d + i] = -2.0 * spray[i];
        }
        // D_T E = 0: Edot^k = -N^k_j E^j
        for a in 0..d {
            let e = &frame_flat[a * d..(a + 1) * d];
            for k in 0..d {
                let mut acc = 0.0;
                for j in 0..d {
                    acc -= nconn[(k, j)] * e[j];
                }
                out[2 * d + a * d + k] = acc;
            }
        }
        Ok(())
    };
    let mut state = Vec::with_capacity(2 * d + d * d);
    state.extend_from_slice(x0);
    state.extend_from_slice(&y_unit);
    for e in &frame0 {
        state.extend(e.iter());
    }
    let guard = |s: &[f64]| spec.domain.contains_x(&s[..d]);
    let sol = integrate(
        &rhs,
        0.0,
        &state,
        length,
        &ctl.ode_options(length),
        Some(&guard),
    )?;
    let (reached, chart_exit) = match sol.status {
        OdeStatus::Complete => (length, false),
        OdeStatus::GuardStop { t } => (t, true),
    };
    Ok(FramedPath {
        spec: spec.clone(),
        x0: x0.to_vec(),
        y0: y_unit,
        length,
        reached,
        chart_exit,
        frame0,
        sol,
    })
}

/// Parallel-transport a single vector along a geodesic (D^T_T X = 0).
pub fn parallel_transport(
    path: &GeodesicPath,
    x_init: &[f64],
    t_end: f64,
) -> Result<Vec<f64>> {
    let d = path.dim();
    let spec = &path.spec;
    let rhs = |t: f64, state: &[f64], out: &mut [f64]| -> Result<()> {
        let (x, v) = path.state(t);
        let nconn = real_engine::nonlinear_connection(spec, &x, &v)?;
        for k in 0..d {
            let mut acc = 0.0;
            for j in 0..d {
                acc -= nconn[(k, j)] * state[j];
            }
            out[k] = acc;
        }
        Ok(())
    };
    let opts = OdeOptions {
        rtol: 1e-10,
        atol: 1e-12,
        h_max: t_end / 16.0,
        max_steps: 100_000,
    };
    let sol = integrate(&rhs, 0.0, x_init, t_end, &opts, None)?;
    Ok(sol.states.last().unwrap().clone())
}

// ------------------------------------------------------------------
// Jacobi equation in the parallel frame

/// Matrix Jacobi solution A(t) on the T-orthogonal frame block with
/// A(0) = 0, A'(0) = I, plus the interpolated curvature operator.
pub struct JacobiData {
    /// 2n - 1.
    pub dim_perp: usize,
    pub t_max: f64,
    /// Curvature operator spline in the full frame (row-major 2n x 2n).
    k_splines: Vec<UniformSpline>,
    dim_full: usize,
    sol: OdeSolution,
}

impl JacobiData {
    pub fn k_full(&self, t: f64) -> DMatrix<f64> {
        let d = self.dim_full;
        DMatrix::from_fn(d, d, |i, j| self.k_splines[i * d + j].eval(t))
    }

    pub fn k_perp(&self, t: f64) -> DMatrix<f64> {
        let p = self.dim_perp;
        let full = self.k_full(t);
        DMatrix::from_fn(p, p, |i, j| full[(i, j)])
    }

    pub fn a(&self, t: f64) -> DMatrix<f64> {
        let p = self.dim_perp;
        let s = self.sol.state_at(t);
        DMatrix::from_fn(p, p, |i, j| s[i * p + j])
    }

    pub fn a_prime(&self, t: f64) -> DMatrix<f64> {
        let p = self.dim_perp;
        let s = self.sol.state_at(t);
        DMatrix::from_fn(p, p, |i, j| s[p * p + i * p + j])
    }

    pub fn det_a(&self, t: f64) -> f64 {
        self.a(t).determinant()
    }

    /// Max |A'^T A - A^T A'| at t (self-adjointness of the Jacobi flow).
    pub fn wronskian_residual(&self, t: f64) -> f64 {
        let a = self.a(t);
        let ap = self.a_prime(t);
        let w = ap.transpose() * &a - a.transpose() * &ap;
        w.amax()
    }

    /// Radial Hessian matrix S(t) = A'(t) A(t)^{-1} with a condition
    /// guard on A.
    pub fn s_matrix(&self, t: f64) -> Result<DMatrix<f64>> {
        let a = self.a(t);
        let svd = a.clone().svd(false, false);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if smin <= 0.0 || smax / smin > 1e10 {
            return Err(Error::IllConditioned {
                r: t,
                cond: if smin > 0.0 { smax / smin } else { f64::INFINITY },
            });
        }
        let inv = a
            .try_inverse()
            .ok_or(Error::IllConditioned { r: t, cond: f64::INFINITY })?;
        Ok(self.a_prime(t) * inv)
    }
}

/// Solve the matrix Jacobi equation along a framed geodesic.
pub fn jacobi_matrix(framed: &FramedPath, ctl: &GeodesicControl) -> Result<JacobiData> {
    let d = framed.dim();
    let p = d - 1;
    let t_max = framed.reached;
    let nodes = ctl.curvature_nodes.max(9);
    let dt = t_max / (nodes - 1) as f64;
    // curvature operator in the frame at the sample nodes
    let mut k_vals = vec![Vec::with_capacity(nodes); d * d];
    for k in 0..nodes {
        let t = dt * k as f64;
        let (x, v) = framed.state(t);
        let ts = real_engine::real_tensors(&framed.spec, &EvalPoint { x, y: v })?;
        let frame = framed.frame(t);
        for a in 0..d {
            let re = &ts.r_flag * &frame[a];
            for b in 0..d {
                // K_{ba} = g-free contraction R_ik E_b^i E_a^k
                let val = (frame[b].transpose() * &re)[(0, 0)];
                k_vals[b * d + a].push(val);
            }
        }
    }
    let k_splines: Vec<UniformSpline> = k_vals
        .into_iter()
        .map(|vals| UniformSpline::new(0.0, dt, vals))
        .collect();
    let sol = {
        let rhs = |t: f64, state: &[f64], out: &mut [f64]| -> Result<()> {
            let (a, ap) = state.split_at(p * p);
            out[..p * p].copy_from_slice(ap);
            for i in 0..p {
                for j in 0..p {
                    let mut acc = 0.0;
                    for s in 0..p {
                        acc -= k_splines[i * d + s].eval(t) * a[s * p + j];
                    }
                    out[p * p + i * p + j] = acc;
                }
            }
            Ok(())
        };
        let mut state0 = vec![0.0; 2 * p * p];
        for i in 0..p {
            state0[p * p + i * p + i] = 1.0;
        }
        let opts = OdeOptions {
            rtol: ctl.rtol,
            atol: ctl.atol,
            h_max: t_max / 32.0,
            max_steps: 200_000,
        };
        integrate(&rhs, 0.0, &state0, t_max, &opts, None)?
    };
    Ok(JacobiData {
        dim_perp: p,
        t_max,
        k_splines,
        dim_full: d,
        sol,
    })
}

/// First parameter with det A = 0 strictly after 0, by sign-change
/// bracketing and bisection.
pub fn conjugate_point(jd: &JacobiData, t_max: f64) -> Option<f64> {
    let t_max = t_max.min(jd.t_max);
    let grid = 512;
    let t_first = (t_max / grid as f64).max(1e-6);
    let mut prev_t = t_first;
    let mut prev = jd.det_a(prev_t);
    for k in 2..=grid {
        let t = t_first + (t_max - t_first) * (k - 1) as f64 / (grid - 1) as f64;
        let cur = jd.det_a(t);
        if prev > 0.0 && cur <= 0.0 {
            // bisect
            let (mut lo, mut hi) = (prev_t, t);
            for _ in 0..64 {
                let mid = 0.5 * (lo + hi);
                if jd.det_a(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo < 1e-10 {
                    break;
                }
            }
            return Some(0.5 * (lo + hi));
        }
        prev = cur;
        prev_t = t;
    }
    None
}

// ------------------------------------------------------------------
// Index forms and the distance Hessian

/// Adaptive Simpson quadrature.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(a: f64, fa: f64, b: f64, fb: f64, fm: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fb: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: usize,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(a, fa, m, fm, flm);
        let right = simpson(m, fm, b, fb, frm);
        if depth == 0 || (left + right - whole).abs() < 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            rec(f, a, m, fa, fm, flm, left, tol / 2.0, depth - 1)
                + rec(f, m, b, fm, fb, frm, right, tol / 2.0, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(a, fa, b, fb, fm);
    rec(f, a, b, fa, fb, fm, whole, tol, 24)
}

/// Index form of a vector field given by frame components
/// `w(t) -> (components, d/dt components)` over the full frame. A
/// component along T is dropped (the orthogonal reduction).
pub fn index_form(jd: &JacobiData, w: &dyn Fn(f64) -> (DVector<f64>, DVector<f64>), t_end: f64) -> f64 {
    let p = jd.dim_perp;
    let integrand = |t: f64| -> f64 {
        let (wv, wd) = w(t);
        let kp = jd.k_perp(t);
        let mut kinetic = 0.0;
        for a in 0..p {
            kinetic += wd[a] * wd[a];
        }
        let mut curvature = 0.0;
        for a in 0..p {
            for b in 0..p {
                curvature += kp[(a, b)] * wv[a] * wv[b];
            }
        }
        kinetic - curvature
    };
    adaptive_simpson(&integrand, 0.0, t_end, 1e-8)
}

/// Distance-function Hessian data at radius r along a radial geodesic.
#[derive(Debug, Clone)]
pub struct DistanceProbe {
    pub r: f64,
    /// Full-frame Hessian (T row/column identically zero).
    pub hessian: DMatrix<f64>,
    pub box_full: f64,
    pub box_perp: f64,
    pub h_vv: f64,
    /// -H(r)(V,V)/4, the Hessian-route value of the complex second
    /// derivative of r.
    pub r11_via_hessian: f64,
    /// Max deviation between the Riccati route and the index-form route
    /// on the diagonal.
    pub index_route_dev: f64,
    pub condition: f64,
}

/// Hessian of the distance function on the perpendicular frame via
/// A'(r) A(r)^{-1}, cross-checked against the index form with
/// boundary-matched Jacobi fields.
pub fn distance_hessian(jd: &JacobiData, r: f64) -> Result<DistanceProbe> {
    if let Some(t_star) = conjugate_point(jd, r + 1e-9) {
        if t_star <= r {
            return Err(Error::ConjugateReached { t_star, r });
        }
    }
    let p = jd.dim_perp;
    let a = jd.a(r);
    let svd = a.clone().svd(false, false);
    let cond = svd.singular_values.max() / svd.singular_values.min().max(1e-300);
    let s = jd.s_matrix(r)?;
    let box_perp_plus_v = s.trace();
    let vix = p - 1;
    let h_vv = s[(vix, vix)];
    let box_perp = box_perp_plus_v - h_vv;
    let box_full = box_perp_plus_v; // H(T,T) = 0 exactly
    // index-form route with boundary-matched Jacobi fields
    let a_inv = a.clone().try_inverse().ok_or(Error::IllConditioned {
        r,
        cond: f64::INFINITY,
    })?;
    let mut dev = 0.0f64;
    for i in 0..p {
        let mut e = DVector::zeros(p);
        e[i] = 1.0;
        let c = &a_inv * e;
        let integrand = |t: f64| -> f64 {
            let at = jd.a(t);
            let apt = jd.a_prime(t);
            let j = &at * &c;
            let jp = &apt * &c;
            let kp = jd.k_perp(t);
            let mut acc = 0.0;
            for u in 0..p {
                acc += jp[u] * jp[u];
            }
            for u in 0..p {
                for w in 0..p {
                    acc -= kp[(u, w)] * j[u] * j[w];
                }
            }
            acc
        };
        let i_form = adaptive_simpson(&integrand, 0.0, r, 1e-9);
        dev = dev.max((i_form - s[(i, i)]).abs());
    }
    let d = p + 1;
    let mut hessian = DMatrix::zeros(d, d);
    for i in 0..p {
        for j in 0..p {
            hessian[(i, j)] = s[(i, j)];
        }
    }
    Ok(DistanceProbe {
        r,
        hessian,
        box_full,
        box_perp,
        h_vv,
        r11_via_hessian: -h_vv / 4.0,
        index_route_dev: dev,
        condition: cond,
    })
}
