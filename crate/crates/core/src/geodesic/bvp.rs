//! Two-point geodesic boundary value problems by Newton shooting, and
//! the finite-difference route to the complex second derivative of the
//! distance function.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::ode::{integrate, OdeOptions, OdeStatus};
use super::{exp_map_flow, GeodesicControl};
use crate::error::{Error, Result};
use crate::jet::table::EvalPoint;
use crate::metric::MetricSpec;
use crate::real_engine;

#[derive(Debug, Clone, Copy)]
pub struct BvpControl {
    /// Position residual required of the shooting solve.
    pub tol: f64,
    pub max_iter: usize,
    /// Integrator tolerances (tight: the distance values feed second
    /// differences).
    pub rtol: f64,
    pub atol: f64,
}

impl Default for BvpControl {
    fn default() -> Self {
        BvpControl {
            tol: 1e-11,
            max_iter: 40,
            rtol: 1e-12,
            atol: 1e-14,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BvpSolution {
    /// Geodesic distance.
    pub r: f64,
    /// Unit initial velocity.
    pub y0_unit: Vec<f64>,
    /// Initial velocity scaled so exp over unit parameter lands on q.
    pub w: Vec<f64>,
    pub terminal_velocity: Vec<f64>,
    pub residual: f64,
    /// True when a conjugate-point scan certified local minimality.
    pub certified_minimal: bool,
}

fn geodesic_endpoint(
    spec: &MetricSpec,
    p: &[f64],
    w: &[f64],
    ctl: &BvpControl,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let d = 2 * spec.n;
    let gctl = GeodesicControl {
        rtol: ctl.rtol,
        atol: ctl.atol,
        max_step: Some(1.0 / 24.0),
        curvature_nodes: 33,
    };
    let sol = exp_map_flow(spec, p, w, 1.0, &gctl)?;
    if sol.status != OdeStatus::Complete {
        return Err(Error::ChartExit { t: sol.t_end() });
    }
    let end = sol.states.last().unwrap();
    Ok((end[..d].to_vec(), end[d..2 * d].to_vec()))
}

/// Endpoint plus the derivative of the endpoint with respect to the
/// initial velocity (variational system along the geodesic).
fn geodesic_endpoint_with_jacobian(
    spec: &MetricSpec,
    p: &[f64],
    w: &[f64],
    ctl: &BvpControl,
) -> Result<(Vec<f64>, Vec<f64>, DMatrix<f64>)> {
    let d = 2 * spec.n;
    let rhs = |_t: f64, state: &[f64], out: &mut [f64]| -> Result<()> {
        let (x, rest) = state.split_at(d);
        let (v, phi_all) = rest.split_at(d);
        let (vals, dx, dy) = real_engine::spray_jacobians(spec, x, v)?;
        out[..d].copy_from_slice(v);
        for i in 0..d {
            out[d + i] = -2.0 * vals[i];
        }
        let (phi, phidot) = phi_all.split_at(d * d);
        // d/dt phi = phidot; d/dt phidot = -2 (dG/dx phi + dG/dy phidot)
        for idx in 0..d * d {
            out[2 * d + idx] = phidot[idx];
        }
        for i in 0..d {
            for j in 0..d {
                let mut acc = 0.0;
                for s in 0..d {
                    acc += dx[(i, s)] * phi[s * d + j] + dy[(i, s)] * phidot[s * d + j];
                }
                out[2 * d + d * d + i * d + j] = -2.0 * acc;
            }
        }
        Ok(())
    };
    let mut state = vec![0.0; 2 * d + 2 * d * d];
    state[..d].copy_from_slice(p);
    state[d..2 * d].copy_from_slice(w);
    for i in 0..d {
        state[2 * d + d * d + i * d + i] = 1.0;
    }
    let opts = OdeOptions {
        rtol: ctl.rtol.max(1e-11),
        atol: ctl.atol.max(1e-13),
        h_max: 1.0 / 24.0,
        max_steps: 200_000,
    };
    let guard = |s: &[f64]| spec.domain.contains_x(&s[..d]);
    let sol = integrate(&rhs, 0.0, &state, 1.0, &opts, Some(&guard))?;
    if sol.status != OdeStatus::Complete {
        return Err(Error::ChartExit { t: sol.t_end() });
    }
    let end = sol.states.last().unwrap();
    let jac = DMatrix::from_fn(d, d, |i, j| end[2 * d + i * d + j]);
    Ok((end[..d].to_vec(), end[d..2 * d].to_vec(), jac))
}

/// Shooting solve of exp_p(w) = q with multi-start. Returns the distance
/// and the unit initial velocity; `certify` additionally scans for
/// conjugate points on the found segment.
pub fn distance_bvp(
    spec: &MetricSpec,
    p: &[f64],
    q: &[f64],
    ctl: &BvpControl,
    certify: bool,
) -> Result<BvpSolution> {
    let d = 2 * spec.n;
    let straight: Vec<f64> = (0..d).map(|i| q[i] - p[i]).collect();
    let starts: Vec<Vec<f64>> = vec![
        straight.clone(),
        straight.iter().map(|c| c * 0.5).collect(),
        straight.iter().map(|c| c * 1.5).collect(),
        straight.iter().map(|c| c * 0.75).collect(),
        straight.iter().map(|c| c * 2.0).collect(),
    ];
    let mut tried = 0usize;
    for w0 in &starts {
        tried += 1;
        match newton_solve(spec, p, q, w0, ctl, None) {
            Ok(sol) => {
                let mut sol = sol;
                if certify {
                    sol.certified_minimal = certify_no_conjugate(spec, p, &sol)?;
                }
                return Ok(sol);
            }
            Err(_) => continue,
        }
    }
    Err(Error::NoConvergence { starts: tried })
}

/// Newton iteration; when `frozen` carries a Jacobian it is reused
/// (cheap warm-started solves in finite-difference clusters).
fn newton_solve(
    spec: &MetricSpec,
    p: &[f64],
    q: &[f64],
    w0: &[f64],
    ctl: &BvpControl,
    frozen: Option<&DMatrix<f64>>,
) -> Result<BvpSolution> {
    let d = 2 * spec.n;
    let mut w = w0.to_vec();
    let mut jac: Option<DMatrix<f64>> = frozen.cloned();
    let mut last_residual = f64::INFINITY;
    for iter in 0..ctl.max_iter {
        let (endpoint, terminal_v) = if jac.is_none() {
            let (e, tv, j) = geodesic_endpoint_with_jacobian(spec, p, &w, ctl)?;
            jac = Some(j);
            (e, tv)
        } else {
            geodesic_endpoint(spec, p, &w, ctl)?
        };
        let res: DVector<f64> = DVector::from_fn(d, |i, _| endpoint[i] - q[i]);
        let rnorm = res.norm();
        if rnorm < ctl.tol {
            let r = spec.f(p, &w)?;
            return Ok(BvpSolution {
                r,
                y0_unit: w.iter().map(|c| c / r).collect(),
                w,
                terminal_velocity: terminal_v,
                residual: rnorm,
                certified_minimal: false,
            });
        }
        // refresh the Jacobian if convergence stalls
        if rnorm > 0.5 * last_residual && iter > 0 && frozen.is_none() {
            let (_, _, j) = geodesic_endpoint_with_jacobian(spec, p, &w, ctl)?;
            jac = Some(j);
        }
        last_residual = rnorm;
        let j = jac.as_ref().unwrap();
        let step = j
            .clone()
            .lu()
            .solve(&res)
            .ok_or_else(|| Error::Eval("singular shooting Jacobian".into()))?;
        for i in 0..d {
            w[i] -= step[i];
        }
    }
    Err(Error::NoConvergence { starts: 1 })
}

fn certify_no_conjugate(spec: &MetricSpec, p: &[f64], sol: &BvpSolution) -> Result<bool> {
    let ctl = GeodesicControl::default();
    let framed = super::integrate_framed(spec, p, &sol.y0_unit, sol.r, &ctl)?;
    let jd = super::jacobi_matrix(&framed, &ctl)?;
    Ok(super::conjugate_point(&jd, sol.r).is_none())
}

/// Distance r(x) = d(p, x) evaluated by a warm-started frozen-Jacobian
/// shooting solve (used inside finite-difference stencils).
struct DistanceSampler<'a> {
    spec: &'a MetricSpec,
    p: &'a [f64],
    ctl: BvpControl,
    jac: DMatrix<f64>,
    w_center: Vec<f64>,
}

impl<'a> DistanceSampler<'a> {
    fn eval(&self, q: &[f64]) -> Result<f64> {
        let sol = newton_solve(self.spec, self.p, q, &self.w_center, &self.ctl, Some(&self.jac))?;
        Ok(sol.r)
    }
}

/// Complex second derivative of the distance function along the radial
/// complex direction, by finite differences of shooting distances:
///
///   r11 = T_o^a T_o^b d2r/dz^a dz^b - 2 spray_c^a(T_o) dr/dz^a
///
/// The first term is the holomorphic directional second derivative
/// along c = T_o, realized as (1/4)(d_ss - d_tt - 2i d_st) of
/// psi(s, t) = r(q + s*c_R + t*Jc_R); the gradient term is a directional
/// first derivative along the complex spray vector.
pub fn r11_direct(spec: &MetricSpec, p: &[f64], q: &[f64]) -> Result<Complex64> {
    let d = 2 * spec.n;
    let ctl = BvpControl::default();
    let center = distance_bvp(spec, p, q, &ctl, true)?;
    if !center.certified_minimal {
        return Err(Error::ConjugateReached {
            t_star: center.r,
            r: center.r,
        });
    }
    // Jacobian at the center for frozen-Newton warm starts.
    let (_, _, jac) = geodesic_endpoint_with_jacobian(spec, p, &center.w, &ctl)?;
    let sampler = DistanceSampler {
        spec,
        p,
        ctl,
        jac,
        w_center: center.w.clone(),
    };
    // T = grad r at q: the terminal velocity renormalized to unit speed
    // (the shooting parametrization carries F = r).
    let f_term = spec.f(q, &center.terminal_velocity)?;
    let t_dir: Vec<f64> = center
        .terminal_velocity
        .iter()
        .map(|c| c / f_term)
        .collect();
    let jt_dir = crate::bridge::apply_j(&t_dir);
    let psi = |s: f64, t: f64| -> Result<f64> {
        let mut x = q.to_vec();
        for i in 0..d {
            x[i] += s * t_dir[i] + t * jt_dir[i];
        }
        sampler.eval(&x)
    };
    let h = (center.r * 5e-3).max(1e-4);
    let second = |f: &dyn Fn(f64) -> Result<f64>, h: f64| -> Result<f64> {
        Ok((f(h)? - 2.0 * f(0.0)? + f(-h)?) / (h * h))
    };
    let richardson2 = |f: &dyn Fn(f64) -> Result<f64>| -> Result<f64> {
        let coarse = second(f, h)?;
        let fine = second(f, h / 2.0)?;
        Ok((4.0 * fine - coarse) / 3.0)
    };
    let d_ss = richardson2(&|s| psi(s, 0.0))?;
    let d_tt = richardson2(&|t| psi(0.0, t))?;
    let cross = |h: f64| -> Result<f64> {
        Ok((psi(h, h)? - psi(h, -h)? - psi(-h, h)? + psi(-h, -h)?) / (4.0 * h * h))
    };
    let d_st = (4.0 * cross(h / 2.0)? - cross(h)?) / 3.0;
    let second_term = 0.25 * Complex64::new(d_ss - d_tt, -2.0 * d_st);
    // Gradient term: directional derivative along the complex spray at
    // (q, T_o).
    let cts = crate::complex_engine::complex_tensors(
        spec,
        &EvalPoint {
            x: q.to_vec(),
            y: t_dir.clone(),
        },
    )?;
    let spray_c = cts.spray.clone();
    let spray_norm: f64 = spray_c.iter().map(|c| c.norm()).sum();
    let grad_term = if spray_norm < 1e-14 {
        Complex64::ZERO
    } else {
        // real direction pair of the complex vector spray_c
        let mut a_dir = vec![0.0; d];
        for alpha in 0..spec.n {
            a_dir[alpha] = spray_c[alpha].re;
            a_dir[spec.n + alpha] = spray_c[alpha].im;
        }
        let b_dir = crate::bridge::apply_j(&a_dir);
        let phi = |s: f64, dir: &[f64]| -> Result<f64> {
            let mut x = q.to_vec();
            for i in 0..d {
                x[i] += s * dir[i];
            }
            sampler.eval(&x)
        };
        let first = |dir: &[f64]| -> Result<f64> {
            let g = |h: f64| -> Result<f64> { Ok((phi(h, dir)? - phi(-h, dir)?) / (2.0 * h)) };
            Ok((4.0 * g(h / 2.0)? - g(h)?) / 3.0)
        };
        let ds = first(&a_dir)?;
        let dt = first(&b_dir)?;
        // sum_a spray^a dr/dz^a = (d_s - i d_t)/2 of r along spray_c
        0.5 * Complex64::new(ds, -dt)
    };
    Ok(second_term - 2.0 * grad_term)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::catalog_get;

    #[test]
    fn euclidean_distance_is_straight_line() {
        let spec = catalog_get("euclidean", &[2.0]).unwrap();
        let p = [0.0; 4];
        let q = [1.0, 0.0, 0.0, 0.0];
        let sol = distance_bvp(&spec, &p, &q, &BvpControl::default(), true).unwrap();
        assert!((sol.r - 1.0).abs() < 1e-10);
        assert!((sol.y0_unit[0] - 1.0).abs() < 1e-9);
        assert!(sol.certified_minimal);
    }

    #[test]
    fn fubini_study_distance_is_arctan() {
        let spec = catalog_get("fubini_study", &[1.0]).unwrap();
        let p = [0.0, 0.0];
        let q = [1.0, 0.0];
        let sol = distance_bvp(&spec, &p, &q, &BvpControl::default(), false).unwrap();
        assert!(
            (sol.r - std::f64::consts::FRAC_PI_4).abs() < 1e-9,
            "r = {}",
            sol.r
        );
    }

    #[test]
    fn hyperbolic_distance_is_artanh() {
        let spec = catalog_get("complex_hyperbolic", &[1.0]).unwrap();
        let p = [0.0, 0.0];
        let q = [0.5, 0.0];
        let sol = distance_bvp(&spec, &p, &q, &BvpControl::default(), false).unwrap();
        assert!((sol.r - 0.5f64.atanh()).abs() < 1e-9, "r = {}", sol.r);
    }

    #[test]
    fn euclidean_r11_closed_form() {
        // r11 = -1/(4r) in the flat case
        let spec = catalog_get("euclidean", &[1.0]).unwrap();
        let p = [0.0, 0.0];
        let q = [1.0, 0.0];
        let r11 = r11_direct(&spec, &p, &q).unwrap();
        assert!((r11.re + 0.25).abs() < 1e-4, "r11 = {r11}");
        assert!(r11.im.abs() < 1e-4);
    }
}
