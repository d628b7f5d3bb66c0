//! Scalar Riccati profile of the radial Hessian component H(r)(V,V)/4
//! along a geodesic, with the inequality and limit checks that drive the
//! Hessian comparison estimate.

use crate::error::{Error, Result};
use crate::jet::table::EvalPoint;
use crate::metric::MetricSpec;

use super::compare::ct_lambda;
use super::{FramedPath, JacobiData};

#[derive(Debug, Clone)]
pub struct RiccatiProfile {
    pub ts: Vec<f64>,
    /// f(t) = H(r)(V,V)/4 sampled along the path.
    pub f: Vec<f64>,
    /// f'(t) from the exact Riccati identity S' = -S^2 - K.
    pub f_prime: Vec<f64>,
    /// Holomorphic curvature at (gamma(t), T(t)).
    pub h_holo: Vec<f64>,
    /// max over samples of 4 f^2 + f' + H/4 (must be <= tolerance).
    pub inequality_excess: f64,
    /// Extrapolated limit of t f(t) as t -> 0+ (should be 1/4).
    pub tf_limit: f64,
    /// max over samples of f(t) - ct_lambda(2t)/2 when a lambda with
    /// H >= 4 lambda holds on the path.
    pub bound_excess: Option<f64>,
    pub kahler_strong_max: f64,
}

/// Sample the Riccati profile along a framed geodesic. Requires the
/// metric to satisfy the strong Kahler symmetry along the path (residual
/// below 1e-8); the optional `lambda` enables the closed-form bound
/// check f(t) <= ct_lambda(2t)/2.
pub fn riccati_probe(
    spec: &MetricSpec,
    framed: &FramedPath,
    jd: &JacobiData,
    lambda: Option<f64>,
) -> Result<RiccatiProfile> {
    let t_end = framed.reached;
    let samples = 33usize;
    let t0 = (t_end * 0.02).max(0.02).min(t_end * 0.5);
    let vix = jd.dim_perp - 1;
    let mut ts = Vec::with_capacity(samples);
    let mut f = Vec::with_capacity(samples);
    let mut fp = Vec::with_capacity(samples);
    let mut h_holo = Vec::with_capacity(samples);
    let mut kahler_strong_max = 0.0f64;
    for k in 0..samples {
        let t = t0 + (t_end - t0) * k as f64 / (samples - 1) as f64;
        let s = jd.s_matrix(t)?;
        let kperp = jd.k_perp(t);
        let (x, v) = framed.state(t);
        let cts = crate::complex_engine::complex_tensors(spec, &EvalPoint { x, y: v })?;
        kahler_strong_max = kahler_strong_max.max(cts.kahler_strong);
        let s2 = &s * &s;
        ts.push(t);
        f.push(s[(vix, vix)] / 4.0);
        fp.push(-(s2[(vix, vix)] + kperp[(vix, vix)]) / 4.0);
        h_holo.push(cts.holomorphic);
    }
    if kahler_strong_max >= 1e-8 {
        return Err(Error::KahlerHypothesisViolated {
            residual: kahler_strong_max,
        });
    }
    let mut inequality_excess = f64::NEG_INFINITY;
    for k in 0..samples {
        inequality_excess = inequality_excess.max(4.0 * f[k] * f[k] + fp[k] + h_holo[k] / 4.0);
    }
    // t f(t) -> 1/4 by Richardson extrapolation in t^2 from two small
    // parameters.
    let small = (t_end * 0.02).max(5e-3);
    let tf = |t: f64| -> Result<f64> {
        let s = jd.s_matrix(t)?;
        Ok(t * s[(vix, vix)] / 4.0)
    };
    let w1 = tf(small)?;
    let w2 = tf(small / 2.0)?;
    let tf_limit = (4.0 * w2 - w1) / 3.0;
    let bound_excess = match lambda {
        None => None,
        Some(l) => {
            let mut worst = f64::NEG_INFINITY;
            for k in 0..samples {
                match ct_lambda(l, 2.0 * ts[k]) {
                    Ok(ct) => worst = worst.max(f[k] - 0.5 * ct),
                    Err(Error::PoleAt { .. }) => continue,
                    Err(e) => return Err(e),
                }
            }
            Some(worst)
        }
    };
    Ok(RiccatiProfile {
        ts,
        f,
        f_prime: fp,
        h_holo,
        inequality_excess,
        tf_limit,
        bound_excess,
        kahler_strong_max,
    })
}
