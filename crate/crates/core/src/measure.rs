//! Volume densities on the base manifold and the S-curvature (rate of
//! change of the measure distortion along geodesics).

use crate::error::{Error, Result};
use crate::expr::ast::MetricExpr;
use crate::expr::eval::{eval_cjet, JetVars};
use crate::jet::matrix::jet_matrix_det;
use crate::jet::table::EvalPoint;
use crate::jet::Jet;
use crate::metric::MetricSpec;

/// Choice of volume density sigma(x) (the measure is sigma dx in chart
/// coordinates).
#[derive(Debug, Clone)]
pub enum VolumeMeasure {
    /// Normalizes the fiber unit ball to the Euclidean ball volume.
    BusemannHausdorff,
    /// sqrt(det g(x, y_ref)) with the fixed reference fiber direction
    /// v = (1, .., 1); canonical for Riemannian metrics.
    RiemannianDet,
    /// User-supplied positive density over the base variables.
    Explicit(MetricExpr),
}

impl VolumeMeasure {
    pub fn id(&self) -> &'static str {
        match self {
            VolumeMeasure::BusemannHausdorff => "busemann_hausdorff",
            VolumeMeasure::RiemannianDet => "riemannian_det",
            VolumeMeasure::Explicit(_) => "explicit",
        }
    }
}

impl std::str::FromStr for VolumeMeasure {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "busemann_hausdorff" => Ok(VolumeMeasure::BusemannHausdorff),
            "riemannian_det" => Ok(VolumeMeasure::RiemannianDet),
            other => Err(format!(
                "unknown measure `{other}` (expected busemann_hausdorff or riemannian_det)"
            )),
        }
    }
}

/// Volume of the unit ball in R^d for even d = 2n.
pub fn euclidean_ball_volume(d: usize) -> f64 {
    assert!(d % 2 == 0);
    let n = d / 2;
    let mut v = 1.0;
    for k in 1..=n {
        v *= std::f64::consts::PI / k as f64;
    }
    v
}

fn reference_fiber(n: usize) -> Vec<f64> {
    let mut y = vec![0.0; 2 * n];
    for a in 0..n {
        y[a] = 1.0;
    }
    y
}

fn has_fiber_var(e: &MetricExpr) -> bool {
    use MetricExpr::*;
    match e {
        Const(_) | Z(_) => false,
        V(_) => true,
        Conj(a) | Pow(a, _) | Neg(a) | Abs2(a) | Re(a) | Im(a) | Sqrt(a) | Exp(a) | Log(a) => {
            has_fiber_var(a)
        }
        Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) => has_fiber_var(a) || has_fiber_var(b),
    }
}

/// Fundamental tensor as jets at caps `(cx, cy)` (helper shared with the
/// distortion computation).
fn g_jets(spec: &MetricSpec, x: &[f64], y: &[f64], cx: usize, cy: usize) -> Result<Vec<Jet>> {
    let vars = JetVars::seed(spec.n, cx, cy + 2, x, y);
    let g = eval_cjet(&spec.expr, &vars)?.expect_real(1e-12)?;
    let d = 2 * spec.n;
    let mut out = Vec::with_capacity(d * d);
    for i in 0..d {
        let di = g.diff_y(i);
        for j in 0..d {
            out.push(di.diff_y(j).scale(0.5));
        }
    }
    Ok(out)
}

/// The density sigma(x) as an x-jet of order `cx` (y cap 0).
pub fn density_jet(
    spec: &MetricSpec,
    measure: &VolumeMeasure,
    x: &[f64],
    cx: usize,
) -> Result<Jet> {
    let d = 2 * spec.n;
    let jet = match measure {
        VolumeMeasure::RiemannianDet => {
            let y_ref = reference_fiber(spec.n);
            let g = g_jets(spec, x, &y_ref, cx, 0)?;
            let det = jet_matrix_det(&g, d)?;
            det.sqrt()?
        }
        VolumeMeasure::BusemannHausdorff => {
            // vol{F(x, .) < 1} = (1/d) * integral of F^{-d} over the unit
            // sphere; F^{-d} = G^{-n}.
            let nodes = sphere_quadrature(d);
            let mut integral: Option<Jet> = None;
            for (u, w) in &nodes {
                let vars = JetVars::seed(spec.n, cx, 0, x, u);
                let g = eval_cjet(&spec.expr, &vars)?.expect_real(1e-12)?;
                if g.value() <= 0.0 {
                    return Err(Error::DomainViolation(
                        "G not positive on the unit sphere".into(),
                    ));
                }
                let term = g.powi(-(spec.n as i32))?.scale(*w);
                integral = Some(match integral {
                    None => term,
                    Some(acc) => acc.add(&term),
                });
            }
            let vol = integral.unwrap().scale(1.0 / d as f64);
            let omega = euclidean_ball_volume(d);
            vol.recip()?.scale(omega)
        }
        VolumeMeasure::Explicit(expr) => {
            if has_fiber_var(expr) {
                return Err(Error::Eval(
                    "explicit density must depend on base variables only".into(),
                ));
            }
            let y_dummy = reference_fiber(spec.n);
            let vars = JetVars::seed(spec.n, cx, 0, x, &y_dummy);
            eval_cjet(expr, &vars)?.expect_real(1e-12)?
        }
    };
    if jet.value() <= 0.0 {
        return Err(Error::NonPositiveMeasure(jet.value()));
    }
    Ok(jet)
}

/// Density value at a point.
pub fn density_value(spec: &MetricSpec, measure: &VolumeMeasure, x: &[f64]) -> Result<f64> {
    Ok(density_jet(spec, measure, x, 0)?.value())
}

/// S-curvature at (p, y): the derivative along the geodesic through the
/// point of the distortion ln(sqrt(det g) / sigma).
pub fn s_curvature(spec: &MetricSpec, p: &EvalPoint, measure: &VolumeMeasure) -> Result<f64> {
    spec.check_point(p)?;
    let d = 2 * spec.n;
    let g = g_jets(spec, &p.x, &p.y, 1, 1)?;
    let det = jet_matrix_det(&g, d)?;
    let tau_metric = det.log()?.scale(0.5);
    let sigma = density_jet(spec, measure, &p.x, 1)?;
    let tau = tau_metric.sub(&sigma.log()?.lift_y_like(&tau_metric));
    let spray = crate::real_engine::spray_values(spec, &p.x, &p.y)?;
    let mut s = 0.0;
    for k in 0..d {
        s += p.y[k] * tau.diff_x(k).value();
        s -= 2.0 * spray[k] * tau.diff_y(k).value();
    }
    Ok(s)
}

// ------------------------------------------------------------------
// Sphere quadrature

/// Gauss-Legendre nodes and weights on [-1, 1].
fn gauss_legendre(m: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(m);
    for i in 0..m {
        // Newton iteration from the Chebyshev-like initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        for _ in 0..60 {
            let (p, dp) = legendre_and_derivative(m, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_and_derivative(m, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((x, w));
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    out
}

fn legendre_and_derivative(m: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=m {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Deterministic quadrature of the unit sphere S^{d-1}: nodes and
/// weights with `sum w = Area(S^{d-1})` up to quadrature error.
pub fn sphere_quadrature(d: usize) -> Vec<(Vec<f64>, f64)> {
    assert!(d >= 2);
    if d == 2 {
        let k = 256;
        let w = std::f64::consts::TAU / k as f64;
        return (0..k)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / k as f64;
                (vec![t.cos(), t.sin()], w)
            })
            .collect();
    }
    // Hyperspherical angles: d-2 polar angles in [0, pi] (Gauss-Legendre,
    // with the cos substitution whenever it keeps the weight polynomial)
    // and one azimuth in [0, 2pi) (trapezoid).
    let m_polar = if d <= 4 { 24 } else { 16 };
    let m_azi = 2 * m_polar;
    let gl = gauss_legendre(m_polar);
    let mut nodes: Vec<(Vec<f64>, f64)> = vec![(Vec::new(), 1.0)];
    for level in 0..d - 2 {
        let power = (d - 2 - level) as i32;
        let mut next = Vec::with_capacity(nodes.len() * m_polar);
        for (angles, w) in &nodes {
            for &(t, wt) in &gl {
                let (angle, weight) = if power % 2 == 1 {
                    // angle = acos(t): sin^p da = (1-t^2)^{(p-1)/2} dt,
                    // a polynomial weight
                    (t.acos(), w * wt * (1.0 - t * t).powi((power - 1) / 2))
                } else {
                    // integrate in the angle itself; the integrand stays
                    // smooth so Gauss-Legendre converges spectrally
                    let a = std::f64::consts::FRAC_PI_2 * (t + 1.0);
                    (
                        a,
                        w * wt * std::f64::consts::FRAC_PI_2 * a.sin().powi(power),
                    )
                };
                let mut ang = angles.clone();
                ang.push(angle);
                next.push((ang, weight));
            }
        }
        nodes = next;
    }
    let mut out = Vec::with_capacity(nodes.len() * m_azi);
    let wa = std::f64::consts::TAU / m_azi as f64;
    for (angles, w) in &nodes {
        for j in 0..m_azi {
            let phi = std::f64::consts::TAU * j as f64 / m_azi as f64;
            let mut u = Vec::with_capacity(d);
            let mut sin_prod = 1.0;
            for &a in angles {
                u.push(sin_prod * a.cos());
                sin_prod *= a.sin();
            }
            u.push(sin_prod * phi.cos());
            u.push(sin_prod * phi.sin());
            out.push((u, w * wa));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::catalog_get;

    #[test]
    fn ball_volumes() {
        assert!((euclidean_ball_volume(2) - std::f64::consts::PI).abs() < 1e-14);
        let pi = std::f64::consts::PI;
        assert!((euclidean_ball_volume(4) - pi * pi / 2.0).abs() < 1e-13);
    }

    #[test]
    fn sphere_area_from_quadrature() {
        let pi = std::f64::consts::PI;
        for (d, area) in [(2, 2.0 * pi), (4, 2.0 * pi * pi)] {
            let total: f64 = sphere_quadrature(d).iter().map(|(_, w)| w).sum();
            assert!(
                (total - area).abs() < 1e-9 * area,
                "d={d}: {total} vs {area}"
            );
        }
    }

    #[test]
    fn euclidean_bh_density_is_one() {
        let spec = catalog_get("euclidean", &[2.0]).unwrap();
        let sigma = density_value(&spec, &VolumeMeasure::BusemannHausdorff, &[0.1, 0.2, 0.0, -0.3])
            .unwrap();
        assert!((sigma - 1.0).abs() < 1e-9, "sigma = {sigma}");
    }

    #[test]
    fn s_curvature_vanishes_on_flat_cases() {
        let p = EvalPoint {
            x: vec![0.2, -0.1, 0.3, 0.05],
            y: vec![0.8, 0.5, -0.4, 0.9],
        };
        let euclid = catalog_get("euclidean", &[2.0]).unwrap();
        let s = s_curvature(&euclid, &p, &VolumeMeasure::BusemannHausdorff).unwrap();
        assert!(s.abs() < 1e-10, "euclidean BH S = {s}");
        let fs = catalog_get("fubini_study", &[2.0]).unwrap();
        let s = s_curvature(&fs, &p, &VolumeMeasure::RiemannianDet).unwrap();
        assert!(s.abs() < 1e-8, "FS riemannian_det S = {s}");
        let quartic = catalog_get("complex_minkowski_quartic", &[2.0]).unwrap();
        let s = s_curvature(&quartic, &p, &VolumeMeasure::BusemannHausdorff).unwrap();
        assert!(s.abs() < 1e-9, "quartic BH S = {s}");
    }
}
