//! Dense tables of mixed partial derivatives of G at one point.

use serde::{Deserialize, Serialize};

use super::ring;
use crate::error::{Error, Result};
use crate::expr::eval::{eval_cjet, eval_scalar, JetVars};
use crate::metric::MetricSpec;

/// Hard caps of the derivative contract: every downstream tensor fits in
/// five fiber derivatives and two chart derivatives.
pub const MAX_Y_ORDER: usize = 5;
pub const MAX_X_ORDER: usize = 2;

/// A point of the slit tangent bundle in real chart coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalPoint {
    /// Chart coordinates, length 2n (`z^a = x^a + i x^{a+n}`).
    pub x: Vec<f64>,
    /// Fiber coordinates, length 2n (`v^a = y^a + i y^{a+n}`).
    pub y: Vec<f64>,
}

impl EvalPoint {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<EvalPoint> {
        if x.len() != y.len() || x.len() % 2 != 0 || x.is_empty() {
            return Err(Error::Eval(format!(
                "point dimensions must match and be even, got x:{} y:{}",
                x.len(),
                y.len()
            )));
        }
        if y.iter().all(|&c| c == 0.0) {
            return Err(Error::ZeroTangent);
        }
        Ok(EvalPoint { x, y })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }
}

/// A multi-index of differentiation orders, split into the chart group
/// and the fiber group. Stored as exponent vectors, so two orderings of
/// the same derivative are the same `PartialSpec` (Schwarz symmetry is
/// canonical by construction).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PartialSpec {
    pub x_orders: Vec<u8>,
    pub y_orders: Vec<u8>,
}

impl PartialSpec {
    pub fn new(x_orders: Vec<u8>, y_orders: Vec<u8>) -> PartialSpec {
        PartialSpec { x_orders, y_orders }
    }

    /// Builds from lists of variable positions (repeats allowed, any
    /// order), e.g. `from_vars(&[0], &[1, 1])` = d/dx0 d^2/dy1^2.
    pub fn from_vars(dim: usize, x_vars: &[usize], y_vars: &[usize]) -> PartialSpec {
        let mut x_orders = vec![0u8; dim];
        let mut y_orders = vec![0u8; dim];
        for &v in x_vars {
            x_orders[v] += 1;
        }
        for &v in y_vars {
            y_orders[v] += 1;
        }
        PartialSpec { x_orders, y_orders }
    }

    pub fn total_x(&self) -> usize {
        self.x_orders.iter().map(|&e| e as usize).sum()
    }

    pub fn total_y(&self) -> usize {
        self.y_orders.iter().map(|&e| e as usize).sum()
    }

    pub fn total(&self) -> usize {
        self.total_x() + self.total_y()
    }
}

/// Dense table of partial derivatives of G at one point.
#[derive(Debug, Clone)]
pub struct JetTable {
    pub n: usize,
    pub max_x: usize,
    pub max_y: usize,
    pub point: EvalPoint,
    pub metric_id: String,
    /// Derivative values, `[x_mono * ny + y_mono]` in ring enumeration order.
    derivs: Vec<f64>,
}

impl JetTable {
    pub fn get(&self, spec: &PartialSpec) -> Option<f64> {
        if spec.total_x() > self.max_x || spec.total_y() > self.max_y {
            return None;
        }
        let xr = ring::ring(2 * self.n, self.max_x);
        let yr = ring::ring(2 * self.n, self.max_y);
        let xi = xr.index_of(&spec.x_orders)? as usize;
        let yi = yr.index_of(&spec.y_orders)? as usize;
        Some(self.derivs[xi * yr.count() + yi])
    }

    /// G at the point (the order-0 entry).
    pub fn value(&self) -> f64 {
        self.derivs[0]
    }

    /// Euler relation residual `sum_k y^k dG/dy^k - 2G` (2-homogeneity).
    pub fn euler_residual(&self) -> f64 {
        let dim = 2 * self.n;
        let mut acc = -2.0 * self.value();
        for k in 0..dim {
            let spec = PartialSpec::from_vars(dim, &[], &[k]);
            acc += self.point.y[k] * self.get(&spec).unwrap();
        }
        acc
    }

    pub fn to_json(&self) -> serde_json::Value {
        let xr = ring::ring(2 * self.n, self.max_x);
        let yr = ring::ring(2 * self.n, self.max_y);
        let mut entries = Vec::new();
        for xi in 0..xr.count() {
            for yi in 0..yr.count() {
                entries.push(serde_json::json!({
                    "dx": xr.exps_of(xi),
                    "dy": yr.exps_of(yi),
                    "value": self.derivs[xi * yr.count() + yi],
                }));
            }
        }
        serde_json::json!({
            "metric": self.metric_id,
            "n": self.n,
            "max_x": self.max_x,
            "max_y": self.max_y,
            "point": {"x": self.point.x, "y": self.point.y},
            "entries": entries,
        })
    }
}

/// Computes every mixed partial of G up to the requested orders by jet
/// propagation through the expression tree. Algebraically exact up to
/// roundoff; no finite differencing anywhere in this path.
pub fn eval_partials(
    spec: &MetricSpec,
    p: &EvalPoint,
    max_y: usize,
    max_x: usize,
) -> Result<JetTable> {
    if max_y > MAX_Y_ORDER || max_x > MAX_X_ORDER {
        return Err(Error::Eval(format!(
            "derivative orders ({max_y},{max_x}) exceed the ({MAX_Y_ORDER},{MAX_X_ORDER}) contract"
        )));
    }
    spec.check_point(p)?;
    let vars = JetVars::seed(spec.n, max_x, max_y, &p.x, &p.y);
    let g = eval_cjet(&spec.expr, &vars)?.expect_real(1e-12)?;
    if !(g.value() > 0.0) {
        return Err(Error::DomainViolation(format!(
            "G = {} is not positive at the evaluation point",
            g.value()
        )));
    }
    let xr = ring::ring(2 * spec.n, max_x);
    let yr = ring::ring(2 * spec.n, max_y);
    let nx = xr.count();
    let ny = yr.count();
    let mut derivs = vec![0.0; nx * ny];
    for xi in 0..nx {
        for yi in 0..ny {
            derivs[xi * ny + yi] = g.coefficients()[xi * ny + yi]
                * xr.factorial_of(xi)
                * yr.factorial_of(yi);
        }
    }
    Ok(JetTable {
        n: spec.n,
        max_x,
        max_y,
        point: p.clone(),
        metric_id: spec.id.clone(),
        derivs,
    })
}

/// Cross-checks one jet-table entry against a 4th-order central finite
/// difference with Richardson extrapolation. Returns the relative error
/// `|jet - fd| / max(1, |fd|)`.
pub fn fd_crosscheck(spec: &MetricSpec, p: &EvalPoint, idx: &PartialSpec) -> Result<f64> {
    if idx.total() > 3 {
        return Err(Error::Eval(
            "finite differences are only trusted up to total order 3".into(),
        ));
    }
    let table = eval_partials(spec, p, idx.total_y().min(MAX_Y_ORDER), idx.total_x())?;
    let jet_value = table
        .get(idx)
        .ok_or_else(|| Error::Eval("index outside table".into()))?;
    let h = match idx.total() {
        0 => {
            let fd = eval_scalar(&spec.expr, spec.n, &p.x, &p.y)?.re;
            return Ok((jet_value - fd).abs() / 1.0f64.max(fd.abs()));
        }
        1 => 1e-2,
        2 => 2e-2,
        _ => 3e-2,
    };
    let coarse = fd_partial(spec, p, idx, h)?;
    let fine = fd_partial(spec, p, idx, h / 2.0)?;
    let fd = (16.0 * fine - coarse) / 15.0;
    Ok((jet_value - fd).abs() / 1.0f64.max(fd.abs()))
}

/// One finite-difference evaluation with per-variable 4th-order stencils.
fn fd_partial(spec: &MetricSpec, p: &EvalPoint, idx: &PartialSpec, h: f64) -> Result<f64> {
    // (variable kind, var index, derivative order)
    let mut vars: Vec<(bool, usize, u8)> = Vec::new();
    for (k, &m) in idx.x_orders.iter().enumerate() {
        if m > 0 {
            vars.push((true, k, m));
        }
    }
    for (k, &m) in idx.y_orders.iter().enumerate() {
        if m > 0 {
            vars.push((false, k, m));
        }
    }
    // Tensor product of per-variable stencils.
    let mut terms: Vec<(Vec<f64>, f64)> = vec![(vec![0.0; 2 * p.dim()], 1.0)];
    for &(is_x, k, m) in &vars {
        let stencil = stencil_for_order(m);
        let mut next = Vec::with_capacity(terms.len() * stencil.len());
        for (shift, w) in &terms {
            for &(offset, sw) in stencil {
                let mut s = shift.clone();
                let slot = if is_x { k } else { p.dim() + k };
                s[slot] += offset * h;
                next.push((s, w * sw / h.powi(m as i32)));
            }
        }
        terms = next;
    }
    let mut acc = 0.0;
    for (shift, w) in &terms {
        let mut x = p.x.clone();
        let mut y = p.y.clone();
        for i in 0..p.dim() {
            x[i] += shift[i];
            y[i] += shift[p.dim() + i];
        }
        acc += w * eval_scalar(&spec.expr, spec.n, &x, &y)?.re;
    }
    Ok(acc)
}

fn stencil_for_order(m: u8) -> &'static [(f64, f64)] {
    match m {
        1 => &[
            (-2.0, 1.0 / 12.0),
            (-1.0, -8.0 / 12.0),
            (1.0, 8.0 / 12.0),
            (2.0, -1.0 / 12.0),
        ],
        2 => &[
            (-2.0, -1.0 / 12.0),
            (-1.0, 16.0 / 12.0),
            (0.0, -30.0 / 12.0),
            (1.0, 16.0 / 12.0),
            (2.0, -1.0 / 12.0),
        ],
        3 => &[
            (-3.0, 0.125),
            (-2.0, -1.0),
            (-1.0, 1.625),
            (1.0, -1.625),
            (2.0, 1.0),
            (3.0, -0.125),
        ],
        _ => panic!("stencil order {m} out of range"),
    }
}
