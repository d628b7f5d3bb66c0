//! Evaluation of metric expressions over complex scalars and complex jets.

use std::sync::Arc;

use num_complex::Complex64;

use super::ast::MetricExpr;
use crate::error::{Error, Result};
use crate::jet::ring::{ring, Ring};
use crate::jet::{CJet, Jet};

/// Relative tolerance below which an imaginary part is treated as zero.
const REAL_TOL: f64 = 1e-12;

/// Seeded variable jets for one evaluation point.
pub struct JetVars {
    pub n: usize,
    pub cx: usize,
    pub cy: usize,
    xring: Arc<Ring>,
    yring: Arc<Ring>,
    z: Vec<CJet>,
    v: Vec<CJet>,
}

impl JetVars {
    /// Seeds jets at chart point `x` and fiber point `y` (each of length
    /// 2n) with exactness caps `(cx, cy)`.
    pub fn seed(n: usize, cx: usize, cy: usize, x: &[f64], y: &[f64]) -> JetVars {
        assert_eq!(x.len(), 2 * n);
        assert_eq!(y.len(), 2 * n);
        let xring = ring(2 * n, cx);
        let yring = ring(2 * n, cy);
        let mut z = Vec::with_capacity(n);
        let mut v = Vec::with_capacity(n);
        for a in 0..n {
            let re = Jet::var_x(xring.clone(), yring.clone(), cx, cy, a, x[a]);
            let im = Jet::var_x(xring.clone(), yring.clone(), cx, cy, n + a, x[n + a]);
            z.push(CJet::new(re, im));
            let re = Jet::var_y(xring.clone(), yring.clone(), cx, cy, a, y[a]);
            let im = Jet::var_y(xring.clone(), yring.clone(), cx, cy, n + a, y[n + a]);
            v.push(CJet::new(re, im));
        }
        JetVars {
            n,
            cx,
            cy,
            xring,
            yring,
            z,
            v,
        }
    }

    pub fn rings(&self) -> (Arc<Ring>, Arc<Ring>) {
        (self.xring.clone(), self.yring.clone())
    }

    pub fn constant(&self, c: f64) -> Jet {
        Jet::constant(self.xring.clone(), self.yring.clone(), self.cx, self.cy, c)
    }
}

fn int_exponent(p: f64) -> Option<i32> {
    if p.fract() == 0.0 && p.abs() <= 64.0 {
        Some(p as i32)
    } else {
        None
    }
}

/// Evaluate an expression to a complex jet.
pub fn eval_cjet(e: &MetricExpr, vars: &JetVars) -> Result<CJet> {
    use MetricExpr::*;
    Ok(match e {
        Const(c) => CJet::real(vars.constant(*c)),
        Z(i) => {
            check_index(*i, vars.n)?;
            vars.z[i - 1].clone()
        }
        V(i) => {
            check_index(*i, vars.n)?;
            vars.v[i - 1].clone()
        }
        Conj(a) => eval_cjet(a, vars)?.conj(),
        Add(a, b) => eval_cjet(a, vars)?.add(&eval_cjet(b, vars)?),
        Sub(a, b) => eval_cjet(a, vars)?.sub(&eval_cjet(b, vars)?),
        Mul(a, b) => eval_cjet(a, vars)?.mul(&eval_cjet(b, vars)?),
        Div(a, b) => {
            let den = eval_cjet(b, vars)?;
            if den.value().norm() == 0.0 {
                return Err(Error::Eval("division by zero".into()));
            }
            eval_cjet(a, vars)?.div(&den)?
        }
        Neg(a) => eval_cjet(a, vars)?.neg(),
        Abs2(a) => eval_cjet(a, vars)?.abs2(),
        Re(a) => CJet::real(eval_cjet(a, vars)?.re),
        Im(a) => {
            let w = eval_cjet(a, vars)?;
            CJet::real(match w.im {
                Some(im) => im.truncate(w.re.cx.min(im.cx), w.re.cy.min(im.cy)),
                None => w.re.zero_like(),
            })
        }
        Pow(a, p) => {
            let base = eval_cjet(a, vars)?;
            if let Some(k) = int_exponent(*p) {
                cjet_powi(&base, k)?
            } else {
                CJet::real(base.expect_real(REAL_TOL)?.powf(*p)?)
            }
        }
        Sqrt(a) => CJet::real(eval_cjet(a, vars)?.expect_real(REAL_TOL)?.sqrt()?),
        Exp(a) => CJet::real(eval_cjet(a, vars)?.expect_real(REAL_TOL)?.exp()?),
        Log(a) => CJet::real(eval_cjet(a, vars)?.expect_real(REAL_TOL)?.log()?),
    })
}

fn cjet_powi(base: &CJet, k: i32) -> Result<CJet> {
    if k < 0 {
        if base.value().norm() == 0.0 {
            return Err(Error::Eval("negative power of zero".into()));
        }
        let one = CJet::real(base.re.constant_like(1.0));
        let inv = one.div(base)?;
        return cjet_powi(&inv, -k);
    }
    let mut out = CJet::real(base.re.constant_like(1.0));
    let mut b = base.clone();
    let mut e = k as u32;
    while e > 0 {
        if e & 1 == 1 {
            out = out.mul(&b);
        }
        e >>= 1;
        if e > 0 {
            b = b.mul(&b);
        }
    }
    Ok(out)
}

/// Fast scalar evaluation at `(x, y)` in real chart coordinates.
pub fn eval_scalar(e: &MetricExpr, n: usize, x: &[f64], y: &[f64]) -> Result<Complex64> {
    use MetricExpr::*;
    Ok(match e {
        Const(c) => Complex64::new(*c, 0.0),
        Z(i) => {
            check_index(*i, n)?;
            Complex64::new(x[i - 1], x[n + i - 1])
        }
        V(i) => {
            check_index(*i, n)?;
            Complex64::new(y[i - 1], y[n + i - 1])
        }
        Conj(a) => eval_scalar(a, n, x, y)?.conj(),
        Add(a, b) => eval_scalar(a, n, x, y)? + eval_scalar(b, n, x, y)?,
        Sub(a, b) => eval_scalar(a, n, x, y)? - eval_scalar(b, n, x, y)?,
        Mul(a, b) => eval_scalar(a, n, x, y)? * eval_scalar(b, n, x, y)?,
        Div(a, b) => {
            let den = eval_scalar(b, n, x, y)?;
            if den.norm() == 0.0 {
                return Err(Error::Eval("division by zero".into()));
            }
            eval_scalar(a, n, x, y)? / den
        }
        Neg(a) => -eval_scalar(a, n, x, y)?,
        Abs2(a) => Complex64::new(eval_scalar(a, n, x, y)?.norm_sqr(), 0.0),
        Re(a) => Complex64::new(eval_scalar(a, n, x, y)?.re, 0.0),
        Im(a) => Complex64::new(eval_scalar(a, n, x, y)?.im, 0.0),
        Pow(a, p) => {
            let base = eval_scalar(a, n, x, y)?;
            if let Some(k) = int_exponent(*p) {
                base.powi(k)
            } else {
                let r = expect_real_scalar(base)?;
                if r <= 0.0 {
                    return Err(Error::Eval(format!(
                        "pow with non-integer exponent requires a positive value, got {r}"
                    )));
                }
                Complex64::new(r.powf(*p), 0.0)
            }
        }
        Sqrt(a) => {
            let r = expect_real_scalar(eval_scalar(a, n, x, y)?)?;
            if r <= 0.0 {
                return Err(Error::Eval(format!("sqrt of non-positive value {r}")));
            }
            Complex64::new(r.sqrt(), 0.0)
        }
        Exp(a) => Complex64::new(expect_real_scalar(eval_scalar(a, n, x, y)?)?.exp(), 0.0),
        Log(a) => {
            let r = expect_real_scalar(eval_scalar(a, n, x, y)?)?;
            if r <= 0.0 {
                return Err(Error::Eval(format!("log of non-positive value {r}")));
            }
            Complex64::new(r.ln(), 0.0)
        }
    })
}

fn expect_real_scalar(w: Complex64) -> Result<f64> {
    if w.im.abs() <= REAL_TOL * 1.0f64.max(w.re.abs()) {
        Ok(w.re)
    } else {
        Err(Error::NotReal { imag: w.im.abs() })
    }
}

fn check_index(i: usize, n: usize) -> Result<()> {
    if i == 0 || i > n {
        Err(Error::VariableIndex { index: i, n })
    } else {
        Ok(())
    }
}
