//! Expression trees for metric definitions.
//!
//! A tree is built over the complex variables `z1..zn` (base coordinates)
//! and `v1..vn` (fiber coordinates) and must evaluate to a real number;
//! realness is checked numerically when a [`crate::metric::MetricSpec`]
//! is validated.

use serde::{Deserialize, Serialize};

/// Node of a metric expression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MetricExpr {
    Const(f64),
    /// Base variable `z<index>`, 1-based.
    Z(usize),
    /// Fiber variable `v<index>`, 1-based.
    V(usize),
    Conj(Box<MetricExpr>),
    Add(Box<MetricExpr>, Box<MetricExpr>),
    Sub(Box<MetricExpr>, Box<MetricExpr>),
    Mul(Box<MetricExpr>, Box<MetricExpr>),
    Div(Box<MetricExpr>, Box<MetricExpr>),
    /// Power with a real literal exponent.
    Pow(Box<MetricExpr>, f64),
    Neg(Box<MetricExpr>),
    /// `w * conj(w)`, kept primitive so the result is exactly real.
    Abs2(Box<MetricExpr>),
    Re(Box<MetricExpr>),
    Im(Box<MetricExpr>),
    Sqrt(Box<MetricExpr>),
    Exp(Box<MetricExpr>),
    Log(Box<MetricExpr>),
}

impl MetricExpr {
    pub fn constant(c: f64) -> Self {
        MetricExpr::Const(c)
    }

    pub fn z(i: usize) -> Self {
        MetricExpr::Z(i)
    }

    pub fn v(i: usize) -> Self {
        MetricExpr::V(i)
    }

    pub fn conj(self) -> Self {
        MetricExpr::Conj(Box::new(self))
    }

    pub fn abs2(self) -> Self {
        MetricExpr::Abs2(Box::new(self))
    }

    pub fn pow(self, p: f64) -> Self {
        MetricExpr::Pow(Box::new(self), p)
    }

    pub fn sqrt(self) -> Self {
        MetricExpr::Sqrt(Box::new(self))
    }

    /// Largest variable index appearing in the tree (0 when none).
    pub fn max_var_index(&self) -> usize {
        use MetricExpr::*;
        match self {
            Const(_) => 0,
            Z(i) | V(i) => *i,
            Conj(a) | Pow(a, _) | Neg(a) | Abs2(a) | Re(a) | Im(a) | Sqrt(a) | Exp(a)
            | Log(a) => a.max_var_index(),
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) => {
                a.max_var_index().max(b.max_var_index())
            }
        }
    }

    /// Smallest variable index appearing in the tree, if any variable does.
    pub fn min_var_index(&self) -> Option<usize> {
        use MetricExpr::*;
        match self {
            Const(_) => None,
            Z(i) | V(i) => Some(*i),
            Conj(a) | Pow(a, _) | Neg(a) | Abs2(a) | Re(a) | Im(a) | Sqrt(a) | Exp(a)
            | Log(a) => a.min_var_index(),
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) => {
                match (a.min_var_index(), b.min_var_index()) {
                    (Some(x), Some(y)) => Some(x.min(y)),
                    (x, y) => x.or(y),
                }
            }
        }
    }

    /// Sum of a list of expressions; empty sums collapse to 0.
    pub fn sum(terms: impl IntoIterator<Item = MetricExpr>) -> Self {
        let mut it = terms.into_iter();
        let first = it.next().unwrap_or(MetricExpr::Const(0.0));
        it.fold(first, |acc, t| MetricExpr::Add(Box::new(acc), Box::new(t)))
    }
}

impl std::ops::Add for MetricExpr {
    type Output = MetricExpr;
    fn add(self, rhs: MetricExpr) -> MetricExpr {
        MetricExpr::Add(Box::new(self), Box::new(rhs))
    }
}

impl std::ops::Sub for MetricExpr {
    type Output = MetricExpr;
    fn sub(self, rhs: MetricExpr) -> MetricExpr {
        MetricExpr::Sub(Box::new(self), Box::new(rhs))
    }
}

impl std::ops::Mul for MetricExpr {
    type Output = MetricExpr;
    fn mul(self, rhs: MetricExpr) -> MetricExpr {
        MetricExpr::Mul(Box::new(self), Box::new(rhs))
    }
}

impl std::ops::Div for MetricExpr {
    type Output = MetricExpr;
    fn div(self, rhs: MetricExpr) -> MetricExpr {
        MetricExpr::Div(Box::new(self), Box::new(rhs))
    }
}
