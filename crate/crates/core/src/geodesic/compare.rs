//! Comparison functions: the solutions s_lambda of u'' + lambda u = 0
//! with u(0)=0, u'(0)=1, and their logarithmic derivatives ct_lambda.

use crate::error::{Error, Result};

/// sin-type comparison function.
pub fn s_lambda(lambda: f64, t: f64) -> f64 {
    if lambda > 0.0 {
        let s = lambda.sqrt();
        (s * t).sin() / s
    } else if lambda < 0.0 {
        let s = (-lambda).sqrt();
        (s * t).sinh() / s
    } else {
        t
    }
}

/// Normalized sin-type function with unit slope scaling used in index
/// form test fields: sin(sqrt(lambda) t) itself for lambda > 0.
pub fn s_lambda_raw(lambda: f64, t: f64) -> f64 {
    if lambda > 0.0 {
        (lambda.sqrt() * t).sin()
    } else if lambda < 0.0 {
        ((-lambda).sqrt() * t).sinh()
    } else {
        t
    }
}

/// cot-type comparison function; for lambda > 0 it has a pole at
/// t = pi/sqrt(lambda).
pub fn ct_lambda(lambda: f64, t: f64) -> Result<f64> {
    if t <= 0.0 {
        return Err(Error::Eval(format!("ct_lambda needs t > 0, got {t}")));
    }
    if lambda > 0.0 {
        let s = lambda.sqrt();
        let pole = std::f64::consts::PI / s;
        if t >= pole {
            return Err(Error::PoleAt { t, lambda, pole });
        }
        Ok(s * (s * t).cos() / (s * t).sin())
    } else if lambda < 0.0 {
        let s = (-lambda).sqrt();
        Ok(s * (s * t).cosh() / (s * t).sinh())
    } else {
        Ok(1.0 / t)
    }
}
