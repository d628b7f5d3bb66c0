//! Truncated multivariate Taylor arithmetic ("jets").
//!
//! A [`Jet`] is a Taylor polynomial of a real function of the chart
//! variables x (2n entries) and fiber variables y (2n entries) around an
//! evaluation point, truncated at a total x-degree `cx` and a total
//! y-degree `cy`. Propagating jets through an expression tree yields
//! mixed partial derivatives that are exact up to roundoff; the caps act
//! as exactness bookkeeping (a product is exact to the componentwise
//! minimum of its factors' caps).
//!
//! [`CJet`] is a complex-valued jet, stored as a real/imaginary pair;
//! structurally real results keep `im = None` so that purely real
//! pipelines pay no complex overhead.

pub mod matrix;
pub mod ring;
pub mod table;

use std::sync::Arc;

use crate::error::{Error, Result};
use num_complex::Complex64;
use ring::{Ring, NO_MONO};

#[derive(Clone)]
pub struct Jet {
    xring: Arc<Ring>,
    yring: Arc<Ring>,
    /// Exact up to this total degree in the x group.
    pub cx: usize,
    /// Exact up to this total degree in the y group.
    pub cy: usize,
    /// Coefficients, laid out `[x_mono * ny + y_mono]`.
    c: Vec<f64>,
}

impl std::fmt::Debug for Jet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Jet(cx={}, cy={}, value={})", self.cx, self.cy, self.value())
    }
}

impl Jet {
    pub fn zero(xring: Arc<Ring>, yring: Arc<Ring>, cx: usize, cy: usize) -> Jet {
        assert!(cx <= xring.maxdeg && cy <= yring.maxdeg);
        let nxy = xring.count_at(cx) * yring.count_at(cy);
        Jet {
            xring,
            yring,
            cx,
            cy,
            c: vec![0.0; nxy],
        }
    }

    pub fn constant(xring: Arc<Ring>, yring: Arc<Ring>, cx: usize, cy: usize, v: f64) -> Jet {
        let mut j = Jet::zero(xring, yring, cx, cy);
        j.c[0] = v;
        j
    }

    /// Seed jet for chart variable `k` with base value `v`.
    pub fn var_x(xring: Arc<Ring>, yring: Arc<Ring>, cx: usize, cy: usize, k: usize, v: f64) -> Jet {
        let mut j = Jet::zero(xring, yring, cx, cy);
        j.c[0] = v;
        if cx >= 1 {
            let m = j.xring.var_mono(k);
            let ny = j.ny();
            j.c[m * ny] = 1.0;
        }
        j
    }

    /// Seed jet for fiber variable `k` with base value `v`.
    pub fn var_y(xring: Arc<Ring>, yring: Arc<Ring>, cx: usize, cy: usize, k: usize, v: f64) -> Jet {
        let mut j = Jet::zero(xring, yring, cx, cy);
        j.c[0] = v;
        if cy >= 1 {
            let m = j.yring.var_mono(k);
            j.c[m] = 1.0;
        }
        j
    }

    pub fn zero_like(&self) -> Jet {
        Jet::zero(self.xring.clone(), self.yring.clone(), self.cx, self.cy)
    }

    pub fn constant_like(&self, v: f64) -> Jet {
        Jet::constant(self.xring.clone(), self.yring.clone(), self.cx, self.cy, v)
    }

    #[inline]
    pub fn nx(&self) -> usize {
        self.xring.count_at(self.cx)
    }

    #[inline]
    pub fn ny(&self) -> usize {
        self.yring.count_at(self.cy)
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.c[0]
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    #[inline]
    fn get(&self, xi: usize, yi: usize) -> f64 {
        self.c[xi * self.ny() + yi]
    }

    /// Re-declare a y-independent jet (cy = 0) inside the y-ring and cap
    /// of `like` by zero-padding; exact precisely because the function
    /// carries no fiber dependence.
    pub fn lift_y_like(&self, like: &Jet) -> Jet {
        assert_eq!(self.cy, 0, "lift is only exact for y-independent jets");
        assert!(Arc::ptr_eq(&self.xring, &like.xring));
        let mut out = Jet::zero(self.xring.clone(), like.yring.clone(), self.cx, like.cy);
        let ony = out.ny();
        for xi in 0..self.nx() {
            out.c[xi * ony] = self.c[xi];
        }
        out
    }

    /// Truncate to smaller caps (prefix extraction).
    pub fn truncate(&self, cx: usize, cy: usize) -> Jet {
        assert!(cx <= self.cx && cy <= self.cy);
        if cx == self.cx && cy == self.cy {
            return self.clone();
        }
        let mut out = Jet::zero(self.xring.clone(), self.yring.clone(), cx, cy);
        let ony = out.ny();
        for xi in 0..out.nx() {
            for yi in 0..ony {
                out.c[xi * ony + yi] = self.get(xi, yi);
            }
        }
        out
    }

    fn binary_caps(&self, other: &Jet) -> (usize, usize) {
        assert!(Arc::ptr_eq(&self.xring, &other.xring) && Arc::ptr_eq(&self.yring, &other.yring));
        (self.cx.min(other.cx), self.cy.min(other.cy))
    }

    pub fn add(&self, other: &Jet) -> Jet {
        let (cx, cy) = self.binary_caps(other);
        let mut out = Jet::zero(self.xring.clone(), self.yring.clone(), cx, cy);
        let ony = out.ny();
        for xi in 0..out.nx() {
            for yi in 0..ony {
                out.c[xi * ony + yi] = self.get(xi, yi) + other.get(xi, yi);
            }
        }
        out
    }

    pub fn sub(&self, other: &Jet) -> Jet {
        let (cx, cy) = self.binary_caps(other);
        let mut out = Jet::zero(self.xring.clone(), self.yring.clone(), cx, cy);
        let ony = out.ny();
        for xi in 0..out.nx() {
            for yi in 0..ony {
                out.c[xi * ony + yi] = self.get(xi, yi) - other.get(xi, yi);
            }
        }
        out
    }

    pub fn neg(&self) -> Jet {
        let mut out = self.clone();
        for v in &mut out.c {
            *v = -*v;
        }
        out
    }

    pub fn scale(&self, s: f64) -> Jet {
        let mut out = self.clone();
        for v in &mut out.c {
            *v *= s;
        }
        out
    }

    pub fn add_scalar(&self, s: f64) -> Jet {
        let mut out = self.clone();
        out.c[0] += s;
        out
    }

    /// `self += s * other`, truncating `other` to self's caps if needed.
    pub fn axpy(&mut self, s: f64, other: &Jet) {
        assert!(other.cx >= self.cx && other.cy >= self.cy);
        let ny = self.ny();
        for xi in 0..self.nx() {
            for yi in 0..ny {
                self.c[xi * ny + yi] += s * other.get(xi, yi);
            }
        }
    }

    pub fn mul(&self, other: &Jet) -> Jet {
        let (cx, cy) = self.binary_caps(other);
        let mut out = Jet::zero(self.xring.clone(), self.yring.clone(), cx, cy);
        let xr = &self.xring;
        let yr = &self.yring;
        let anx = xr.count_at(self.cx);
        let any = self.ny();
        let bnx = xr.count_at(other.cx);
        let bny = other.ny();
        let onx = out.nx();
        let ony = out.ny();
        let xcount = xr.count();
        let ycount = yr.count();
        let xprod = xr.prod_flat();
        let yprod = yr.prod_flat();
        // x dimensions are tiny (<= 28): flat loops with prefix checks on
        // the product index; y stays degree-blocked to skip the capped
        // tail cheaply.
        for xi in 0..anx {
            for dya in 0..=cy {
                for yi in yr.block(dya) {
                    let av = self.c[xi * any + yi];
                    if av == 0.0 {
                        continue;
                    }
                    let yrow = yi * ycount;
                    for xj in 0..bnx {
                        let xk = xprod[xi * xcount + xj] as usize;
                        if xk >= onx {
                            continue;
                        }
                        let orow = xk * ony;
                        let brow = xj * bny;
                        for dyb in 0..=(cy - dya) {
                            for yj in yr.block(dyb) {
                                let yk = yprod[yrow + yj] as usize;
                                out.c[orow + yk] += av * other.c[brow + yj];
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Reciprocal by Newton iteration; exact to the jet's caps.
    pub fn recip(&self) -> Result<Jet> {
        let b0 = self.value();
        if b0 == 0.0 || !b0.is_finite() {
            return Err(Error::Eval("division by zero in jet arithmetic".into()));
        }
        let total = self.cx + self.cy;
        let mut r = self.constant_like(1.0 / b0);
        if total == 0 {
            return Ok(r);
        }
        let iters = usize::BITS as usize - total.leading_zeros() as usize; // ceil(log2(total+1))
        for _ in 0..iters {
            // r <- r * (2 - b*r)
            let br = self.mul(&r);
            let mut two_minus = br.neg();
            two_minus.c[0] += 2.0;
            r = r.mul(&two_minus);
        }
        Ok(r)
    }

    pub fn div(&self, other: &Jet) -> Result<Jet> {
        Ok(self.mul(&other.recip()?))
    }

    /// Square root via inverse-square-root Newton; requires value > 0.
    pub fn sqrt(&self) -> Result<Jet> {
        let b0 = self.value();
        if b0 <= 0.0 || !b0.is_finite() {
            return Err(Error::Eval(format!(
                "sqrt requires a strictly positive value, got {b0}"
            )));
        }
        let total = self.cx + self.cy;
        let mut r = self.constant_like(1.0 / b0.sqrt());
        if total > 0 {
            let iters = usize::BITS as usize - total.leading_zeros() as usize;
            for _ in 0..iters {
                // r <- r * (3 - b*r^2) / 2
                let br2 = self.mul(&r).mul(&r);
                let mut t = br2.neg();
                t.c[0] += 3.0;
                r = r.mul(&t).scale(0.5);
            }
        }
        Ok(self.mul(&r))
    }

    /// Real power with arbitrary real exponent; requires value > 0.
    pub fn powf(&self, p: f64) -> Result<Jet> {
        let b0 = self.value();
        if b0 <= 0.0 || !b0.is_finite() {
            return Err(Error::Eval(format!(
                "pow with non-integer exponent requires a strictly positive value, got {b0}"
            )));
        }
        // b^p = b0^p * (1+u)^p with u = b/b0 - 1 nilpotent.
        let u = self.scale(1.0 / b0).add_scalar(-1.0);
        let total = self.cx + self.cy;
        let mut out = self.constant_like(1.0);
        let mut upow = self.constant_like(1.0);
        let mut coeff = 1.0f64;
        for k in 1..=total {
            coeff *= (p - (k as f64 - 1.0)) / k as f64;
            upow = upow.mul(&u);
            out.axpy(coeff, &upow);
        }
        Ok(out.scale(b0.powf(p)))
    }

    /// Integer power by repeated multiplication (any sign of the value).
    pub fn powi(&self, p: i32) -> Result<Jet> {
        if p < 0 {
            return self.recip()?.powi(-p);
        }
        let mut out = self.constant_like(1.0);
        let mut base = self.clone();
        let mut e = p as u32;
        while e > 0 {
            if e & 1 == 1 {
                out = out.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        Ok(out)
    }

    pub fn exp(&self) -> Result<Jet> {
        let b0 = self.value();
        if !b0.is_finite() {
            return Err(Error::Eval("exp of non-finite value".into()));
        }
        let u = self.add_scalar(-b0);
        let total = self.cx + self.cy;
        let mut out = self.constant_like(1.0);
        let mut upow = self.constant_like(1.0);
        let mut inv_fact = 1.0f64;
        for k in 1..=total {
            inv_fact /= k as f64;
            upow = upow.mul(&u);
            out.axpy(inv_fact, &upow);
        }
        Ok(out.scale(b0.exp()))
    }

    pub fn log(&self) -> Result<Jet> {
        let b0 = self.value();
        if b0 <= 0.0 || !b0.is_finite() {
            return Err(Error::Eval(format!(
                "log requires a strictly positive value, got {b0}"
            )));
        }
        let u = self.scale(1.0 / b0).add_scalar(-1.0);
        let total = self.cx + self.cy;
        let mut out = self.constant_like(b0.ln());
        let mut upow = self.constant_like(1.0);
        for k in 1..=total {
            upow = upow.mul(&u);
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            out.axpy(sign / k as f64, &upow);
        }
        Ok(out)
    }

    /// Partial derivative with respect to chart variable `k`; drops the
    /// x cap by one.
    pub fn diff_x(&self, k: usize) -> Jet {
        assert!(self.cx >= 1, "x cap exhausted");
        let mut out = Jet::zero(self.xring.clone(), self.yring.clone(), self.cx - 1, self.cy);
        let ony = out.ny();
        for xi in 0..out.nx() {
            let src = self.xring.raise_idx(k, xi);
            debug_assert!(src != NO_MONO);
            let src = src as usize;
            let mult = (self.xring.exp(xi, k) + 1) as f64;
            for yi in 0..ony {
                out.c[xi * ony + yi] = self.get(src, yi) * mult;
            }
        }
        out
    }

    /// Partial derivative with respect to fiber variable `k`; drops the
    /// y cap by one.
    pub fn diff_y(&self, k: usize) -> Jet {
        assert!(self.cy >= 1, "y cap exhausted");
        let mut out = Jet::zero(self.xring.clone(), self.yring.clone(), self.cx, self.cy - 1);
        let ony = out.ny();
        for xi in 0..out.nx() {
            for yi in 0..ony {
                let src = self.yring.raise_idx(k, yi);
                debug_assert!(src != NO_MONO);
                let mult = (self.yring.exp(yi, k) + 1) as f64;
                out.c[xi * ony + yi] = self.get(xi, src as usize) * mult;
            }
        }
        out
    }

    /// Derivative value for the given exponent vectors.
    pub fn deriv(&self, xexp: &[u8], yexp: &[u8]) -> Option<f64> {
        let xi = self.xring.index_of(xexp)? as usize;
        let yi = self.yring.index_of(yexp)? as usize;
        if xi >= self.nx() || yi >= self.ny() {
            return None;
        }
        Some(self.get(xi, yi) * self.xring.factorial_of(xi) * self.yring.factorial_of(yi))
    }

    pub fn rings(&self) -> (Arc<Ring>, Arc<Ring>) {
        (self.xring.clone(), self.yring.clone())
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.c
    }
}

/// Complex-valued jet; `im = None` means the imaginary part is exactly zero.
#[derive(Clone, Debug)]
pub struct CJet {
    pub re: Jet,
    pub im: Option<Jet>,
}

impl CJet {
    pub fn real(re: Jet) -> CJet {
        CJet { re, im: None }
    }

    pub fn new(re: Jet, im: Jet) -> CJet {
        CJet { re, im: Some(im) }
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.as_ref().map_or(0.0, |j| j.value()))
    }

    pub fn caps(&self) -> (usize, usize) {
        match &self.im {
            Some(im) => (self.re.cx.min(im.cx), self.re.cy.min(im.cy)),
            None => (self.re.cx, self.re.cy),
        }
    }

    pub fn conj(&self) -> CJet {
        CJet {
            re: self.re.clone(),
            im: self.im.as_ref().map(|j| j.neg()),
        }
    }

    pub fn neg(&self) -> CJet {
        CJet {
            re: self.re.neg(),
            im: self.im.as_ref().map(|j| j.neg()),
        }
    }

    pub fn add(&self, other: &CJet) -> CJet {
        let re = self.re.add(&other.re);
        let im = match (&self.im, &other.im) {
            (None, None) => None,
            (Some(a), None) => Some(a.truncate(re.cx.min(a.cx), re.cy.min(a.cy))),
            (None, Some(b)) => Some(b.truncate(re.cx.min(b.cx), re.cy.min(b.cy))),
            (Some(a), Some(b)) => Some(a.add(b)),
        };
        CJet { re, im }
    }

    pub fn sub(&self, other: &CJet) -> CJet {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &CJet) -> CJet {
        match (&self.im, &other.im) {
            (None, None) => CJet::real(self.re.mul(&other.re)),
            (Some(a_im), None) => CJet {
                re: self.re.mul(&other.re),
                im: Some(a_im.mul(&other.re)),
            },
            (None, Some(b_im)) => CJet {
                re: self.re.mul(&other.re),
                im: Some(self.re.mul(b_im)),
            },
            (Some(a_im), Some(b_im)) => CJet {
                re: self.re.mul(&other.re).sub(&a_im.mul(b_im)),
                im: Some(self.re.mul(b_im).add(&a_im.mul(&other.re))),
            },
        }
    }

    pub fn scale(&self, s: f64) -> CJet {
        CJet {
            re: self.re.scale(s),
            im: self.im.as_ref().map(|j| j.scale(s)),
        }
    }

    pub fn scale_complex(&self, s: Complex64) -> CJet {
        let sr = self.scale(s.re);
        if s.im == 0.0 {
            return sr;
        }
        sr.add(&self.mul_i().scale(s.im))
    }

    /// Multiplication by the imaginary unit.
    pub fn mul_i(&self) -> CJet {
        match &self.im {
            None => CJet {
                re: self.re.zero_like(),
                im: Some(self.re.clone()),
            },
            Some(im) => CJet {
                re: im.neg(),
                im: Some(self.re.clone()),
            },
        }
    }

    pub fn div(&self, other: &CJet) -> Result<CJet> {
        match &other.im {
            None => {
                let r = other.re.recip()?;
                Ok(CJet {
                    re: self.re.mul(&r),
                    im: self.im.as_ref().map(|j| j.mul(&r)),
                })
            }
            Some(b_im) => {
                let denom = other.re.mul(&other.re).add(&b_im.mul(b_im));
                let num = self.mul(&other.conj());
                let r = denom.recip()?;
                Ok(CJet {
                    re: num.re.mul(&r),
                    im: num.im.map(|j| j.mul(&r)),
                })
            }
        }
    }

    /// `w * conj(w)`; exactly real by construction.
    pub fn abs2(&self) -> CJet {
        let mut re = self.re.mul(&self.re);
        if let Some(im) = &self.im {
            re = re.add(&im.mul(im));
        }
        CJet::real(re)
    }

    /// Treats this jet as real, failing if the imaginary part is not
    /// negligible relative to the real part.
    pub fn expect_real(&self, tol: f64) -> Result<Jet> {
        match &self.im {
            None => Ok(self.re.clone()),
            Some(im) => {
                let scale = 1.0f64.max(self.re.max_abs());
                let imag = im.max_abs();
                if imag <= tol * scale {
                    Ok(self.re.truncate(im.cx.min(self.re.cx), im.cy.min(self.re.cy)))
                } else {
                    Err(Error::NotReal { imag })
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(cx: usize, cy: usize) -> (Arc<Ring>, Arc<Ring>) {
        (ring::ring(2, cx), ring::ring(2, cy))
    }

    fn var_y0(cx: usize, cy: usize, v: f64) -> Jet {
        let (xr, yr) = setup(cx, cy);
        Jet::var_y(xr, yr, cx, cy, 0, v)
    }

    #[test]
    fn polynomial_derivatives_are_exact() {
        // f = (y0 + 2)^3 at y0 = 1: f = 27, f' = 27, f'' = 18, f''' = 6
        let y = var_y0(0, 3, 1.0);
        let f = y.add_scalar(2.0).powi(3).unwrap();
        assert_eq!(f.value(), 27.0);
        assert_eq!(f.deriv(&[0, 0], &[1, 0]).unwrap(), 27.0);
        assert_eq!(f.deriv(&[0, 0], &[2, 0]).unwrap(), 18.0);
        assert_eq!(f.deriv(&[0, 0], &[3, 0]).unwrap(), 6.0);
    }

    #[test]
    fn reciprocal_matches_series() {
        // 1/(1+y0) = 1 - y0 + y0^2 - y0^3
        let y = var_y0(0, 3, 0.0);
        let r = y.add_scalar(1.0).recip().unwrap();
        assert!((r.deriv(&[0, 0], &[0, 0]).unwrap() - 1.0).abs() < 1e-14);
        assert!((r.deriv(&[0, 0], &[1, 0]).unwrap() + 1.0).abs() < 1e-14);
        assert!((r.deriv(&[0, 0], &[2, 0]).unwrap() - 2.0).abs() < 1e-14);
        assert!((r.deriv(&[0, 0], &[3, 0]).unwrap() + 6.0).abs() < 1e-14);
    }

    #[test]
    fn sqrt_and_powf_agree() {
        let y = var_y0(0, 4, 0.7);
        let base = y.add_scalar(1.3);
        let a = base.sqrt().unwrap();
        let b = base.powf(0.5).unwrap();
        for (x, y) in a.coefficients().iter().zip(b.coefficients()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn exp_log_roundtrip() {
        let y = var_y0(0, 4, 0.3);
        let e = y.add_scalar(1.1).log().unwrap().exp().unwrap();
        let direct = y.add_scalar(1.1);
        for (a, b) in e.coefficients().iter().zip(direct.coefficients()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn mixed_xy_derivative() {
        // f = x0^2 * y0^3 at x0=2, y0=3: d^2/dx0^2 d^3/dy0^3 f = 2 * 6 = 12
        let (xr, yr) = (ring::ring(2, 2), ring::ring(2, 3));
        let x = Jet::var_x(xr.clone(), yr.clone(), 2, 3, 0, 2.0);
        let y = Jet::var_y(xr, yr, 2, 3, 0, 3.0);
        let f = x.powi(2).unwrap().mul(&y.powi(3).unwrap());
        assert_eq!(f.value(), 4.0 * 27.0);
        assert_eq!(f.deriv(&[2, 0], &[3, 0]).unwrap(), 12.0);
        assert_eq!(f.deriv(&[1, 0], &[2, 0]).unwrap(), 2.0 * 2.0 * 6.0 * 3.0);
    }

    #[test]
    fn diff_matches_coefficient() {
        let (xr, yr) = (ring::ring(2, 2), ring::ring(2, 3));
        let x = Jet::var_x(xr.clone(), yr.clone(), 2, 3, 1, 0.5);
        let y = Jet::var_y(xr, yr, 2, 3, 0, 2.0);
        let f = x.mul(&y).mul(&y); // x1 * y0^2
        let fx = f.diff_x(1); // y0^2
        assert_eq!(fx.value(), 4.0);
        let fxy = fx.diff_y(0); // 2 y0
        assert_eq!(fxy.value(), 4.0);
        let fxyy = fxy.diff_y(0);
        assert_eq!(fxyy.value(), 2.0);
    }

    #[test]
    fn cjet_abs2_is_real() {
        let (xr, yr) = (ring::ring(2, 1), ring::ring(2, 2));
        let re = Jet::var_y(xr.clone(), yr.clone(), 1, 2, 0, 1.0);
        let im = Jet::var_y(xr, yr, 1, 2, 1, 2.0);
        let w = CJet::new(re, im);
        let a = w.abs2();
        assert!(a.im.is_none());
        assert_eq!(a.value(), Complex64::new(5.0, 0.0));
        // d(|w|^2)/dy0 = 2*re = 2
        assert_eq!(a.re.deriv(&[0, 0], &[1, 0]).unwrap(), 2.0);
    }

    #[test]
    fn cjet_division() {
        let (xr, yr) = (ring::ring(2, 0), ring::ring(2, 2));
        let re = Jet::var_y(xr.clone(), yr.clone(), 0, 2, 0, 1.0);
        let im = Jet::var_y(xr, yr, 0, 2, 1, 1.0);
        let w = CJet::new(re.clone(), im);
        let one = CJet::real(re.constant_like(1.0));
        let q = one.div(&w).unwrap();
        let back = q.mul(&w);
        assert!((back.value() - Complex64::new(1.0, 0.0)).norm() < 1e-13);
        assert!(back.re.deriv(&[0, 0], &[1, 0]).unwrap().abs() < 1e-13);
    }
}
