//! Dense matrix inversion over jet coefficients (Gaussian elimination
//! with partial pivoting on the constant terms).

use super::{CJet, Jet};
use crate::error::{Error, Result};

/// Inverts a d x d matrix of jets given row-major. Returns the inverse
/// and a pivot-ratio condition estimate.
pub fn invert_jet_matrix(m: &[Jet], d: usize) -> Result<(Vec<Jet>, f64)> {
    assert_eq!(m.len(), d * d);
    let mut a: Vec<Jet> = m.to_vec();
    let mut inv: Vec<Jet> = (0..d * d)
        .map(|k| {
            let (i, j) = (k / d, k % d);
            m[0].constant_like(if i == j { 1.0 } else { 0.0 })
        })
        .collect();
    let mut max_pivot = 0.0f64;
    let mut min_pivot = f64::INFINITY;
    for col in 0..d {
        let mut best = col;
        let mut best_val = a[col * d + col].value().abs();
        for row in col + 1..d {
            let v = a[row * d + col].value().abs();
            if v > best_val {
                best = row;
                best_val = v;
            }
        }
        if best_val == 0.0 {
            return Err(Error::Eval("singular jet matrix".into()));
        }
        max_pivot = max_pivot.max(best_val);
        min_pivot = min_pivot.min(best_val);
        if best != col {
            for j in 0..d {
                a.swap(col * d + j, best * d + j);
                inv.swap(col * d + j, best * d + j);
            }
        }
        let pivot_inv = a[col * d + col].recip()?;
        for j in 0..d {
            a[col * d + j] = a[col * d + j].mul(&pivot_inv);
            inv[col * d + j] = inv[col * d + j].mul(&pivot_inv);
        }
        for row in 0..d {
            if row == col {
                continue;
            }
            let factor = a[row * d + col].clone();
            if factor.max_abs() == 0.0 {
                continue;
            }
            for j in 0..d {
                let t = factor.mul(&a[col * d + j]);
                a[row * d + j] = a[row * d + j].sub(&t);
                let t = factor.mul(&inv[col * d + j]);
                inv[row * d + j] = inv[row * d + j].sub(&t);
            }
        }
    }
    let cond = max_pivot / min_pivot;
    if cond > 1e8 {
        log::warn!("jet matrix pivot-ratio condition estimate {cond:.3e} exceeds 1e8");
    }
    Ok((inv, cond))
}

/// Complex variant of [`invert_jet_matrix`]; pivots on the modulus of
/// the constant term.
pub fn invert_cjet_matrix(m: &[CJet], d: usize) -> Result<(Vec<CJet>, f64)> {
    assert_eq!(m.len(), d * d);
    let mut a: Vec<CJet> = m.to_vec();
    let mut inv: Vec<CJet> = (0..d * d)
        .map(|k| {
            let (i, j) = (k / d, k % d);
            CJet::real(m[0].re.constant_like(if i == j { 1.0 } else { 0.0 }))
        })
        .collect();
    let mut max_pivot = 0.0f64;
    let mut min_pivot = f64::INFINITY;
    for col in 0..d {
        let mut best = col;
        let mut best_val = a[col * d + col].value().norm();
        for row in col + 1..d {
            let v = a[row * d + col].value().norm();
            if v > best_val {
                best = row;
                best_val = v;
            }
        }
        if best_val == 0.0 {
            return Err(Error::Eval("singular complex jet matrix".into()));
        }
        max_pivot = max_pivot.max(best_val);
        min_pivot = min_pivot.min(best_val);
        if best != col {
            for j in 0..d {
                a.swap(col * d + j, best * d + j);
                inv.swap(col * d + j, best * d + j);
            }
        }
        let one = CJet::real(a[col * d + col].re.constant_like(1.0));
        let pivot_inv = one.div(&a[col * d + col])?;
        for j in 0..d {
            a[col * d + j] = a[col * d + j].mul(&pivot_inv);
            inv[col * d + j] = inv[col * d + j].mul(&pivot_inv);
        }
        for row in 0..d {
            if row == col {
                continue;
            }
            let factor = a[row * d + col].clone();
            if factor.re.max_abs() == 0.0
                && factor.im.as_ref().is_none_or(|j| j.max_abs() == 0.0)
            {
                continue;
            }
            for j in 0..d {
                let t = factor.mul(&a[col * d + j]);
                a[row * d + j] = a[row * d + j].sub(&t);
                let t = factor.mul(&inv[col * d + j]);
                inv[row * d + j] = inv[row * d + j].sub(&t);
            }
        }
    }
    Ok((inv, max_pivot / min_pivot))
}

/// Solve `A s = b` over jets for several right-hand sides by Gaussian
/// elimination with partial pivoting (cheaper than a full inverse; the
/// geodesic spray sits on this path). Returns the solutions and a
/// pivot-ratio condition estimate.
pub fn jet_linear_solve(a: &[Jet], b: &[Jet], d: usize) -> Result<(Vec<Jet>, f64)> {
    assert_eq!(a.len(), d * d);
    assert_eq!(b.len(), d);
    let mut m: Vec<Jet> = a.to_vec();
    let mut rhs: Vec<Jet> = b.to_vec();
    let mut max_pivot = 0.0f64;
    let mut min_pivot = f64::INFINITY;
    for col in 0..d {
        let mut best = col;
        let mut best_val = m[col * d + col].value().abs();
        for row in col + 1..d {
            let v = m[row * d + col].value().abs();
            if v > best_val {
                best = row;
                best_val = v;
            }
        }
        if best_val == 0.0 {
            return Err(Error::Eval("singular jet system".into()));
        }
        max_pivot = max_pivot.max(best_val);
        min_pivot = min_pivot.min(best_val);
        if best != col {
            for j in col..d {
                m.swap(col * d + j, best * d + j);
            }
            rhs.swap(col, best);
        }
        let pivot_inv = m[col * d + col].recip()?;
        for j in col..d {
            m[col * d + j] = m[col * d + j].mul(&pivot_inv);
        }
        rhs[col] = rhs[col].mul(&pivot_inv);
        for row in col + 1..d {
            let factor = m[row * d + col].clone();
            if factor.max_abs() == 0.0 {
                continue;
            }
            for j in col..d {
                let t = factor.mul(&m[col * d + j]);
                m[row * d + j] = m[row * d + j].sub(&t);
            }
            let t = factor.mul(&rhs[col]);
            rhs[row] = rhs[row].sub(&t);
        }
    }
    for col in (0..d).rev() {
        for row in 0..col {
            let factor = m[row * d + col].clone();
            if factor.max_abs() == 0.0 {
                continue;
            }
            let t = factor.mul(&rhs[col]);
            rhs[row] = rhs[row].sub(&t);
        }
    }
    let cond = max_pivot / min_pivot;
    if cond > 1e8 {
        log::warn!("jet system pivot-ratio condition estimate {cond:.3e} exceeds 1e8");
    }
    Ok((rhs, cond))
}

/// Determinant of a jet matrix by elimination (product of pivots).
pub fn jet_matrix_det(m: &[Jet], d: usize) -> Result<Jet> {
    assert_eq!(m.len(), d * d);
    let mut a: Vec<Jet> = m.to_vec();
    let mut det = m[0].constant_like(1.0);
    let mut sign = 1.0;
    for col in 0..d {
        let mut best = col;
        let mut best_val = a[col * d + col].value().abs();
        for row in col + 1..d {
            let v = a[row * d + col].value().abs();
            if v > best_val {
                best = row;
                best_val = v;
            }
        }
        if best_val == 0.0 {
            return Err(Error::Eval("singular jet matrix in determinant".into()));
        }
        if best != col {
            for j in 0..d {
                a.swap(col * d + j, best * d + j);
            }
            sign = -sign;
        }
        det = det.mul(&a[col * d + col]);
        let pivot_inv = a[col * d + col].recip()?;
        for row in col + 1..d {
            let factor = a[row * d + col].mul(&pivot_inv);
            if factor.max_abs() == 0.0 {
                continue;
            }
            for j in col..d {
                let t = factor.mul(&a[col * d + j]);
                a[row * d + j] = a[row * d + j].sub(&t);
            }
        }
    }
    Ok(det.scale(sign))
}
