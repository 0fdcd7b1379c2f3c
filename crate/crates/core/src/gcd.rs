//! Polynomial gcd over the Gaussian rationals by recursive primitive
//! pseudo-remainder sequences, and the square-free part built on it.

use num_traits::One;

use crate::coeff::CRat;
use crate::error::PolyError;
use crate::poly::{ExactPoly, Monomial, MultiPoly};

fn one_like(p: &ExactPoly) -> ExactPoly {
    MultiPoly::one(p.grading().clone())
}

/// Leading coefficient of `p` viewed as a polynomial in `var`.
fn lead_in(p: &ExactPoly, var: usize) -> (usize, ExactPoly) {
    let cs = p.coefficients_in(var);
    let d = cs.len() - 1;
    (d, cs[d].clone())
}

/// Pseudo-remainder of `a` by `b` in `var`. The result is only defined up to
/// a factor free of `var`, which is all a primitive sequence needs.
pub fn prem(a: &ExactPoly, b: &ExactPoly, var: usize) -> Result<ExactPoly, PolyError> {
    if b.is_zero() {
        return Err(PolyError::ZeroPolynomial);
    }
    let (db, lb) = lead_in(b, var);
    let n = a.grading().total_vars();
    let mut r = a.clone();
    while !r.is_zero() {
        let (dr, lr) = lead_in(&r, var);
        if dr < db {
            break;
        }
        let mut shift = Monomial::one(n);
        shift.0[var] = (dr - db) as u32;
        let t = lr.checked_mul(&b.mul_monomial(&shift, &CRat::one()))?;
        r = lb.checked_mul(&r)?.checked_sub(&t)?;
    }
    Ok(r)
}

/// Gcd of the coefficients of `p` with respect to `var`.
pub fn content_in(p: &ExactPoly, var: usize) -> Result<ExactPoly, PolyError> {
    let mut g = MultiPoly::zero(p.grading().clone());
    for c in p.coefficients_in(var) {
        if c.is_zero() {
            continue;
        }
        g = gcd(&g, &c)?;
        if g.total_degree() == Some(0) {
            break;
        }
    }
    Ok(g)
}

pub fn primitive_part_in(p: &ExactPoly, var: usize) -> Result<ExactPoly, PolyError> {
    if p.is_zero() {
        return Ok(p.clone());
    }
    let c = content_in(p, var)?;
    Ok(p.exact_div(&c)?.monic())
}

/// Monic gcd. `gcd(0, 0) = 0`.
pub fn gcd(a: &ExactPoly, b: &ExactPoly) -> Result<ExactPoly, PolyError> {
    let main = a.variables().union(&b.variables()).copied().max();
    match main {
        Some(v) => gcd_wrt(a, b, v),
        None if a.is_zero() && b.is_zero() => Ok(a.clone()),
        None => Ok(one_like(a)),
    }
}

/// Gcd computed with `var` as the main variable of the remainder sequence.
pub fn gcd_wrt(a: &ExactPoly, b: &ExactPoly, var: usize) -> Result<ExactPoly, PolyError> {
    if a.grading() != b.grading() {
        return Err(PolyError::GradingMismatch);
    }
    if a.is_zero() {
        return Ok(b.monic());
    }
    if b.is_zero() {
        return Ok(a.monic());
    }
    let ca = content_in(a, var)?;
    let cb = content_in(b, var)?;
    let c = gcd(&ca, &cb)?;
    let mut r0 = a.exact_div(&ca)?;
    let mut r1 = b.exact_div(&cb)?;
    if r0.degree_in(var) < r1.degree_in(var) {
        std::mem::swap(&mut r0, &mut r1);
    }
    let g = loop {
        if r1.degree_in(var) == Some(0) {
            break one_like(a);
        }
        let r = prem(&r0, &r1, var)?;
        if r.is_zero() {
            break r1;
        }
        r0 = r1;
        r1 = primitive_part_in(&r, var)?;
    };
    Ok(c.checked_mul(&primitive_part_in(&g, var)?)?.monic())
}

/// Removes repeated factors that involve `pivot`: `p / pp(gcd(p, ∂p/∂pivot))`.
/// Factors free of `pivot` are left untouched.
pub fn squarefree_part(p: &ExactPoly, pivot: usize) -> Result<ExactPoly, PolyError> {
    if p.is_zero() {
        return Err(PolyError::ZeroPolynomial);
    }
    let dp = p.diff(pivot)?;
    if dp.is_zero() {
        return Ok(p.clone());
    }
    let g = primitive_part_in(&gcd_wrt(p, &dp, pivot)?, pivot)?;
    p.exact_div(&g)
}
