//! Small dense linear algebra: ring-generic determinants for symbolic
//! matrices, plus float helpers (roots, mixed discriminants, null spaces)
//! backed by nalgebra.

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::{One, Zero};

use crate::coeff::{CRat, Coeff};
use crate::poly::MultiPoly;

/// The operations a determinant needs. Implemented for both coefficient
/// fields and for polynomials, so the same code builds numeric and symbolic
/// minors.
pub trait Ring: Clone {
    fn r_add(&self, o: &Self) -> Self;
    fn r_sub(&self, o: &Self) -> Self;
    fn r_mul(&self, o: &Self) -> Self;
    fn r_is_zero(&self) -> bool;
    /// `self * num / den`.
    fn r_scale(&self, num: i64, den: i64) -> Self;
}

macro_rules! field_ring {
    ($t:ty) => {
        impl Ring for $t {
            fn r_add(&self, o: &Self) -> Self {
                self.clone() + o.clone()
            }
            fn r_sub(&self, o: &Self) -> Self {
                self.clone() - o.clone()
            }
            fn r_mul(&self, o: &Self) -> Self {
                self.clone() * o.clone()
            }
            fn r_is_zero(&self) -> bool {
                self.is_zero()
            }
            fn r_scale(&self, num: i64, den: i64) -> Self {
                self.clone() * <$t as Coeff>::from_i64(num) / <$t as Coeff>::from_i64(den)
            }
        }
    };
}

field_ring!(CRat);
field_ring!(Complex64);

impl<C: Coeff> Ring for MultiPoly<C> {
    fn r_add(&self, o: &Self) -> Self {
        self.checked_add(o).expect("matrix entries share a grading")
    }
    fn r_sub(&self, o: &Self) -> Self {
        self.checked_sub(o).expect("matrix entries share a grading")
    }
    fn r_mul(&self, o: &Self) -> Self {
        self.checked_mul(o).expect("matrix entries share a grading")
    }
    fn r_is_zero(&self) -> bool {
        self.is_zero()
    }
    fn r_scale(&self, num: i64, den: i64) -> Self {
        self.scale(&(C::from_i64(num) / C::from_i64(den)))
    }
}

/// Determinant of a square matrix by dynamic programming over column
/// subsets. Division free, so it works over polynomial rings. Cost is
/// `O(n 2^n)` ring operations, fine for the sizes used here (n ≤ 8).
pub fn det<R: Ring>(m: &[Vec<R>], zero: &R, one: &R) -> R {
    let n = m.len();
    assert!(m.iter().all(|r| r.len() == n), "det of a non-square matrix");
    assert!(n <= 20, "det: matrix too large for subset expansion");
    let mut dp: Vec<Option<R>> = vec![None; 1 << n];
    dp[0] = Some(one.clone());
    for mask in 0usize..(1 << n) {
        let Some(cur) = dp[mask].clone() else { continue };
        if cur.r_is_zero() {
            continue;
        }
        let row = mask.count_ones() as usize;
        if row == n {
            continue;
        }
        for j in 0..n {
            if mask & (1 << j) != 0 || m[row][j].r_is_zero() {
                continue;
            }
            // inversions added by placing column j after the columns already used
            let above = (mask >> (j + 1)).count_ones();
            let t = cur.r_mul(&m[row][j]);
            let next = mask | (1 << j);
            let acc = dp[next].take().unwrap_or_else(|| zero.clone());
            dp[next] = Some(if above % 2 == 0 { acc.r_add(&t) } else { acc.r_sub(&t) });
        }
    }
    dp[(1 << n) - 1].take().unwrap_or_else(|| zero.clone())
}

fn minor<R: Ring>(m: &[Vec<R>], skip_row: usize, skip_col: usize) -> Vec<Vec<R>> {
    m.iter()
        .enumerate()
        .filter(|(i, _)| *i != skip_row)
        .map(|(_, r)| r.iter().enumerate().filter(|(j, _)| *j != skip_col).map(|(_, x)| x.clone()).collect())
        .collect()
}

/// Classical adjugate: `adj[i][j] = (-1)^{i+j} det(minor(j, i))`.
pub fn adjugate<R: Ring>(m: &[Vec<R>], zero: &R, one: &R) -> Vec<Vec<R>> {
    let n = m.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let d = det(&minor(m, j, i), zero, one);
                    if (i + j) % 2 == 0 {
                        d
                    } else {
                        zero.r_sub(&d)
                    }
                })
                .collect()
        })
        .collect()
}

/// Signed maximal minors of an `m × (m+1)` matrix: entry `i` is `(-1)^i`
/// times the determinant with column `i` removed. The result pairs to zero
/// with every row.
pub fn signed_minors<R: Ring>(rows: &[Vec<R>], zero: &R, one: &R) -> Vec<R> {
    let m = rows.len();
    assert!(rows.iter().all(|r| r.len() == m + 1), "signed_minors needs an m x (m+1) matrix");
    (0..=m)
        .map(|i| {
            let sub: Vec<Vec<R>> = rows
                .iter()
                .map(|r| r.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, x)| x.clone()).collect())
                .collect();
            let d = det(&sub, zero, one);
            if i % 2 == 0 {
                d
            } else {
                zero.r_sub(&d)
            }
        })
        .collect()
}

/// Sylvester resultant of two binary forms given by coefficient lists
/// `f[k]` of `s^{deg-k} t^k`.
pub fn sylvester_resultant<R: Ring>(f: &[R], g: &[R], zero: &R, one: &R) -> R {
    let m = f.len() - 1;
    let n = g.len() - 1;
    let size = m + n;
    if size == 0 {
        return one.clone();
    }
    let mut mat = vec![vec![zero.clone(); size]; size];
    for r in 0..n {
        for (k, c) in f.iter().enumerate() {
            mat[r][r + k] = c.clone();
        }
    }
    for r in 0..m {
        for (k, c) in g.iter().enumerate() {
            mat[n + r][r + k] = c.clone();
        }
    }
    det(&mat, zero, one)
}

pub type CMat = DMatrix<Complex64>;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Roots of `Σ a[k] s^k` (coefficients low to high, top one nonzero).
/// Closed forms up to degree 2, companion-matrix eigenvalues above,
/// followed by a few Newton steps on the original coefficients.
pub fn poly_roots(a: &[Complex64]) -> Option<Vec<Complex64>> {
    let d = a.len().checked_sub(1)?;
    let lead = a[d];
    if lead.norm() == 0.0 || !lead.is_finite() {
        return None;
    }
    let mut roots = match d {
        0 => return Some(vec![]),
        1 => vec![-a[0] / a[1]],
        2 => {
            let (p, q, r) = (a[2], a[1], a[0]);
            let disc = (q * q - c(4.0) * p * r).sqrt();
            // pick the sign that avoids cancellation
            let w = if (q.conj() * disc).re >= 0.0 { -q - disc } else { -q + disc };
            if w.norm() == 0.0 {
                vec![c(0.0), c(0.0)]
            } else {
                vec![w / (c(2.0) * p), c(2.0) * r / w]
            }
        }
        _ => {
            let mut comp = CMat::zeros(d, d);
            for i in 1..d {
                comp[(i, i - 1)] = c(1.0);
            }
            for i in 0..d {
                comp[(i, d - 1)] = -a[i] / lead;
            }
            let ev = comp.schur().eigenvalues()?;
            ev.iter().copied().collect()
        }
    };
    for r in roots.iter_mut() {
        for _ in 0..3 {
            let (mut p, mut dp) = (c(0.0), c(0.0));
            for k in (0..=d).rev() {
                dp = dp * *r + p;
                p = p * *r + a[k];
            }
            if dp.norm() == 0.0 {
                break;
            }
            let step = p / dp;
            if !step.is_finite() {
                break;
            }
            *r -= step;
            if step.norm() <= 1e-15 * (1.0 + r.norm()) {
                break;
            }
        }
    }
    roots.iter().all(|r| r.is_finite()).then_some(roots)
}

/// Mixed discriminant `D(A_1, …, A_N)` of `N` matrices of size `N`,
/// normalized so that `D(A, …, A) = det A`.
pub fn mixed_discriminant(mats: &[CMat]) -> Complex64 {
    let n = mats.len();
    if n == 0 {
        return c(1.0);
    }
    match n {
        1 => mats[0][(0, 0)],
        2 => {
            let (a, b) = (&mats[0], &mats[1]);
            (a[(0, 0)] * b[(1, 1)] + a[(1, 1)] * b[(0, 0)] - a[(0, 1)] * b[(1, 0)] - a[(1, 0)] * b[(0, 1)]) * 0.5
        }
        _ => {
            // polarization over nonempty subsets
            let mut acc = c(0.0);
            for s in 1usize..(1 << n) {
                let mut sum = CMat::zeros(n, n);
                for (i, m) in mats.iter().enumerate() {
                    if s & (1 << i) != 0 {
                        sum += m;
                    }
                }
                let sign = if (n - s.count_ones() as usize) % 2 == 0 { 1.0 } else { -1.0 };
                acc += sum.determinant() * sign;
            }
            let fact: f64 = (1..=n).map(|k| k as f64).product();
            acc / fact
        }
    }
}

/// Right null vector of `a` from the SVD, with the singular values sorted
/// descending. The caller decides what counts as rank deficient.
pub fn null_vector(a: &CMat) -> Option<(Vec<Complex64>, Vec<f64>)> {
    let (rows, cols) = a.shape();
    if rows < cols || cols == 0 {
        return None;
    }
    let svd = a.clone().svd(false, true);
    let v_t = svd.v_t?;
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    let (imin, _) = sv.iter().enumerate().min_by(|x, y| x.1.total_cmp(y.1))?;
    let v: Vec<Complex64> = v_t.row(imin).iter().map(|z| z.conj()).collect();
    let mut sorted = sv;
    sorted.sort_by(|x, y| y.total_cmp(x));
    Some((v, sorted))
}

/// Unit-norm rescaling whose first entry of non-negligible size is real positive.
pub fn canonical_phase(v: &[Complex64]) -> Option<Vec<Complex64>> {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return None;
    }
    let lead = v.iter().find(|z| z.norm() > 1e-12 * norm)?;
    if (norm - 1.0).abs() <= 4.0 * f64::EPSILON && lead.im == 0.0 && lead.re > 0.0 {
        // already canonical; rescaling again would only add rounding
        return Some(v.to_vec());
    }
    let phase = lead.conj() / lead.norm();
    Some(v.iter().map(|z| z * phase / norm).collect())
}

pub fn identity<R: Ring>(n: usize, zero: &R, one: &R) -> Vec<Vec<R>> {
    (0..n).map(|i| (0..n).map(|j| if i == j { one.clone() } else { zero.clone() }).collect()).collect()
}

pub fn crat_one() -> CRat {
    CRat::one()
}

pub fn crat_zero() -> CRat {
    CRat::zero()
}
