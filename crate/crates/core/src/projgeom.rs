//! Points, hyperplanes, SL(N+1) elements and the Fubini–Study potentials
//! they induce.
//!
//! The Fubini–Study form is `ω = (i/2π) ∂∂̄ log‖z‖²`, so `∫_{ℙᴺ} ωᴺ = 1`.
//! A group element acts on points by `x ↦ σx`, on hyperplanes by
//! `H ↦ σ^{-T}H`, and the Bergman potential of `σ` is
//! `φ_σ(x) = log(‖σx‖² / ‖x‖²)`, so that `ω + dd^c φ_σ = σ*ω`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::coeff::Coeff;
use crate::error::{Error, Result};
use crate::linalg::{canonical_phase, CMat};
use crate::poly::{FloatPoly, MultiPoly};

pub type C64 = Complex64;

fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// A point of ℙᴺ stored by its canonical representative.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjPoint(Vec<C64>);

/// A hyperplane `{x : Σ H_i x_i = 0}` stored canonically.
#[derive(Clone, Debug, PartialEq)]
pub struct Hyperplane(Vec<C64>);

macro_rules! projective_vector {
    ($t:ident) => {
        impl $t {
            pub fn new(coords: &[C64]) -> Result<Self> {
                canonical_phase(coords)
                    .map($t)
                    .ok_or_else(|| Error::Input(concat!(stringify!($t), " needs a nonzero finite vector").into()))
            }

            pub fn coords(&self) -> &[C64] {
                &self.0
            }

            pub fn dim(&self) -> usize {
                self.0.len() - 1
            }
        }
    };
}

projective_vector!(ProjPoint);
projective_vector!(Hyperplane);

impl Hyperplane {
    /// Bilinear pairing `Σ H_i x_i`; zero exactly when `x` lies on `H`.
    pub fn pairing(&self, x: &ProjPoint) -> C64 {
        self.0.iter().zip(&x.0).map(|(h, z)| h * z).sum()
    }
}

/// FS-uniform point of ℙᴺ as a unit vector (normalized complex Gaussian).
pub fn random_unit<R: Rng + ?Sized>(n_plus_1: usize, rng: &mut R) -> Vec<C64> {
    loop {
        let v: Vec<C64> = (0..n_plus_1)
            .map(|_| C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
            .collect();
        let n = norm_sqr(&v).sqrt();
        if n > 1e-300 {
            return v.into_iter().map(|z| z / n).collect();
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupElement {
    mat: CMat,
    det_normalized: bool,
}

impl GroupElement {
    /// Wraps a square matrix and rescales it to determinant one.
    pub fn new(mat: CMat) -> Result<Self> {
        GroupElement::raw(mat)?.normalized()
    }

    /// Wraps a square invertible matrix without rescaling.
    pub fn raw(mat: CMat) -> Result<Self> {
        if !mat.is_square() || mat.nrows() < 2 {
            return Err(Error::Input(format!("group element must be square of size ≥ 2, got {}x{}", mat.nrows(), mat.ncols())));
        }
        if mat.iter().any(|z| !z.is_finite()) {
            return Err(Error::Input("group element has non-finite entries".into()));
        }
        let d = mat.determinant();
        if d.norm() < 1e-300 {
            return Err(Error::Degenerate("group element is singular".into()));
        }
        Ok(GroupElement { mat, det_normalized: false })
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Input("group element rows must form a square matrix".into()));
        }
        GroupElement::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn identity(n: usize) -> Self {
        GroupElement { mat: CMat::identity(n, n), det_normalized: true }
    }

    pub fn diagonal(entries: &[C64]) -> Result<Self> {
        GroupElement::new(CMat::from_diagonal(&nalgebra::DVector::from_column_slice(entries)))
    }

    /// `I + R` with the entries of `R` uniform in the disc of the given
    /// radius, then rescaled to determinant one. Near-singular draws are
    /// redrawn.
    pub fn random<R: Rng + ?Sized>(n: usize, radius: f64, rng: &mut R) -> Self {
        loop {
            let m = CMat::from_fn(n, n, |i, j| {
                let r = radius * rng.random::<f64>().sqrt();
                let th = std::f64::consts::TAU * rng.random::<f64>();
                let z = C64::from_polar(r, th);
                if i == j {
                    z + 1.0
                } else {
                    z
                }
            });
            if m.determinant().norm() > 0.05 {
                return GroupElement::new(m).expect("nonsingular draw");
            }
        }
    }

    /// Haar-random unitary via QR of a complex Gaussian matrix.
    pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let g = CMat::from_fn(n, n, |_, _| C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)));
        let qr = g.qr();
        let (q, r) = (qr.q(), qr.r());
        let phases = CMat::from_fn(n, n, |i, j| if i == j { r[(i, i)] / r[(i, i)].norm() } else { C64::new(0.0, 0.0) });
        GroupElement::new(q * phases).expect("unitary is invertible")
    }

    fn normalized(mut self) -> Result<Self> {
        let n = self.mat.nrows() as f64;
        let d = self.mat.determinant();
        let lambda = d.powf(-1.0 / n);
        self.mat *= lambda;
        let err = (self.mat.determinant() - 1.0).norm();
        if err > 1e-12 {
            return Err(Error::Numerical(format!("determinant normalization left |det - 1| = {err:.3e}")));
        }
        self.det_normalized = true;
        Ok(self)
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn is_det_normalized(&self) -> bool {
        self.det_normalized
    }

    pub fn size(&self) -> usize {
        self.mat.nrows()
    }

    pub fn rows(&self) -> Vec<Vec<C64>> {
        (0..self.size()).map(|i| self.mat.row(i).iter().copied().collect()).collect()
    }

    pub fn inverse(&self) -> Self {
        let inv = self.mat.clone().try_inverse().expect("group element is invertible");
        GroupElement { mat: inv, det_normalized: self.det_normalized }
    }

    pub fn transpose(&self) -> Self {
        GroupElement { mat: self.mat.transpose(), det_normalized: self.det_normalized }
    }

    pub fn compose(&self, other: &GroupElement) -> Self {
        GroupElement { mat: &self.mat * &other.mat, det_normalized: self.det_normalized && other.det_normalized }
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.size() {
            return Err(Error::Input(format!("dimension mismatch: group element of size {} applied to vector of length {len}", self.size())));
        }
        Ok(())
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        mat_vec(&self.mat, x)
    }

    pub fn act_point(&self, x: &ProjPoint) -> Result<ProjPoint> {
        self.check_len(x.0.len())?;
        ProjPoint::new(&self.apply(&x.0))
    }

    pub fn act_hyperplane(&self, h: &Hyperplane) -> Result<Hyperplane> {
        self.check_len(h.0.len())?;
        let inv_t = self.inverse().transpose();
        Hyperplane::new(&inv_t.apply(&h.0))
    }

    /// Transforms a form on one or more blocks. Point forms become `F∘σ⁻¹`
    /// (the form of `σX`); hyperplane forms become `f(σᵀH₁, …)`. Both keep
    /// incidence: the image vanishes at the transformed arguments exactly
    /// when the original vanishes at the originals.
    pub fn act_form<C: Coeff>(&self, p: &MultiPoly<C>, role: FormRole) -> Result<FloatPoly> {
        let m = match role {
            FormRole::Points => self.inverse().mat,
            FormRole::Hyperplanes => self.mat.transpose(),
        };
        let rows: Vec<Vec<C64>> = (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect();
        let mut out = p.to_float();
        for b in 0..p.grading().num_blocks() {
            self.check_len(p.grading().block_size(b))?;
            out = out.compose_linear(b, &rows)?;
        }
        Ok(out)
    }

    /// Bergman potential `φ_σ(x) = log(‖σx‖²/‖x‖²)`.
    /// Unitary elements give the zero field exactly.
    pub fn bergman_potential(&self) -> PotentialField {
        if self.is_unitary() {
            return PotentialField { dim: Some(self.mat.nrows()), provenance: Provenance::Bergman, ..PotentialField::zero() };
        }
        PotentialField::log_norm(self.mat.clone(), Provenance::Bergman)
    }

    pub fn is_unitary(&self) -> bool {
        let n = self.mat.nrows();
        let g = &self.mat * self.mat.adjoint() - CMat::identity(n, n);
        g.iter().all(|z| z.norm() <= 1e-12)
    }
}

/// How the variables of a form transform.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FormRole {
    Points,
    Hyperplanes,
}

pub fn mat_vec(m: &CMat, x: &[C64]) -> Vec<C64> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)] * x[j]).sum()).collect()
}

/// `exp(tA)` for a traceless `A`, rescaled to determinant one.
pub fn one_param_subgroup(a: &CMat, t: f64) -> Result<GroupElement> {
    if !a.is_square() {
        return Err(Error::Input("generator must be square".into()));
    }
    let tr = a.trace();
    if tr.norm() > 1e-12 {
        return Err(Error::Input(format!("generator is not traceless (trace = {tr})")));
    }
    let e = (a * C64::new(t, 0.0)).exp();
    GroupElement::new(e)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    Bergman,
    RatioLog,
    Sum,
}

/// A real function on ℙᴺ of the form `c + Σ_k w_k log(‖M_k x‖²/‖x‖²)`.
///
/// This family contains the Bergman potentials, their differences and sums,
/// and, on the ambient space, the log volume ratio of a pulled-back metric.
/// Values and chart Hessians are computed in closed form.
#[derive(Clone, Debug)]
pub struct PotentialField {
    terms: Vec<(f64, CMat)>,
    constant: f64,
    dim: Option<usize>,
    provenance: Provenance,
}

/// Affine chart data at a point: the chart index and the local coordinates
/// `ẑ = x / x_c` (with `ẑ_c = 1`).
#[derive(Clone, Debug)]
pub struct Chart {
    pub index: usize,
    pub zhat: Vec<C64>,
}

impl Chart {
    pub fn at(x: &[C64]) -> Chart {
        let index = (0..x.len()).max_by(|&i, &j| x[i].norm_sqr().total_cmp(&x[j].norm_sqr())).unwrap_or(0);
        let zhat = x.iter().map(|z| z / x[index]).collect();
        Chart { index, zhat }
    }

    fn local(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.zhat.len()).filter(move |&a| a != self.index)
    }
}

/// `∂∂̄ log‖Mẑ‖²` in the chart's local coordinates, as the matrix with entry
/// `(a, b) = ∂²/∂z_a∂z̄_b`. `None` stands for the identity matrix.
pub fn log_norm_hessian(m: Option<&CMat>, chart: &Chart) -> CMat {
    let n = chart.zhat.len() - 1;
    let idx: Vec<usize> = chart.local().collect();
    let (v, cols): (Vec<C64>, Vec<Vec<C64>>) = match m {
        Some(m) => (
            mat_vec(m, &chart.zhat),
            idx.iter().map(|&a| m.column(a).iter().copied().collect()).collect(),
        ),
        None => (
            chart.zhat.clone(),
            idx.iter()
                .map(|&a| (0..=n).map(|i| if i == a { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }).collect())
                .collect(),
        ),
    };
    let vv = norm_sqr(&v);
    let herm = |a: &[C64], b: &[C64]| -> C64 { a.iter().zip(b).map(|(x, y)| x.conj() * y).sum() };
    let vj: Vec<C64> = cols.iter().map(|j| herm(&v, j)).collect();
    CMat::from_fn(n, n, |a, b| herm(&cols[b], &cols[a]) / vv - vj[a] * vj[b].conj() / (vv * vv))
}

impl PotentialField {
    pub fn zero() -> Self {
        PotentialField { terms: vec![], constant: 0.0, dim: None, provenance: Provenance::Sum }
    }

    pub fn constant(c: f64) -> Self {
        PotentialField { constant: c, ..PotentialField::zero() }
    }

    pub fn log_norm(m: CMat, provenance: Provenance) -> Self {
        let dim = Some(m.nrows());
        PotentialField { terms: vec![(1.0, m)], constant: 0.0, dim, provenance }
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn terms(&self) -> &[(f64, CMat)] {
        &self.terms
    }

    pub fn constant_part(&self) -> f64 {
        self.constant
    }

    /// True when the field is identically zero as a function.
    pub fn is_trivially_zero(&self) -> bool {
        self.constant == 0.0 && self.terms.iter().all(|(w, _)| *w == 0.0)
    }

    /// Sum of the weights; `ω_φ = (1 - Σw) ω + Σ w_k M_k*ω`.
    pub fn weight_sum(&self) -> f64 {
        self.terms.iter().map(|(w, _)| w).sum()
    }

    fn merged_dim(&self, o: &PotentialField) -> Option<usize> {
        match (self.dim, o.dim) {
            (Some(a), Some(b)) => {
                assert_eq!(a, b, "potentials on different spaces");
                Some(a)
            }
            (a, b) => a.or(b),
        }
    }

    pub fn add(&self, o: &PotentialField) -> PotentialField {
        let mut terms = self.terms.clone();
        terms.extend(o.terms.iter().cloned());
        PotentialField { dim: self.merged_dim(o), terms, constant: self.constant + o.constant, provenance: Provenance::Sum }
    }

    pub fn scale(&self, s: f64) -> PotentialField {
        PotentialField {
            terms: self.terms.iter().map(|(w, m)| (w * s, m.clone())).collect(),
            constant: self.constant * s,
            dim: self.dim,
            provenance: self.provenance,
        }
    }

    pub fn sub(&self, o: &PotentialField) -> PotentialField {
        self.add(&o.scale(-1.0))
    }

    pub fn plus_constant(&self, c: f64) -> PotentialField {
        PotentialField { constant: self.constant + c, ..self.clone() }
    }

    /// On ℙᴺ, `log(ω_φᴺ/ωᴺ)` of a Bergman potential is again a log-norm
    /// field: `log|det σ|² - (N+1) φ_σ`.
    pub fn ratio_log(&self) -> Result<PotentialField> {
        match (self.provenance, self.terms.as_slice()) {
            (Provenance::Bergman, [(w, m)]) if *w == 1.0 && self.constant == 0.0 => {
                let n1 = m.nrows() as f64;
                let logdet = m.determinant().norm_sqr().ln();
                let mut r = self.scale(-n1).plus_constant(logdet);
                r.provenance = Provenance::RatioLog;
                Ok(r)
            }
            _ => Err(Error::Unsupported("volume-ratio potential is only closed-form for a single Bergman potential".into())),
        }
    }

    pub fn value(&self, x: &[C64]) -> f64 {
        let nx = norm_sqr(x);
        self.constant
            + self
                .terms
                .iter()
                .map(|(w, m)| {
                    let y = mat_vec(m, x);
                    w * (norm_sqr(&y) / nx).ln()
                })
                .sum::<f64>()
    }

    /// `∂∂̄φ` in the chart's local coordinates.
    pub fn chart_hessian(&self, chart: &Chart) -> CMat {
        let n = chart.zhat.len() - 1;
        let mut h = CMat::zeros(n, n);
        if self.terms.is_empty() {
            return h;
        }
        let g = log_norm_hessian(None, chart);
        for (w, m) in &self.terms {
            h += (log_norm_hessian(Some(m), chart) - &g) * C64::new(*w, 0.0);
        }
        h
    }

    /// Hessian of the deformed Kähler potential `log‖ẑ‖² + φ`.
    pub fn metric_hessian(&self, chart: &Chart) -> CMat {
        log_norm_hessian(None, chart) + self.chart_hessian(chart)
    }
}
