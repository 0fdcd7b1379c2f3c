//! Sparse multivariate polynomials with block grading.
//!
//! Variables are grouped into blocks, one block per projective factor. The
//! variable `k` of block `b` is written `x<b>_<k>` in the text format. Terms
//! are kept in a map keyed by exponent vector under graded-lex order, so
//! iteration and serialization are deterministic.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coeff::{CRat, Coeff, CoeffKind};
use crate::error::PolyError;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BlockGrading {
    blocks: Vec<(String, usize)>,
}

impl BlockGrading {
    pub fn new(blocks: Vec<(String, usize)>) -> Result<Self, PolyError> {
        if blocks.is_empty() {
            return Err(PolyError::InvalidGrading("at least one block is required".into()));
        }
        let mut seen = BTreeSet::new();
        for (name, n) in &blocks {
            if *n == 0 {
                return Err(PolyError::InvalidGrading(format!("block `{name}` has no variables")));
            }
            if name.is_empty() || name.contains([',', ':', ' ']) {
                return Err(PolyError::InvalidGrading(format!("bad block name `{name}`")));
            }
            if !seen.insert(name.clone()) {
                return Err(PolyError::InvalidGrading(format!("duplicate block name `{name}`")));
            }
        }
        Ok(BlockGrading { blocks })
    }

    /// One block of `n` variables.
    pub fn single(name: &str, n: usize) -> Self {
        BlockGrading::new(vec![(name.to_string(), n)]).expect("valid single-block grading")
    }

    /// `count` blocks of `n` variables each, named `<prefix>1 .. <prefix>count`.
    pub fn uniform(prefix: &str, count: usize, n: usize) -> Self {
        BlockGrading::new((1..=count).map(|i| (format!("{prefix}{i}"), n)).collect())
            .expect("valid uniform grading")
    }

    pub fn blocks(&self) -> &[(String, usize)] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_size(&self, b: usize) -> usize {
        self.blocks[b].1
    }

    pub fn offset(&self, b: usize) -> usize {
        self.blocks[..b].iter().map(|(_, n)| n).sum()
    }

    pub fn total_vars(&self) -> usize {
        self.blocks.iter().map(|(_, n)| n).sum()
    }

    /// Block and in-block index of a flat variable index.
    pub fn locate(&self, var: usize) -> Option<(usize, usize)> {
        let mut start = 0;
        for (b, (_, n)) in self.blocks.iter().enumerate() {
            if var < start + n {
                return Some((b, var - start));
            }
            start += n;
        }
        None
    }

    pub fn var_index(&self, block: usize, idx: usize) -> Option<usize> {
        (block < self.blocks.len() && idx < self.blocks[block].1).then(|| self.offset(block) + idx)
    }

    pub fn var_name(&self, var: usize) -> String {
        let (b, k) = self.locate(var).expect("variable in range");
        format!("x{b}_{k}")
    }

    /// `name:n,name:n` form used in file headers.
    pub fn to_header(&self) -> String {
        self.blocks.iter().map(|(s, n)| format!("{s}:{n}")).collect::<Vec<_>>().join(",")
    }

    pub fn from_header(s: &str) -> Result<Self, PolyError> {
        let blocks = s
            .split(',')
            .map(|part| {
                let (name, n) = part
                    .split_once(':')
                    .ok_or_else(|| PolyError::Parse(format!("bad grading entry `{part}`")))?;
                let n = n
                    .trim()
                    .parse()
                    .map_err(|_| PolyError::Parse(format!("bad block size in `{part}`")))?;
                Ok((name.trim().to_string(), n))
            })
            .collect::<Result<Vec<_>, PolyError>>()?;
        BlockGrading::new(blocks)
    }
}

/// Exponent vector. Ordered graded-lex: by total degree, then lexicographically
/// with the first variable most significant.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial(pub Vec<u32>);

impl Monomial {
    pub fn one(n: usize) -> Self {
        Monomial(vec![0; n])
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn exps(&self) -> &[u32] {
        &self.0
    }

    pub fn mul(&self, o: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&o.0).map(|(a, b)| a + b).collect())
    }

    pub fn divides(&self, o: &Monomial) -> bool {
        self.0.iter().zip(&o.0).all(|(a, b)| a <= b)
    }

    /// `o / self`, assuming `self` divides `o`.
    pub fn quotient_of(&self, o: &Monomial) -> Monomial {
        Monomial(o.0.iter().zip(&self.0).map(|(a, b)| a - b).collect())
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultiPoly<C> {
    grading: BlockGrading,
    terms: BTreeMap<Monomial, C>,
}

pub type ExactPoly = MultiPoly<CRat>;
pub type FloatPoly = MultiPoly<Complex64>;

impl<C: Coeff> MultiPoly<C> {
    pub fn zero(grading: BlockGrading) -> Self {
        MultiPoly { grading, terms: BTreeMap::new() }
    }

    pub fn constant(grading: BlockGrading, c: C) -> Self {
        let mut p = MultiPoly::zero(grading);
        let n = p.grading.total_vars();
        p.add_term(Monomial::one(n), c);
        p
    }

    pub fn one(grading: BlockGrading) -> Self {
        MultiPoly::constant(grading, C::one())
    }

    /// The variable `x<block>_<idx>`.
    pub fn var(grading: BlockGrading, block: usize, idx: usize) -> Result<Self, PolyError> {
        let v = grading.var_index(block, idx).ok_or(PolyError::InvalidBlock(block))?;
        Ok(MultiPoly::var_flat(grading, v))
    }

    pub(crate) fn var_flat(grading: BlockGrading, v: usize) -> Self {
        let mut e = vec![0; grading.total_vars()];
        e[v] = 1;
        let mut p = MultiPoly::zero(grading);
        p.terms.insert(Monomial(e), C::one());
        p
    }

    /// Linear form `Σ c_k x<block>_k`.
    pub fn linear_form(grading: BlockGrading, block: usize, coeffs: &[C]) -> Result<Self, PolyError> {
        if block >= grading.num_blocks() {
            return Err(PolyError::InvalidBlock(block));
        }
        let n = grading.block_size(block);
        if coeffs.len() != n {
            return Err(PolyError::DimensionMismatch { expected: n, got: coeffs.len() });
        }
        let off = grading.offset(block);
        let total = grading.total_vars();
        let mut p = MultiPoly::zero(grading);
        for (k, c) in coeffs.iter().enumerate() {
            let mut e = vec![0; total];
            e[off + k] = 1;
            p.add_term(Monomial(e), c.clone());
        }
        Ok(p)
    }

    pub fn from_terms<I>(grading: BlockGrading, terms: I) -> Result<Self, PolyError>
    where
        I: IntoIterator<Item = (Vec<u32>, C)>,
    {
        let n = grading.total_vars();
        let mut p = MultiPoly::zero(grading);
        for (e, c) in terms {
            if e.len() != n {
                return Err(PolyError::DimensionMismatch { expected: n, got: e.len() });
            }
            p.add_term(Monomial(e), c);
        }
        Ok(p)
    }

    fn add_term(&mut self, m: Monomial, c: C) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(existing) => {
                let sum = existing.clone() + c;
                if sum.is_zero() {
                    self.terms.remove(&m);
                } else {
                    *existing = sum;
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    pub fn grading(&self) -> &BlockGrading {
        &self.grading
    }

    pub fn kind(&self) -> CoeffKind {
        C::KIND
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Terms in descending graded-lex order.
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &C)> {
        self.terms.iter().rev()
    }

    pub fn coeff(&self, m: &[u32]) -> C {
        self.terms.get(&Monomial(m.to_vec())).cloned().unwrap_or_else(C::zero)
    }

    pub fn leading_term(&self) -> Option<(&Monomial, &C)> {
        self.terms.iter().next_back()
    }

    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::degree).max()
    }

    fn check_same(&self, o: &Self) -> Result<(), PolyError> {
        if self.grading != o.grading {
            return Err(PolyError::GradingMismatch);
        }
        Ok(())
    }

    pub fn checked_add(&self, o: &Self) -> Result<Self, PolyError> {
        self.check_same(o)?;
        let mut r = self.clone();
        for (m, c) in &o.terms {
            r.add_term(m.clone(), c.clone());
        }
        Ok(r)
    }

    pub fn checked_sub(&self, o: &Self) -> Result<Self, PolyError> {
        self.check_same(o)?;
        let mut r = self.clone();
        for (m, c) in &o.terms {
            r.add_term(m.clone(), -c.clone());
        }
        Ok(r)
    }

    pub fn checked_mul(&self, o: &Self) -> Result<Self, PolyError> {
        self.check_same(o)?;
        let mut r = MultiPoly::zero(self.grading.clone());
        for (ma, ca) in &self.terms {
            for (mb, cb) in &o.terms {
                r.add_term(ma.mul(mb), ca.clone() * cb.clone());
            }
        }
        Ok(r)
    }

    pub fn scale(&self, c: &C) -> Self {
        let mut r = MultiPoly::zero(self.grading.clone());
        if c.is_zero() {
            return r;
        }
        for (m, a) in &self.terms {
            r.add_term(m.clone(), a.clone() * c.clone());
        }
        r
    }

    pub fn neg(&self) -> Self {
        self.scale(&-C::one())
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = MultiPoly::one(self.grading.clone());
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.checked_mul(&base).expect("same grading");
            }
            e >>= 1;
            if e > 0 {
                base = base.checked_mul(&base).expect("same grading");
            }
        }
        acc
    }

    pub fn mul_monomial(&self, m: &Monomial, c: &C) -> Self {
        let mut r = MultiPoly::zero(self.grading.clone());
        for (mm, a) in &self.terms {
            r.add_term(mm.mul(m), a.clone() * c.clone());
        }
        r
    }

    fn check_points<T>(&self, pts: &[Vec<T>]) -> Result<(), PolyError> {
        if pts.len() != self.grading.num_blocks() {
            return Err(PolyError::DimensionMismatch {
                expected: self.grading.num_blocks(),
                got: pts.len(),
            });
        }
        for (b, v) in pts.iter().enumerate() {
            if v.len() != self.grading.block_size(b) {
                return Err(PolyError::DimensionMismatch {
                    expected: self.grading.block_size(b),
                    got: v.len(),
                });
            }
        }
        Ok(())
    }

    /// Evaluation at one coordinate vector per block, in the coefficient domain.
    pub fn eval(&self, pts: &[Vec<C>]) -> Result<C, PolyError> {
        self.check_points(pts)?;
        let flat: Vec<C> = pts.iter().flatten().cloned().collect();
        let mut acc = C::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (v, &e) in m.0.iter().enumerate() {
                for _ in 0..e {
                    t = t * flat[v].clone();
                }
            }
            acc = acc + t;
        }
        Ok(acc)
    }

    /// Floating-point evaluation regardless of coefficient kind.
    pub fn eval_c64(&self, pts: &[Vec<Complex64>]) -> Result<Complex64, PolyError> {
        self.check_points(pts)?;
        let flat: Vec<Complex64> = pts.iter().flatten().copied().collect();
        Ok(CompiledPoly::new(self).eval(&flat))
    }

    /// Formal partial derivative in the flat variable `var`.
    pub fn diff(&self, var: usize) -> Result<Self, PolyError> {
        if var >= self.grading.total_vars() {
            return Err(PolyError::InvalidVariable(var));
        }
        let mut r = MultiPoly::zero(self.grading.clone());
        for (m, c) in &self.terms {
            let e = m.0[var];
            if e == 0 {
                continue;
            }
            let mut nm = m.clone();
            nm.0[var] -= 1;
            r.add_term(nm, c.clone() * C::from_i64(e as i64));
        }
        Ok(r)
    }

    /// Substitutes `x ↦ M x` in one block: `x_i ↦ Σ_j M[i][j] x_j`, so that
    /// evaluating the result at `x` equals evaluating `self` at `M x`.
    pub fn compose_linear(&self, block: usize, m: &[Vec<C>]) -> Result<Self, PolyError> {
        if block >= self.grading.num_blocks() {
            return Err(PolyError::InvalidBlock(block));
        }
        let n = self.grading.block_size(block);
        if m.len() != n {
            return Err(PolyError::DimensionMismatch { expected: n, got: m.len() });
        }
        if let Some(row) = m.iter().find(|r| r.len() != n) {
            return Err(PolyError::DimensionMismatch { expected: n, got: row.len() });
        }
        let off = self.grading.offset(block);
        let images: Vec<Self> = m
            .iter()
            .map(|row| MultiPoly::linear_form(self.grading.clone(), block, row))
            .collect::<Result<_, _>>()?;
        // cache powers of the substituted linear forms
        let mut powers: Vec<Vec<Self>> = images.iter().map(|l| vec![MultiPoly::one(self.grading.clone()), l.clone()]).collect();
        let mut r = MultiPoly::zero(self.grading.clone());
        for (mono, c) in &self.terms {
            let mut rest = mono.clone();
            let mut t = MultiPoly::constant(self.grading.clone(), c.clone());
            for i in 0..n {
                let e = mono.0[off + i] as usize;
                rest.0[off + i] = 0;
                if e == 0 {
                    continue;
                }
                while powers[i].len() <= e {
                    let next = powers[i].last().unwrap().checked_mul(&images[i])?;
                    powers[i].push(next);
                }
                t = t.checked_mul(&powers[i][e])?;
            }
            let t = t.mul_monomial(&rest, &C::one());
            r = r.checked_add(&t)?;
        }
        Ok(r)
    }

    /// Per-block degree vector of a term.
    pub fn block_degrees(&self, m: &Monomial) -> Vec<u32> {
        (0..self.grading.num_blocks())
            .map(|b| {
                let off = self.grading.offset(b);
                m.0[off..off + self.grading.block_size(b)].iter().sum()
            })
            .collect()
    }

    pub fn is_homogeneous(&self) -> bool {
        self.multidegree().is_ok()
    }

    /// Per-block degrees of a block-homogeneous polynomial.
    pub fn multidegree(&self) -> Result<Vec<u32>, PolyError> {
        let mut it = self.terms.keys();
        let first = it.next().ok_or(PolyError::ZeroPolynomial)?;
        let deg = self.block_degrees(first);
        if it.any(|m| self.block_degrees(m) != deg) {
            return Err(PolyError::NotHomogeneous);
        }
        Ok(deg)
    }

    pub fn map_coeffs<D: Coeff>(&self, f: impl Fn(&C) -> D) -> MultiPoly<D> {
        let mut r = MultiPoly::zero(self.grading.clone());
        for (m, c) in &self.terms {
            r.add_term(m.clone(), f(c));
        }
        r
    }

    pub fn to_float(&self) -> FloatPoly {
        self.map_coeffs(|c| c.to_c64())
    }

    /// Same terms under a different grading with the same number of variables.
    pub fn regrade(&self, grading: BlockGrading) -> Result<Self, PolyError> {
        if grading.total_vars() != self.grading.total_vars() {
            return Err(PolyError::GradingMismatch);
        }
        Ok(MultiPoly { grading, terms: self.terms.clone() })
    }

    /// Flat indices of variables that occur with positive exponent.
    pub fn variables(&self) -> BTreeSet<usize> {
        let mut s = BTreeSet::new();
        for m in self.terms.keys() {
            for (v, &e) in m.0.iter().enumerate() {
                if e > 0 {
                    s.insert(v);
                }
            }
        }
        s
    }

    pub fn degree_in(&self, var: usize) -> Option<u32> {
        self.terms.keys().map(|m| m.0[var]).max()
    }

    /// Coefficients of `self` viewed as a univariate polynomial in `var`;
    /// entry `k` multiplies `var^k` and does not involve `var`.
    pub fn coefficients_in(&self, var: usize) -> Vec<Self> {
        let deg = self.degree_in(var).unwrap_or(0) as usize;
        let mut out = vec![MultiPoly::zero(self.grading.clone()); deg + 1];
        if self.is_zero() {
            return vec![];
        }
        for (m, c) in &self.terms {
            let k = m.0[var] as usize;
            let mut nm = m.clone();
            nm.0[var] = 0;
            out[k].add_term(nm, c.clone());
        }
        out
    }

    pub fn from_coefficients_in(grading: &BlockGrading, var: usize, coeffs: &[Self]) -> Self {
        let mut r = MultiPoly::zero(grading.clone());
        let n = grading.total_vars();
        for (k, c) in coeffs.iter().enumerate() {
            let mut m = Monomial::one(n);
            m.0[var] = k as u32;
            for (mm, a) in &c.terms {
                r.add_term(mm.mul(&m), a.clone());
            }
        }
        r
    }

    /// Largest monomial dividing every term (the per-variable content).
    pub fn monomial_content(&self) -> Monomial {
        let n = self.grading.total_vars();
        let mut it = self.terms.keys();
        let Some(first) = it.next() else { return Monomial::one(n) };
        let mut e = first.0.clone();
        for m in it {
            for (a, b) in e.iter_mut().zip(&m.0) {
                *a = (*a).min(*b);
            }
        }
        Monomial(e)
    }

    pub fn div_monomial(&self, m: &Monomial) -> Result<Self, PolyError> {
        let mut r = MultiPoly::zero(self.grading.clone());
        for (mm, c) in &self.terms {
            if !m.divides(mm) {
                return Err(PolyError::NotDivisible);
            }
            r.terms.insert(m.quotient_of(mm), c.clone());
        }
        Ok(r)
    }

    /// Exact division; fails when `d` does not divide `self`.
    pub fn exact_div(&self, d: &Self) -> Result<Self, PolyError> {
        self.check_same(d)?;
        let (lm, lc) = d.leading_term().ok_or(PolyError::ZeroPolynomial)?;
        let (lm, lc) = (lm.clone(), lc.clone());
        let mut rem = self.clone();
        let mut q = MultiPoly::zero(self.grading.clone());
        while let Some((m, c)) = rem.leading_term() {
            if !lm.divides(m) {
                return Err(PolyError::NotDivisible);
            }
            let qm = lm.quotient_of(m);
            let qc = c.clone() / lc.clone();
            rem = rem.checked_sub(&d.mul_monomial(&qm, &qc))?;
            q.add_term(qm, qc);
        }
        Ok(q)
    }

    /// Divides by the leading coefficient.
    pub fn monic(&self) -> Self {
        match self.leading_term() {
            Some((_, c)) => {
                let inv = C::one() / c.clone();
                self.scale(&inv)
            }
            None => self.clone(),
        }
    }

    /// Text form: `(c)*x0_0^2*x1_2 + (c)*...`, descending graded-lex.
    pub fn to_text(&self) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut parts = Vec::with_capacity(self.terms.len());
        for (m, c) in self.terms() {
            let mut s = format!("({})", c.format());
            for (v, &e) in m.0.iter().enumerate() {
                match e {
                    0 => {}
                    1 => s.push_str(&format!("*{}", self.grading.var_name(v))),
                    _ => s.push_str(&format!("*{}^{e}", self.grading.var_name(v))),
                }
            }
            parts.push(s);
        }
        parts.join(" + ")
    }

    pub fn parse(grading: BlockGrading, text: &str) -> Result<Self, PolyError> {
        Parser::new(text, grading).parse_poly()
    }
}

impl<C: Coeff> fmt::Display for MultiPoly<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// The three arithmetic operations of the polynomial core.
#[derive(Clone, Debug)]
pub enum Arith<C> {
    Add,
    Mul,
    Scale(C),
}

pub fn poly_arith<C: Coeff>(p: &MultiPoly<C>, q: Option<&MultiPoly<C>>, op: Arith<C>) -> Result<MultiPoly<C>, PolyError> {
    match (op, q) {
        (Arith::Add, Some(q)) => p.checked_add(q),
        (Arith::Mul, Some(q)) => p.checked_mul(q),
        (Arith::Scale(c), None) => Ok(p.scale(&c)),
        (Arith::Scale(_), Some(_)) => Err(PolyError::Parse("scale takes a single operand".into())),
        (_, None) => Err(PolyError::Parse("binary operation needs two operands".into())),
    }
}

/// A polynomial whose coefficient kind is only known at run time (file input).
#[derive(Clone, Debug, PartialEq)]
pub enum AnyPoly {
    Exact(ExactPoly),
    Float(FloatPoly),
}

impl AnyPoly {
    pub fn kind(&self) -> CoeffKind {
        match self {
            AnyPoly::Exact(_) => CoeffKind::Exact,
            AnyPoly::Float(_) => CoeffKind::Float,
        }
    }

    pub fn parse(grading: BlockGrading, kind: CoeffKind, text: &str) -> Result<Self, PolyError> {
        Ok(match kind {
            CoeffKind::Exact => AnyPoly::Exact(MultiPoly::parse(grading, text)?),
            CoeffKind::Float => AnyPoly::Float(MultiPoly::parse(grading, text)?),
        })
    }

    pub fn to_float(&self) -> FloatPoly {
        match self {
            AnyPoly::Exact(p) => p.to_float(),
            AnyPoly::Float(p) => p.clone(),
        }
    }

    pub fn to_text(&self) -> String {
        match self {
            AnyPoly::Exact(p) => p.to_text(),
            AnyPoly::Float(p) => p.to_text(),
        }
    }

    fn mismatch(&self, o: &AnyPoly) -> PolyError {
        PolyError::CoeffKindMismatch { left: self.kind(), right: o.kind() }
    }

    pub fn checked_add(&self, o: &AnyPoly) -> Result<AnyPoly, PolyError> {
        match (self, o) {
            (AnyPoly::Exact(a), AnyPoly::Exact(b)) => Ok(AnyPoly::Exact(a.checked_add(b)?)),
            (AnyPoly::Float(a), AnyPoly::Float(b)) => Ok(AnyPoly::Float(a.checked_add(b)?)),
            _ => Err(self.mismatch(o)),
        }
    }

    pub fn checked_mul(&self, o: &AnyPoly) -> Result<AnyPoly, PolyError> {
        match (self, o) {
            (AnyPoly::Exact(a), AnyPoly::Exact(b)) => Ok(AnyPoly::Exact(a.checked_mul(b)?)),
            (AnyPoly::Float(a), AnyPoly::Float(b)) => Ok(AnyPoly::Float(a.checked_mul(b)?)),
            _ => Err(self.mismatch(o)),
        }
    }
}

/// Float polynomial flattened for fast repeated evaluation.
#[derive(Clone, Debug)]
pub struct CompiledPoly {
    nvars: usize,
    max_exp: Vec<u32>,
    terms: Vec<(Complex64, Vec<(usize, u32)>)>,
}

impl CompiledPoly {
    pub fn new<C: Coeff>(p: &MultiPoly<C>) -> Self {
        let nvars = p.grading.total_vars();
        let mut max_exp = vec![0u32; nvars];
        let terms = p
            .terms
            .iter()
            .map(|(m, c)| {
                let factors: Vec<(usize, u32)> = m
                    .0
                    .iter()
                    .enumerate()
                    .filter(|(_, &e)| e > 0)
                    .map(|(v, &e)| {
                        max_exp[v] = max_exp[v].max(e);
                        (v, e)
                    })
                    .collect();
                (c.to_c64(), factors)
            })
            .collect();
        CompiledPoly { nvars, max_exp, terms }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    /// Evaluates at a flat coordinate vector (blocks concatenated).
    pub fn eval(&self, x: &[Complex64]) -> Complex64 {
        debug_assert_eq!(x.len(), self.nvars);
        // power table: pows[v][e-1] = x_v^e
        let width = self.max_exp.iter().copied().max().unwrap_or(0) as usize;
        let mut pows = vec![Complex64::new(0.0, 0.0); self.nvars * width.max(1)];
        for v in 0..self.nvars {
            let mut acc = Complex64::new(1.0, 0.0);
            for e in 0..self.max_exp[v] as usize {
                acc *= x[v];
                pows[v * width + e] = acc;
            }
        }
        let mut sum = Complex64::new(0.0, 0.0);
        for (c, factors) in &self.terms {
            let mut t = *c;
            for &(v, e) in factors {
                t *= pows[v * width + e as usize - 1];
            }
            sum += t;
        }
        sum
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    grading: BlockGrading,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str, grading: BlockGrading) -> Self {
        Parser { src, pos: 0, grading }
    }

    fn err(&self, msg: &str) -> PolyError {
        PolyError::Parse(format!("{msg} at byte {} in `{}`", self.pos, self.src.trim()))
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn parse_poly<C: Coeff>(&mut self) -> Result<MultiPoly<C>, PolyError> {
        let mut p = MultiPoly::zero(self.grading.clone());
        self.skip_ws();
        if self.peek().is_none() {
            return Err(self.err("empty polynomial"));
        }
        let mut first = true;
        loop {
            self.skip_ws();
            let mut sign = C::one();
            match self.peek() {
                Some('+') => {
                    self.bump();
                }
                Some('-') => {
                    self.bump();
                    sign = -C::one();
                }
                None => break,
                _ if first => {}
                _ => return Err(self.err("expected `+` or `-` between terms")),
            }
            first = false;
            let (m, c) = self.parse_term::<C>()?;
            p.add_term(m, sign * c);
        }
        Ok(p)
    }

    fn parse_term<C: Coeff>(&mut self) -> Result<(Monomial, C), PolyError> {
        let mut mono = Monomial::one(self.grading.total_vars());
        let mut coeff = C::one();
        loop {
            self.skip_ws();
            match self.peek() {
                Some('(') => {
                    self.bump();
                    let start = self.pos;
                    let mut depth = 1;
                    while let Some(c) = self.bump() {
                        match c {
                            '(' => depth += 1,
                            ')' => {
                                depth -= 1;
                                if depth == 0 {
                                    break;
                                }
                            }
                            _ => {}
                        }
                    }
                    if depth != 0 {
                        return Err(self.err("unbalanced parenthesis"));
                    }
                    let inner = &self.src[start..self.pos - 1];
                    coeff = coeff * C::parse(inner)?;
                }
                Some('x') => {
                    self.bump();
                    let v = self.parse_var()?;
                    let e = self.parse_exponent()?;
                    mono.0[v] += e;
                }
                Some('i') => {
                    self.bump();
                    coeff = coeff * C::parse("i")?;
                }
                Some(c) if c.is_ascii_digit() || c == '.' => {
                    let start = self.pos;
                    while let Some(c) = self.peek() {
                        let prev = self.src[..self.pos].chars().last();
                        let exp_sign = matches!(c, '+' | '-') && matches!(prev, Some('e') | Some('E'));
                        if c.is_ascii_digit() || matches!(c, '.' | '/' | 'e' | 'E') || exp_sign {
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    coeff = coeff * C::parse(&self.src[start..self.pos])?;
                }
                _ => return Err(self.err("expected a coefficient or variable")),
            }
            self.skip_ws();
            if self.peek() == Some('*') {
                self.bump();
            } else {
                break;
            }
        }
        Ok((mono, coeff))
    }

    fn parse_uint(&mut self) -> Result<usize, PolyError> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.bump();
        }
        self.src[start..self.pos].parse().map_err(|_| self.err("expected an integer"))
    }

    fn parse_var(&mut self) -> Result<usize, PolyError> {
        let a = self.parse_uint()?;
        let (block, idx) = if self.peek() == Some('_') {
            self.bump();
            (a, self.parse_uint()?)
        } else if self.grading.num_blocks() == 1 {
            (0, a)
        } else {
            return Err(self.err("variable needs a block index (x<block>_<idx>)"));
        };
        self.grading
            .var_index(block, idx)
            .ok_or_else(|| self.err(&format!("variable x{block}_{idx} is outside the grading")))
    }

    fn parse_exponent(&mut self) -> Result<u32, PolyError> {
        self.skip_ws();
        if self.peek() == Some('^') {
            self.bump();
            self.skip_ws();
            Ok(self.parse_uint()? as u32)
        } else {
            Ok(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::{One, Zero};

    fn g3() -> BlockGrading {
        BlockGrading::single("x", 3)
    }

    fn p(s: &str) -> ExactPoly {
        MultiPoly::parse(g3(), s).unwrap()
    }

    #[test]
    fn grading_validation() {
        assert!(BlockGrading::new(vec![]).is_err());
        assert!(BlockGrading::new(vec![("a".into(), 0)]).is_err());
        assert!(BlockGrading::new(vec![("a".into(), 2), ("a".into(), 2)]).is_err());
        let g = BlockGrading::from_header("H1:3,H2:3").unwrap();
        assert_eq!(g.total_vars(), 6);
        assert_eq!(g.locate(4), Some((1, 1)));
        assert_eq!(BlockGrading::from_header(&g.to_header()).unwrap(), g);
    }

    #[test]
    fn arithmetic_examples() {
        let sum = poly_arith(&p("x0^2"), Some(&p("x1^2")), Arith::Add).unwrap();
        assert_eq!(sum, p("x0^2 + x1^2"));
        let prod = poly_arith(&p("x0 + x1"), Some(&p("x0 - x1")), Arith::Mul).unwrap();
        assert_eq!(prod, p("x0^2 - x1^2"));
        let neg = poly_arith(&p("x0*x2 - x1^2"), None, Arith::Scale(CRat::from_i64(-1))).unwrap();
        assert_eq!(neg, p("x1^2 - x0*x2"));
    }

    #[test]
    fn zero_terms_are_pruned() {
        let a = p("x0 + x1");
        let b = p("-x0 + x2");
        let s = a.checked_add(&b).unwrap();
        assert_eq!(s.num_terms(), 2);
        assert!(a.checked_sub(&a).unwrap().is_zero());
    }

    #[test]
    fn grading_mismatch_is_reported() {
        let other = MultiPoly::<CRat>::parse(BlockGrading::single("y", 3), "x0").unwrap();
        assert_eq!(p("x0").checked_add(&other), Err(PolyError::GradingMismatch));
    }

    #[test]
    fn coeff_kind_mismatch_is_reported() {
        let a = AnyPoly::parse(g3(), CoeffKind::Exact, "x0").unwrap();
        let b = AnyPoly::parse(g3(), CoeffKind::Float, "x0").unwrap();
        assert!(matches!(a.checked_add(&b), Err(PolyError::CoeffKindMismatch { .. })));
    }

    #[test]
    fn eval_examples() {
        let f = p("x0*x2 - x1^2");
        let at = |v: [i64; 3]| f.eval(&[v.iter().map(|&a| CRat::from_i64(a)).collect()]).unwrap();
        assert_eq!(at([1, 0, 0]), CRat::zero());
        assert_eq!(at([1, 1, 1]), CRat::zero());
        assert_eq!(at([1, 2, 1]), CRat::from_i64(-3));
        assert!(f.eval(&[vec![CRat::one(); 2]]).is_err());
    }

    #[test]
    fn diff_examples() {
        assert_eq!(p("x0*x2 - x1^2").diff(1).unwrap(), p("-2*x1"));
        assert_eq!(p("x0^3").diff(0).unwrap(), p("3*x0^2"));
        assert!(p("x0*x2").diff(1).unwrap().is_zero());
        assert!(p("x0").diff(7).is_err());
    }

    #[test]
    fn compose_examples() {
        let o = CRat::zero;
        let l = CRat::one;
        let swap = vec![vec![o(), l(), o()], vec![l(), o(), o()], vec![o(), o(), l()]];
        assert_eq!(p("x0^2 + x1^2").compose_linear(0, &swap).unwrap(), p("x1^2 + x0^2"));
        let id = vec![vec![l(), o(), o()], vec![o(), l(), o()], vec![o(), o(), l()]];
        assert_eq!(p("x0*x2 - x1^2").compose_linear(0, &id).unwrap(), p("x0*x2 - x1^2"));
        let diag = vec![vec![CRat::from_i64(2), o(), o()], vec![o(), l(), o()], vec![o(), o(), l()]];
        assert_eq!(p("x0").compose_linear(0, &diag).unwrap(), p("2*x0"));
        assert!(p("x0").compose_linear(0, &[vec![l()]]).is_err());
    }

    #[test]
    fn multidegree_examples() {
        assert_eq!(p("x0*x2 - x1^2").multidegree().unwrap(), vec![2]);
        assert_eq!(p("x0 + x1^2").multidegree(), Err(PolyError::NotHomogeneous));
        let g = BlockGrading::uniform("H", 2, 3);
        let q: ExactPoly = MultiPoly::parse(g, "x0_0*x1_2 - x0_1*x1_1").unwrap();
        assert_eq!(q.multidegree().unwrap(), vec![1, 1]);
    }

    #[test]
    fn text_roundtrip_and_order() {
        let f = p("(1/2+3*i)*x0*x1 - x2^3 + 4");
        let t = f.to_text();
        assert_eq!(t, "(-1)*x0_2^3 + (1/2+3*i)*x0_0*x0_1 + (4)");
        assert_eq!(MultiPoly::parse(g3(), &t).unwrap(), f);
        assert_eq!(MultiPoly::<CRat>::zero(g3()).to_text(), "0");
    }

    #[test]
    fn parse_errors() {
        assert!(MultiPoly::<CRat>::parse(g3(), "x3").is_err());
        assert!(MultiPoly::<CRat>::parse(g3(), "x0 x1").is_err());
        assert!(MultiPoly::<CRat>::parse(g3(), "").is_err());
        let g = BlockGrading::uniform("H", 2, 3);
        assert!(MultiPoly::<CRat>::parse(g, "x0").is_err());
    }

    #[test]
    fn exact_division() {
        let a = p("x0 - x1");
        let b = p("x0^2 + x2");
        let prod = a.checked_mul(&b).unwrap();
        assert_eq!(prod.exact_div(&a).unwrap(), b);
        assert_eq!(prod.checked_add(&p("1")).unwrap().exact_div(&a), Err(PolyError::NotDivisible));
    }

    #[test]
    fn compiled_eval_matches_exact() {
        let f = p("(2-i)*x0^3*x1 - x1^2*x2^2 + (1/3)*x2^4");
        let pt = [CRat::gaussian(1, 1), CRat::from_ratio(-1, 2), CRat::gaussian(0, 2)];
        let exact = f.eval(&[pt.to_vec()]).unwrap().to_c64();
        let fl: Vec<Complex64> = pt.iter().map(|c| c.to_c64()).collect();
        let approx = CompiledPoly::new(&f).eval(&fl);
        assert!((exact - approx).norm() < 1e-12);
    }
}
