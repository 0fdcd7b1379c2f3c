//! Chow forms and dual-curve (discriminant) forms of plane curves.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, Signed, Zero};

use crate::coeff::{CRat, Coeff, CoeffKind};
use crate::error::{Error, PolyError, Result};
use crate::gcd::squarefree_part;
use crate::linalg::{adjugate, det, null_vector, signed_minors, sylvester_resultant, CMat, Ring};
use crate::poly::{AnyPoly, BlockGrading, ExactPoly, FloatPoly, MultiPoly};
use crate::projgeom::random_unit;
use crate::quadrature::{chunk_rng, PlaneCurve};

/// Relative threshold below which a singular value counts as zero.
pub const NULL_TOL: f64 = 1e-9;
/// Largest accepted `|D(∇F(x))|` on fresh curve points after normalization.
pub const TANGENT_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct CrossPoint<C> {
    pub coords: Vec<C>,
    pub degenerate: bool,
}

/// Intersection point of `m` hyperplanes of ℙᵐ as signed maximal minors.
pub fn generalized_cross<C: Coeff + Ring>(hs: &[Vec<C>]) -> Result<CrossPoint<C>> {
    let m = hs.len();
    if m == 0 || hs.iter().any(|h| h.len() != m + 1) {
        return Err(Error::Input(format!("generalized_cross needs m vectors of length m+1, got {m}")));
    }
    let coords = signed_minors(hs, &C::zero(), &C::one());
    let degenerate = coords.iter().all(|c| c.is_zero());
    Ok(CrossPoint { coords, degenerate })
}

/// `f(args_0, …, args_n)` for polynomial arguments sharing one grading.
pub fn substitute<C: Coeff>(f: &MultiPoly<C>, args: &[MultiPoly<C>]) -> Result<MultiPoly<C>> {
    if args.len() != f.grading().total_vars() {
        return Err(PolyError::DimensionMismatch { expected: f.grading().total_vars(), got: args.len() }.into());
    }
    let g = args[0].grading().clone();
    let mut powers: Vec<Vec<MultiPoly<C>>> = args.iter().map(|a| vec![MultiPoly::one(g.clone()), a.clone()]).collect();
    let mut out = MultiPoly::zero(g.clone());
    for (m, c) in f.terms() {
        let mut t = MultiPoly::constant(g.clone(), c.clone());
        for (i, &e) in m.exps().iter().enumerate() {
            let e = e as usize;
            while powers[i].len() <= e {
                let next = powers[i].last().unwrap().checked_mul(&args[i])?;
                powers[i].push(next);
            }
            if e > 0 {
                t = t.checked_mul(&powers[i][e])?;
            }
        }
        out = out.checked_add(&t)?;
    }
    Ok(out)
}

fn check_curve_input<C: Coeff>(f: &MultiPoly<C>, m: usize) -> Result<u32> {
    let g = f.grading();
    if g.num_blocks() != 1 || g.block_size(0) != m + 1 {
        return Err(Error::Input(format!("expected a form in one block of {} variables", m + 1)));
    }
    let d = f.multidegree()?[0];
    Ok(d)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChowForm<C> {
    pub poly: MultiPoly<C>,
    pub source_degree: u32,
}

/// `C(H₁, …, H_m) = F(H₁ × ⋯ × H_m)` on `m` hyperplane blocks.
pub fn chow_form_hypersurface<C: Coeff>(f: &MultiPoly<C>, m: usize) -> Result<ChowForm<C>> {
    let d = check_curve_input(f, m)?;
    let grading = BlockGrading::uniform("H", m, m + 1);
    let rows: Vec<Vec<MultiPoly<C>>> = (0..m)
        .map(|b| (0..=m).map(|i| MultiPoly::var(grading.clone(), b, i)).collect::<std::result::Result<_, _>>())
        .collect::<std::result::Result<_, _>>()?;
    let zero = MultiPoly::zero(grading.clone());
    let one = MultiPoly::one(grading.clone());
    let cross = signed_minors(&rows, &zero, &one);
    let poly = substitute(f, &cross)?;
    Ok(ChowForm { poly, source_degree: d })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BinaryForm<C> {
    /// `coeffs[k]` multiplies `s^{d-k} t^k`.
    pub coeffs: Vec<C>,
    /// The line lies inside the hypersurface (all coefficients vanish).
    pub contained: bool,
}

/// Coefficients of `F(s p + t q)` over any ring that the coefficients of `F`
/// lift into.
pub fn restrict_coeffs<C: Coeff, R: Ring>(f: &MultiPoly<C>, p: &[R], q: &[R], lift: impl Fn(&C) -> R, zero: &R) -> Vec<R> {
    let d = f.total_degree().unwrap_or(0) as usize;
    let mut out = vec![zero.clone(); d + 1];
    for (m, c) in f.terms() {
        let mut b = vec![lift(c)];
        for (i, &e) in m.exps().iter().enumerate() {
            for _ in 0..e {
                let mut next = vec![zero.clone(); b.len() + 1];
                for (k, x) in b.iter().enumerate() {
                    next[k] = next[k].r_add(&x.r_mul(&p[i]));
                    next[k + 1] = next[k + 1].r_add(&x.r_mul(&q[i]));
                }
                b = next;
            }
        }
        // homogeneous input: b has length d + 1
        for (k, x) in b.into_iter().enumerate() {
            out[k] = out[k].r_add(&x);
        }
    }
    out
}

/// Binary form `F(s p + t q)` on the line through `p` and `q`.
pub fn restrict_to_line<C: Coeff + Ring>(f: &MultiPoly<C>, p: &[C], q: &[C]) -> Result<BinaryForm<C>> {
    let n = f.grading().total_vars();
    if f.grading().num_blocks() != 1 || p.len() != n || q.len() != n {
        return Err(Error::Input("restrict_to_line needs a one-block form and two points of matching size".into()));
    }
    f.multidegree()?;
    let independent = (0..n).any(|i| (i + 1..n).any(|j| !(p[i].clone() * q[j].clone() - p[j].clone() * q[i].clone()).is_zero()));
    if !independent {
        return Err(Error::Degenerate("line points are proportional".into()));
    }
    let coeffs = restrict_coeffs(f, p, q, |c| c.clone(), &C::zero());
    let contained = coeffs.iter().all(|c| c.is_zero());
    Ok(BinaryForm { coeffs, contained })
}

/// Discriminant of a binary form, normalized so that for
/// `a s² + c st + e t²` it equals `c² − 4ae`:
/// `Disc = (−1)^{d(d−1)/2} Res(∂_s b, ∂_t b) / d^{d−2}`.
pub fn binary_discriminant<R: Ring>(b: &[R], zero: &R, one: &R) -> Result<R> {
    if b.len() < 3 {
        return Err(Error::Input(format!("binary discriminant needs degree ≥ 2, got {}", b.len() as i64 - 1)));
    }
    let d = b.len() - 1;
    let bs: Vec<R> = (0..d).map(|k| b[k].r_scale((d - k) as i64, 1)).collect();
    let bt: Vec<R> = (1..=d).map(|k| b[k].r_scale(k as i64, 1)).collect();
    let res = sylvester_resultant(&bs, &bt, zero, one);
    let sign = if (d * (d - 1) / 2) % 2 == 0 { 1 } else { -1 };
    Ok(res.r_scale(sign, (d as i64).pow(d as u32 - 2)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DualMethod {
    Eliminate,
    Interpolate,
    Adjugate,
}

impl fmt::Display for DualMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DualMethod::Eliminate => "eliminate",
            DualMethod::Interpolate => "interpolate",
            DualMethod::Adjugate => "adjugate",
        })
    }
}

impl std::str::FromStr for DualMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eliminate" => Ok(DualMethod::Eliminate),
            "interpolate" => Ok(DualMethod::Interpolate),
            "adjugate" => Ok(DualMethod::Adjugate),
            o => Err(Error::Input(format!("unknown dual method `{o}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiscriminantForm {
    pub poly: AnyPoly,
    /// Classical dual degree `d(d−1)` of the source curve.
    pub claimed_degree: u32,
    pub computed_degree: u32,
    pub method: DualMethod,
    /// Relative smallest singular value for interpolation, 0 for exact paths.
    pub residual: f64,
}

impl DiscriminantForm {
    pub fn kind(&self) -> CoeffKind {
        self.poly.kind()
    }

    pub fn to_float(&self) -> FloatPoly {
        self.poly.to_float()
    }
}

fn dual_grading() -> BlockGrading {
    BlockGrading::single("U", 3)
}

/// Scales an exact polynomial to coprime Gaussian-integer coefficients with
/// a positive real part on the leading term when possible.
pub fn integer_normalize(p: &ExactPoly) -> ExactPoly {
    if p.is_zero() {
        return p.clone();
    }
    let mut l = BigInt::one();
    for (_, c) in p.terms() {
        l = l.lcm(c.re.denom()).lcm(c.im.denom());
    }
    let lr = Ratio::from_integer(l);
    let scaled = p.scale(&CRat::real(lr));
    let mut g = BigInt::zero();
    for (_, c) in scaled.terms() {
        g = g.gcd(&c.re.to_integer()).gcd(&c.im.to_integer());
    }
    let mut s = Ratio::new(BigInt::one(), g);
    let (_, lead) = scaled.leading_term().expect("nonzero");
    if lead.re.is_negative() || (lead.re.is_zero() && lead.im.is_negative()) {
        s = -s;
    }
    scaled.scale(&CRat::real(s))
}

/// Dual curve through elimination. The line `u` is parametrized by
/// `u × e₀` and `u × e₁`; the binary discriminant of `F` on that pencil is
/// `u₂^{d(d−1)} D(u)`, and the spurious monomial factor is divided out.
pub fn discriminant_eliminate(f: &ExactPoly) -> Result<DiscriminantForm> {
    let d = check_curve_input(f, 2)?;
    if d < 2 {
        return Err(Error::Input("dual curve needs degree ≥ 2".into()));
    }
    let g = dual_grading();
    let u = |i: usize| MultiPoly::<CRat>::var(g.clone(), 0, i).expect("valid variable");
    let zero = MultiPoly::zero(g.clone());
    let one = MultiPoly::one(g.clone());
    let p = vec![zero.clone(), u(2), u(1).neg()];
    let q = vec![u(2).neg(), zero.clone(), u(0)];
    let b = restrict_coeffs(f, &p, &q, |c| MultiPoly::constant(g.clone(), c.clone()), &zero);
    let disc = binary_discriminant(&b, &zero, &one)?;
    if disc.is_zero() {
        return Err(Error::Degenerate("discriminant vanishes identically; the curve is singular".into()));
    }
    let content = disc.monomial_content();
    let mut core = disc.div_monomial(&content)?;
    let pivot = (0..3).max_by_key(|&v| core.degree_in(v).unwrap_or(0)).unwrap_or(0);
    core = squarefree_part(&core, pivot)?;
    let core = integer_normalize(&core);
    let computed = core.multidegree()?[0];
    if computed != d * (d - 1) {
        return Err(Error::Degenerate(format!("dual curve has degree {computed} instead of {}; the curve is singular", d * (d - 1))));
    }
    Ok(DiscriminantForm {
        poly: AnyPoly::Exact(core),
        claimed_degree: d * (d - 1),
        computed_degree: computed,
        method: DualMethod::Eliminate,
        residual: 0.0,
    })
}

/// All exponent vectors of total degree `k` in `n` variables, in descending
/// graded-lex order.
pub fn monomials_of_degree(n: usize, k: u32) -> Vec<Vec<u32>> {
    fn rec(n: usize, k: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if prefix.len() == n - 1 {
            prefix.push(k);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for e in (0..=k).rev() {
            prefix.push(e);
            rec(n, k - e, prefix, out);
            prefix.pop();
        }
    }
    let mut out = vec![];
    rec(n, k, &mut vec![], &mut out);
    out
}

fn monomial_value(e: &[u32], x: &[Complex64]) -> Complex64 {
    e.iter().zip(x).map(|(&k, z)| z.powu(k)).product()
}

/// Tangent lines `∇F(x)/‖∇F(x)‖` at curve points from seeded random slices.
pub fn sample_tangent_lines(curve: &PlaneCurve, count: usize, seed: u64) -> Result<Vec<Vec<Complex64>>> {
    let mut rng = chunk_rng(seed, 0);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count {
        attempts += 1;
        if attempts > 20 * count + 100 {
            return Err(Error::Numerical("could not sample regular curve points".into()));
        }
        let u = random_unit(3, &mut rng);
        let Some(pts) = curve.line_points(&u) else { continue };
        for x in pts {
            let g = curve.gradient(&x);
            let n = g.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            out.push(g.iter().map(|z| z / n).collect());
        }
    }
    out.truncate(count);
    Ok(out)
}

/// Dual curve by interpolation: the null vector of the evaluation matrix of
/// degree-`d(d−1)` monomials at sampled tangent lines.
pub fn discriminant_interpolate<C: Coeff>(f: &MultiPoly<C>, seed: u64) -> Result<DiscriminantForm> {
    let d = check_curve_input(f, 2)?;
    if d < 2 {
        return Err(Error::Input("dual curve needs degree ≥ 2".into()));
    }
    let curve = PlaneCurve::new(f)?;
    let k = d * (d - 1);
    let monos = monomials_of_degree(3, k);
    let rows = 2 * monos.len();
    let lines = sample_tangent_lines(&curve, rows, seed)?;
    let a = CMat::from_fn(rows, monos.len(), |i, j| monomial_value(&monos[j], &lines[i]));
    let (v, sv) = null_vector(&a).ok_or_else(|| Error::Numerical("SVD failed".into()))?;
    let smax = sv[0];
    let nullity = sv.iter().filter(|s| **s <= NULL_TOL * smax).count();
    if nullity != 1 {
        return Err(Error::Numerical(format!("interpolation null space has dimension {nullity}, expected 1")));
    }
    let residual = sv[sv.len() - 1] / smax;
    let maxabs = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let lead = v.iter().find(|z| z.norm() > 1e-10 * maxabs).copied().unwrap_or(Complex64::new(1.0, 0.0));
    let phase = lead.conj() / lead.norm();
    let g = dual_grading();
    let terms = monos
        .iter()
        .zip(&v)
        .map(|(e, c)| (e.clone(), c * phase / maxabs))
        .filter(|(_, c)| c.norm() > 1e-13);
    let poly = FloatPoly::from_terms(g, terms)?;
    let check = sample_tangent_lines(&curve, 24, seed ^ 0x5eed)?;
    let worst = check
        .iter()
        .map(|h| poly.eval_c64(&[h.clone()]).map(|z| z.norm()))
        .collect::<std::result::Result<Vec<_>, _>>()?
        .into_iter()
        .fold(0.0, f64::max);
    if worst > TANGENT_TOL {
        return Err(Error::Numerical(format!("interpolated dual misses fresh tangent lines (|D| = {worst:.2e})")));
    }
    Ok(DiscriminantForm {
        poly: AnyPoly::Float(poly),
        claimed_degree: k,
        computed_degree: k,
        method: DualMethod::Interpolate,
        residual,
    })
}

pub fn discriminant_form(f: &AnyPoly, method: DualMethod, seed: u64) -> Result<DiscriminantForm> {
    match (method, f) {
        (DualMethod::Eliminate, AnyPoly::Exact(p)) => discriminant_eliminate(p),
        (DualMethod::Eliminate, AnyPoly::Float(_)) => {
            Err(Error::Input("elimination needs exact coefficients; use the interpolate method for float input".into()))
        }
        (DualMethod::Interpolate, AnyPoly::Exact(p)) => discriminant_interpolate(p, seed),
        (DualMethod::Interpolate, AnyPoly::Float(p)) => discriminant_interpolate(p, seed),
        (DualMethod::Adjugate, AnyPoly::Exact(p)) => dual_conic_adjugate(&conic_matrix(p)?),
        (DualMethod::Adjugate, AnyPoly::Float(_)) => Err(Error::Input("the adjugate method needs an exact conic".into())),
    }
}

/// Symmetric matrix `A` with `F(x) = xᵀAx` for a conic.
pub fn conic_matrix(f: &ExactPoly) -> Result<Vec<Vec<CRat>>> {
    if check_curve_input(f, 2)? != 2 {
        return Err(Error::Input("expected a conic".into()));
    }
    let half = CRat::from_ratio(1, 2);
    let mut a = vec![vec![CRat::zero(); 3]; 3];
    for i in 0..3 {
        for j in i..3 {
            let mut e = vec![0u32; 3];
            e[i] += 1;
            e[j] += 1;
            let c = f.coeff(&e);
            if i == j {
                a[i][i] = c;
            } else {
                a[i][j] = c * half.clone();
                a[j][i] = a[i][j].clone();
            }
        }
    }
    Ok(a)
}

/// `uᵀ adj(A) u`, the dual of the conic `xᵀAx`.
pub fn dual_conic_adjugate(a: &[Vec<CRat>]) -> Result<DiscriminantForm> {
    if a.len() != 3 || a.iter().any(|r| r.len() != 3) {
        return Err(Error::Input("conic matrix must be 3x3".into()));
    }
    if (0..3).any(|i| (0..3).any(|j| a[i][j] != a[j][i])) {
        return Err(Error::Input("conic matrix must be symmetric".into()));
    }
    let (zero, one) = (CRat::zero(), CRat::one());
    if det(a, &zero, &one).is_zero() {
        return Err(Error::Degenerate("conic matrix is singular".into()));
    }
    let adj = adjugate(a, &zero, &one);
    let mut terms = vec![];
    for i in 0..3 {
        for j in 0..3 {
            let mut e = vec![0u32; 3];
            e[i] += 1;
            e[j] += 1;
            terms.push((e, adj[i][j].clone()));
        }
    }
    let poly = ExactPoly::from_terms(dual_grading(), terms)?;
    Ok(DiscriminantForm {
        poly: AnyPoly::Exact(poly),
        claimed_degree: 2,
        computed_degree: 2,
        method: DualMethod::Adjugate,
        residual: 0.0,
    })
}

pub type Rational = Ratio<i64>;

#[derive(Clone, Debug, PartialEq)]
pub struct DegreeData {
    pub ambient_dim: usize,
    pub d: u32,
    pub deg_k: i64,
    pub volume: Rational,
    pub mu: Rational,
    pub chow_degrees: Vec<u32>,
    pub disc_degrees: Vec<u32>,
}

impl DegreeData {
    /// Total degree of the Chow form.
    pub fn chow_total(&self) -> u32 {
        self.chow_degrees.iter().sum()
    }

    pub fn disc_total(&self) -> u32 {
        self.disc_degrees.iter().sum()
    }
}

/// Degree bookkeeping for a smooth plane curve of degree `d`.
pub fn degree_data_for(d: u32) -> Result<DegreeData> {
    if d < 2 {
        return Err(Error::Input("degree data needs d ≥ 2".into()));
    }
    let di = d as i64;
    let deg_k = di * (di - 3);
    let n = 1i64;
    // μ = (n/(n+1)) · (K·Lⁿ⁻¹)/Lⁿ with Lⁿ = d and K·Lⁿ⁻¹ = d(d−3)
    let mu = Rational::new(n, n + 1) * Rational::new(deg_k, di);
    Ok(DegreeData {
        ambient_dim: 2,
        d,
        deg_k,
        volume: Rational::from_integer(di),
        mu,
        chow_degrees: vec![d, d],
        disc_degrees: vec![d * (d - 1)],
    })
}

pub fn form_degree_data<C: Coeff>(f: &MultiPoly<C>, m: usize) -> Result<DegreeData> {
    if m != 2 {
        return Err(Error::Unsupported(format!("degree data is implemented for plane curves only (m = 2), got m = {m}")));
    }
    let d = check_curve_input(f, m)?;
    degree_data_for(d)
}

pub const FORM_FORMAT_VERSION: u32 = 1;

/// A form file: `key: value` header lines, a `---` separator, then the
/// polynomial in text format.
#[derive(Clone, Debug, PartialEq)]
pub struct FormFile {
    pub header: BTreeMap<String, String>,
    pub poly: AnyPoly,
}

impl FormFile {
    pub fn new(kind: &str, poly: AnyPoly, extra: &[(&str, String)]) -> Self {
        let mut header = BTreeMap::new();
        header.insert("format_version".to_string(), FORM_FORMAT_VERSION.to_string());
        header.insert("kind".to_string(), kind.to_string());
        let (grading, coeff) = match &poly {
            AnyPoly::Exact(p) => (p.grading().to_header(), "exact"),
            AnyPoly::Float(p) => (p.grading().to_header(), "float"),
        };
        header.insert("grading".to_string(), grading);
        header.insert("coeff".to_string(), coeff.to_string());
        for (k, v) in extra {
            header.insert(k.to_string(), v.clone());
        }
        FormFile { header, poly }
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.header {
            s.push_str(&format!("{k}: {v}\n"));
        }
        s.push_str("---\n");
        s.push_str(&self.poly.to_text());
        s.push('\n');
        s
    }

    /// Parses a form file. A file without a `---` separator is read as a
    /// bare polynomial in one block of three variables with exact
    /// coefficients. Lines starting with `#` are comments.
    pub fn parse(text: &str) -> Result<Self> {
        let lines: Vec<&str> = text.lines().filter(|l| !l.trim_start().starts_with('#')).collect();
        let (head, body): (Vec<&str>, Vec<&str>) = match lines.iter().position(|l| l.trim() == "---") {
            Some(i) => (lines[..i].to_vec(), lines[i + 1..].to_vec()),
            None => (vec![], lines),
        };
        let mut header = BTreeMap::new();
        for l in head.iter().filter(|l| !l.trim().is_empty()) {
            let (k, v) = l.split_once(':').ok_or_else(|| Error::Input(format!("bad header line `{l}`")))?;
            header.insert(k.trim().to_string(), v.trim().to_string());
        }
        if let Some(v) = header.get("format_version") {
            let major: u32 = v
                .split('.')
                .next()
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::Input(format!("bad format_version `{v}`")))?;
            if major > FORM_FORMAT_VERSION {
                return Err(Error::Input(format!("format_version {major} is newer than supported {FORM_FORMAT_VERSION}")));
            }
        }
        let grading = match header.get("grading") {
            Some(g) => BlockGrading::from_header(g)?,
            None => BlockGrading::single("x", 3),
        };
        let kind: CoeffKind = match header.get("coeff") {
            Some(k) => k.parse()?,
            None => CoeffKind::Exact,
        };
        let body = body.join(" ");
        if body.trim().is_empty() {
            return Err(Error::Input("form file has no polynomial".into()));
        }
        let poly = AnyPoly::parse(grading, kind, &body)?;
        Ok(FormFile { header, poly })
    }
}

/// Reads a plane curve from form-file text and checks its shape.
pub fn read_curve(text: &str) -> Result<AnyPoly> {
    let ff = FormFile::parse(text)?;
    let (blocks, homogeneous) = match &ff.poly {
        AnyPoly::Exact(p) => (p.grading().blocks().to_vec(), p.multidegree().map(|_| ())),
        AnyPoly::Float(p) => (p.grading().blocks().to_vec(), p.multidegree().map(|_| ())),
    };
    if blocks.len() != 1 || blocks[0].1 != 3 {
        return Err(Error::Input("a plane curve must be a form in one block of 3 variables".into()));
    }
    homogeneous?;
    Ok(ff.poly)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(s: &str) -> ExactPoly {
        MultiPoly::parse(BlockGrading::single("x", 3), s).unwrap()
    }

    fn u(s: &str) -> ExactPoly {
        MultiPoly::parse(dual_grading(), s).unwrap()
    }

    fn cr(v: i64) -> CRat {
        CRat::from_i64(v)
    }

    #[test]
    fn cross_examples() {
        let c = generalized_cross(&[vec![cr(1), cr(0), cr(0)], vec![cr(0), cr(1), cr(0)]]).unwrap();
        assert_eq!(c.coords, vec![cr(0), cr(0), cr(1)]);
        let c = generalized_cross(&[vec![cr(1), cr(0), cr(0)], vec![cr(0), cr(0), cr(1)]]).unwrap();
        assert_eq!(c.coords, vec![cr(0), cr(-1), cr(0)]);
        let h = vec![cr(1), cr(2), cr(3)];
        let c = generalized_cross(&[h.clone(), h]).unwrap();
        assert!(c.degenerate);
    }

    #[test]
    fn restrict_examples() {
        let b = restrict_to_line(&x("x0*x2 - x1^2"), &[cr(1), cr(0), cr(0)], &[cr(0), cr(0), cr(1)]).unwrap();
        assert_eq!(b.coeffs, vec![cr(0), cr(1), cr(0)]);
        let b = restrict_to_line(&x("x0^2"), &[cr(0), cr(1), cr(0)], &[cr(0), cr(0), cr(1)]).unwrap();
        assert!(b.contained);
        let b = restrict_to_line(&x("x0^2 + x1^2 + x2^2"), &[cr(1), cr(0), cr(0)], &[cr(0), cr(1), cr(0)]).unwrap();
        assert_eq!(b.coeffs, vec![cr(1), cr(0), cr(1)]);
        assert!(restrict_to_line(&x("x0^2"), &[cr(1), cr(2), cr(0)], &[cr(2), cr(4), cr(0)]).is_err());
    }

    #[test]
    fn binary_discriminant_examples() {
        let (z, o) = (CRat::zero(), CRat::one());
        assert_ne!(binary_discriminant(&[cr(0), cr(1), cr(0)], &z, &o).unwrap(), z);
        assert_eq!(binary_discriminant(&[cr(1), cr(0), cr(0)], &z, &o).unwrap(), z);
        assert_eq!(binary_discriminant(&[cr(1), cr(0), cr(1)], &z, &o).unwrap(), cr(-4));
        // s³ − s t² has roots 0, ±1: the usual cubic discriminant is 4
        assert_eq!(binary_discriminant(&[cr(1), cr(0), cr(-1), cr(0)], &z, &o).unwrap(), cr(4));
        assert!(binary_discriminant(&[cr(1), cr(1)], &z, &o).is_err());
    }

    #[test]
    fn conic_duals() {
        let d = discriminant_eliminate(&x("x0*x2 - x1^2")).unwrap();
        assert_eq!(d.poly, AnyPoly::Exact(u("4*x0*x2 - x1^2")));
        let d = discriminant_eliminate(&x("x0^2 + x1^2 + x2^2")).unwrap();
        assert_eq!(d.poly, AnyPoly::Exact(u("x0^2 + x1^2 + x2^2")));
        let a = vec![vec![cr(1), cr(0), cr(0)], vec![cr(0), cr(2), cr(0)], vec![cr(0), cr(0), cr(3)]];
        let d = dual_conic_adjugate(&a).unwrap();
        assert_eq!(d.poly, AnyPoly::Exact(u("6*x0^2 + 3*x1^2 + 2*x2^2")));
    }

    #[test]
    fn degree_data_examples() {
        let dd = degree_data_for(2).unwrap();
        assert_eq!((dd.deg_k, dd.mu), (-2, Rational::new(-1, 2)));
        assert_eq!(dd.chow_degrees, vec![2, 2]);
        let dd = degree_data_for(3).unwrap();
        assert_eq!((dd.deg_k, dd.mu, dd.disc_degrees.clone()), (0, Rational::from_integer(0), vec![6]));
        let dd = degree_data_for(4).unwrap();
        assert_eq!((dd.deg_k, dd.mu, dd.disc_degrees.clone()), (4, Rational::new(1, 2), vec![12]));
        assert!(form_degree_data(&x("x0"), 3).is_err());
    }

    #[test]
    fn form_file_roundtrip() {
        let f = FormFile::new("curve", AnyPoly::Exact(x("x0*x2 - x1^2")), &[("source_degree", "2".into())]);
        let back = FormFile::parse(&f.render()).unwrap();
        assert_eq!(back, f);
        assert!(FormFile::parse("format_version: 2\n---\nx0").is_err());
        assert_eq!(read_curve("# conic\nx0*x2 - x1^2\n").unwrap(), AnyPoly::Exact(x("x0*x2 - x1^2")));
    }
}
