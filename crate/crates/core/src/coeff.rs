//! Coefficient domains: exact Gaussian rationals and double-precision complex.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::PolyError;

/// Which coefficient domain a polynomial lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoeffKind {
    Exact,
    Float,
}

impl fmt::Display for CoeffKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoeffKind::Exact => f.write_str("exact"),
            CoeffKind::Float => f.write_str("float"),
        }
    }
}

impl std::str::FromStr for CoeffKind {
    type Err = PolyError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "exact" => Ok(CoeffKind::Exact),
            "float" => Ok(CoeffKind::Float),
            other => Err(PolyError::Parse(format!("unknown coefficient kind `{other}`"))),
        }
    }
}

/// A field of coefficients usable by [`crate::poly::MultiPoly`].
pub trait Coeff:
    Clone
    + PartialEq
    + fmt::Debug
    + Zero
    + One
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Send
    + Sync
    + 'static
{
    const KIND: CoeffKind;
    fn from_i64(v: i64) -> Self;
    fn to_c64(&self) -> Complex64;
    fn conj(&self) -> Self;
    /// Text form used inside the polynomial format, without surrounding parentheses.
    fn format(&self) -> String;
    fn parse(s: &str) -> Result<Self, PolyError>;
}

/// Gaussian rational `re + im*i` with arbitrary-precision parts.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CRat {
    pub re: BigRational,
    pub im: BigRational,
}

impl CRat {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        CRat { re, im }
    }

    pub fn real(re: BigRational) -> Self {
        CRat { re, im: BigRational::zero() }
    }

    pub fn from_ratio(num: i64, den: i64) -> Self {
        CRat::real(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn gaussian(re: i64, im: i64) -> Self {
        CRat::new(BigRational::from_integer(re.into()), BigRational::from_integer(im.into()))
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn norm_sqr(&self) -> BigRational {
        &self.re * &self.re + &self.im * &self.im
    }

    pub fn inv(&self) -> Option<Self> {
        let n = self.norm_sqr();
        if n.is_zero() {
            return None;
        }
        Some(CRat::new(&self.re / &n, -(&self.im / &n)))
    }

    /// Exact conversion of a binary float pair; used when lifting float data.
    pub fn from_f64_pair(re: f64, im: f64) -> Option<Self> {
        Some(CRat::new(BigRational::from_float(re)?, BigRational::from_float(im)?))
    }
}

impl Zero for CRat {
    fn zero() -> Self {
        CRat::new(BigRational::zero(), BigRational::zero())
    }
    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
}

impl One for CRat {
    fn one() -> Self {
        CRat::real(BigRational::one())
    }
}

impl Neg for CRat {
    type Output = CRat;
    fn neg(self) -> CRat {
        CRat::new(-self.re, -self.im)
    }
}

impl Add for CRat {
    type Output = CRat;
    fn add(self, o: CRat) -> CRat {
        CRat::new(self.re + o.re, self.im + o.im)
    }
}

impl Sub for CRat {
    type Output = CRat;
    fn sub(self, o: CRat) -> CRat {
        CRat::new(self.re - o.re, self.im - o.im)
    }
}

impl Mul for CRat {
    type Output = CRat;
    fn mul(self, o: CRat) -> CRat {
        if self.im.is_zero() && o.im.is_zero() {
            return CRat::real(self.re * o.re);
        }
        let re = &self.re * &o.re - &self.im * &o.im;
        let im = &self.re * &o.im + &self.im * &o.re;
        CRat::new(re, im)
    }
}

impl Div for CRat {
    type Output = CRat;
    fn div(self, o: CRat) -> CRat {
        let inv = o.inv().expect("division by zero Gaussian rational");
        self * inv
    }
}

fn format_rational(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn parse_rational(s: &str) -> Result<BigRational, PolyError> {
    let s = s.trim();
    let bad = || PolyError::Parse(format!("bad rational `{s}`"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(PolyError::Parse(format!("zero denominator in `{s}`")));
        }
        Ok(BigRational::new(n, d))
    } else if s.contains(['.', 'e', 'E']) {
        // decimal literal: exact binary value of the double is not what users
        // mean, so read it as a terminating decimal instead
        parse_decimal(s).ok_or_else(bad)
    } else {
        let n: BigInt = s.parse().map_err(|_| bad())?;
        Ok(BigRational::from_integer(n))
    }
}

fn parse_decimal(s: &str) -> Option<BigRational> {
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let neg = mantissa.starts_with('-');
    let mantissa = mantissa.trim_start_matches(['-', '+']);
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    let digits = format!("{int_part}{frac_part}");
    if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let mut num: BigInt = digits.parse().ok()?;
    if neg {
        num = -num;
    }
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    Some(if scale >= 0 {
        BigRational::from_integer(num * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(num, num_traits::pow(ten, (-scale) as usize))
    })
}

/// Splits `a+b*i` / `a-b*i` / `b*i` / `a` into real and imaginary text.
fn split_complex(s: &str) -> Result<(Option<&str>, Option<&str>), PolyError> {
    let s = s.trim();
    if s.is_empty() {
        return Err(PolyError::Parse("empty coefficient".into()));
    }
    let Some(body) = s.strip_suffix("*i").or_else(|| s.strip_suffix('i')) else {
        return Ok((Some(s), None));
    };
    // find the sign separating real and imaginary parts (not a leading sign,
    // not an exponent sign)
    let bytes = body.as_bytes();
    let mut split = None;
    for k in (1..bytes.len()).rev() {
        let c = bytes[k];
        if (c == b'+' || c == b'-') && !matches!(bytes[k - 1], b'e' | b'E') {
            split = Some(k);
            break;
        }
    }
    match split {
        Some(k) => {
            let im = &body[k..];
            let im = im.strip_prefix('+').unwrap_or(im);
            Ok((Some(&body[..k]), Some(im)))
        }
        None => Ok((None, Some(body))),
    }
}

fn imag_text(s: &str) -> &str {
    match s.trim() {
        "" | "+" => "1",
        "-" => "-1",
        t => t,
    }
}

impl Coeff for CRat {
    const KIND: CoeffKind = CoeffKind::Exact;

    fn from_i64(v: i64) -> Self {
        CRat::real(BigRational::from_integer(v.into()))
    }

    fn to_c64(&self) -> Complex64 {
        Complex64::new(
            self.re.to_f64().unwrap_or(f64::NAN),
            self.im.to_f64().unwrap_or(f64::NAN),
        )
    }

    fn conj(&self) -> Self {
        CRat::new(self.re.clone(), -self.im.clone())
    }

    fn format(&self) -> String {
        if self.im.is_zero() {
            return format_rational(&self.re);
        }
        let im = format_rational(&self.im.abs());
        let sign = if self.im.is_negative() { '-' } else { '+' };
        if self.re.is_zero() {
            let lead = if self.im.is_negative() { "-" } else { "" };
            format!("{lead}{im}*i")
        } else {
            format!("{}{sign}{im}*i", format_rational(&self.re))
        }
    }

    fn parse(s: &str) -> Result<Self, PolyError> {
        let (re, im) = split_complex(s)?;
        let re = re.map(parse_rational).transpose()?.unwrap_or_else(BigRational::zero);
        let im = im
            .map(|t| parse_rational(imag_text(t)))
            .transpose()?
            .unwrap_or_else(BigRational::zero);
        Ok(CRat::new(re, im))
    }
}

impl Coeff for Complex64 {
    const KIND: CoeffKind = CoeffKind::Float;

    fn from_i64(v: i64) -> Self {
        Complex64::new(v as f64, 0.0)
    }

    fn to_c64(&self) -> Complex64 {
        *self
    }

    fn conj(&self) -> Self {
        Complex64::conj(self)
    }

    fn format(&self) -> String {
        if self.im == 0.0 {
            return format!("{:?}", self.re);
        }
        if self.re == 0.0 {
            return format!("{:?}*i", self.im);
        }
        let sign = if self.im.is_sign_negative() { '-' } else { '+' };
        format!("{:?}{sign}{:?}*i", self.re, self.im.abs())
    }

    fn parse(s: &str) -> Result<Self, PolyError> {
        let (re, im) = split_complex(s)?;
        let num = |t: &str| -> Result<f64, PolyError> {
            let t = t.trim();
            if let Some((n, d)) = t.split_once('/') {
                let n: f64 = n.trim().parse().map_err(|_| PolyError::Parse(format!("bad number `{t}`")))?;
                let d: f64 = d.trim().parse().map_err(|_| PolyError::Parse(format!("bad number `{t}`")))?;
                Ok(n / d)
            } else {
                t.parse().map_err(|_| PolyError::Parse(format!("bad number `{t}`")))
            }
        };
        let re = re.map(num).transpose()?.unwrap_or(0.0);
        let im = im.map(|t| num(imag_text(t))).transpose()?.unwrap_or(0.0);
        Ok(Complex64::new(re, im))
    }
}
