//! Exact arithmetic in a real quadratic field `Q(sqrt(d))` plus a floating
//! backend shared by every other module.
//!
//! A [`QScalar`] is `a + b*sqrt(d)` with `a`, `b` arbitrary-precision
//! rationals and `d` a square-free positive integer acting as a field tag.
//! `d = 1` marks a plain rational, which is compatible with every field tag;
//! combining two distinct non-trivial tags is a domain error surfaced at the
//! input boundary ([`QScalar::checked_add`] and friends) and a panic in the
//! internal operator impls, which only run on pre-validated data.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScalarError {
    #[error("mixed quadratic fields: sqrt({0}) vs sqrt({1})")]
    MixedField(u64, u64),
    #[error("division by zero")]
    DivisionByZero,
    #[error("{0} is not square-free")]
    NotSquareFree(u64),
    #[error("cannot parse scalar from `{0}`")]
    Parse(String),
}

fn is_square_free(d: u64) -> bool {
    if d == 0 {
        return false;
    }
    let mut n = d;
    let mut p = 2u64;
    while p * p <= n {
        if n % (p * p) == 0 {
            return false;
        }
        while n % p == 0 {
            n /= p;
        }
        p += 1;
    }
    true
}

/// Square-free part of `n`, so that `n = square * square_free_part(n)`.
pub fn square_free_part(n: u64) -> u64 {
    assert!(n > 0);
    let mut rest = n;
    let mut sf = 1u64;
    let mut p = 2u64;
    while p * p <= rest {
        if rest % p == 0 {
            let mut e = 0u32;
            while rest % p == 0 {
                rest /= p;
                e += 1;
            }
            if e % 2 == 1 {
                sf *= p;
            }
        }
        p += 1;
    }
    sf * rest
}

/// Element `a + b*sqrt(d)` of the real quadratic field `Q(sqrt(d))`.
#[derive(Clone, PartialEq, Eq)]
pub struct QScalar {
    a: BigRational,
    b: BigRational,
    d: u64,
}

impl QScalar {
    /// Build `a + b*sqrt(d)`. Normalizes: `b = 0` collapses the tag to 1,
    /// and `d = 1` folds `b` into the rational part.
    pub fn new(a: BigRational, b: BigRational, d: u64) -> Result<Self, ScalarError> {
        if !is_square_free(d) {
            return Err(ScalarError::NotSquareFree(d));
        }
        Ok(Self::new_unchecked(a, b, d))
    }

    fn new_unchecked(a: BigRational, b: BigRational, d: u64) -> Self {
        debug_assert!(is_square_free(d));
        if d == 1 {
            return QScalar { a: a + b, b: BigRational::zero(), d: 1 };
        }
        if b.is_zero() {
            return QScalar { a, b, d: 1 };
        }
        QScalar { a, b, d }
    }

    pub fn from_int(n: i64) -> Self {
        QScalar { a: BigRational::from_integer(BigInt::from(n)), b: BigRational::zero(), d: 1 }
    }

    pub fn from_ratio(p: i64, q: i64) -> Self {
        assert!(q != 0, "zero denominator");
        QScalar {
            a: BigRational::new(BigInt::from(p), BigInt::from(q)),
            b: BigRational::zero(),
            d: 1,
        }
    }

    /// `r/s * sqrt(d)`.
    pub fn sqrt_term(r: i64, s: i64, d: u64) -> Result<Self, ScalarError> {
        Self::new(
            BigRational::zero(),
            BigRational::new(BigInt::from(r), BigInt::from(s)),
            d,
        )
    }

    pub fn zero() -> Self {
        Self::from_int(0)
    }

    pub fn one() -> Self {
        Self::from_int(1)
    }

    pub fn rational_part(&self) -> &BigRational {
        &self.a
    }

    pub fn surd_part(&self) -> &BigRational {
        &self.b
    }

    /// Field tag; 1 for plain rationals.
    pub fn field_tag(&self) -> u64 {
        self.d
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    fn join_tag(&self, other: &Self) -> Result<u64, ScalarError> {
        match (self.d, other.d) {
            (x, y) if x == y => Ok(x),
            (1, y) => Ok(y),
            (x, 1) => Ok(x),
            (x, y) => Err(ScalarError::MixedField(x, y)),
        }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self, ScalarError> {
        let d = self.join_tag(other)?;
        Ok(Self::new_unchecked(&self.a + &other.a, &self.b + &other.b, d))
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self, ScalarError> {
        let d = self.join_tag(other)?;
        Ok(Self::new_unchecked(&self.a - &other.a, &self.b - &other.b, d))
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self, ScalarError> {
        let d = self.join_tag(other)?;
        let dd = BigRational::from_integer(BigInt::from(d));
        let a = &self.a * &other.a + &self.b * &other.b * &dd;
        let b = &self.a * &other.b + &self.b * &other.a;
        Ok(Self::new_unchecked(a, b, d))
    }

    /// Galois conjugate `a - b*sqrt(d)`.
    pub fn galois_conj(&self) -> Self {
        Self::new_unchecked(self.a.clone(), -self.b.clone(), self.d)
    }

    /// Exact multiplicative inverse.
    pub fn checked_inv(&self) -> Result<Self, ScalarError> {
        if self.is_zero() {
            return Err(ScalarError::DivisionByZero);
        }
        // (a + b sqrt d)^-1 = (a - b sqrt d) / (a^2 - b^2 d)
        let dd = BigRational::from_integer(BigInt::from(self.d));
        let norm = &self.a * &self.a - &self.b * &self.b * &dd;
        debug_assert!(!norm.is_zero(), "nonzero element with zero field norm");
        Ok(Self::new_unchecked(&self.a / &norm, -&self.b / &norm, self.d))
    }

    /// Exact sign of `a + b*sqrt(d)`: compares `a^2` against `b^2 d` when the
    /// parts have opposite signs.
    pub fn sign(&self) -> Ordering {
        let sa = rational_sign(&self.a);
        let sb = rational_sign(&self.b);
        match (sa, sb) {
            (Ordering::Equal, s) | (s, Ordering::Equal) => s,
            (Ordering::Greater, Ordering::Greater) => Ordering::Greater,
            (Ordering::Less, Ordering::Less) => Ordering::Less,
            (sa, _) => {
                let dd = BigRational::from_integer(BigInt::from(self.d));
                let lhs = &self.a * &self.a;
                let rhs = &self.b * &self.b * &dd;
                // |a| vs |b| sqrt(d); the dominant part decides.
                match lhs.cmp(&rhs) {
                    Ordering::Greater => sa,
                    Ordering::Less => sa.reverse(),
                    Ordering::Equal => Ordering::Equal,
                }
            }
        }
    }

    /// Exact comparison `self` vs `other`.
    pub fn checked_cmp(&self, other: &Self) -> Result<Ordering, ScalarError> {
        Ok(self.checked_sub(other)?.sign())
    }

    pub fn is_positive(&self) -> bool {
        self.sign() == Ordering::Greater
    }

    /// Reports whether `sqrt(self)` lies in `Q(sqrt(d))`, returning the
    /// non-negative square root when it does.
    pub fn sqrt_in_field(&self) -> Option<QScalar> {
        if self.sign() == Ordering::Less {
            return None;
        }
        if self.is_zero() {
            return Some(QScalar::zero());
        }
        let d = self.d;
        let dd = BigRational::from_integer(BigInt::from(d));
        if self.b.is_zero() {
            // x rational: sqrt(x) in the field iff x or x/d is a rational square.
            if let Some(s) = rational_sqrt(&self.a) {
                return Some(Self::new_unchecked(s, BigRational::zero(), 1));
            }
            // Caller's context may carry a nontrivial d even though the value
            // normalized to tag 1; the tag-1 normalization loses d, so only
            // the rational-square route applies here. sqrt_in_field_of covers
            // the `x = s^2 d` route.
            return None;
        }
        // (u + v sqrt d)^2 = u^2 + v^2 d + 2uv sqrt d.
        // u^2 and v^2 d are the roots of t^2 - a t + d (b/2)^2.
        let half_b = &self.b / BigRational::from_integer(BigInt::from(2));
        let disc = &self.a * &self.a
            - BigRational::from_integer(BigInt::from(4)) * &dd * &half_b * &half_b;
        if disc.is_negative() {
            return None;
        }
        let e = rational_sqrt(&disc)?;
        let two = BigRational::from_integer(BigInt::from(2));
        for u2 in [(&self.a + &e) / &two, (&self.a - &e) / &two] {
            if u2.is_negative() {
                continue;
            }
            let v2 = (&self.a - &u2) / &dd;
            if v2.is_negative() {
                continue;
            }
            if let (Some(u), Some(v)) = (rational_sqrt(&u2), rational_sqrt(&v2)) {
                // Fix signs so that 2uv = b; u >= 0 by construction.
                let v_signed = if self.b.is_negative() { -v } else { v };
                let cand = Self::new_unchecked(u, v_signed, d);
                if cand.checked_mul(&cand).expect("same field") == *self {
                    return Some(cand);
                }
            }
        }
        None
    }

    /// Like [`QScalar::sqrt_in_field`] but searches in `Q(sqrt(d))` for an
    /// explicitly supplied tag, so rationals can produce `s*sqrt(d)` roots.
    pub fn sqrt_in_field_of(&self, d: u64) -> Option<QScalar> {
        if let Some(r) = self.sqrt_in_field() {
            return Some(r);
        }
        if self.b.is_zero() && d != 1 && self.sign() != Ordering::Less {
            let dd = BigRational::from_integer(BigInt::from(d));
            let q = &self.a / &dd;
            if let Some(s) = rational_sqrt(&q) {
                return Self::new(BigRational::zero(), s, d).ok();
            }
        }
        None
    }

    /// Evaluate to `f64` through a 60-digit exact decimal, so the relative
    /// error is set by the final rounding alone.
    pub fn to_f64(&self) -> f64 {
        if self.b.is_zero() {
            return big_rational_to_f64(&self.a);
        }
        let sqrt_d = sqrt_rational_newton(self.d, 60);
        big_rational_to_f64(&(&self.a + &self.b * sqrt_d))
    }

    /// Convert to the floating backend with the default tolerance.
    pub fn to_approx(&self) -> ApproxScalar {
        ApproxScalar::new(self.to_f64())
    }

    /// Decimal expansion with at least `digits` significant digits
    /// (extended-precision mode).
    pub fn to_decimal(&self, digits: usize) -> String {
        let guard = digits + 10;
        let value = if self.b.is_zero() {
            self.a.clone()
        } else {
            &self.a + &self.b * sqrt_rational_newton(self.d, guard)
        };
        decimal_string(&value, digits)
    }
}

fn rational_sign(r: &BigRational) -> Ordering {
    if r.is_zero() {
        Ordering::Equal
    } else if r.is_positive() {
        Ordering::Greater
    } else {
        Ordering::Less
    }
}

/// Exact square root of a non-negative rational, if it is a perfect square.
fn rational_sqrt(r: &BigRational) -> Option<BigRational> {
    if r.is_negative() {
        return None;
    }
    if r.is_zero() {
        return Some(BigRational::zero());
    }
    let num = r.numer();
    let den = r.denom();
    let sn = num.sqrt();
    let sd = den.sqrt();
    if &(&sn * &sn) == num && &(&sd * &sd) == den {
        Some(BigRational::new(sn, sd))
    } else {
        None
    }
}

/// Rational approximation of sqrt(d) good to `digits` decimal digits,
/// by Newton iteration on exact rationals.
fn sqrt_rational_newton(d: u64, digits: usize) -> BigRational {
    let target: BigRational = BigRational::new(
        BigInt::one(),
        BigInt::from(10u32).pow(2 * digits as u32 + 4),
    );
    let dd = BigRational::from_integer(BigInt::from(d));
    let mut x = BigRational::from_integer(BigInt::from((d as f64).sqrt().ceil() as u64 + 1));
    loop {
        let next = (&x + &dd / &x) / BigRational::from_integer(BigInt::from(2));
        let err = (&next * &next - &dd).abs();
        x = next;
        if err < target {
            return x;
        }
    }
}

fn big_rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // Fall back on a scaled integer division for magnitudes outside f64.
        let scale = BigInt::from(10u64).pow(18);
        let scaled = (r * BigRational::from_integer(scale.clone())).to_integer();
        scaled.to_f64().unwrap_or(f64::NAN) / 1e18
    })
}

fn decimal_string(r: &BigRational, digits: usize) -> String {
    let neg = r.is_negative();
    let abs = r.abs();
    let int_part = abs.to_integer();
    let int_str = int_part.to_string();
    let frac_digits = if int_part.is_zero() {
        digits + 8
    } else {
        digits.saturating_sub(int_str.len()).max(1)
    };
    let scale = BigInt::from(10u32).pow(frac_digits as u32);
    let scaled = (&abs * BigRational::from_integer(scale)).to_integer();
    let s = scaled.to_string();
    let (ip, fp) = if s.len() > frac_digits {
        let split = s.len() - frac_digits;
        (s[..split].to_string(), s[split..].to_string())
    } else {
        ("0".to_string(), format!("{:0>width$}", s, width = frac_digits))
    };
    format!("{}{}.{}", if neg { "-" } else { "" }, ip, fp)
}

impl fmt::Debug for QScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for QScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn rat(r: &BigRational) -> String {
            if r.denom().is_one() {
                r.numer().to_string()
            } else {
                format!("{}/{}", r.numer(), r.denom())
            }
        }
        if self.b.is_zero() {
            return write!(f, "{}", rat(&self.a));
        }
        let b_abs = self.b.abs();
        let surd = if b_abs.is_one() {
            format!("sqrt({})", self.d)
        } else {
            format!("{}*sqrt({})", rat(&b_abs), self.d)
        };
        if self.a.is_zero() {
            if self.b.is_negative() {
                write!(f, "-{}", surd)
            } else {
                write!(f, "{}", surd)
            }
        } else if self.b.is_negative() {
            write!(f, "{}-{}", rat(&self.a), surd)
        } else {
            write!(f, "{}+{}", rat(&self.a), surd)
        }
    }
}

impl FromStr for QScalar {
    type Err = ScalarError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().replace(' ', "");
        if s.is_empty() {
            return Err(ScalarError::Parse(s));
        }
        let err = || ScalarError::Parse(s.clone());

        fn parse_rat(text: &str) -> Option<BigRational> {
            if text.is_empty() {
                return None;
            }
            match text.split_once('/') {
                Some((p, q)) => {
                    let p: BigInt = p.parse().ok()?;
                    let q: BigInt = q.parse().ok()?;
                    if q.is_zero() {
                        return None;
                    }
                    Some(BigRational::new(p, q))
                }
                None => {
                    let p: BigInt = text.parse().ok()?;
                    Some(BigRational::from_integer(p))
                }
            }
        }

        if let Some(idx) = s.find("sqrt(") {
            let close = s[idx..].find(')').ok_or_else(err)? + idx;
            if close + 1 != s.len() {
                return Err(err());
            }
            let d: u64 = s[idx + 5..close].parse().map_err(|_| err())?;
            // Split off the surd coefficient: everything before "sqrt(" up to
            // an optional trailing '*'.
            let mut head = &s[..idx];
            if head.ends_with('*') {
                head = &head[..head.len() - 1];
            }
            // Find the +/- that separates a rational part from the coefficient:
            // scan from the right, skipping a leading sign of the coefficient.
            let (a_text, b_text) = match head
                .char_indices()
                .rev()
                .find(|&(i, c)| (c == '+' || c == '-') && i > 0)
            {
                Some((i, c)) => {
                    let coeff = &head[i + 1..];
                    let sign = if c == '-' { "-" } else { "" };
                    (&head[..i], format!("{}{}", sign, coeff))
                }
                None => ("", head.to_string()),
            };
            let a = if a_text.is_empty() {
                BigRational::zero()
            } else {
                parse_rat(a_text).ok_or_else(err)?
            };
            let b = if b_text.is_empty() || b_text == "-" {
                if b_text == "-" {
                    -BigRational::one()
                } else {
                    BigRational::one()
                }
            } else {
                parse_rat(&b_text).ok_or_else(err)?
            };
            QScalar::new(a, b, d)
        } else {
            let a = parse_rat(&s).ok_or_else(err)?;
            Ok(QScalar { a, b: BigRational::zero(), d: 1 })
        }
    }
}

impl Serialize for QScalar {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for QScalar {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

macro_rules! forward_checked_op {
    ($trait:ident, $method:ident, $checked:ident) => {
        impl $trait for &QScalar {
            type Output = QScalar;
            fn $method(self, rhs: &QScalar) -> QScalar {
                self.$checked(rhs).expect("mixed quadratic fields in validated data")
            }
        }
        impl $trait for QScalar {
            type Output = QScalar;
            fn $method(self, rhs: QScalar) -> QScalar {
                self.$checked(&rhs).expect("mixed quadratic fields in validated data")
            }
        }
    };
}

forward_checked_op!(Add, add, checked_add);
forward_checked_op!(Sub, sub, checked_sub);
forward_checked_op!(Mul, mul, checked_mul);

impl Neg for &QScalar {
    type Output = QScalar;
    fn neg(self) -> QScalar {
        QScalar::new_unchecked(-self.a.clone(), -self.b.clone(), self.d)
    }
}

impl Neg for QScalar {
    type Output = QScalar;
    fn neg(self) -> QScalar {
        -&self
    }
}

impl PartialOrd for QScalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.checked_cmp(other).ok()
    }
}

/// Floating value with an explicit comparison tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproxScalar {
    pub value: f64,
    pub tol: f64,
}

pub const DEFAULT_TOL: f64 = 1e-9;

impl ApproxScalar {
    pub fn new(value: f64) -> Self {
        ApproxScalar { value, tol: DEFAULT_TOL }
    }

    pub fn with_tol(value: f64, tol: f64) -> Self {
        ApproxScalar { value, tol }
    }

    pub fn approx_eq(&self, other: f64) -> bool {
        let scale = 1.0_f64.max(self.value.abs()).max(other.abs());
        (self.value - other).abs() <= self.tol * scale
    }
}

/// Shared scalar interface for the exact and floating backends.
///
/// Box, graded, and Hecke elements are generic over this trait; the exact
/// backend keeps every identity decidable, the floating backend covers
/// quantities outside the working field (sqrt(mu) coefficients, norms).
pub trait Scalar: Clone + PartialEq + fmt::Debug + Send + Sync + 'static {
    fn zero() -> Self;
    fn one() -> Self;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    fn inv(&self) -> Option<Self>;
    fn is_zero(&self) -> bool;
    fn from_ratio(p: i64, q: i64) -> Self;
    /// Inject a graph scalar into the backend (identity for the exact
    /// backend, rounding for floats).
    fn from_q(q: &QScalar) -> Self;
    fn to_f64(&self) -> f64;
    /// Square root within the backend: exact field membership for `QScalar`,
    /// ordinary `sqrt` for floats.
    fn sqrt(&self) -> Option<Self>;
    /// Complex conjugation; the identity on both real backends.
    fn conj(&self) -> Self {
        self.clone()
    }
}

impl Scalar for QScalar {
    fn zero() -> Self {
        QScalar::zero()
    }
    fn one() -> Self {
        QScalar::one()
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn inv(&self) -> Option<Self> {
        self.checked_inv().ok()
    }
    fn is_zero(&self) -> bool {
        QScalar::is_zero(self)
    }
    fn from_ratio(p: i64, q: i64) -> Self {
        QScalar::from_ratio(p, q)
    }
    fn from_q(q: &QScalar) -> Self {
        q.clone()
    }
    fn to_f64(&self) -> f64 {
        QScalar::to_f64(self)
    }
    fn sqrt(&self) -> Option<Self> {
        self.sqrt_in_field()
    }
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn inv(&self) -> Option<Self> {
        if *self == 0.0 {
            None
        } else {
            Some(1.0 / self)
        }
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn from_ratio(p: i64, q: i64) -> Self {
        p as f64 / q as f64
    }
    fn from_q(q: &QScalar) -> Self {
        q.to_f64()
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn sqrt(&self) -> Option<Self> {
        if *self < 0.0 {
            None
        } else {
            Some(f64::sqrt(*self))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(p: i64, q_: i64) -> QScalar {
        QScalar::from_ratio(p, q_)
    }

    fn surd(p: i64, q_: i64, d: u64) -> QScalar {
        QScalar::sqrt_term(p, q_, d).unwrap()
    }

    #[test]
    fn conjugate_product() {
        // (1 + sqrt 2)(1 - sqrt 2) = -1
        let x = q(1, 1).checked_add(&surd(1, 1, 2)).unwrap();
        let y = q(1, 1).checked_sub(&surd(1, 1, 2)).unwrap();
        assert_eq!(x.checked_mul(&y).unwrap(), q(-1, 1));
    }

    #[test]
    fn invert_sqrt_two() {
        let x = surd(1, 1, 2);
        let inv = x.checked_inv().unwrap();
        assert_eq!(inv, surd(1, 2, 2));
        assert_eq!(x.checked_mul(&inv).unwrap(), QScalar::one());
    }

    #[test]
    fn exact_sign() {
        // 3 - 2 sqrt 2 > 0 because 9 > 8
        let x = q(3, 1).checked_sub(&surd(2, 1, 2)).unwrap();
        assert_eq!(x.sign(), Ordering::Greater);
        // 2 sqrt 2 - 3 < 0
        assert_eq!((-&x).sign(), Ordering::Less);
        // sqrt 2 - 1 > 0
        let y = surd(1, 1, 2).checked_sub(&q(1, 1)).unwrap();
        assert_eq!(y.sign(), Ordering::Greater);
    }

    #[test]
    fn mixed_field_rejected() {
        let x = surd(1, 1, 2);
        let y = surd(1, 1, 3);
        assert!(matches!(x.checked_add(&y), Err(ScalarError::MixedField(2, 3))));
        // rationals are compatible with any tag
        assert!(q(1, 2).checked_add(&x).is_ok());
    }

    #[test]
    fn sqrt_membership() {
        // sqrt(3 + 2 sqrt 2) = 1 + sqrt 2
        let x = q(3, 1).checked_add(&surd(2, 1, 2)).unwrap();
        let r = x.sqrt_in_field().unwrap();
        assert_eq!(r, q(1, 1).checked_add(&surd(1, 1, 2)).unwrap());
        // sqrt(2) is not in Q but is in Q(sqrt 2)
        assert!(q(2, 1).sqrt_in_field().is_none());
        let r2 = q(2, 1).sqrt_in_field_of(2).unwrap();
        assert_eq!(r2, surd(1, 1, 2));
        // 9/4 is a rational square
        assert_eq!(q(9, 4).sqrt_in_field().unwrap(), q(3, 2));
        // sqrt(1 + sqrt 2) is a quartic irrationality
        assert!(q(1, 1).checked_add(&surd(1, 1, 2)).unwrap().sqrt_in_field().is_none());
    }

    #[test]
    fn parse_and_format_round_trip() {
        for text in ["3", "-3/2", "1/2+3/4*sqrt(6)", "2*sqrt(2)", "1-sqrt(5)", "-1/3-2/7*sqrt(3)"] {
            let x: QScalar = text.parse().unwrap();
            let back: QScalar = x.to_string().parse().unwrap();
            assert_eq!(x, back, "round trip through `{}` -> `{}`", text, x);
        }
        assert!("sqrt(12)".parse::<QScalar>().is_err(), "12 is not square-free");
        assert!("1/0".parse::<QScalar>().is_err());
    }

    #[test]
    fn float_conversion_accuracy() {
        let x = q(1, 2).checked_add(&surd(1, 2, 6)).unwrap();
        let direct = 0.5 + 0.5 * 6.0_f64.sqrt();
        let approx = x.to_approx();
        assert!(approx.approx_eq(direct));
        assert!((x.to_f64() - direct).abs() < 1e-12);
    }

    #[test]
    fn extended_decimal() {
        let s = QScalar::sqrt_term(1, 1, 2).unwrap().to_decimal(50);
        assert!(s.starts_with("1.4142135623730950488016887242096980785696718753769"));
    }

    #[test]
    fn square_free_part_examples() {
        assert_eq!(square_free_part(16), 1);
        assert_eq!(square_free_part(6), 6);
        assert_eq!(square_free_part(12), 3);
        assert_eq!(square_free_part(9), 1);
    }
}
