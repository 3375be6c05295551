//! Exact scalar arithmetic: Gaussian rationals `a + b·i` with `a, b ∈ Q`.
//!
//! Formal parameters (μ, q, s₁, …) are not stored here; they live in the
//! monomial key of a [`DiffPoly`](super::DiffPoly). The public
//! [`Coefficient`] type pairs a [`Gaussian`] with a parameter monomial.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::Error;

/// Arbitrary-precision rational.
pub type Rational = BigRational;

/// Build a rational `n/d`. Panics on `d == 0`.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Parse `"p/q"` or `"p"` into a rational in lowest terms.
///
/// With `strict`, the text must already be in lowest terms with a positive
/// denominator.
pub fn parse_rational(text: &str, strict: bool) -> Result<Rational, String> {
    let text = text.trim();
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (text, "1"),
    };
    let n = BigInt::from_str(num).map_err(|_| format!("invalid numerator `{num}`"))?;
    let d = BigInt::from_str(den).map_err(|_| format!("invalid denominator `{den}`"))?;
    if d.is_zero() {
        return Err("zero denominator".into());
    }
    if strict && !d.is_positive() {
        return Err(format!("denominator must be positive in `{text}`"));
    }
    let r = Rational::new(n.clone(), d.clone());
    if strict && (r.numer() != &n || r.denom() != &d) {
        return Err(format!("rational `{text}` is not in lowest terms"));
    }
    Ok(r)
}

/// Canonical text of a rational: `"p/q"` with `q > 0`, always with a slash.
pub fn rational_to_string(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// A Gaussian rational `re + im·i`.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Gaussian {
    pub re: Rational,
    pub im: Rational,
}

impl Gaussian {
    pub fn new(re: Rational, im: Rational) -> Self {
        Gaussian { re, im }
    }

    pub fn real(re: Rational) -> Self {
        Gaussian { re, im: Rational::zero() }
    }

    pub fn from_int(n: i64) -> Self {
        Self::real(Rational::from_integer(BigInt::from(n)))
    }

    pub fn from_ratio(n: i64, d: i64) -> Self {
        Self::real(rat(n, d))
    }

    /// The imaginary unit.
    pub fn i() -> Self {
        Gaussian { re: Rational::zero(), im: Rational::one() }
    }

    pub fn zero() -> Self {
        Gaussian::default()
    }

    pub fn one() -> Self {
        Self::from_int(1)
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.re.is_one() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        Gaussian { re: self.re.clone(), im: -self.im.clone() }
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        let norm = &self.re * &self.re + &self.im * &self.im;
        Some(Gaussian { re: &self.re / &norm, im: -(&self.im / &norm) })
    }

    pub fn div(&self, other: &Gaussian) -> Option<Self> {
        other.inv().map(|inv| self * &inv)
    }

    pub fn scale(&self, r: &Rational) -> Self {
        Gaussian { re: &self.re * r, im: &self.im * r }
    }

    /// `i^n` for any integer `n`.
    pub fn i_pow(n: i64) -> Self {
        match n.rem_euclid(4) {
            0 => Self::one(),
            1 => Self::i(),
            2 => Self::from_int(-1),
            _ => -Self::i(),
        }
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Gaussian::one();
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }
}

impl fmt::Debug for Gaussian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Gaussian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.re.is_zero(), self.im.is_zero()) {
            (_, true) => write!(f, "{}", self.re),
            (true, false) => write!(f, "{} i", self.im),
            (false, false) => write!(f, "{} + {} i", self.re, self.im),
        }
    }
}

impl Add<&Gaussian> for &Gaussian {
    type Output = Gaussian;
    fn add(self, rhs: &Gaussian) -> Gaussian {
        Gaussian { re: &self.re + &rhs.re, im: &self.im + &rhs.im }
    }
}

impl Sub<&Gaussian> for &Gaussian {
    type Output = Gaussian;
    fn sub(self, rhs: &Gaussian) -> Gaussian {
        Gaussian { re: &self.re - &rhs.re, im: &self.im - &rhs.im }
    }
}

impl Mul<&Gaussian> for &Gaussian {
    type Output = Gaussian;
    fn mul(self, rhs: &Gaussian) -> Gaussian {
        if self.im.is_zero() && rhs.im.is_zero() {
            return Gaussian::real(&self.re * &rhs.re);
        }
        Gaussian {
            re: &self.re * &rhs.re - &self.im * &rhs.im,
            im: &self.re * &rhs.im + &self.im * &rhs.re,
        }
    }
}

impl Neg for Gaussian {
    type Output = Gaussian;
    fn neg(self) -> Gaussian {
        Gaussian { re: -self.re, im: -self.im }
    }
}

impl Neg for &Gaussian {
    type Output = Gaussian;
    fn neg(self) -> Gaussian {
        -(self.clone())
    }
}

impl AddAssign<&Gaussian> for Gaussian {
    fn add_assign(&mut self, rhs: &Gaussian) {
        self.re += &rhs.re;
        self.im += &rhs.im;
    }
}

impl SubAssign<&Gaussian> for Gaussian {
    fn sub_assign(&mut self, rhs: &Gaussian) {
        self.re -= &rhs.re;
        self.im -= &rhs.im;
    }
}

impl MulAssign<&Gaussian> for Gaussian {
    fn mul_assign(&mut self, rhs: &Gaussian) {
        *self = &*self * rhs;
    }
}

impl From<Rational> for Gaussian {
    fn from(r: Rational) -> Self {
        Gaussian::real(r)
    }
}

impl From<i64> for Gaussian {
    fn from(n: i64) -> Self {
        Gaussian::from_int(n)
    }
}

/// A scalar of the coefficient field: a Gaussian rational times a monomial in
/// the declared formal parameters.
///
/// Parameter names map to non-negative exponents; a missing key is exponent 0.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Coefficient {
    pub value: Gaussian,
    pub params: BTreeMap<String, u32>,
}

impl Coefficient {
    pub fn new(value: Gaussian) -> Self {
        Coefficient { value, params: BTreeMap::new() }
    }

    /// Canonical zero drops the parameter map.
    pub fn zero() -> Self {
        Coefficient::default()
    }

    pub fn is_zero(&self) -> bool {
        self.value.is_zero()
    }

    pub fn with_param(mut self, name: &str, exp: u32) -> Self {
        if exp > 0 && !self.value.is_zero() {
            *self.params.entry(name.to_string()).or_insert(0) += exp;
        }
        self
    }

    pub fn mul(&self, other: &Coefficient) -> Coefficient {
        let value = &self.value * &other.value;
        if value.is_zero() {
            return Coefficient::zero();
        }
        let mut params = self.params.clone();
        for (k, v) in &other.params {
            *params.entry(k.clone()).or_insert(0) += v;
        }
        params.retain(|_, e| *e > 0);
        Coefficient { value, params }
    }
}

impl From<Gaussian> for Coefficient {
    fn from(g: Gaussian) -> Self {
        Coefficient::new(g)
    }
}

impl From<Rational> for Coefficient {
    fn from(r: Rational) -> Self {
        Coefficient::new(Gaussian::real(r))
    }
}

impl From<i64> for Coefficient {
    fn from(n: i64) -> Self {
        Coefficient::new(Gaussian::from_int(n))
    }
}

/// Binomial coefficient `C(n, k)` for non-negative arguments.
pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Generalized binomial `C(n, k)` for any integer `n` and `k ≥ 0`.
pub fn binomial_signed(n: i64, k: u64) -> BigInt {
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 0..k as i64 {
        num *= BigInt::from(n - i);
        den *= BigInt::from(i + 1);
    }
    num / den
}

pub fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

/// Bernoulli numbers `B_0 … B_n` with `B_1 = -1/2`.
pub fn bernoulli_numbers(n: usize) -> Vec<Rational> {
    let mut b: Vec<Rational> = Vec::with_capacity(n + 1);
    for m in 0..=n {
        if m == 0 {
            b.push(Rational::one());
            continue;
        }
        // Σ_{k=0}^{m} C(m+1, k) B_k = 0
        let mut acc = Rational::zero();
        for (k, bk) in b.iter().enumerate() {
            acc += Rational::from_integer(binomial(m as u64 + 1, k as u64)) * bk;
        }
        b.push(-acc / Rational::from_integer(BigInt::from(m + 1)));
    }
    b
}

pub(crate) fn check_rational_text(s: &str) -> Result<Rational, Error> {
    parse_rational(s, true).map_err(|msg| Error::Parse { position: 0, message: msg })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn i_squared_is_minus_one() {
        let i = Gaussian::i();
        assert_eq!(&i * &i, Gaussian::from_int(-1));
        assert_eq!(Gaussian::i_pow(3), -Gaussian::i());
        assert_eq!(Gaussian::i_pow(-1), -Gaussian::i());
    }

    #[test]
    fn inverse_roundtrip() {
        let z = Gaussian::new(rat(3, 2), rat(-1, 5));
        assert_eq!(&z * &z.inv().unwrap(), Gaussian::one());
        assert!(Gaussian::zero().inv().is_none());
    }

    #[test]
    fn bernoulli_values() {
        let b = bernoulli_numbers(8);
        assert_eq!(b[2], rat(1, 6));
        assert_eq!(b[4], rat(-1, 30));
        assert_eq!(b[6], rat(1, 42));
        assert_eq!(b[8], rat(-1, 30));
        assert_eq!(b[3], rat(0, 1));
    }

    #[test]
    fn rational_text_is_strict() {
        assert_eq!(parse_rational("-3/6", false).unwrap(), rat(-1, 2));
        assert!(parse_rational("-3/6", true).is_err());
        assert!(parse_rational("1/-2", true).is_err());
        assert!(parse_rational("1/0", false).is_err());
        assert_eq!(rational_to_string(&rat(4, 1)), "4/1");
    }

    #[test]
    fn coefficient_params_multiply() {
        let a = Coefficient::from(2).with_param("mu", 1);
        let b = Coefficient::from(Gaussian::i()).with_param("mu", 2).with_param("q", 1);
        let c = a.mul(&b);
        assert_eq!(c.value, Gaussian::new(rat(0, 1), rat(2, 1)));
        assert_eq!(c.params.get("mu"), Some(&3));
        assert_eq!(c.params.get("q"), Some(&1));
        assert!(Coefficient::from(0).mul(&a).params.is_empty());
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), BigInt::from(10));
        assert_eq!(binomial_signed(-1, 3), BigInt::from(-1));
        assert_eq!(binomial_signed(-2, 2), BigInt::from(3));
    }
}
