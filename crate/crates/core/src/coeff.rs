//! Coefficient rings for trigonometric forms.
//!
//! Exact work happens in [`PiPoly`]: finite Laurent polynomials in π with
//! rational coefficients. Every `2π` produced by differentiating a
//! trigonometric monomial is absorbed as a shift of the π-exponent, so the
//! identities of the exterior calculus can be checked with zero residual.
//! `f64` implements the same trait for the spectral (numeric) paths.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

/// Shorthand for the rational `num/den`.
pub fn rat(num: i64, den: i64) -> Rational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn rat_int(n: i64) -> Rational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn rational_to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        // numerator/denominator beyond f64 range individually
        let n = q.numer().to_f64().unwrap_or(f64::NAN);
        let d = q.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Parses `"p/q"`, `"p"` or a decimal literal such as `"0.05"` exactly.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(BigRational::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let neg = int.starts_with('-');
        let int_digits = int.trim_start_matches(['-', '+']);
        let digits = format!("{}{}", if int_digits.is_empty() { "0" } else { int_digits }, frac);
        let n: BigInt = digits.parse().ok()?;
        let d = num_traits::pow(BigInt::from(10), frac.len());
        let q = BigRational::new(n, d);
        return Some(if neg { -q } else { q });
    }
    let n: BigInt = s.parse().ok()?;
    Some(BigRational::from_integer(n))
}

pub fn format_rational(q: &Rational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Ring operations needed by the trigonometric exterior algebra.
pub trait Coeff: Clone + fmt::Debug + PartialEq + Send + Sync + 'static {
    fn zero() -> Self;
    fn is_zero(&self) -> bool;
    fn from_rational(q: &Rational) -> Self;
    fn add_ref(&self, other: &Self) -> Self;
    fn neg_ref(&self) -> Self;
    fn mul_ref(&self, other: &Self) -> Self;
    fn scale(&self, q: &Rational) -> Self;
    /// Multiplication by `2πk`, the factor produced by `∂/∂x` of a mode of frequency `k`.
    fn mul_two_pi(&self, k: i64) -> Self;
    fn to_f64(&self) -> f64;

    fn one() -> Self {
        Self::from_rational(&Rational::one())
    }
    fn sub_ref(&self, other: &Self) -> Self {
        self.add_ref(&other.neg_ref())
    }
}

/// A finite sum `Σ c_e π^e` with rational `c_e` and integer `e`.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct PiPoly {
    terms: BTreeMap<i32, Rational>,
}

impl PiPoly {
    pub fn monomial(c: Rational, pi_pow: i32) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(pi_pow, c);
        }
        PiPoly { terms }
    }

    pub fn rational(c: Rational) -> Self {
        Self::monomial(c, 0)
    }

    pub fn int(n: i64) -> Self {
        Self::rational(rat_int(n))
    }

    /// `(exponent, coefficient)` pairs in increasing exponent order.
    pub fn terms(&self) -> impl Iterator<Item = (i32, &Rational)> {
        self.terms.iter().map(|(e, c)| (*e, c))
    }

    pub fn coefficient(&self, pi_pow: i32) -> Rational {
        self.terms.get(&pi_pow).cloned().unwrap_or_else(Rational::zero)
    }

    /// The rational value if the polynomial is a pure `π^0` term (or zero).
    pub fn as_rational(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => self.terms.get(&0).cloned(),
            _ => None,
        }
    }

    /// Multiplies by `π^shift`.
    pub fn shift(&self, shift: i32) -> Self {
        PiPoly {
            terms: self.terms.iter().map(|(e, c)| (e + shift, c.clone())).collect(),
        }
    }

    fn insert_add(&mut self, e: i32, c: &Rational) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(e).or_insert_with(Rational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&e);
        }
    }

    pub fn abs_bound(&self) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| rational_to_f64(&c.abs()) * std::f64::consts::PI.powi(*e))
            .sum()
    }
}

impl fmt::Debug for PiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for PiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match e {
                0 => write!(f, "{}", format_rational(c))?,
                1 => write!(f, "{}·π", format_rational(c))?,
                _ => write!(f, "{}·π^{}", format_rational(c), e)?,
            }
        }
        Ok(())
    }
}

impl Coeff for PiPoly {
    fn zero() -> Self {
        PiPoly::default()
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    fn from_rational(q: &Rational) -> Self {
        PiPoly::rational(q.clone())
    }
    fn add_ref(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.insert_add(*e, c);
        }
        out
    }
    fn neg_ref(&self) -> Self {
        PiPoly {
            terms: self.terms.iter().map(|(e, c)| (*e, -c.clone())).collect(),
        }
    }
    fn mul_ref(&self, other: &Self) -> Self {
        let mut out = PiPoly::default();
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                out.insert_add(e1 + e2, &(c1 * c2));
            }
        }
        out
    }
    fn scale(&self, q: &Rational) -> Self {
        if q.is_zero() {
            return PiPoly::default();
        }
        PiPoly {
            terms: self.terms.iter().map(|(e, c)| (*e, c * q)).collect(),
        }
    }
    fn mul_two_pi(&self, k: i64) -> Self {
        if k == 0 {
            return PiPoly::default();
        }
        let factor = rat_int(2 * k);
        PiPoly {
            terms: self.terms.iter().map(|(e, c)| (e + 1, c * &factor)).collect(),
        }
    }
    fn to_f64(&self) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| rational_to_f64(c) * std::f64::consts::PI.powi(*e))
            .sum()
    }
}

impl Add for PiPoly {
    type Output = PiPoly;
    fn add(self, rhs: PiPoly) -> PiPoly {
        self.add_ref(&rhs)
    }
}

impl Sub for PiPoly {
    type Output = PiPoly;
    fn sub(self, rhs: PiPoly) -> PiPoly {
        self.sub_ref(&rhs)
    }
}

impl Mul for PiPoly {
    type Output = PiPoly;
    fn mul(self, rhs: PiPoly) -> PiPoly {
        self.mul_ref(&rhs)
    }
}

impl Neg for PiPoly {
    type Output = PiPoly;
    fn neg(self) -> PiPoly {
        self.neg_ref()
    }
}

impl Coeff for f64 {
    fn zero() -> Self {
        0.0
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn from_rational(q: &Rational) -> Self {
        rational_to_f64(q)
    }
    fn add_ref(&self, other: &Self) -> Self {
        self + other
    }
    fn neg_ref(&self) -> Self {
        -self
    }
    fn mul_ref(&self, other: &Self) -> Self {
        self * other
    }
    fn scale(&self, q: &Rational) -> Self {
        self * rational_to_f64(q)
    }
    fn mul_two_pi(&self, k: i64) -> Self {
        self * 2.0 * std::f64::consts::PI * k as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_pi_shifts_exponent() {
        let c = PiPoly::rational(rat(1, 3));
        let d = c.mul_two_pi(3);
        assert_eq!(d, PiPoly::monomial(rat_int(2), 1));
        assert!((d.to_f64() - 2.0 * std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn cancellation_prunes() {
        let a = PiPoly::monomial(rat(1, 2), 1);
        assert!(a.sub_ref(&a).is_zero());
        let b = a.add_ref(&PiPoly::int(1));
        assert_eq!(b.terms().count(), 2);
        assert_eq!(b.as_rational(), None);
    }

    #[test]
    fn parses_decimal_and_fraction() {
        assert_eq!(parse_rational("0.05"), Some(rat(1, 20)));
        assert_eq!(parse_rational("-1.5"), Some(rat(-3, 2)));
        assert_eq!(parse_rational("-3/4"), Some(rat(-3, 4)));
        assert_eq!(parse_rational("7"), Some(rat_int(7)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(format_rational(&rat(6, 4)), "3/2");
    }
}
