use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::error::Error;

/// An exact rational number. No operation on this type ever rounds.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Rational(BigRational);

impl Rational {
    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    pub fn from_integer(n: impl Into<BigInt>) -> Self {
        Rational(BigRational::from_integer(n.into()))
    }

    /// `numer / denom`; panics on a zero denominator.
    pub fn new(numer: impl Into<BigInt>, denom: impl Into<BigInt>) -> Self {
        Rational(BigRational::new(numer.into(), denom.into()))
    }

    /// `2^exp`, exactly.
    pub fn pow2(exp: i64) -> Self {
        if exp >= 0 {
            Rational::from_integer(BigInt::one() << (exp as usize))
        } else {
            Rational::new(BigInt::one(), BigInt::one() << ((-exp) as usize))
        }
    }

    /// `m * 2^exp`, exactly.
    pub fn dyadic(m: impl Into<BigInt>, exp: i64) -> Self {
        let m = m.into();
        if exp >= 0 {
            Rational::from_integer(m << (exp as usize))
        } else {
            Rational::new(m, BigInt::one() << ((-exp) as usize))
        }
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn abs(&self) -> Self {
        Rational(self.0.abs())
    }

    pub fn signum(&self) -> i32 {
        if self.0.is_zero() {
            0
        } else if self.0.is_negative() {
            -1
        } else {
            1
        }
    }

    pub fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }

    pub fn min(self, other: Self) -> Self {
        if self <= other {
            self
        } else {
            other
        }
    }

    /// `floor(log2(|self|))`; `None` for zero.
    pub fn floor_log2(&self) -> Option<i64> {
        if self.is_zero() {
            return None;
        }
        let n = self.numer().magnitude();
        let d = self.denom().magnitude();
        let k = n.bits() as i64 - d.bits() as i64;
        // 2^(k-1) < n/d < 2^(k+1); decide between k and k-1.
        let at_least = if k >= 0 {
            *n >= (d << (k as usize))
        } else {
            (n << ((-k) as usize)) >= *d
        };
        Some(if at_least { k } else { k - 1 })
    }

    /// `floor(log10(|self|))`; `None` for zero.
    pub fn floor_log10(&self) -> Option<i64> {
        let l2 = self.floor_log2()?;
        let a = self.abs();
        let mut k = ((l2 as f64) * std::f64::consts::LOG10_2).floor() as i64;
        while Rational::pow10(k) > a {
            k -= 1;
        }
        while Rational::pow10(k + 1) <= a {
            k += 1;
        }
        Some(k)
    }

    pub fn pow10(exp: i64) -> Self {
        let p = num_traits::pow(BigInt::from(10u32), exp.unsigned_abs() as usize);
        if exp >= 0 {
            Rational::from_integer(p)
        } else {
            Rational::new(BigInt::one(), p)
        }
    }

    /// Integer nearest to `self`, ties away from zero.
    pub fn round_to_integer(&self) -> BigInt {
        self.0.round().to_integer()
    }

    pub fn floor(&self) -> BigInt {
        self.0.floor().to_integer()
    }

    pub fn ceil(&self) -> BigInt {
        self.0.ceil().to_integer()
    }

    /// Exact value of a finite `f64`; panics on NaN or infinity.
    pub fn from_f64_exact(x: f64) -> Self {
        Rational(BigRational::from_float(x).expect("finite f64"))
    }

    /// Nearest `f64` (approximate; for sampling and display only).
    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// Exact decimal expansion when the denominator has only factors 2 and 5.
    pub fn to_exact_decimal(&self) -> Option<String> {
        let mut d = self.denom().clone();
        let two = BigInt::from(2u32);
        let five = BigInt::from(5u32);
        let mut twos = 0usize;
        let mut fives = 0usize;
        while d.is_even() {
            d /= &two;
            twos += 1;
        }
        while (&d % &five).is_zero() {
            d /= &five;
            fives += 1;
        }
        if !d.is_one() {
            return None;
        }
        let digits = twos.max(fives);
        let scaled = self.numer().abs() * num_traits::pow(BigInt::from(10u32), digits)
            / self.denom();
        let mut s = scaled.to_string();
        if digits > 0 {
            if s.len() <= digits {
                s = format!("{}{}", "0".repeat(digits + 1 - s.len()), s);
            }
            s.insert(s.len() - digits, '.');
        }
        if self.is_negative() {
            s.insert(0, '-');
        }
        Some(s)
    }

    /// Parses `12`, `-1.5`, `6.48e-12`, or `3/7`.
    pub fn parse_literal(text: &str) -> Result<Self, Error> {
        let t = text.trim();
        let bad = || Error::Parse(format!("invalid numeric literal `{text}`"));
        if let Some((n, d)) = t.split_once('/') {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            return Ok(Rational::new(n, d));
        }
        let (neg, body) = match t.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, t.strip_prefix('+').unwrap_or(t)),
        };
        let (mantissa, exp) = match body.find(['e', 'E']) {
            Some(i) => {
                let e: i64 = body[i + 1..].parse().map_err(|_| bad())?;
                (&body[..i], e)
            }
            None => (body, 0),
        };
        let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(bad());
        }
        if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let digits = format!("{int_part}{frac_part}");
        let m: BigInt = digits.parse().map_err(|_| bad())?;
        let scale = exp - frac_part.len() as i64;
        let value = Rational::from_integer(m) * Rational::pow10(scale);
        Ok(if neg { -value } else { value })
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::from_integer(n)
    }
}

impl FromStr for Rational {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        Rational::parse_literal(s)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident) => {
        impl $trait for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational(self.0.$method(rhs.0))
            }
        }
        impl<'a> $trait<&'a Rational> for &'a Rational {
            type Output = Rational;
            fn $method(self, rhs: &'a Rational) -> Rational {
                Rational((&self.0).$method(&rhs.0))
            }
        }
        impl<'a> $trait<&'a Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: &'a Rational) -> Rational {
                Rational(self.0.$method(&rhs.0))
            }
        }
    };
}

binop!(Add, add);
binop!(Sub, sub);
binop!(Mul, mul);

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-&self.0)
    }
}
