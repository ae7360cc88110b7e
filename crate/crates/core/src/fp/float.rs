use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use super::rational::Rational;
use crate::error::{Error, Result};

/// A binary floating-point format `(p, e_min)`.
///
/// `min_exp` is the magnitude of the smallest exponent, so the smallest
/// positive subnormal is `2^-min_exp`. The largest finite value follows the
/// IEEE 754 relation `emax = min_exp - p + 2`, which gives the usual
/// binary32 and binary64 limits for `(24, 149)` and `(53, 1074)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Format {
    precision: u32,
    min_exp: u32,
}

impl Format {
    pub const SINGLE: Format = Format {
        precision: 24,
        min_exp: 149,
    };
    pub const DOUBLE: Format = Format {
        precision: 53,
        min_exp: 1074,
    };

    pub fn new(precision: u32, min_exp: u32) -> Result<Self> {
        if !(2..=62).contains(&precision) {
            return Err(Error::InvalidFormat(format!(
                "precision {precision} outside supported range 2..=62"
            )));
        }
        if min_exp < 2 * precision {
            return Err(Error::InvalidFormat(format!(
                "minimal exponent {min_exp} must be at least twice the precision"
            )));
        }
        Ok(Format {
            precision,
            min_exp,
        })
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn min_exp(&self) -> u32 {
        self.min_exp
    }

    /// Smallest stored exponent, `-e_min`.
    pub fn lowest_exponent(&self) -> i64 {
        -(self.min_exp as i64)
    }

    /// Largest stored exponent of a finite value.
    pub fn highest_exponent(&self) -> i64 {
        self.min_exp as i64 - 2 * self.precision as i64 + 3
    }

    pub fn max_finite(&self) -> Float {
        Float {
            m: (1i64 << self.precision) - 1,
            e: self.highest_exponent() as i32,
        }
    }

    pub fn min_normal(&self) -> Rational {
        Rational::pow2(self.precision as i64 - 1 - self.min_exp as i64)
    }
}

impl std::str::FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(Format::SINGLE),
            "double" => Ok(Format::DOUBLE),
            other => Err(Error::InvalidFormat(format!(
                "unknown format `{other}` (expected single or double)"
            ))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Format::SINGLE => f.write_str("single"),
            Format::DOUBLE => f.write_str("double"),
            Format { precision, min_exp } => write!(f, "({precision}, {min_exp})"),
        }
    }
}

/// A canonical float `(m, e)` with value `m * 2^e`.
///
/// Canonical means normal (`2^(p-1) <= |m| < 2^p`) or subnormal (`e = -e_min`,
/// `|m| < 2^(p-1)`). Zero is `(0, -e_min)`. The format is not stored; every
/// operation that needs it takes it explicitly.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Float {
    m: i64,
    e: i32,
}

impl Float {
    pub fn zero(fmt: Format) -> Float {
        Float {
            m: 0,
            e: fmt.lowest_exponent() as i32,
        }
    }

    /// Builds a float from its parts, rejecting non-canonical pairs.
    pub fn from_parts(m: i64, e: i32, fmt: Format) -> Result<Float> {
        let f = Float { m, e };
        if f.is_canonical(fmt) {
            Ok(f)
        } else {
            Err(Error::InvalidFormat(format!(
                "({m}, {e}) is not canonical in format ({}, {})",
                fmt.precision, fmt.min_exp
            )))
        }
    }

    pub fn significand(&self) -> i64 {
        self.m
    }

    pub fn exponent(&self) -> i32 {
        self.e
    }

    pub fn is_zero(&self) -> bool {
        self.m == 0
    }

    pub fn is_negative(&self) -> bool {
        self.m < 0
    }

    pub fn is_canonical(&self, fmt: Format) -> bool {
        let lo = fmt.lowest_exponent();
        let e = self.e as i64;
        if e < lo || e > fmt.highest_exponent() {
            return false;
        }
        let a = self.m.unsigned_abs();
        let p = fmt.precision;
        if a >= 1u64 << p {
            return false;
        }
        a >= 1u64 << (p - 1) || e == lo
    }

    /// Exact real value, `m * 2^e`.
    pub fn to_real(&self) -> Rational {
        Rational::dyadic(self.m, self.e as i64)
    }

    pub fn neg(&self) -> Float {
        Float {
            m: -self.m,
            e: self.e,
        }
    }

    pub fn abs(&self) -> Float {
        Float {
            m: self.m.abs(),
            e: self.e,
        }
    }

    /// Exact value comparison between canonical floats of one format.
    pub fn cmp_value(&self, other: &Float) -> Ordering {
        let (sa, sb) = (self.m.signum(), other.m.signum());
        if sa != sb {
            return sa.cmp(&sb);
        }
        if sa == 0 {
            return Ordering::Equal;
        }
        let mag = cmp_magnitude(self, other);
        if sa > 0 {
            mag
        } else {
            mag.reverse()
        }
    }

    /// Converts a finite `f64`. Negative zero maps to zero.
    pub fn from_f64(x: f64, fmt: Format) -> Result<Float> {
        if !x.is_finite() {
            return Err(Error::Overflow);
        }
        if x == 0.0 {
            return Ok(Float::zero(fmt));
        }
        let bits = x.to_bits();
        let neg = bits >> 63 == 1;
        let biased = ((bits >> 52) & 0x7ff) as i64;
        let frac = (bits & ((1u64 << 52) - 1)) as i128;
        let (mag, e) = if biased == 0 {
            (frac, -1074)
        } else {
            (frac | (1i128 << 52), biased - 1075)
        };
        round_i128(if neg { -mag } else { mag }, e, fmt)
    }

    /// Nearest `f64`; exact whenever the value is a binary64 number.
    pub fn to_f64(&self) -> f64 {
        if self.m == 0 {
            return 0.0;
        }
        round_i128(self.m as i128, self.e as i64, Format::DOUBLE)
            .map(|d| d.double_bits())
            .unwrap_or(if self.m > 0 {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            })
    }

    /// Assumes `self` is canonical in binary64.
    fn double_bits(&self) -> f64 {
        let neg = self.m < 0;
        let a = self.m.unsigned_abs();
        let bits = if a < 1u64 << 52 {
            a
        } else {
            let biased = (self.e as i64 + 1075) as u64;
            (biased << 52) | (a & ((1u64 << 52) - 1))
        };
        f64::from_bits(bits | if neg { 1u64 << 63 } else { 0 })
    }

    /// Successor in the format (towards +infinity).
    pub fn next_up(&self, fmt: Format) -> Result<Float> {
        if self.m < 0 {
            return Ok(self.neg().next_down(fmt)?.neg());
        }
        if self.m == 0 {
            return Ok(Float {
                m: 1,
                e: fmt.lowest_exponent() as i32,
            });
        }
        let m = self.m + 1;
        if m == 1i64 << fmt.precision {
            let e = self.e as i64 + 1;
            if e > fmt.highest_exponent() {
                return Err(Error::Overflow);
            }
            Ok(Float {
                m: 1i64 << (fmt.precision - 1),
                e: e as i32,
            })
        } else {
            Ok(Float { m, e: self.e })
        }
    }

    /// Predecessor in the format (towards -infinity).
    pub fn next_down(&self, fmt: Format) -> Result<Float> {
        if self.m <= 0 {
            return Ok(self.neg().next_up(fmt)?.neg());
        }
        let half = 1i64 << (fmt.precision - 1);
        if self.m == half && (self.e as i64) > fmt.lowest_exponent() {
            Ok(Float {
                m: (1i64 << fmt.precision) - 1,
                e: self.e - 1,
            })
        } else if self.m == 1 && (self.e as i64) == fmt.lowest_exponent() {
            Ok(Float::zero(fmt))
        } else {
            Ok(Float {
                m: self.m - 1,
                e: self.e,
            })
        }
    }
}

fn cmp_magnitude(a: &Float, b: &Float) -> Ordering {
    let (ma, mb) = (a.m.unsigned_abs(), b.m.unsigned_abs());
    // top bit position of the value
    let ta = (64 - ma.leading_zeros()) as i64 + a.e as i64;
    let tb = (64 - mb.leading_zeros()) as i64 + b.e as i64;
    if ta != tb {
        return ta.cmp(&tb);
    }
    // same binade: exponents differ by less than 64
    let base = a.e.min(b.e);
    let xa = (ma as u128) << (a.e - base) as u32;
    let xb = (mb as u128) << (b.e - base) as u32;
    xa.cmp(&xb)
}

impl PartialOrd for Float {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Float {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cmp_value(other)
    }
}

impl fmt::Debug for Float {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.m, self.e)
    }
}

/// Quantum exponent of a nonzero value whose top bit sits at `2^top`.
fn quantum(top: i64, fmt: Format) -> i64 {
    (top - fmt.precision as i64 + 1).max(fmt.lowest_exponent())
}

fn finish(neg: bool, mut m: u128, mut q: i64, fmt: Format) -> Result<Float> {
    if m == 0 {
        return Ok(Float::zero(fmt));
    }
    if m == 1u128 << fmt.precision {
        m >>= 1;
        q += 1;
    }
    if q > fmt.highest_exponent() {
        return Err(Error::Overflow);
    }
    let m = m as i64;
    Ok(Float {
        m: if neg { -m } else { m },
        e: q as i32,
    })
}

/// Rounds `m * 2^e` to nearest, ties to even.
pub(crate) fn round_i128(m: i128, e: i64, fmt: Format) -> Result<Float> {
    if m == 0 {
        return Ok(Float::zero(fmt));
    }
    let neg = m < 0;
    let mag = m.unsigned_abs();
    let bits = 128 - mag.leading_zeros() as i64;
    let q = quantum(bits - 1 + e, fmt);
    if q <= e {
        return finish(neg, mag << (e - q) as u32, q, fmt);
    }
    let shift = q - e;
    let (kept, rem, half) = if shift > 128 {
        (0u128, mag, None)
    } else if shift == 128 {
        (0u128, mag, Some(1u128 << 127))
    } else {
        let s = shift as u32;
        (mag >> s, mag & ((1u128 << s) - 1), Some(1u128 << (s - 1)))
    };
    let up = match half {
        None => false,
        Some(h) => rem > h || (rem == h && kept & 1 == 1),
    };
    finish(neg, kept + up as u128, q, fmt)
}

/// Rounds `m * 2^e` (arbitrary precision) to nearest, ties to even.
pub(crate) fn round_bigint(m: &BigInt, e: i64, fmt: Format) -> Result<Float> {
    if m.is_zero() {
        return Ok(Float::zero(fmt));
    }
    if m.bits() < 127 {
        return round_i128(m.to_i128().expect("fits"), e, fmt);
    }
    let neg = m.is_negative();
    let mag = m.magnitude();
    let bits = mag.bits() as i64;
    let q = quantum(bits - 1 + e, fmt);
    // q > e here: the value has more than p significant bits
    let shift = (q - e) as usize;
    let kept = mag >> shift;
    let rem = mag - (&kept << shift);
    let twice = rem << 1usize;
    let unit = num_bigint::BigUint::one() << shift;
    let odd = kept.bit(0);
    let up = twice > unit || (twice == unit && odd);
    let kept = kept + if up { 1u32 } else { 0u32 };
    let kept = kept.to_u128().expect("at most p+1 bits");
    finish(neg, kept, q, fmt)
}

/// The float of `fmt` closest to `r`, ties to even significand.
pub fn round_nearest(r: &Rational, fmt: Format) -> Result<Float> {
    if r.is_zero() {
        return Ok(Float::zero(fmt));
    }
    let neg = r.is_negative();
    let top = r.floor_log2().expect("nonzero");
    let q = quantum(top, fmt);
    let n = r.numer().magnitude().clone();
    let d = r.denom().magnitude().clone();
    // |r| / 2^q = num / den
    let (num, den) = if q >= 0 {
        (n, d << q as usize)
    } else {
        (n << (-q) as usize, d)
    };
    let kept = &num / &den;
    let rem = &num - &kept * &den;
    let twice = rem << 1usize;
    let up = twice > den || (twice == den && kept.bit(0));
    let kept = kept + if up { 1u32 } else { 0u32 };
    let kept = kept.to_u128().expect("at most p+1 bits");
    finish(neg, kept, q, fmt)
}

/// Smallest float `>= r`.
pub fn round_up(r: &Rational, fmt: Format) -> Result<Float> {
    let f = round_nearest(r, fmt)?;
    if f.to_real() < *r {
        f.next_up(fmt)
    } else {
        Ok(f)
    }
}

/// Largest float `<= r`.
pub fn round_down(r: &Rational, fmt: Format) -> Result<Float> {
    let f = round_nearest(r, fmt)?;
    if f.to_real() > *r {
        f.next_down(fmt)
    } else {
        Ok(f)
    }
}

/// Spacing of `fmt` at magnitude `|r|`: `2^(E-p+1)` with `E` the binade
/// exponent, floored at `2^-e_min` in the subnormal range.
pub fn ulp(r: &Rational, fmt: Format) -> Rational {
    match r.floor_log2() {
        None => Rational::pow2(fmt.lowest_exponent()),
        Some(top) => Rational::pow2(quantum(top, fmt)),
    }
}

/// `|R(f) - r|`, exactly.
pub fn roundoff_error(f: &Float, r: &Rational) -> Rational {
    (f.to_real() - r).abs()
}

/// Arithmetic operators of the language.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Neg,
}

impl ArithOp {
    pub fn arity(&self) -> usize {
        match self {
            ArithOp::Neg => 1,
            _ => 2,
        }
    }

    pub fn apply_real(&self, args: &[Rational]) -> Rational {
        match self {
            ArithOp::Add => &args[0] + &args[1],
            ArithOp::Sub => &args[0] - &args[1],
            ArithOp::Mul => &args[0] * &args[1],
            ArithOp::Neg => -&args[0],
        }
    }
}

fn add_floats(a: &Float, b: &Float, fmt: Format) -> Result<Float> {
    if a.m == 0 {
        return Ok(*b);
    }
    if b.m == 0 {
        return Ok(*a);
    }
    let base = a.e.min(b.e) as i64;
    let (da, db) = (a.e as i64 - base, b.e as i64 - base);
    if da <= 64 && db <= 64 {
        let sum = ((a.m as i128) << da) + ((b.m as i128) << db);
        return round_i128(sum, base, fmt);
    }
    let sum = (BigInt::from(a.m) << da as usize) + (BigInt::from(b.m) << db as usize);
    round_bigint(&sum, base, fmt)
}

/// Correctly rounded execution of `op` on canonical operands.
pub fn exec_op(op: ArithOp, args: &[Float], fmt: Format) -> Result<Float> {
    if args.len() != op.arity() {
        return Err(Error::InvalidProgram(format!(
            "{op:?} expects {} operands, got {}",
            op.arity(),
            args.len()
        )));
    }
    match op {
        ArithOp::Add => add_floats(&args[0], &args[1], fmt),
        ArithOp::Sub => add_floats(&args[0], &args[1].neg(), fmt),
        ArithOp::Mul => {
            let (a, b) = (&args[0], &args[1]);
            round_i128(a.m as i128 * b.m as i128, a.e as i64 + b.e as i64, fmt)
        }
        ArithOp::Neg => Ok(args[0].neg()),
    }
}

/// Shortest decimal string that rounds back to `f` in `fmt`.
pub fn format_float(f: &Float, fmt: Format) -> String {
    if f.is_zero() {
        return "0".to_string();
    }
    let v = f.abs().to_real();
    let k = v.floor_log10().expect("nonzero");
    for digits in 1..=40i64 {
        let scale = k - digits + 1;
        let unit = Rational::pow10(scale);
        let q = &v * &Rational::pow10(-scale);
        let floor = q.floor();
        for cand in [q.round_to_integer(), floor.clone(), floor + 1] {
            let value = Rational::from_integer(cand.clone()) * &unit;
            if round_nearest(&value, fmt).ok().as_ref() == Some(&f.abs()) {
                let s = render_decimal(&cand, scale);
                return if f.is_negative() { format!("-{s}") } else { s };
            }
        }
    }
    unreachable!("40 significant digits always round-trip")
}

/// Renders `digits * 10^scale`.
fn render_decimal(digits: &BigInt, scale: i64) -> String {
    let mut d = digits.to_string();
    let mut scale = scale;
    while d.len() > 1 && d.ends_with('0') {
        d.pop();
        scale += 1;
    }
    let exp10 = scale + d.len() as i64 - 1;
    if (-5..=16).contains(&exp10) {
        if scale >= 0 {
            format!("{d}{}", "0".repeat(scale as usize))
        } else {
            let frac = (-scale) as usize;
            if d.len() > frac {
                let (i, fr) = d.split_at(d.len() - frac);
                format!("{i}.{fr}")
            } else {
                format!("0.{}{d}", "0".repeat(frac - d.len()))
            }
        }
    } else {
        let (first, rest) = d.split_at(1);
        if rest.is_empty() {
            format!("{first}e{exp10}")
        } else {
            format!("{first}.{rest}e{exp10}")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const D: Format = Format::DOUBLE;

    #[test]
    fn to_real_direct_formula() {
        assert_eq!(Float { m: 3, e: -1 }.to_real(), Rational::new(3, 2));
        assert_eq!(Float::zero(D).to_real(), Rational::zero());
        assert_eq!(Float::zero(D).exponent(), -1074);
    }

    #[test]
    fn tenth_rounds_to_known_double() {
        let f = round_nearest(&Rational::new(1, 10), D).unwrap();
        assert_eq!(f.to_real(), Rational::dyadic(3602879701896397i64, -55));
        assert_eq!(f.to_f64(), 0.1);
    }

    #[test]
    fn representable_is_fixed_point() {
        let f = round_nearest(&Rational::new(3, 2), D).unwrap();
        assert_eq!(f.to_real(), Rational::new(3, 2));
        assert!(f.is_canonical(D));
    }

    #[test]
    fn ties_go_to_even() {
        let p3 = Format::new(3, 10).unwrap();
        // 0b101 and 0b110 at exponent 0; midpoint 5.5
        let f = round_nearest(&Rational::new(11, 2), p3).unwrap();
        assert_eq!((f.significand(), f.exponent()), (6, 0));
        // midpoint 4.5 between 0b100 and 0b101 goes down to the even 0b100
        let g = round_nearest(&Rational::new(9, 2), p3).unwrap();
        assert_eq!((g.significand(), g.exponent()), (4, 0));
    }

    #[test]
    fn third_within_half_ulp() {
        let r = Rational::new(1, 3);
        let f = round_nearest(&r, D).unwrap();
        // oracle: 1/3 in [2^-2, 2^-1), so the spacing is 2^-54
        let bound = Rational::pow2(-55);
        assert!(roundoff_error(&f, &r) <= bound);
        // exhaustive construction: significand is floor or ceil of 2^54/3
        let floor = (BigInt::one() << 54usize) / BigInt::from(3);
        let cands = [floor.clone(), floor + 1];
        let best = cands
            .iter()
            .min_by_key(|c| (Rational::dyadic((*c).clone(), -54) - &r).abs())
            .unwrap();
        assert_eq!(f.to_real(), Rational::dyadic(best.clone(), -54));
    }

    #[test]
    fn ulp_examples() {
        assert_eq!(ulp(&Rational::one(), D), Rational::pow2(-52));
        assert_eq!(ulp(&Rational::zero(), D), Rational::pow2(-1074));
        assert_eq!(ulp(&Rational::from(20000), D), Rational::pow2(-38));
        assert_eq!(ulp(&Rational::pow2(-1060), D), Rational::pow2(-1074));
    }

    #[test]
    fn roundoff_error_cases() {
        let r = Rational::new(3, 2);
        assert!(roundoff_error(&round_nearest(&r, D).unwrap(), &r).is_zero());
        let t = Rational::new(1, 10);
        let e = roundoff_error(&round_nearest(&t, D).unwrap(), &t);
        assert!(e.is_positive());
        assert_eq!(e, Rational::dyadic(3602879701896397i64, -55) - &t);
    }

    #[test]
    fn overflow_is_an_error() {
        let big = Rational::pow2(1024);
        assert_eq!(round_nearest(&big, D), Err(Error::Overflow));
        let max = D.max_finite();
        assert_eq!(max.to_f64(), f64::MAX);
        assert_eq!(exec_op(ArithOp::Add, &[max, max], D), Err(Error::Overflow));
    }

    #[test]
    fn f64_round_trip() {
        for x in [1.0, -0.1, 5e-324, 2.2250738585072014e-308, 1e300, -3.75] {
            let f = Float::from_f64(x, D).unwrap();
            assert!(f.is_canonical(D));
            assert_eq!(f.to_f64(), x);
            assert_eq!(f.to_real(), round_nearest(&f.to_real(), D).unwrap().to_real());
        }
    }

    #[test]
    fn next_up_down() {
        let one = Float::from_f64(1.0, D).unwrap();
        assert_eq!(one.next_up(D).unwrap().to_f64(), 1.0 + f64::EPSILON);
        assert_eq!(one.next_down(D).unwrap().to_f64(), 1.0 - f64::EPSILON / 2.0);
        let z = Float::zero(D);
        assert_eq!(z.next_up(D).unwrap().to_f64(), 5e-324);
        assert_eq!(z.next_down(D).unwrap().to_f64(), -5e-324);
    }

    #[test]
    fn exec_matches_definition() {
        let x = round_nearest(&Rational::new(1, 10), D).unwrap();
        let prod = exec_op(ArithOp::Mul, &[x, x], D).unwrap();
        let exact = &x.to_real() * &x.to_real();
        assert_eq!(prod, round_nearest(&exact, D).unwrap());
        let one = Float::from_f64(1.0, D).unwrap();
        assert_eq!(exec_op(ArithOp::Add, &[one, one], D).unwrap().to_f64(), 2.0);
    }

    #[test]
    fn shortest_decimal() {
        let cases = [0.1, 1.0, -2.5, 6.4801497501321145e-12, 1e22, 123456.789, 5e-324];
        for x in cases {
            let f = Float::from_f64(x, D).unwrap();
            let s = format_float(&f, D);
            let back = round_nearest(&Rational::parse_literal(&s).unwrap(), D).unwrap();
            assert_eq!(back, f, "{s}");
        }
        let tenth = Float::from_f64(0.1, D).unwrap();
        assert_eq!(format_float(&tenth, D), "0.1");
        assert_eq!(format_float(&Float::from_f64(-2.5, D).unwrap(), D), "-2.5");
        assert_eq!(format_float(&Float::from_f64(100.0, D).unwrap(), D), "100");
        assert_eq!(
            format_float(&Float::from_f64(6.4801497501321145e-12, D).unwrap(), D),
            "6.4801497501321145e-12"
        );
    }
}
