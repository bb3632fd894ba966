//! Exact rationals, dyadic rounding and a small exact-or-float real type.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{DynError, Result};

pub type Rational = BigRational;

/// Absolute tolerance used whenever two floating-point quantities are compared.
pub const FLOAT_TOL: f64 = 1e-12;

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `2^exp` as an exact rational.
pub fn pow2(exp: i64) -> Rational {
    let mag = BigInt::one() << exp.unsigned_abs();
    if exp >= 0 {
        Rational::from_integer(mag)
    } else {
        Rational::new(BigInt::one(), mag)
    }
}

fn bit_len(n: &BigInt) -> i64 {
    n.bits() as i64
}

/// Largest `e` with `2^e <= q`. Requires `q > 0`.
pub fn floor_log2(q: &Rational) -> i64 {
    assert!(q.is_positive(), "floor_log2 of non-positive value");
    let mut e = bit_len(q.numer()) - bit_len(q.denom());
    // 2^(e-1) < q < 2^(e+1); settle the boundary.
    if pow2(e) > *q {
        e -= 1;
    }
    e
}

/// Smallest `e` with `2^e >= q`. Requires `q > 0`.
pub fn ceil_log2(q: &Rational) -> i64 {
    let f = floor_log2(q);
    if pow2(f) == *q {
        f
    } else {
        f + 1
    }
}

/// Round down to a multiple of `2^-bits`.
pub fn round_down(q: &Rational, bits: u32) -> Rational {
    let scale = pow2(bits as i64);
    Rational::new((q * &scale).floor().to_integer(), scale.to_integer())
}

/// Round up to a multiple of `2^-bits`.
pub fn round_up(q: &Rational, bits: u32) -> Rational {
    let scale = pow2(bits as i64);
    Rational::new((q * &scale).ceil().to_integer(), scale.to_integer())
}

/// Dyadic bounds `lo <= sqrt(q) <= hi` with `hi - lo <= 2^-bits`. Requires `q >= 0`.
pub fn sqrt_bounds(q: &Rational, bits: u32) -> (Rational, Rational) {
    assert!(!q.is_negative(), "sqrt of negative value");
    let scaled = (q * pow2(2 * bits as i64)).floor().to_integer();
    let s = scaled
        .to_biguint()
        .unwrap_or_else(BigUint::zero)
        .sqrt();
    let s = BigInt::from_biguint(Sign::Plus, s);
    let den = pow2(bits as i64).to_integer();
    let lo = Rational::new(s.clone(), den.clone());
    let hi = if &lo * &lo == *q {
        lo.clone()
    } else {
        Rational::new(s + 1, den)
    };
    (lo, hi)
}

pub fn to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        // Huge numerators/denominators: fall back on a scaled division.
        let shift = (bit_len(q.numer()).max(bit_len(q.denom())) - 1000).max(0) as usize;
        let n = (q.numer() >> shift).to_f64().unwrap_or(f64::NAN);
        let d = (q.denom() >> shift).to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Exact rational value of a finite double.
pub fn from_f64(x: f64) -> Result<Rational> {
    Rational::from_float(x).ok_or_else(|| DynError::InvalidParameter(format!("non-finite value {x}")))
}

/// Encodes as `num/den`, or `num` for integers.
pub fn format_rational(q: &Rational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let parse_int = |t: &str| {
        BigInt::from_str(t.trim()).map_err(|_| DynError::Parse(format!("bad rational `{s}`")))
    };
    match s.split_once('/') {
        Some((n, d)) => {
            let d = parse_int(d)?;
            if d.is_zero() {
                return Err(DynError::Parse(format!("zero denominator in `{s}`")));
            }
            Ok(Rational::new(parse_int(n)?, d))
        }
        None => {
            if s.contains('.') || s.contains('e') || s.contains('E') {
                let x: f64 = s
                    .parse()
                    .map_err(|_| DynError::Parse(format!("bad rational `{s}`")))?;
                // Decimal literals are read as the exact decimal they denote.
                decimal_to_rational(s).or_else(|_| from_f64(x))
            } else {
                Ok(Rational::from_integer(parse_int(s)?))
            }
        }
    }
}

fn decimal_to_rational(s: &str) -> Result<Rational> {
    let bad = || DynError::Parse(format!("bad decimal `{s}`"));
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i64>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (ip, fp) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    let digits = format!("{ip}{fp}");
    let n = BigInt::from_str(if digits.is_empty() { "0" } else { &digits }).map_err(|_| bad())?;
    let scale = exp - fp.len() as i64;
    let ten = Rational::from_integer(BigInt::from(10));
    let mut q = Rational::from_integer(n);
    if scale >= 0 {
        q *= num_traits::pow(ten, scale as usize);
    } else {
        q /= num_traits::pow(ten, (-scale) as usize);
    }
    Ok(if neg { -q } else { q })
}

/// A nonnegative quantity that is exact whenever the system permits it.
#[derive(Clone, Debug)]
pub enum Real {
    Exact(Rational),
    Approx(f64),
}

impl Real {
    pub fn zero() -> Self {
        Real::Exact(Rational::zero())
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Real::Exact(_))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Real::Exact(q) => to_f64(q),
            Real::Approx(x) => *x,
        }
    }

    pub fn exact(&self) -> Option<&Rational> {
        match self {
            Real::Exact(q) => Some(q),
            Real::Approx(_) => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Real::Exact(q) => q.is_zero(),
            Real::Approx(x) => *x == 0.0,
        }
    }

    pub fn add(&self, other: &Real) -> Real {
        match (self, other) {
            (Real::Exact(a), Real::Exact(b)) => Real::Exact(a + b),
            _ => Real::Approx(self.to_f64() + other.to_f64()),
        }
    }

    pub fn sub(&self, other: &Real) -> Real {
        match (self, other) {
            (Real::Exact(a), Real::Exact(b)) => Real::Exact(a - b),
            _ => Real::Approx(self.to_f64() - other.to_f64()),
        }
    }

    pub fn scale(&self, factor: &Rational) -> Real {
        match self {
            Real::Exact(a) => Real::Exact(a * factor),
            Real::Approx(x) => Real::Approx(x * to_f64(factor)),
        }
    }

    /// Exact comparison when both sides are exact, plain float comparison otherwise.
    pub fn cmp_real(&self, other: &Real) -> Ordering {
        match (self, other) {
            (Real::Exact(a), Real::Exact(b)) => a.cmp(b),
            _ => self
                .to_f64()
                .partial_cmp(&other.to_f64())
                .unwrap_or(Ordering::Equal),
        }
    }

    /// `self <= other`, with [`FLOAT_TOL`] slack when either side is a float.
    pub fn le(&self, other: &Real) -> bool {
        match (self, other) {
            (Real::Exact(a), Real::Exact(b)) => a <= b,
            _ => self.to_f64() <= other.to_f64() + FLOAT_TOL,
        }
    }

    /// `self < other`; floats compare with no slack, which keeps strict bounds strict.
    pub fn lt(&self, other: &Real) -> bool {
        match (self, other) {
            (Real::Exact(a), Real::Exact(b)) => a < b,
            _ => self.to_f64() < other.to_f64(),
        }
    }

    pub fn max(self, other: Real) -> Real {
        if other.cmp_real(&self) == Ordering::Greater {
            other
        } else {
            self
        }
    }

    pub fn min(self, other: Real) -> Real {
        if other.cmp_real(&self) == Ordering::Less {
            other
        } else {
            self
        }
    }
}

impl PartialEq for Real {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Real::Exact(a), Real::Exact(b)) => a == b,
            (Real::Approx(a), Real::Approx(b)) => a == b,
            _ => false,
        }
    }
}

impl From<Rational> for Real {
    fn from(q: Rational) -> Self {
        Real::Exact(q)
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Real::Exact(q) => write!(f, "{}", format_rational(q)),
            Real::Approx(x) => write!(f, "~{x:?}"),
        }
    }
}

impl FromStr for Real {
    type Err = DynError;
    fn from_str(s: &str) -> Result<Self> {
        match s.strip_prefix('~') {
            Some(rest) => rest
                .parse::<f64>()
                .map(Real::Approx)
                .map_err(|_| DynError::Parse(format!("bad float `{s}`"))),
            None => parse_rational(s).map(Real::Exact),
        }
    }
}

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Serde adapter writing exact rationals as `"num/den"` strings.
pub mod rational_string {
    use super::*;

    pub fn serialize<S: Serializer>(q: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for lists of exact rationals.
pub mod rational_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
        v.iter().map(format_rational).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Rational>, D::Error> {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|s| parse_rational(s).map_err(serde::de::Error::custom))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log2_bounds_on_dyadics_and_non_dyadics() {
        assert_eq!(floor_log2(&rat(1, 2)), -1);
        assert_eq!(ceil_log2(&rat(1, 2)), -1);
        assert_eq!(floor_log2(&rat(10, 3)), 1);
        assert_eq!(ceil_log2(&rat(10, 3)), 2);
        assert_eq!(floor_log2(&int(1)), 0);
        assert_eq!(floor_log2(&rat(3, 1024)), -9);
    }

    #[test]
    fn sqrt_bounds_bracket() {
        let q = rat(1, 2);
        let (lo, hi) = sqrt_bounds(&q, 40);
        assert!(&lo * &lo <= q && &hi * &hi >= q);
        assert!(&hi - &lo <= pow2(-40));
        let (lo, hi) = sqrt_bounds(&rat(9, 16), 8);
        assert_eq!(lo, rat(3, 4));
        assert_eq!(hi, rat(3, 4));
    }

    #[test]
    fn parse_forms() {
        assert_eq!(parse_rational("3/6").unwrap(), rat(1, 2));
        assert_eq!(parse_rational("0.1").unwrap(), rat(1, 10));
        assert_eq!(parse_rational("-2").unwrap(), int(-2));
        assert_eq!(parse_rational("1e-3").unwrap(), rat(1, 1000));
        assert!(parse_rational("1/0").is_err());
        assert_eq!("~0.5".parse::<Real>().unwrap(), Real::Approx(0.5));
    }

    #[test]
    fn rounding_is_directed() {
        let q = rat(1, 3);
        assert!(round_down(&q, 10) <= q);
        assert!(round_up(&q, 10) >= q);
        assert!(round_up(&q, 10) - round_down(&q, 10) == pow2(-10));
    }
}
