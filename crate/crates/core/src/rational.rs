//! Exact rationals over arbitrary-precision integers.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Canonical rational: reduced, positive denominator. Equality is structural.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Rational(BigRational);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot parse {0:?} as a rational")]
pub struct ParseRationalError(pub String);

impl Rational {
    pub fn new(num: impl Into<BigInt>, den: impl Into<BigInt>) -> Self {
        Rational(BigRational::new(num.into(), den.into()))
    }

    pub fn from_integer(n: impl Into<BigInt>) -> Self {
        Rational(BigRational::from_integer(n.into()))
    }

    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
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

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }

    pub fn abs(&self) -> Self {
        Rational(self.0.abs())
    }

    pub fn in_unit_interval(&self) -> bool {
        !self.0.is_negative() && self.0 <= BigRational::one()
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// Decimal rendering rounded half-even to `digits` significant digits.
    pub fn to_decimal(&self, digits: u32) -> String {
        if self.0.is_zero() {
            return "0".to_string();
        }
        let negative = self.0.is_negative();
        let num = self.0.numer().abs().to_biguint().expect("non-negative");
        let den = self.0.denom().to_biguint().expect("positive");

        // Find the power of ten that puts |v| in [10^(digits-1), 10^digits).
        let ten = BigUint::from(10u32);
        let lower = ten.pow(digits - 1);
        let mut shift: i64 = digits as i64 - 1 - (decimal_len(&num) as i64 - decimal_len(&den) as i64);
        let scaled = |shift: i64| -> (BigUint, BigUint) {
            if shift >= 0 {
                (&num * ten.pow(shift as u32), den.clone())
            } else {
                (num.clone(), &den * ten.pow((-shift) as u32))
            }
        };
        loop {
            let (n, d) = scaled(shift);
            let q = &n / &d;
            if q < lower {
                shift += 1;
            } else if q >= &lower * &ten {
                shift -= 1;
            } else {
                break;
            }
        }
        let (n, d) = scaled(shift);
        let (mut q, r) = n.div_rem(&d);
        let twice = r * 2u32;
        if twice > d || (twice == d && q.is_odd()) {
            q += 1u32;
        }
        if q == &lower * &ten {
            q = lower.clone();
            shift -= 1;
        }

        let digits_str = q.to_str_radix(10);
        let mut out = String::new();
        if negative {
            out.push('-');
        }
        if shift <= 0 {
            out.push_str(&digits_str);
            out.extend(std::iter::repeat('0').take((-shift) as usize));
            return out;
        }
        let shift = shift as usize;
        let (int_part, frac_part) = if digits_str.len() > shift {
            let split = digits_str.len() - shift;
            (digits_str[..split].to_string(), digits_str[split..].to_string())
        } else {
            ("0".to_string(), format!("{}{}", "0".repeat(shift - digits_str.len()), digits_str))
        };
        let frac_part = frac_part.trim_end_matches('0');
        out.push_str(&int_part);
        if !frac_part.is_empty() {
            out.push('.');
            out.push_str(frac_part);
        }
        out
    }

    pub fn inner(&self) -> &BigRational {
        &self.0
    }
}

fn decimal_len(n: &BigUint) -> usize {
    n.to_str_radix(10).len()
}

impl From<BigRational> for Rational {
    fn from(r: BigRational) -> Self {
        Rational(r)
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::from_integer(n)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

/// Accepts `a/b`, integers and plain decimals such as `0.3` or `-1.25`.
impl FromStr for Rational {
    type Err = ParseRationalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseRationalError(s.to_string());
        let t = s.trim();
        if let Some((a, b)) = t.split_once('/') {
            let a: BigInt = a.trim().parse().map_err(|_| err())?;
            let b: BigInt = b.trim().parse().map_err(|_| err())?;
            if b.is_zero() {
                return Err(err());
            }
            return Ok(Rational::new(a, b));
        }
        let (sign, body) = match t.strip_prefix('-') {
            Some(rest) => (-1, rest),
            None => (1, t.strip_prefix('+').unwrap_or(t)),
        };
        let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(err());
        }
        if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
            return Err(err());
        }
        let digits = format!("{int_part}{frac_part}");
        let num: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().map_err(|_| err())? };
        let den = BigInt::from(10u32).pow(frac_part.len() as u32);
        Ok(Rational::new(num * sign, den))
    }
}

impl serde::Serialize for Rational {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident) => {
        impl $tr for Rational {
            type Output = Rational;
            fn $m(self, rhs: Rational) -> Rational {
                Rational(self.0.$m(rhs.0))
            }
        }
        impl<'a> $tr<&'a Rational> for &'a Rational {
            type Output = Rational;
            fn $m(self, rhs: &'a Rational) -> Rational {
                Rational((&self.0).$m(&rhs.0))
            }
        }
    };
}

binop!(Add, add);
binop!(Sub, sub);
binop!(Mul, mul);

impl std::ops::Div for Rational {
    type Output = Rational;
    fn div(self, rhs: Rational) -> Rational {
        assert!(!rhs.is_zero(), "division by zero");
        Rational(self.0 / rhs.0)
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl std::iter::Sum for Rational {
    fn sum<I: Iterator<Item = Rational>>(iter: I) -> Rational {
        iter.fold(Rational::zero(), |a, b| a + b)
    }
}

impl std::iter::Product for Rational {
    fn product<I: Iterator<Item = Rational>>(iter: I) -> Rational {
        iter.fold(Rational::one(), |a, b| a * b)
    }
}

pub(crate) fn signed(n: &BigUint) -> BigInt {
    BigInt::from_biguint(Sign::Plus, n.clone())
}
