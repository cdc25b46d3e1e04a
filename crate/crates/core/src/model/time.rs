//! Exact rational time values.
//!
//! Every timestamp, execution budget, and period in the simulator is a
//! [`Ratio`]: an exact fraction of two 128-bit integers. Scenarios that
//! perturb executions by tiny epsilons (e.g. 1/1000) must compare exactly
//! equal or not at all — floating point is never used for time.
//!
//! Values are kept normalized (`gcd(|num|, den) == 1`, `den > 0`), so
//! structural equality is value equality and the `Display` form is
//! canonical. Arithmetic that would overflow the backing integers is a
//! fatal error: we abort with a diagnostic instead of silently wrapping.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = b;
        b = a % b;
        a = t;
    }
    a
}

#[cold]
fn overflow(op: &str) -> ! {
    panic!("fatal rational arithmetic overflow during {op}; values exceed the 128-bit backing integers");
}

/// An exact rational number. Copyable, totally ordered, hashable.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Ratio {
    num: i128,
    den: i128, // invariant: den > 0, gcd(|num|, den) == 1
}

impl Ratio {
    pub const ZERO: Ratio = Ratio { num: 0, den: 1 };
    pub const ONE: Ratio = Ratio { num: 1, den: 1 };

    /// Builds `num/den`, normalizing sign and common factors.
    ///
    /// Panics if `den == 0`.
    pub fn new(num: i128, den: i128) -> Ratio {
        assert!(den != 0, "rational with zero denominator");
        let sign = if (num < 0) != (den < 0) && num != 0 { -1 } else { 1 };
        let (n, d) = (num.unsigned_abs(), den.unsigned_abs());
        let g = gcd(n, d);
        let (n, d) = (n / g, d / g);
        if n > i128::MAX as u128 || d > i128::MAX as u128 {
            overflow("normalization");
        }
        Ratio { num: sign * n as i128, den: d as i128 }
    }

    pub const fn int(v: i128) -> Ratio {
        Ratio { num: v, den: 1 }
    }

    pub fn num(&self) -> i128 {
        self.num
    }

    pub fn den(&self) -> i128 {
        self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    pub fn is_negative(&self) -> bool {
        self.num < 0
    }

    pub fn min(self, other: Ratio) -> Ratio {
        if self <= other { self } else { other }
    }

    pub fn max(self, other: Ratio) -> Ratio {
        if self >= other { self } else { other }
    }

    /// Smallest integer `>= self`.
    pub fn ceil(&self) -> i128 {
        self.num
            .checked_add(self.den - 1)
            .unwrap_or_else(|| overflow("ceil"))
            .div_euclid(self.den)
    }

    /// Largest integer `<= self`.
    pub fn floor(&self) -> i128 {
        self.num.div_euclid(self.den)
    }

    /// Canonical `"num/den"` form with an explicit denominator, used by the
    /// trace exporter so that byte-level comparison of traces is meaningful.
    pub fn frac_str(&self) -> String {
        format!("{}/{}", self.num, self.den)
    }

    /// Lossy conversion for rendering only (never for scheduling decisions).
    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    fn checked_mul_i128(a: i128, b: i128, op: &str) -> i128 {
        a.checked_mul(b).unwrap_or_else(|| overflow(op))
    }
}

impl Default for Ratio {
    fn default() -> Self {
        Ratio::ZERO
    }
}

impl Add for Ratio {
    type Output = Ratio;
    fn add(self, rhs: Ratio) -> Ratio {
        let n1 = Ratio::checked_mul_i128(self.num, rhs.den, "addition");
        let n2 = Ratio::checked_mul_i128(rhs.num, self.den, "addition");
        let num = n1.checked_add(n2).unwrap_or_else(|| overflow("addition"));
        let den = Ratio::checked_mul_i128(self.den, rhs.den, "addition");
        Ratio::new(num, den)
    }
}

impl Sub for Ratio {
    type Output = Ratio;
    fn sub(self, rhs: Ratio) -> Ratio {
        self + (-rhs)
    }
}

impl Mul for Ratio {
    type Output = Ratio;
    fn mul(self, rhs: Ratio) -> Ratio {
        // Cross-reduce first so intermediate products stay small.
        let g1 = gcd(self.num.unsigned_abs(), rhs.den.unsigned_abs()).max(1);
        let g2 = gcd(rhs.num.unsigned_abs(), self.den.unsigned_abs()).max(1);
        let num = Ratio::checked_mul_i128(self.num / g1 as i128, rhs.num / g2 as i128, "multiplication");
        let den = Ratio::checked_mul_i128(self.den / g2 as i128, rhs.den / g1 as i128, "multiplication");
        Ratio::new(num, den)
    }
}

impl Div for Ratio {
    type Output = Ratio;
    fn div(self, rhs: Ratio) -> Ratio {
        assert!(!rhs.is_zero(), "rational division by zero");
        self * Ratio::new(rhs.den, rhs.num)
    }
}

impl Neg for Ratio {
    type Output = Ratio;
    fn neg(self) -> Ratio {
        Ratio { num: self.num.checked_neg().unwrap_or_else(|| overflow("negation")), den: self.den }
    }
}

impl AddAssign for Ratio {
    fn add_assign(&mut self, rhs: Ratio) {
        *self = *self + rhs;
    }
}

impl SubAssign for Ratio {
    fn sub_assign(&mut self, rhs: Ratio) {
        *self = *self - rhs;
    }
}

impl Sum for Ratio {
    fn sum<I: Iterator<Item = Ratio>>(iter: I) -> Ratio {
        iter.fold(Ratio::ZERO, |a, b| a + b)
    }
}

impl Ord for Ratio {
    fn cmp(&self, other: &Ratio) -> Ordering {
        // den > 0 on both sides, so cross-multiplication preserves order.
        let lhs = Ratio::checked_mul_i128(self.num, other.den, "comparison");
        let rhs = Ratio::checked_mul_i128(other.num, self.den, "comparison");
        lhs.cmp(&rhs)
    }
}

impl PartialOrd for Ratio {
    fn partial_cmp(&self, other: &Ratio) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl fmt::Debug for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl From<i64> for Ratio {
    fn from(v: i64) -> Ratio {
        Ratio::int(v as i128)
    }
}

/// Error produced when parsing a rational from text.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid rational {input:?}: {reason}")]
pub struct ParseRatioError {
    pub input: String,
    pub reason: &'static str,
}

impl FromStr for Ratio {
    type Err = ParseRatioError;

    /// Accepts `"12"`, `"-3"`, and `"num/den"` forms like `"99/100"`.
    fn from_str(s: &str) -> Result<Ratio, ParseRatioError> {
        let err = |reason| ParseRatioError { input: s.to_string(), reason };
        let s = s.trim();
        if s.is_empty() {
            return Err(err("empty string"));
        }
        match s.split_once('/') {
            None => {
                let num: i128 = s.parse().map_err(|_| err("not an integer"))?;
                Ok(Ratio::int(num))
            }
            Some((n, d)) => {
                let num: i128 = n.trim().parse().map_err(|_| err("numerator is not an integer"))?;
                let den: i128 = d.trim().parse().map_err(|_| err("denominator is not an integer"))?;
                if den == 0 {
                    return Err(err("zero denominator"));
                }
                Ok(Ratio::new(num, den))
            }
        }
    }
}

impl Serialize for Ratio {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Ratio {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Ratio, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = Ratio;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "an integer or a \"num/den\" string")
            }
            fn visit_i64<E: serde::de::Error>(self, v: i64) -> Result<Ratio, E> {
                Ok(Ratio::int(v as i128))
            }
            fn visit_u64<E: serde::de::Error>(self, v: u64) -> Result<Ratio, E> {
                Ok(Ratio::int(v as i128))
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> Result<Ratio, E> {
                v.parse().map_err(serde::de::Error::custom)
            }
        }
        deserializer.deserialize_any(V)
    }
}

/// Shorthand used pervasively in tests and scenario builders.
pub fn r(num: i128, den: i128) -> Ratio {
    Ratio::new(num, den)
}

/// Integer shorthand.
pub fn ri(v: i128) -> Ratio {
    Ratio::int(v)
}
