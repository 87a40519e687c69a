//! Exact time and coefficient arithmetic.
//!
//! Every latency, routing delay and schedule start in the mapper is a
//! [`Micros`] value backed by a reduced `i128` ratio. Decimal inputs such as
//! `0.2` or `31.5` are parsed into exact rationals, so composing a callee's
//! schedule into its caller never loses a unit in the last place.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, Sub};
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::{Serialize, Serializer};

pub type Rational = Ratio<i128>;

/// Parses a plain decimal literal (`12`, `0.2`, `-3.75`, `1e3` is rejected)
/// into an exact rational.
pub fn parse_decimal(text: &str) -> Option<Rational> {
    let text = text.trim();
    if text.is_empty() {
        return None;
    }
    if let Some((num, den)) = text.split_once('/') {
        let n: i128 = num.trim().parse().ok()?;
        let d: i128 = den.trim().parse().ok()?;
        if d == 0 {
            return None;
        }
        return Some(Ratio::new(n, d));
    }
    let (negative, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.strip_prefix('+').unwrap_or(text)),
    };
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().all(|b| b.is_ascii_digit()) || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    if frac_part.len() > 18 {
        return None;
    }
    let mut numer: i128 = if int_part.is_empty() { 0 } else { int_part.parse().ok()? };
    let mut denom: i128 = 1;
    for digit in frac_part.bytes() {
        numer = numer.checked_mul(10)?.checked_add(i128::from(digit - b'0'))?;
        denom *= 10;
    }
    if negative {
        numer = -numer;
    }
    Some(Ratio::new(numer, denom))
}

/// Formats a rational as a terminating decimal when possible, else `p/q`.
pub fn format_rational(value: &Rational) -> String {
    if value.is_integer() {
        return value.to_integer().to_string();
    }
    let mut den = *value.denom();
    let (mut twos, mut fives) = (0u32, 0u32);
    while den % 2 == 0 {
        den /= 2;
        twos += 1;
    }
    while den % 5 == 0 {
        den /= 5;
        fives += 1;
    }
    if den != 1 {
        return format!("{}/{}", value.numer(), value.denom());
    }
    let digits = twos.max(fives);
    let scale = 10i128.pow(digits);
    let scaled = (value * Ratio::from_integer(scale)).to_integer();
    let sign = if scaled < 0 { "-" } else { "" };
    let abs = scaled.abs();
    let int = abs / scale;
    let frac = abs % scale;
    format!("{sign}{int}.{frac:0width$}", width = digits as usize)
}

/// A duration or instant in microseconds, stored exactly.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Micros(Rational);

impl Micros {
    pub const ZERO: Micros = Micros(Ratio::new_raw(0, 1));

    pub fn from_int(us: i64) -> Self {
        Micros(Ratio::from_integer(i128::from(us)))
    }

    pub fn from_ratio(value: Rational) -> Self {
        Micros(value)
    }

    pub fn ratio(&self) -> Rational {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn scale(self, factor: u64) -> Self {
        Micros(self.0 * Ratio::from_integer(i128::from(factor)))
    }
}

impl Add for Micros {
    type Output = Micros;
    fn add(self, rhs: Micros) -> Micros {
        Micros(self.0 + rhs.0)
    }
}

impl AddAssign for Micros {
    fn add_assign(&mut self, rhs: Micros) {
        self.0 += rhs.0;
    }
}

impl Sub for Micros {
    type Output = Micros;
    fn sub(self, rhs: Micros) -> Micros {
        Micros(self.0 - rhs.0)
    }
}

impl Mul<Rational> for Micros {
    type Output = Micros;
    fn mul(self, rhs: Rational) -> Micros {
        Micros(self.0 * rhs)
    }
}

impl Sum for Micros {
    fn sum<I: Iterator<Item = Micros>>(iter: I) -> Micros {
        iter.fold(Micros::ZERO, Add::add)
    }
}

impl fmt::Display for Micros {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_rational(&self.0))
    }
}

impl FromStr for Micros {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_decimal(s)
            .map(Micros)
            .ok_or_else(|| format!("invalid duration `{s}`"))
    }
}

impl Serialize for Micros {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.to_f64())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_parsing_is_exact() {
        assert_eq!(parse_decimal("0.2"), Some(Ratio::new(1, 5)));
        assert_eq!(parse_decimal("10"), Some(Ratio::from_integer(10)));
        assert_eq!(parse_decimal("-3.75"), Some(Ratio::new(-15, 4)));
        assert_eq!(parse_decimal("7/3"), Some(Ratio::new(7, 3)));
        assert_eq!(parse_decimal(".5"), Some(Ratio::new(1, 2)));
        assert_eq!(parse_decimal("1e3"), None);
        assert_eq!(parse_decimal(""), None);
        assert_eq!(parse_decimal("."), None);
    }

    #[test]
    fn formatting() {
        assert_eq!(Micros::from_int(540).to_string(), "540");
        assert_eq!(Micros::from_ratio(Ratio::new(43, 5)).to_string(), "8.6");
        assert_eq!(Micros::from_ratio(Ratio::new(1, 3)).to_string(), "1/3");
        assert_eq!(Micros::from_ratio(Ratio::new(-1, 8)).to_string(), "-0.125");
    }

    #[test]
    fn sums_are_associative() {
        let a: Micros = "0.1".parse().unwrap();
        let b: Micros = "0.2".parse().unwrap();
        let c: Micros = "0.3".parse().unwrap();
        assert_eq!((a + b) + c, a + (b + c));
        assert_eq!(a + b, c);
    }
}
