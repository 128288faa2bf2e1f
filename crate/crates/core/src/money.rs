//! Exact currency amounts.
//!
//! Holding and backlog rates are rationals (the default holding rate is one
//! half), so cost ledgers are kept as `Ratio<i64>` and never touch floating
//! point. On the wire an amount is written as a decimal string when its
//! denominator terminates in base ten (`"9.5"`, `"480"`), otherwise as
//! `"numer/denom"`.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, Sub};
use std::str::FromStr;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Money(Ratio<i64>);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid amount `{0}`: expected an integer, a decimal like 0.5, or a fraction like 1/3")]
pub struct ParseMoneyError(String);

impl Money {
    pub const ZERO: Money = Money(Ratio::new_raw(0, 1));

    pub fn new(numer: i64, denom: i64) -> Self {
        Money(Ratio::new(numer, denom))
    }

    pub fn from_integer(value: i64) -> Self {
        Money(Ratio::from_integer(value))
    }

    pub fn ratio(self) -> Ratio<i64> {
        self.0
    }

    pub fn is_negative(self) -> bool {
        self.0 < Ratio::zero()
    }

    pub fn to_f64(self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// Multiplies by a unit count.
    pub fn times(self, units: i64) -> Money {
        Money(self.0 * Ratio::from_integer(units))
    }

    /// Formats like Python's `str(float)` for terminating values: `1.0`, `0.5`, `12.25`.
    pub fn to_float_literal(self) -> String {
        let s = self.to_string();
        if s.contains('.') || s.contains('/') {
            s
        } else {
            format!("{s}.0")
        }
    }

    fn decimal_digits(denom: i64) -> Option<u32> {
        let mut d = denom;
        let (mut twos, mut fives) = (0u32, 0u32);
        while d % 2 == 0 {
            d /= 2;
            twos += 1;
        }
        while d % 5 == 0 {
            d /= 5;
            fives += 1;
        }
        (d == 1).then_some(twos.max(fives))
    }
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (numer, denom) = (*self.0.numer(), *self.0.denom());
        if denom == 1 {
            return write!(f, "{numer}");
        }
        match Self::decimal_digits(denom) {
            Some(digits) if digits <= 18 => {
                let scale = 10i128.pow(digits);
                let scaled = numer as i128 * (scale / denom as i128);
                let sign = if scaled < 0 { "-" } else { "" };
                let abs = scaled.unsigned_abs();
                let int = abs / scale as u128;
                let frac = abs % scale as u128;
                let frac = format!("{:0width$}", frac, width = digits as usize);
                write!(f, "{sign}{int}.{}", frac.trim_end_matches('0'))
            }
            _ => write!(f, "{numer}/{denom}"),
        }
    }
}

impl FromStr for Money {
    type Err = ParseMoneyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseMoneyError(s.to_string());
        let t = s.trim();
        if let Some((n, d)) = t.split_once('/') {
            let n: i64 = n.trim().parse().map_err(|_| err())?;
            let d: i64 = d.trim().parse().map_err(|_| err())?;
            if d == 0 {
                return Err(err());
            }
            return Ok(Money::new(n, d));
        }
        let (neg, body) = match t.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, t.strip_prefix('+').unwrap_or(t)),
        };
        let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(err());
        }
        let all_digits = |p: &str| p.bytes().all(|b| b.is_ascii_digit());
        if !all_digits(int_part) || !all_digits(frac_part) || frac_part.len() > 18 {
            return Err(err());
        }
        let frac_part = frac_part.trim_end_matches('0');
        let scale = 10i64.pow(frac_part.len() as u32);
        let int: i64 = if int_part.is_empty() { 0 } else { int_part.parse().map_err(|_| err())? };
        let frac: i64 = if frac_part.is_empty() { 0 } else { frac_part.parse().map_err(|_| err())? };
        let numer = int
            .checked_mul(scale)
            .and_then(|v| v.checked_add(frac))
            .ok_or_else(err)?;
        Ok(Money::new(if neg { -numer } else { numer }, scale))
    }
}

impl Add for Money {
    type Output = Money;
    fn add(self, rhs: Money) -> Money {
        Money(self.0 + rhs.0)
    }
}

impl AddAssign for Money {
    fn add_assign(&mut self, rhs: Money) {
        self.0 += rhs.0;
    }
}

impl Sub for Money {
    type Output = Money;
    fn sub(self, rhs: Money) -> Money {
        Money(self.0 - rhs.0)
    }
}

impl Mul<i64> for Money {
    type Output = Money;
    fn mul(self, rhs: i64) -> Money {
        self.times(rhs)
    }
}

impl Sum for Money {
    fn sum<I: Iterator<Item = Money>>(iter: I) -> Money {
        iter.fold(Money::ZERO, Add::add)
    }
}

impl<'a> Sum<&'a Money> for Money {
    fn sum<I: Iterator<Item = &'a Money>>(iter: I) -> Money {
        iter.copied().sum()
    }
}

impl From<i64> for Money {
    fn from(value: i64) -> Self {
        Money::from_integer(value)
    }
}

impl Serialize for Money {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Money {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct MoneyVisitor;

        impl Visitor<'_> for MoneyVisitor {
            type Value = Money;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or a string such as \"0.5\" or \"1/3\"")
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Money, E> {
                Ok(Money::from_integer(v))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Money, E> {
                i64::try_from(v)
                    .map(Money::from_integer)
                    .map_err(|_| E::custom("amount out of range"))
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Money, E> {
                // Shortest round-trip repr, so 0.1 parses as 1/10 rather than its binary expansion.
                format!("{v}").parse().map_err(E::custom)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Money, E> {
                v.parse().map_err(E::custom)
            }
        }

        deserializer.deserialize_any(MoneyVisitor)
    }
}

/// Arithmetic mean of a set of amounts, kept exact.
pub fn mean(values: &[Money]) -> Option<Money> {
    if values.is_empty() {
        return None;
    }
    let total: Money = values.iter().sum();
    let n = values.len() as i64;
    let (numer, denom) = (*total.0.numer(), *total.0.denom());
    let g = numer.gcd(&n);
    Some(Money::new(numer / g, denom * (n / g)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn displays_terminating_and_repeating() {
        assert_eq!(Money::new(19, 2).to_string(), "9.5");
        assert_eq!(Money::from_integer(480).to_string(), "480");
        assert_eq!(Money::new(-1, 4).to_string(), "-0.25");
        assert_eq!(Money::new(1, 3).to_string(), "1/3");
        assert_eq!(Money::new(1, 2).to_float_literal(), "0.5");
        assert_eq!(Money::from_integer(1).to_float_literal(), "1.0");
    }

    #[test]
    fn parses_decimal_and_fraction() {
        assert_eq!("0.5".parse::<Money>().unwrap(), Money::new(1, 2));
        assert_eq!("-2.50".parse::<Money>().unwrap(), Money::new(-5, 2));
        assert_eq!("1/3".parse::<Money>().unwrap(), Money::new(1, 3));
        assert_eq!(".25".parse::<Money>().unwrap(), Money::new(1, 4));
        assert!("abc".parse::<Money>().is_err());
        assert!("1/0".parse::<Money>().is_err());
        assert!("".parse::<Money>().is_err());
    }

    #[test]
    fn serde_accepts_numbers_and_strings() {
        let m: Money = serde_json::from_str("0.1").unwrap();
        assert_eq!(m, Money::new(1, 10));
        let m: Money = serde_json::from_str("\"2/3\"").unwrap();
        assert_eq!(m, Money::new(2, 3));
        assert_eq!(serde_json::to_string(&Money::new(19, 2)).unwrap(), "\"9.5\"");
    }

    #[test]
    fn exact_mean() {
        let v = [Money::from_integer(1), Money::from_integer(2)];
        assert_eq!(mean(&v), Some(Money::new(3, 2)));
        assert_eq!(mean(&[]), None);
    }
}
