//! Exact fixed-point decimal with 18 fractional digits.
//!
//! Token and quote amounts on EVM chains are integers scaled by 10^18, and
//! derived features such as balance variance reach magnitudes far beyond
//! `i128`. The value is stored as a signed 256-bit integer count of
//! 10^-18 units, so every sum and difference is exact. Multiplication and
//! division truncate toward zero at the 18th fractional digit.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use ethnum::I256;
use thiserror::Error;

/// Number of fractional decimal digits carried by [`Decimal`].
pub const SCALE_DIGITS: u32 = 18;

const SCALE: I256 = I256::new(1_000_000_000_000_000_000);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecimalError {
    #[error("invalid decimal literal {0:?}")]
    Invalid(String),
    #[error("decimal literal {0:?} has more than 18 fractional digits")]
    TooPrecise(String),
    #[error("decimal overflow")]
    Overflow,
    #[error("division by zero")]
    DivisionByZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Decimal(I256);

impl Decimal {
    pub const ZERO: Decimal = Decimal(I256::ZERO);
    pub const ONE: Decimal = Decimal(SCALE);

    /// Smallest positive representable value, 10^-18.
    pub const EPSILON: Decimal = Decimal(I256::ONE);

    pub fn from_int(v: i64) -> Self {
        Decimal(I256::from(v) * SCALE)
    }

    /// Builds a value from a count of 10^-18 units.
    pub fn from_raw(units: I256) -> Self {
        Decimal(units)
    }

    pub fn raw(self) -> I256 {
        self.0
    }

    /// `mantissa * 10^-exp`, e.g. `from_parts(15, 1)` is 1.5.
    pub fn from_parts(mantissa: i64, exp: u32) -> Self {
        assert!(exp <= SCALE_DIGITS, "exponent exceeds decimal scale");
        Decimal(I256::from(mantissa) * I256::from(10i64).pow(SCALE_DIGITS - exp))
    }

    pub fn is_zero(self) -> bool {
        self.0 == I256::ZERO
    }

    pub fn is_negative(self) -> bool {
        self.0 < I256::ZERO
    }

    pub fn is_positive(self) -> bool {
        self.0 > I256::ZERO
    }

    pub fn abs(self) -> Self {
        Decimal(self.0.abs())
    }

    pub fn checked_add(self, rhs: Self) -> Option<Self> {
        self.0.checked_add(rhs.0).map(Decimal)
    }

    pub fn checked_sub(self, rhs: Self) -> Option<Self> {
        self.0.checked_sub(rhs.0).map(Decimal)
    }

    pub fn checked_mul(self, rhs: Self) -> Option<Self> {
        self.0.checked_mul(rhs.0).map(|p| Decimal(p / SCALE))
    }

    pub fn checked_div(self, rhs: Self) -> Option<Self> {
        if rhs.is_zero() {
            return None;
        }
        self.0.checked_mul(SCALE).map(|n| Decimal(n / rhs.0))
    }

    pub fn checked_mul_int(self, k: i64) -> Option<Self> {
        self.0.checked_mul(I256::from(k)).map(Decimal)
    }

    pub fn checked_div_int(self, k: i64) -> Option<Self> {
        if k == 0 {
            return None;
        }
        Some(Decimal(self.0 / I256::from(k)))
    }

    pub fn try_mul(self, rhs: Self) -> Result<Self, DecimalError> {
        self.checked_mul(rhs).ok_or(DecimalError::Overflow)
    }

    pub fn try_div(self, rhs: Self) -> Result<Self, DecimalError> {
        if rhs.is_zero() {
            return Err(DecimalError::DivisionByZero);
        }
        self.checked_div(rhs).ok_or(DecimalError::Overflow)
    }

    /// Nearest `f64`. Only used at export boundaries.
    pub fn to_f64(self) -> f64 {
        let int = self.0 / SCALE;
        let frac = self.0 % SCALE;
        int.as_f64() + frac.as_f64() / 1e18
    }

    /// Truncating conversion from `f64`; non-finite input yields `None`.
    pub fn from_f64(v: f64) -> Option<Self> {
        if !v.is_finite() || v.abs() >= 1e50 {
            return None;
        }
        let int = v.trunc();
        let frac = ((v - int) * 1e18).trunc();
        let int = format!("{int:.0}").parse::<I256>().ok()?;
        Some(Decimal(int * SCALE + I256::from(frac as i64)))
    }
}

impl Add for Decimal {
    type Output = Decimal;
    fn add(self, rhs: Self) -> Self {
        self.checked_add(rhs).expect("decimal addition overflow")
    }
}

impl AddAssign for Decimal {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl Sub for Decimal {
    type Output = Decimal;
    fn sub(self, rhs: Self) -> Self {
        self.checked_sub(rhs).expect("decimal subtraction overflow")
    }
}

impl SubAssign for Decimal {
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}

impl Neg for Decimal {
    type Output = Decimal;
    fn neg(self) -> Self {
        Decimal(-self.0)
    }
}

impl Sum for Decimal {
    fn sum<I: Iterator<Item = Decimal>>(iter: I) -> Self {
        iter.fold(Decimal::ZERO, |a, b| a + b)
    }
}

impl<'a> Sum<&'a Decimal> for Decimal {
    fn sum<I: Iterator<Item = &'a Decimal>>(iter: I) -> Self {
        iter.fold(Decimal::ZERO, |a, b| a + *b)
    }
}

impl PartialEq<i64> for Decimal {
    fn eq(&self, other: &i64) -> bool {
        *self == Decimal::from_int(*other)
    }
}

impl PartialOrd<i64> for Decimal {
    fn partial_cmp(&self, other: &i64) -> Option<Ordering> {
        Some(self.cmp(&Decimal::from_int(*other)))
    }
}

impl fmt::Display for Decimal {
    /// Canonical form: no exponent, no trailing fractional zeros, no `+`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let neg = self.0 < I256::ZERO;
        let mag = self.0.unsigned_abs();
        if neg {
            f.write_str("-")?;
        }
        let frac = if *mag.high() == 0 {
            let (lo, scale) = (*mag.low(), 10u128.pow(SCALE_DIGITS));
            write!(f, "{}", lo / scale)?;
            (lo % scale) as u64
        } else {
            let scale = SCALE.as_u256();
            write!(f, "{}", mag / scale)?;
            (mag % scale).as_u64()
        };
        if frac != 0 {
            let digits = format!("{frac:018}");
            write!(f, ".{}", digits.trim_end_matches('0'))?;
        }
        Ok(())
    }
}

impl FromStr for Decimal {
    type Err = DecimalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let invalid = || DecimalError::Invalid(s.to_string());
        let (neg, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        if int_part.is_empty() || !int_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(invalid());
        }
        if body.contains('.') && frac_part.is_empty() {
            return Err(invalid());
        }
        if !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(invalid());
        }
        if frac_part.len() > SCALE_DIGITS as usize {
            return Err(DecimalError::TooPrecise(s.to_string()));
        }
        // Up to 38 digits fit a u128, which parses far faster than I256.
        let int: I256 = if int_part.len() <= 38 {
            I256::from(int_part.parse::<u128>().map_err(|_| invalid())?)
        } else {
            int_part.parse().map_err(|_| DecimalError::Overflow)?
        };
        let mut frac = I256::ZERO;
        if !frac_part.is_empty() {
            let digits: u64 = frac_part.parse().map_err(|_| invalid())?;
            frac = I256::from(digits) * I256::from(10u64.pow(SCALE_DIGITS - frac_part.len() as u32));
        }
        let units = int
            .checked_mul(SCALE)
            .and_then(|v| v.checked_add(frac))
            .ok_or(DecimalError::Overflow)?;
        Ok(Decimal(if neg { -units } else { units }))
    }
}
