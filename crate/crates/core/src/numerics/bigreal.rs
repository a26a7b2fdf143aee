//! Arbitrary-precision real scalar.
//!
//! [`BigReal`] wraps an `astro_float::BigFloat` together with the mantissa
//! width it was created at. Binary operations run at the larger of the two
//! operand precisions and round to nearest-even, so results are a
//! deterministic function of the inputs and their precisions.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use astro_float::{BigFloat, Consts, Radix, RoundingMode};

use crate::error::{Error, Result};

/// Smallest admissible mantissa width. Widths are rounded up to whole
/// 64-bit words.
pub const MIN_PRECISION: usize = 53;

/// Mantissa width used when a caller does not ask for one.
pub const DEFAULT_PRECISION: usize = 256;

const RM: RoundingMode = RoundingMode::ToEven;

// Extra bits kept when formatting so that parsing the decimal string back at
// the original precision reproduces the original value.
const FORMAT_GUARD_BITS: usize = 16;

// The constants cache needs `&mut` access. Each caller borrows one cache from
// the pool for the duration of a single operation, so concurrent callers never
// contend for longer than a push/pop.
static CONSTS_POOL: spin::Mutex<Vec<Consts>> = spin::Mutex::new(Vec::new());

fn with_consts<R>(f: impl FnOnce(&mut Consts) -> R) -> R {
    let cached = CONSTS_POOL.lock().pop();
    let mut cc = cached.unwrap_or_else(|| Consts::new().expect("allocate constants cache"));
    let out = f(&mut cc);
    CONSTS_POOL.lock().push(cc);
    out
}

/// Arbitrary-precision real number with a declared mantissa width.
#[derive(Clone)]
pub struct BigReal {
    value: BigFloat,
    precision: usize,
}

impl BigReal {
    fn wrap(value: BigFloat, precision: usize) -> Self {
        BigReal { value, precision }
    }

    // astro-float works in whole 64-bit words and misrounds partial ones
    fn clamp_precision(p: usize) -> usize {
        p.max(MIN_PRECISION).div_ceil(64) * 64
    }

    pub fn zero(precision: usize) -> Self {
        let p = Self::clamp_precision(precision);
        Self::wrap(BigFloat::new(p), p)
    }

    pub fn one(precision: usize) -> Self {
        Self::from_i64(1, precision)
    }

    pub fn from_i64(v: i64, precision: usize) -> Self {
        let p = Self::clamp_precision(precision);
        Self::wrap(BigFloat::from_i64(v, p), p)
    }

    /// Exact conversion of a binary double.
    pub fn from_f64(v: f64, precision: usize) -> Self {
        let p = Self::clamp_precision(precision);
        Self::wrap(BigFloat::from_f64(v, p), p)
    }

    /// `num / den` rounded to `precision` bits.
    pub fn from_ratio(num: i64, den: i64, precision: usize) -> Self {
        Self::from_i64(num, precision) / Self::from_i64(den, precision)
    }

    /// `2^exp` (exact).
    pub fn pow2(exp: i64, precision: usize) -> Self {
        let mut v = Self::one(precision);
        if let Some(e) = v.value.exponent() {
            let shifted = i64::from(e) + exp;
            let shifted = i32::try_from(shifted).expect("power-of-two exponent in range");
            v.value.set_exponent(shifted);
        }
        v
    }

    /// Euler's number.
    pub fn e(precision: usize) -> Self {
        let p = Self::clamp_precision(precision);
        Self::wrap(with_consts(|cc| cc.e(p, RM)), p)
    }

    pub fn pi(precision: usize) -> Self {
        let p = Self::clamp_precision(precision);
        Self::wrap(with_consts(|cc| cc.pi(p, RM)), p)
    }

    /// Parses a decimal literal (`-12.5`, `3e-40`, ...) rounded to nearest at
    /// `precision` bits.
    pub fn parse_decimal(s: &str, precision: usize) -> Result<Self> {
        let trimmed = s.trim();
        validate_decimal(trimmed)?;
        let p = Self::clamp_precision(precision);
        let v = with_consts(|cc| BigFloat::parse(trimmed, Radix::Dec, p, RM, cc));
        if v.is_nan() {
            return Err(Error::Parse {
                position: 0,
                message: alloc::format!("cannot parse decimal {trimmed:?}"),
            });
        }
        Ok(Self::wrap(v, p))
    }

    /// Decimal rendering that parses back (at this value's precision) to the
    /// same value.
    pub fn to_decimal_string(&self) -> String {
        if self.value.is_zero() {
            return "0".to_string();
        }
        if self.value.is_nan() {
            return "NaN".to_string();
        }
        if self.value.is_inf() {
            return if self.value.is_negative() { "-inf" } else { "inf" }.to_string();
        }
        let mut wide = self.value.clone();
        // widening is exact
        let _ = wide.set_precision(Self::clamp_precision(self.precision + FORMAT_GUARD_BITS), RM);
        with_consts(|cc| wide.format(Radix::Dec, RM, cc)).unwrap_or_else(|_| "NaN".to_string())
    }

    /// Shortest decimal of the nearest double; for labels, not for data.
    pub fn to_short_string(&self) -> String {
        alloc::format!("{}", self.to_f64())
    }

    /// Nearest double (through the decimal rendering).
    pub fn to_f64(&self) -> f64 {
        if self.value.is_zero() {
            return 0.0;
        }
        self.to_decimal_string().parse::<f64>().unwrap_or(f64::NAN)
    }

    pub fn precision(&self) -> usize {
        self.precision
    }

    /// Rounds (or exactly widens) to a new precision.
    pub fn with_precision(&self, precision: usize) -> Self {
        let p = Self::clamp_precision(precision);
        let mut v = self.value.clone();
        let _ = v.set_precision(p, RM);
        Self::wrap(v, p)
    }

    pub fn is_finite(&self) -> bool {
        !self.value.is_nan() && !self.value.is_inf()
    }

    pub fn is_zero(&self) -> bool {
        self.value.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        !self.value.is_zero() && self.value.is_positive() && !self.value.is_nan()
    }

    pub fn is_negative(&self) -> bool {
        !self.value.is_zero() && self.value.is_negative() && !self.value.is_nan()
    }

    /// `-1`, `0` or `1`.
    pub fn signum(&self) -> i8 {
        if self.is_zero() {
            0
        } else if self.is_negative() {
            -1
        } else {
            1
        }
    }

    pub fn abs(&self) -> Self {
        Self::wrap(self.value.abs(), self.precision)
    }

    pub fn recip(&self) -> Self {
        Self::wrap(self.value.reciprocal(self.precision, RM), self.precision)
    }

    pub fn sqrt(&self) -> Self {
        Self::wrap(self.value.sqrt(self.precision, RM), self.precision)
    }

    pub fn square(&self) -> Self {
        self * self
    }

    pub fn ln(&self) -> Self {
        let p = self.precision;
        Self::wrap(with_consts(|cc| self.value.ln(p, RM, cc)), p)
    }

    pub fn exp(&self) -> Self {
        let p = self.precision;
        Self::wrap(with_consts(|cc| self.value.exp(p, RM, cc)), p)
    }

    pub fn cos(&self) -> Self {
        let p = self.precision;
        Self::wrap(with_consts(|cc| self.value.cos(p, RM, cc)), p)
    }

    /// `self^y` for positive `self`.
    pub fn powf(&self, y: &BigReal) -> Self {
        let p = self.precision.max(y.precision);
        Self::wrap(with_consts(|cc| self.value.pow(&y.value, p, RM, cc)), p)
    }

    /// `self^n` by repeated squaring; negative `n` goes through the reciprocal.
    pub fn powi(&self, n: i64) -> Self {
        let p = self.precision;
        let magnitude = Self::wrap(self.value.powi(n.unsigned_abs() as usize, p, RM), p);
        if n < 0 {
            magnitude.recip()
        } else {
            magnitude
        }
    }

    /// `self * 2^k` (exact).
    pub fn mul_pow2(&self, k: i64) -> Self {
        if self.is_zero() || !self.is_finite() {
            return self.clone();
        }
        let mut v = self.value.clone();
        if let Some(e) = v.exponent() {
            let shifted = i32::try_from(i64::from(e) + k).expect("exponent in range");
            v.set_exponent(shifted);
        }
        Self::wrap(v, self.precision)
    }

    /// Binary exponent `e` with `2^(e-1) <= |self| < 2^e`; `None` for zero
    /// and non-finite values.
    pub fn exponent(&self) -> Option<i64> {
        if self.is_zero() || !self.is_finite() {
            None
        } else {
            self.value.exponent().map(i64::from)
        }
    }

    /// One unit in the last place at this value's magnitude and precision.
    pub fn ulp(&self) -> Self {
        let e = self.exponent().unwrap_or(0);
        Self::pow2(e - self.precision as i64, self.precision)
    }

    pub fn max(&self, other: &Self) -> Self {
        if self >= other {
            self.clone()
        } else {
            other.clone()
        }
    }

    pub fn min(&self, other: &Self) -> Self {
        if self <= other {
            self.clone()
        } else {
            other.clone()
        }
    }

    pub fn clamp(&self, lo: &Self, hi: &Self) -> Self {
        self.max(lo).min(hi)
    }

    /// Total order for finite values; panics on NaN.
    pub fn total_cmp(&self, other: &Self) -> Ordering {
        self.partial_cmp(other).expect("comparison of NaN BigReal")
    }

    /// Whether the values are within `tol` of each other.
    pub fn approx_eq(&self, other: &Self, tol: &Self) -> bool {
        (self - other).abs() <= *tol
    }
}

fn validate_decimal(s: &str) -> Result<()> {
    let bytes = s.as_bytes();
    let err = |position: usize, message: &str| Error::Parse {
        position,
        message: message.to_string(),
    };
    let mut i = 0;
    if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
        i += 1;
    }
    let int_start = i;
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
    }
    let mut digits = i - int_start;
    if i < bytes.len() && bytes[i] == b'.' {
        i += 1;
        let frac_start = i;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        digits += i - frac_start;
    }
    if digits == 0 {
        return Err(err(i, "expected digits"));
    }
    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
        i += 1;
        if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
            i += 1;
        }
        let exp_start = i;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        if i == exp_start {
            return Err(err(i, "expected exponent digits"));
        }
    }
    if i != bytes.len() {
        return Err(err(i, "unexpected character in decimal"));
    }
    Ok(())
}

impl fmt::Debug for BigReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BigReal({}, {} bits)", self.to_decimal_string(), self.precision)
    }
}

impl fmt::Display for BigReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_decimal_string())
    }
}

impl PartialEq for BigReal {
    fn eq(&self, other: &Self) -> bool {
        self.partial_cmp(other) == Some(Ordering::Equal)
    }
}

impl PartialOrd for BigReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.value.cmp(&other.value).map(|c| c.cmp(&0))
    }
}

macro_rules! binary_op {
    ($trait:ident, $method:ident, $assign_trait:ident, $assign_method:ident, $raw:ident) => {
        impl<'a, 'b> $trait<&'b BigReal> for &'a BigReal {
            type Output = BigReal;
            fn $method(self, rhs: &'b BigReal) -> BigReal {
                let p = self.precision.max(rhs.precision);
                BigReal::wrap(self.value.$raw(&rhs.value, p, RM), p)
            }
        }
        impl $trait<BigReal> for BigReal {
            type Output = BigReal;
            fn $method(self, rhs: BigReal) -> BigReal {
                (&self).$method(&rhs)
            }
        }
        impl<'b> $trait<&'b BigReal> for BigReal {
            type Output = BigReal;
            fn $method(self, rhs: &'b BigReal) -> BigReal {
                (&self).$method(rhs)
            }
        }
        impl<'a> $trait<BigReal> for &'a BigReal {
            type Output = BigReal;
            fn $method(self, rhs: BigReal) -> BigReal {
                self.$method(&rhs)
            }
        }
        impl $assign_trait<&BigReal> for BigReal {
            fn $assign_method(&mut self, rhs: &BigReal) {
                *self = (&*self).$method(rhs);
            }
        }
        impl $assign_trait<BigReal> for BigReal {
            fn $assign_method(&mut self, rhs: BigReal) {
                *self = (&*self).$method(&rhs);
            }
        }
    };
}

binary_op!(Add, add, AddAssign, add_assign, add);
binary_op!(Sub, sub, SubAssign, sub_assign, sub);
binary_op!(Mul, mul, MulAssign, mul_assign, mul);
binary_op!(Div, div, DivAssign, div_assign, div);

impl Neg for BigReal {
    type Output = BigReal;
    fn neg(self) -> BigReal {
        BigReal::wrap(BigFloat::neg(&self.value), self.precision)
    }
}

impl Neg for &BigReal {
    type Output = BigReal;
    fn neg(self) -> BigReal {
        BigReal::wrap(BigFloat::neg(&self.value), self.precision)
    }
}

/// Sum of a slice; zero at `precision` when empty.
pub fn sum(values: &[BigReal], precision: usize) -> BigReal {
    values.iter().fold(BigReal::zero(precision), |acc, v| acc + v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> BigReal {
        BigReal::parse_decimal(s, DEFAULT_PRECISION).unwrap()
    }

    #[test]
    fn arithmetic_runs_at_max_precision() {
        let a = BigReal::from_i64(1, 64);
        let b = BigReal::from_i64(3, 256);
        let q = &a / &b;
        assert_eq!(q.precision(), 256);
        let back = &q * &BigReal::from_i64(3, 256);
        let err = (back - BigReal::one(256)).abs();
        assert!(err <= BigReal::pow2(-250, 256));
    }

    #[test]
    fn precision_is_at_least_53() {
        assert_eq!(BigReal::zero(8).precision(), 64);
        assert_eq!(BigReal::zero(65).precision(), 128);
    }

    #[test]
    fn decimal_round_trip_examples() {
        for s in ["1", "-2.5", "0.1", "3e-40", "1.4567910310469068691864323832650819749738639432213055907941723832679264545802509002574737128184484443281894018160367999355762430743401245116912132499522793768970211976726893728266666782707432902072384564600963133367494416649516400826932239"] {
            let v = d(s);
            let text = v.to_decimal_string();
            let back = BigReal::parse_decimal(&text, DEFAULT_PRECISION).unwrap();
            assert_eq!(v, back, "{s} -> {text}");
        }
        assert_eq!(BigReal::zero(256).to_decimal_string(), "0");
    }

    #[test]
    fn rejects_malformed_decimals() {
        for s in ["", "abc", "1.2.3", "1e", "--1", "0x10", "."] {
            assert!(
                matches!(BigReal::parse_decimal(s, 128), Err(Error::Parse { .. })),
                "{s}"
            );
        }
    }

    #[test]
    fn transcendental_identities() {
        let x = d("2.75");
        let tol = BigReal::pow2(-240, 256);
        assert!(x.ln().exp().approx_eq(&x, &tol));
        assert!(x.sqrt().square().approx_eq(&x, &tol));
        assert!(x.powf(&d("0.5")).approx_eq(&x.sqrt(), &tol));
        assert!(x.powi(-3).approx_eq(&(BigReal::one(256) / (&x * &x * &x)), &tol));
        let e = BigReal::e(256);
        assert!((e.to_f64() - core::f64::consts::E).abs() < 1e-15);
    }

    #[test]
    fn pow2_and_ulp() {
        assert_eq!(BigReal::pow2(3, 128), BigReal::from_i64(8, 128));
        assert_eq!(BigReal::pow2(-1, 128), d("0.5"));
        let one = BigReal::one(128);
        let next = &one + &one.ulp();
        assert!(next > one);
        assert_eq!(one.mul_pow2(-2), d("0.25"));
    }

    #[test]
    fn deterministic_results() {
        let a = d("1.234").ln();
        let b = d("1.234").ln();
        assert_eq!(a.to_decimal_string(), b.to_decimal_string());
    }
}
