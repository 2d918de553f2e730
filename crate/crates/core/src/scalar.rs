//! Numeric abstractions shared by the engine.
//!
//! Two scalar roles show up in this crate:
//!
//! * [`ProbFloat`] carries probabilities and Gumbel noise. It needs `ln`, so
//!   it is a floating type (`f32` or `f64`).
//! * [`Scalar`] carries search statistics: responsibility degrees, `q_env`
//!   values and their running totals. All of those are ratios of small
//!   integers, so besides `f32`/`f64` an exact rational
//!   ([`Exact`]) can be plugged in when bit-exact bookkeeping matters.

use std::fmt::Debug;

use num_rational::Ratio;
use num_traits::{Float, FromPrimitive, Num, ToPrimitive};

/// Exact rational scalar.
pub type Exact = Ratio<i64>;

/// Floating type used for categorical probabilities and Gumbel noise.
pub trait ProbFloat: Float + FromPrimitive + Debug + Send + Sync + 'static {
    /// Tolerance used when checking that a distribution sums to one.
    fn sum_tolerance(len: usize) -> Self {
        let eps = Self::epsilon() * Self::from_usize(len.max(1) * 8).unwrap();
        eps.max(Self::from_f64(1e-9).unwrap())
    }

    fn lit(x: f64) -> Self {
        Self::from_f64(x).unwrap()
    }
}

impl ProbFloat for f32 {}
impl ProbFloat for f64 {}

/// Scalar used for score vectors, visit statistics and metrics.
pub trait Scalar: Num + Clone + PartialOrd + Debug + Send + Sync + 'static {
    /// `num / den`, exact where the representation allows it.
    fn from_ratio(num: i64, den: i64) -> Self;

    fn to_f64(&self) -> f64;

    fn from_exact(r: &Exact) -> Self {
        Self::from_ratio(*r.numer(), *r.denom())
    }
}

impl Scalar for f64 {
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for f32 {
    fn from_ratio(num: i64, den: i64) -> Self {
        (num as f64 / den as f64) as f32
    }

    fn to_f64(&self) -> f64 {
        *self as f64
    }
}

impl Scalar for Exact {
    fn from_ratio(num: i64, den: i64) -> Self {
        Ratio::new(num, den)
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

/// Parse a short decimal literal ("0.33", "1", "-2.5") into an exact ratio.
pub fn exact_from_decimal(s: &str) -> Option<Exact> {
    let s = s.trim();
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if frac_part.len() > 15 {
        return None;
    }
    let int: i64 = if int_part.is_empty() { 0 } else { int_part.parse().ok()? };
    let frac: i64 = if frac_part.is_empty() { 0 } else { frac_part.parse().ok()? };
    let den = 10i64.checked_pow(frac_part.len() as u32)?;
    let num = int.checked_mul(den)?.checked_add(frac)?;
    Some(Ratio::new(if neg { -num } else { num }, den))
}
