//! Threshold scalars.
//!
//! The miners only ever compare integer counts against fractional thresholds
//! (`s_a`, `s_r`), so the scalar type is abstracted behind [`Fraction`]. Binary
//! floats work, but `0.07 * 100` is not `7.0` in `f64`; the exact rational
//! instantiation ([`Exact`]) makes the rank cutoff and the ratio test agree with
//! integer arithmetic.

use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{FromPrimitive, Num, ToPrimitive};

/// Exact rational threshold.
pub type Exact = Ratio<i64>;

/// Scalar usable as a mining threshold.
pub trait Fraction:
    Num + FromPrimitive + ToPrimitive + PartialOrd + Copy + Debug + Display + Send + Sync + 'static
{
    /// `⌈self · n⌉`, saturating at zero.
    fn ceil_mul(self, n: u64) -> u64;

    /// Parses a decimal literal such as `0.35` or a ratio such as `7/20`.
    fn parse_fraction(s: &str) -> Option<Self>;

    /// `cnt / card >= self`. `card == 0` never qualifies.
    fn admits(self, cnt: u64, card: u64) -> bool {
        if card == 0 {
            return false;
        }
        let (Some(c), Some(k)) = (Self::from_u64(cnt), Self::from_u64(card)) else {
            return false;
        };
        c / k >= self
    }

    fn in_unit_interval(self) -> bool {
        self >= Self::zero() && self <= Self::one()
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

macro_rules! impl_float_fraction {
    ($f:ty) => {
        impl Fraction for $f {
            fn ceil_mul(self, n: u64) -> u64 {
                let v = (self * n as $f).ceil();
                if v <= 0.0 {
                    0
                } else {
                    v as u64
                }
            }

            fn parse_fraction(s: &str) -> Option<Self> {
                match s.split_once('/') {
                    Some((a, b)) => {
                        let a: $f = a.trim().parse().ok()?;
                        let b: $f = b.trim().parse().ok()?;
                        (b != 0.0).then(|| a / b)
                    }
                    None => s.trim().parse().ok(),
                }
            }
        }
    };
}

impl_float_fraction!(f32);
impl_float_fraction!(f64);

impl Fraction for Exact {
    fn ceil_mul(self, n: u64) -> u64 {
        let n = i64::try_from(n).unwrap_or(i64::MAX);
        let v = (self * Ratio::from_integer(n)).ceil().to_integer();
        v.max(0) as u64
    }

    fn parse_fraction(s: &str) -> Option<Self> {
        let s = s.trim();
        if let Some((a, b)) = s.split_once('/') {
            let a: i64 = a.trim().parse().ok()?;
            let b: i64 = b.trim().parse().ok()?;
            return (b != 0).then(|| Ratio::new(a, b));
        }
        parse_decimal(s)
    }

    fn admits(self, cnt: u64, card: u64) -> bool {
        if card == 0 {
            return false;
        }
        // cnt * den >= num * card, in 128 bits
        let num = *self.numer() as i128;
        let den = *self.denom() as i128;
        cnt as i128 * den >= num * card as i128
    }
}

fn parse_decimal(s: &str) -> Option<Exact> {
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    if frac_part.len() > 15 {
        return f64::from_str(s).ok().and_then(Ratio::approximate_float);
    }
    let den = 10i64.checked_pow(frac_part.len() as u32)?;
    let i: i64 = if int_part.is_empty() { 0 } else { int_part.parse().ok()? };
    let f: i64 = if frac_part.is_empty() { 0 } else { frac_part.parse().ok()? };
    let num = i.checked_mul(den)?.checked_add(f)?;
    let r = Ratio::new(num, den);
    Some(if neg { -r } else { r })
}

/// Convenience for literals in code and tests: `frac::<Exact>(3, 10)`.
pub fn frac<F: Fraction>(num: u32, den: u32) -> F {
    let n = F::from_u32(num).unwrap_or_else(F::zero);
    let d = F::from_u32(den).unwrap_or_else(F::one);
    n / d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_ceil_has_no_float_drift() {
        let sa = Exact::parse_fraction("0.07").unwrap();
        assert_eq!(sa.ceil_mul(100), 7);
        assert_eq!(sa.ceil_mul(101), 8);
        // the binary float overshoots
        assert_eq!(0.07f64.ceil_mul(100), 8);
    }

    #[test]
    fn parse_forms() {
        assert_eq!(Exact::parse_fraction("0.35"), Some(Ratio::new(7, 20)));
        assert_eq!(Exact::parse_fraction("7/20"), Some(Ratio::new(7, 20)));
        assert_eq!(Exact::parse_fraction("1"), Some(Ratio::from_integer(1)));
        assert_eq!(Exact::parse_fraction(".5"), Some(Ratio::new(1, 2)));
        assert_eq!(Exact::parse_fraction("abc"), None);
        assert_eq!(Exact::parse_fraction("1/0"), None);
        assert_eq!(f64::parse_fraction("1/4"), Some(0.25));
    }

    #[test]
    fn admits_matches_integer_cross_multiplication() {
        for num in 0..=10u32 {
            let t: Exact = frac(num, 10);
            let tf: f64 = frac(num, 10);
            for card in 1..=12u64 {
                for cnt in 0..=card {
                    let expected = cnt * 10 >= num as u64 * card;
                    assert_eq!(t.admits(cnt, card), expected, "{cnt}/{card} vs {num}/10");
                    assert_eq!(Fraction::admits(Ratio::new(num as i64, 10), cnt, card), expected);
                    let _ = tf.admits(cnt, card);
                }
            }
        }
        assert!(!Exact::from_integer(1).admits(0, 0));
    }

    #[test]
    fn unit_interval() {
        assert!(frac::<f64>(1, 2).in_unit_interval());
        assert!(!Exact::parse_fraction("1.5").unwrap().in_unit_interval());
    }
}
