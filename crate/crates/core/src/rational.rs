//! Exact rational helpers shared by every module.
//!
//! All welfare, price and probability arithmetic goes through
//! [`Rational`], an arbitrary-precision fraction, so inequalities are
//! decided exactly.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Rational = BigRational;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn from_usize(n: usize) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn pow2(exp: u32) -> Rational {
    Rational::from_integer(BigInt::one() << exp)
}

/// `1 - 1/e` rounded up at the 50th decimal digit.
///
/// The threshold sits strictly above the irrational value, so a probability
/// that clears it clears `1 - 1/e` as well.
pub fn one_minus_inv_e() -> Rational {
    let numer: BigInt = "63212055882855767840447622983853913255418886896824"
        .parse()
        .expect("constant literal");
    Rational::new(numer, BigInt::from(10u32).pow(50))
}

/// Parses `"p/q"` or an integer literal. Surrounding whitespace is ignored.
pub fn parse(text: &str) -> Option<Rational> {
    let text = text.trim();
    if text.is_empty() {
        return None;
    }
    match text.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                return None;
            }
            Some(Rational::new(n, d))
        }
        None => text.parse::<BigInt>().ok().map(Rational::from_integer),
    }
}

/// Canonical exact form: `"n"` for integers, `"p/q"` otherwise.
pub fn to_exact(value: &Rational) -> String {
    if value.is_integer() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

/// Decimal rendering rounded half away from zero. Display only.
pub fn to_decimal(value: &Rational, places: u32) -> String {
    let scale = BigInt::from(10u32).pow(places);
    let scaled = value.abs() * Rational::from_integer(scale.clone());
    let half = Rational::new(BigInt::one(), BigInt::from(2));
    let rounded = (scaled + half).floor().to_integer();
    let (whole, frac) = rounded.div_rem(&scale);
    let sign = if value.is_negative() && !rounded.is_zero() {
        "-"
    } else {
        ""
    };
    if places == 0 {
        return format!("{sign}{whole}");
    }
    let frac = frac.to_string();
    let pad = "0".repeat(places as usize - frac.len());
    format!("{sign}{whole}.{pad}{frac}")
}

pub fn max_ref<'a>(a: &'a Rational, b: &'a Rational) -> &'a Rational {
    if a >= b {
        a
    } else {
        b
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(parse("3"), Some(int(3)));
        assert_eq!(parse(" -6/4 "), Some(ratio(-3, 2)));
        assert_eq!(parse("1/0"), None);
        assert_eq!(parse("0.5"), None);
        assert_eq!(parse(""), None);
    }

    #[test]
    fn exact_and_decimal() {
        assert_eq!(to_exact(&ratio(10, 4)), "5/2");
        assert_eq!(to_exact(&int(-7)), "-7");
        assert_eq!(to_decimal(&ratio(1, 3), 12), "0.333333333333");
        assert_eq!(to_decimal(&ratio(2, 3), 12), "0.666666666667");
        assert_eq!(to_decimal(&ratio(-5, 2), 2), "-2.50");
        assert_eq!(to_decimal(&ratio(-1, 10_000), 2), "0.00");
        assert_eq!(to_decimal(&int(42), 0), "42");
    }

    /// Brackets e with the Taylor series: the partial sum through `1/n!`
    /// is a lower bound, and adding `1/(n! * n)` gives an upper bound.
    fn e_bounds(n: u32) -> (Rational, Rational) {
        let mut sum = Rational::zero();
        let mut fact = BigInt::one();
        for k in 0..=n {
            if k > 0 {
                fact *= BigInt::from(k);
            }
            sum += Rational::new(BigInt::one(), fact.clone());
        }
        let tail = Rational::new(BigInt::one(), fact * BigInt::from(n));
        (sum.clone(), sum + tail)
    }

    #[test]
    fn threshold_over_approximates_within_fifty_digits() {
        let (e_lo, e_hi) = e_bounds(60);
        let t = one_minus_inv_e();
        // t > 1 - 1/e  <=>  (1 - t) * e < 1
        assert!((Rational::one() - &t) * &e_hi < Rational::one());
        // t - (1 - 1/e) < 10^-50  <=>  (1 - t + 10^-50) * e > 1
        let eps = Rational::new(BigInt::one(), BigInt::from(10u32).pow(50));
        assert!((Rational::one() - &t + eps) * e_lo > Rational::one());
    }
}
