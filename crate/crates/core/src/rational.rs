//! Exact rational helpers shared by every certification path.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Rational = BigRational;

pub fn ratio(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn integer(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `2^-k` as an exact rational.
pub fn pow2_neg(k: usize) -> Rational {
    Rational::new(BigInt::one(), BigInt::one() << k)
}

/// Smallest `m` with `2^-m <= bound`. `bound` must be positive.
pub fn log2_ceil_inv(bound: &Rational) -> usize {
    assert!(bound.is_positive(), "log2_ceil_inv needs a positive bound");
    let mut m = 0;
    while pow2_neg(m) > *bound {
        m += 1;
    }
    m
}

pub fn min_rational(a: &Rational, b: &Rational) -> Rational {
    if a <= b {
        a.clone()
    } else {
        b.clone()
    }
}

pub fn max_rational(a: &Rational, b: &Rational) -> Rational {
    if a >= b {
        a.clone()
    } else {
        b.clone()
    }
}

/// Fractional part in `[0, 1)`.
pub fn frac(x: &Rational) -> Rational {
    x - x.floor()
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed rational `{0}` (expected `p` or `p/q`)")]
pub struct ParseRationalError(pub String);

/// Parses `p`, `-p`, `p/q`. Whitespace around the token is ignored.
pub fn parse_rational(text: &str) -> Result<Rational, ParseRationalError> {
    let t = text.trim();
    let err = || ParseRationalError(t.to_string());
    let (num, den) = match t.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (t, "1"),
    };
    let n: BigInt = num.parse().map_err(|_| err())?;
    let d: BigInt = den.parse().map_err(|_| err())?;
    if d.is_zero() {
        return Err(err());
    }
    Ok(Rational::new(n, d))
}

/// Displays a rational as `p` or `p/q` (always reduced).
pub struct Display<'a>(pub &'a Rational);

impl fmt::Display for Display<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

pub fn fmt_rational(x: &Rational) -> String {
    Display(x).to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_print() {
        assert_eq!(parse_rational(" 3/6 ").unwrap(), ratio(1, 2));
        assert_eq!(parse_rational("-4").unwrap(), integer(-4));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
        assert_eq!(fmt_rational(&ratio(-2, 4)), "-1/2");
        assert_eq!(fmt_rational(&integer(7)), "7");
    }

    #[test]
    fn dyadic_helpers() {
        assert_eq!(pow2_neg(3), ratio(1, 8));
        assert_eq!(log2_ceil_inv(&ratio(1, 8)), 3);
        assert_eq!(log2_ceil_inv(&ratio(1, 7)), 3);
        assert_eq!(log2_ceil_inv(&ratio(1, 9)), 4);
        assert_eq!(frac(&ratio(-1, 4)), ratio(3, 4));
    }
}
