//! Exact rational arithmetic helpers.
//!
//! The birth-death family built by [`crate::chain::counterexample_chain`]
//! has stationary masses like `n^{-n/2}` whose numerators and denominators
//! grow to thousands of bits. `BigRational::to_f64` evaluates numerator
//! and denominator separately and returns `NaN` once both overflow, so
//! conversions here go through a bit-shifting logarithm that is exact up
//! to ~1e-15 relative error regardless of operand size.

use crate::error::{Error, Result};
use num::bigint::BigInt;
use num::rational::BigRational;
use num::{BigUint, One, Signed, ToPrimitive, Zero};

/// Shorthand constructor for small rationals.
pub fn rat(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

/// Parses `"p/q"` or a bare integer string into a rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let make_err = || Error::Parse(format!("invalid rational literal {s:?}"));
    let (num_str, den_str) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let num: BigInt = num_str.parse().map_err(|_| make_err())?;
    let den: BigInt = den_str.parse().map_err(|_| make_err())?;
    if den.is_zero() {
        return Err(Error::Parse(format!("zero denominator in {s:?}")));
    }
    Ok(BigRational::new(num, den))
}

/// Canonical string form: reduced, positive denominator, `"p/q"` with the
/// `/q` part dropped when the value is an integer.
pub fn format_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Natural log of a positive big integer, accurate to ~1e-15 relative
/// error for operands of any size.
fn ln_biguint(x: &BigUint) -> f64 {
    debug_assert!(!x.is_zero());
    let bits = x.bits();
    if bits <= 63 {
        return (x.to_u64().expect("fits in u64") as f64).ln();
    }
    // Keep the top 63 bits; the discarded tail perturbs the value by less
    // than 2^-62 relatively, far below f64 rounding of the result.
    let shift = bits - 63;
    let top = (x >> shift).to_u64().expect("fits in u64") as f64;
    top.ln() + (shift as f64) * std::f64::consts::LN_2
}

/// Natural log of a positive rational of any size.
pub fn ln_rat(r: &BigRational) -> Result<f64> {
    if !r.is_positive() {
        return Err(Error::Domain(format!(
            "logarithm of a non-positive rational {}",
            format_rational(r)
        )));
    }
    Ok(ln_biguint(r.numer().magnitude()) - ln_biguint(r.denom().magnitude()))
}

/// Rounds a rational to `f64`, falling back to `sign * exp(ln|r|)` when
/// the direct conversion overflows into `NaN` or `inf/inf`.
pub fn rat_to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    if let Some(v) = r.to_f64() {
        if v.is_finite() || r.denom().bits() < 1000 {
            return v;
        }
    }
    let ln_abs = ln_biguint(r.numer().magnitude()) - ln_biguint(r.denom().magnitude());
    let mag = ln_abs.exp();
    if r.is_negative() {
        -mag
    } else {
        mag
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use num::pow::Pow;

    #[test]
    fn parse_and_format_round_trip() {
        for s in ["7/64", "-3/8", "5", "-12"] {
            let r = parse_rational(s).unwrap();
            let back = parse_rational(&format_rational(&r)).unwrap();
            assert_eq!(r, back, "round trip changed the value of {s}");
        }
        // Canonical form reduces and normalizes the sign.
        assert_eq!(format_rational(&parse_rational("2/4").unwrap()), "1/2");
        assert_eq!(format_rational(&parse_rational("3/-6").unwrap()), "-1/2");
        assert_eq!(format_rational(&parse_rational("8/4").unwrap()), "2");
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("a/b").is_err());
        assert!(parse_rational("1.5").is_err());
    }

    #[test]
    fn ln_of_huge_rational() {
        // ln(10^400) = 400 ln 10; both operands overflow f64 separately.
        let big: BigInt = BigInt::from(10).pow(400u32);
        let r = BigRational::new(big.clone(), BigInt::one());
        assert_relative_eq!(
            ln_rat(&r).unwrap(),
            400.0 * 10f64.ln(),
            max_relative = 1e-14
        );
        let tiny = BigRational::new(BigInt::one(), big);
        assert_relative_eq!(
            ln_rat(&tiny).unwrap(),
            -400.0 * 10f64.ln(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn huge_ratio_converts_without_nan() {
        // num's to_f64 yields NaN for inf/inf; the fallback must not.
        let big: BigInt = BigInt::from(7).pow(2000u32);
        let r = BigRational::new(big.clone() * 3, big);
        let v = rat_to_f64(&r);
        assert_relative_eq!(v, 3.0, max_relative = 1e-12);
    }

    #[test]
    fn small_rationals_convert_exactly() {
        assert_eq!(rat_to_f64(&rat(1, 64)), 1.0 / 64.0);
        assert_eq!(rat_to_f64(&rat(-7, 2)), -3.5);
        assert_eq!(rat_to_f64(&rat(0, 5)), 0.0);
    }
}
