//! Exact rational-to-decimal rendering.
//!
//! Conversions round half away from zero and are computed with integer long
//! division, so the printed value is within half an ulp of the exact rational.

use num::{BigInt, BigRational, Signed, Zero};

/// Renders `r` with up to `frac_digits` fraction digits, trailing zeros
/// trimmed.
pub fn decimal_fixed(r: &BigRational, frac_digits: usize) -> String {
    let negative = r.is_negative();
    let a = r.abs();
    let scale = BigInt::from(10u8).pow(frac_digits as u32);
    // Round half away from zero: floor((n * scale * 2 + d) / (2 d)).
    let scaled = (a.numer() * &scale * 2u8 + a.denom()) / (a.denom() * 2u8);
    let int_part = &scaled / &scale;
    let frac_part = &scaled % &scale;
    let mut out = String::new();
    if negative && !scaled.is_zero() {
        out.push('-');
    }
    out.push_str(&int_part.to_string());
    if !frac_part.is_zero() {
        let mut digits = format!("{:0>width$}", frac_part.to_string(), width = frac_digits);
        while digits.ends_with('0') {
            digits.pop();
        }
        out.push('.');
        out.push_str(&digits);
    }
    out
}

/// Renders `r` with at most `sig` significant digits.
pub fn decimal_significant(r: &BigRational, sig: usize) -> String {
    if r.is_zero() {
        return "0".into();
    }
    let a = r.abs();
    // e is the unique integer with 10^(e-1) <= |r| < 10^e.
    let one = BigRational::from_integer(BigInt::from(1));
    let ten = BigRational::from_integer(BigInt::from(10));
    let mut e: i64 = 0;
    if a >= one {
        let mut bound = one;
        while a >= bound {
            bound *= &ten;
            e += 1;
        }
    } else {
        let mut bound = &one / &ten;
        while a < bound {
            bound /= &ten;
            e -= 1;
        }
    }
    let frac_digits = (sig as i64 - e).max(0) as usize;
    decimal_fixed(r, frac_digits)
}
