//! Rendering of exact rationals as fixed-point decimal strings.
//!
//! Table comparisons in this crate are equality tests at printed precision,
//! so the renderer must round exactly the way the published tables do:
//! round-half-up on the last kept digit.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

/// `r` as a decimal string with exactly `places` digits after the point.
pub fn decimals(r: &BigRational, places: usize) -> String {
    let neg = r.is_negative();
    let num = r.numer().magnitude();
    let den = r.denom().magnitude();
    let scale = BigUint::from(10u32).pow(places as u32);
    // round half up: floor((2 * num * scale + den) / (2 * den))
    let scaled = (num * &scale * 2u32 + den) / (den * 2u32);
    let ten = BigUint::from(10u32);
    let (int_part, frac_part) = (&scaled / &scale, &scaled % &scale);
    let mut frac = frac_part.to_str_radix(10);
    while frac.len() < places {
        frac.insert(0, '0');
    }
    let _ = ten;
    let sign = if neg && !scaled.is_zero() { "-" } else { "" };
    if places == 0 {
        format!("{sign}{int_part}")
    } else {
        format!("{sign}{int_part}.{frac}")
    }
}

/// Nearest f64 to `r`.
pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}
