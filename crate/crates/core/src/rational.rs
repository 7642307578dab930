//! Exact rational helpers shared by every module.
//!
//! All quantities in the crate (coefficients, valuations, log-radii, measure
//! weights) are [`Rat`]s. The textual form used in files and reports is
//! `"num/den"` with a positive denominator.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rat = BigRational;

pub fn int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn frac(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn big(n: BigInt) -> Rat {
    Rat::from_integer(n)
}

/// `p^e` for a (possibly negative) integer exponent.
pub fn pow_p(p: u64, e: i64) -> Rat {
    let base = BigInt::from(p);
    let mag = num_traits::pow(base, e.unsigned_abs() as usize);
    if e >= 0 {
        Rat::from_integer(mag)
    } else {
        Rat::new(BigInt::one(), mag)
    }
}

pub fn floor_i64(x: &Rat) -> i64 {
    x.floor().to_integer().to_i64().expect("exponent out of range")
}

pub fn ceil_i64(x: &Rat) -> i64 {
    x.ceil().to_integer().to_i64().expect("exponent out of range")
}

/// Canonical `"num/den"` string.
pub fn format_rat(x: &Rat) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

pub fn parse_rat(s: &str) -> Result<Rat> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational: {s:?}"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(Rat::new(n, d))
        }
        None => {
            let n: BigInt = s.parse().map_err(|_| bad())?;
            Ok(Rat::from_integer(n))
        }
    }
}

/// Multiplicative inverse of `a` modulo `m` (which must be coprime to `a`).
pub fn mod_inverse(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    let g = a.mod_floor(m).extended_gcd(m);
    if !g.gcd.is_one() {
        return None;
    }
    Some(g.x.mod_floor(m))
}

/// Reduce a p-integral rational `x` to an integer in `[0, m)` where `m` is a
/// power of `p`; the denominator must be a unit mod `m`.
pub fn reduce_mod(x: &Rat, m: &BigInt) -> Option<BigInt> {
    let inv = mod_inverse(x.denom(), m)?;
    Some((x.numer() * inv).mod_floor(m))
}

pub fn abs(x: &Rat) -> Rat {
    x.abs()
}

pub fn is_integer(x: &Rat) -> bool {
    x.is_integer()
}

pub fn max_rat(a: Rat, b: Rat) -> Rat {
    if a >= b {
        a
    } else {
        b
    }
}

pub fn min_rat(a: Rat, b: Rat) -> Rat {
    if a <= b {
        a
    } else {
        b
    }
}

pub fn zero() -> Rat {
    Rat::zero()
}

pub fn one() -> Rat {
    Rat::one()
}
