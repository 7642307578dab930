//! p-adic valuations in log units.
//!
//! Absolute values are never materialized. Everything is stored as
//! `log_v |x|_v = -v_p(x)`, an exact rational, with `-inf` standing for
//! `log_v 0`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{format_rat, int, Rat};

/// The prime, the working p-adic precision and the base of `log_v`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FieldContext {
    prime: u64,
    precision: u32,
    log_base: u64,
}

impl FieldContext {
    pub fn new(prime: u64, precision: u32) -> Result<Self> {
        if !is_prime(prime) {
            return Err(Error::NotPrime(prime));
        }
        if precision == 0 {
            return Err(Error::ZeroPrecision);
        }
        Ok(Self { prime, precision, log_base: prime })
    }

    pub fn prime(&self) -> u64 {
        self.prime
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    /// `q_v`; equal to the prime since the residue field is `F_p`.
    pub fn log_base(&self) -> u64 {
        self.log_base
    }

    pub fn p_big(&self) -> BigInt {
        BigInt::from(self.prime)
    }

    /// `v_p` of a nonzero integer.
    pub fn val_int(&self, n: &BigInt) -> i64 {
        debug_assert!(!n.is_zero());
        let p = self.p_big();
        let mut n = n.abs();
        let mut v = 0;
        loop {
            let (q, r) = n.div_rem(&p);
            if !r.is_zero() {
                return v;
            }
            n = q;
            v += 1;
        }
    }

    /// `v_p(x)` for a nonzero rational.
    pub fn val(&self, x: &Rat) -> i64 {
        self.val_int(x.numer()) - self.val_int(x.denom())
    }

    /// `log_v |x|_v`.
    pub fn log_abs(&self, x: &Rat) -> LogValue {
        if x.is_zero() {
            LogValue::NegInf
        } else {
            LogValue::Finite(int(-self.val(x)))
        }
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// A rational extended by `-inf` and `+inf`.
///
/// Used for `log_v` values (where `-inf = log_v 0`) as well as for valuations
/// and distances that may be infinite.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum LogValue {
    NegInf,
    Finite(Rat),
    PosInf,
}

impl LogValue {
    pub fn finite(x: Rat) -> Self {
        LogValue::Finite(x)
    }

    pub fn from_int(n: i64) -> Self {
        LogValue::Finite(int(n))
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, LogValue::Finite(_))
    }

    pub fn as_finite(&self) -> Option<&Rat> {
        match self {
            LogValue::Finite(x) => Some(x),
            _ => None,
        }
    }

    pub fn into_finite(self) -> Option<Rat> {
        match self {
            LogValue::Finite(x) => Some(x),
            _ => None,
        }
    }

    /// Unwrap a value known to be finite.
    pub fn expect_finite(&self, what: &str) -> Rat {
        match self {
            LogValue::Finite(x) => x.clone(),
            other => panic!("{what}: expected a finite value, got {other}"),
        }
    }

    pub fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }

    pub fn min(self, other: Self) -> Self {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn scale(&self, k: &Rat) -> Self {
        if k.is_zero() {
            return LogValue::Finite(Rat::zero());
        }
        match self {
            LogValue::Finite(x) => LogValue::Finite(x * k),
            LogValue::NegInf if k.is_positive() => LogValue::NegInf,
            LogValue::NegInf => LogValue::PosInf,
            LogValue::PosInf if k.is_positive() => LogValue::PosInf,
            LogValue::PosInf => LogValue::NegInf,
        }
    }

    fn rank(&self) -> u8 {
        match self {
            LogValue::NegInf => 0,
            LogValue::Finite(_) => 1,
            LogValue::PosInf => 2,
        }
    }
}

impl PartialOrd for LogValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for LogValue {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (LogValue::Finite(a), LogValue::Finite(b)) => a.cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl Add for LogValue {
    type Output = LogValue;

    /// `x + (-inf) = -inf`. Adding `+inf` to `-inf` is not meaningful and panics.
    fn add(self, rhs: LogValue) -> LogValue {
        match (self, rhs) {
            (LogValue::Finite(a), LogValue::Finite(b)) => LogValue::Finite(a + b),
            (LogValue::NegInf, LogValue::PosInf) | (LogValue::PosInf, LogValue::NegInf) => {
                panic!("-inf + +inf is undefined")
            }
            (LogValue::NegInf, _) | (_, LogValue::NegInf) => LogValue::NegInf,
            _ => LogValue::PosInf,
        }
    }
}

impl Neg for LogValue {
    type Output = LogValue;
    fn neg(self) -> LogValue {
        match self {
            LogValue::NegInf => LogValue::PosInf,
            LogValue::PosInf => LogValue::NegInf,
            LogValue::Finite(x) => LogValue::Finite(-x),
        }
    }
}

impl Sub for LogValue {
    type Output = LogValue;
    fn sub(self, rhs: LogValue) -> LogValue {
        self + (-rhs)
    }
}

impl From<Rat> for LogValue {
    fn from(x: Rat) -> Self {
        LogValue::Finite(x)
    }
}

impl fmt::Display for LogValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LogValue::NegInf => write!(f, "-inf"),
            LogValue::PosInf => write!(f, "+inf"),
            LogValue::Finite(x) => write!(f, "{}", format_rat(x)),
        }
    }
}

/// `v_p(x)`, with `valuation(0) = +inf`.
pub fn valuation(x: &Rat, ctx: &FieldContext) -> LogValue {
    if x.is_zero() {
        LogValue::PosInf
    } else {
        LogValue::from_int(ctx.val(x))
    }
}

/// `min { log_v |m|_v : 1 <= m <= d } = -floor(log_p d)`.
pub fn kappa(d: u64, ctx: &FieldContext) -> Rat {
    assert!(d >= 2, "kappa needs d >= 2");
    let p = ctx.prime();
    let mut e = 0i64;
    let mut pk = p;
    while pk <= d {
        e += 1;
        pk = match pk.checked_mul(p) {
            Some(x) => x,
            None => break,
        };
    }
    int(-e)
}
