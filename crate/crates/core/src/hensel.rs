//! Roots in Q_p by Newton-polygon splitting and Hensel lifting.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::newton::newton_polygon;
use crate::poly::Poly;
use crate::rational::{big, floor_i64, format_rat, is_integer, mod_inverse, pow_p, reduce_mod, Rat};
use crate::valuation::FieldContext;

/// A p-adic number known to `known_precision` digits past its leading one.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PadicApprox {
    pub approx: Rat,
    pub known_precision: u32,
    /// The approximation is the root itself.
    pub exact: bool,
}

impl PadicApprox {
    pub fn exact(x: Rat, ctx: &FieldContext) -> Self {
        Self { approx: x, known_precision: ctx.precision(), exact: true }
    }

    /// `k` such that the true value agrees with `approx` modulo `p^k`;
    /// `None` when exact.
    pub fn abs_precision(&self, ctx: &FieldContext) -> Option<i64> {
        if self.exact {
            return None;
        }
        let v = if self.approx.is_zero() { 0 } else { ctx.val(&self.approx) };
        Some(v + self.known_precision as i64)
    }
}

/// All roots of `poly` in Q_p with multiplicities, sorted by approximation.
pub fn hensel_roots(poly: &Poly, ctx: &FieldContext) -> Result<Vec<(PadicApprox, usize)>> {
    let low = poly.low_index().ok_or(Error::ZeroPolynomial)?;
    let mut out = Vec::new();
    if low > 0 {
        out.push((PadicApprox::exact(Rat::zero(), ctx), low));
    }
    let rest = Poly::new(poly.coeffs()[low..].to_vec());
    for (h, m) in rest.squarefree_decomposition() {
        for r in squarefree_roots(&h, ctx)? {
            out.push((r, m));
        }
    }
    out.sort();
    check_separation(&out, ctx)?;
    Ok(out)
}

fn check_separation(roots: &[(PadicApprox, usize)], ctx: &FieldContext) -> Result<()> {
    for (i, (a, _)) in roots.iter().enumerate() {
        for (b, _) in &roots[i + 1..] {
            let diff = &a.approx - &b.approx;
            let floor = [a.abs_precision(ctx), b.abs_precision(ctx)].into_iter().flatten().min();
            if let Some(k) = floor {
                if diff.is_zero() || ctx.val(&diff) >= k {
                    return Err(Error::InsufficientPrecision(format!(
                        "roots {} and {} are not separated at precision {}",
                        format_rat(&a.approx),
                        format_rat(&b.approx),
                        ctx.precision()
                    )));
                }
            }
        }
    }
    Ok(())
}

fn squarefree_roots(h: &Poly, ctx: &FieldContext) -> Result<Vec<PadicApprox>> {
    let p = ctx.prime();
    let modulus = num_traits::pow(ctx.p_big(), ctx.precision() as usize);
    let mut out = Vec::new();
    for seg in newton_polygon(h.coeffs(), ctx)?.segments {
        if !is_integer(&seg.slope) {
            return Err(Error::RequiresExtension(format!(
                "{} root(s) of absolute value p^({})",
                seg.length,
                format_rat(&seg.slope)
            )));
        }
        let v = -floor_i64(&seg.slope);
        let scaled = normalize(&h.scale_var(&pow_p(p, v)), ctx);
        let units = zp_roots(&scaled, 1, 1..p, ctx)?;
        if units.len() < seg.length {
            return Err(Error::RequiresExtension(format!(
                "{} of {} root(s) of absolute value p^({}) lie outside Q_p",
                seg.length - units.len(),
                seg.length,
                format_rat(&seg.slope)
            )));
        }
        for u in units {
            let u = symmetric(u, &modulus);
            let x = pow_p(p, v) * big(u);
            let exact = h.eval(&x).is_zero();
            out.push(PadicApprox { approx: x, known_precision: ctx.precision(), exact });
        }
    }
    Ok(out)
}

/// Scale so that the minimal coefficient valuation is zero.
fn normalize(q: &Poly, ctx: &FieldContext) -> Poly {
    let m = q.coeffs().iter().filter(|c| !c.is_zero()).map(|c| ctx.val(c)).min().unwrap_or(0);
    q.scale(&pow_p(ctx.prime(), -m))
}

fn symmetric(x: BigInt, m: &BigInt) -> BigInt {
    let x = x.mod_floor(m);
    if &x * 2 > *m {
        x - m
    } else {
        x
    }
}

fn eval_mod(coeffs: &[BigInt], x: &BigInt, m: &BigInt) -> BigInt {
    let mut acc = BigInt::zero();
    for c in coeffs.iter().rev() {
        acc = (acc * x + c).mod_floor(m);
    }
    acc
}

/// Roots in Z_p, modulo `p^N`, of a p-integral polynomial with a unit
/// coefficient, restricted to the given residues mod p.
fn zp_roots(q: &Poly, depth: u32, residues: std::ops::Range<u64>, ctx: &FieldContext) -> Result<Vec<BigInt>> {
    if depth > ctx.precision() {
        return Err(Error::InsufficientPrecision("root clusters do not separate within the working precision".into()));
    }
    let p = ctx.p_big();
    let modulus = num_traits::pow(p.clone(), ctx.precision() as usize);
    let red = |poly: &Poly, m: &BigInt| -> Vec<BigInt> {
        poly.coeffs().iter().map(|c| reduce_mod(c, m).expect("p-integral coefficient")).collect()
    };
    let q_mod = red(q, &modulus);
    let dq = q.derivative();
    let dq_mod = red(&dq, &modulus);
    let mut out = Vec::new();
    for r in residues {
        let r = BigInt::from(r);
        if !eval_mod(&q_mod, &r, &p).is_zero() {
            continue;
        }
        if !eval_mod(&dq_mod, &r, &p).is_zero() {
            out.push(newton_lift(&q_mod, &dq_mod, r, &modulus));
        } else {
            let shifted = q.taylor_shift(&big(r.clone())).scale_var(&big(p.clone()));
            let sub = zp_roots(&normalize(&shifted, ctx), depth + 1, 0..ctx.prime(), ctx)?;
            out.extend(sub.into_iter().map(|w| (&r + &p * w).mod_floor(&modulus)));
        }
    }
    Ok(out)
}

fn newton_lift(q: &[BigInt], dq: &[BigInt], mut x: BigInt, m: &BigInt) -> BigInt {
    loop {
        let fx = eval_mod(q, &x, m);
        if fx.is_zero() {
            return x;
        }
        let d = eval_mod(dq, &x, m);
        let inv = mod_inverse(&d, m).expect("derivative is a unit");
        x = (x - fx * inv).mod_floor(m);
        debug_assert!(!x.is_negative());
        if m.is_one() {
            return x;
        }
    }
}
