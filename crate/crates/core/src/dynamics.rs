//! Preimages, pullbacks and the measures `ν_n = d^{-n} (φ^n)^* [ξ]`.

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicU64, Ordering};

use num_traits::{One, Signed, Zero};
#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hensel::{hensel_roots, PadicApprox};
use crate::map::{apply, lipschitz_log_bound, multiplicity, RationalMap};
use crate::measure::DiscreteMeasure;
use crate::newton::{newton_polygon, root_count_in_disc};
use crate::point::{hsia_log, potential_kernel, BerkPoint, Disc, ProjPoint};
use crate::poly::Poly;
use crate::rational::{ceil_i64, int, pow_p, Rat};
use crate::valuation::{FieldContext, LogValue};

pub const DEFAULT_BUDGET: u64 = 10_000;

/// How fan-out over atoms is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    /// Rayon work-stealing; same as `Sequential` without the `parallel` feature.
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

/// Deliberate corruption used to exercise the failure paths of the checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fault {
    #[default]
    None,
    /// Report one extra unit of multiplicity at the first preimage.
    Multiplicity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DynOptions {
    pub budget: u64,
    pub exec: Exec,
    pub fault: Fault,
}

impl Default for DynOptions {
    fn default() -> Self {
        Self { budget: DEFAULT_BUDGET, exec: Exec::default(), fault: Fault::None }
    }
}

static PREIMAGE_CALLS: AtomicU64 = AtomicU64::new(0);
static MULTIPLICITY_FAILURES: AtomicU64 = AtomicU64::new(0);

/// `(calls, failed multiplicity checks)` of [`preimages`] in this process.
pub fn preimage_stats() -> (u64, u64) {
    (PREIMAGE_CALLS.load(Ordering::Relaxed), MULTIPLICITY_FAILURES.load(Ordering::Relaxed))
}

/// Preimages with multiplicities summing to `d`.
pub type WeightedPreimages = Vec<(BerkPoint, usize)>;

pub(crate) fn map_collect<T, U, F>(items: &[T], exec: Exec, f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => items.par_iter().map(f).collect(),
        _ => items.iter().map(f).collect(),
    }
}

pub fn preimages(phi: &RationalMap, target: &BerkPoint) -> Result<WeightedPreimages> {
    preimages_with(phi, target, Fault::None)
}

pub fn preimages_with(phi: &RationalMap, target: &BerkPoint, fault: Fault) -> Result<WeightedPreimages> {
    PREIMAGE_CALLS.fetch_add(1, Ordering::Relaxed);
    let mut out = match target {
        BerkPoint::TypeI(y) => classical_preimages(phi, y)?,
        BerkPoint::Disc(disc) => disc_preimages(phi, disc)?,
    };
    if fault == Fault::Multiplicity {
        if let Some(first) = out.first_mut() {
            first.1 += 1;
        }
    }
    let found: usize = out.iter().map(|(_, m)| m).sum();
    if found != phi.degree() {
        MULTIPLICITY_FAILURES.fetch_add(1, Ordering::Relaxed);
        return Err(Error::MultiplicityMismatch { found: found as u64, expected: phi.degree() as u64 });
    }
    Ok(out)
}

/// Solutions of `φ(z) = y` in P^1(Q_p) with ramification indices.
fn classical_preimages(phi: &RationalMap, y: &ProjPoint) -> Result<WeightedPreimages> {
    let ctx = phi.ctx();
    let poly = match y {
        ProjPoint::Infinity => phi.denominator().clone(),
        ProjPoint::Finite(y) => phi.numerator() - &phi.denominator().scale(y),
    };
    let mut out = Vec::new();
    if poly.deg0() > 0 {
        for (r, m) in hensel_roots(&poly, ctx)? {
            if !r.exact {
                return Err(Error::InsufficientPrecision(format!(
                    "preimage of {} is only known modulo p^{}",
                    BerkPoint::TypeI(y.clone()),
                    r.abs_precision(ctx).unwrap_or_default()
                )));
            }
            out.push((BerkPoint::type_i(r.approx), m));
        }
    }
    let at_inf = phi.degree() - poly.deg0();
    if at_inf > 0 {
        out.push((BerkPoint::infinity(), at_inf));
    }
    out.sort();
    Ok(out)
}

fn split_roots(poly: &Poly, ctx: &FieldContext) -> Result<Vec<PadicApprox>> {
    if poly.deg0() == 0 {
        return Ok(Vec::new());
    }
    Ok(hensel_roots(poly, ctx)?.into_iter().map(|(r, _)| r).collect())
}

/// The first value whose fiber splits, or the last failure.
fn first_split(candidates: impl Iterator<Item = Poly>, ctx: &FieldContext) -> Result<Vec<PadicApprox>> {
    let mut last = Error::RequiresExtension("no candidate value has a split fiber".into());
    for poly in candidates {
        match split_roots(&poly, ctx) {
            Ok(r) => return Ok(r),
            Err(e @ (Error::RequiresExtension(_) | Error::InsufficientPrecision(_))) => last = e,
            Err(e) => return Err(e),
        }
    }
    Err(last)
}

/// Preimages of a disc target `D(b, s)`.
///
/// With `y1` in the target and `y2` outside it, every preimage lies on the
/// path from a root of `f - y1 g` to a root of `f - y2 g`, hence on a path
/// `[r, ∞)` from one of those roots. Along such a path the function
/// `τ -> log [φ - y1]` at `D(r, τ)` is piecewise affine and equals `s` at every
/// preimage; its solutions are checked by forward evaluation.
fn disc_preimages(phi: &RationalMap, target: &Disc) -> Result<WeightedPreimages> {
    let ctx = phi.ctx();
    let p = ctx.prime();
    let (f, g) = (phi.numerator(), phi.denominator());
    let b = target.center().clone();
    let s = target.log_radius().clone();
    let m = ceil_i64(&-s.clone());
    let reach = (3 * p).max(16);
    let fiber = |y: &Rat| f - &g.scale(y);

    let inside = (0..4i64)
        .flat_map(|j| (0..reach).map(move |k| (j, k)))
        .filter(|&(j, k)| k > 0 || j == 0)
        .map(|(j, k)| &b + pow_p(p, m + j) * int(k as i64));
    let y1s: Vec<Rat> = inside.collect();
    let mut y1 = None;
    let mut last = Error::RequiresExtension("no value in the target has a split fiber".into());
    for y in &y1s {
        match split_roots(&fiber(y), ctx) {
            Ok(r) => {
                y1 = Some((y.clone(), r));
                break;
            }
            Err(e @ (Error::RequiresExtension(_) | Error::InsufficientPrecision(_))) => last = e,
            Err(e) => return Err(e),
        }
    }
    let (y1, roots1) = y1.ok_or(last)?;

    let outside = std::iter::once(g.clone())
        .chain((1..reach).filter(|k| k % p != 0).map(|k| fiber(&(&b + pow_p(p, m - 1) * int(k as i64)))));
    let roots2 = first_split(outside, ctx)?;

    let p1 = fiber(&y1);
    let mut candidates: BTreeSet<BerkPoint> = BTreeSet::new();
    for r in roots1.iter().chain(roots2.iter()) {
        for tau in path_solutions(&p1, g, r, &s, ctx)? {
            candidates.insert(BerkPoint::disc(&r.approx, tau, ctx));
        }
    }
    let wanted = BerkPoint::Disc(target.clone());
    let mut out = Vec::new();
    for c in candidates {
        if apply(phi, &c) == wanted {
            let mult = multiplicity(phi, &c)?;
            out.push((c, mult));
        }
    }
    Ok(out)
}

/// `max_j (log|c_j| + j τ)`.
fn tmax(coeffs: &[Rat], tau: &Rat, ctx: &FieldContext) -> Rat {
    coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(j, c)| -int(ctx.val(c)) + tau * int(j as i64))
        .max()
        .expect("nonzero polynomial")
}

/// Radii `τ` with `log[p1] - log[g] = s` at `D(r, τ)`.
fn path_solutions(p1: &Poly, g: &Poly, r: &PadicApprox, s: &Rat, ctx: &FieldContext) -> Result<Vec<Rat>> {
    let ps = p1.taylor_shift(&r.approx);
    let gs = g.taylor_shift(&r.approx);
    let h = |tau: &Rat| tmax(ps.coeffs(), tau, ctx) - tmax(gs.coeffs(), tau, ctx);

    let floor = r.abs_precision(ctx).map(|k| int(-k));
    if let Some(tf) = &floor {
        let zeros = root_count_in_disc(p1, &r.approx, tf, false, ctx)?;
        let poles = root_count_in_disc(g, &r.approx, tf, false, ctx)?;
        let ht = h(tf);
        let hidden = (zeros > 0 && poles > 0) || (zeros > 0 && &ht > s) || (poles > 0 && &ht < s);
        if hidden {
            return Err(Error::InsufficientPrecision(format!(
                "a preimage may lie within p^{} of an approximate root",
                crate::rational::format_rat(tf)
            )));
        }
    }

    let mut breaks: BTreeSet<Rat> = BTreeSet::new();
    for poly in [&ps, &gs] {
        for seg in newton_polygon(poly.coeffs(), ctx)?.segments {
            breaks.insert(seg.slope);
        }
    }
    if let Some(tf) = &floor {
        breaks.retain(|b| b > tf);
        breaks.insert(tf.clone());
    }
    let low_slope = ps.low_index().unwrap_or(0) as i64 - gs.low_index().unwrap_or(0) as i64;
    let high_slope = ps.deg0() as i64 - gs.deg0() as i64;
    let pts: Vec<Rat> = if breaks.is_empty() { vec![Rat::zero()] } else { breaks.into_iter().collect() };
    let vals: Vec<Rat> = pts.iter().map(&h).collect();

    let mut out = Vec::new();
    let solve = |x0: &Rat, h0: &Rat, slope: i64| -> Option<Rat> { (slope != 0).then(|| x0 + (s - h0) / int(slope)) };
    if floor.is_none() {
        if let Some(t) = solve(&pts[0], &vals[0], low_slope) {
            if t < pts[0] {
                out.push(t);
            }
        }
    }
    for (i, (x, v)) in pts.iter().zip(&vals).enumerate() {
        if v == s {
            out.push(x.clone());
        }
        if let (Some(x1), Some(v1)) = (pts.get(i + 1), vals.get(i + 1)) {
            let (a, b) = (v - s, v1 - s);
            if (a.is_positive() && b.is_negative()) || (a.is_negative() && b.is_positive()) {
                out.push(x + (x1 - x) * (s - v) / (v1 - v));
            }
        }
    }
    let (xl, vl) = (pts.last().unwrap(), vals.last().unwrap());
    if let Some(t) = solve(xl, vl, high_slope) {
        if &t > xl {
            out.push(t);
        }
    }
    Ok(out)
}

/// `φ^* μ`, atoms processed independently and merged in sorted order.
pub fn pullback_measure(phi: &RationalMap, mu: &DiscreteMeasure, opts: &DynOptions) -> Result<DiscreteMeasure> {
    let atoms: Vec<(BerkPoint, Rat)> = mu.atoms().map(|(p, w)| (p.clone(), w.clone())).collect();
    let pre = map_collect(&atoms, opts.exec, |(p, _)| preimages_with(phi, p, opts.fault));
    let mut out = DiscreteMeasure::zero();
    for ((_, w), pre) in atoms.iter().zip(pre) {
        for (q, m) in pre? {
            out.add_atom(q, w * int(m as i64));
        }
    }
    Ok(out)
}

pub fn pushforward_measure(phi: &RationalMap, mu: &DiscreteMeasure) -> DiscreteMeasure {
    DiscreteMeasure::from_atoms(mu.atoms().map(|(p, w)| (apply(phi, p), w.clone())))
}

/// `ν_0, ..., ν_n` from a base point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NuLevels {
    pub levels: Vec<DiscreteMeasure>,
    /// The base is totally invariant, so every level is `[base]`.
    pub exceptional: bool,
}

/// `Σ_{k=0}^{n} d^k`, the worst-case number of atoms generated.
pub fn atom_bound(d: usize, n: usize) -> u128 {
    (0..=n).map(|k| (d as u128).saturating_pow(k as u32)).fold(0u128, u128::saturating_add)
}

pub fn nu(phi: &RationalMap, base: &BerkPoint, n: usize, opts: &DynOptions) -> Result<NuLevels> {
    let needed = atom_bound(phi.degree(), n);
    if needed > opts.budget as u128 {
        return Err(Error::BudgetExceeded { needed, budget: opts.budget });
    }
    if !base.in_h() {
        return Err(Error::InvalidPoint(format!("base {base} must be of type II or III")));
    }
    let inv_d = Rat::one() / int(phi.degree() as i64);
    let mut levels = vec![DiscreteMeasure::dirac(base.clone())];
    for k in 1..=n {
        let next = pullback_measure(phi, &levels[k - 1], opts)?.scale(&inv_d);
        if !next.total_mass().is_one() {
            return Err(Error::ConsistencyFailure(format!("level {k} has mass {}", next.total_mass())));
        }
        if pushforward_measure(phi, &next) != levels[k - 1] {
            return Err(Error::ConsistencyFailure(format!("pushforward of level {k} is not level {}", k - 1)));
        }
        levels.push(next);
    }
    let exceptional = n > 0 && levels[1] == levels[0];
    Ok(NuLevels { levels, exceptional })
}

/// `g_1(q, base) = (1/d) Σ m_i <q, ζ_i>_base` over the preimages `ζ_i` of `base`.
pub fn g1_values(phi: &RationalMap, base: &BerkPoint, queries: &[BerkPoint]) -> Result<Vec<Rat>> {
    let pre = preimages(phi, base)?;
    g1_from_preimages(phi, base, &pre, queries)
}

fn g1_from_preimages(
    phi: &RationalMap,
    base: &BerkPoint,
    pre: &WeightedPreimages,
    queries: &[BerkPoint],
) -> Result<Vec<Rat>> {
    let ctx = phi.ctx();
    let d = int(phi.degree() as i64);
    queries
        .iter()
        .map(|q| {
            let mut acc = Rat::zero();
            for (z, m) in pre {
                match potential_kernel(q, z, base, ctx)? {
                    LogValue::Finite(k) => acc += k * int(*m as i64),
                    _ => return Err(Error::SingularIntegrand(q.to_string())),
                }
            }
            Ok(acc / &d)
        })
        .collect()
}

/// `sup g_1`, attained at a preimage of the base.
pub fn g1_sup(phi: &RationalMap, base: &BerkPoint) -> Result<Rat> {
    let pre = preimages(phi, base)?;
    let points: Vec<BerkPoint> = pre.iter().map(|(z, _)| z.clone()).collect();
    let sup = g1_from_preimages(phi, base, &pre, &points)?.into_iter().max().expect("at least one preimage");
    if base == &BerkPoint::gauss() && sup > lipschitz_log_bound(phi) {
        return Err(Error::ConsistencyFailure(format!(
            "sup g1 = {} exceeds the resultant bound {}",
            sup,
            lipschitz_log_bound(phi)
        )));
    }
    Ok(sup)
}

/// `|∫ log δ(·, a)_{ζ_G} d(ν_n - ν_m)|`.
pub fn equi_defect(nu_n: &DiscreteMeasure, nu_m: &DiscreteMeasure, a: &BerkPoint, ctx: &FieldContext) -> Result<Rat> {
    let g = BerkPoint::gauss();
    let diff = nu_n.sub(nu_m);
    let v = crate::measure::integrate(|z| hsia_log(z, a, &g, ctx), &diff)?;
    Ok(v.abs())
}

/// `2 (2 d sup g_1 / (d - 1)) d^{-n}`.
pub fn equi_rate_bound(d: usize, g1_sup: &Rat, n: usize) -> Rat {
    let d_r = int(d as i64);
    int(4) * &d_r * g1_sup / (&d_r - int(1)) / d_r.pow(n as i32)
}
