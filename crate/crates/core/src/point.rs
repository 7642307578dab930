//! Points of the Berkovich projective line and their geometry.
//!
//! A point of type II or III is the disc `D(center, p^log_radius)`. Centers
//! are reduced to a canonical representative of the disc, so structural
//! equality coincides with equality of discs. All joins are computed in the
//! tree rooted at `infinity`; joins relative to other base points go through
//! the three pairwise joins of a tripod.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::Zero;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::rational::{big, ceil_i64, floor_i64, format_rat, int, parse_rat, pow_p, reduce_mod, Rat};
use crate::valuation::{FieldContext, LogValue};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ProjPoint {
    Finite(Rat),
    Infinity,
}

/// A disc with canonical center. Field order gives the sort order used for
/// measures and reports: by radius, then by center.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Disc {
    log_radius: Rat,
    center: Rat,
}

impl Disc {
    pub fn center(&self) -> &Rat {
        &self.center
    }

    pub fn log_radius(&self) -> &Rat {
        &self.log_radius
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BerkPoint {
    TypeI(ProjPoint),
    Disc(Disc),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointType {
    I,
    II,
    III,
}

/// The representative of `D(a, p^t)` whose expansion stops above the radius,
/// reduced symmetrically so that small integers stay small.
fn canonical_center(a: &Rat, t: &Rat, ctx: &FieldContext) -> Rat {
    if a.is_zero() {
        return Rat::zero();
    }
    let m = ceil_i64(&-t);
    let v = ctx.val(a);
    if v >= m {
        return Rat::zero();
    }
    let unit = a / pow_p(ctx.prime(), v);
    let modulus = num_traits::pow(ctx.p_big(), (m - v) as usize);
    let mut r = reduce_mod(&unit, &modulus).expect("unit part");
    if &r * 2 > modulus {
        r -= &modulus;
    }
    pow_p(ctx.prime(), v) * big(r)
}

impl BerkPoint {
    pub fn gauss() -> Self {
        BerkPoint::Disc(Disc { log_radius: Rat::zero(), center: Rat::zero() })
    }

    pub fn disc(center: &Rat, log_radius: Rat, ctx: &FieldContext) -> Self {
        let center = canonical_center(center, &log_radius, ctx);
        BerkPoint::Disc(Disc { log_radius, center })
    }

    pub fn type_i(a: Rat) -> Self {
        BerkPoint::TypeI(ProjPoint::Finite(a))
    }

    pub fn infinity() -> Self {
        BerkPoint::TypeI(ProjPoint::Infinity)
    }

    pub fn is_infinity(&self) -> bool {
        matches!(self, BerkPoint::TypeI(ProjPoint::Infinity))
    }

    pub fn is_type_i(&self) -> bool {
        matches!(self, BerkPoint::TypeI(_))
    }

    /// Whether the point lies in the hyperbolic part (types II and III).
    pub fn in_h(&self) -> bool {
        matches!(self, BerkPoint::Disc(_))
    }

    pub fn as_disc(&self) -> Option<&Disc> {
        match self {
            BerkPoint::Disc(d) => Some(d),
            _ => None,
        }
    }

    /// Center and log-radius, with type I points as radius `-inf`.
    /// `None` for `infinity`.
    pub fn center_radius(&self) -> Option<(Rat, LogValue)> {
        match self {
            BerkPoint::TypeI(ProjPoint::Finite(a)) => Some((a.clone(), LogValue::NegInf)),
            BerkPoint::TypeI(ProjPoint::Infinity) => None,
            BerkPoint::Disc(d) => Some((d.center.clone(), LogValue::Finite(d.log_radius.clone()))),
        }
    }

    /// Type II when the radius lies in the value group: `Z` for Q_p-strict
    /// mode, `Q` (every rational radius) for C_p mode.
    pub fn point_type(&self, qp_strict: bool) -> PointType {
        match self {
            BerkPoint::TypeI(_) => PointType::I,
            BerkPoint::Disc(d) if !qp_strict || d.log_radius.is_integer() => PointType::II,
            BerkPoint::Disc(_) => PointType::III,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            BerkPoint::TypeI(ProjPoint::Finite(a)) => json!({"type": "I", "center": format_rat(a)}),
            BerkPoint::TypeI(ProjPoint::Infinity) => json!({"type": "I", "center": "inf"}),
            BerkPoint::Disc(d) => json!({
                "type": "disc",
                "center": format_rat(&d.center),
                "log_radius": format_rat(&d.log_radius),
            }),
        }
    }

    pub fn from_json(v: &Value, ctx: &FieldContext) -> Result<Self> {
        let field = |k: &str| {
            v.get(k).and_then(Value::as_str).ok_or_else(|| Error::Parse(format!("point needs a string field {k:?}")))
        };
        match field("type")? {
            "I" => match field("center")? {
                "inf" | "infinity" => Ok(BerkPoint::infinity()),
                s => Ok(BerkPoint::type_i(parse_rat(s)?)),
            },
            "disc" => Ok(BerkPoint::disc(&parse_rat(field("center")?)?, parse_rat(field("log_radius")?)?, ctx)),
            other => Err(Error::Parse(format!("unknown point type {other:?}"))),
        }
    }
}

impl fmt::Display for BerkPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BerkPoint::TypeI(ProjPoint::Finite(a)) => write!(f, "I({})", format_rat(a)),
            BerkPoint::TypeI(ProjPoint::Infinity) => write!(f, "I(inf)"),
            BerkPoint::Disc(d) => write!(f, "D({}, {})", format_rat(&d.center), format_rat(&d.log_radius)),
        }
    }
}

/// `log_v diam_inf(x)`: the log-radius, `-inf` for finite type I points.
pub fn log_diam_infinity(x: &BerkPoint) -> Result<LogValue> {
    x.center_radius().map(|(_, t)| t).ok_or_else(|| Error::InvalidPoint("diameter at infinity of infinity".into()))
}

/// `x ∧_∞ y`.
pub fn join_infinity(x: &BerkPoint, y: &BerkPoint, ctx: &FieldContext) -> Result<BerkPoint> {
    let ((a, t), (b, s)) = match (x.center_radius(), y.center_radius()) {
        (Some(u), Some(w)) => (u, w),
        _ => return Err(Error::InvalidPoint("join at infinity with infinity".into())),
    };
    match ctx.log_abs(&(&a - &b)).max(t).max(s) {
        LogValue::Finite(r) => Ok(BerkPoint::disc(&a, r, ctx)),
        _ => Ok(x.clone()),
    }
}

/// Whether `y` lies below `x`, i.e. `x` is on the path from `y` to `infinity`.
pub fn is_below(y: &BerkPoint, x: &BerkPoint, ctx: &FieldContext) -> bool {
    if x.is_infinity() {
        return true;
    }
    match (x, y.center_radius()) {
        (BerkPoint::Disc(dx), Some((b, s))) => {
            let t = LogValue::Finite(dx.log_radius.clone());
            s <= t && ctx.log_abs(&(&dx.center - &b)) <= t
        }
        _ => x == y,
    }
}

/// `x ∧_base y`, the point where the paths from `x` and `y` to `base` meet.
pub fn join(x: &BerkPoint, y: &BerkPoint, base: &BerkPoint, ctx: &FieldContext) -> Result<BerkPoint> {
    if base.is_infinity() {
        if x.is_infinity() || y.is_infinity() {
            return Ok(BerkPoint::infinity());
        }
        return join_infinity(x, y, ctx);
    }
    if x.is_infinity() {
        return join_infinity(y, base, ctx);
    }
    if y.is_infinity() {
        return join_infinity(x, base, ctx);
    }
    let candidates = [join_infinity(x, y, ctx)?, join_infinity(x, base, ctx)?, join_infinity(y, base, ctx)?];
    // The tripod center is the lowest of the three pairwise joins.
    Ok(candidates
        .into_iter()
        .min_by(|u, v| log_diam_infinity(u).unwrap().cmp(&log_diam_infinity(v).unwrap()))
        .expect("three candidates"))
}

/// The big metric; `+inf` as soon as a type I point is involved.
pub fn rho(x: &BerkPoint, y: &BerkPoint, ctx: &FieldContext) -> LogValue {
    match (x, y) {
        (BerkPoint::Disc(dx), BerkPoint::Disc(dy)) => {
            let j = join_infinity(x, y, ctx).expect("discs");
            let tj = j.as_disc().expect("join of discs").log_radius.clone();
            LogValue::Finite(int(2) * tj - &dx.log_radius - &dy.log_radius)
        }
        _ => LogValue::PosInf,
    }
}

/// `log_v ||x, y||` for type I points.
pub fn spherical_log_distance(x: &BerkPoint, y: &BerkPoint, ctx: &FieldContext) -> Result<LogValue> {
    let up = |a: &Rat| ctx.log_abs(a).max(LogValue::from_int(0));
    match (x, y) {
        (BerkPoint::TypeI(ProjPoint::Finite(a)), BerkPoint::TypeI(ProjPoint::Finite(b))) => {
            Ok(ctx.log_abs(&(a - b)) - up(a) - up(b))
        }
        (BerkPoint::TypeI(ProjPoint::Finite(a)), BerkPoint::TypeI(ProjPoint::Infinity))
        | (BerkPoint::TypeI(ProjPoint::Infinity), BerkPoint::TypeI(ProjPoint::Finite(a))) => Ok(-up(a)),
        (BerkPoint::TypeI(ProjPoint::Infinity), BerkPoint::TypeI(ProjPoint::Infinity)) => Ok(LogValue::NegInf),
        _ => Err(Error::InvalidPoint("spherical distance needs type I points".into())),
    }
}

/// `<x, y>_base = rho(x ∧_base y, base)`.
pub fn potential_kernel(x: &BerkPoint, y: &BerkPoint, base: &BerkPoint, ctx: &FieldContext) -> Result<LogValue> {
    if !base.in_h() {
        return Err(Error::InvalidPoint(format!("kernel base {base} is not in H")));
    }
    Ok(rho(&join(x, y, base, ctx)?, base, ctx))
}

/// `log_v δ(x, y)_anchor`.
pub fn hsia_log(x: &BerkPoint, y: &BerkPoint, anchor: &BerkPoint, ctx: &FieldContext) -> Result<LogValue> {
    if anchor.is_infinity() {
        if x.is_infinity() || y.is_infinity() {
            return Err(Error::InvalidPoint("Hsia kernel argument equals its anchor".into()));
        }
        return log_diam_infinity(&join_infinity(x, y, ctx)?);
    }
    let g = BerkPoint::gauss();
    let kxa = potential_kernel(x, anchor, &g, ctx)?;
    let kya = potential_kernel(y, anchor, &g, ctx)?;
    if !kxa.is_finite() || !kya.is_finite() {
        return Err(Error::InvalidPoint("Hsia kernel argument equals its anchor".into()));
    }
    Ok(-potential_kernel(x, y, &g, ctx)? + kxa + kya)
}

/// `log_v diam_anchor(x)`.
pub fn log_diam_rel(x: &BerkPoint, anchor: &BerkPoint, ctx: &FieldContext) -> Result<LogValue> {
    hsia_log(x, x, anchor, ctx)
}

/// An exact finite sum `Σ c_f p^f` with distinct exponents `f` in `[0, 1)`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PPowerSum {
    prime: u64,
    terms: BTreeMap<Rat, Rat>,
}

impl PPowerSum {
    pub fn new(prime: u64) -> Self {
        Self { prime, terms: BTreeMap::new() }
    }

    /// Add `coeff * p^exponent`; a `-inf` exponent adds nothing.
    pub fn add_term(&mut self, coeff: Rat, exponent: &LogValue) {
        let e = match exponent {
            LogValue::Finite(e) => e,
            LogValue::NegInf => return,
            LogValue::PosInf => panic!("infinite p-power"),
        };
        let k = floor_i64(e);
        let f = e - int(k);
        let c = coeff * pow_p(self.prime, k);
        let slot = self.terms.entry(f.clone()).or_insert_with(Rat::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&f);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Rat, &Rat)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The value when it is rational (no fractional exponents).
    pub fn as_rational(&self) -> Option<Rat> {
        match self.terms.len() {
            0 => Some(Rat::zero()),
            1 => self.terms.get(&Rat::zero()).cloned(),
            _ => None,
        }
    }

    /// Approximate value for display only.
    pub fn to_f64(&self) -> f64 {
        use num_traits::ToPrimitive;
        self.terms
            .iter()
            .map(|(f, c)| c.to_f64().unwrap_or(f64::NAN) * (self.prime as f64).powf(f.to_f64().unwrap_or(f64::NAN)))
            .sum()
    }
}

impl fmt::Display for PPowerSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(e, c)| {
                if e.is_zero() {
                    format_rat(c)
                } else {
                    format!("{}*{}^({})", format_rat(c), self.prime, format_rat(e))
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// The small metric `2 diam_G(x ∧_G y) - diam_G(x) - diam_G(y)`.
pub fn small_metric(x: &BerkPoint, y: &BerkPoint, ctx: &FieldContext) -> Result<PPowerSum> {
    let g = BerkPoint::gauss();
    let w = join(x, y, &g, ctx)?;
    let mut out = PPowerSum::new(ctx.prime());
    out.add_term(int(2), &log_diam_rel(&w, &g, ctx)?);
    out.add_term(int(-1), &log_diam_rel(x, &g, ctx)?);
    out.add_term(int(-1), &log_diam_rel(y, &g, ctx)?);
    Ok(out)
}

/// A tangent direction at a point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Direction {
    TowardPoint(BerkPoint),
    TowardInfinity,
}

impl Direction {
    pub fn witness(&self) -> BerkPoint {
        match self {
            Direction::TowardPoint(w) => w.clone(),
            Direction::TowardInfinity => BerkPoint::infinity(),
        }
    }
}

/// Whether `x` and `y` (both different from `base`) lie in the same direction at `base`.
pub fn same_direction(base: &BerkPoint, x: &BerkPoint, y: &BerkPoint, ctx: &FieldContext) -> Result<bool> {
    Ok(&join(x, y, base, ctx)? != base)
}

/// Whether the direction at the disc `base` toward `witness` points downward,
/// and if so, a Q_p-rational point inside it.
pub fn downward_center(base: &Disc, witness: &BerkPoint, ctx: &FieldContext) -> Option<Rat> {
    let b = BerkPoint::Disc(base.clone());
    if witness == &b || !is_below(witness, &b, ctx) {
        return None;
    }
    witness.center_radius().map(|(c, _)| c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::frac;

    fn ctx(p: u64) -> FieldContext {
        FieldContext::new(p, 20).unwrap()
    }

    fn d(c: i64, t: i64, p: u64) -> BerkPoint {
        BerkPoint::disc(&int(c), int(t), &ctx(p))
    }

    #[test]
    fn canonical_equality() {
        let c = ctx(5);
        assert_eq!(BerkPoint::disc(&int(7), int(-1), &c), BerkPoint::disc(&int(2), int(-1), &c));
        assert_ne!(BerkPoint::disc(&int(7), int(-2), &c), BerkPoint::disc(&int(2), int(-2), &c));
        assert_eq!(BerkPoint::disc(&int(5), int(-1), &c), d(0, -1, 5));
        assert_eq!(BerkPoint::disc(&frac(1, 2), int(0), &c), BerkPoint::gauss());
        assert_eq!(BerkPoint::disc(&int(-1), int(-3), &c).as_disc().unwrap().center(), &int(-1));
    }

    #[test]
    fn joins() {
        let c3 = ctx(3);
        let z = d(0, 1, 3);
        assert_eq!(join_infinity(&z, &z, &c3).unwrap(), z);
        assert_eq!(join_infinity(&BerkPoint::type_i(int(0)), &BerkPoint::type_i(int(3)), &c3).unwrap(), d(0, -1, 3));
        assert_eq!(join_infinity(&d(0, -1, 5), &d(5, -2, 5), &ctx(5)).unwrap(), d(0, -1, 5));
        let g = BerkPoint::gauss();
        assert_eq!(join(&BerkPoint::type_i(int(1)), &BerkPoint::type_i(int(4)), &g, &c3).unwrap(), d(1, -1, 3));
        assert!(join_infinity(&BerkPoint::infinity(), &g, &c3).is_err());
    }

    #[test]
    fn diameters_and_rho() {
        let c5 = ctx(5);
        assert_eq!(log_diam_infinity(&BerkPoint::gauss()).unwrap(), LogValue::from_int(0));
        assert_eq!(log_diam_infinity(&d(7, -2, 5)).unwrap(), LogValue::from_int(-2));
        assert_eq!(log_diam_infinity(&BerkPoint::type_i(int(5))).unwrap(), LogValue::NegInf);
        assert_eq!(rho(&BerkPoint::gauss(), &d(0, -2, 5), &c5), LogValue::from_int(2));
        assert_eq!(rho(&d(0, -1, 5), &d(5, -2, 5), &c5), LogValue::from_int(1));
        assert_eq!(rho(&BerkPoint::gauss(), &BerkPoint::type_i(int(1)), &c5), LogValue::PosInf);
    }

    #[test]
    fn spherical_distances() {
        let c3 = ctx(3);
        let i = |x| BerkPoint::type_i(x);
        assert_eq!(spherical_log_distance(&i(int(0)), &BerkPoint::infinity(), &c3).unwrap(), LogValue::from_int(0));
        assert_eq!(spherical_log_distance(&i(int(0)), &i(int(3)), &c3).unwrap(), LogValue::from_int(-1));
        assert_eq!(
            spherical_log_distance(&i(frac(1, 3)), &BerkPoint::infinity(), &c3).unwrap(),
            LogValue::from_int(-1)
        );
    }

    #[test]
    fn kernels() {
        let c3 = ctx(3);
        let g = BerkPoint::gauss();
        let i = |x| BerkPoint::type_i(x);
        assert_eq!(potential_kernel(&i(int(0)), &i(int(3)), &g, &c3).unwrap(), LogValue::from_int(1));
        assert_eq!(potential_kernel(&d(0, -2, 3), &d(0, -2, 3), &g, &c3).unwrap(), LogValue::from_int(2));
        assert_eq!(potential_kernel(&d(0, -2, 3), &d(1, -2, 3), &g, &c3).unwrap(), LogValue::from_int(0));
        assert_eq!(hsia_log(&i(int(0)), &i(int(1)), &g, &c3).unwrap(), LogValue::from_int(0));
        let inf = BerkPoint::infinity();
        assert_eq!(hsia_log(&d(0, -1, 3), &d(0, -1, 3), &inf, &c3).unwrap(), LogValue::from_int(-1));
        assert_eq!(hsia_log(&i(int(2)), &i(int(4)), &inf, &ctx(2)).unwrap(), LogValue::from_int(-1));
        assert_eq!(log_diam_rel(&d(0, -2, 3), &inf, &c3).unwrap(), LogValue::from_int(-2));
        assert_eq!(log_diam_rel(&i(int(5)), &g, &c3).unwrap(), LogValue::NegInf);
        assert_eq!(log_diam_rel(&g, &g, &c3).unwrap(), LogValue::from_int(0));
    }

    #[test]
    fn small_metric_examples() {
        let c3 = ctx(3);
        let i = |x| BerkPoint::type_i(x);
        assert!(small_metric(&d(0, -2, 3), &d(0, -2, 3), &c3).unwrap().is_zero());
        assert_eq!(small_metric(&i(int(0)), &i(int(1)), &c3).unwrap().as_rational(), Some(int(2)));
        assert_eq!(small_metric(&BerkPoint::gauss(), &d(0, -1, 3), &c3).unwrap().as_rational(), Some(frac(2, 3)));
        let half = BerkPoint::disc(&int(0), frac(-1, 2), &c3);
        let m = small_metric(&BerkPoint::gauss(), &half, &c3).unwrap();
        assert_eq!(m.as_rational(), None);
        assert_eq!(m.to_string(), "1/1 + -1/3*3^(1/2)");
    }

    #[test]
    fn json_round_trip() {
        let c = ctx(7);
        for pt in [BerkPoint::gauss(), d(3, -2, 7), BerkPoint::type_i(frac(-2, 7)), BerkPoint::infinity()] {
            assert_eq!(BerkPoint::from_json(&pt.to_json(), &c).unwrap(), pt);
        }
    }
}
