//! Rational maps acting on Berkovich points.

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::fp;
use crate::newton::root_count_in_disc;
use crate::point::{downward_center, BerkPoint, Direction, Disc, ProjPoint};
use crate::poly::Poly;
use crate::rational::{ceil_i64, floor_i64, int, is_integer, pow_p, reduce_mod, Rat};
use crate::valuation::{FieldContext, LogValue};

/// `z -> (a z + b) / (c z + d)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mobius {
    pub a: Rat,
    pub b: Rat,
    pub c: Rat,
    pub d: Rat,
}

impl Mobius {
    pub fn new(a: Rat, b: Rat, c: Rat, d: Rat) -> Result<Self> {
        if (&a * &d - &b * &c).is_zero() {
            return Err(Error::InvalidMap("Mobius determinant is zero".into()));
        }
        Ok(Self { a, b, c, d })
    }

    pub fn identity() -> Self {
        Self { a: Rat::one(), b: Rat::zero(), c: Rat::zero(), d: Rat::one() }
    }

    pub fn translation(t: Rat) -> Self {
        Self { a: Rat::one(), b: t, c: Rat::zero(), d: Rat::one() }
    }

    pub fn scaling(k: Rat) -> Result<Self> {
        Self::new(k, Rat::zero(), Rat::zero(), Rat::one())
    }

    pub fn inversion() -> Self {
        Self { a: Rat::zero(), b: Rat::one(), c: Rat::one(), d: Rat::zero() }
    }

    pub fn inverse(&self) -> Self {
        Self { a: self.d.clone(), b: -self.b.clone(), c: -self.c.clone(), d: self.a.clone() }
    }

    /// `self ∘ other`.
    pub fn then_after(&self, other: &Mobius) -> Mobius {
        Mobius {
            a: &self.a * &other.a + &self.b * &other.c,
            b: &self.a * &other.b + &self.b * &other.d,
            c: &self.c * &other.a + &self.d * &other.c,
            d: &self.c * &other.b + &self.d * &other.d,
        }
    }

    pub fn to_map(&self, ctx: &FieldContext) -> RationalMap {
        RationalMap::new(
            Poly::new(vec![self.b.clone(), self.a.clone()]),
            Poly::new(vec![self.d.clone(), self.c.clone()]),
            ctx,
        )
        .expect("nonsingular Mobius map")
    }
}

/// `f / g` with `gcd(f, g) = 1` and `g` monic.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RationalMap {
    f: Poly,
    g: Poly,
    degree: usize,
    ctx: FieldContext,
}

impl RationalMap {
    /// Rejects common factors, zero denominators and constant maps.
    pub fn new(f: Poly, g: Poly, ctx: &FieldContext) -> Result<Self> {
        if g.is_zero() {
            return Err(Error::InvalidMap("zero denominator".into()));
        }
        if f.is_zero() {
            return Err(Error::InvalidMap("constant map".into()));
        }
        if Poly::gcd(&f, &g).deg0() > 0 {
            return Err(Error::InvalidMap(format!("numerator and denominator share a factor: {f:?} / {g:?}")));
        }
        Self::build(f, g, ctx)
    }

    /// Cancels any common factor first.
    pub fn reduced(f: Poly, g: Poly, ctx: &FieldContext) -> Result<Self> {
        if g.is_zero() {
            return Err(Error::InvalidMap("zero denominator".into()));
        }
        if f.is_zero() {
            return Err(Error::InvalidMap("constant map".into()));
        }
        let h = Poly::gcd(&f, &g);
        Self::build(f.div_rem(&h).0, g.div_rem(&h).0, ctx)
    }

    fn build(f: Poly, g: Poly, ctx: &FieldContext) -> Result<Self> {
        let lead = g.leading();
        let f = f.scale(&(Rat::one() / &lead));
        let g = g.monic();
        let degree = f.deg0().max(g.deg0());
        if degree == 0 {
            return Err(Error::InvalidMap("constant map".into()));
        }
        Ok(Self { f, g, degree, ctx: ctx.clone() })
    }

    pub fn from_ints(num: &[i64], den: &[i64], ctx: &FieldContext) -> Result<Self> {
        Self::new(Poly::from_ints(num), Poly::from_ints(den), ctx)
    }

    /// The polynomial map `c z^k`.
    pub fn monomial(c: Rat, k: usize, ctx: &FieldContext) -> Result<Self> {
        Self::new(Poly::monomial(c, k), Poly::one(), ctx)
    }

    pub fn numerator(&self) -> &Poly {
        &self.f
    }

    pub fn denominator(&self) -> &Poly {
        &self.g
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn ctx(&self) -> &FieldContext {
        &self.ctx
    }

    pub fn is_polynomial(&self) -> bool {
        self.g.deg0() == 0
    }

    /// Coefficients of the homogeneous lift `(F, G)`, both padded to length `d + 1`.
    pub fn lift(&self) -> (Vec<Rat>, Vec<Rat>) {
        let pad = |p: &Poly| (0..=self.degree).map(|i| p.coeff(i)).collect();
        (pad(&self.f), pad(&self.g))
    }

    /// Numerator of `φ' = (f'g - f g') / g^2`.
    pub fn wronskian(&self) -> Poly {
        &(&self.f.derivative() * &self.g) - &(&self.f * &self.g.derivative())
    }

    /// `1 / φ`.
    pub fn reciprocal(&self) -> RationalMap {
        Self::build(self.g.clone(), self.f.clone(), &self.ctx).expect("nonconstant")
    }

    pub fn eval(&self, z: &ProjPoint) -> ProjPoint {
        match z {
            ProjPoint::Finite(a) => {
                let den = self.g.eval(a);
                if den.is_zero() {
                    ProjPoint::Infinity
                } else {
                    ProjPoint::Finite(self.f.eval(a) / den)
                }
            }
            ProjPoint::Infinity => match self.f.deg0().cmp(&self.g.deg0()) {
                std::cmp::Ordering::Greater => ProjPoint::Infinity,
                std::cmp::Ordering::Less => ProjPoint::Finite(Rat::zero()),
                std::cmp::Ordering::Equal => ProjPoint::Finite(self.f.leading() / self.g.leading()),
            },
        }
    }

    /// `self ∘ other`, reduced.
    pub fn compose(&self, other: &RationalMap) -> Result<RationalMap> {
        let d = self.degree;
        let (u, w) = (&other.f, &other.g);
        let mut u_pows = vec![Poly::one()];
        let mut w_pows = vec![Poly::one()];
        for _ in 0..d {
            u_pows.push(&u_pows[u_pows.len() - 1] * u);
            w_pows.push(&w_pows[w_pows.len() - 1] * w);
        }
        let homog = |p: &Poly| {
            let mut acc = Poly::zero();
            for i in 0..=d {
                let c = p.coeff(i);
                if !c.is_zero() {
                    acc = &acc + &(&u_pows[i] * &w_pows[d - i]).scale(&c);
                }
            }
            acc
        };
        Self::reduced(homog(&self.f), homog(&self.g), &self.ctx)
    }

    pub fn precompose_mobius(&self, gamma: &Mobius) -> Result<RationalMap> {
        self.compose(&gamma.to_map(&self.ctx))
    }

    /// `γ^{-1} ∘ φ ∘ γ`.
    pub fn conjugate(&self, gamma: &Mobius) -> Result<RationalMap> {
        gamma.inverse().to_map(&self.ctx).compose(&self.precompose_mobius(gamma)?)
    }

    /// The `n`-th iterate.
    pub fn iterate(&self, n: usize) -> Result<RationalMap> {
        let mut acc = self.clone();
        for _ in 1..n.max(1) {
            acc = self.compose(&acc)?;
        }
        Ok(acc)
    }
}

impl std::fmt::Display for RationalMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_polynomial() {
            write!(f, "{:?}", self.f)
        } else {
            write!(f, "({:?}) / ({:?})", self.f, self.g)
        }
    }
}

/// `max_i (log|c_i| + i t)` over the coefficients, with the smallest index attaining it.
fn taylor_max(coeffs: &[Rat], t: &Rat, ctx: &FieldContext) -> (LogValue, Option<usize>) {
    let mut best = LogValue::NegInf;
    let mut arg = None;
    for (i, c) in coeffs.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let v = LogValue::Finite(-int(ctx.val(c)) + t * int(i as i64));
        if v > best {
            best = v;
            arg = Some(i);
        }
    }
    (best, arg)
}

/// `log_v [poly]_pt`.
pub fn seminorm_log(poly: &Poly, pt: &BerkPoint, ctx: &FieldContext) -> LogValue {
    match pt {
        BerkPoint::TypeI(ProjPoint::Finite(a)) => ctx.log_abs(&poly.eval(a)),
        BerkPoint::TypeI(ProjPoint::Infinity) => match poly.degree() {
            None => LogValue::NegInf,
            Some(0) => ctx.log_abs(&poly.coeff(0)),
            Some(_) => LogValue::PosInf,
        },
        BerkPoint::Disc(d) => taylor_max(poly.taylor_shift(d.center()).coeffs(), d.log_radius(), ctx).0,
    }
}

/// `log_v [φ]_pt`, with `+inf` at type I poles.
pub fn map_seminorm_log(phi: &RationalMap, pt: &BerkPoint) -> LogValue {
    let ctx = phi.ctx();
    match pt {
        BerkPoint::TypeI(z) => match phi.eval(z) {
            ProjPoint::Infinity => LogValue::PosInf,
            ProjPoint::Finite(w) => ctx.log_abs(&w),
        },
        BerkPoint::Disc(_) => seminorm_log(&phi.f, pt, ctx) - seminorm_log(&phi.g, pt, ctx),
    }
}

/// The image disc of `Disc(a, t)`: `Disc(c, L(c))` where `c` minimizes
/// `L(c) = log[f - c g] - log[g]` over the ratios of Taylor coefficients at `a`.
struct LocalImage {
    center: Rat,
    log_radius: Rat,
    /// Signed slope of the image radius as the radius at `a` decreases.
    slope: i64,
}

fn local_image(f: &Poly, g: &Poly, a: &Rat, t: &Rat, ctx: &FieldContext) -> LocalImage {
    let fs = f.taylor_shift(a);
    let gs = g.taylor_shift(a);
    let n = fs.coeffs().len().max(gs.coeffs().len());
    let (g_max, g_arg) = taylor_max(gs.coeffs(), t, ctx);
    let g_max = g_max.expect_finite("denominator seminorm");
    let g_arg = g_arg.expect("nonzero denominator") as i64;
    let mut best: Option<LocalImage> = None;
    for i in 0..n {
        let gi = gs.coeff(i);
        if gi.is_zero() {
            continue;
        }
        let c = fs.coeff(i) / gi;
        let h: Vec<Rat> = (0..n).map(|j| fs.coeff(j) - &c * gs.coeff(j)).collect();
        let (h_max, h_arg) = taylor_max(&h, t, ctx);
        let radius = h_max.expect_finite("nonconstant map") - &g_max;
        let slope = h_arg.expect("nonconstant map") as i64 - g_arg;
        let better = match &best {
            None => true,
            Some(b) => radius < b.log_radius || (radius == b.log_radius && slope > b.slope),
        };
        if better {
            best = Some(LocalImage { center: c, log_radius: radius, slope });
        }
    }
    best.expect("denominator has a nonzero coefficient")
}

pub fn apply(phi: &RationalMap, pt: &BerkPoint) -> BerkPoint {
    let ctx = phi.ctx();
    match pt {
        BerkPoint::TypeI(z) => BerkPoint::TypeI(phi.eval(z)),
        BerkPoint::Disc(d) => {
            let img = local_image(&phi.f, &phi.g, d.center(), d.log_radius(), ctx);
            BerkPoint::disc(&img.center, img.log_radius, ctx)
        }
    }
}

pub fn mobius_apply(gamma: &Mobius, pt: &BerkPoint, ctx: &FieldContext) -> BerkPoint {
    apply(&gamma.to_map(ctx), pt)
}

/// `log_v [φ']_pt`.
pub fn derivative_seminorm_log(phi: &RationalMap, pt: &BerkPoint) -> LogValue {
    let ctx = phi.ctx();
    let w = phi.wronskian();
    match pt {
        BerkPoint::Disc(_) => seminorm_log(&w, pt, ctx) - seminorm_log(&phi.g, pt, ctx).scale(&int(2)),
        BerkPoint::TypeI(ProjPoint::Finite(a)) => {
            let ga = phi.g.eval(a);
            if ga.is_zero() {
                return LogValue::PosInf;
            }
            ctx.log_abs(&w.eval(a)) - ctx.log_abs(&ga).scale(&int(2))
        }
        BerkPoint::TypeI(ProjPoint::Infinity) => {
            let g2 = &phi.g * &phi.g;
            if w.is_zero() {
                return LogValue::NegInf;
            }
            match w.deg0().cmp(&g2.deg0()) {
                std::cmp::Ordering::Less => LogValue::NegInf,
                std::cmp::Ordering::Greater => LogValue::PosInf,
                std::cmp::Ordering::Equal => ctx.log_abs(&(w.leading() / g2.leading())),
            }
        }
    }
}

fn pos(x: LogValue) -> LogValue {
    x.max(LogValue::Finite(Rat::zero()))
}

/// `log_v [φ^#]_pt`.
pub fn spherical_derivative_log(phi: &RationalMap, pt: &BerkPoint) -> LogValue {
    let ctx = phi.ctx();
    match pt {
        BerkPoint::Disc(_) => {
            derivative_seminorm_log(phi, pt) + pos(seminorm_log(&Poly::x(), pt, ctx)).scale(&int(2))
                - pos(map_seminorm_log(phi, pt)).scale(&int(2))
        }
        BerkPoint::TypeI(ProjPoint::Finite(a)) => {
            if phi.g.eval(a).is_zero() {
                return spherical_derivative_log(&phi.reciprocal(), pt);
            }
            derivative_seminorm_log(phi, pt) + pos(ctx.log_abs(a)).scale(&int(2))
                - pos(map_seminorm_log(phi, pt)).scale(&int(2))
        }
        BerkPoint::TypeI(ProjPoint::Infinity) => {
            let psi = phi.precompose_mobius(&Mobius::inversion()).expect("nonconstant");
            spherical_derivative_log(&psi, &BerkPoint::type_i(Rat::zero()))
        }
    }
}

/// `log diam(pt) + log[φ']_pt - log[φ]_pt` for `pt` in H.
pub fn distortion(phi: &RationalMap, pt: &BerkPoint) -> Result<Rat> {
    let d = pt.as_disc().ok_or_else(|| Error::InvalidPoint(format!("distortion needs a disc, got {pt}")))?;
    let v = LogValue::Finite(d.log_radius().clone()) + derivative_seminorm_log(phi, pt) - map_seminorm_log(phi, pt);
    Ok(v.expect_finite("distortion"))
}

/// Smallest coefficient valuation of the homogeneous lift.
pub fn lift_min_valuation(phi: &RationalMap) -> i64 {
    let (f, g) = phi.lift();
    f.iter().chain(g.iter()).filter(|c| !c.is_zero()).map(|c| phi.ctx().val(c)).min().expect("nonzero lift")
}

/// Resultant of the homogeneous lift, as the Sylvester determinant.
pub fn resultant(phi: &RationalMap) -> Rat {
    let d = phi.degree();
    let (f, g) = phi.lift();
    let n = 2 * d;
    let mut m = vec![vec![Rat::zero(); n]; n];
    for r in 0..d {
        for i in 0..=d {
            m[r][r + i] = f[d - i].clone();
            m[r + d][r + i] = g[d - i].clone();
        }
    }
    determinant(m)
}

fn determinant(mut m: Vec<Vec<Rat>>) -> Rat {
    let n = m.len();
    let mut det = Rat::one();
    for col in 0..n {
        let Some(piv) = (col..n).find(|&r| !m[r][col].is_zero()) else {
            return Rat::zero();
        };
        if piv != col {
            m.swap(piv, col);
            det = -det;
        }
        let pivot = m[col].clone();
        det *= &pivot[col];
        for row in m.iter_mut().skip(col + 1) {
            if row[col].is_zero() {
                continue;
            }
            let k = &row[col] / &pivot[col];
            for (x, y) in row[col..].iter_mut().zip(&pivot[col..]) {
                *x -= &k * y;
            }
        }
    }
    det
}

/// `v_p` of the resultant of the lift scaled to be primitive.
pub fn normalized_resultant_valuation(phi: &RationalMap) -> i64 {
    let res = resultant(phi);
    phi.ctx().val(&res) - 2 * phi.degree() as i64 * lift_min_valuation(phi)
}

/// `2 v_p(Res)` of the normalized lift.
pub fn lipschitz_log_bound(phi: &RationalMap) -> Rat {
    int(2 * normalized_resultant_valuation(phi))
}

/// The reduction at the Gauss point, coefficients over F_p in ascending degree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReducedMap {
    pub numerator: Vec<u64>,
    pub denominator: Vec<u64>,
    pub degree: usize,
    pub good_reduction: bool,
    pub separable: bool,
}

pub fn reduction(phi: &RationalMap) -> ReducedMap {
    let ctx = phi.ctx();
    let p = ctx.prime();
    let pb = ctx.p_big();
    let d = phi.degree();
    let scale = pow_p(p, -lift_min_valuation(phi));
    let (f, g) = phi.lift();
    let red = |cs: &[Rat]| -> Vec<u64> {
        let v: Vec<u64> = cs
            .iter()
            .map(|c| {
                let r = reduce_mod(&(c * &scale), &pb).expect("integral after normalization");
                r.try_into().expect("residue fits in u64")
            })
            .collect();
        fp::normalize(&v, p)
    };
    let (ft, gt) = (red(&f), red(&g));
    let (num, den, degree) = if ft.is_empty() || gt.is_empty() {
        // One form vanishes: the reduction is constant.
        (ft.clone(), gt.clone(), 0)
    } else {
        let h = fp::gcd(&ft, &gt, p);
        let y_order = (d - fp::degree(&ft).unwrap()).min(d - fp::degree(&gt).unwrap());
        let common = fp::degree(&h).unwrap() + y_order;
        (fp::div_exact(&ft, &h, p), fp::div_exact(&gt, &h, p), d - common)
    };
    let separable = degree > 0 && {
        let w = fp::sub(&fp::mul(&fp::derivative(&num, p), &den, p), &fp::mul(&num, &fp::derivative(&den, p), p), p);
        !w.is_empty()
    };
    ReducedMap { numerator: num, denominator: den, degree, good_reduction: degree == d, separable }
}

/// Local degree data along a tangent direction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectionalData {
    pub multiplicity: usize,
    /// The image direction at `φ(pt)`.
    pub image: Direction,
}

fn disc_of(pt: &BerkPoint) -> Result<&Disc> {
    pt.as_disc().ok_or_else(|| Error::InvalidPoint(format!("expected a point of type II or III, got {pt}")))
}

/// `Some(a)` for the direction toward `a` below the disc, `None` for the way up.
fn classify_direction(disc: &Disc, dir: &Direction, ctx: &FieldContext) -> Result<Option<Rat>> {
    match dir {
        Direction::TowardInfinity => Ok(None),
        Direction::TowardPoint(w) => {
            if w == &BerkPoint::Disc(disc.clone()) {
                return Err(Error::InvalidPoint("a direction needs a point other than its base".into()));
            }
            Ok(downward_center(disc, w, ctx))
        }
    }
}

pub fn directional_multiplicity(phi: &RationalMap, pt: &BerkPoint, dir: &Direction) -> Result<DirectionalData> {
    let ctx = phi.ctx();
    let disc = disc_of(pt)?;
    let img = match classify_direction(disc, dir, ctx)? {
        Some(a) => local_image(&phi.f, &phi.g, &a, disc.log_radius(), ctx),
        None => {
            // z = c + 1/w turns the way up at D(c, t) into the way toward 0 at D(0, -t).
            let gamma = Mobius::new(disc.center().clone(), Rat::one(), Rat::one(), Rat::zero())?;
            let psi = phi.precompose_mobius(&gamma)?;
            local_image(&psi.f, &psi.g, &Rat::zero(), &-disc.log_radius().clone(), ctx)
        }
    };
    if img.slope == 0 {
        return Err(Error::InvalidMap(format!("map is locally constant along a direction at {pt}")));
    }
    let image =
        if img.slope > 0 { Direction::TowardPoint(BerkPoint::type_i(img.center)) } else { Direction::TowardInfinity };
    Ok(DirectionalData { multiplicity: img.slope.unsigned_abs() as usize, image })
}

fn target_poly(phi: &RationalMap, y: &ProjPoint) -> Poly {
    match y {
        ProjPoint::Infinity => phi.g.clone(),
        ProjPoint::Finite(y) => &phi.f - &phi.g.scale(y),
    }
}

/// Number of solutions of `φ(z) = y` in the open ball at `disc` in the given direction.
fn ball_count(phi: &RationalMap, disc: &Disc, down: &Option<Rat>, y: &ProjPoint) -> Result<usize> {
    let ctx = phi.ctx();
    let poly = target_poly(phi, y);
    Ok(match down {
        Some(a) => root_count_in_disc(&poly, a, disc.log_radius(), true, ctx)?,
        None => phi.degree() - root_count_in_disc(&poly, disc.center(), disc.log_radius(), false, ctx)?,
    })
}

pub fn surplus_multiplicity(phi: &RationalMap, pt: &BerkPoint, dir: &Direction) -> Result<usize> {
    let ctx = phi.ctx();
    let p = ctx.prime();
    let disc = disc_of(pt)?;
    let down = classify_direction(disc, dir, ctx)?;
    let data = directional_multiplicity(phi, pt, dir)?;
    let image = apply(phi, pt);
    let img = disc_of(&image)?;
    let s = img.log_radius();
    let targets: Vec<ProjPoint> = match &data.image {
        Direction::TowardPoint(w) => {
            let c = w.center_radius().expect("finite witness").0;
            let e = floor_i64(&-s.clone());
            vec![ProjPoint::Infinity, ProjPoint::Finite(&c + pow_p(p, e)), ProjPoint::Finite(&c + pow_p(p, e - 2))]
        }
        Direction::TowardInfinity => {
            let b = img.center();
            let m = ceil_i64(&-s.clone());
            vec![
                ProjPoint::Finite(b.clone()),
                ProjPoint::Finite(b + pow_p(p, m)),
                ProjPoint::Finite(b + pow_p(p, m + 1)),
            ]
        }
    };
    let counts =
        targets.iter().map(|y| ball_count(phi, disc, &down, y).map(|c| c as u64)).collect::<Result<Vec<u64>>>()?;
    if counts.windows(2).any(|w| w[0] != w[1]) {
        return Err(Error::InconsistentSurplus(counts));
    }
    Ok(counts[0] as usize)
}

/// Centers of the residue classes at `disc` that contain Q_p points.
fn rational_classes(disc: &Disc, ctx: &FieldContext) -> Vec<Rat> {
    let t = disc.log_radius();
    if !is_integer(t) {
        return vec![disc.center().clone()];
    }
    let step = pow_p(ctx.prime(), -floor_i64(t));
    (0..ctx.prime()).map(|k| disc.center() + &step * int(k as i64)).collect()
}

/// Local degree at a point.
///
/// For a disc `ζ` with image `ξ = D(b, s)`, every direction `v` at `ζ` has
/// surplus `min(N_v(b), N_v(∞))`, and `m(ζ) = d - Σ_v s_v`. Only directions
/// containing poles contribute.
pub fn multiplicity(phi: &RationalMap, pt: &BerkPoint) -> Result<usize> {
    let ctx = phi.ctx();
    let d = phi.degree();
    let disc = match pt {
        BerkPoint::TypeI(z) => return Ok(ramification_index(phi, z)),
        BerkPoint::Disc(disc) => disc,
    };
    let image = apply(phi, pt);
    let b = ProjPoint::Finite(disc_of(&image)?.center().clone());
    let t = disc.log_radius();
    let mut surplus = ball_count(phi, disc, &None, &b)?.min(ball_count(phi, disc, &None, &ProjPoint::Infinity)?);
    let mut located = 0;
    for r in rational_classes(disc, ctx) {
        let down = Some(r);
        let poles = ball_count(phi, disc, &down, &ProjPoint::Infinity)?;
        located += poles;
        if poles > 0 {
            surplus += poles.min(ball_count(phi, disc, &down, &b)?);
        }
    }
    let poles_in_disc = root_count_in_disc(&phi.g, disc.center(), t, false, ctx)?;
    if located != poles_in_disc {
        return Err(Error::RequiresExtension(format!(
            "{} pole(s) in residue classes at {pt} without Q_p points",
            poles_in_disc - located
        )));
    }
    if surplus >= d {
        return Err(Error::MultiplicityMismatch { found: 0, expected: d as u64 });
    }
    Ok(d - surplus)
}

/// Classical ramification index at a type I point.
pub fn ramification_index(phi: &RationalMap, z: &ProjPoint) -> usize {
    match z {
        ProjPoint::Infinity => {
            let psi = phi.precompose_mobius(&Mobius::inversion()).expect("nonconstant");
            ramification_index(&psi, &ProjPoint::Finite(Rat::zero()))
        }
        ProjPoint::Finite(a) => {
            let poly = target_poly(phi, &phi.eval(z));
            poly.taylor_shift(a).low_index().expect("nonconstant")
        }
    }
}

/// Slack in the lower bound
/// `log[φ']_ζ >= κ + log diam φ(ζ) - log diam ζ`.
pub fn derivative_bound_slack(phi: &RationalMap, pt: &BerkPoint, kappa: &Rat) -> Result<Rat> {
    let d = disc_of(pt)?;
    let image = apply(phi, pt);
    let di = disc_of(&image)?;
    let lhs = derivative_seminorm_log(phi, pt).expect_finite("derivative seminorm");
    Ok(lhs - (kappa + di.log_radius() - d.log_radius()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::frac;

    fn ctx(p: u64) -> FieldContext {
        FieldContext::new(p, 20).unwrap()
    }

    fn m(num: &[i64], den: &[i64], p: u64) -> RationalMap {
        RationalMap::from_ints(num, den, &ctx(p)).unwrap()
    }

    fn disc(c: i64, t: i64, p: u64) -> BerkPoint {
        BerkPoint::disc(&int(c), int(t), &ctx(p))
    }

    fn fin(x: i64) -> LogValue {
        LogValue::from_int(x)
    }

    #[test]
    fn construction() {
        let c = ctx(3);
        assert!(RationalMap::from_ints(&[-1, 0, 1], &[-1, 1], &c).is_err());
        assert!(RationalMap::from_ints(&[1], &[1], &c).is_err());
        assert!(RationalMap::from_ints(&[1, 1], &[0], &c).is_err());
        let r = RationalMap::reduced(Poly::from_ints(&[-1, 0, 1]), Poly::from_ints(&[-2, 2]), &c).unwrap();
        assert_eq!(r.numerator(), &Poly::new(vec![frac(1, 2), frac(1, 2)]));
        assert_eq!(r.denominator(), &Poly::one());
    }

    #[test]
    fn seminorms() {
        let g = BerkPoint::gauss();
        assert_eq!(seminorm_log(&Poly::x(), &g, &ctx(3)), fin(0));
        assert_eq!(seminorm_log(&Poly::from_ints(&[-3, 0, 1]), &disc(0, -1, 3), &ctx(3)), fin(-1));
        assert_eq!(seminorm_log(&Poly::from_ints(&[2, -3, 1]), &g, &ctx(5)), fin(0));
        assert_eq!(map_seminorm_log(&m(&[0, 0, 1], &[1], 3), &g), fin(0));
        assert_eq!(map_seminorm_log(&m(&[0, 0, 2], &[1], 2), &g), fin(-1));
        assert_eq!(map_seminorm_log(&m(&[1], &[0, 1], 3), &disc(0, -1, 3)), fin(1));
        assert_eq!(map_seminorm_log(&m(&[1], &[0, 1], 3), &BerkPoint::type_i(int(0))), LogValue::PosInf);
    }

    #[test]
    fn images() {
        let g = BerkPoint::gauss();
        assert_eq!(apply(&m(&[0, 0, 1], &[1], 5), &g), g);
        assert_eq!(apply(&m(&[0, 0, 1], &[1], 5), &disc(1, -1, 5)), disc(1, -1, 5));
        assert_eq!(apply(&m(&[0, 0, 3], &[1], 3), &g), disc(0, -1, 3));
        // A disc around a pole maps to a disc around infinity's complement.
        assert_eq!(apply(&m(&[1], &[0, 1], 3), &disc(0, -2, 3)), disc(0, 2, 3));
        assert_eq!(apply(&m(&[1], &[0, 1], 3), &BerkPoint::type_i(int(0))), BerkPoint::infinity());
        assert_eq!(apply(&m(&[1, 0, 1], &[0, 1], 3), &BerkPoint::infinity()), BerkPoint::infinity());
    }

    #[test]
    fn derivatives() {
        let g = BerkPoint::gauss();
        assert_eq!(derivative_seminorm_log(&m(&[0, 0, 1], &[1], 2), &g), fin(-1));
        assert_eq!(derivative_seminorm_log(&m(&[0, 0, 0, 1], &[1], 2), &g), fin(0));
        assert_eq!(derivative_seminorm_log(&m(&[1, 0, 1], &[1], 5), &disc(0, -1, 5)), fin(-1));
        assert_eq!(spherical_derivative_log(&m(&[0, 0, 1], &[1], 3), &g), fin(0));
        assert_eq!(spherical_derivative_log(&m(&[0, 0, 1], &[1], 3), &BerkPoint::type_i(int(3))), fin(-1));
        // 1/z is a spherical isometry, including at its pole and at infinity.
        let inv = m(&[1], &[0, 1], 5);
        for pt in [BerkPoint::type_i(int(0)), BerkPoint::infinity(), BerkPoint::type_i(int(7)), disc(2, -3, 5)] {
            assert_eq!(spherical_derivative_log(&inv, &pt), fin(0), "{pt}");
        }
    }

    #[test]
    fn distortions() {
        let g = BerkPoint::gauss();
        assert_eq!(distortion(&m(&[0, 0, 1], &[1], 5), &g), Ok(int(0)));
        assert_eq!(distortion(&m(&[0, 0, 1], &[1], 2), &g), Ok(int(-1)));
        assert_eq!(distortion(&m(&[1, 1], &[1], 7), &disc(3, 4, 7)), Ok(int(0)));
        assert!(distortion(&m(&[1, 1], &[1], 7), &BerkPoint::type_i(int(0))).is_err());
    }

    #[test]
    fn conjugation() {
        let c = ctx(3);
        let phi = m(&[0, 0, 3], &[1], 3);
        let gamma = Mobius::scaling(frac(1, 3)).unwrap();
        assert_eq!(phi.conjugate(&gamma).unwrap(), m(&[0, 0, 1], &[1], 3));
        assert_eq!(phi.conjugate(&Mobius::identity()).unwrap(), phi);
        let psi = m(&[1, 2, 0, 1], &[3, 0, 1], 3);
        let gamma = Mobius::new(int(2), int(1), int(1), int(3)).unwrap();
        assert_eq!(psi.conjugate(&gamma).unwrap().conjugate(&gamma.inverse()).unwrap(), psi);
        assert_eq!(mobius_apply(&Mobius::translation(int(2)), &disc(1, -1, 3), &c), disc(3, -1, 3));
        assert_eq!(mobius_apply(&Mobius::scaling(int(3)).unwrap(), &disc(1, 0, 3), &c), disc(3, -1, 3));
        assert_eq!(mobius_apply(&Mobius::inversion(), &disc(0, 2, 3), &c), disc(0, -2, 3));
    }

    #[test]
    fn reductions() {
        let r = reduction(&m(&[0, 0, 1], &[1], 3));
        assert!(r.good_reduction && r.separable && r.degree == 2);
        let r = reduction(&m(&[0, 0, 0, 1], &[1], 3));
        assert!(r.good_reduction && !r.separable);
        let r = reduction(&m(&[0, 1, 3], &[1], 3));
        assert!(!r.good_reduction && r.degree == 1 && r.numerator == vec![0, 1]);
        let r = reduction(&m(&[0, 0, 3], &[1], 3));
        assert_eq!(r.degree, 0);
        assert!(!r.separable);
        // z + 1/z has reduction of degree 2 away from p = 2.
        assert!(reduction(&m(&[1, 0, 1], &[0, 1], 3)).good_reduction);
    }

    #[test]
    fn resultants() {
        // Oracle: Res(pX^2, Y^2) = p^2 by the Sylvester determinant.
        assert_eq!(resultant(&m(&[0, 0, 3], &[1], 3)), int(9));
        assert_eq!(lipschitz_log_bound(&m(&[0, 0, 3], &[1], 3)), int(4));
        assert_eq!(lipschitz_log_bound(&m(&[0, 0, 1], &[1], 5)), int(0));
        assert_eq!(lipschitz_log_bound(&m(&[1, 1], &[1], 5)), int(0));
        // (9X^2 + Y^2, 9Y^2) has resultant 9^4.
        let phi = RationalMap::new(Poly::new(vec![frac(1, 9), int(0), int(1)]), Poly::one(), &ctx(3)).unwrap();
        assert_eq!(normalized_resultant_valuation(&phi), 8);
    }

    #[test]
    fn directional() {
        let sq = m(&[0, 0, 1], &[1], 5);
        let g = BerkPoint::gauss();
        let toward = |x: i64| Direction::TowardPoint(BerkPoint::type_i(int(x)));
        assert_eq!(directional_multiplicity(&sq, &g, &toward(0)).unwrap().multiplicity, 2);
        assert_eq!(directional_multiplicity(&sq, &g, &toward(1)).unwrap().multiplicity, 1);
        assert_eq!(directional_multiplicity(&m(&[0, 0, 1], &[1], 2), &g, &toward(1)).unwrap().multiplicity, 2);
        let up = directional_multiplicity(&sq, &g, &Direction::TowardInfinity).unwrap();
        assert_eq!(up, DirectionalData { multiplicity: 2, image: Direction::TowardInfinity });
    }

    #[test]
    fn local_degrees() {
        let g = BerkPoint::gauss();
        assert_eq!(multiplicity(&m(&[0, 0, 1], &[1], 5), &g), Ok(2));
        assert_eq!(multiplicity(&m(&[0, 1, 1], &[1], 3), &g), Ok(2));
        assert_eq!(multiplicity(&m(&[1, 2], &[3, 1], 3), &disc(4, -2, 3)), Ok(1));
        assert_eq!(multiplicity(&m(&[0, 0, 3], &[1], 3), &g), Ok(2));
        assert_eq!(multiplicity(&m(&[1, 0, 1], &[0, 1], 2), &g), Ok(2));
        assert_eq!(multiplicity(&m(&[3, 0, 1], &[0, 1], 3), &g), Ok(1));
        assert_eq!(multiplicity(&m(&[0, 0, 1], &[1], 5), &BerkPoint::type_i(int(0))), Ok(2));
        assert_eq!(multiplicity(&m(&[0, 0, 1], &[1], 5), &BerkPoint::infinity()), Ok(2));
        assert_eq!(multiplicity(&m(&[0, 0, 1], &[1], 5), &BerkPoint::type_i(int(1))), Ok(1));
    }

    #[test]
    fn surplus() {
        let g = BerkPoint::gauss();
        let sq = m(&[0, 0, 1], &[1], 5);
        for dir in [Direction::TowardInfinity, Direction::TowardPoint(BerkPoint::type_i(int(2)))] {
            assert_eq!(surplus_multiplicity(&sq, &g, &dir), Ok(0));
        }
        let bad = m(&[0, 0, 3], &[1], 3);
        assert_eq!(surplus_multiplicity(&bad, &g, &Direction::TowardInfinity), Ok(0));
        // z + 3/z at p = 3: the residue class of 0 holds a pole and two zeros.
        let j = m(&[3, 0, 1], &[0, 1], 3);
        let dir = Direction::TowardPoint(BerkPoint::type_i(int(0)));
        assert_eq!(surplus_multiplicity(&j, &g, &dir), Ok(1));
        let mob = m(&[1, 2], &[3, 1], 3);
        assert_eq!(surplus_multiplicity(&mob, &g, &Direction::TowardInfinity), Ok(0));
    }
}
