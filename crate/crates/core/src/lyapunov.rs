//! Finite-level Lyapunov estimates and the inequalities they satisfy.

use num_traits::{Signed, Zero};
use serde_json::{json, Value};

use crate::dynamics::{equi_defect, equi_rate_bound, g1_sup, nu, pushforward_measure, DynOptions, NuLevels};
use crate::error::{Error, Result};
use crate::map::{
    derivative_bound_slack, derivative_seminorm_log, distortion, lipschitz_log_bound, map_seminorm_log, mobius_apply,
    reduction, seminorm_log, spherical_derivative_log, Mobius, RationalMap,
};
use crate::measure::{integrate, DiscreteMeasure};
use crate::point::{log_diam_infinity, BerkPoint};
use crate::poly::Poly;
use crate::rational::{format_rat, int, Rat};
use crate::sample::{random_type_i, random_type_ii, rng};
use crate::valuation::{kappa, LogValue};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
    NotApplicable,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Holds => "holds",
            Verdict::Fails => "fails",
            Verdict::Inconclusive => "inconclusive",
            Verdict::NotApplicable => "not_applicable",
        }
    }
}

fn r(x: &Rat) -> Value {
    Value::String(format_rat(x))
}

fn ok_finite(v: LogValue) -> Result<LogValue> {
    Ok(v)
}

/// `∫ log[φ']_ζ dμ(ζ)`.
pub fn est_prime(phi: &RationalMap, mu: &DiscreteMeasure) -> Result<Rat> {
    integrate(|z| ok_finite(derivative_seminorm_log(phi, z)), mu)
}

/// `∫ log[φ^#]_ζ dμ(ζ)`.
pub fn est_sharp(phi: &RationalMap, mu: &DiscreteMeasure) -> Result<Rat> {
    integrate(|z| ok_finite(spherical_derivative_log(phi, z)), mu)
}

/// `∫ log diam_∞ dμ`.
pub fn mean_log_diam(mu: &DiscreteMeasure) -> Result<Rat> {
    integrate(log_diam_infinity, mu)
}

/// `∫ (δ̂(φ, ζ) + log[φ]_ζ - log diam ζ) dμ`, the same integral as [`est_prime`]
/// assembled from the distortion.
pub fn est_prime_via_distortion(phi: &RationalMap, mu: &DiscreteMeasure) -> Result<Rat> {
    let mut acc = Rat::zero();
    for (z, w) in mu.atoms() {
        let seminorm = map_seminorm_log(phi, z).expect_finite("seminorm on H");
        let diam = log_diam_infinity(z)?.expect_finite("disc");
        acc += w * (distortion(phi, z)? + seminorm - diam);
    }
    Ok(acc)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelRow {
    pub n: usize,
    pub atoms: usize,
    pub est_prime: Rat,
    pub est_sharp: Rat,
    /// `∫ log diam dν_n`.
    pub mean_log_diam: Rat,
    /// `∫ log diam d(ν_{n-1} - ν_n)`, from level 1 on.
    pub i_n: Option<Rat>,
    pub lipschitz_ok: bool,
    pub increment_ok: Option<bool>,
    pub increment_g1_ok: Option<bool>,
    /// `|est' - est#|` within the bracket from `max(1, [T])` and `max(1, [φ])`.
    pub bracket: bool,
    /// The distortion decomposition reproduces `est_prime`.
    pub telescoping: bool,
}

impl LevelRow {
    pub fn passed(&self) -> bool {
        self.lipschitz_ok
            && self.increment_ok != Some(false)
            && self.increment_g1_ok != Some(false)
            && self.bracket
            && self.telescoping
    }

    pub fn to_json(&self) -> Value {
        json!({
            "n": self.n,
            "atoms": self.atoms,
            "est_prime": r(&self.est_prime),
            "est_sharp": r(&self.est_sharp),
            "mean_log_diam": r(&self.mean_log_diam),
            "I_n": self.i_n.as_ref().map(r),
            "lipschitz_ok": self.lipschitz_ok,
            "increment_ok": self.increment_ok,
            "increment_g1_ok": self.increment_g1_ok,
            "bracket": self.bracket,
            "telescoping": self.telescoping,
        })
    }
}

/// Constants attached to a map at the Gauss point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MapConstants {
    pub degree: usize,
    pub kappa: Rat,
    pub lipschitz_log: Rat,
    pub g1_sup: Rat,
}

pub fn map_constants(phi: &RationalMap) -> Result<MapConstants> {
    let d = phi.degree();
    if d < 2 {
        return Err(Error::InvalidMap("dynamical estimates need degree at least 2".into()));
    }
    Ok(MapConstants {
        degree: d,
        kappa: kappa(d as u64, phi.ctx()),
        lipschitz_log: lipschitz_log_bound(phi),
        g1_sup: g1_sup(phi, &BerkPoint::gauss())?,
    })
}

pub fn lyap_rows(phi: &RationalMap, levels: &NuLevels, c: &MapConstants) -> Result<Vec<LevelRow>> {
    let ctx = phi.ctx();
    let d1 = int(c.degree as i64 + 1);
    let lipschitz_floor = &c.kappa - &d1 * &c.lipschitz_log;
    let mut rows = Vec::new();
    for (n, mu) in levels.levels.iter().enumerate() {
        let ep = est_prime(phi, mu)?;
        let es = est_sharp(phi, mu)?;
        let mld = mean_log_diam(mu)?;
        let i_n = if n == 0 { None } else { Some(mean_log_diam(&levels.levels[n - 1])? - &mld) };
        let mut sup_t = Rat::zero();
        let mut sup_phi = Rat::zero();
        for (z, _) in mu.atoms() {
            sup_t = sup_t.max(seminorm_log(&Poly::x(), z, ctx).expect_finite("seminorm on H"));
            sup_phi = sup_phi.max(map_seminorm_log(phi, z).expect_finite("seminorm on H"));
        }
        let bracket = (&ep - &es).abs() <= int(2) * sup_t + int(2) * sup_phi;
        rows.push(LevelRow {
            n,
            atoms: mu.len(),
            lipschitz_ok: ep >= lipschitz_floor,
            increment_ok: i_n.as_ref().map(|i| i >= &-(&d1 * &c.lipschitz_log)),
            increment_g1_ok: i_n.as_ref().map(|i| i >= &-(&d1 * &c.g1_sup)),
            telescoping: est_prime_via_distortion(phi, mu)? == ep,
            bracket,
            est_prime: ep,
            est_sharp: es,
            mean_log_diam: mld,
            i_n,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivativeBoundReport {
    pub samples: usize,
    pub min_slack: Rat,
    pub ok: bool,
}

impl DerivativeBoundReport {
    pub fn to_json(&self) -> Value {
        json!({"samples": self.samples, "min_slack": r(&self.min_slack), "ok": self.ok})
    }
}

pub fn verify_derivative_bound(phi: &RationalMap, samples: &[BerkPoint]) -> Result<DerivativeBoundReport> {
    if samples.is_empty() {
        return Err(Error::Empty("no sample points"));
    }
    let k = kappa(phi.degree().max(2) as u64, phi.ctx());
    let mut min: Option<Rat> = None;
    for z in samples {
        let s = derivative_bound_slack(phi, z, &k)?;
        if min.as_ref().is_none_or(|m| &s < m) {
            min = Some(s);
        }
    }
    let min_slack = min.expect("nonempty");
    Ok(DerivativeBoundReport { samples: samples.len(), ok: !min_slack.is_negative(), min_slack })
}

/// Type II sample points from a seed.
pub fn sample_points(phi: &RationalMap, count: usize, seed: u64) -> Vec<BerkPoint> {
    let mut g = rng(seed);
    (0..count).map(|_| random_type_ii(&mut g, phi.ctx())).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateBound {
    pub gamma: Mobius,
    pub lipschitz_log: Rat,
    /// `κ - (d+1) log 𝓛` for the conjugate.
    pub bound: Rat,
    /// The per-level inequality for the conjugate, or the reason it was skipped.
    pub levels_ok: std::result::Result<bool, String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConjugateBoundReport {
    pub candidates: Vec<CandidateBound>,
    pub best_bound: Rat,
    pub est_prime: Rat,
    /// Cauchy tail `2 deg(φ') (2 d sup g_1 / (d - 1)) d^{-n}` at the last level.
    pub tail: Rat,
    pub certified: bool,
}

pub fn mobius_json(g: &Mobius) -> Value {
    json!([r(&g.a), r(&g.b), r(&g.c), r(&g.d)])
}

impl ConjugateBoundReport {
    pub fn passed(&self) -> bool {
        self.certified && self.candidates.iter().all(|c| c.levels_ok != Ok(false))
    }

    pub fn to_json(&self) -> Value {
        json!({
            "candidates": self.candidates.iter().map(|c| json!({
                "gamma": mobius_json(&c.gamma),
                "lipschitz_log": r(&c.lipschitz_log),
                "bound": r(&c.bound),
                "levels_ok": match &c.levels_ok { Ok(b) => json!(b), Err(e) => json!(e) },
            })).collect::<Vec<_>>(),
            "best_bound": r(&self.best_bound),
            "est_prime": r(&self.est_prime),
            "tail": r(&self.tail),
            "certified": self.certified,
        })
    }
}

/// Degree of `φ'` as a rational map.
fn derivative_degree(phi: &RationalMap) -> usize {
    let g2 = phi.denominator() * phi.denominator();
    let w = phi.wronskian();
    let h = Poly::gcd(&w, &g2);
    let (a, b) = (w.div_rem(&h).0, g2.div_rem(&h).0);
    a.deg0().max(b.deg0())
}

pub fn cauchy_tail(phi: &RationalMap, g1_sup: &Rat, n: usize) -> Rat {
    int(2 * derivative_degree(phi) as i64) * equi_rate_bound(phi.degree(), g1_sup, n) / int(2)
}

/// Equality in PGL_2, up to a common scalar.
fn same_mobius(g: &Mobius, h: &Mobius) -> bool {
    let (a, b) = ([&g.a, &g.b, &g.c, &g.d], [&h.a, &h.b, &h.c, &h.d]);
    (0..4).all(|i| (0..4).all(|j| a[i] * b[j] == a[j] * b[i]))
}

/// Candidates are the identity, `candidates` and their inverses.
pub fn verify_conjugate_bound(
    phi: &RationalMap,
    candidates: &[Mobius],
    rows: &[LevelRow],
    c: &MapConstants,
    opts: &DynOptions,
) -> Result<ConjugateBoundReport> {
    let n_max = rows.len().saturating_sub(1);
    let d1 = int(c.degree as i64 + 1);
    let mut list = vec![Mobius::identity()];
    for g in candidates.iter().flat_map(|g| [g.clone(), g.inverse()]) {
        if !list.iter().any(|h| same_mobius(h, &g)) {
            list.push(g);
        }
    }
    let mut out = Vec::new();
    for gamma in list {
        let psi = phi.conjugate(&gamma)?;
        let lip = lipschitz_log_bound(&psi);
        let bound = &c.kappa - &d1 * &lip;
        let levels_ok = if same_mobius(&gamma, &Mobius::identity()) {
            Ok(rows.iter().all(|row| row.lipschitz_ok))
        } else {
            match nu(&psi, &BerkPoint::gauss(), n_max, opts) {
                Ok(lv) => {
                    let mut ok = true;
                    for mu in &lv.levels {
                        ok &= est_prime(&psi, mu)? >= bound;
                    }
                    Ok(ok)
                }
                Err(e @ (Error::RequiresExtension(_) | Error::InsufficientPrecision(_))) => Err(e.to_string()),
                Err(e) => return Err(e),
            }
        };
        out.push(CandidateBound { gamma, lipschitz_log: lip, bound, levels_ok });
    }
    let best_bound = out.iter().map(|c| c.bound.clone()).max().expect("identity candidate");
    let est = rows.last().expect("level 0").est_prime.clone();
    let tail = cauchy_tail(phi, &c.g1_sup, n_max);
    Ok(ConjugateBoundReport {
        certified: &est + &tail >= best_bound,
        candidates: out,
        best_bound,
        est_prime: est,
        tail,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KappaBoundReport {
    /// `est_prime(n) >= κ + I_n` at every level from 1 on.
    pub per_level: bool,
    pub min_log_diam: Rat,
    pub verdict: Verdict,
}

impl KappaBoundReport {
    pub fn to_json(&self) -> Value {
        json!({
            "per_level": self.per_level,
            "min_log_diam": r(&self.min_log_diam),
            "verdict": self.verdict.as_str(),
        })
    }
}

/// Classifies the increments of `∫ log diam dν_n`: all zero or halving at
/// least geometrically counts as stabilizing; anything else is inconclusive.
pub fn verify_kappa_bound(phi: &RationalMap, rows: &[LevelRow], c: &MapConstants) -> KappaBoundReport {
    let per_level = rows.iter().skip(1).all(|row| row.est_prime >= &c.kappa + row.i_n.as_ref().expect("n >= 1"));
    let min_log_diam = rows.iter().map(|row| row.mean_log_diam.clone()).min().expect("level 0");
    let diffs: Vec<Rat> = rows.windows(2).map(|w| (&w[1].mean_log_diam - &w[0].mean_log_diam).abs()).collect();
    let stabilizing = diffs.iter().all(Zero::is_zero)
        || diffs.windows(2).all(|w| w[1] <= &w[0] / int(2) && !w[0].is_zero() || w[0].is_zero() && w[1].is_zero());
    let verdict = if !per_level {
        Verdict::Fails
    } else if !stabilizing {
        Verdict::Inconclusive
    } else {
        let last = rows.last().expect("level 0");
        let tail = cauchy_tail(phi, &c.g1_sup, last.n);
        if &last.est_prime + &tail >= c.kappa {
            Verdict::Holds
        } else {
            Verdict::Fails
        }
    };
    KappaBoundReport { per_level, min_log_diam, verdict }
}

/// Good and separable reduction forces every level to vanish.
pub fn verify_good_reduction(phi: &RationalMap, rows: &[LevelRow]) -> Verdict {
    let red = reduction(phi);
    if !(red.good_reduction && red.separable) {
        return Verdict::NotApplicable;
    }
    let at_gauss = derivative_seminorm_log(phi, &BerkPoint::gauss());
    if at_gauss == LogValue::from_int(0) && rows.iter().all(|row| row.est_prime.is_zero()) {
        Verdict::Holds
    } else {
        Verdict::Fails
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvarianceRow {
    pub n: usize,
    /// `est(φ^γ) - est(φ)`.
    pub prime_lhs: Rat,
    /// `∫ h d(φ_* ν_n - ν_n)` with `h = log[(γ^{-1})']`.
    pub prime_rhs: Rat,
    pub sharp_lhs: Rat,
    pub sharp_rhs: Rat,
    /// `ν_n(φ^γ)` from `γ^{-1}(ζ_G)` equals `(γ^{-1})_* ν_n(φ)`.
    pub equivariant: bool,
}

impl InvarianceRow {
    pub fn passed(&self) -> bool {
        self.equivariant && self.prime_lhs == self.prime_rhs && self.sharp_lhs == self.sharp_rhs
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvarianceReport {
    pub gamma: Mobius,
    pub rows: Vec<InvarianceRow>,
}

impl InvarianceReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(InvarianceRow::passed)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "gamma": mobius_json(&self.gamma),
            "rows": self.rows.iter().map(|row| json!({
                "n": row.n,
                "prime_lhs": r(&row.prime_lhs),
                "prime_rhs": r(&row.prime_rhs),
                "sharp_lhs": r(&row.sharp_lhs),
                "sharp_rhs": r(&row.sharp_rhs),
                "equivariant": row.equivariant,
            })).collect::<Vec<_>>(),
            "ok": self.passed(),
        })
    }
}

pub fn verify_invariance(
    phi: &RationalMap,
    gamma: &Mobius,
    levels: &NuLevels,
    opts: &DynOptions,
) -> Result<InvarianceReport> {
    let ctx = phi.ctx();
    let n_max = levels.levels.len() - 1;
    let inv = gamma.inverse();
    let inv_map = inv.to_map(ctx);
    let psi = phi.conjugate(gamma)?;
    let base = mobius_apply(&inv, &BerkPoint::gauss(), ctx);
    let conj_levels = nu(&psi, &base, n_max, opts)?;
    let h = |z: &BerkPoint| Ok(derivative_seminorm_log(&inv_map, z));
    let k = |z: &BerkPoint| Ok(spherical_derivative_log(&inv_map, z));
    let mut rows = Vec::new();
    for (n, mu) in levels.levels.iter().enumerate() {
        let mu_c = &conj_levels.levels[n];
        let pushed = pushforward_measure(phi, mu);
        rows.push(InvarianceRow {
            n,
            prime_lhs: est_prime(&psi, mu_c)? - est_prime(phi, mu)?,
            prime_rhs: integrate(h, &pushed)? - integrate(h, mu)?,
            sharp_lhs: est_sharp(&psi, mu_c)? - est_sharp(phi, mu)?,
            sharp_rhs: integrate(k, &pushed)? - integrate(k, mu)?,
            equivariant: mu_c == &pushforward_measure(&inv_map, mu),
        });
    }
    Ok(InvarianceReport { gamma: gamma.clone(), rows })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquiRow {
    pub n: usize,
    pub max_defect: Rat,
    pub bound: Rat,
    pub ok: bool,
}

/// `|∫ log δ(·, a)_{ζ_G} d(ν_n - ν_{n+1})|` over test points `a`, against the rate bound.
pub fn verify_equidistribution(
    phi: &RationalMap,
    levels: &NuLevels,
    g1_sup: &Rat,
    test_points: &[BerkPoint],
) -> Result<Vec<EquiRow>> {
    let mut rows = Vec::new();
    for n in 0..levels.levels.len().saturating_sub(1) {
        let mut max_defect = Rat::zero();
        for a in test_points {
            max_defect = max_defect.max(equi_defect(&levels.levels[n], &levels.levels[n + 1], a, phi.ctx())?);
        }
        let bound = equi_rate_bound(phi.degree(), g1_sup, n);
        rows.push(EquiRow { n, ok: max_defect <= bound, max_defect, bound });
    }
    Ok(rows)
}

/// Type I test points (finite and infinite) from a seed.
pub fn test_points(phi: &RationalMap, count: usize, seed: u64) -> Vec<BerkPoint> {
    let mut g = rng(seed);
    (0..count).map(|_| random_type_i(&mut g, phi.ctx())).collect()
}

#[derive(Debug, Clone)]
pub struct AnalyzeConfig {
    pub n_max: usize,
    pub conjugates: Vec<Mobius>,
    pub derivative_samples: usize,
    pub equi_points: usize,
    pub seed: u64,
    pub opts: DynOptions,
}

impl Default for AnalyzeConfig {
    fn default() -> Self {
        Self {
            n_max: 4,
            conjugates: Vec::new(),
            derivative_samples: 100,
            equi_points: 20,
            seed: 1,
            opts: DynOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LyapunovReport {
    pub map: String,
    pub prime: u64,
    pub precision: u32,
    pub constants: MapConstants,
    pub good_reduction: bool,
    pub separable: bool,
    pub reduction_degree: usize,
    pub exceptional_base: bool,
    pub rows: Vec<LevelRow>,
    pub derivative_bound: DerivativeBoundReport,
    pub conjugate_bound: ConjugateBoundReport,
    pub kappa_bound: KappaBoundReport,
    pub good_reduction_verdict: Verdict,
    pub invariance: Vec<InvarianceReport>,
    pub equidistribution: Vec<EquiRow>,
}

impl LyapunovReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(LevelRow::passed)
            && self.derivative_bound.ok
            && self.conjugate_bound.passed()
            && self.kappa_bound.verdict != Verdict::Fails
            && self.good_reduction_verdict != Verdict::Fails
            && self.invariance.iter().all(InvarianceReport::passed)
            && self.equidistribution.iter().all(|e| e.ok)
    }

    pub fn to_json(&self) -> Value {
        let c = &self.constants;
        json!({
            "map": self.map,
            "p": self.prime,
            "precision": self.precision,
            "degree": c.degree,
            "kappa": r(&c.kappa),
            "lipschitz_log": r(&c.lipschitz_log),
            "g1_sup": r(&c.g1_sup),
            "good_reduction": self.good_reduction,
            "separable": self.separable,
            "reduction_degree": self.reduction_degree,
            "exceptional_base": self.exceptional_base,
            "levels": self.rows.iter().map(LevelRow::to_json).collect::<Vec<_>>(),
            "derivative_bound": self.derivative_bound.to_json(),
            "conjugate_bound": self.conjugate_bound.to_json(),
            "kappa_bound": self.kappa_bound.to_json(),
            "good_reduction_verdict": self.good_reduction_verdict.as_str(),
            "invariance": self.invariance.iter().map(InvarianceReport::to_json).collect::<Vec<_>>(),
            "equidistribution": self.equidistribution.iter().map(|e| json!({
                "n": e.n,
                "max_defect": r(&e.max_defect),
                "bound": r(&e.bound),
                "ok": e.ok,
            })).collect::<Vec<_>>(),
            "passed": self.passed(),
        })
    }

    /// One line per level.
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("n,atoms,est_prime,est_sharp,mean_log_diam,I_n,lipschitz_ok,increment_ok,increment_g1_ok\n");
        let opt = |b: Option<bool>| b.map(|b| b.to_string()).unwrap_or_default();
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                row.n,
                row.atoms,
                format_rat(&row.est_prime),
                format_rat(&row.est_sharp),
                format_rat(&row.mean_log_diam),
                row.i_n.as_ref().map(format_rat).unwrap_or_default(),
                row.lipschitz_ok,
                opt(row.increment_ok),
                opt(row.increment_g1_ok),
            ));
        }
        out
    }
}

pub fn analyze(phi: &RationalMap, cfg: &AnalyzeConfig) -> Result<LyapunovReport> {
    let constants = map_constants(phi)?;
    let levels = nu(phi, &BerkPoint::gauss(), cfg.n_max, &cfg.opts)?;
    let rows = lyap_rows(phi, &levels, &constants)?;
    let derivative_bound = verify_derivative_bound(phi, &sample_points(phi, cfg.derivative_samples.max(1), cfg.seed))?;
    let conjugate_bound = verify_conjugate_bound(phi, &cfg.conjugates, &rows, &constants, &cfg.opts)?;
    let kappa_bound = verify_kappa_bound(phi, &rows, &constants);
    let good_reduction_verdict = verify_good_reduction(phi, &rows);
    let invariance =
        cfg.conjugates.iter().map(|g| verify_invariance(phi, g, &levels, &cfg.opts)).collect::<Result<Vec<_>>>()?;
    let points = test_points(phi, cfg.equi_points, cfg.seed.wrapping_add(1));
    let equidistribution = verify_equidistribution(phi, &levels, &constants.g1_sup, &points)?;
    let red = reduction(phi);
    Ok(LyapunovReport {
        map: phi.to_string(),
        prime: phi.ctx().prime(),
        precision: phi.ctx().precision(),
        constants,
        good_reduction: red.good_reduction,
        separable: red.separable,
        reduction_degree: red.degree,
        exceptional_base: levels.exceptional,
        rows,
        derivative_bound,
        conjugate_bound,
        kappa_bound,
        good_reduction_verdict,
        invariance,
        equidistribution,
    })
}
