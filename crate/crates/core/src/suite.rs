//! Property suites over a corpus of maps and over random finite trees.

use num_traits::{One, Zero};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::corpus::{generators, Corpus};
use crate::dynamics::{map_collect, DynOptions};
use crate::error::Result;
use crate::lyapunov::{analyze, AnalyzeConfig, LyapunovReport};
use crate::map::{lipschitz_log_bound, RationalMap};
use crate::measure::DiscreteMeasure;
use crate::point::{log_diam_infinity, rho, spherical_log_distance, BerkPoint};
use crate::rational::{format_rat, frac, int};
use crate::sample::{random_disc, random_type_i, rng};
use crate::tree::{self_adjointness_check, CpaFunction, FiniteTree};
use crate::valuation::{FieldContext, LogValue};
use rand::Rng;

#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub n_max: usize,
    pub derivative_samples: usize,
    pub lipschitz_pairs: usize,
    pub equi_points: usize,
    pub trees: usize,
    pub seed: u64,
    pub opts: DynOptions,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            n_max: 4,
            derivative_samples: 500,
            lipschitz_pairs: 10_000,
            equi_points: 20,
            trees: 500,
            seed: 1,
            opts: DynOptions::default(),
        }
    }
}

/// Number of type I pairs `(x, y)` with
/// `log ||φx, φy|| > log ||x, y|| + lipschitz_log_bound(φ)`.
pub fn lipschitz_violations(phi: &RationalMap, pairs: usize, seed: u64) -> Result<usize> {
    let ctx = phi.ctx();
    let bound = LogValue::Finite(lipschitz_log_bound(phi));
    let mut g = rng(seed);
    let mut bad = 0;
    for _ in 0..pairs {
        let x = random_type_i(&mut g, ctx);
        let y = random_type_i(&mut g, ctx);
        let image = |z: &BerkPoint| match z {
            BerkPoint::TypeI(q) => BerkPoint::TypeI(phi.eval(q)),
            _ => unreachable!("type I sample"),
        };
        let lhs = spherical_log_distance(&image(&x), &image(&y), ctx)?;
        let rhs = spherical_log_distance(&x, &y, ctx)? + bound.clone();
        if lhs > rhs {
            bad += 1;
        }
    }
    Ok(bad)
}

/// A tree spanned by 1 to 6 random points, so at most 11 vertices.
pub fn random_tree(g: &mut ChaCha8Rng, ctx: &FieldContext) -> Result<FiniteTree> {
    let k = g.gen_range(1..=6);
    let pts: Vec<BerkPoint> =
        (0..k).map(|_| if g.gen_bool(0.3) { random_type_i(g, ctx) } else { random_disc(g, ctx) }).collect();
    FiniteTree::span(&pts, g.gen_range(1..=3), ctx)
}

/// Failure counts per identity over a batch of random trees.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TreeSuiteReport {
    pub trees: usize,
    pub max_vertices: usize,
    pub laplacian_mass: usize,
    pub branching_mass: usize,
    pub jordan: usize,
    pub log_diam: usize,
    pub self_adjoint: usize,
    pub retract: usize,
}

impl TreeSuiteReport {
    pub fn failures(&self) -> usize {
        self.laplacian_mass + self.branching_mass + self.jordan + self.log_diam + self.self_adjoint + self.retract
    }

    pub fn to_json(&self) -> Value {
        json!({
            "trees": self.trees,
            "max_vertices": self.max_vertices,
            "laplacian_mass": self.laplacian_mass,
            "branching_mass": self.branching_mass,
            "jordan": self.jordan,
            "log_diam": self.log_diam,
            "self_adjoint": self.self_adjoint,
            "retract": self.retract,
        })
    }
}

pub fn tree_suite(count: usize, seed: u64, ctx: &FieldContext) -> Result<TreeSuiteReport> {
    let mut g = rng(seed);
    let mut rep = TreeSuiteReport { trees: count, ..TreeSuiteReport::default() };
    let random_values = |g: &mut ChaCha8Rng, n: usize| -> Vec<_> {
        (0..n).map(|_| frac(g.gen_range(-20..=20), g.gen_range(1..=6))).collect()
    };
    for _ in 0..count {
        let tree = random_tree(&mut g, ctx)?;
        let n = tree.len();
        rep.max_vertices = rep.max_vertices.max(n);
        let f = CpaFunction::new(&tree, random_values(&mut g, n))?;
        let h = CpaFunction::new(&tree, random_values(&mut g, n))?;
        if !f.laplacian().total_mass().is_zero() {
            rep.laplacian_mass += 1;
        }
        let (plus, minus) = tree.branching_measure();
        if !plus.add(&minus).total_mass().is_one() {
            rep.branching_mass += 1;
        }
        if -minus.total_mass() != plus.total_mass() - int(1) {
            rep.jordan += 1;
        }
        let diam = tree.cpa(log_diam_infinity)?;
        let top = tree.retract(&BerkPoint::infinity(), ctx);
        let expected = plus.add(&minus).scale(&int(-2)).add(&DiscreteMeasure::dirac(top).scale(&int(2)));
        if diam.laplacian() != expected {
            rep.log_diam += 1;
        }
        let (a, b) = self_adjointness_check(&f, &h)?;
        if a != b {
            rep.self_adjoint += 1;
        }
        let x = if g.gen_bool(0.5) { random_type_i(&mut g, ctx) } else { random_disc(&mut g, ctx) };
        let rx = tree.retract(&x, ctx);
        let idempotent = tree.retract(&rx, ctx) == rx;
        let y = random_disc(&mut g, ctx);
        let contracting = !x.in_h() || rho(&rx, &tree.retract(&y, ctx), ctx) <= rho(&x, &y, ctx);
        if !(idempotent && contracting) {
            rep.retract += 1;
        }
    }
    Ok(rep)
}

#[derive(Debug, Clone)]
pub struct MapOutcome {
    pub name: String,
    pub report: LyapunovReport,
    pub lipschitz_pairs: usize,
    pub lipschitz_violations: usize,
}

impl MapOutcome {
    pub fn passed(&self) -> bool {
        self.report.passed() && self.lipschitz_violations == 0
    }
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub maps: Vec<MapOutcome>,
    pub trees: TreeSuiteReport,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.maps.iter().all(MapOutcome::passed) && self.trees.failures() == 0
    }

    pub fn to_json(&self) -> Value {
        json!({
            "maps": self.maps.iter().map(|m| json!({
                "name": m.name,
                "passed": m.passed(),
                "lipschitz_pairs": m.lipschitz_pairs,
                "lipschitz_violations": m.lipschitz_violations,
                "report": m.report.to_json(),
            })).collect::<Vec<_>>(),
            "trees": self.trees.to_json(),
            "passed": self.passed(),
        })
    }

    /// One line per map and one for the tree suite.
    pub fn summary_table(&self) -> String {
        let mut out = format!(
            "{:<28} {:>6} {:>10} {:>10} {:>10}  {}\n",
            "map", "levels", "est_prime", "kappa", "bound", "result"
        );
        for m in &self.maps {
            let r = &m.report;
            out.push_str(&format!(
                "{:<28} {:>6} {:>10} {:>10} {:>10}  {}\n",
                m.name,
                r.rows.len() - 1,
                format_rat(&r.rows.last().expect("level 0").est_prime),
                format_rat(&r.constants.kappa),
                format_rat(&r.conjugate_bound.best_bound),
                if m.passed() { "pass" } else { "FAIL" },
            ));
        }
        out.push_str(&format!(
            "{:<28} {:>6} {:>10} {:>10} {:>10}  {}\n",
            "random trees",
            self.trees.trees,
            "",
            "",
            "",
            if self.trees.failures() == 0 { "pass" } else { "FAIL" }
        ));
        out
    }
}

pub fn verify_map(name: &str, phi: &RationalMap, cfg: &SuiteConfig) -> Result<MapOutcome> {
    let acfg = AnalyzeConfig {
        n_max: cfg.n_max,
        conjugates: generators(phi.ctx()),
        derivative_samples: cfg.derivative_samples,
        equi_points: cfg.equi_points,
        seed: cfg.seed,
        opts: cfg.opts,
    };
    Ok(MapOutcome {
        name: name.to_string(),
        report: analyze(phi, &acfg)?,
        lipschitz_pairs: cfg.lipschitz_pairs,
        lipschitz_violations: lipschitz_violations(phi, cfg.lipschitz_pairs, cfg.seed)?,
    })
}

/// Runs every map of the corpus; the first error in corpus order wins.
pub fn verify_corpus(corpus: &Corpus, cfg: &SuiteConfig) -> Result<SuiteReport> {
    let maps = corpus.load()?;
    let opts = DynOptions { fault: corpus.fault(), ..cfg.opts };
    let cfg = SuiteConfig { opts, ..cfg.clone() };
    let outcomes = map_collect(&maps, cfg.opts.exec, |(name, phi)| verify_map(name, phi, &cfg));
    let maps = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
    let ctx = FieldContext::new(3, 20)?;
    Ok(SuiteReport { maps, trees: tree_suite(cfg.trees, cfg.seed, &ctx)? })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trees_small_batch() {
        let ctx = FieldContext::new(2, 20).unwrap();
        let rep = tree_suite(40, 7, &ctx).unwrap();
        assert_eq!(rep.failures(), 0, "{rep:?}");
        assert!(rep.max_vertices <= 12);
    }

    #[test]
    fn lipschitz_small_batch() {
        let ctx = FieldContext::new(3, 20).unwrap();
        let phi = RationalMap::from_ints(&[0, 0, 3], &[1], &ctx).unwrap();
        assert_eq!(lipschitz_violations(&phi, 300, 3).unwrap(), 0);
    }
}
