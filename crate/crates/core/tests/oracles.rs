//! Library results checked against independent computations.

use berkovich::dynamics::{nu, preimages, DynOptions};
use berkovich::hensel::hensel_roots;
use berkovich::map::{
    apply, directional_multiplicity, lipschitz_log_bound, map_seminorm_log, multiplicity,
    normalized_resultant_valuation, reduction, seminorm_log, spherical_derivative_log, RationalMap,
};
use berkovich::newton::{newton_polygon, root_count_in_disc};
use berkovich::point::{rho, spherical_log_distance, BerkPoint, Direction, ProjPoint};
use berkovich::poly::Poly;
use berkovich::rational::{ceil_i64, frac, int, pow_p, Rat};
use berkovich::sample::{random_rational, rng};
use berkovich::valuation::{FieldContext, LogValue};
use num_traits::Zero;
use rand::Rng;

fn ctx(p: u64) -> FieldContext {
    FieldContext::new(p, 30).unwrap()
}

fn map(num: &[i64], den: &[i64], p: u64) -> RationalMap {
    RationalMap::from_ints(num, den, &ctx(p)).unwrap()
}

fn log_abs(x: &Rat, c: &FieldContext) -> LogValue {
    c.log_abs(x)
}

/// Random points `a + k p^{-t}` of the closed disc `D(a, t)`, integer `t`.
fn disc_samples(a: &Rat, t: i64, n: usize, seed: u64, c: &FieldContext) -> Vec<Rat> {
    let mut g = rng(seed);
    let p = c.prime();
    (0..n).map(|_| a + pow_p(p, -t) * int(g.gen_range(0..(p * p * p) as i64))).collect()
}

#[test]
fn seminorm_is_the_sup_over_the_disc() {
    let mut g = rng(11);
    for p in [2u64, 3, 5, 7] {
        let c = ctx(p);
        for trial in 0..20 {
            let deg = g.gen_range(1..=4);
            let f = Poly::new((0..=deg).map(|_| random_rational(&mut g, &c)).collect());
            if f.is_zero() {
                continue;
            }
            let a = random_rational(&mut g, &c);
            let t: i64 = g.gen_range(-3..=3);
            let pt = BerkPoint::disc(&a, int(t), &c);
            let norm = seminorm_log(&f, &pt, &c);
            let samples = disc_samples(&a, t, 400, trial, &c);
            let best = samples.iter().map(|z| log_abs(&f.eval(z), &c)).max().unwrap();
            // A reduction of degree >= p may vanish on every residue class of F_p.
            if (deg as u64) < p {
                assert_eq!(best, norm, "f = {f:?}, D({a}, {t}), p = {p}");
            } else {
                assert!(best <= norm, "f = {f:?}, D({a}, {t}), p = {p}");
            }
        }
    }
}

#[test]
fn seminorm_worked_values() {
    let c = ctx(3);
    let f = Poly::new(vec![int(-3), int(0), int(1)]);
    let pt = BerkPoint::disc(&int(0), int(-1), &c);
    let best = disc_samples(&int(0), -1, 1000, 1, &c).iter().map(|z| log_abs(&f.eval(z), &c)).max().unwrap();
    assert_eq!(best, LogValue::from_int(-1));
    assert_eq!(seminorm_log(&f, &pt, &c), best);
}

/// `log|root|` for each root, read off the lower hull of `(i, v(c_i))`.
fn brute_root_sizes(coeffs: &[Rat], c: &FieldContext) -> Vec<Rat> {
    let pts: Vec<(i64, Rat)> =
        coeffs.iter().enumerate().filter(|(_, x)| !x.is_zero()).map(|(i, x)| (i as i64, int(c.val(x)))).collect();
    let mut sizes = Vec::new();
    let mut i = 0;
    while i + 1 < pts.len() {
        let (xi, yi) = &pts[i];
        // The next hull vertex minimizes the slope, ties broken by the farthest point.
        let mut best = i + 1;
        for j in i + 1..pts.len() {
            let s = (&pts[j].1 - yi) / int(pts[j].0 - xi);
            let sb = (&pts[best].1 - yi) / int(pts[best].0 - xi);
            if s <= sb {
                best = j;
            }
        }
        let slope = (&pts[best].1 - yi) / int(pts[best].0 - xi);
        for _ in 0..(pts[best].0 - xi) {
            sizes.push(slope.clone());
        }
        i = best;
    }
    sizes
}

#[test]
fn newton_polygon_matches_brute_force_hull() {
    let mut g = rng(5);
    for p in [2u64, 3, 5, 7] {
        let c = ctx(p);
        for _ in 0..40 {
            let deg = g.gen_range(1..=6);
            let mut coeffs: Vec<Rat> = (0..=deg).map(|_| random_rational(&mut g, &c)).collect();
            if coeffs[0].is_zero() {
                coeffs[0] = int(1);
            }
            if coeffs[deg].is_zero() {
                coeffs[deg] = int(1);
            }
            let np = newton_polygon(&coeffs, &c).unwrap();
            let mut ours: Vec<Rat> = Vec::new();
            for s in &np.segments {
                for _ in 0..s.length {
                    ours.push(s.slope.clone());
                }
            }
            let mut brute = brute_root_sizes(&coeffs, &c);
            ours.sort();
            brute.sort();
            assert_eq!(ours, brute, "{coeffs:?} p = {p}");
            for t in [int(-2), frac(-1, 2), int(0), int(1)] {
                let closed = brute.iter().filter(|v| **v <= t).count();
                assert_eq!(root_count_in_disc(&Poly::new(coeffs.clone()), &int(0), &t, false, &c).unwrap(), closed);
            }
        }
    }
}

/// Determinant by Gaussian elimination over Q.
fn det(mut m: Vec<Vec<Rat>>) -> Rat {
    let n = m.len();
    let mut acc = int(1);
    for col in 0..n {
        let Some(piv) = (col..n).find(|&r| !m[r][col].is_zero()) else {
            return Rat::zero();
        };
        if piv != col {
            m.swap(piv, col);
            acc = -acc;
        }
        acc *= m[col][col].clone();
        let pivot = m[col].clone();
        for row in m.iter_mut().skip(col + 1) {
            let k = &row[col] / &pivot[col];
            for (x, y) in row[col..].iter_mut().zip(&pivot[col..]) {
                *x -= &k * y;
            }
        }
    }
    acc
}

/// `Res(F, G)` of the homogeneous lift, coefficients padded to degree `d`.
fn sylvester_resultant(f: &[Rat], g: &[Rat], d: usize) -> Rat {
    let pad = |v: &[Rat]| -> Vec<Rat> { (0..=d).map(|i| v.get(i).cloned().unwrap_or_else(Rat::zero)).collect() };
    let (f, g) = (pad(f), pad(g));
    let n = 2 * d;
    let mut m = vec![vec![Rat::zero(); n]; n];
    for r in 0..d {
        for i in 0..=d {
            m[r][r + i] = f[d - i].clone();
            m[r + d][r + i] = g[d - i].clone();
        }
    }
    det(m)
}

fn min_val(cs: &[Rat], c: &FieldContext) -> i64 {
    cs.iter().filter(|x| !x.is_zero()).map(|x| c.val(x)).min().unwrap()
}

#[test]
fn resultant_valuation_matches_sylvester_determinant() {
    let cases: Vec<(Vec<i64>, Vec<i64>, u64)> = vec![
        (vec![0, 0, 3], vec![1], 3),
        (vec![0, 0, 1], vec![1], 5),
        (vec![0, 1, 3], vec![1], 3),
        (vec![1, 0, 1], vec![0, 1], 3),
        (vec![3, 0, 1], vec![1], 3),
        (vec![0, 0, 0, 2], vec![1, 0, 4], 2),
        (vec![1, 0, 1], vec![0, 3], 3),
    ];
    for (num, den, p) in cases {
        let phi = map(&num, &den, p);
        let c = phi.ctx();
        let f = phi.numerator().coeffs().to_vec();
        let g = phi.denominator().coeffs().to_vec();
        let m = min_val(&f, c).min(min_val(&g, c));
        let scale = pow_p(p, -m);
        let fs: Vec<Rat> = f.iter().map(|x| x * &scale).collect();
        let gs: Vec<Rat> = g.iter().map(|x| x * &scale).collect();
        let res = sylvester_resultant(&fs, &gs, phi.degree());
        let v = c.val(&res);
        assert_eq!(normalized_resultant_valuation(&phi), v, "{phi}");
        assert_eq!(lipschitz_log_bound(&phi), int(2 * v), "{phi}");
        assert_eq!(reduction(&phi).good_reduction, v == 0, "{phi}");
    }
    // The resultant of p z^2 is p^2 on the normalized lift.
    assert_eq!(lipschitz_log_bound(&map(&[0, 0, 3], &[1], 3)), int(4));
}

#[test]
fn directional_multiplicity_is_the_image_stretch() {
    let mut g = rng(21);
    let maps = [
        map(&[0, 0, 1], &[1], 5),
        map(&[0, 0, 1], &[1], 2),
        map(&[0, 0, 3], &[1], 3),
        map(&[-1, 0, 9], &[9], 3),
        map(&[0, 1, 0, 1], &[1], 2),
    ];
    for phi in &maps {
        let c = phi.ctx();
        for _ in 0..15 {
            let a = random_rational(&mut g, c);
            let t: i64 = g.gen_range(-3..=3);
            let zeta = BerkPoint::disc(&a, int(t), c);
            let data =
                directional_multiplicity(phi, &zeta, &Direction::TowardPoint(BerkPoint::type_i(a.clone()))).unwrap();
            let (e1, e2) = (frac(1, 97), frac(1, 53));
            let i1 = apply(phi, &BerkPoint::disc(&a, int(t) - &e1, c));
            let i2 = apply(phi, &BerkPoint::disc(&a, int(t) - &e2, c));
            let stretch = rho(&i1, &i2, c).expect_finite("discs") / (&e2 - &e1);
            assert_eq!(stretch, int(data.multiplicity as i64), "{phi} at {zeta}");
        }
    }
}

#[test]
fn local_degree_is_the_sum_over_directions_to_the_top() {
    let mut g = rng(23);
    let maps = [
        map(&[0, 0, 1], &[1], 5),
        map(&[0, 0, 3], &[1], 3),
        map(&[0, 1, 1], &[1], 3),
        map(&[-1, 0, 9], &[9], 3),
        map(&[0, 0, 1], &[1, 1], 5),
        map(&[1, 0, 1], &[0, 3], 3),
    ];
    for phi in &maps {
        let c = phi.ctx();
        let poles: Vec<Rat> =
            hensel_roots(phi.denominator(), c).unwrap_or_default().into_iter().map(|(r, _)| r.approx).collect();
        for _ in 0..15 {
            let a = random_rational(&mut g, c);
            let t: i64 = g.gen_range(-3..=3);
            let zeta = BerkPoint::disc(&a, int(t), c);
            let up = directional_multiplicity(phi, &zeta, &Direction::TowardInfinity).unwrap();
            let image_up = |d: &Direction| matches!(d, Direction::TowardInfinity);
            let mut total = if image_up(&up.image) { up.multiplicity } else { 0 };
            let mut seen: Vec<Rat> = Vec::new();
            for q in &poles {
                // Pole classes strictly below zeta.
                if c.log_abs(&(q - &a)) > LogValue::Finite(int(t)) {
                    continue;
                }
                if seen.iter().any(|s| c.log_abs(&(q - s)) < LogValue::Finite(int(t))) {
                    continue;
                }
                seen.push(q.clone());
                let dd = directional_multiplicity(phi, &zeta, &Direction::TowardPoint(BerkPoint::type_i(q.clone())))
                    .unwrap();
                if image_up(&dd.image) {
                    total += dd.multiplicity;
                }
            }
            if total > 0 {
                assert_eq!(multiplicity(phi, &zeta).unwrap(), total, "{phi} at {zeta}");
            }
        }
    }
}

#[test]
fn spherical_derivative_is_a_difference_quotient() {
    let mut g = rng(31);
    let maps =
        [map(&[0, 0, 1], &[1], 3), map(&[0, 0, 3], &[1], 3), map(&[1, 0, 1], &[0, 3], 3), map(&[2, 1], &[0, 0, 1], 5)];
    for phi in &maps {
        let c = phi.ctx();
        for _ in 0..30 {
            let x = random_rational(&mut g, c);
            let bx = BerkPoint::type_i(x.clone());
            let sharp = spherical_derivative_log(phi, &bx);
            if !sharp.is_finite() {
                continue;
            }
            let y = &x + pow_p(c.prime(), 25);
            let by = BerkPoint::type_i(y.clone());
            let img = |z: &Rat| BerkPoint::TypeI(phi.eval(&ProjPoint::Finite(z.clone())));
            let quotient =
                spherical_log_distance(&img(&x), &img(&y), c).unwrap() - spherical_log_distance(&bx, &by, c).unwrap();
            assert_eq!(quotient, sharp, "{phi} at {x}");
        }
    }
}

#[test]
fn apply_is_the_image_of_sampled_points() {
    let mut g = rng(41);
    // Degree below p, so sampled images reach the boundary of the image disc.
    let maps =
        [map(&[0, 0, 1], &[1], 5), map(&[0, 0, 3], &[1], 3), map(&[0, 1, 1], &[1], 3), map(&[-1, 0, 9], &[9], 3)];
    for phi in &maps {
        let c = phi.ctx();
        for trial in 0..15 {
            let a = random_rational(&mut g, c);
            let t: i64 = g.gen_range(-2..=2);
            let img = apply(phi, &BerkPoint::disc(&a, int(t), c));
            let disc = img.as_disc().unwrap();
            let worst = disc_samples(&a, t, 400, trial, c)
                .iter()
                .map(|z| {
                    let w = phi.eval(&ProjPoint::Finite(z.clone()));
                    match w {
                        ProjPoint::Finite(w) => c.log_abs(&(w - disc.center())),
                        ProjPoint::Infinity => LogValue::PosInf,
                    }
                })
                .max()
                .unwrap();
            assert_eq!(worst, LogValue::Finite(disc.log_radius().clone()), "{phi} on D({a}, {t})");
            assert!(map_seminorm_log(phi, &BerkPoint::disc(&a, int(t), c)).is_finite());
        }
    }
}

/// For polynomials every root of `φ = y`, `y` in the target disc, sits below
/// some preimage, and every preimage disc holds such a root.
#[test]
fn preimage_discs_hold_the_classical_fibers() {
    let cases =
        [map(&[-1, 0, 9], &[9], 3), map(&[0, 0, 3], &[1], 3), map(&[-1, 0, 25], &[25], 5), map(&[0, 3, 1], &[3], 3)];
    let mut g = rng(51);
    for phi in &cases {
        let c = phi.ctx();
        let levels = nu(phi, &BerkPoint::gauss(), 2, &DynOptions::default()).unwrap();
        let mut checked = 0;
        for mu in &levels.levels {
            for (target, _) in mu.atoms() {
                let pre = preimages(phi, target).unwrap();
                let td = target.as_disc().unwrap();
                let step = pow_p(c.prime(), ceil_i64(&-td.log_radius().clone()));
                let inside = |r: &Rat, z: &BerkPoint| {
                    let zd = z.as_disc().unwrap();
                    c.log_abs(&(r - zd.center())) <= LogValue::Finite(zd.log_radius().clone())
                };
                for _ in 0..40 {
                    let y = td.center() + &step * int(g.gen_range(0..500));
                    let roots = match hensel_roots(&(phi.numerator() - &phi.denominator().scale(&y)), c) {
                        Ok(r) if r.iter().all(|(r, _)| r.exact) => r,
                        _ => continue,
                    };
                    checked += 1;
                    for (r, _) in &roots {
                        assert!(pre.iter().any(|(z, _)| inside(&r.approx, z)), "{phi}: root {} over {y}", r.approx);
                    }
                    for (z, _) in &pre {
                        assert!(
                            roots.iter().any(|(r, _)| inside(&r.approx, z)),
                            "{phi}: {z} misses the fiber over {y}"
                        );
                    }
                }
            }
        }
        assert!(checked > 0, "{phi}: no split fiber sampled");
    }
}
