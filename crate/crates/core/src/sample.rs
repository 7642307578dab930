//! Seeded random points for property checks.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::point::BerkPoint;
use crate::rational::{frac, int, pow_p, Rat};
use crate::valuation::FieldContext;

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A rational `u p^k / w` with small `|u|, w` and `|k| <= 3`.
pub fn random_rational(rng: &mut ChaCha8Rng, ctx: &FieldContext) -> Rat {
    let u: i64 = rng.gen_range(-60..=60);
    let w: i64 = rng.gen_range(1..=7);
    let k: i64 = rng.gen_range(-3..=3);
    frac(u, w) * pow_p(ctx.prime(), k)
}

pub fn random_type_i(rng: &mut ChaCha8Rng, ctx: &FieldContext) -> BerkPoint {
    if rng.gen_ratio(1, 25) {
        BerkPoint::infinity()
    } else {
        BerkPoint::type_i(random_rational(rng, ctx))
    }
}

/// A disc with integer log-radius in `[-4, 4]`.
pub fn random_type_ii(rng: &mut ChaCha8Rng, ctx: &FieldContext) -> BerkPoint {
    let t: i64 = rng.gen_range(-4..=4);
    BerkPoint::disc(&random_rational(rng, ctx), int(t), ctx)
}

/// A disc whose log-radius has denominator up to 4.
pub fn random_disc(rng: &mut ChaCha8Rng, ctx: &FieldContext) -> BerkPoint {
    let den: i64 = rng.gen_range(1..=4);
    let num: i64 = rng.gen_range(-4 * den..=4 * den);
    BerkPoint::disc(&random_rational(rng, ctx), frac(num, den), ctx)
}
