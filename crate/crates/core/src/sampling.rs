//! Seeded sampling utilities shared by the verifiers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::numerics::linalg::Vector;
use crate::numerics::Rational;

/// Grid resolution of sampled perturbations: coordinates are multiples of
/// `radius / RESOLUTION`.
pub const RESOLUTION: i64 = 1024;

pub const DEFAULT_LEVELS: usize = 13;
pub const DEFAULT_PER_LEVEL: usize = 64;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `r₀ · 2^{-k}` for `k = 0..levels`.
pub fn radii(r0: &Rational, levels: usize) -> Vec<Rational> {
    let half = Rational::new(1, 2);
    let mut out = Vec::with_capacity(levels);
    let mut r = r0.clone();
    for _ in 0..levels {
        out.push(r.clone());
        r = &r * &half;
    }
    out
}

/// Samples per radius level for a total budget.
pub fn per_level(budget: usize, levels: usize) -> usize {
    budget.div_ceil(levels.max(1))
}

/// A point of the cube `center + [-radius, radius]ⁿ` on the sampling grid.
pub fn perturb<R: Rng>(rng: &mut R, center: &[Rational], radius: &Rational) -> Vector {
    center
        .iter()
        .map(|c| {
            let j = rng.gen_range(-RESOLUTION..=RESOLUTION);
            c + &(radius * &Rational::new(j, RESOLUTION))
        })
        .collect()
}

/// A point of `center + [-radius, radius]ⁿ` whose coordinates are multiples
/// of `radius / res`; coarse grids hit lower-dimensional faces often.
pub fn perturb_grid<R: Rng>(rng: &mut R, center: &[Rational], radius: &Rational, res: i64) -> Vector {
    center
        .iter()
        .map(|c| c + &(radius * &Rational::new(rng.gen_range(-res..=res), res)))
        .collect()
}

/// Small random integer vector with entries in `[-k, k]`.
pub fn int_vector<R: Rng>(rng: &mut R, n: usize, k: i64) -> Vector {
    (0..n).map(|_| Rational::from_int(rng.gen_range(-k..=k))).collect()
}
