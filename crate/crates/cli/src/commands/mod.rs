mod analyze;
mod bench;
mod solve;
mod verify;

pub use analyze::run_analyze;
pub use bench::{run_bench, BENCH_METHODS};
pub use solve::run_solve;
pub use verify::run_verify;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use homogopt::Domain;

/// Uniform point in `region` from a seeded generator.
pub(crate) fn random_point(region: &Domain, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..region.dim())
        .map(|i| {
            let (a, b) = region.bounds(i);
            rng.gen_range(a..b)
        })
        .collect()
}

pub(crate) fn name_seed(seed: u64, name: &str) -> u64 {
    // FNV-1a
    name.bytes()
        .fold(0xcbf2_9ce4_8422_2325u64 ^ seed, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3))
}
