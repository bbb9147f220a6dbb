//! Counter-based seed derivation.
//!
//! Every random draw in the crate comes from a generator obtained as
//! `stream(seed, index)`: a ChaCha8 generator keyed by `seed` and positioned
//! on stream `index`. Ensemble member `i` of a sweep always uses stream `i`
//! (offset by a per-experiment tag), so results do not depend on evaluation
//! order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags keep different experiments sharing one seed independent.
pub mod tag {
    pub const REMAINDER_SCAN: u64 = 1 << 40;
    pub const STRICHARTZ: u64 = 2 << 40;
    pub const BILINEAR: u64 = 3 << 40;
    pub const EXP_SUM: u64 = 4 << 40;
    pub const VANISH: u64 = 5 << 40;
    pub const PRODUCT: u64 = 6 << 40;
    pub const INITIAL_DATA: u64 = 7 << 40;
}

pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = (0..4).map(|_| 0).scan(stream(7, 3), |r, _| Some(r.gen())).collect();
        let b: Vec<u64> = (0..4).map(|_| 0).scan(stream(7, 3), |r, _| Some(r.gen())).collect();
        let c: Vec<u64> = (0..4).map(|_| 0).scan(stream(7, 4), |r, _| Some(r.gen())).collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
