//! A fixed, documented 64-bit pseudo-random generator.
//!
//! State transition is the MMIX linear congruential step; output runs the
//! state through a xorshift-multiply finalizer so low bits are usable for
//! power-of-two moduli. Per-processor streams for benchmark generation are
//! derived from `21 + 1001 * rank` folded with the base seed, so the same
//! `(seed, rank)` pair reproduces the same stream on any platform.

const LCG_MUL: u64 = 6364136223846793005;
const LCG_ADD: u64 = 1442695040888963407;
const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone)]
pub struct Prng {
    state: u64,
}

impl Prng {
    pub fn new(seed: u64) -> Self {
        let mut rng = Prng { state: splitmix(seed ^ GOLDEN) };
        rng.next_u64();
        rng
    }

    /// Stream `rank` of a base seed, using the `21 + 1001 * rank` formula.
    pub fn stream(base_seed: u64, rank: usize) -> Self {
        let lane = 21u64.wrapping_add(1001u64.wrapping_mul(rank as u64));
        let mut rng = Prng { state: splitmix(base_seed).wrapping_add(lane.wrapping_mul(GOLDEN)) };
        rng.next_u64();
        rng
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_mul(LCG_MUL).wrapping_add(LCG_ADD);
        let mut z = self.state;
        z ^= z >> 33;
        z = z.wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
        z ^= z >> 29;
        z
    }

    /// Uniform draw in `[0, bound)`; `bound` must be nonzero.
    pub fn below(&mut self, bound: u64) -> u64 {
        debug_assert!(bound > 0);
        self.next_u64() % bound
    }

    /// A 31-bit key in `[0, 2^31)`, the benchmark value range.
    pub fn key31(&mut self) -> i64 {
        (self.next_u64() >> 33) as i64
    }
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(GOLDEN);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}
