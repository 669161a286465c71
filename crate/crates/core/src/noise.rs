//! Counter-based pair noise.
//!
//! The Brownian increment for the unordered pair {i, j} at a given step is a
//! pure function of the key (seed, step, i, j) with i < j. The particle with the
//! larger index receives the negated increment, which makes B^{ji} = −B^{ij}
//! hold structurally and lets the pair loop run in any order or in parallel
//! without changing the result.
//!
//! Keys are mapped to a ChaCha8 keystream: the seed selects the key, the step
//! index selects the 64-bit stream, and the pair position (i·N + j) selects an
//! 8-word block from which four uniforms feed two Box–Muller transforms.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Identifies one antisymmetric pair increment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NoiseKey {
    pub seed: u64,
    pub step: u64,
    pub i: usize,
    pub j: usize,
}

impl NoiseKey {
    /// Orders the pair so that i < j; returns the key and the sign that the
    /// caller's particle `first` must apply to the drawn increment.
    pub fn ordered(seed: u64, step: u64, first: usize, second: usize) -> (Self, f64) {
        assert_ne!(first, second, "a particle has no noise with itself");
        if first < second {
            (
                NoiseKey {
                    seed,
                    step,
                    i: first,
                    j: second,
                },
                1.0,
            )
        } else {
            (
                NoiseKey {
                    seed,
                    step,
                    i: second,
                    j: first,
                },
                -1.0,
            )
        }
    }
}

/// Source of standard normal triples for ordered pairs i < j.
pub trait PairNoise: Sync {
    /// Standard normal triple for the pair i < j at `step` in a system of `n`
    /// particles.
    fn pair_normals(&self, step: u64, i: usize, j: usize, n: usize) -> [f64; 3];

    /// Fills `out[k]` with the triple of pair (i, i + 1 + k) for every j > i.
    fn fill_row(&self, step: u64, i: usize, n: usize, out: &mut [[f64; 3]]) {
        for (k, j) in (i + 1..n).enumerate() {
            out[k] = self.pair_normals(step, i, j, n);
        }
    }
}

/// Deterministic counter-based generator keyed by (seed, step, i, j).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterNoise {
    seed: u64,
}

impl CounterNoise {
    pub fn new(seed: u64) -> Self {
        CounterNoise { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn positioned(&self, step: u64, i: usize, j: usize, n: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(step);
        rng.set_word_pos(((i as u128) * (n as u128) + j as u128) * 8);
        rng
    }

    /// The normal triple for a full key.
    pub fn draw(&self, key: &NoiseKey, n: usize) -> [f64; 3] {
        assert!(key.i < key.j && key.j < n);
        assert_eq!(key.seed, self.seed);
        self.pair_normals(key.step, key.i, key.j, n)
    }
}

#[inline]
fn unit_open(x: u64) -> f64 {
    // (0, 1]: never zero, so the logarithm below is finite.
    ((x >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[inline]
fn box_muller(rng: &mut ChaCha8Rng) -> [f64; 3] {
    let u1 = unit_open(rng.next_u64());
    let u2 = unit_open(rng.next_u64());
    let u3 = unit_open(rng.next_u64());
    let u4 = unit_open(rng.next_u64());
    let r1 = (-2.0 * u1.ln()).sqrt();
    let (s1, c1) = (std::f64::consts::TAU * u2).sin_cos();
    let r2 = (-2.0 * u3.ln()).sqrt();
    let c2 = (std::f64::consts::TAU * u4).cos();
    [r1 * c1, r1 * s1, r2 * c2]
}

impl PairNoise for CounterNoise {
    fn pair_normals(&self, step: u64, i: usize, j: usize, n: usize) -> [f64; 3] {
        debug_assert!(i < j && j < n);
        let mut rng = self.positioned(step, i, j, n);
        box_muller(&mut rng)
    }

    fn fill_row(&self, step: u64, i: usize, n: usize, out: &mut [[f64; 3]]) {
        if i + 1 >= n {
            return;
        }
        // Pairs (i, j) for consecutive j occupy consecutive 8-word blocks.
        let mut rng = self.positioned(step, i, i + 1, n);
        for slot in out.iter_mut().take(n - i - 1) {
            *slot = box_muller(&mut rng);
        }
    }
}

/// Seeded generator for auxiliary streams (initial sampling, Monte Carlo
/// batches). `tag` separates independent uses of the same seed.
pub fn aux_rng(seed: u64, tag: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(stream);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_fill_matches_per_pair_draws() {
        let noise = CounterNoise::new(42);
        let n = 37;
        for i in [0, 5, 35] {
            let mut row = vec![[0.0; 3]; n - i - 1];
            noise.fill_row(7, i, n, &mut row);
            for (k, j) in (i + 1..n).enumerate() {
                assert_eq!(row[k], noise.pair_normals(7, i, j, n));
            }
        }
    }

    #[test]
    fn draws_depend_only_on_the_key() {
        let a = CounterNoise::new(1);
        let b = CounterNoise::new(1);
        assert_eq!(a.pair_normals(3, 2, 9, 10), b.pair_normals(3, 2, 9, 10));
        assert_ne!(a.pair_normals(3, 2, 9, 10), a.pair_normals(4, 2, 9, 10));
        assert_ne!(a.pair_normals(3, 2, 9, 10), a.pair_normals(3, 2, 8, 10));
        assert_ne!(
            a.pair_normals(3, 2, 9, 10),
            CounterNoise::new(2).pair_normals(3, 2, 9, 10)
        );
    }

    #[test]
    fn ordered_key_flips_sign() {
        let (k, s) = NoiseKey::ordered(1, 0, 5, 2);
        assert_eq!((k.i, k.j, s), (2, 5, -1.0));
        let (k, s) = NoiseKey::ordered(1, 0, 2, 5);
        assert_eq!((k.i, k.j, s), (2, 5, 1.0));
    }

    #[test]
    fn normals_have_unit_moments() {
        let noise = CounterNoise::new(2024);
        let n = 300;
        let mut row = vec![[0.0; 3]; n];
        let mut xs = Vec::new();
        for step in 0..20 {
            for i in 0..n - 1 {
                noise.fill_row(step, i, n, &mut row);
                for t in &row[..n - i - 1] {
                    xs.extend_from_slice(t);
                }
            }
        }
        let m = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / m;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / m;
        let kurt = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / m / (var * var);
        assert!(mean.abs() < 4.0 / m.sqrt(), "mean {mean}");
        assert!((var - 1.0).abs() < 4.0 * (2.0 / m).sqrt(), "var {var}");
        assert!((kurt - 3.0).abs() < 0.05, "kurtosis {kurt}");
    }
}
