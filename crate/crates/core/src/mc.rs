//! Deterministic sharded Monte Carlo.
//!
//! Work is split into a shard layout that depends only on the sample count.
//! Shard `i` draws from `ChaCha8Rng::seed_from_u64(seed + i)`, and shard
//! statistics are merged in shard order, so results are bit-identical for a
//! fixed `(seed, samples)` no matter how many threads run the shards.

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::rational::Rational;

/// Upper bound on shard count.
pub const MAX_SHARDS: u64 = 64;

/// Running mean and sum of squared deviations (Welford), mergeable.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Stats {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Stats {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Stats) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / n;
        self.m2 += other.m2 + delta * delta * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).max(0.0)
        }
    }

    pub fn stderr(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }

    pub fn estimate(&self) -> McEstimate {
        McEstimate { estimate: self.mean, stderr: self.stderr(), samples: self.count }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub samples: u64,
}

impl McEstimate {
    /// `|estimate - target| <= sigmas * stderr`.
    pub fn within(&self, target: f64, sigmas: f64) -> bool {
        (self.estimate - target).abs() <= sigmas * self.stderr
    }
}

/// Sample counts per shard.
pub fn shard_layout(samples: u64) -> Vec<u64> {
    let shards = samples.clamp(1, MAX_SHARDS);
    let base = samples / shards;
    let extra = samples % shards;
    (0..shards).map(|i| base + u64::from(i < extra)).collect()
}

pub fn shard_rng(seed: u64, shard: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_add(shard))
}

/// Runs `work(rng, count)` on every shard in parallel and merges the
/// per-shard accumulators in shard order.
pub fn run_sharded<A, F, M>(samples: u64, seed: u64, work: F, merge: M) -> A
where
    A: Send + Default,
    F: Fn(&mut ChaCha8Rng, u64) -> A + Sync,
    M: Fn(&mut A, A),
{
    let layout = shard_layout(samples);
    let parts: Vec<A> = layout
        .par_iter()
        .enumerate()
        .map(|(i, &count)| {
            let mut rng = shard_rng(seed, i as u64);
            work(&mut rng, count)
        })
        .collect();
    let mut acc = A::default();
    for part in parts {
        merge(&mut acc, part);
    }
    acc
}

/// Mean of `sample(rng)` over `samples` draws, sharded.
pub fn estimate_mean<F>(samples: u64, seed: u64, sample: F) -> McEstimate
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    run_sharded(
        samples,
        seed,
        |rng, count| {
            let mut s = Stats::default();
            for _ in 0..count {
                s.push(sample(rng));
            }
            s
        },
        |acc: &mut Stats, part| acc.merge(&part),
    )
    .estimate()
}

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for a named stochastic component: FNV-1a of the name mixed with the
/// experiment seed.
pub fn derive_seed(seed: u64, component: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in component.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    splitmix64(seed ^ h)
}

/// `floor(r * 2^64)` for `r` in `[0, 1]`, saturating at `u64::MAX + 1`
/// (returned as `None`, meaning "always").
pub fn threshold_u64(r: &Rational) -> Option<u64> {
    let scaled: BigInt = (r * Rational::from_integer(BigInt::from(1u128 << 64))).floor().to_integer();
    if scaled < BigInt::zero() {
        return Some(0);
    }
    scaled.to_u64()
}

/// Bernoulli(p) with exact rational thresholds.
#[derive(Clone, Copy, Debug)]
pub struct Bernoulli {
    threshold: Option<u64>,
}

impl Bernoulli {
    pub fn new(p: &Rational) -> Self {
        Bernoulli { threshold: threshold_u64(p) }
    }

    #[inline]
    pub fn sample<R: RngCore>(&self, rng: &mut R) -> bool {
        match self.threshold {
            None => true,
            Some(t) => rng.next_u64() < t,
        }
    }
}

/// Inverse-CDF sampler over a finite outcome list with rational weights.
#[derive(Clone, Debug)]
pub struct CumulativeSampler<T> {
    outcomes: Vec<T>,
    // cumulative thresholds; the last outcome catches the remainder
    cumulative: Vec<u64>,
}

impl<T: Copy> CumulativeSampler<T> {
    pub fn new(items: &[(T, Rational)]) -> Self {
        assert!(!items.is_empty(), "sampler needs at least one outcome");
        let mut acc = Rational::zero();
        let mut cumulative = Vec::with_capacity(items.len());
        for (_, w) in &items[..items.len() - 1] {
            acc += w;
            cumulative.push(threshold_u64(&acc).unwrap_or(u64::MAX));
        }
        CumulativeSampler { outcomes: items.iter().map(|(o, _)| *o).collect(), cumulative }
    }

    #[inline]
    pub fn sample<R: RngCore>(&self, rng: &mut R) -> T {
        let u = rng.next_u64();
        let idx = self.cumulative.partition_point(|&c| c <= u);
        self.outcomes[idx]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn layout_covers_samples() {
        assert_eq!(shard_layout(10).iter().sum::<u64>(), 10);
        assert_eq!(shard_layout(1000).len(), 64);
        assert_eq!(shard_layout(1000).iter().sum::<u64>(), 1000);
        assert_eq!(shard_layout(0), vec![0]);
    }

    #[test]
    fn constant_integrand_has_zero_stderr() {
        let e = estimate_mean(12_345, 9, |_| 1.0);
        assert_eq!(e.estimate, 1.0);
        assert_eq!(e.stderr, 0.0);
        assert_eq!(e.samples, 12_345);
    }

    #[test]
    fn merge_matches_single_pass() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64).sin()).collect();
        let mut all = Stats::default();
        xs.iter().for_each(|&x| all.push(x));
        let (mut a, mut b) = (Stats::default(), Stats::default());
        xs[..37].iter().for_each(|&x| a.push(x));
        xs[37..].iter().for_each(|&x| b.push(x));
        a.merge(&b);
        assert!((a.mean - all.mean).abs() < 1e-14);
        assert!((a.m2 - all.m2).abs() < 1e-12);
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let f = |rng: &mut ChaCha8Rng| (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        let a = estimate_mean(10_000, 3, f);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| estimate_mean(10_000, 3, f));
        assert_eq!(a, b);
    }

    #[test]
    fn thresholds_are_exact() {
        assert_eq!(threshold_u64(&rat(1, 2)), Some(1u64 << 63));
        assert_eq!(threshold_u64(&rat(1, 1)), None);
        assert_eq!(threshold_u64(&rat(0, 1)), Some(0));
    }

    #[test]
    fn sampler_frequencies() {
        let s = CumulativeSampler::new(&[(0u8, rat(1, 4)), (1, rat(0, 1)), (2, rat(3, 4))]);
        let mut rng = shard_rng(1, 0);
        let mut counts = [0u32; 3];
        for _ in 0..40_000 {
            counts[s.sample(&mut rng) as usize] += 1;
        }
        assert_eq!(counts[1], 0);
        assert!((counts[0] as f64 / 40_000.0 - 0.25).abs() < 0.01);
    }

    #[test]
    fn derived_seeds_differ_by_component() {
        assert_ne!(derive_seed(1, "alpha"), derive_seed(1, "rounding"));
        assert_eq!(derive_seed(1, "alpha"), derive_seed(1, "alpha"));
    }
}
