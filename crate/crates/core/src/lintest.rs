//! Running `Lin(nu)`: `k` correlated queries `X_1..X_k in {0,1}^n` whose
//! coordinate blocks `(X_1^(j), ..., X_k^(j))` are independent draws from
//! `nu`; the test accepts when `prod_i f(X_i) = 1`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{AddAssign, Mul};

use num_bigint::{BigInt, BigUint};
use num_complex::Complex64;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cube::{roots_of_unity, CubeFunction, CubePoint, RangeTag};
use crate::distributions::{coord, weight, BiasedDistribution};
use crate::error::{Error, Result};
use crate::mc::{self, CumulativeSampler, Stats};
use crate::rational::{common_denominator, to_f64, Rational};

/// Largest number of support tuples enumerated in exact mode.
pub const EXACT_BUDGET: u128 = 100_000_000;

// distinct product values kept exact before folding into a float sum
const MAX_EXACT_KEYS: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Exact,
    MonteCarlo,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Exact => "exact",
            Mode::MonteCarlo => "monte-carlo",
        })
    }
}

/// How to evaluate a test.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TestMode {
    Exact,
    MonteCarlo { samples: u64, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub expectation: f64,
    pub stderr: f64,
    /// `(1 + expectation) / 2`, only for sign-valued functions.
    pub acceptance: Option<f64>,
    pub mode: Mode,
    pub samples: u64,
    pub seed: u64,
}

impl TestReport {
    fn new(f: &CubeFunction, expectation: f64, stderr: f64, mode: Mode, samples: u64, seed: u64) -> Self {
        let acceptance = (f.range() == RangeTag::Signs).then(|| ((1.0 + expectation) / 2.0).clamp(0.0, 1.0));
        TestReport { expectation, stderr, acceptance, mode, samples, seed }
    }
}

/// `|supp(nu)|^n`, saturating.
pub fn tuple_count(d: &BiasedDistribution, n: usize) -> u128 {
    let s = d.support_len() as u128;
    let mut total: u128 = 1;
    for _ in 0..n {
        total = total.saturating_mul(s);
    }
    total
}

/// Exact `E_{nu^{⊗n}}[prod_i f(X_i)]` by enumerating `supp(nu)^n`
/// (tensorized over blocks when `f` is a product of one-coordinate
/// functions).
pub fn product_expectation_exact(f: &CubeFunction, d: &BiasedDistribution, n: usize) -> Result<TestReport> {
    if f.n() != n {
        return Err(Error::Index(format!("function lives on n = {}, test asked for n = {n}", f.n())));
    }
    if let Some(factors) = f.product_factors() {
        let value = tensorized(&factors, d);
        return Ok(TestReport::new(f, value, 0.0, Mode::Exact, 0, 0));
    }
    let count = tuple_count(d, n);
    if count > EXACT_BUDGET {
        return Err(Error::TooLarge {
            what: "exact enumeration (|supp|^n support tuples; use Monte Carlo mode)".into(),
            value: count,
            limit: EXACT_BUDGET,
        });
    }
    let value = enumerate(f, d, n);
    Ok(TestReport::new(f, value, 0.0, Mode::Exact, 0, 0))
}

/// Groups exact rational masses by the (bitwise) value they multiply.
fn fold_masses(pairs: impl Iterator<Item = (f64, Rational)>) -> f64 {
    let mut by_value: BTreeMap<u64, Rational> = BTreeMap::new();
    for (v, m) in pairs {
        *by_value.entry(v.to_bits()).or_insert_with(Rational::zero) += m;
    }
    by_value.iter().map(|(bits, m)| f64::from_bits(*bits) * to_f64(m)).sum()
}

fn tensorized(factors: &[[f64; 2]], d: &BiasedDistribution) -> f64 {
    let k = d.k();
    factors
        .iter()
        .map(|fj| {
            fold_masses(d.probs().iter().map(|(&y, pr)| {
                let v: f64 = (0..k).map(|i| fj[coord(y, i, k) as usize]).product();
                (v, pr.clone())
            }))
        })
        .product()
}

/// Exact integer weight arithmetic; `u128` when `D^n` fits, otherwise big.
trait Weight: Clone + Zero + One + Send + Sync + for<'a> AddAssign<&'a Self> + for<'a> Mul<&'a Self, Output = Self> {
    fn to_bigint(&self) -> BigInt;
}

impl Weight for u128 {
    fn to_bigint(&self) -> BigInt {
        BigInt::from(*self)
    }
}

impl Weight for BigUint {
    fn to_bigint(&self) -> BigInt {
        BigInt::from(self.clone())
    }
}

struct Accumulator<W> {
    exact: BTreeMap<u64, W>,
    spill: f64,
}

impl<W: Weight> Accumulator<W> {
    fn new() -> Self {
        Accumulator { exact: BTreeMap::new(), spill: 0.0 }
    }

    fn add(&mut self, value: f64, w: &W, total: &BigInt) {
        *self.exact.entry(value.to_bits()).or_insert_with(W::zero) += w;
        if self.exact.len() > MAX_EXACT_KEYS {
            self.spill += self.flush(total);
        }
    }

    fn flush(&mut self, total: &BigInt) -> f64 {
        std::mem::take(&mut self.exact)
            .into_iter()
            .map(|(bits, w)| f64::from_bits(bits) * to_f64(&Rational::new(w.to_bigint(), total.clone())))
            .sum()
    }

    fn merge(&mut self, other: Accumulator<W>, total: &BigInt) {
        self.spill += other.spill;
        for (bits, w) in other.exact {
            let v = f64::from_bits(bits);
            self.add(v, &w, total);
        }
    }
}

fn enumerate(f: &CubeFunction, d: &BiasedDistribution, n: usize) -> f64 {
    let den = common_denominator(d.probs().values());
    let total = num_traits::pow(den.clone(), n);
    let support: Vec<u32> = d.support().collect();
    let nums: Vec<BigInt> = d.probs().values().map(|p| (p * Rational::from_integer(den.clone())).to_integer()).collect();
    if total.to_u128().is_some() {
        let w: Vec<u128> = nums.iter().map(|x| x.to_u128().expect("numerator below denominator")).collect();
        enumerate_with(f, d.k(), n, &support, &w, &total)
    } else {
        let w: Vec<BigUint> = nums.iter().map(|x| x.to_biguint().expect("nonnegative")).collect();
        enumerate_with(f, d.k(), n, &support, &w, &total)
    }
}

fn enumerate_with<W: Weight>(f: &CubeFunction, k: usize, n: usize, support: &[u32], w: &[W], total: &BigInt) -> f64 {
    if n == 0 {
        return f.eval(&CubePoint::zeros(0)).powi(k as i32);
    }
    let dense_index = n <= 32;
    // outer support element of block 0 splits the work
    let parts: Vec<Accumulator<W>> = (0..support.len())
        .into_par_iter()
        .map(|first| {
            let mut acc = Accumulator::new();
            let mut choice = vec![0usize; n];
            choice[0] = first;
            // partial weights and partial query indices per depth
            let mut weights: Vec<W> = vec![W::one(); n + 1];
            let mut idx: Vec<Vec<u32>> = vec![vec![0; k]; n + 1];
            let mut points: Vec<CubePoint> = vec![CubePoint::zeros(n); k];
            let mut depth = 0;
            loop {
                // descend, filling depths depth..n with the current choices
                while depth < n {
                    let y = support[choice[depth]];
                    weights[depth + 1] = weights[depth].clone() * &w[choice[depth]];
                    for i in 0..k {
                        let bit = coord(y, i, k) as u32;
                        idx[depth + 1][i] = if dense_index { idx[depth][i] | (bit << (n - 1 - depth)) } else { 0 };
                    }
                    depth += 1;
                }
                let value: f64 = if dense_index {
                    idx[n].iter().map(|&x| f.eval_index(x)).product()
                } else {
                    for (i, pt) in points.iter_mut().enumerate() {
                        for j in 0..n {
                            pt.set(j, coord(support[choice[j]], i, k) == 1);
                        }
                    }
                    points.iter().map(|pt| f.eval(pt)).product()
                };
                acc.add(value, &weights[n], total);
                // advance the mixed-radix counter, never touching block 0
                let mut j = n - 1;
                loop {
                    if j == 0 {
                        return acc;
                    }
                    choice[j] += 1;
                    if choice[j] < support.len() {
                        break;
                    }
                    choice[j] = 0;
                    j -= 1;
                }
                depth = j;
            }
        })
        .collect();
    let mut acc = Accumulator::new();
    for part in parts {
        acc.merge(part, total);
    }
    acc.spill + acc.flush(total)
}

/// Fills `points` with one draw of `(X_1, ..., X_k) ~ nu^{⊗n}`.
pub fn sample_queries<R: rand::RngCore>(rng: &mut R, sampler: &CumulativeSampler<u32>, k: usize, points: &mut [CubePoint]) {
    let n = points[0].n();
    for pt in points.iter_mut() {
        pt.clear();
    }
    for j in 0..n {
        let y = sampler.sample(rng);
        for (i, pt) in points.iter_mut().enumerate() {
            if coord(y, i, k) == 1 {
                pt.words_mut()[j / 64] |= 1u64 << (j % 64);
            }
        }
    }
}

pub fn block_sampler(d: &BiasedDistribution) -> CumulativeSampler<u32> {
    let items: Vec<(u32, Rational)> = d.probs().iter().map(|(&y, p)| (y, p.clone())).collect();
    CumulativeSampler::new(&items)
}

/// Monte Carlo `E_{nu^{⊗n}}[prod_i f(X_i)]`.
pub fn product_expectation_mc(f: &CubeFunction, d: &BiasedDistribution, n: usize, samples: u64, seed: u64) -> Result<TestReport> {
    if f.n() != n {
        return Err(Error::Index(format!("function lives on n = {}, test asked for n = {n}", f.n())));
    }
    if samples == 0 {
        return Err(Error::OutOfRange { what: "samples = 0".into(), admissible: "samples >= 1".into() });
    }
    let k = d.k();
    let sampler = block_sampler(d);
    let stats = mc::run_sharded(
        samples,
        seed,
        |rng, count| {
            let mut points = vec![CubePoint::zeros(n); k];
            let mut st = Stats::default();
            for _ in 0..count {
                sample_queries(rng, &sampler, k, &mut points);
                st.push(points.iter().map(|x| f.eval(x)).product());
            }
            st
        },
        |acc: &mut Stats, part| acc.merge(&part),
    );
    let e = stats.estimate();
    Ok(TestReport::new(f, e.estimate, e.stderr, Mode::MonteCarlo, samples, seed))
}

pub fn product_expectation(f: &CubeFunction, d: &BiasedDistribution, n: usize, mode: TestMode) -> Result<TestReport> {
    match mode {
        TestMode::Exact => product_expectation_exact(f, d, n),
        TestMode::MonteCarlo { samples, seed } => product_expectation_mc(f, d, n, samples, seed),
    }
}

/// The negated variant: queries are drawn from `nu'` and every coordinate is
/// flipped before `f` is evaluated, so each query is `mu_{1-p'}`-distributed.
pub fn negated_test(f: &CubeFunction, d_prime: &BiasedDistribution, n: usize, mode: TestMode) -> Result<TestReport> {
    product_expectation(&f.negate_inputs(), d_prime, n, mode)
}

/// Distribution of `r * sum_i Y_i mod (k - 1)` for `Y ~ nu`, kept exact.
#[derive(Clone, Debug, PartialEq)]
pub struct CharacterPass {
    pub k: usize,
    pub r: usize,
    /// `residue_mass[a] = P[r * |Y| ≡ a (mod k-1)]`.
    pub residue_mass: Vec<Rational>,
}

impl CharacterPass {
    /// True when the expectation is exactly 1.
    pub fn is_one(&self) -> bool {
        self.residue_mass[0].is_one()
    }

    pub fn to_complex(&self) -> Complex64 {
        let roots = roots_of_unity(self.k - 1);
        self.residue_mass.iter().zip(&roots).map(|(m, w)| w * to_f64(m)).sum()
    }
}

/// `E_{Y ~ nu}[omega^{r |Y|}]` without any precondition.
pub fn character_expectation(d: &BiasedDistribution, r: usize) -> Result<CharacterPass> {
    let k = d.k();
    if k < 3 {
        return Err(Error::InvalidArity { k, min: 3 });
    }
    if r > k - 2 {
        return Err(Error::Index(format!("r = {r} outside [0, {}]", k - 2)));
    }
    let m = k - 1;
    let mut residue_mass = vec![Rational::zero(); m];
    for (&y, pr) in d.probs() {
        residue_mass[(r * weight(y)) % m] += pr;
    }
    Ok(CharacterPass { k, r, residue_mass })
}

/// Checks that every support weight `w` has `r w ≡ 0 (mod k-1)` and returns
/// the (then exactly 1) expectation.
pub fn character_pass_check(d: &BiasedDistribution, r: usize) -> Result<CharacterPass> {
    let out = character_expectation(d, r)?;
    let m = d.k() - 1;
    if let Some(w) = d.support().map(weight).find(|w| !(r * w).is_multiple_of(m)) {
        return Err(Error::CharacterPrecondition { weight: w, r, modulus: m });
    }
    Ok(out)
}
