//! Functions on `{0,1}^n`, characters, and p-biased correlations.
//!
//! Dense tables index points with coordinate 1 as the most significant bit,
//! the same convention as distribution files.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::RngCore;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mc::{self, Bernoulli, McEstimate, Stats};
use crate::rational::{to_f64, Rational};

/// Largest `n` with a dense table.
pub const MAX_DENSE_N: usize = 24;
/// Largest `n` for complex character correlations.
pub const MAX_ZK_N: usize = 20;

/// A point of `{0,1}^n`; coordinate `j` (0-based) lives at bit `j % 64` of
/// word `j / 64`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CubePoint {
    n: usize,
    words: Vec<u64>,
}

fn word_count(n: usize) -> usize {
    n.div_ceil(64).max(1)
}

impl CubePoint {
    pub fn zeros(n: usize) -> Self {
        CubePoint { n, words: vec![0; word_count(n)] }
    }

    pub fn from_bits(bits: &[u8]) -> Self {
        let mut x = Self::zeros(bits.len());
        for (j, &b) in bits.iter().enumerate() {
            x.set(j, b != 0);
        }
        x
    }

    /// Inverse of [`CubePoint::to_index`].
    pub fn from_index(index: u32, n: usize) -> Self {
        let mut x = Self::zeros(n);
        for j in 0..n {
            x.set(j, (index >> (n - 1 - j)) & 1 == 1);
        }
        x
    }

    /// Dense-table index (coordinate 1 most significant); `n <= 32`.
    pub fn to_index(&self) -> u32 {
        debug_assert!(self.n <= 32);
        if self.n == 0 {
            return 0;
        }
        ((self.words[0] as u32).reverse_bits()) >> (32 - self.n)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub(crate) fn words_mut(&mut self) -> &mut [u64] {
        &mut self.words
    }

    #[inline]
    pub fn get(&self, j: usize) -> bool {
        (self.words[j / 64] >> (j % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, j: usize, bit: bool) {
        let m = 1u64 << (j % 64);
        if bit {
            self.words[j / 64] |= m;
        } else {
            self.words[j / 64] &= !m;
        }
    }

    pub fn clear(&mut self) {
        self.words.iter_mut().for_each(|w| *w = 0);
    }

    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Every coordinate flipped.
    pub fn negated(&self) -> Self {
        let mut out = self.clone();
        for w in out.words.iter_mut() {
            *w = !*w;
        }
        out.mask_tail();
        out
    }

    pub fn xor(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (a, b) in out.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
        out
    }

    fn mask_tail(&mut self) {
        let r = self.n % 64;
        if r != 0 {
            let last = self.words.len() - 1;
            self.words[last] &= (1u64 << r) - 1;
        } else if self.n == 0 {
            self.words[0] = 0;
        }
    }
}

/// A subset `S` of `[n]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CharacterIndex {
    mask: CubePoint,
    coords: Vec<usize>,
}

impl CharacterIndex {
    /// From 0-based coordinates.
    pub fn from_coords(n: usize, coords: &[usize]) -> Result<Self> {
        let mut mask = CubePoint::zeros(n);
        for &j in coords {
            if j >= n {
                return Err(Error::Index(format!("coordinate {} outside [1, {n}]", j + 1)));
            }
            mask.set(j, true);
        }
        Ok(Self::from_point(mask))
    }

    pub fn from_point(mask: CubePoint) -> Self {
        let coords = (0..mask.n()).filter(|&j| mask.get(j)).collect();
        CharacterIndex { mask, coords }
    }

    /// From a table-convention bitmask (coordinate 1 most significant).
    pub fn from_table_mask(n: usize, mask: u64) -> Result<Self> {
        if n < 64 && mask >> n != 0 {
            return Err(Error::Index(format!("mask {mask:#b} does not fit in {n} bits")));
        }
        let coords: Vec<usize> = (0..n.min(64)).filter(|&j| (mask >> (n - 1 - j)) & 1 == 1).collect();
        Self::from_coords(n, &coords)
    }

    pub fn empty(n: usize) -> Self {
        Self::from_point(CubePoint::zeros(n))
    }

    pub fn full(n: usize) -> Self {
        Self::from_point(CubePoint::zeros(n).negated())
    }

    pub fn n(&self) -> usize {
        self.mask.n()
    }

    /// 0-based members, increasing.
    pub fn coords(&self) -> &[usize] {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn table_mask(&self) -> u32 {
        self.mask.to_index()
    }

    /// Parity of `|S ∩ x|`.
    #[inline]
    pub fn parity(&self, x: &CubePoint) -> bool {
        if self.coords.len() <= 8 {
            self.coords.iter().fold(false, |acc, &j| acc ^ x.get(j))
        } else {
            let ones: u32 = self.mask.words.iter().zip(&x.words).map(|(a, b)| (a & b).count_ones()).sum();
            ones % 2 == 1
        }
    }

    /// `chi_S(x) = (-1)^{sum_{i in S} x_i}`.
    #[inline]
    pub fn chi(&self, x: &CubePoint) -> f64 {
        if self.parity(x) {
            -1.0
        } else {
            1.0
        }
    }

    pub fn symmetric_difference(&self, other: &Self) -> Self {
        Self::from_point(self.mask.xor(&other.mask))
    }
}

impl fmt::Display for CharacterIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<String> = self.coords.iter().map(|j| (j + 1).to_string()).collect();
        write!(f, "{{{}}}", items.join(","))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RangeTag {
    /// `[-1, 1]`
    Interval,
    /// `{-1, 1}`
    Signs,
}

pub type EvalHandle = Arc<dyn Fn(&CubePoint) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum FunctionKind {
    /// `2^n` values in table order.
    Dense(Arc<Vec<f64>>),
    /// `sign * chi_S`.
    Character { set: CharacterIndex, sign: f64 },
    /// `prod_j factors[j][x_j]`.
    Product(Arc<Vec<[f64; 2]>>),
    /// Depends only on the Hamming weight; `n + 1` values.
    Symmetric(Arc<Vec<f64>>),
    /// Opaque pure evaluation.
    Handle(EvalHandle),
}

#[derive(Clone)]
pub struct CubeFunction {
    n: usize,
    kind: FunctionKind,
    range: RangeTag,
}

impl fmt::Debug for CubeFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.kind {
            FunctionKind::Dense(_) => "dense",
            FunctionKind::Character { .. } => "character",
            FunctionKind::Product(_) => "product",
            FunctionKind::Symmetric(_) => "symmetric",
            FunctionKind::Handle(_) => "handle",
        };
        f.debug_struct("CubeFunction").field("n", &self.n).field("kind", &kind).field("range", &self.range).finish()
    }
}

fn check_values(values: &[f64], range: RangeTag) -> Result<()> {
    for (i, &v) in values.iter().enumerate() {
        let ok = match range {
            RangeTag::Interval => (-1.0..=1.0).contains(&v),
            RangeTag::Signs => v == 1.0 || v == -1.0,
        };
        if !ok {
            return Err(Error::OutOfRange { what: format!("function value {v} at entry {i}"), admissible: range_name(range).into() });
        }
    }
    Ok(())
}

fn range_name(r: RangeTag) -> &'static str {
    match r {
        RangeTag::Interval => "[-1, 1]",
        RangeTag::Signs => "{-1, 1}",
    }
}

fn infer_range(values: &[f64]) -> RangeTag {
    if values.iter().all(|&v| v == 1.0 || v == -1.0) {
        RangeTag::Signs
    } else {
        RangeTag::Interval
    }
}

impl CubeFunction {
    /// Dense table; the range tag is `Signs` when every value is `±1`.
    pub fn dense(n: usize, values: Vec<f64>) -> Result<Self> {
        if n > MAX_DENSE_N {
            return Err(Error::TooLarge { what: "dense table dimension".into(), value: n as u128, limit: MAX_DENSE_N as u128 });
        }
        if values.len() != 1usize << n {
            return Err(Error::InvalidDistribution(format!(
                "dense table for n = {n} needs {} values, got {}",
                1usize << n,
                values.len()
            )));
        }
        check_values(&values, RangeTag::Interval)?;
        let range = infer_range(&values);
        Ok(CubeFunction { n, kind: FunctionKind::Dense(Arc::new(values)), range })
    }

    pub fn constant(n: usize, c: f64) -> Result<Self> {
        Self::symmetric(n, vec![c; n + 1])
    }

    /// `prod_j factors[j][x_j]`.
    pub fn product(n: usize, factors: Vec<[f64; 2]>) -> Result<Self> {
        if factors.len() != n {
            return Err(Error::Index(format!("product function needs {n} factors, got {}", factors.len())));
        }
        let flat: Vec<f64> = factors.iter().flat_map(|f| f.iter().copied()).collect();
        check_values(&flat, RangeTag::Interval)?;
        let range = infer_range(&flat);
        Ok(CubeFunction { n, kind: FunctionKind::Product(Arc::new(factors)), range })
    }

    /// Function of the Hamming weight: `values[w]`, `w = 0..=n`.
    pub fn symmetric(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n + 1 {
            return Err(Error::Index(format!("symmetric function needs {} values, got {}", n + 1, values.len())));
        }
        check_values(&values, RangeTag::Interval)?;
        let range = infer_range(&values);
        Ok(CubeFunction { n, kind: FunctionKind::Symmetric(Arc::new(values)), range })
    }

    /// Wraps a pure evaluation; the caller vouches for the range.
    pub fn handle(n: usize, range: RangeTag, eval: EvalHandle) -> Self {
        CubeFunction { n, kind: FunctionKind::Handle(eval), range }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> &FunctionKind {
        &self.kind
    }

    pub fn range(&self) -> RangeTag {
        self.range
    }

    pub fn is_handle(&self) -> bool {
        matches!(self.kind, FunctionKind::Handle(_))
    }

    #[inline]
    pub fn eval(&self, x: &CubePoint) -> f64 {
        match &self.kind {
            FunctionKind::Dense(t) => t[x.to_index() as usize],
            FunctionKind::Character { set, sign } => sign * set.chi(x),
            FunctionKind::Product(fs) => fs.iter().enumerate().map(|(j, f)| f[x.get(j) as usize]).product(),
            FunctionKind::Symmetric(v) => v[x.weight()],
            FunctionKind::Handle(h) => h(x),
        }
    }

    /// Evaluation at a dense-table index; `n <= 32`.
    #[inline]
    pub fn eval_index(&self, index: u32) -> f64 {
        match &self.kind {
            FunctionKind::Dense(t) => t[index as usize],
            FunctionKind::Symmetric(v) => v[index.count_ones() as usize],
            FunctionKind::Character { set, sign } => {
                if (index & set.table_mask()).count_ones() % 2 == 1 {
                    -sign
                } else {
                    *sign
                }
            }
            _ => self.eval(&CubePoint::from_index(index, self.n)),
        }
    }

    /// The full table; errors on handles and on `n > 24`.
    pub fn to_dense(&self) -> Result<Arc<Vec<f64>>> {
        if let FunctionKind::Dense(t) = &self.kind {
            return Ok(t.clone());
        }
        if self.is_handle() {
            return Err(Error::Mode("exact evaluation needs a dense table; this function is an evaluation handle".into()));
        }
        if self.n > MAX_DENSE_N {
            return Err(Error::TooLarge { what: "dense table dimension".into(), value: self.n as u128, limit: MAX_DENSE_N as u128 });
        }
        let size = 1u32 << self.n;
        Ok(Arc::new((0..size).into_par_iter().map(|i| self.eval_index(i)).collect()))
    }

    /// Materializes non-handle functions as dense tables.
    pub fn densified(&self) -> Result<Self> {
        let t = self.to_dense()?;
        Ok(CubeFunction { n: self.n, kind: FunctionKind::Dense(t), range: self.range })
    }

    /// Wraps any function as an opaque handle.
    pub fn as_handle(&self) -> Self {
        let inner = self.clone();
        Self::handle(self.n, self.range, Arc::new(move |x| inner.eval(x)))
    }

    /// `x -> f(1 - x)` (every input coordinate flipped).
    pub fn negate_inputs(&self) -> Self {
        let n = self.n;
        let kind = match &self.kind {
            FunctionKind::Dense(t) => {
                let all = if n == 0 { 0 } else { (1usize << n) - 1 };
                FunctionKind::Dense(Arc::new((0..t.len()).map(|i| t[i ^ all]).collect()))
            }
            FunctionKind::Character { set, sign } => {
                let s = if set.len() % 2 == 1 { -sign } else { *sign };
                FunctionKind::Character { set: set.clone(), sign: s }
            }
            FunctionKind::Product(fs) => FunctionKind::Product(Arc::new(fs.iter().map(|f| [f[1], f[0]]).collect())),
            FunctionKind::Symmetric(v) => FunctionKind::Symmetric(Arc::new(v.iter().rev().copied().collect())),
            FunctionKind::Handle(h) => {
                let h = h.clone();
                FunctionKind::Handle(Arc::new(move |x: &CubePoint| h(&x.negated())))
            }
        };
        CubeFunction { n, kind, range: self.range }
    }

    /// Per-coordinate factors when the function is a product of
    /// single-coordinate functions.
    pub fn product_factors(&self) -> Option<Vec<[f64; 2]>> {
        match &self.kind {
            FunctionKind::Product(fs) => Some(fs.as_ref().clone()),
            FunctionKind::Character { set, sign } => {
                let mut fs = vec![[1.0, 1.0]; self.n];
                for &j in set.coords() {
                    fs[j] = [1.0, -1.0];
                }
                if let Some(first) = fs.first_mut() {
                    first[0] *= sign;
                    first[1] *= sign;
                }
                Some(fs)
            }
            _ => None,
        }
    }
}

/// `chi_S` on `{0,1}^n`.
pub fn character(s: &CharacterIndex, n: usize) -> Result<CubeFunction> {
    if s.n() != n {
        return Err(Error::Index(format!("character index lives in dimension {}, expected {n}", s.n())));
    }
    Ok(CubeFunction { n, kind: FunctionKind::Character { set: s.clone(), sign: 1.0 }, range: RangeTag::Signs })
}

/// `sign * chi_S` with `sign = ±1`.
pub fn signed_character(s: &CharacterIndex, n: usize, negative: bool) -> Result<CubeFunction> {
    let mut f = character(s, n)?;
    if negative {
        f.kind = FunctionKind::Character { set: s.clone(), sign: -1.0 };
    }
    Ok(f)
}

/// `mu_p(x)` for every weight `0..=n`.
fn weight_masses(n: usize, p: f64) -> Vec<f64> {
    (0..=n).map(|w| p.powi(w as i32) * (1.0 - p).powi((n - w) as i32)).collect()
}

/// `E_{x ~ mu_p}[f(x) chi_S(x)]`, summed over the full table.
pub fn biased_correlation(f: &CubeFunction, s: &CharacterIndex, p: &Rational) -> Result<f64> {
    let table = f.to_dense()?;
    if s.n() != f.n() {
        return Err(Error::Index(format!("character index lives in dimension {}, expected {}", s.n(), f.n())));
    }
    let masses = weight_masses(f.n(), to_f64(p));
    let mask = s.table_mask();
    Ok((0..table.len() as u32)
        .into_par_iter()
        .with_min_len(4096)
        .map(|x| {
            let v = masses[x.count_ones() as usize] * table[x as usize];
            if (x & mask).count_ones() % 2 == 1 {
                -v
            } else {
                v
            }
        })
        .sum())
}

/// Every biased correlation at once, indexed by table mask, via the
/// Walsh-Hadamard transform of `mu_p * f`.
pub fn biased_spectrum(f: &CubeFunction, p: &Rational) -> Result<Vec<f64>> {
    let table = f.to_dense()?;
    let masses = weight_masses(f.n(), to_f64(p));
    let mut a: Vec<f64> = table.iter().enumerate().map(|(x, v)| masses[(x as u32).count_ones() as usize] * v).collect();
    walsh_hadamard(&mut a);
    Ok(a)
}

/// In-place unnormalized Walsh-Hadamard transform.
pub fn walsh_hadamard(a: &mut [f64]) {
    let len = a.len();
    debug_assert!(len.is_power_of_two());
    let mut h = 1;
    while h < len {
        a.par_chunks_mut(2 * h).for_each(|chunk| {
            let (lo, hi) = chunk.split_at_mut(h);
            for (u, v) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*u, *v);
                *u = x + y;
                *v = x - y;
            }
        });
        h *= 2;
    }
}

/// Fills `x` with independent `mu_p` coordinates.
#[inline]
pub fn sample_biased_point<R: RngCore>(rng: &mut R, bern: &Bernoulli, x: &mut CubePoint) {
    let n = x.n();
    x.clear();
    let words = x.words_mut();
    for j in 0..n {
        if bern.sample(rng) {
            words[j / 64] |= 1u64 << (j % 64);
        }
    }
}

/// Monte Carlo `E_{mu_p}[f chi_S]`.
pub fn mc_biased_correlation(f: &CubeFunction, s: &CharacterIndex, p: &Rational, samples: u64, seed: u64) -> Result<McEstimate> {
    Ok(mc_biased_correlations(f, std::slice::from_ref(s), p, samples, seed)?.remove(0))
}

/// Monte Carlo correlations against several characters sharing one sample
/// stream.
pub fn mc_biased_correlations(
    f: &CubeFunction,
    sets: &[CharacterIndex],
    p: &Rational,
    samples: u64,
    seed: u64,
) -> Result<Vec<McEstimate>> {
    let n = f.n();
    if let Some(bad) = sets.iter().find(|s| s.n() != n) {
        return Err(Error::Index(format!("character index lives in dimension {}, expected {n}", bad.n())));
    }
    let bern = Bernoulli::new(p);
    let stats = mc::run_sharded(
        samples,
        seed,
        |rng, count| {
            let mut x = CubePoint::zeros(n);
            let mut acc = vec![Stats::default(); sets.len()];
            for _ in 0..count {
                sample_biased_point(rng, &bern, &mut x);
                let v = f.eval(&x);
                for (st, s) in acc.iter_mut().zip(sets) {
                    st.push(v * s.chi(&x));
                }
            }
            acc
        },
        |acc: &mut Vec<Stats>, part| {
            if acc.is_empty() {
                *acc = part;
            } else {
                acc.iter_mut().zip(&part).for_each(|(a, b)| a.merge(b));
            }
        },
    );
    Ok(stats.iter().map(Stats::estimate).collect())
}

/// Monte Carlo `E_{mu_p}[f]`.
pub fn mc_biased_mean(f: &CubeFunction, p: &Rational, samples: u64, seed: u64) -> Result<McEstimate> {
    mc_biased_correlation(f, &CharacterIndex::empty(f.n()), p, samples, seed)
}

/// The product character `omega^{sum_j r_j x_j}` with `omega = exp(2 pi i / (k-1))`.
#[derive(Clone, Debug)]
pub struct ZkCharacter {
    k: usize,
    r: Vec<usize>,
    roots: Vec<Complex64>,
}

impl ZkCharacter {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn r(&self) -> &[usize] {
        &self.r
    }

    pub fn n(&self) -> usize {
        self.r.len()
    }

    pub fn exponent(&self, x: &CubePoint) -> usize {
        self.r.iter().enumerate().filter(|(j, _)| x.get(*j)).map(|(_, r)| r).sum::<usize>() % (self.k - 1)
    }

    pub fn eval(&self, x: &CubePoint) -> Complex64 {
        self.roots[self.exponent(x)]
    }
}

/// `(k-1)`-th roots of unity, `omega^0..omega^{k-2}`.
pub fn roots_of_unity(m: usize) -> Vec<Complex64> {
    (0..m)
        .map(|a| match (2 * a) % m {
            // exact values where they exist
            0 if a == 0 => Complex64::new(1.0, 0.0),
            0 => Complex64::new(-1.0, 0.0),
            _ => Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * a as f64 / m as f64),
        })
        .collect()
}

pub fn zk_character(r: &[usize], k: usize, n: usize) -> Result<ZkCharacter> {
    if k < 3 {
        return Err(Error::InvalidArity { k, min: 3 });
    }
    if r.len() != n {
        return Err(Error::Index(format!("r has length {}, expected n = {n}", r.len())));
    }
    if let Some((j, v)) = r.iter().enumerate().find(|(_, &v)| v > k - 2) {
        return Err(Error::Index(format!("r entry {} = {v} outside [0, {}]", j + 1, k - 2)));
    }
    Ok(ZkCharacter { k, r: r.to_vec(), roots: roots_of_unity(k - 1) })
}

/// `E_{mu_p}[f(x) phi_r(x)]`.
pub fn zk_correlation(f: &CubeFunction, r: &[usize], k: usize, p: &Rational) -> Result<Complex64> {
    let n = f.n();
    if n > MAX_ZK_N {
        return Err(Error::TooLarge { what: "character correlation dimension".into(), value: n as u128, limit: MAX_ZK_N as u128 });
    }
    let phi = zk_character(r, k, n)?;
    let table = f.to_dense()?;
    let masses = weight_masses(n, to_f64(p));
    Ok((0..table.len() as u32)
        .into_par_iter()
        .with_min_len(4096)
        .map(|i| {
            let x = CubePoint::from_index(i, n);
            phi.eval(&x) * (masses[i.count_ones() as usize] * table[i as usize])
        })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_table(n: usize, seed: u64, signs: bool) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..1usize << n)
            .map(|_| if signs { if rng.random::<bool>() { 1.0 } else { -1.0 } } else { rng.random_range(-1.0..=1.0) })
            .collect()
    }

    /// Plain enumeration with rational point masses, independent of the
    /// weight-table path.
    fn oracle_correlation(table: &[f64], n: usize, mask: u32, p: &Rational) -> f64 {
        let mut total = 0.0;
        for x in 0..(1u32 << n) {
            let mut m = Rational::from_integer(1.into());
            for j in 0..n {
                m *= if (x >> j) & 1 == 1 { p.clone() } else { crate::rational::int(1) - p };
            }
            let sign = if (x & mask).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            total += to_f64(&m) * table[x as usize] * sign;
        }
        total
    }

    #[test]
    fn point_index_roundtrip() {
        for i in 0..64u32 {
            assert_eq!(CubePoint::from_index(i, 6).to_index(), i);
        }
        let x = CubePoint::from_bits(&[1, 0, 0]);
        assert_eq!(x.to_index(), 0b100);
        assert_eq!(x.negated().to_index(), 0b011);
        let big = CubePoint::zeros(130).negated();
        assert_eq!(big.weight(), 130);
    }

    #[test]
    fn character_basics() {
        let n = 3;
        let empty = character(&CharacterIndex::empty(n), n).unwrap();
        assert!((0..8).all(|i| empty.eval_index(i) == 1.0));
        let s1 = CharacterIndex::from_coords(n, &[0]).unwrap();
        let chi1 = character(&s1, n).unwrap();
        assert_eq!(chi1.eval(&CubePoint::from_bits(&[1, 0, 0])), -1.0);
        assert_eq!(CharacterIndex::from_table_mask(3, 0b100).unwrap(), s1);
        assert!(CharacterIndex::from_table_mask(3, 0b1000).is_err());
    }

    #[test]
    fn character_group_laws() {
        let n = 4;
        for sm in 0..16u64 {
            for tm in 0..16u64 {
                let s = CharacterIndex::from_table_mask(n, sm).unwrap();
                let t = CharacterIndex::from_table_mask(n, tm).unwrap();
                let st = s.symmetric_difference(&t);
                for xi in 0..16u32 {
                    let x = CubePoint::from_index(xi, n);
                    assert_eq!(s.chi(&x) * t.chi(&x), st.chi(&x));
                }
            }
        }
        // homomorphism in x, exhaustive at n = 3
        for sm in 0..8u64 {
            let s = CharacterIndex::from_table_mask(3, sm).unwrap();
            for a in 0..8 {
                for b in 0..8 {
                    let (x, y) = (CubePoint::from_index(a, 3), CubePoint::from_index(b, 3));
                    assert_eq!(s.chi(&x) * s.chi(&y), s.chi(&x.xor(&y)));
                }
            }
        }
    }

    #[test]
    fn large_character_parity_paths_agree() {
        let n = 200;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let coords: Vec<usize> = (0..n).filter(|_| rng.random::<bool>()).collect();
        let s = CharacterIndex::from_coords(n, &coords).unwrap();
        for _ in 0..20 {
            let bits: Vec<u8> = (0..n).map(|_| rng.random::<bool>() as u8).collect();
            let x = CubePoint::from_bits(&bits);
            let want = coords.iter().map(|&j| bits[j] as u32).sum::<u32>() % 2 == 1;
            assert_eq!(s.parity(&x), want);
        }
    }

    #[test]
    fn correlation_examples() {
        let n = 5;
        let p = rat(1, 3);
        let s = CharacterIndex::from_coords(n, &[1, 3]).unwrap();
        let chi = character(&s, n).unwrap();
        assert!((biased_correlation(&chi, &s, &p).unwrap() - 1.0).abs() < 1e-12);
        let one = CubeFunction::constant(n, 1.0).unwrap();
        let single = CharacterIndex::from_coords(n, &[2]).unwrap();
        assert!((biased_correlation(&one, &single, &p).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        let h = chi.as_handle();
        assert!(matches!(biased_correlation(&h, &s, &p), Err(Error::Mode(_))));
    }

    #[test]
    fn correlation_matches_oracle_and_spectrum() {
        let n = 8;
        let p = rat(2, 7);
        for seed in 0..10u64 {
            let table = random_table(n, seed, false);
            let f = CubeFunction::dense(n, table.clone()).unwrap();
            let spec = biased_spectrum(&f, &p).unwrap();
            let mask = ((seed * 37) % 256) as u32;
            let s = CharacterIndex::from_table_mask(n, mask as u64).unwrap();
            let direct = biased_correlation(&f, &s, &p).unwrap();
            assert!((direct - oracle_correlation(&table, n, mask, &p)).abs() < 1e-12);
            assert!((direct - spec[mask as usize]).abs() < 1e-12);
        }
    }

    #[test]
    fn random_sign_table_has_small_correlations() {
        let n = 12;
        let f = CubeFunction::dense(n, random_table(n, 99, true)).unwrap();
        let spec = biased_spectrum(&f, &rat(1, 2)).unwrap();
        assert!(spec.iter().skip(1).take(50).all(|v| v.abs() <= 0.1));
    }

    #[test]
    fn spectrum_of_constant_and_characters() {
        let n = 4;
        let p = rat(1, 5);
        let spec = biased_spectrum(&CubeFunction::constant(n, 1.0).unwrap(), &p).unwrap();
        for (mask, v) in spec.iter().enumerate() {
            let want = 0.6f64.powi((mask as u32).count_ones() as i32);
            assert!((v - want).abs() < 1e-12);
        }
        let t = CharacterIndex::from_table_mask(n, 0b0110).unwrap();
        let spec = biased_spectrum(&character(&t, n).unwrap(), &rat(1, 2)).unwrap();
        for (mask, v) in spec.iter().enumerate() {
            let want = if mask == 0b0110 { 1.0 } else { 0.0 };
            assert!((v - want).abs() < 1e-12);
        }
    }

    #[test]
    fn parseval_at_half() {
        for n in [3, 7, 10] {
            let table = random_table(n, n as u64, false);
            let f = CubeFunction::dense(n, table.clone()).unwrap();
            let spec = biased_spectrum(&f, &rat(1, 2)).unwrap();
            let lhs: f64 = spec.iter().map(|v| v * v).sum();
            let rhs: f64 = table.iter().map(|v| v * v).sum::<f64>() / table.len() as f64;
            assert!((lhs - rhs).abs() < 1e-10);
        }
    }

    #[test]
    fn spectrum_is_linear() {
        let n = 6;
        let p = rat(3, 4);
        let a = random_table(n, 1, false);
        let b = random_table(n, 2, false);
        let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| (x + y) / 2.0).collect();
        let sa = biased_spectrum(&CubeFunction::dense(n, a).unwrap(), &p).unwrap();
        let sb = biased_spectrum(&CubeFunction::dense(n, b).unwrap(), &p).unwrap();
        let ss = biased_spectrum(&CubeFunction::dense(n, sum).unwrap(), &p).unwrap();
        for i in 0..sa.len() {
            assert!((ss[i] - (sa[i] + sb[i]) / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mc_correlation_examples() {
        let n = 30;
        let p = rat(1, 3);
        let s = CharacterIndex::from_coords(n, &[0, 7, 29]).unwrap();
        let chi = character(&s, n).unwrap().as_handle();
        let e = mc_biased_correlation(&chi, &s, &p, 5000, 1).unwrap();
        assert_eq!((e.estimate, e.stderr), (1.0, 0.0));
        let zero = CubeFunction::constant(n, 0.0).unwrap();
        assert_eq!(mc_biased_correlation(&zero, &s, &p, 5000, 1).unwrap().estimate, 0.0);
    }

    #[test]
    fn mc_correlation_matches_exact() {
        let n = 12;
        let p = rat(2, 5);
        let f = CubeFunction::dense(n, random_table(n, 4, false)).unwrap();
        let s = CharacterIndex::from_table_mask(n, 0).unwrap();
        let exact = biased_correlation(&f, &s, &p).unwrap();
        let h = f.as_handle();
        for seed in 0..10 {
            let e = mc_biased_correlation(&h, &s, &p, 20_000, seed).unwrap();
            assert!(e.within(exact, 4.0), "seed {seed}: {e:?} vs {exact}");
        }
    }

    #[test]
    fn negate_inputs_all_kinds() {
        let n = 5;
        let s = CharacterIndex::from_coords(n, &[0, 2, 4]).unwrap();
        let kinds = vec![
            CubeFunction::dense(n, random_table(n, 8, false)).unwrap(),
            character(&s, n).unwrap(),
            CubeFunction::product(n, vec![[0.5, -0.25], [1.0, 0.5], [-1.0, 1.0], [0.1, 0.2], [0.9, -0.9]]).unwrap(),
            CubeFunction::symmetric(n, vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5]).unwrap(),
        ];
        for f in kinds {
            let g = f.negate_inputs();
            let h = f.as_handle().negate_inputs();
            for i in 0..32u32 {
                let x = CubePoint::from_index(i, n);
                let want = f.eval(&x.negated());
                assert_eq!(g.eval(&x), want);
                assert_eq!(h.eval(&x), want);
                assert_eq!(g.eval_index(i), want);
            }
        }
    }

    #[test]
    fn product_factors_reproduce_function() {
        let n = 4;
        let s = CharacterIndex::from_coords(n, &[1, 3]).unwrap();
        let f = signed_character(&s, n, true).unwrap();
        let fs = f.product_factors().unwrap();
        for i in 0..16u32 {
            let x = CubePoint::from_index(i, n);
            let v: f64 = fs.iter().enumerate().map(|(j, a)| a[x.get(j) as usize]).product();
            assert_eq!(v, f.eval(&x));
        }
    }

    #[test]
    fn dense_validation() {
        assert!(CubeFunction::dense(2, vec![0.0; 3]).is_err());
        assert!(CubeFunction::dense(1, vec![0.0, 1.5]).is_err());
        assert_eq!(CubeFunction::dense(1, vec![1.0, -1.0]).unwrap().range(), RangeTag::Signs);
        assert_eq!(CubeFunction::dense(1, vec![0.5, -1.0]).unwrap().range(), RangeTag::Interval);
    }

    #[test]
    fn zk_examples() {
        let k = 5;
        let n = 6;
        let zero = zk_character(&[0; 6], k, n).unwrap();
        assert!((0..64).all(|i| zero.eval(&CubePoint::from_index(i, n)) == Complex64::new(1.0, 0.0)));
        let phi = zk_character(&[1, 3, 2, 0, 3, 1], k, n).unwrap();
        assert!((0..64).all(|i| (phi.eval(&CubePoint::from_index(i, n)).norm() - 1.0).abs() < 1e-12));
        assert!(zk_character(&[4, 0], 5, 2).is_err());
        assert!(zk_character(&[0], 2, 1).is_err());
        // k = 3 reduces to chi_S
        let r = [1, 0, 1];
        let phi3 = zk_character(&r, 3, 3).unwrap();
        let s = CharacterIndex::from_coords(3, &[0, 2]).unwrap();
        for i in 0..8 {
            let x = CubePoint::from_index(i, 3);
            assert_eq!(phi3.eval(&x), Complex64::new(s.chi(&x), 0.0));
        }
    }

    #[test]
    fn zk_multiplicative_in_r() {
        let (k, n) = (5, 3);
        let rs: Vec<Vec<usize>> = (0..64).map(|c| vec![c % 4, (c / 4) % 4, (c / 16) % 4]).collect();
        for a in &rs {
            for b in rs.iter().step_by(7) {
                let sum: Vec<usize> = a.iter().zip(b).map(|(x, y)| (x + y) % (k - 1)).collect();
                let (pa, pb, ps) = (zk_character(a, k, n).unwrap(), zk_character(b, k, n).unwrap(), zk_character(&sum, k, n).unwrap());
                for i in 0..8 {
                    let x = CubePoint::from_index(i, n);
                    assert!((pa.eval(&x) * pb.eval(&x) - ps.eval(&x)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn zk_correlation_examples() {
        let (k, n) = (5, 4);
        let p = rat(3, 4);
        let one = CubeFunction::constant(n, 1.0).unwrap();
        let c = zk_correlation(&one, &[0, 0, 0, 0], k, &p).unwrap();
        assert!((c - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        let c = zk_correlation(&one, &[0, 3, 0, 0], k, &p).unwrap();
        let want = Complex64::new(0.25, 0.0) + roots_of_unity(4)[3] * 0.75;
        assert!((c - want).norm() < 1e-12);
        let r = [1, 1, 0, 1];
        let s = CharacterIndex::from_coords(n, &[0, 1, 3]).unwrap();
        let f = character(&s, n).unwrap();
        let c = zk_correlation(&f, &r, 3, &rat(1, 3)).unwrap();
        assert!((c - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }
}
