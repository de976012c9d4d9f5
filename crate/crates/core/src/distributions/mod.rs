//! Distributions in `D(p, k)`: even-weight support, `mu_p` marginals, exact
//! rational probabilities.
//!
//! Points of `{0,1}^k` are stored as `u32` indices with coordinate 1 in the
//! most significant position, so the bit string `"1000"` (k = 4) is index 8.

mod blr;
mod construct;
mod feasibility;

pub use blr::{contains_blr, span_is_even_weight_space, BlrWitness};
pub use construct::{
    make_case_distribution, make_composed_distribution, make_dfh19,
    make_full_support_perturbation, make_pairwise_independent, make_uniform_even_weight,
};
pub use feasibility::{feasibility_search, symmetric_constraints, FeasibilityCertificate};

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{binomial_q, check_open_unit, format_rational, Rational};

/// Largest `k` for which probability tables are materialized.
pub const MAX_TABLE_K: usize = 24;

#[derive(Clone, Debug, PartialEq)]
pub struct BiasedDistribution {
    k: usize,
    p: Rational,
    probs: BTreeMap<u32, Rational>,
    q: Option<Vec<Rational>>,
}

/// Value of coordinate `i` (0-based) of point `x` in a `k`-bit table.
#[inline]
pub fn coord(x: u32, i: usize, k: usize) -> u8 {
    ((x >> (k - 1 - i)) & 1) as u8
}

#[inline]
pub fn weight(x: u32) -> usize {
    x.count_ones() as usize
}

/// Bit string with coordinate 1 leftmost.
pub fn bit_string(x: u32, k: usize) -> String {
    (0..k).map(|i| if coord(x, i, k) == 1 { '1' } else { '0' }).collect()
}

pub fn parse_bit_string(s: &str, k: usize) -> Result<u32> {
    if s.len() != k || !s.bytes().all(|b| b == b'0' || b == b'1') {
        return Err(Error::Parse(format!("'{s}' is not a {k}-bit string")));
    }
    Ok(s.bytes().fold(0u32, |acc, b| (acc << 1) | u32::from(b - b'0')))
}

pub(crate) fn check_table_k(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidArity { k, min: 1 });
    }
    if k > MAX_TABLE_K {
        return Err(Error::TooLarge {
            what: "k".into(),
            value: k as u128,
            limit: MAX_TABLE_K as u128,
        });
    }
    Ok(())
}

impl BiasedDistribution {
    /// Validates and builds a distribution. Zero entries are dropped; the
    /// Hamming profile `q` is attached whenever the table is constant on
    /// weight classes.
    pub fn new(k: usize, p: Rational, probs: BTreeMap<u32, Rational>) -> Result<Self> {
        check_table_k(k)?;
        check_open_unit(&p, "p")?;
        let mut clean = BTreeMap::new();
        let mut total = Rational::zero();
        let mut marginals = vec![Rational::zero(); k];
        for (x, v) in probs {
            if v.is_negative() {
                return Err(Error::InvalidDistribution(format!(
                    "negative probability at {}",
                    bit_string(x, k)
                )));
            }
            if v.is_zero() {
                continue;
            }
            if (x as u64) >> k != 0 {
                return Err(Error::InvalidDistribution(format!("point {x} outside {{0,1}}^{k}")));
            }
            if !weight(x).is_multiple_of(2) {
                return Err(Error::InvalidDistribution(format!(
                    "support point {} has odd weight",
                    bit_string(x, k)
                )));
            }
            total += &v;
            for (i, m) in marginals.iter_mut().enumerate() {
                if coord(x, i, k) == 1 {
                    *m += &v;
                }
            }
            clean.insert(x, v);
        }
        if !total.is_one() {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {}",
                format_rational(&total)
            )));
        }
        if let Some(i) = marginals.iter().position(|m| *m != p) {
            return Err(Error::InvalidDistribution(format!(
                "marginal of coordinate {} is {}, expected {}",
                i + 1,
                format_rational(&marginals[i]),
                format_rational(&p)
            )));
        }
        let mut d = BiasedDistribution { k, p, probs: clean, q: None };
        d.q = d.hamming_profile();
        Ok(d)
    }

    /// Hamming-symmetric distribution assigning `q[i]` to each point of weight `2i`.
    pub fn from_q(k: usize, p: Rational, q: &[Rational]) -> Result<Self> {
        check_table_k(k)?;
        if q.len() != k / 2 + 1 {
            return Err(Error::InvalidDistribution(format!(
                "q has length {}, expected {}",
                q.len(),
                k / 2 + 1
            )));
        }
        let mut probs = BTreeMap::new();
        for x in 0..(1u32 << k) {
            let w = weight(x);
            if w.is_multiple_of(2) && !q[w / 2].is_zero() {
                probs.insert(x, q[w / 2].clone());
            }
        }
        Self::new(k, p, probs)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn p(&self) -> &Rational {
        &self.p
    }

    pub fn probs(&self) -> &BTreeMap<u32, Rational> {
        &self.probs
    }

    pub fn q(&self) -> Option<&[Rational]> {
        self.q.as_deref()
    }

    pub fn prob(&self, x: u32) -> Rational {
        self.probs.get(&x).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn support(&self) -> impl Iterator<Item = u32> + '_ {
        self.probs.keys().copied()
    }

    pub fn support_len(&self) -> usize {
        self.probs.len()
    }

    /// Probability per weight class divided by the class size, if constant on
    /// each class.
    fn hamming_profile(&self) -> Option<Vec<Rational>> {
        let k = self.k;
        let mut q: Vec<Option<Rational>> = vec![None; k / 2 + 1];
        let mut counts = vec![0u64; k / 2 + 1];
        for (&x, v) in &self.probs {
            let i = weight(x) / 2;
            match &q[i] {
                Some(prev) if prev != v => return None,
                _ => q[i] = Some(v.clone()),
            }
            counts[i] += 1;
        }
        let mut out = Vec::with_capacity(q.len());
        for (i, v) in q.into_iter().enumerate() {
            match v {
                None => out.push(Rational::zero()),
                Some(v) => {
                    let class = binomial_q(k as i64, 2 * i as i64);
                    if Rational::from_integer(counts[i].into()) != class {
                        return None;
                    }
                    out.push(v);
                }
            }
        }
        Some(out)
    }

    pub fn is_hamming_symmetric(&self) -> bool {
        self.q.is_some()
    }

    pub fn has_full_even_weight_support(&self) -> bool {
        self.probs.len() == 1usize << (self.k - 1)
    }

    /// `E[X_i X_j]` for all pairs, exact.
    pub fn second_moments(&self) -> Vec<Vec<Rational>> {
        let k = self.k;
        let mut m = vec![vec![Rational::zero(); k]; k];
        for (&x, v) in &self.probs {
            let ones: Vec<usize> = (0..k).filter(|&i| coord(x, i, k) == 1).collect();
            for &i in &ones {
                for &j in &ones {
                    m[i][j] += v;
                }
            }
        }
        m
    }

    /// `P[X_i = X_j]`.
    pub fn agreement(&self, i: usize, j: usize) -> Rational {
        self.probs
            .iter()
            .filter(|(&x, _)| coord(x, i, self.k) == coord(x, j, self.k))
            .fold(Rational::zero(), |acc, (_, v)| acc + v)
    }

    /// Distribution of `(1 - X_1, ..., 1 - X_k)`. Only stays inside the
    /// even-weight class for even `k`.
    pub fn flip(&self) -> Result<Self> {
        let mask = ((1u64 << self.k) - 1) as u32;
        let probs = self.probs.iter().map(|(&x, v)| (x ^ mask, v.clone())).collect();
        Self::new(self.k, Rational::one() - &self.p, probs)
    }

    /// Average over all `k!` coordinate permutations. Equivalent to spreading
    /// each weight class's mass uniformly over the class.
    pub fn permutation_average(&self) -> Self {
        let k = self.k;
        let mut class_mass = vec![Rational::zero(); k + 1];
        for (&x, v) in &self.probs {
            class_mass[weight(x)] += v;
        }
        let q: Vec<Rational> = (0..=k / 2)
            .map(|i| &class_mass[2 * i] / binomial_q(k as i64, 2 * i as i64))
            .collect();
        Self::from_q(k, self.p.clone(), &q).expect("averaging preserves membership in D(p,k)")
    }
}

/// Coordinates `i` (0-based) with `E[X_i X_j] = p^2` for every `j != i`.
pub fn pairwise_independent_coordinates(d: &BiasedDistribution) -> BTreeSet<usize> {
    let m = d.second_moments();
    let p2 = d.p() * d.p();
    (0..d.k())
        .filter(|&i| (0..d.k()).all(|j| j == i || m[i][j] == p2))
        .collect()
}

pub fn is_pairwise_independent(d: &BiasedDistribution) -> bool {
    pairwise_independent_coordinates(d).len() == d.k()
}

/// `max_{i != j} P[X_i = X_j]`.
pub fn eta(d: &BiasedDistribution) -> Result<Rational> {
    if d.k() < 2 {
        return Err(Error::InvalidArity { k: d.k(), min: 2 });
    }
    let mut best = Rational::zero();
    for i in 0..d.k() {
        for j in i + 1..d.k() {
            let a = d.agreement(i, j);
            if a > best {
                best = a;
            }
        }
    }
    Ok(best)
}
