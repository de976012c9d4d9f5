//! Explicit members of `D(p, k)`.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};

use super::{
    check_table_k, is_pairwise_independent, weight, BiasedDistribution,
};
use crate::distributions::feasibility::symmetric_constraints;
use crate::error::{Error, Result};
use crate::rational::{check_open_unit, format_rational, int, min_bias, rat, solve_unique, Rational};

/// Uniform distribution on the `2^{k-1}` even-weight vectors (bias 1/2).
pub fn make_uniform_even_weight(k: usize) -> Result<BiasedDistribution> {
    if k < 3 {
        return Err(Error::InvalidArity { k, min: 3 });
    }
    check_table_k(k)?;
    let mass = Rational::new(1.into(), (1u64 << (k - 1)).into());
    let probs = (0..(1u32 << k))
        .filter(|&x| weight(x).is_multiple_of(2))
        .map(|x| (x, mass.clone()))
        .collect();
    BiasedDistribution::new(k, rat(1, 2), probs)
}

fn case_interval(k: usize) -> String {
    let k1 = k as i64 - 1;
    format!(
        "[1/{k1}, 2/{k1}) U (1-2/{k1}, 1-1/{k1}] for k = {k} >= 4"
    )
}

/// `p in [1/(k-1), 2/(k-1))`.
fn in_lower_case_interval(k: usize, p: &Rational) -> bool {
    let k1 = k as i64 - 1;
    *p >= rat(1, k1) && *p < rat(2, k1)
}

/// Hamming-symmetric pairwise-independent distribution for the narrow bias
/// bands next to `1/(k-1)` and `1 - 1/(k-1)`.
pub fn make_case_distribution(k: usize, p: Rational) -> Result<BiasedDistribution> {
    check_open_unit(&p, "p")?;
    let out_of_range = || Error::OutOfRange {
        what: format!("(k, p) = ({k}, {})", format_rational(&p)),
        admissible: case_interval(k),
    };
    if k < 4 {
        return Err(out_of_range());
    }
    check_table_k(k)?;
    let complement = Rational::one() - &p;
    let d = if in_lower_case_interval(k, &p) {
        let q = if k % 2 == 1 { odd_low_bias_q(k, &p) } else { even_low_bias_q(k, &p) };
        BiasedDistribution::from_q(k, p, &q)?
    } else if in_lower_case_interval(k, &complement) {
        if k % 2 == 1 {
            BiasedDistribution::from_q(k, p.clone(), &odd_high_bias_q(k, &p))?
        } else {
            let q = even_low_bias_q(k, &complement);
            BiasedDistribution::from_q(k, complement, &q)?.flip()?
        }
    } else {
        return Err(out_of_range());
    };
    if !is_pairwise_independent(&d) {
        return Err(Error::Internal(format!(
            "case construction for k = {k} is not pairwise independent"
        )));
    }
    Ok(d)
}

/// Odd `k >= 5`, `p` in the lower band. Support weights `0`, `2`, `k-1`.
fn odd_low_bias_q(k: usize, p: &Rational) -> Vec<Rational> {
    let kk = int(k as i64);
    let p2 = p * p;
    let mut q = vec![Rational::zero(); k / 2 + 1];
    q[0] = int(1) + &kk * &p2 / int(2) - &kk * &kk * p / (int(2) * int(k as i64 - 1));
    let den = int((k as i64 - 1) * (k as i64 - 3));
    q[1] = (int(k as i64 - 2) * p - int(k as i64 - 1) * &p2) / &den;
    q[(k - 1) / 2] = (int(k as i64 - 1) * &p2 - p) / &den;
    q
}

/// Odd `k >= 5`, `1 - p` in the lower band. Support weights `0`, `k-3`, `k-1`.
fn odd_high_bias_q(k: usize, p: &Rational) -> Vec<Rational> {
    let ki = k as i64;
    let kk = int(ki);
    let p2 = p * p;
    let mut q = vec![Rational::zero(); k / 2 + 1];
    q[0] = int(1) + &kk * &p2 / int(ki - 3)
        - &kk * int(2 * ki - 5) * p / int((ki - 1) * (ki - 3));
    q[(k - 3) / 2] = (int(3 * (ki - 2)) * p - int(3 * (ki - 1)) * &p2)
        / int((ki - 1) * (ki - 2) * (ki - 3));
    q[(k - 1) / 2] = (int(ki - 1) * &p2 - int(ki - 4) * p) / int(2 * (ki - 1));
    q
}

/// Even `k >= 4`, `p` in the lower band. Support weights `0`, `2`, `k`.
fn even_low_bias_q(k: usize, p: &Rational) -> Vec<Rational> {
    let ki = k as i64;
    let p2 = p * p;
    let mut q = vec![Rational::zero(); k / 2 + 1];
    q[0] = (int(ki - 1) * &p2 - int(ki + 1) * p + int(2)) / int(2);
    q[1] = (p - &p2) / int(ki - 2);
    q[k / 2] = (int(ki - 1) * &p2 - p) / int(ki - 2);
    q
}

/// Smallest odd `l` with `l > 1 + 1/min(p, 1-p)`.
pub(crate) fn composition_block(p: &Rational) -> usize {
    let bound = int(1) + min_bias(p).recip();
    let floor = bound.floor().to_integer();
    let mut l: usize = (floor + 1u32).try_into().expect("block size fits in usize");
    if l.is_multiple_of(2) {
        l += 1;
    }
    l
}

/// Pairwise-independent distribution with full even-weight support for
/// `p in [2/(k-1), 1 - 2/(k-1)]`, `p != 1/2`, built by conditioning an
/// `l`-coordinate block on the parity of `k - l` independent coordinates.
pub fn make_composed_distribution(k: usize, p: Rational) -> Result<BiasedDistribution> {
    check_open_unit(&p, "p")?;
    if k < 6 {
        return Err(Error::InvalidArity { k, min: 6 });
    }
    check_table_k(k)?;
    let k1 = k as i64 - 1;
    if p < rat(2, k1) || p > int(1) - rat(2, k1) || p == rat(1, 2) {
        return Err(Error::OutOfRange {
            what: format!("(k, p) = ({k}, {})", format_rational(&p)),
            admissible: format!("[2/{k1}, 1-2/{k1}] minus {{1/2}} for k >= 6"),
        });
    }
    let l = composition_block(&p);
    if l >= k {
        return Err(Error::Internal(format!("block size {l} leaves no free coordinates for k = {k}")));
    }
    let even_block = full_support_case(l, p.clone())?;
    let odd_source = full_support_case(l, Rational::one() - &p)?;
    let l_mask = ((1u64 << l) - 1) as u32;
    let tail = k - l;
    let q = Rational::one() - &p;
    let mut probs = BTreeMap::new();
    for b in 0..(1u32 << tail) {
        let ones = weight(b);
        let tail_mass = pow(&p, ones) * pow(&q, tail - ones);
        let parity = ones % 2;
        for a in 0..(1u32 << l) {
            let head = if parity == 0 {
                even_block.prob(a)
            } else {
                odd_source.prob(a ^ l_mask)
            };
            if head.is_zero() {
                continue;
            }
            probs.insert((a << tail) | b, &tail_mass * head);
        }
    }
    let d = BiasedDistribution::new(k, p, probs)?;
    if !is_pairwise_independent(&d) || !d.has_full_even_weight_support() {
        return Err(Error::Internal(format!("composed distribution for k = {k} failed its checks")));
    }
    Ok(d)
}

fn pow(x: &Rational, e: usize) -> Rational {
    (0..e).fold(Rational::one(), |acc, _| acc * x)
}

fn full_support_case(l: usize, p: Rational) -> Result<BiasedDistribution> {
    let d = make_case_distribution(l, p)?;
    if d.has_full_even_weight_support() {
        Ok(d)
    } else {
        make_full_support_perturbation(&d)
    }
}

/// Moves a Hamming-symmetric pairwise-independent distribution into the
/// interior of its polytope so every even-weight point gets positive mass.
pub fn make_full_support_perturbation(d: &BiasedDistribution) -> Result<BiasedDistribution> {
    let k = d.k();
    let p = d.p().clone();
    let q = d
        .q()
        .ok_or_else(|| Error::UnsupportedShape("distribution is not Hamming-symmetric".into()))?
        .to_vec();
    if !is_pairwise_independent(d) {
        return Err(Error::Precondition("distribution is not pairwise independent".into()));
    }
    let boundary = || Error::BoundaryInfeasible { k, p: format_rational(&p) };
    if k > 3 {
        let k1 = k as i64 - 1;
        if p == rat(1, k1) || p == int(1) - rat(1, k1) {
            return Err(boundary());
        }
    }
    let (a, _) = symmetric_constraints(k, &p);
    let vars = q.len();
    let rank = matrix_rank(&a);
    let positive: Vec<usize> = (0..vars).filter(|&i| q[i].is_positive()).collect();
    let basis = subsets(&positive, rank)
        .into_iter()
        .find(|b| {
            let cols: Vec<Vec<Rational>> =
                a.iter().map(|row| b.iter().map(|&c| row[c].clone()).collect()).collect();
            matrix_rank(&cols) == rank
        })
        .ok_or_else(boundary)?;
    // direction: non-basis entries 1, basis entries solve the homogeneous system
    let free: Vec<usize> = (0..vars).filter(|i| !basis.contains(i)).collect();
    let sub: Vec<Vec<Rational>> =
        a.iter().map(|row| basis.iter().map(|&c| row[c].clone()).collect()).collect();
    let rhs: Vec<Rational> = a
        .iter()
        .map(|row| -free.iter().fold(Rational::zero(), |acc, &c| acc + &row[c]))
        .collect();
    let solved = solve_unique(&sub, &rhs)
        .ok_or_else(|| Error::Internal("basis system is singular".into()))?;
    let mut dir = vec![Rational::one(); vars];
    for (&c, v) in basis.iter().zip(solved) {
        dir[c] = v;
    }

    let mut max_step: Option<Rational> = None;
    for i in 0..vars {
        let limit = if dir[i].is_positive() {
            (Rational::one() - &q[i]) / &dir[i]
        } else if dir[i].is_negative() {
            -&q[i] / &dir[i]
        } else {
            if q[i].is_zero() || q[i] >= Rational::one() {
                return Err(boundary());
            }
            continue;
        };
        max_step = Some(match max_step {
            Some(m) if m <= limit => m,
            _ => limit,
        });
    }
    let step = match max_step {
        // zero direction: only possible when there are no free entries
        None => Rational::zero(),
        Some(m) if m.is_positive() => m / int(2),
        Some(_) => return Err(boundary()),
    };
    let perturbed: Vec<Rational> = q.iter().zip(&dir).map(|(qi, di)| qi + &step * di).collect();
    let out = BiasedDistribution::from_q(k, p.clone(), &perturbed)?;
    if !out.has_full_even_weight_support() || !is_pairwise_independent(&out) {
        return Err(boundary());
    }
    Ok(out)
}

fn matrix_rank(a: &[Vec<Rational>]) -> usize {
    let mut m: Vec<Vec<Rational>> = a.to_vec();
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..cols {
        let Some(pr) = (rank..rows).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(rank, pr);
        for r in 0..rows {
            if r != rank && !m[r][col].is_zero() {
                let f = &m[r][col] / &m[rank][col];
                for c in col..cols {
                    let delta = &f * &m[rank][c];
                    m[r][c] -= delta;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// All `size`-element subsets of `items`, in lexicographic order.
pub(crate) fn subsets(items: &[usize], size: usize) -> Vec<Vec<usize>> {
    fn go(items: &[usize], size: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            cur.push(items[i]);
            go(items, size, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(items, size, 0, &mut Vec::new(), &mut out);
    out
}

/// Four-query mixture: all-zeros with probability `p0`, all-ones with `p1`,
/// uniform even-weight otherwise. `p1` defaults to `max(0, 2p - 1)`.
pub fn make_dfh19(p: Rational, p1: Option<Rational>) -> Result<BiasedDistribution> {
    check_open_unit(&p, "p")?;
    let p1 = p1.unwrap_or_else(|| {
        let t = int(2) * &p - int(1);
        if t.is_positive() {
            t
        } else {
            Rational::zero()
        }
    });
    if p1.is_negative() || p1 > Rational::one() {
        return Err(Error::InvalidMixture(format!("p1 = {} outside [0, 1]", format_rational(&p1))));
    }
    let p0 = int(1) - int(2) * &p + &p1;
    if p0.is_negative() || p0 > Rational::one() - &p1 {
        return Err(Error::InvalidMixture(format!(
            "derived p0 = {} outside [0, 1 - p1]",
            format_rational(&p0)
        )));
    }
    let uniform = (Rational::one() - &p0 - &p1) / int(8);
    let mut probs = BTreeMap::new();
    for x in 0..16u32 {
        if weight(x).is_multiple_of(2) {
            probs.insert(x, uniform.clone());
        }
    }
    *probs.get_mut(&0).expect("zero is even") += p0;
    *probs.get_mut(&15).expect("all-ones is even") += p1;
    BiasedDistribution::new(4, p, probs)
}

/// Pairwise-independent member of `D(p, k)` for any admissible `(k, p)`:
/// uniform at `p = 1/2`, the case construction in the outer bands, the
/// composed construction otherwise.
pub fn make_pairwise_independent(k: usize, p: Rational) -> Result<BiasedDistribution> {
    check_open_unit(&p, "p")?;
    if k < 3 || min_bias(&p) < rat(1, k as i64 - 1) {
        return Err(Error::OutOfRange {
            what: format!("(k, p) = ({k}, {})", format_rational(&p)),
            admissible: "k >= 3 and 1/(k-1) <= p <= 1 - 1/(k-1)".into(),
        });
    }
    if p == rat(1, 2) {
        return make_uniform_even_weight(k);
    }
    let complement = Rational::one() - &p;
    if k >= 4 && (in_lower_case_interval(k, &p) || in_lower_case_interval(k, &complement)) {
        return make_case_distribution(k, p);
    }
    make_composed_distribution(k, p)
}
