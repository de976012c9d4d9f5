//! Exact feasibility of the Hamming-symmetric pairwise-independence polytope.
//!
//! Averaging over coordinate permutations preserves pairwise independence,
//! so `D(p, k)` contains a pairwise-independent member iff some `q >= 0`
//! satisfies the three linear constraints returned by
//! [`symmetric_constraints`]. The polytope is pointed, hence nonempty iff it
//! has a vertex, and every vertex is a basic solution supported on at most
//! `rank <= 3` linearly independent columns.

use num_traits::{Signed, Zero};

use super::construct::subsets;
use super::{BiasedDistribution, MAX_TABLE_K};
use crate::rational::{binomial_q, int, min_bias, solve_unique, Rational};

#[derive(Clone, Debug)]
pub struct FeasibilityCertificate {
    pub k: usize,
    pub p: Rational,
    pub feasible: bool,
    /// Vertex of the polytope, when feasible.
    pub q: Option<Vec<Rational>>,
    /// Distribution built from `q`; only materialized for `k <= MAX_TABLE_K`.
    pub witness: Option<BiasedDistribution>,
    /// `k >= 1 + 1/min(p, 1-p)`.
    pub bound_check: bool,
}

/// Constraint rows over `q_0..q_{floor(k/2)}` and right-hand side
/// `(1, p, p^2)`: total mass, marginal of a coordinate, and second moment of
/// a coordinate pair.
pub fn symmetric_constraints(k: usize, p: &Rational) -> (Vec<Vec<Rational>>, Vec<Rational>) {
    let ki = k as i64;
    let vars = k / 2 + 1;
    let row = |shift: i64, off: i64| -> Vec<Rational> {
        (0..vars as i64).map(|i| binomial_q(ki - shift, 2 * i - off)).collect()
    };
    (
        vec![row(0, 0), row(1, 1), row(2, 2)],
        vec![int(1), p.clone(), p * p],
    )
}

pub fn feasibility_search(k: usize, p: &Rational) -> FeasibilityCertificate {
    let bound_check = k >= 1 && {
        let m = min_bias(p);
        m.is_positive() && int(k as i64) >= int(1) + m.recip()
    };
    let (a, b) = symmetric_constraints(k, p);
    let vars = k / 2 + 1;
    let columns: Vec<usize> = (0..vars).collect();
    let mut vertex = None;
    'search: for size in 1..=3.min(vars) {
        for basis in subsets(&columns, size) {
            let sub: Vec<Vec<Rational>> =
                a.iter().map(|row| basis.iter().map(|&c| row[c].clone()).collect()).collect();
            let Some(x) = solve_unique(&sub, &b) else {
                continue;
            };
            if x.iter().any(Signed::is_negative) {
                continue;
            }
            let mut q = vec![Rational::zero(); vars];
            for (&c, v) in basis.iter().zip(x) {
                q[c] = v;
            }
            vertex = Some(q);
            break 'search;
        }
    }
    let witness = match &vertex {
        Some(q) if k <= MAX_TABLE_K => BiasedDistribution::from_q(k, p.clone(), q).ok(),
        _ => None,
    };
    FeasibilityCertificate {
        k,
        p: p.clone(),
        feasible: vertex.is_some(),
        q: vertex,
        witness,
        bound_check,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{is_pairwise_independent, make_uniform_even_weight};
    use crate::rational::rat;

    #[test]
    fn k3_half_is_uniform() {
        let c = feasibility_search(3, &rat(1, 2));
        assert!(c.feasible && c.bound_check);
        assert_eq!(c.witness.unwrap(), make_uniform_even_weight(3).unwrap());
    }

    #[test]
    fn k4_quarter_infeasible() {
        let c = feasibility_search(4, &rat(1, 4));
        assert!(!c.feasible && !c.bound_check);
        assert!(c.witness.is_none());
    }

    #[test]
    fn k5_quarter_boundary_feasible() {
        let c = feasibility_search(5, &rat(1, 4));
        assert!(c.feasible && c.bound_check);
        assert!(is_pairwise_independent(&c.witness.unwrap()));
    }

    #[test]
    fn small_k_never_feasible_off_half() {
        assert!(!feasibility_search(1, &rat(1, 2)).feasible);
        assert!(!feasibility_search(2, &rat(1, 2)).feasible);
        assert!(!feasibility_search(3, &rat(2, 5)).feasible);
    }

    #[test]
    fn large_k_decides_without_table() {
        let c = feasibility_search(40, &rat(1, 30));
        assert!(c.feasible && c.bound_check);
        assert!(c.witness.is_none() && c.q.is_some());
    }
}
