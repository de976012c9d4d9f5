//! BLR containment: a full `(x1, x2, x1 ^ x2 ^ b, z)` pattern inside the
//! support, plus an `F_2` span covering the even-weight space.

use std::collections::BTreeSet;

use super::{coord, BiasedDistribution};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlrWitness {
    pub b: u8,
    /// Values on the remaining coordinates, in increasing coordinate order.
    pub z: Vec<u8>,
    /// The three pattern coordinates (0-based).
    pub coords: [usize; 3],
}

/// Searches coordinates `(1, 2, 3)`, or every coordinate triple when
/// `up_to_permutation` is set. The pattern set is symmetric in its three
/// positions, so unordered triples suffice.
pub fn contains_blr(d: &BiasedDistribution, up_to_permutation: bool) -> Option<BlrWitness> {
    let k = d.k();
    if k < 3 || !span_is_even_weight_space(d) {
        return None;
    }
    let support: BTreeSet<u32> = d.support().collect();
    let mut triples = Vec::new();
    if up_to_permutation {
        for a in 0..k {
            for b in a + 1..k {
                for c in b + 1..k {
                    triples.push([a, b, c]);
                }
            }
        }
    } else {
        triples.push([0, 1, 2]);
    }
    let bit = |i: usize| 1u32 << (k - 1 - i);
    for t in triples {
        let rest: Vec<usize> = (0..k).filter(|i| !t.contains(i)).collect();
        let pattern_mask = bit(t[0]) | bit(t[1]) | bit(t[2]);
        for b in 0..2u8 {
            // candidate tails, from support points matching (0, 0, b)
            let mut tails: Vec<u32> = support
                .iter()
                .filter(|&&x| {
                    coord(x, t[0], k) == 0 && coord(x, t[1], k) == 0 && coord(x, t[2], k) == b
                })
                .map(|&x| x & !pattern_mask)
                .collect();
            tails.sort_by_key(|&tail| rest.iter().map(|&i| coord(tail, i, k)).collect::<Vec<_>>());
            for tail in tails {
                let all = (0..2u32).all(|x1| {
                    (0..2u32).all(|x2| {
                        let x3 = x1 ^ x2 ^ u32::from(b);
                        let mut x = tail;
                        if x1 == 1 {
                            x |= bit(t[0]);
                        }
                        if x2 == 1 {
                            x |= bit(t[1]);
                        }
                        if x3 == 1 {
                            x |= bit(t[2]);
                        }
                        support.contains(&x)
                    })
                });
                if all {
                    return Some(BlrWitness {
                        b,
                        z: rest.iter().map(|&i| coord(tail, i, k)).collect(),
                        coords: t,
                    });
                }
            }
        }
    }
    None
}

/// Rank of the support over `F_2` equals `k - 1`, the dimension of the
/// even-weight space (the support already lies inside it).
pub fn span_is_even_weight_space(d: &BiasedDistribution) -> bool {
    let k = d.k();
    let mut basis: Vec<u32> = Vec::new();
    for mut v in d.support() {
        for &b in &basis {
            let top = 31 - b.leading_zeros();
            if (v >> top) & 1 == 1 {
                v ^= b;
            }
        }
        if v != 0 {
            basis.push(v);
            basis.sort_unstable_by(|a, b| b.cmp(a));
        }
    }
    basis.len() + 1 == k
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{make_case_distribution, make_uniform_even_weight};
    use crate::rational::rat;
    use std::collections::BTreeMap;

    #[test]
    fn uniform_k4_contains_blr() {
        let w = contains_blr(&make_uniform_even_weight(4).unwrap(), false).unwrap();
        assert_eq!(w, BlrWitness { b: 0, z: vec![0], coords: [0, 1, 2] });
    }

    #[test]
    fn boundary_case_contains_blr() {
        let d = make_case_distribution(4, rat(1, 3)).unwrap();
        let w = contains_blr(&d, false).unwrap();
        assert_eq!((w.b, w.z), (0, vec![0]));
    }

    #[test]
    fn two_point_support_spans_too_little() {
        let mut probs = BTreeMap::new();
        probs.insert(0b0000, rat(1, 2));
        probs.insert(0b1111, rat(1, 2));
        let d = BiasedDistribution::new(4, rat(1, 2), probs).unwrap();
        assert!(!span_is_even_weight_space(&d));
        assert!(contains_blr(&d, true).is_none());
    }

    #[test]
    fn corner_case_does_not_contain_blr() {
        let d = make_case_distribution(5, rat(3, 4)).unwrap();
        assert!(contains_blr(&d, false).is_none());
        assert!(contains_blr(&d, true).is_none());
    }

    #[test]
    fn even_high_boundary_uses_b_one() {
        // weights k-2 and k: pattern on (1,2,3) with b = 1 and z all-ones
        let d = make_case_distribution(4, rat(2, 3)).unwrap();
        let w = contains_blr(&d, false).unwrap();
        assert_eq!((w.b, w.z), (1, vec![1]));
    }

    #[test]
    fn permutation_mode_agrees_on_full_support() {
        let d = make_uniform_even_weight(5).unwrap();
        assert_eq!(contains_blr(&d, true), contains_blr(&d, false));
    }
}
