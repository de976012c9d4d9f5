//! Sparse multivariate polynomials with exact rational coefficients.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::rational::Rational;

pub type Exponent = Vec<u32>;

/// Largest arity accepted by [`symmetrize`].
pub const MAX_SYM_VARS: usize = 10;

/// Default cap on the power searched by [`find_all_coordinates_monomial`].
pub const DEFAULT_D_MAX: usize = 12;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparsePoly {
    nvars: usize,
    terms: BTreeMap<Exponent, Rational>,
}

impl SparsePoly {
    pub fn zero(nvars: usize) -> Self {
        SparsePoly { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: Rational) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, Rational::one())
    }

    /// `c * prod_i x_i^{e_i}`.
    pub fn monomial(exponent: Exponent, c: Rational) -> Self {
        let mut p = Self::zero(exponent.len());
        p.add_term(exponent, c);
        p
    }

    pub fn variable(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Self::monomial(e, Rational::one())
    }

    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Exponent, Rational)>) -> Self {
        let mut p = Self::zero(nvars);
        for (e, c) in terms {
            assert_eq!(e.len(), nvars, "exponent length must match nvars");
            p.add_term(e, c);
        }
        p
    }

    /// `t^T V t` for a symmetric matrix given row-major.
    pub fn quadratic_form(nvars: usize, matrix: &[Rational]) -> Self {
        let mut p = Self::zero(nvars);
        for i in 0..nvars {
            for j in 0..nvars {
                let c = &matrix[i * nvars + j];
                if c.is_zero() {
                    continue;
                }
                let mut e = vec![0; nvars];
                e[i] += 1;
                e[j] += 1;
                p.add_term(e, c.clone());
            }
        }
        p
    }

    fn add_term(&mut self, e: Exponent, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(e) {
            Entry::Occupied(mut slot) => {
                *slot.get_mut() += c;
                if slot.get().is_zero() {
                    slot.remove();
                }
            }
            Entry::Vacant(slot) => {
                slot.insert(c);
            }
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &BTreeMap<Exponent, Rational> {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, s: &[u32]) -> Rational {
        assert_eq!(s.len(), self.nvars, "exponent length must match nvars");
        self.terms.get(s).cloned().unwrap_or_else(Rational::zero)
    }

    /// `d/dx_i` is not identically zero.
    pub fn depends_on(&self, i: usize) -> bool {
        self.terms.keys().any(|e| e[i] > 0)
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero(self.nvars);
        }
        SparsePoly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, v)| (e.clone(), v * c)).collect(),
        }
    }

    pub fn eval(&self, x: &[Rational]) -> Rational {
        assert_eq!(x.len(), self.nvars);
        self.terms.iter().fold(Rational::zero(), |acc, (e, c)| {
            let mono = e.iter().zip(x).fold(c.clone(), |m, (&d, xi)| {
                (0..d).fold(m, |m, _| m * xi)
            });
            acc + mono
        })
    }

    /// `f(x_pi)` where `x_pi = (x_{pi(1)}, ..., x_{pi(k)})`.
    pub fn permute(&self, pi: &[usize]) -> Self {
        let mut out = Self::zero(self.nvars);
        for (a, c) in &self.terms {
            let mut e = vec![0; self.nvars];
            for (i, &ai) in a.iter().enumerate() {
                e[pi[i]] += ai;
            }
            out.add_term(e, c.clone());
        }
        out
    }

    pub fn pow(&self, d: u32) -> Self {
        poly_pow(self, d)
    }
}

impl Add for &SparsePoly {
    type Output = SparsePoly;
    fn add(self, rhs: &SparsePoly) -> SparsePoly {
        assert_eq!(self.nvars, rhs.nvars);
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }
}

impl Neg for &SparsePoly {
    type Output = SparsePoly;
    fn neg(self) -> SparsePoly {
        self.scale(&-Rational::one())
    }
}

impl Sub for &SparsePoly {
    type Output = SparsePoly;
    fn sub(self, rhs: &SparsePoly) -> SparsePoly {
        self + &(-rhs)
    }
}

impl Mul for &SparsePoly {
    type Output = SparsePoly;
    fn mul(self, rhs: &SparsePoly) -> SparsePoly {
        assert_eq!(self.nvars, rhs.nvars);
        let mut acc: BTreeMap<Exponent, Rational> = BTreeMap::new();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let e: Exponent = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                *acc.entry(e).or_insert_with(Rational::zero) += ca * cb;
            }
        }
        acc.retain(|_, v| !v.is_zero());
        SparsePoly { nvars: self.nvars, terms: acc }
    }
}

/// `q^d` by square-and-multiply; `q^0 = 1`.
pub fn poly_pow(q: &SparsePoly, d: u32) -> SparsePoly {
    let mut result = SparsePoly::one(q.nvars);
    let mut base = q.clone();
    let mut e = d;
    while e > 0 {
        if e & 1 == 1 {
            result = &result * &base;
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
        }
    }
    result
}

/// `Sym(f) = sum over all k! permutations of f(x_pi)`, unnormalized.
///
/// The coefficient of `x^e` in `Sym(f)` is `|Stab(e)|` times the sum of `f`'s
/// coefficients over the orbit of `e`, so the sum is computed per orbit
/// instead of per permutation.
pub fn symmetrize(f: &SparsePoly) -> Result<SparsePoly> {
    let k = f.nvars;
    if k > MAX_SYM_VARS {
        return Err(Error::TooLarge {
            what: "symmetrization arity".into(),
            value: k as u128,
            limit: MAX_SYM_VARS as u128,
        });
    }
    let mut orbit_sums: BTreeMap<Exponent, Rational> = BTreeMap::new();
    for (e, c) in &f.terms {
        let mut key = e.clone();
        key.sort_unstable();
        *orbit_sums.entry(key).or_insert_with(Rational::zero) += c;
    }
    let mut out = SparsePoly::zero(k);
    for (sorted, sum) in orbit_sums {
        if sum.is_zero() {
            continue;
        }
        let coeff = sum * Rational::from_integer(stabilizer_order(&sorted).into());
        for e in distinct_permutations(&sorted) {
            out.terms.insert(e, coeff.clone());
        }
    }
    Ok(out)
}

/// `prod_v (multiplicity of v)!` for a sorted vector.
fn stabilizer_order(sorted: &[u32]) -> u64 {
    let mut total = 1u64;
    let mut run = 0u64;
    for (i, v) in sorted.iter().enumerate() {
        run = if i > 0 && sorted[i - 1] == *v { run + 1 } else { 1 };
        total *= run;
    }
    total
}

/// All distinct rearrangements of a sorted vector, in lexicographic order.
fn distinct_permutations(sorted: &[u32]) -> Vec<Exponent> {
    let mut cur = sorted.to_vec();
    let mut out = vec![cur.clone()];
    // next lexicographic permutation
    loop {
        let n = cur.len();
        let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| cur[i] < cur[i + 1]) else {
            break;
        };
        let j = (i + 1..n).rev().find(|&j| cur[j] > cur[i]).expect("pivot has a successor");
        cur.swap(i, j);
        cur[i + 1..].reverse();
        out.push(cur.clone());
    }
    out
}

/// Smallest `d <= d_max` and lexicographically first `s` (all `s_i >= 1`)
/// with a nonzero coefficient in `Sym(q^d)`. `Ok(None)` when the scan is
/// exhausted.
pub fn find_all_coordinates_monomial(q: &SparsePoly, d_max: u32) -> Result<Option<(u32, Exponent)>> {
    if let Some(i) = (0..q.nvars).find(|&i| !q.depends_on(i)) {
        return Err(Error::Precondition(format!(
            "polynomial does not involve variable {} (its partial derivative vanishes)",
            i + 1
        )));
    }
    let mut power = SparsePoly::one(q.nvars);
    for d in 1..=d_max {
        power = &power * q;
        let sym = symmetrize(&power)?;
        if let Some((e, _)) = sym.terms.iter().find(|(e, c)| e.iter().all(|&x| x >= 1) && !c.is_zero()) {
            return Ok(Some((d, e.clone())));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};
    use proptest::prelude::*;

    fn x(n: usize, i: usize) -> SparsePoly {
        SparsePoly::variable(n, i)
    }

    /// Literal definition: sum of f(x_pi) over every permutation.
    fn brute_symmetrize(f: &SparsePoly) -> SparsePoly {
        let k = f.nvars();
        let mut perm: Vec<usize> = (0..k).collect();
        let mut acc = SparsePoly::zero(k);
        loop {
            // f(x_pi) substitutes x_{pi(i)} for variable i
            let mut g = SparsePoly::zero(k);
            for (a, c) in f.terms() {
                let mut e = vec![0; k];
                for i in 0..k {
                    e[perm[i]] += a[i];
                }
                g = &g + &SparsePoly::monomial(e, c.clone());
            }
            acc = &acc + &g;
            let Some(i) = (0..k.saturating_sub(1)).rev().find(|&i| perm[i] < perm[i + 1]) else {
                break;
            };
            let j = (i + 1..k).rev().find(|&j| perm[j] > perm[i]).unwrap();
            perm.swap(i, j);
            perm[i + 1..].reverse();
        }
        acc
    }

    #[test]
    fn binomial_square() {
        let s = &x(2, 0) + &x(2, 1);
        let sq = poly_pow(&s, 2);
        assert_eq!(sq.coefficient(&[2, 0]), int(1));
        assert_eq!(sq.coefficient(&[1, 1]), int(2));
        assert_eq!(sq.coefficient(&[0, 2]), int(1));
        assert_eq!(sq.len(), 3);
    }

    #[test]
    fn zeroth_power_is_one() {
        let s = &x(3, 0) + &x(3, 2);
        assert_eq!(poly_pow(&s, 0), SparsePoly::one(3));
    }

    #[test]
    fn monomial_cube() {
        let m = SparsePoly::monomial(vec![1, 1], int(2));
        assert_eq!(poly_pow(&m, 3), SparsePoly::monomial(vec![3, 3], int(8)));
    }

    #[test]
    fn symmetrize_small_cases() {
        assert_eq!(symmetrize(&x(2, 0)).unwrap(), &x(2, 0) + &x(2, 1));
        let m = SparsePoly::monomial(vec![1, 1], int(1));
        assert_eq!(symmetrize(&m).unwrap(), SparsePoly::monomial(vec![1, 1], int(2)));
    }

    #[test]
    fn symmetrize_arity_cap() {
        let f = x(11, 0);
        assert!(matches!(symmetrize(&f), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn coefficient_lookup() {
        let f = SparsePoly::monomial(vec![2, 1], int(3));
        assert_eq!(f.coefficient(&[2, 1]), int(3));
        assert_eq!(f.coefficient(&[1, 2]), int(0));
    }

    #[test]
    fn all_pairs_square_coefficient() {
        let rho = rat(1, 6);
        let mut m = vec![Rational::zero(); 16];
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    m[i * 4 + j] = rho.clone();
                }
            }
        }
        // t^T V t = 2 rho * sum_{i<j} t_i t_j
        let q = SparsePoly::quadratic_form(4, &m);
        assert_eq!(q.coefficient(&[1, 1, 0, 0]), int(2) * &rho);
        assert_eq!(poly_pow(&q, 2).coefficient(&[1, 1, 1, 1]), int(24) * &rho * &rho);
    }

    #[test]
    fn monomial_search() {
        let mut m = vec![Rational::zero(); 16];
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    m[i * 4 + j] = rat(1, 6);
                }
            }
        }
        let q = SparsePoly::quadratic_form(4, &m);
        assert_eq!(find_all_coordinates_monomial(&q, 12).unwrap(), Some((2, vec![1, 1, 1, 1])));

        let q = SparsePoly::monomial(vec![1, 1], int(1));
        assert_eq!(find_all_coordinates_monomial(&q, 12).unwrap(), Some((1, vec![1, 1])));

        let q = SparsePoly::monomial(vec![2, 0], int(1));
        assert!(matches!(find_all_coordinates_monomial(&q, 12), Err(Error::Precondition(_))));
    }

    #[test]
    fn zero_row_kills_all_coordinate_monomials() {
        // V with zero row 4: every term of (t^T V t)^d misses t_4
        let mut m = vec![Rational::zero(); 16];
        for (i, j) in [(0, 1), (1, 2), (0, 2)] {
            m[i * 4 + j] = rat(1, 5);
            m[j * 4 + i] = rat(1, 5);
        }
        let q = SparsePoly::quadratic_form(4, &m);
        for d in 1..=4 {
            let sym = symmetrize(&poly_pow(&q, d)).unwrap();
            assert!(sym.terms().iter().all(|(e, _)| e.contains(&0)));
        }
    }

    #[test]
    fn orbit_symmetrize_matches_definition_exhaustively() {
        let f = &(&SparsePoly::monomial(vec![2, 1, 0], int(3)) + &SparsePoly::monomial(vec![0, 0, 1], rat(-1, 2)))
            + &SparsePoly::monomial(vec![1, 1, 1], int(5));
        assert_eq!(symmetrize(&f).unwrap(), brute_symmetrize(&f));
    }

    fn small_poly(nvars: usize) -> impl Strategy<Value = SparsePoly> {
        prop::collection::vec(
            (prop::collection::vec(0u32..3, nvars), -5i64..=5, 1i64..=4),
            0..5,
        )
        .prop_map(move |terms| {
            SparsePoly::from_terms(nvars, terms.into_iter().map(|(e, n, d)| (e, rat(n, d))))
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn distributive(f in small_poly(3), g in small_poly(3), h in small_poly(3)) {
            prop_assert_eq!(&(&f + &g) * &h, &(&f * &h) + &(&g * &h));
        }

        #[test]
        fn power_addition(f in small_poly(2), a in 0u32..3, b in 0u32..3) {
            prop_assert_eq!(poly_pow(&f, a + b), &poly_pow(&f, a) * &poly_pow(&f, b));
        }

        #[test]
        fn symmetrize_linear_and_matches_definition(f in small_poly(3), g in small_poly(3)) {
            let sf = symmetrize(&f).unwrap();
            prop_assert_eq!(symmetrize(&(&f + &g)).unwrap(), &sf + &symmetrize(&g).unwrap());
            prop_assert_eq!(sf, brute_symmetrize(&f));
        }

        #[test]
        fn symmetrized_is_permutation_invariant(
            f in small_poly(4),
            pt in prop::collection::vec((-4i64..=4, 1i64..=3), 4),
        ) {
            let sf = symmetrize(&f).unwrap();
            let x: Vec<Rational> = pt.iter().map(|&(n, d)| rat(n, d)).collect();
            let base = sf.eval(&x);
            let mut perm: Vec<usize> = (0..4).collect();
            loop {
                let xp: Vec<Rational> = perm.iter().map(|&i| x[i].clone()).collect();
                prop_assert_eq!(sf.eval(&xp), base.clone());
                let Some(i) = (0..3).rev().find(|&i| perm[i] < perm[i + 1]) else { break };
                let j = (i + 1..4).rev().find(|&j| perm[j] > perm[i]).unwrap();
                perm.swap(i, j);
                perm[i + 1..].reverse();
            }
        }
    }
}
