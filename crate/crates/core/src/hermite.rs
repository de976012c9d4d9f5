//! Probabilists' Hermite polynomials and Gaussian Hermite product moments.

use std::collections::HashMap;
use std::sync::Mutex;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand_distr::{Distribution, StandardNormal};

use crate::distributions::BiasedDistribution;
use crate::error::{Error, Result};
use crate::mc::{self, McEstimate};
use crate::polyalg::{poly_pow, SparsePoly};
use crate::rational::{to_f64, Rational};

/// Largest supported Hermite degree.
pub const MAX_HERMITE_DEGREE: usize = 64;

/// Tolerance on the smallest eigenvalue when checking positive semi-definiteness.
pub const PSD_TOL: f64 = 1e-9;

/// `H_j(x)` via `H_{j+1} = x H_j - j H_{j-1}`.
pub fn hermite_eval(j: usize, x: f64) -> Result<f64> {
    if j > MAX_HERMITE_DEGREE {
        return Err(Error::Degree { degree: j, cap: MAX_HERMITE_DEGREE });
    }
    Ok(hermite_unchecked(j, x))
}

#[inline]
pub(crate) fn hermite_unchecked(j: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, x);
    if j == 0 {
        return 1.0;
    }
    for i in 1..j {
        let next = x * cur - i as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Coefficients of `H_j` in the monomial basis, lowest degree first.
pub fn hermite_coefficients(j: usize) -> Vec<BigInt> {
    let mut prev = vec![BigInt::one()];
    if j == 0 {
        return prev;
    }
    let mut cur = vec![BigInt::zero(), BigInt::one()];
    for i in 1..j {
        let mut next = vec![BigInt::zero(); i + 2];
        for (d, c) in cur.iter().enumerate() {
            next[d + 1] += c;
        }
        for (d, c) in prev.iter().enumerate() {
            next[d] -= c * BigInt::from(i);
        }
        prev = cur;
        cur = next;
    }
    cur
}

/// Unit-diagonal symmetric PSD matrix, stored exactly and as `f64`.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceMatrix {
    k: usize,
    entries: Vec<Rational>,
    float: DMatrix<f64>,
}

impl CovarianceMatrix {
    /// Row-major entries.
    pub fn new(k: usize, entries: Vec<Rational>) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArity { k, min: 1 });
        }
        if entries.len() != k * k {
            return Err(Error::Matrix(format!("expected {} entries, got {}", k * k, entries.len())));
        }
        for i in 0..k {
            if !entries[i * k + i].is_one() {
                return Err(Error::Matrix(format!("diagonal entry ({0},{0}) is not 1", i + 1)));
            }
            for j in 0..i {
                if entries[i * k + j] != entries[j * k + i] {
                    return Err(Error::Matrix(format!("not symmetric at ({},{})", i + 1, j + 1)));
                }
            }
        }
        let float = DMatrix::from_row_iterator(k, k, entries.iter().map(to_f64));
        let min_eig = float.clone().symmetric_eigen().eigenvalues.min();
        if min_eig < -PSD_TOL {
            return Err(Error::Matrix(format!("not positive semi-definite (eigenvalue {min_eig:e})")));
        }
        Ok(CovarianceMatrix { k, entries, float })
    }

    /// All off-diagonal entries equal to `rho`.
    pub fn from_rho(k: usize, rho: &Rational) -> Result<Self> {
        let entries = (0..k * k)
            .map(|ix| if ix / k == ix % k { Rational::one() } else { rho.clone() })
            .collect();
        Self::new(k, entries)
    }

    pub fn identity(k: usize) -> Self {
        Self::from_rho(k, &Rational::zero()).expect("identity is a covariance matrix")
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn entry(&self, i: usize, j: usize) -> &Rational {
        &self.entries[i * self.k + j]
    }

    pub fn entries(&self) -> &[Rational] {
        &self.entries
    }

    pub fn as_f64(&self) -> &DMatrix<f64> {
        &self.float
    }

    /// Row-major `V = Sigma - I`.
    pub fn v_entries(&self) -> Vec<Rational> {
        let mut v = self.entries.clone();
        for i in 0..self.k {
            v[i * self.k + i] = Rational::zero();
        }
        v
    }

    /// Indices (0-based) of all-zero rows of `V`.
    pub fn v_zero_rows(&self) -> Vec<usize> {
        (0..self.k)
            .filter(|&i| (0..self.k).all(|j| i == j || self.entry(i, j).is_zero()))
            .collect()
    }

    /// `t^T V t`.
    pub fn quadratic_form(&self) -> SparsePoly {
        SparsePoly::quadratic_form(self.k, &self.v_entries())
    }

    /// A matrix `A` with `A A^T = Sigma`: Cholesky, falling back to a
    /// diagonally pivoted factorization for singular matrices.
    pub fn sqrt_factor(&self) -> Result<DMatrix<f64>> {
        if let Some(ch) = self.float.clone().cholesky() {
            return Ok(ch.l());
        }
        pivoted_cholesky(&self.float)
    }
}

fn pivoted_cholesky(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let mut work = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        // pivot on the largest remaining diagonal
        let piv = (j..n)
            .max_by(|&x, &y| work[(x, x)].total_cmp(&work[(y, y)]))
            .expect("nonempty range");
        if work[(piv, piv)] <= PSD_TOL {
            break;
        }
        work.swap_rows(j, piv);
        work.swap_columns(j, piv);
        l.swap_rows(j, piv);
        perm.swap(j, piv);
        let d = work[(j, j)].sqrt();
        l[(j, j)] = d;
        for i in j + 1..n {
            l[(i, j)] = work[(i, j)] / d;
        }
        for c in j + 1..n {
            for r in j + 1..n {
                work[(r, c)] -= l[(r, j)] * l[(c, j)];
            }
        }
    }
    // undo the permutation on rows: A = P^T L
    let mut out = DMatrix::<f64>::zeros(n, n);
    for (row, &orig) in perm.iter().enumerate() {
        out.set_row(orig, &l.row(row));
    }
    let resid = (&out * out.transpose() - a).abs().max();
    if resid > 1e-7 {
        return Err(Error::Matrix(format!("square-root factorization failed (residual {resid:e})")));
    }
    Ok(out)
}

/// Normalized covariance `E[(X_i - p)(X_j - p)] / (p - p^2)`.
pub fn covariance_from_distribution(d: &BiasedDistribution) -> Result<CovarianceMatrix> {
    let k = d.k();
    let p = d.p();
    let var = p - p * p;
    let m = d.second_moments();
    let mut entries = Vec::with_capacity(k * k);
    for i in 0..k {
        for j in 0..k {
            entries.push(if i == j { Rational::one() } else { (&m[i][j] - p * p) / &var });
        }
    }
    CovarianceMatrix::new(k, entries)
}

fn factorial(n: u32) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

/// Exact `E[prod_i H_{s_i}(Z_i)]` for `Z ~ N(0, Sigma)`.
pub fn hermite_product_expectation(s: &[u32], sigma: &CovarianceMatrix) -> Result<Rational> {
    MomentEngine::new(sigma).moment(s)
}

/// Caches powers of `t^T V t` so repeated moment queries share expansions.
pub struct MomentEngine {
    k: usize,
    q: SparsePoly,
    powers: Mutex<HashMap<u32, SparsePoly>>,
}

impl MomentEngine {
    pub fn new(sigma: &CovarianceMatrix) -> Self {
        MomentEngine { k: sigma.k(), q: sigma.quadratic_form(), powers: Mutex::new(HashMap::new()) }
    }

    pub fn moment(&self, s: &[u32]) -> Result<Rational> {
        if s.len() != self.k {
            return Err(Error::Index(format!("degree vector has length {}, expected {}", s.len(), self.k)));
        }
        let total: u32 = s.iter().sum();
        if total % 2 == 1 {
            return Ok(Rational::zero());
        }
        let d = total / 2;
        let coeff = {
            let mut cache = self.powers.lock().expect("moment cache poisoned");
            cache.entry(d).or_insert_with(|| poly_pow(&self.q, d)).coefficient(s)
        };
        if coeff.is_zero() {
            return Ok(coeff);
        }
        let num: BigInt = s.iter().map(|&x| factorial(x)).product();
        let den = factorial(d) * (BigInt::one() << d as usize);
        Ok(coeff * Rational::new(num, den))
    }
}

/// Draws from `N(0, Sigma)` through a fixed square-root factor.
pub struct GaussianSampler {
    factor: DMatrix<f64>,
}

impl GaussianSampler {
    pub fn new(sigma: &CovarianceMatrix) -> Result<Self> {
        Ok(GaussianSampler { factor: sigma.sqrt_factor()? })
    }

    pub fn k(&self) -> usize {
        self.factor.nrows()
    }

    pub fn sample_into<R: rand::Rng>(&self, rng: &mut R, g: &mut [f64], z: &mut [f64]) {
        let k = self.k();
        for gi in g.iter_mut() {
            *gi = StandardNormal.sample(rng);
        }
        for i in 0..k {
            z[i] = (0..k).map(|j| self.factor[(i, j)] * g[j]).sum();
        }
    }
}

/// Monte Carlo estimate of `E[prod_i H_{s_i}(Z_i)]`.
pub fn gaussian_mc_moment(s: &[u32], sigma: &CovarianceMatrix, samples: u64, seed: u64) -> Result<McEstimate> {
    if s.len() != sigma.k() {
        return Err(Error::Index(format!("degree vector has length {}, expected {}", s.len(), sigma.k())));
    }
    if let Some(&j) = s.iter().find(|&&j| j as usize > MAX_HERMITE_DEGREE) {
        return Err(Error::Degree { degree: j as usize, cap: MAX_HERMITE_DEGREE });
    }
    let sampler = GaussianSampler::new(sigma)?;
    let k = sigma.k();
    let stats = mc::run_sharded(
        samples,
        seed,
        |rng, count| {
            let (mut g, mut z) = (vec![0.0; k], vec![0.0; k]);
            let mut st = mc::Stats::default();
            for _ in 0..count {
                sampler.sample_into(rng, &mut g, &mut z);
                st.push(s.iter().zip(&z).map(|(&j, &x)| hermite_unchecked(j as usize, x)).product());
            }
            st
        },
        |acc: &mut mc::Stats, part| acc.merge(&part),
    );
    Ok(stats.estimate())
}
