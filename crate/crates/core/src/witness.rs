//! Gaussian counterexample pipeline: Hermite witness, truncation and
//! centering, embedding on the cube through the normalized coordinate sum,
//! and rounding to `±1` values.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cube::{mc_biased_correlations, CharacterIndex, CubeFunction, CubePoint, FunctionKind, RangeTag};
use crate::distributions::{eta, BiasedDistribution};
use crate::error::{Error, Result};
use crate::hermite::{covariance_from_distribution, hermite_unchecked, CovarianceMatrix, GaussianSampler, MomentEngine, MAX_HERMITE_DEGREE};
use crate::lintest::{product_expectation_mc, TestReport};
use crate::mc::{self, derive_seed, splitmix64, McEstimate, Stats};
use crate::polyalg::{find_all_coordinates_monomial, DEFAULT_D_MAX};
use crate::quadrature::{gaussian_expectation, gaussian_expectation_with};
use crate::rational::{format_rational, int, to_f64, Rational};

/// Range of the random integer coefficients.
pub const ALPHA_RANGE: i64 = 3;
const ALPHA_ATTEMPTS: usize = 1000;
/// Doublings of the truncation level before giving up.
pub const MAX_DOUBLINGS: u32 = 20;

/// `f_{s,alpha} = sum_j alpha_j H_{s_j}` with its exact product moment
/// `E[prod_i f(Z_i)]`, `Z ~ N(0, Sigma)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HermiteWitness {
    s: Vec<u32>,
    alpha: Vec<Rational>,
    product_moment: Rational,
}

impl HermiteWitness {
    /// Computes the product moment for given `s` and `alpha`. Errors if any
    /// `s_j = 0`, on length mismatch, or if the moment vanishes.
    pub fn from_parts(s: Vec<u32>, alpha: Vec<Rational>, sigma: &CovarianceMatrix) -> Result<Self> {
        Self::with_engine(s, alpha, sigma.k(), &MomentEngine::new(sigma))
    }

    fn with_engine(s: Vec<u32>, alpha: Vec<Rational>, k: usize, engine: &MomentEngine) -> Result<Self> {
        if s.len() != k || alpha.len() != k {
            return Err(Error::Index(format!("s and alpha need length {k}, got {} and {}", s.len(), alpha.len())));
        }
        if let Some(j) = s.iter().position(|&x| x == 0) {
            return Err(Error::Precondition(format!("s_{} = 0; every degree must be at least 1", j + 1)));
        }
        if let Some(&j) = s.iter().find(|&&x| x as usize > MAX_HERMITE_DEGREE) {
            return Err(Error::Degree { degree: j as usize, cap: MAX_HERMITE_DEGREE });
        }
        let product_moment = multilinear_moment(&s, &alpha, k, engine)?;
        if product_moment.is_zero() {
            return Err(Error::Precondition("product moment vanishes for this alpha".into()));
        }
        Ok(HermiteWitness { s, alpha, product_moment })
    }

    pub fn s(&self) -> &[u32] {
        &self.s
    }

    pub fn alpha(&self) -> &[Rational] {
        &self.alpha
    }

    pub fn product_moment(&self) -> &Rational {
        &self.product_moment
    }

    pub fn k(&self) -> usize {
        self.s.len()
    }

    /// Coefficients of `f` in the Hermite basis, by degree.
    pub fn hermite_coefficients(&self) -> BTreeMap<u32, Rational> {
        collect_by_degree(&self.s, &self.alpha)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.s.iter().zip(&self.alpha).map(|(&j, a)| to_f64(a) * hermite_unchecked(j as usize, x)).sum()
    }

    /// `f'(x)`, using `H_j' = j H_{j-1}`.
    pub fn derivative(&self, x: f64) -> f64 {
        self.s.iter().zip(&self.alpha).map(|(&j, a)| to_f64(a) * j as f64 * hermite_unchecked(j as usize - 1, x)).sum()
    }

    /// True when `f` is odd (every degree with a nonzero coefficient is odd).
    pub fn is_odd(&self) -> bool {
        self.hermite_coefficients().iter().all(|(j, c)| c.is_zero() || j % 2 == 1)
    }

    pub fn max_abs_alpha(&self) -> f64 {
        self.alpha.iter().map(|a| to_f64(&a.abs())).fold(0.0, f64::max)
    }
}

fn collect_by_degree(s: &[u32], alpha: &[Rational]) -> BTreeMap<u32, Rational> {
    let mut by: BTreeMap<u32, Rational> = BTreeMap::new();
    for (&j, a) in s.iter().zip(alpha) {
        *by.entry(j).or_insert_with(Rational::zero) += a;
    }
    by.retain(|_, c| !c.is_zero());
    by
}

/// `E[prod_i f(Z_i)]` expanded over degree assignments; `alpha` entries that
/// share a degree are merged first.
fn multilinear_moment(s: &[u32], alpha: &[Rational], k: usize, engine: &MomentEngine) -> Result<Rational> {
    let terms: Vec<(u32, Rational)> = collect_by_degree(s, alpha).into_iter().collect();
    if terms.is_empty() {
        return Ok(Rational::zero());
    }
    let m = terms.len();
    let mut total = Rational::zero();
    let mut pick = vec![0usize; k];
    loop {
        let degrees: Vec<u32> = pick.iter().map(|&t| terms[t].0).collect();
        let mom = engine.moment(&degrees)?;
        if !mom.is_zero() {
            let coeff: Rational = pick.iter().map(|&t| terms[t].1.clone()).product();
            total += coeff * mom;
        }
        let mut i = 0;
        loop {
            if i == k {
                return Ok(total);
            }
            pick[i] += 1;
            if pick[i] < m {
                break;
            }
            pick[i] = 0;
            i += 1;
        }
    }
}

/// Locates `(d, s)` through the symmetrized-power search and draws integer
/// `alpha` until the product moment is nonzero.
pub fn find_hermite_witness(sigma: &CovarianceMatrix, d_max: u32, seed: u64) -> Result<HermiteWitness> {
    let zero_rows = sigma.v_zero_rows();
    if !zero_rows.is_empty() {
        let rows: Vec<String> = zero_rows.iter().map(|i| (i + 1).to_string()).collect();
        return Err(Error::PairwiseIndependent(format!(
            "Sigma - I has all-zero row(s) {}; coordinate(s) uncorrelated with every other coordinate admit no witness",
            rows.join(", ")
        )));
    }
    let (_, s) = find_all_coordinates_monomial(&sigma.quadratic_form(), d_max)?
        .ok_or_else(|| Error::NotFound(format!("no all-coordinate monomial in Sym(q^d) for d = 1..={d_max}")))?;
    let k = sigma.k();
    let engine = MomentEngine::new(sigma);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..ALPHA_ATTEMPTS {
        let alpha: Vec<i64> = (0..k).map(|_| rng.random_range(-ALPHA_RANGE..=ALPHA_RANGE)).collect();
        if alpha.iter().all(|&a| a == 0) {
            continue;
        }
        let alpha = alpha.into_iter().map(int).collect();
        match HermiteWitness::with_engine(s.clone(), alpha, k, &engine) {
            Ok(w) => return Ok(w),
            Err(Error::Precondition(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::NotFound(format!("every one of {ALPHA_ATTEMPTS} coefficient draws gave a zero product moment for s = {s:?}")))
}

/// `h(x) = (clamp(f(x), -M, M) - c) / (2M)` with `c` the Gaussian mean of
/// the clamped polynomial.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundedWitnessFunction {
    base: HermiteWitness,
    m: f64,
    center: f64,
    lipschitz: f64,
}

/// Where the Lipschitz figure comes from.
pub const LIPSCHITZ_NOTE: &str = "max |f'(x)|/(2M) over a 1e-3 grid on [-12, 12] restricted to |f(x)| <= M; the clamp is 1-Lipschitz";

impl BoundedWitnessFunction {
    pub fn base(&self) -> &HermiteWitness {
        &self.base
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.base.eval(x).clamp(-self.m, self.m) - self.center) / (2.0 * self.m)
    }

    /// Gaussian mean of `h`, recomputed with a doubled initial partition.
    pub fn gaussian_mean_check(&self) -> Result<f64> {
        gaussian_expectation_with(|x| self.eval(x), 32)
    }
}

pub fn truncate_and_center(w: &HermiteWitness, m: f64) -> Result<BoundedWitnessFunction> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::OutOfRange { what: format!("truncation level M = {m}"), admissible: "M > 0".into() });
    }
    let center = if w.is_odd() { 0.0 } else { gaussian_expectation(|x| w.eval(x).clamp(-m, m))? };
    let mut slope: f64 = 0.0;
    let steps = 24_000;
    for i in 0..=steps {
        let x = -12.0 + 24.0 * i as f64 / steps as f64;
        if w.eval(x).abs() <= m {
            slope = slope.max(w.derivative(x).abs());
        }
    }
    Ok(BoundedWitnessFunction { base: w.clone(), m, center, lipschitz: slope / (2.0 * m) })
}

#[derive(Clone, Debug)]
pub struct TruncationChoice {
    pub bounded: BoundedWitnessFunction,
    /// MC estimate of `E[prod_i h(Z_i)]`, `Z ~ N(0, Sigma)`.
    pub estimate: McEstimate,
    /// Number of doublings used.
    pub doublings: u32,
}

impl TruncationChoice {
    pub fn m(&self) -> f64 {
        self.bounded.m
    }

    /// Half the magnitude of the Gaussian estimate.
    pub fn alpha_const(&self) -> f64 {
        self.estimate.estimate.abs() / 2.0
    }
}

pub fn initial_truncation_level(w: &HermiteWitness) -> f64 {
    let degree = *w.s.iter().max().unwrap_or(&1) as f64;
    2.0 * f64::max(1.0, w.max_abs_alpha() * degree)
}

/// Gaussian Monte Carlo of `prod_i h(Z_i)`.
pub fn gaussian_product_mc(h: &BoundedWitnessFunction, sigma: &CovarianceMatrix, samples: u64, seed: u64) -> Result<McEstimate> {
    let sampler = GaussianSampler::new(sigma)?;
    let k = sigma.k();
    let stats = mc::run_sharded(
        samples,
        seed,
        |rng, count| {
            let (mut g, mut z) = (vec![0.0; k], vec![0.0; k]);
            let mut st = Stats::default();
            for _ in 0..count {
                sampler.sample_into(rng, &mut g, &mut z);
                st.push(z.iter().map(|&x| h.eval(x)).product());
            }
            st
        },
        |acc: &mut Stats, part| acc.merge(&part),
    );
    Ok(stats.estimate())
}

/// First `M` on the doubling schedule whose Gaussian estimate keeps half of
/// the untruncated normalized moment (up to three standard errors).
pub fn choose_truncation_level(w: &HermiteWitness, sigma: &CovarianceMatrix, samples: u64, seed: u64) -> Result<TruncationChoice> {
    let k = sigma.k() as i32;
    let moment = to_f64(&w.product_moment).abs();
    let mut m = initial_truncation_level(w);
    for doublings in 0..=MAX_DOUBLINGS {
        let bounded = truncate_and_center(w, m)?;
        let estimate = gaussian_product_mc(&bounded, sigma, samples, seed)?;
        let target = 0.5 * moment / (2.0 * m).powi(k);
        if estimate.estimate.abs() >= target - 3.0 * estimate.stderr {
            return Ok(TruncationChoice { bounded, estimate, doublings });
        }
        m *= 2.0;
    }
    Err(Error::Convergence(format!("no truncation level accepted after {MAX_DOUBLINGS} doublings (last M = {})", m / 2.0)))
}

/// `x -> h((|x| - n p) / sqrt(n p (1 - p)))`, stored by Hamming weight.
pub fn clt_cube_function(h: &BoundedWitnessFunction, p: &Rational, n: usize) -> Result<CubeFunction> {
    clt_embed(|t| h.eval(t), p, n)
}

pub fn clt_embed(h: impl Fn(f64) -> f64, p: &Rational, n: usize) -> Result<CubeFunction> {
    if n == 0 {
        return Err(Error::OutOfRange { what: "n = 0".into(), admissible: "n >= 1".into() });
    }
    let pf = to_f64(p);
    let scale = (n as f64 * pf * (1.0 - pf)).sqrt();
    let values = (0..=n).map(|w| h((w as f64 - n as f64 * pf) / scale)).collect();
    CubeFunction::symmetric(n, values)
}

/// Keyed hash of `(seed, x)` mapped to `[0, 1)`.
#[inline]
pub fn point_uniform(seed: u64, x: &CubePoint) -> f64 {
    let mut h = splitmix64(seed ^ (x.n() as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    for &w in x.words() {
        h = splitmix64(h ^ w);
    }
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// `g(x) = +1` iff `u(seed, x) < (1 + f(x)) / 2`.
pub fn round_to_signs(f: &CubeFunction, seed: u64) -> Result<CubeFunction> {
    let n = f.n();
    let sign = move |v: f64, x: &CubePoint| if point_uniform(seed, x) < (1.0 + v) / 2.0 { 1.0 } else { -1.0 };
    match f.kind() {
        FunctionKind::Dense(t) => {
            let values = t.iter().enumerate().map(|(i, &v)| sign(v, &CubePoint::from_index(i as u32, n))).collect();
            CubeFunction::dense(n, values)
        }
        _ => {
            let inner = f.clone();
            Ok(CubeFunction::handle(n, RangeTag::Signs, Arc::new(move |x: &CubePoint| sign(inner.eval(x), x))))
        }
    }
}

#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub n: usize,
    pub samples: u64,
    pub seed: u64,
    pub d_max: u32,
    pub pairs: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig { n: 2000, samples: 100_000, seed: 0, d_max: DEFAULT_D_MAX as u32, pairs: 100 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CorrelationProbe {
    pub set: String,
    pub estimate: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub n: usize,
    pub samples: u64,
    pub seed: u64,
    pub eta: String,
    pub alpha_const: f64,
    pub gaussian_estimate: f64,
    pub gaussian_stderr: f64,
    pub product: TestReport,
    pub product_pass: bool,
    pub probes: usize,
    pub max_abs_correlation: f64,
    pub worst_probe: CorrelationProbe,
    pub correlation_bound: f64,
    pub correlation_pass: bool,
    pub rounded_product: Option<TestReport>,
    pub rounded_pass: Option<bool>,
}

#[derive(Clone, Debug)]
pub struct Counterexample {
    pub sigma: CovarianceMatrix,
    pub witness: HermiteWitness,
    pub truncation: TruncationChoice,
    pub function: CubeFunction,
    pub report: VerificationReport,
}

/// Correlation threshold for the probes.
pub const CORRELATION_BOUND: f64 = 0.05;

/// Singletons, `pairs` seeded random pairs, and the full set.
pub fn probe_sets(n: usize, pairs: usize, seed: u64) -> Result<Vec<CharacterIndex>> {
    let mut sets: Vec<CharacterIndex> = (0..n).map(|j| CharacterIndex::from_coords(n, &[j])).collect::<Result<_>>()?;
    if n >= 2 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..pairs {
            let a = rng.random_range(0..n);
            let mut b = rng.random_range(0..n - 1);
            if b >= a {
                b += 1;
            }
            sets.push(CharacterIndex::from_coords(n, &[a, b])?);
        }
    }
    sets.push(CharacterIndex::full(n));
    Ok(sets)
}

/// The full construction followed by the verification battery. Every
/// stochastic step draws its seed from `derive_seed(config.seed, name)`.
pub fn build_counterexample(d: &BiasedDistribution, config: &PipelineConfig) -> Result<Counterexample> {
    let sigma = covariance_from_distribution(d)?;
    let witness = find_hermite_witness(&sigma, config.d_max, derive_seed(config.seed, "alpha"))?;
    let truncation = choose_truncation_level(&witness, &sigma, config.samples, derive_seed(config.seed, "truncation"))?;
    let function = clt_cube_function(&truncation.bounded, d.p(), config.n)?;
    let alpha_const = truncation.alpha_const();

    let product = product_expectation_mc(&function, d, config.n, config.samples, derive_seed(config.seed, "product"))?;
    let product_pass = product.expectation.abs() >= alpha_const - 3.0 * product.stderr;

    let sets = probe_sets(config.n, config.pairs, derive_seed(config.seed, "pairs"))?;
    let estimates = mc_biased_correlations(&function, &sets, d.p(), config.samples, derive_seed(config.seed, "correlation"))?;
    let (worst, worst_est) = sets
        .iter()
        .zip(&estimates)
        .max_by(|a, b| a.1.estimate.abs().total_cmp(&b.1.estimate.abs()))
        .expect("at least the full set is probed");
    let max_abs_correlation = worst_est.estimate.abs();

    let eta_value = eta(d)?;
    let (rounded_product, rounded_pass) = if eta_value < Rational::from_integer(1.into()) {
        let g = round_to_signs(&function, derive_seed(config.seed, "rounding"))?;
        let r = product_expectation_mc(&g, d, config.n, config.samples, derive_seed(config.seed, "rounded-product"))?;
        let pass = r.expectation.abs() >= alpha_const / 2.0 - 3.0 * r.stderr;
        (Some(r), Some(pass))
    } else {
        (None, None)
    };

    let report = VerificationReport {
        n: config.n,
        samples: config.samples,
        seed: config.seed,
        eta: format_rational(&eta_value),
        alpha_const,
        gaussian_estimate: truncation.estimate.estimate,
        gaussian_stderr: truncation.estimate.stderr,
        product,
        product_pass,
        probes: sets.len(),
        max_abs_correlation,
        worst_probe: CorrelationProbe { set: worst.to_string(), estimate: worst_est.estimate, stderr: worst_est.stderr },
        correlation_bound: CORRELATION_BOUND,
        correlation_pass: max_abs_correlation <= CORRELATION_BOUND,
        rounded_product,
        rounded_pass,
    };
    Ok(Counterexample { sigma, witness, truncation, function, report })
}
