//! Adaptive Gauss-Kronrod (7/15) quadrature and Gaussian expectations.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5) and the center.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Half-width of the Gaussian integration window.
pub const GAUSS_WINDOW: f64 = 12.0;
/// Absolute tolerance for Gaussian means.
pub const GAUSS_TOL: f64 = 1e-10;

const MAX_INTERVALS: usize = 20_000;

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Integral of `f` over `[a, b]`, starting from `pieces` equal subintervals
/// and bisecting the worst interval until the error estimate is below `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, pieces: usize, tol: f64) -> Result<f64> {
    let pieces = pieces.max(1);
    let w = (b - a) / pieces as f64;
    let mut intervals: Vec<(f64, f64, f64, f64)> = (0..pieces)
        .map(|i| {
            let (lo, hi) = (a + w * i as f64, a + w * (i + 1) as f64);
            let (v, e) = kronrod(&f, lo, hi);
            (lo, hi, v, e)
        })
        .collect();
    loop {
        let err: f64 = intervals.iter().map(|t| t.3).sum();
        if err <= tol {
            return Ok(intervals.iter().map(|t| t.2).sum());
        }
        if intervals.len() >= MAX_INTERVALS {
            return Err(Error::Convergence(format!("quadrature error estimate {err:e} above {tol:e}")));
        }
        let (worst, _) = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("at least one interval");
        let (lo, hi, _, _) = intervals.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        for (l, r) in [(lo, mid), (mid, hi)] {
            let (v, e) = kronrod(&f, l, r);
            intervals.push((l, r, v, e));
        }
    }
}

pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// `E[f(Z)]`, `Z ~ N(0,1)`, over `[-12, 12]` (the tail mass beyond is
/// below `1e-32` for bounded `f`).
pub fn gaussian_expectation<F: Fn(f64) -> f64>(f: F) -> Result<f64> {
    gaussian_expectation_with(f, 16)
}

pub fn gaussian_expectation_with<F: Fn(f64) -> f64>(f: F, pieces: usize) -> Result<f64> {
    integrate(|x| f(x) * std_normal_pdf(x), -GAUSS_WINDOW, GAUSS_WINDOW, pieces, GAUSS_TOL)
}

/// The same expectation recomputed with the initial partition doubled;
/// returns both values.
pub fn gaussian_expectation_checked<F: Fn(f64) -> f64>(f: F) -> Result<(f64, f64)> {
    Ok((gaussian_expectation_with(&f, 16)?, gaussian_expectation_with(&f, 32)?))
}
