//! Exact rational helpers. Rationals cross every text boundary as `"a/b"`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = num_rational::BigRational;

/// Parses `"a/b"` or `"a"`. Decimal notation is rejected so that no value
/// silently picks up binary rounding.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let t = s.trim();
    if t.is_empty() {
        return Err(Error::Parse("empty rational".into()));
    }
    if t.contains(['.', 'e', 'E']) {
        return Err(Error::Parse(format!(
            "'{t}' looks like a float; rationals must be written as a/b"
        )));
    }
    let (num, den) = match t.split_once('/') {
        Some((a, b)) => (a.trim(), b.trim()),
        None => (t, "1"),
    };
    let num: BigInt = num
        .parse()
        .map_err(|_| Error::Parse(format!("bad numerator in '{t}'")))?;
    let den: BigInt = den
        .parse()
        .map_err(|_| Error::Parse(format!("bad denominator in '{t}'")))?;
    if den.is_zero() {
        return Err(Error::Parse(format!("zero denominator in '{t}'")));
    }
    Ok(Rational::new(num, den))
}

/// Always writes `numer/denom`, including integers (`1/1`).
pub fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Exact conversion of a finite float.
pub fn from_f64(x: f64) -> Result<Rational> {
    Rational::from_float(x).ok_or_else(|| Error::Parse(format!("non-finite value {x}")))
}

/// Binomial coefficient, zero whenever `r < 0`, `n < 0` or `r > n`.
pub fn binomial(n: i64, r: i64) -> BigInt {
    if n < 0 || r < 0 || r > n {
        return BigInt::zero();
    }
    let r = r.min(n - r);
    let mut acc = BigInt::one();
    for i in 0..r {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

pub fn binomial_q(n: i64, r: i64) -> Rational {
    Rational::from_integer(binomial(n, r))
}

/// `p` strictly inside `(0, 1)`.
pub fn check_open_unit(p: &Rational, name: &str) -> Result<()> {
    if p.is_positive() && *p < Rational::one() {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            what: format!("{name} = {}", format_rational(p)),
            admissible: "(0, 1)".into(),
        })
    }
}

pub fn min_bias(p: &Rational) -> Rational {
    let q = Rational::one() - p;
    if *p < q {
        p.clone()
    } else {
        q
    }
}

/// Least common multiple of the denominators.
pub fn common_denominator<'a>(values: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    values
        .into_iter()
        .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}

/// Solves `A x = b` exactly. Returns the unique solution when the system is
/// consistent and `A` has full column rank, `None` otherwise.
pub fn solve_unique(a: &[Vec<Rational>], b: &[Rational]) -> Option<Vec<Rational>> {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut m: Vec<Vec<Rational>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    let mut pivot_row = 0;
    for col in 0..cols {
        let Some(pr) = (pivot_row..rows).find(|&r| !m[r][col].is_zero()) else {
            return None;
        };
        m.swap(pivot_row, pr);
        let inv = m[pivot_row][col].recip();
        for c in col..=cols {
            m[pivot_row][c] = &m[pivot_row][c] * &inv;
        }
        for r in 0..rows {
            if r != pivot_row && !m[r][col].is_zero() {
                let factor = m[r][col].clone();
                for c in col..=cols {
                    let delta = &factor * &m[pivot_row][c];
                    m[r][c] -= delta;
                }
            }
        }
        pivot_row += 1;
    }
    if m[pivot_row..].iter().any(|row| !row[cols].is_zero()) {
        return None;
    }
    Some((0..cols).map(|c| m[c][cols].clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_integers() {
        assert_eq!(parse_rational("2/5").unwrap(), rat(2, 5));
        assert_eq!(parse_rational(" 4/10 ").unwrap(), rat(2, 5));
        assert_eq!(parse_rational("-3").unwrap(), int(-3));
    }

    #[test]
    fn rejects_floats_and_zero_denominators() {
        assert!(matches!(parse_rational("0.4"), Err(Error::Parse(_))));
        assert!(matches!(parse_rational("1e-3"), Err(Error::Parse(_))));
        assert!(matches!(parse_rational("1/0"), Err(Error::Parse(_))));
        assert!(parse_rational("abc").is_err());
    }

    #[test]
    fn format_is_always_a_over_b() {
        assert_eq!(format_rational(&int(1)), "1/1");
        assert_eq!(format_rational(&rat(6, 25)), "6/25");
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(4, 2), BigInt::from(6));
        assert_eq!(binomial(0, 0), BigInt::from(1));
        assert_eq!(binomial(-1, 0), BigInt::from(0));
        assert_eq!(binomial(3, 4), BigInt::from(0));
        assert_eq!(binomial(24, 12), BigInt::from(2_704_156));
    }

    #[test]
    fn solve_detects_rank_and_consistency() {
        let a = vec![vec![int(1), int(1)], vec![int(1), int(-1)]];
        let x = solve_unique(&a, &[int(3), int(1)]).unwrap();
        assert_eq!(x, vec![int(2), int(1)]);
        // overdetermined but consistent
        let a = vec![vec![int(1)], vec![int(2)], vec![int(3)]];
        assert_eq!(solve_unique(&a, &[int(1), int(2), int(3)]).unwrap(), vec![int(1)]);
        assert!(solve_unique(&a, &[int(1), int(2), int(4)]).is_none());
        // rank deficient
        let a = vec![vec![int(1), int(2)], vec![int(2), int(4)]];
        assert!(solve_unique(&a, &[int(1), int(2)]).is_none());
    }
}
