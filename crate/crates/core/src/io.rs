//! JSON file formats: distributions, dense functions, witnesses, reports and
//! covariance matrices. Rationals are written as `"a/b"` strings.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cube::CubeFunction;
use crate::distributions::{bit_string, parse_bit_string, BiasedDistribution};
use crate::error::{Error, Result};
use crate::hermite::CovarianceMatrix;
use crate::rational::{format_rational, parse_rational, Rational};
use crate::witness::BoundedWitnessFunction;

#[derive(Debug, Serialize, Deserialize)]
pub struct DistributionFile {
    pub k: usize,
    pub p: String,
    pub probs: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<String>>,
}

impl DistributionFile {
    pub fn from_distribution(d: &BiasedDistribution) -> Self {
        DistributionFile {
            k: d.k(),
            p: format_rational(d.p()),
            probs: d.probs().iter().map(|(&x, pr)| (bit_string(x, d.k()), format_rational(pr))).collect(),
            q: d.q().map(|q| q.iter().map(format_rational).collect()),
        }
    }

    /// Validates every invariant; a supplied `q` must match the table.
    pub fn into_distribution(self) -> Result<BiasedDistribution> {
        let p = parse_rational(&self.p)?;
        let mut probs = BTreeMap::new();
        for (bits, v) in &self.probs {
            let x = parse_bit_string(bits, self.k)?;
            if probs.insert(x, parse_rational(v)?).is_some() {
                return Err(Error::Parse(format!("duplicate support point {bits}")));
            }
        }
        let d = BiasedDistribution::new(self.k, p, probs)?;
        if let Some(q) = &self.q {
            let q: Vec<Rational> = q.iter().map(|s| parse_rational(s)).collect::<Result<_>>()?;
            if d.q() != Some(q.as_slice()) {
                return Err(Error::InvalidDistribution("the q field does not match the probability table".into()));
            }
        }
        Ok(d)
    }
}

pub fn distribution_to_json(d: &BiasedDistribution) -> String {
    to_pretty(&DistributionFile::from_distribution(d))
}

pub fn distribution_from_json(text: &str) -> Result<BiasedDistribution> {
    serde_json::from_str::<DistributionFile>(text)?.into_distribution()
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FunctionFile {
    pub n: usize,
    pub values: Vec<f64>,
}

pub fn function_to_json(f: &CubeFunction) -> Result<String> {
    let values = f.to_dense()?.as_ref().clone();
    Ok(to_pretty(&FunctionFile { n: f.n(), values }))
}

pub fn function_from_json(text: &str) -> Result<CubeFunction> {
    let file: FunctionFile = serde_json::from_str(text)?;
    CubeFunction::dense(file.n, file.values)
}

#[derive(Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessFile {
    pub s: Vec<u32>,
    pub alpha: Vec<String>,
    pub product_moment: String,
    #[serde(rename = "M")]
    pub m: f64,
    pub center: f64,
    pub seed: u64,
}

impl WitnessFile {
    pub fn new(h: &BoundedWitnessFunction, seed: u64) -> Self {
        let w = h.base();
        WitnessFile {
            s: w.s().to_vec(),
            alpha: w.alpha().iter().map(format_rational).collect(),
            product_moment: format_rational(w.product_moment()),
            m: h.m(),
            center: h.center(),
            seed,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SigmaFile {
    pub sigma: Vec<Vec<String>>,
}

pub fn sigma_from_json(text: &str) -> Result<CovarianceMatrix> {
    let file: SigmaFile = serde_json::from_str(text)?;
    let k = file.sigma.len();
    if let Some(row) = file.sigma.iter().find(|r| r.len() != k) {
        return Err(Error::Matrix(format!("row of length {} in a {k}x{k} matrix", row.len())));
    }
    let entries = file.sigma.iter().flatten().map(|s| parse_rational(s)).collect::<Result<_>>()?;
    CovarianceMatrix::new(k, entries)
}

pub fn sigma_to_json(sigma: &CovarianceMatrix) -> String {
    let k = sigma.k();
    let rows = (0..k).map(|i| (0..k).map(|j| format_rational(sigma.entry(i, j))).collect()).collect();
    to_pretty(&SigmaFile { sigma: rows })
}

/// Pretty JSON with a trailing newline.
pub fn to_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))
}

pub fn read_distribution(path: &Path) -> Result<BiasedDistribution> {
    distribution_from_json(&read_text(path)?)
}
