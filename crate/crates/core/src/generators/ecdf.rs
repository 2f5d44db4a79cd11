use alloc::vec::Vec;

use crate::{Error, Result};

/// Right-continuous step CDF over the distinct observed values.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EmpiricalCdf {
    support: Vec<f64>,
    cumulative: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn build(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::input("empirical CDF needs at least one value"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("empirical CDF values must be finite"));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len() as f64;
        let mut support = Vec::new();
        let mut cumulative = Vec::new();
        for (i, &v) in sorted.iter().enumerate() {
            if support.last() == Some(&v) {
                *cumulative.last_mut().unwrap() = (i + 1) as f64 / n;
            } else {
                support.push(v);
                cumulative.push((i + 1) as f64 / n);
            }
        }
        Ok(EmpiricalCdf { support, cumulative })
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    /// `P(X <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        let k = self.support.partition_point(|&s| s <= x);
        if k == 0 {
            0.0
        } else {
            self.cumulative[k - 1]
        }
    }

    /// Smallest support value whose cumulative probability reaches `u`.
    pub fn inverse(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u <= 1.0) {
            return Err(Error::param("u", "must lie in (0, 1]"));
        }
        let k = self.cumulative.partition_point(|&p| p < u);
        Ok(self.support[k.min(self.support.len() - 1)])
    }
}

pub fn ecdf_build(values: &[f64]) -> Result<EmpiricalCdf> {
    EmpiricalCdf::build(values)
}

pub fn ecdf_inverse(cdf: &EmpiricalCdf, u: f64) -> Result<f64> {
    cdf.inverse(u)
}
