use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Periodic nonuniform sampling set `X = { x_n + rho l : 0 <= n < L, l in Z }`
/// where each point carries the samples `f, f', ..., f^(r-1)`.
///
/// Row `i` of the polyphase matrix belongs to offset `x_{i / r}` and
/// derivative order `i mod r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SchemeFields", into = "SchemeFields")]
pub struct SamplingScheme {
    rho: usize,
    r: usize,
    offsets: Vec<f64>,
    cell: Option<usize>,
}

#[derive(Serialize, Deserialize)]
struct SchemeFields {
    rho: usize,
    r: usize,
    offsets: Vec<f64>,
}

impl TryFrom<SchemeFields> for SamplingScheme {
    type Error = Error;

    fn try_from(fields: SchemeFields) -> Result<Self> {
        SamplingScheme::new(fields.rho, fields.r, fields.offsets)
    }
}

impl From<SamplingScheme> for SchemeFields {
    fn from(scheme: SamplingScheme) -> Self {
        SchemeFields {
            rho: scheme.rho,
            r: scheme.r,
            offsets: scheme.offsets,
        }
    }
}

impl SamplingScheme {
    /// General scheme: `rho = L r`, offsets strictly increasing in `[0, rho)`.
    pub fn new(rho: usize, r: usize, offsets: Vec<f64>) -> Result<Self> {
        let len = offsets.len();
        if r == 0 || len == 0 {
            return Err(Error::InvalidScheme(
                "need at least one offset and one derivative".into(),
            ));
        }
        if rho != len * r {
            return Err(Error::InvalidScheme(format!(
                "period rho = {rho} must equal L * r = {len} * {r}"
            )));
        }
        if offsets.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidScheme("offsets must be finite".into()));
        }
        if offsets.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidScheme(
                "offsets must be strictly increasing".into(),
            ));
        }
        if offsets[0] < 0.0 || offsets[len - 1] >= rho as f64 {
            return Err(Error::InvalidScheme(format!(
                "offsets must lie in [0, {rho})"
            )));
        }
        let first = offsets[0].floor();
        let cell = offsets
            .iter()
            .all(|x| x.floor() == first)
            .then_some(first as usize);
        Ok(Self {
            rho,
            r,
            offsets,
            cell,
        })
    }

    /// Scheme whose offsets all lie in the unit cell `[s, s + 1)`.
    pub fn in_cell(rho: usize, r: usize, s: usize, offsets: Vec<f64>) -> Result<Self> {
        let scheme = Self::new(rho, r, offsets)?;
        if scheme.cell != Some(s) {
            return Err(Error::InvalidScheme(format!(
                "offsets must lie in the cell [{s}, {})",
                s + 1
            )));
        }
        Ok(scheme)
    }

    /// `L = rho / r` equally spaced offsets `s + n / L`.
    pub fn equispaced(rho: usize, r: usize, s: usize) -> Result<Self> {
        let len = Self::pattern_len(rho, r)?;
        let offsets = (0..len).map(|n| s as f64 + n as f64 / len as f64).collect();
        Self::in_cell(rho, r, s, offsets)
    }

    /// Chebyshev nodes of the cell, `s + 1/2 - cos((2n + 1) pi / (2L)) / 2`.
    pub fn chebyshev(rho: usize, r: usize, s: usize) -> Result<Self> {
        let len = Self::pattern_len(rho, r)?;
        let offsets = (0..len)
            .map(|n| {
                let angle = (2 * n + 1) as f64 * PI / (2 * len) as f64;
                s as f64 + 0.5 - 0.5 * angle.cos()
            })
            .collect();
        Self::in_cell(rho, r, s, offsets)
    }

    fn pattern_len(rho: usize, r: usize) -> Result<usize> {
        if r == 0 || rho == 0 || rho % r != 0 {
            return Err(Error::InvalidScheme(format!(
                "rho = {rho} is not a positive multiple of r = {r}"
            )));
        }
        Ok(rho / r)
    }

    pub fn rho(&self) -> usize {
        self.rho
    }

    /// Pattern length `L`.
    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    /// Number of derivative channels per offset.
    pub fn r(&self) -> usize {
        self.r
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    /// The common cell `s` when every offset lies in `[s, s + 1)`.
    pub fn cell(&self) -> Option<usize> {
        self.cell
    }

    /// Offset `t_i = x_{i / r}` of polyphase row `i`.
    pub fn row_offset(&self, i: usize) -> f64 {
        self.offsets[i / self.r]
    }

    /// Derivative order `d_i = i mod r` of polyphase row `i`.
    pub fn row_derivative(&self, i: usize) -> usize {
        i % self.r
    }

    /// Sampling point `x_n + rho l`.
    pub fn sample_point(&self, n: usize, l: i64) -> f64 {
        self.offsets[n] + (self.rho as i64 * l) as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn example_schemes() {
        let eq = SamplingScheme::equispaced(4, 1, 0).unwrap();
        assert_eq!(eq.offsets(), &[0.0, 0.25, 0.5, 0.75]);
        assert_eq!(eq.cell(), Some(0));
        let cheb = SamplingScheme::chebyshev(4, 1, 0).unwrap();
        assert_abs_diff_eq!(cheb.offsets()[0], 0.5 - 0.5 * (PI / 8.0).cos(), epsilon = 1e-15);
        let two = SamplingScheme::in_cell(4, 2, 0, vec![0.5, 0.75]).unwrap();
        assert_eq!(two.len(), 2);
        assert_eq!(two.row_offset(3), 0.75);
        assert_eq!(two.row_derivative(3), 1);
    }

    #[test]
    fn invariants_are_enforced() {
        assert!(SamplingScheme::new(4, 1, vec![0.0, 0.5]).is_err());
        assert!(SamplingScheme::new(2, 1, vec![0.5, 0.25]).is_err());
        assert!(SamplingScheme::new(2, 1, vec![0.5, 0.5]).is_err());
        assert!(SamplingScheme::new(2, 1, vec![-0.5, 0.5]).is_err());
        assert!(SamplingScheme::in_cell(4, 2, 0, vec![0.5, 2.5]).is_err());
        let split = SamplingScheme::new(4, 2, vec![0.5, 2.5]).unwrap();
        assert_eq!(split.cell(), None);
    }

    #[test]
    fn serde_revalidates() {
        let scheme = SamplingScheme::equispaced(4, 2, 1).unwrap();
        let json = serde_json::to_string(&scheme).unwrap();
        let back: SamplingScheme = serde_json::from_str(&json).unwrap();
        assert_eq!(back, scheme);
        assert!(serde_json::from_str::<SamplingScheme>(r#"{"rho":3,"r":1,"offsets":[0.5]}"#).is_err());
    }
}
