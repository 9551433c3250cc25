//! JSON documents for kernel sets and prediction schemes.
//!
//! Matrices are stored row-major with shortest round-trip decimals, so a
//! reloaded set evaluates bit-for-bit like the original.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::{Generator, GeneratorSpec};
use crate::kernels::{KernelFamily, KernelSet};
use crate::polyphase::SamplingScheme;
use crate::prediction::PredictionScheme;

pub const FORMAT: &str = "pns-kernels/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftDocument {
    pub epsilons: Vec<f64>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelDocument {
    pub format: String,
    pub generator: GeneratorSpec,
    pub scheme: SamplingScheme,
    /// Rows of the zeroth inverse coefficient `A`.
    pub a: Vec<Vec<f64>>,
    /// Rows of the `z^{-1}` inverse coefficient `B`.
    pub b: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prediction: Option<ShiftDocument>,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn matrix(name: &str, rows: &[Vec<f64>], dim: usize) -> Result<DMatrix<f64>> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(Error::Serialization(format!("matrix {name} must be {dim}x{dim}")));
    }
    Ok(DMatrix::from_fn(dim, dim, |i, j| rows[i][j]))
}

impl KernelDocument {
    pub fn from_kernels(ks: &KernelSet) -> Self {
        Self {
            format: FORMAT.into(),
            generator: ks.generator().spec(),
            scheme: ks.scheme().clone(),
            a: rows(ks.a()),
            b: rows(ks.b()),
            prediction: None,
        }
    }

    pub fn from_prediction(ps: &PredictionScheme) -> Self {
        Self {
            prediction: Some(ShiftDocument {
                epsilons: ps.epsilons().to_vec(),
                weights: ps.weights().to_vec(),
            }),
            ..Self::from_kernels(ps.base())
        }
    }

    /// Rebuilds the kernel set, re-checking its structure.
    pub fn kernels(&self) -> Result<KernelSet> {
        if self.format != FORMAT {
            return Err(Error::Serialization(format!(
                "unsupported format {:?}, expected {FORMAT:?}",
                self.format
            )));
        }
        let gen = Generator::from_spec(&self.generator)?;
        let dim = self.scheme.rho();
        let a = matrix("a", &self.a, dim)?;
        let b = matrix("b", &self.b, dim)?;
        KernelSet::from_parts(gen, self.scheme.clone(), a, b)
    }

    /// Rebuilds the prediction scheme when shifts are present.
    pub fn prediction(&self) -> Result<Option<PredictionScheme>> {
        match &self.prediction {
            None => Ok(None),
            Some(doc) => Ok(Some(PredictionScheme::with_weights(
                self.kernels()?,
                doc.epsilons.clone(),
                doc.weights.clone(),
            )?)),
        }
    }

    pub fn to_json(&self) -> String {
        // Plain data with string keys; serialization cannot fail.
        serde_json::to_string_pretty(self).expect("kernel document serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))
    }
}
