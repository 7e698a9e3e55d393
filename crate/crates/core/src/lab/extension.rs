use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::LabError;

/// Affine map `y = A x + b`, fitted by least squares.
///
/// Trained embeddings are free parameters of the training points only; this
/// map carries the learned geometry over to samples that were not trained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    /// Row `r` holds the coefficients of output coordinate `r`.
    pub matrix: Vec<Vec<f64>>,
    pub offset: Vec<f64>,
}

impl AffineMap {
    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: (0..dim)
                .map(|r| (0..dim).map(|c| if r == c { 1.0 } else { 0.0 }).collect())
                .collect(),
            offset: vec![0.0; dim],
        }
    }

    pub fn fit(inputs: &[Vec<f64>], outputs: &[Vec<f64>]) -> Result<Self, LabError> {
        if inputs.len() != outputs.len() || inputs.is_empty() {
            return Err(LabError::InsufficientData(
                "affine fit needs paired, non-empty samples".into(),
            ));
        }
        let d_in = inputs[0].len();
        let d_out = outputs[0].len();
        let n = inputs.len();
        let design = DMatrix::from_fn(
            n,
            d_in + 1,
            |r, c| if c < d_in { inputs[r][c] } else { 1.0 },
        );
        let target = DMatrix::from_fn(n, d_out, |r, c| outputs[r][c]);
        let coeffs = design
            .svd(true, true)
            .solve(&target, 1e-12)
            .map_err(|e| LabError::InsufficientData(format!("affine fit failed: {e}")))?;
        Ok(Self {
            matrix: (0..d_out)
                .map(|o| (0..d_in).map(|i| coeffs[(i, o)]).collect())
                .collect(),
            offset: (0..d_out).map(|o| coeffs[(d_in, o)]).collect(),
        })
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matrix
            .iter()
            .zip(&self.offset)
            .map(|(row, b)| row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() + b)
            .collect()
    }
}
