use rand::Rng;

use super::TensorError;

/// Affine layer `y = W x + b` with `W` stored row-major as `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    rows: usize,
    cols: usize,
    weights: Vec<f32>,
    bias: Vec<f32>,
}

impl Dense {
    pub fn new(
        rows: usize,
        cols: usize,
        weights: Vec<f32>,
        bias: Vec<f32>,
    ) -> Result<Self, TensorError> {
        if rows == 0 || cols == 0 {
            return Err(TensorError::Spec(format!(
                "dense layer must have positive dims, got {rows}x{cols}"
            )));
        }
        if weights.len() != rows * cols {
            return Err(TensorError::Spec(format!(
                "dense weights: expected {} values for {rows}x{cols}, got {}",
                rows * cols,
                weights.len()
            )));
        }
        if bias.len() != rows {
            return Err(TensorError::Spec(format!(
                "dense bias: expected {rows} values, got {}",
                bias.len()
            )));
        }
        Ok(Self {
            rows,
            cols,
            weights,
            bias,
        })
    }

    pub fn identity(n: usize) -> Self {
        let mut weights = vec![0.0; n * n];
        for i in 0..n {
            weights[i * n + i] = 1.0;
        }
        Self {
            rows: n,
            cols: n,
            weights,
            bias: vec![0.0; n],
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            weights: vec![0.0; rows * cols],
            bias: vec![0.0; rows],
        }
    }

    /// Glorot-uniform weights and small uniform biases.
    pub fn random<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Self {
        let limit = (6.0 / (rows + cols) as f32).sqrt();
        let weights = (0..rows * cols)
            .map(|_| rng.random_range(-limit..limit))
            .collect();
        let bias = (0..rows).map(|_| rng.random_range(-0.1..0.1)).collect();
        Self {
            rows,
            cols,
            weights,
            bias,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn weights(&self) -> &[f32] {
        &self.weights
    }

    pub fn bias(&self) -> &[f32] {
        &self.bias
    }

    pub fn without_bias(mut self) -> Self {
        self.bias.iter_mut().for_each(|b| *b = 0.0);
        self
    }

    pub(crate) fn apply(&self, input: &[f32]) -> Vec<f32> {
        debug_assert_eq!(input.len(), self.cols);
        self.weights
            .chunks_exact(self.cols)
            .zip(&self.bias)
            .map(|(row, b)| {
                let mut acc = 0.0f32;
                for (w, x) in row.iter().zip(input) {
                    acc += w * x;
                }
                acc + b
            })
            .collect()
    }
}
