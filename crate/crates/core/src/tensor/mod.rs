//! Dense tensors and the small set of neural blocks the runtime needs.
//!
//! Everything here is a pure function over immutable inputs. The blocks are
//! sized for control and assignment workloads (vectors of tens of elements),
//! so the implementations favour plain loops over anything clever.

mod activation;
mod attention;
mod dense;
mod mlp;
pub mod weights;

pub use activation::{softplus_shift, softplus_shift_f64};
pub use attention::{attention_forward, AttentionLayer, AttentionSpec};
pub use dense::Dense;
pub use mlp::{mlp_forward, Activation, MlpSpec};

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    Shape {
        context: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("invalid shape {shape:?}: dimensions must be positive and non-empty")]
    InvalidShape { shape: Vec<usize> },
    #[error("shape {shape:?} holds {expected} elements but data has {actual}")]
    DataLength {
        shape: Vec<usize>,
        expected: usize,
        actual: usize,
    },
    #[error("{0}")]
    Spec(String),
    #[error("attention context is empty; apply a neighborhood fallback first")]
    EmptyContext,
}

/// Row-major dense array of `f32`.
#[derive(Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f32>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f32>) -> Result<Self, TensorError> {
        if shape.is_empty() || shape.contains(&0) {
            return Err(TensorError::InvalidShape { shape });
        }
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(TensorError::DataLength {
                shape,
                expected,
                actual: data.len(),
            });
        }
        Ok(Self { shape, data })
    }

    /// One-dimensional tensor. Panics on an empty vector.
    pub fn vector(data: Vec<f32>) -> Self {
        assert!(!data.is_empty(), "vector tensors need at least one element");
        Self {
            shape: vec![data.len()],
            data,
        }
    }

    pub fn zeros(shape: Vec<usize>) -> Result<Self, TensorError> {
        let n = shape.iter().product();
        Self::new(shape, vec![0.0; n])
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Length of a rank-1 tensor; a shape error for anything else.
    pub fn vector_len(&self, context: &'static str) -> Result<usize, TensorError> {
        if self.shape.len() != 1 {
            return Err(TensorError::Shape {
                context,
                expected: 1,
                actual: self.shape.len(),
            });
        }
        Ok(self.data.len())
    }

    pub fn map(&self, f: impl Fn(f32) -> f32) -> Tensor {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Row `i` of a rank-2 tensor.
    pub fn row(&self, i: usize) -> Option<&[f32]> {
        if self.shape.len() != 2 || i >= self.shape[0] {
            return None;
        }
        let cols = self.shape[1];
        Some(&self.data[i * cols..(i + 1) * cols])
    }
}

impl fmt::Debug for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Tensor{:?}{:?}", self.shape, self.data)
    }
}

pub(crate) fn check_len(
    context: &'static str,
    expected: usize,
    actual: usize,
) -> Result<(), TensorError> {
    if expected == actual {
        Ok(())
    } else {
        Err(TensorError::Shape {
            context,
            expected,
            actual,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn new_rejects_bad_shapes() {
        assert!(matches!(
            Tensor::new(vec![], vec![1.0]),
            Err(TensorError::InvalidShape { .. })
        ));
        assert!(matches!(
            Tensor::new(vec![2, 0], vec![]),
            Err(TensorError::InvalidShape { .. })
        ));
        assert!(matches!(
            Tensor::new(vec![2, 2], vec![1.0; 3]),
            Err(TensorError::DataLength { expected: 4, actual: 3, .. })
        ));
    }

    #[test]
    fn row_access() {
        let t = Tensor::new(vec![2, 3], vec![1., 2., 3., 4., 5., 6.]).unwrap();
        assert_eq!(t.row(1), Some(&[4., 5., 6.][..]));
        assert_eq!(t.row(2), None);
    }
}
