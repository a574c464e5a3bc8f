use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_len, Dense, Tensor, TensorError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Relu,
    None,
}

impl Activation {
    fn apply(self, v: &mut [f32]) {
        if self == Activation::Relu {
            v.iter_mut().for_each(|x| *x = x.max(0.0));
        }
    }
}

/// Stack of affine layers with one hidden activation. The final layer is
/// always linear.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpSpec {
    layers: Vec<Dense>,
    activation: Activation,
}

impl MlpSpec {
    pub fn new(layers: Vec<Dense>, activation: Activation) -> Result<Self, TensorError> {
        if layers.is_empty() {
            return Err(TensorError::Spec("an MLP needs at least one layer".into()));
        }
        for (l, pair) in layers.windows(2).enumerate() {
            if pair[1].cols() != pair[0].rows() {
                return Err(TensorError::Spec(format!(
                    "layer {} expects input width {}, but layer {l} produces {}",
                    l + 1,
                    pair[1].cols(),
                    pair[0].rows()
                )));
            }
        }
        Ok(Self { layers, activation })
    }

    /// Random network with the given widths, input first.
    pub fn random<R: Rng + ?Sized>(
        layer_dims: &[usize],
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        assert!(layer_dims.len() >= 2, "need input and output widths");
        let layers = layer_dims
            .windows(2)
            .map(|w| Dense::random(w[1], w[0], rng))
            .collect();
        Self { layers, activation }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            layers: vec![Dense::identity(dim)],
            activation: Activation::None,
        }
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].cols()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].rows()
    }

    pub fn layer_dims(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(Dense::rows))
            .collect()
    }

    pub(crate) fn forward_slice(&self, input: &[f32]) -> Result<Vec<f32>, TensorError> {
        check_len("mlp input", self.input_dim(), input.len())?;
        let last = self.layers.len() - 1;
        let mut x = input.to_vec();
        for (l, layer) in self.layers.iter().enumerate() {
            x = layer.apply(&x);
            if l < last {
                self.activation.apply(&mut x);
            }
        }
        Ok(x)
    }
}

pub fn mlp_forward(spec: &MlpSpec, input: &Tensor) -> Result<Tensor, TensorError> {
    input.vector_len("mlp input rank")?;
    spec.forward_slice(input.data()).map(Tensor::vector)
}
