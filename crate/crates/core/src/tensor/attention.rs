use rand::Rng;

use super::{check_len, Dense, Tensor, TensorError};

/// Query/key/value/output projections for one attention layer, each
/// `model_dim × model_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionLayer {
    pub query: Dense,
    pub key: Dense,
    pub value: Dense,
    pub output: Dense,
}

impl AttentionLayer {
    pub fn identity(model_dim: usize) -> Self {
        Self {
            query: Dense::identity(model_dim),
            key: Dense::identity(model_dim),
            value: Dense::identity(model_dim),
            output: Dense::identity(model_dim),
        }
    }

    pub fn random<R: Rng + ?Sized>(model_dim: usize, rng: &mut R) -> Self {
        Self {
            query: Dense::random(model_dim, model_dim, rng),
            key: Dense::random(model_dim, model_dim, rng),
            value: Dense::random(model_dim, model_dim, rng),
            output: Dense::random(model_dim, model_dim, rng),
        }
    }

    pub fn projections(&self) -> [&Dense; 4] {
        [&self.query, &self.key, &self.value, &self.output]
    }
}

/// Stacked multi-head cross-attention. The query comes from the agent's own
/// feature, keys and values from its neighbors' features; each layer feeds
/// its output forward as the next query while the context stays fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionSpec {
    heads: usize,
    model_dim: usize,
    layers: Vec<AttentionLayer>,
}

impl AttentionSpec {
    pub fn new(
        heads: usize,
        model_dim: usize,
        layers: Vec<AttentionLayer>,
    ) -> Result<Self, TensorError> {
        if heads == 0 || layers.is_empty() {
            return Err(TensorError::Spec(
                "attention needs at least one head and one layer".into(),
            ));
        }
        if !model_dim.is_multiple_of(heads) {
            return Err(TensorError::Spec(format!(
                "model_dim {model_dim} is not divisible by {heads} heads"
            )));
        }
        for (l, layer) in layers.iter().enumerate() {
            for p in layer.projections() {
                if p.rows() != model_dim || p.cols() != model_dim {
                    return Err(TensorError::Spec(format!(
                        "attention layer {l}: projection is {}x{}, expected {model_dim}x{model_dim}",
                        p.rows(),
                        p.cols()
                    )));
                }
            }
        }
        Ok(Self {
            heads,
            model_dim,
            layers,
        })
    }

    pub fn random<R: Rng + ?Sized>(
        heads: usize,
        layers: usize,
        model_dim: usize,
        rng: &mut R,
    ) -> Result<Self, TensorError> {
        let layers = (0..layers)
            .map(|_| AttentionLayer::random(model_dim, rng))
            .collect();
        Self::new(heads, model_dim, layers)
    }

    pub fn heads(&self) -> usize {
        self.heads
    }

    pub fn model_dim(&self) -> usize {
        self.model_dim
    }

    pub fn layers(&self) -> &[AttentionLayer] {
        &self.layers
    }

    pub fn head_dim(&self) -> usize {
        self.model_dim / self.heads
    }

    /// Runs every layer and also returns the softmax weights, indexed
    /// `[layer][head][context]`.
    pub(crate) fn forward_with_weights(
        &self,
        query: &[f32],
        context: &[&[f32]],
    ) -> Result<(Vec<f32>, Vec<Vec<Vec<f32>>>), TensorError> {
        check_len("attention query", self.model_dim, query.len())?;
        if context.is_empty() {
            return Err(TensorError::EmptyContext);
        }
        for c in context {
            check_len("attention context", self.model_dim, c.len())?;
        }
        let dh = self.head_dim();
        let scale = 1.0 / (dh as f32).sqrt();
        let mut current = query.to_vec();
        let mut all_weights = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let q = layer.query.apply(&current);
            let keys: Vec<Vec<f32>> = context.iter().map(|c| layer.key.apply(c)).collect();
            let values: Vec<Vec<f32>> = context.iter().map(|c| layer.value.apply(c)).collect();
            let mut mixed = vec![0.0f32; self.model_dim];
            let mut layer_weights = Vec::with_capacity(self.heads);
            for h in 0..self.heads {
                let span = h * dh..(h + 1) * dh;
                let scores: Vec<f32> = keys
                    .iter()
                    .map(|k| {
                        q[span.clone()]
                            .iter()
                            .zip(&k[span.clone()])
                            .map(|(a, b)| a * b)
                            .sum::<f32>()
                            * scale
                    })
                    .collect();
                let weights = softmax(&scores);
                for (w, v) in weights.iter().zip(&values) {
                    for (m, x) in mixed[span.clone()].iter_mut().zip(&v[span.clone()]) {
                        *m += w * x;
                    }
                }
                layer_weights.push(weights);
            }
            current = layer.output.apply(&mixed);
            all_weights.push(layer_weights);
        }
        Ok((current, all_weights))
    }
}

fn softmax(scores: &[f32]) -> Vec<f32> {
    let max = scores.iter().copied().fold(f32::NEG_INFINITY, f32::max);
    let exps: Vec<f32> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f32 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

pub fn attention_forward(
    spec: &AttentionSpec,
    query: &Tensor,
    context: &[Tensor],
) -> Result<Tensor, TensorError> {
    query.vector_len("attention query rank")?;
    for c in context {
        c.vector_len("attention context rank")?;
    }
    let ctx: Vec<&[f32]> = context.iter().map(Tensor::data).collect();
    spec.forward_with_weights(query.data(), &ctx)
        .map(|(out, _)| Tensor::vector(out))
}
