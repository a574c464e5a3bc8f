//! Flat binary weight files.
//!
//! ```text
//! "MWTS" | version: u8 | layer_count: u8
//! per layer: rows: u32 | cols: u32 | weights: f32 × rows·cols (row-major) | bias: f32 × rows
//! ```
//!
//! All multi-byte fields are little-endian. An MLP file lists its layers in
//! forward order. An attention file lists four square layers per attention
//! layer, in query, key, value, output order.

use std::fs;
use std::path::Path;

use thiserror::Error;

use super::{Activation, AttentionLayer, AttentionSpec, Dense, MlpSpec, TensorError};

pub const MAGIC: [u8; 4] = *b"MWTS";
pub const VERSION: u8 = 1;

#[derive(Debug, Error)]
pub enum WeightsError {
    #[error("bad magic {0:02x?}, expected \"MWTS\"")]
    BadMagic([u8; 4]),
    #[error("unsupported weights version {0}")]
    BadVersion(u8),
    #[error("weights file truncated while reading {0}")]
    Truncated(&'static str),
    #[error("{0} trailing bytes after the last layer")]
    TrailingBytes(usize),
    #[error("too many layers for the format: {0} (limit 255)")]
    TooManyLayers(usize),
    #[error("invalid network: {0}")]
    Network(#[from] TensorError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub fn encode_layers(layers: &[Dense]) -> Result<Vec<u8>, WeightsError> {
    let count = u8::try_from(layers.len()).map_err(|_| WeightsError::TooManyLayers(layers.len()))?;
    let mut out = Vec::new();
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.push(count);
    for layer in layers {
        out.extend_from_slice(&(layer.rows() as u32).to_le_bytes());
        out.extend_from_slice(&(layer.cols() as u32).to_le_bytes());
        for w in layer.weights().iter().chain(layer.bias()) {
            out.extend_from_slice(&w.to_le_bytes());
        }
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8], WeightsError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or(WeightsError::Truncated(what))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self, what: &'static str) -> Result<u32, WeightsError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn f32s(&mut self, n: usize, what: &'static str) -> Result<Vec<f32>, WeightsError> {
        let bytes = self.take(n.checked_mul(4).ok_or(WeightsError::Truncated(what))?, what)?;
        Ok(bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

pub fn decode_layers(bytes: &[u8]) -> Result<Vec<Dense>, WeightsError> {
    let mut r = Reader { bytes, pos: 0 };
    let magic: [u8; 4] = r.take(4, "magic")?.try_into().unwrap();
    if magic != MAGIC {
        return Err(WeightsError::BadMagic(magic));
    }
    let version = r.take(1, "version")?[0];
    if version != VERSION {
        return Err(WeightsError::BadVersion(version));
    }
    let count = r.take(1, "layer count")?[0] as usize;
    let mut layers = Vec::with_capacity(count);
    for _ in 0..count {
        let rows = r.u32("rows")? as usize;
        let cols = r.u32("cols")? as usize;
        let weights = r.f32s(rows * cols, "weights")?;
        let bias = r.f32s(rows, "bias")?;
        layers.push(Dense::new(rows, cols, weights, bias)?);
    }
    if r.pos != bytes.len() {
        return Err(WeightsError::TrailingBytes(bytes.len() - r.pos));
    }
    Ok(layers)
}

fn read_file(path: &Path) -> Result<Vec<u8>, WeightsError> {
    fs::read(path).map_err(|source| WeightsError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), WeightsError> {
    fs::write(path, bytes).map_err(|source| WeightsError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn save_mlp(path: &Path, spec: &MlpSpec) -> Result<(), WeightsError> {
    write_file(path, &encode_layers(spec.layers())?)
}

pub fn load_mlp(path: &Path, activation: Activation) -> Result<MlpSpec, WeightsError> {
    let layers = decode_layers(&read_file(path)?)?;
    Ok(MlpSpec::new(layers, activation)?)
}

pub fn save_attention(path: &Path, spec: &AttentionSpec) -> Result<(), WeightsError> {
    let flat: Vec<Dense> = spec
        .layers()
        .iter()
        .flat_map(|l| l.projections().into_iter().cloned())
        .collect();
    write_file(path, &encode_layers(&flat)?)
}

pub fn load_attention(path: &Path, heads: usize) -> Result<AttentionSpec, WeightsError> {
    let flat = decode_layers(&read_file(path)?)?;
    if flat.is_empty() || flat.len() % 4 != 0 {
        return Err(TensorError::Spec(format!(
            "attention weights need four projections per layer, found {} matrices",
            flat.len()
        ))
        .into());
    }
    let model_dim = flat[0].rows();
    let layers = flat
        .chunks_exact(4)
        .map(|c| AttentionLayer {
            query: c[0].clone(),
            key: c[1].clone(),
            value: c[2].clone(),
            output: c[3].clone(),
        })
        .collect();
    Ok(AttentionSpec::new(heads, model_dim, layers)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn layout_of_a_single_layer() {
        let layer = Dense::new(1, 2, vec![1.0, -2.0], vec![0.5]).unwrap();
        let bytes = encode_layers(&[layer]).unwrap();
        let mut expect = b"MWTS".to_vec();
        expect.extend_from_slice(&[1, 1, 1, 0, 0, 0, 2, 0, 0, 0]);
        expect.extend_from_slice(&1.0f32.to_le_bytes());
        expect.extend_from_slice(&(-2.0f32).to_le_bytes());
        expect.extend_from_slice(&0.5f32.to_le_bytes());
        assert_eq!(bytes, expect);
    }

    #[test]
    fn mlp_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("enc.mwts");
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let spec = MlpSpec::random(&[8, 64, 64, 64, 16], Activation::Relu, &mut rng);
        save_mlp(&path, &spec).unwrap();
        assert_eq!(load_mlp(&path, Activation::Relu).unwrap(), spec);
    }

    #[test]
    fn attention_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("attn.mwts");
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let spec = AttentionSpec::random(3, 2, 12, &mut rng).unwrap();
        save_attention(&path, &spec).unwrap();
        assert_eq!(load_attention(&path, 3).unwrap(), spec);
    }

    #[test]
    fn corrupt_inputs_are_reported() {
        let layer = Dense::identity(2);
        let good = encode_layers(&[layer]).unwrap();
        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(matches!(decode_layers(&bad), Err(WeightsError::BadMagic(_))));
        let mut bad = good.clone();
        bad[4] = 9;
        assert!(matches!(decode_layers(&bad), Err(WeightsError::BadVersion(9))));
        assert!(matches!(
            decode_layers(&good[..good.len() - 1]),
            Err(WeightsError::Truncated("bias"))
        ));
        let mut long = good;
        long.push(0);
        assert!(matches!(decode_layers(&long), Err(WeightsError::TrailingBytes(1))));
    }

    #[test]
    fn missing_file_names_path() {
        let err = load_mlp(Path::new("/nonexistent/enc.mwts"), Activation::Relu).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/enc.mwts"));
    }
}
