use thiserror::Error;

use super::{AgentId, FIXED_HEADER_LEN, MAGIC, MAX_DIMS, VERSION};
use crate::tensor::Tensor;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WireError {
    #[error("bad magic: found {found:02x?}")]
    BadMagic { found: Vec<u8> },
    #[error("bad version: found {found}, expected {VERSION}")]
    BadVersion { found: u8 },
    #[error("truncated header: missing field `{field}`")]
    Truncated { field: &'static str },
    #[error("truncated payload: dims imply {expected} bytes, {actual} present")]
    TruncatedPayload { expected: usize, actual: usize },
    #[error("length mismatch: {extra} unexpected bytes after payload")]
    TrailingBytes { extra: usize },
    #[error("ndims {ndims} exceeds protocol limit {MAX_DIMS}")]
    TooManyDims { ndims: usize },
    #[error("payload_shape is empty; scalars are sent as shape [1]")]
    EmptyShape,
    #[error("payload_shape[{index}] is zero")]
    ZeroDim { index: usize },
    #[error("payload holds {actual} values but payload_shape implies {expected}")]
    PayloadLength { expected: usize, actual: usize },
}

/// One inter-agent message: who sent it, when, for which round, and the
/// feature tensor itself.
#[derive(Debug, Clone, PartialEq)]
pub struct MessageEnvelope {
    pub sender_id: AgentId,
    pub seq: u32,
    pub timestamp_ns: u64,
    pub round: u8,
    pub payload_shape: Vec<u32>,
    pub payload: Vec<f32>,
}

impl MessageEnvelope {
    pub fn from_tensor(
        sender_id: AgentId,
        seq: u32,
        timestamp_ns: u64,
        round: u8,
        tensor: &Tensor,
    ) -> Self {
        Self {
            sender_id,
            seq,
            timestamp_ns,
            round,
            payload_shape: tensor.shape().iter().map(|&d| d as u32).collect(),
            payload: tensor.data().to_vec(),
        }
    }

    pub fn tensor(&self) -> Result<Tensor, WireError> {
        self.validate()?;
        let shape = self.payload_shape.iter().map(|&d| d as usize).collect();
        Ok(Tensor::new(shape, self.payload.clone()).expect("validated above"))
    }

    pub fn validate(&self) -> Result<(), WireError> {
        validate_shape(&self.payload_shape)?;
        let expected = element_count(&self.payload_shape);
        if expected != self.payload.len() {
            return Err(WireError::PayloadLength {
                expected,
                actual: self.payload.len(),
            });
        }
        Ok(())
    }

    pub fn encoded_len(&self) -> usize {
        header_len(self.payload_shape.len()) + 4 * self.payload.len()
    }
}

/// Bytes before the payload for a shape of `ndims` dimensions.
pub fn header_len(ndims: usize) -> usize {
    FIXED_HEADER_LEN + 4 * ndims
}

fn validate_shape(shape: &[u32]) -> Result<(), WireError> {
    if shape.is_empty() {
        return Err(WireError::EmptyShape);
    }
    if shape.len() > MAX_DIMS {
        return Err(WireError::TooManyDims { ndims: shape.len() });
    }
    if let Some(index) = shape.iter().position(|&d| d == 0) {
        return Err(WireError::ZeroDim { index });
    }
    Ok(())
}

fn element_count(shape: &[u32]) -> usize {
    shape.iter().map(|&d| d as usize).product()
}

pub fn encode_envelope(env: &MessageEnvelope) -> Result<Vec<u8>, WireError> {
    env.validate()?;
    let mut out = Vec::with_capacity(env.encoded_len());
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&env.sender_id.to_le_bytes());
    out.extend_from_slice(&env.seq.to_le_bytes());
    out.extend_from_slice(&env.timestamp_ns.to_le_bytes());
    out.push(env.round);
    out.push(env.payload_shape.len() as u8);
    for d in &env.payload_shape {
        out.extend_from_slice(&d.to_le_bytes());
    }
    for v in &env.payload {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take<const N: usize>(&mut self, field: &'static str) -> Result<[u8; N], WireError> {
        let s = self
            .bytes
            .get(self.pos..self.pos + N)
            .ok_or(WireError::Truncated { field })?;
        self.pos += N;
        Ok(s.try_into().unwrap())
    }
}

pub fn decode_envelope(bytes: &[u8]) -> Result<MessageEnvelope, WireError> {
    if bytes.len() >= 4 && bytes[..4] != MAGIC {
        return Err(WireError::BadMagic {
            found: bytes[..4].to_vec(),
        });
    }
    let mut c = Cursor { bytes, pos: 0 };
    c.take::<4>("magic")?;
    let [version] = c.take::<1>("version")?;
    if version != VERSION {
        return Err(WireError::BadVersion { found: version });
    }
    let sender_id = u16::from_le_bytes(c.take("sender_id")?);
    let seq = u32::from_le_bytes(c.take("seq")?);
    let timestamp_ns = u64::from_le_bytes(c.take("timestamp_ns")?);
    let [round] = c.take::<1>("round")?;
    let [ndims] = c.take::<1>("ndims")?;
    let ndims = ndims as usize;
    if ndims > MAX_DIMS {
        return Err(WireError::TooManyDims { ndims });
    }
    let mut payload_shape = Vec::with_capacity(ndims);
    for _ in 0..ndims {
        payload_shape.push(u32::from_le_bytes(c.take("payload_shape")?));
    }
    validate_shape(&payload_shape)?;
    let expected = element_count(&payload_shape)
        .checked_mul(4)
        .ok_or(WireError::TruncatedPayload {
            expected: usize::MAX,
            actual: bytes.len() - c.pos,
        })?;
    let rest = &bytes[c.pos..];
    if rest.len() < expected {
        return Err(WireError::TruncatedPayload {
            expected,
            actual: rest.len(),
        });
    }
    if rest.len() > expected {
        return Err(WireError::TrailingBytes {
            extra: rest.len() - expected,
        });
    }
    let payload = rest
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
        .collect();
    Ok(MessageEnvelope {
        sender_id,
        seq,
        timestamp_ns,
        round,
        payload_shape,
        payload,
    })
}
