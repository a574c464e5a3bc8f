//! Inter-agent message format and per-neighbor buffering.
//!
//! | constant                   | value          |
//! |----------------------------|----------------|
//! | [`MAGIC`]                  | `b"NMSH"`      |
//! | [`VERSION`]                | `1`            |
//! | [`MAX_DIMS`]               | `8`            |
//! | [`DEFAULT_STALENESS_NS`]   | 500 ms         |
//! | [`FIXED_HEADER_LEN`]       | 21 bytes       |
//!
//! The same bytes travel over the in-process simulator and over real
//! datagram sockets.

mod buffer;
mod envelope;

pub use buffer::{BufferError, NeighborBuffer, NeighborEntry, SharedNeighborBuffer};
pub use envelope::{decode_envelope, encode_envelope, header_len, MessageEnvelope, WireError};

pub const MAGIC: [u8; 4] = *b"NMSH";
pub const VERSION: u8 = 1;
pub const MAX_DIMS: usize = 8;
pub const DEFAULT_STALENESS_NS: u64 = 500_000_000;
/// magic + version + sender + seq + timestamp + round + ndims.
pub const FIXED_HEADER_LEN: usize = 4 + 1 + 2 + 4 + 8 + 1 + 1;

pub type AgentId = u16;
