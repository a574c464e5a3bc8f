//! Envelope encoding and the keep-latest neighbor buffer.

use neuromesh::tensor::Tensor;
use neuromesh::wire::{decode_envelope, encode_envelope, header_len, MessageEnvelope, NeighborBuffer};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let feature = Tensor::vector(vec![1.0, -2.5, 3.25]);
    let env = MessageEnvelope::from_tensor(4, 17, 1_000_000, 0, &feature);
    let bytes = encode_envelope(&env)?;
    println!("header {} B, total {} B", header_len(1), bytes.len());
    println!("{:02x?}", bytes);
    assert_eq!(decode_envelope(&bytes)?, env);

    // Out-of-order arrivals: only the highest sequence number survives.
    let mut buffer = NeighborBuffer::new([4, 5], 500_000_000);
    for seq in [3, 1, 4, 2] {
        let e = MessageEnvelope::from_tensor(4, seq, 0, 0, &Tensor::vector(vec![seq as f32]));
        let accepted = buffer.insert(e, 0)?;
        println!("seq {seq}: accepted={accepted}");
    }
    println!("stored seq for 4: {:?}", buffer.stored_seq(4));
    println!("missing at t=0: {:?}", buffer.missing(0));
    println!("missing after staleness: {:?}", buffer.missing(600_000_000));
    Ok(())
}
