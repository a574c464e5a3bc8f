//! Two agents exchanging envelopes over real UDP sockets on 127.0.0.1.

use std::sync::mpsc;
use std::time::Duration;

use neuromesh::netsim::{Transport, UdpTransport};
use neuromesh::tensor::Tensor;
use neuromesh::wire::{decode_envelope, encode_envelope, MessageEnvelope};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let base = 47_900;
    let a = UdpTransport::bind(0, base)?;
    let b = UdpTransport::bind(1, base)?;
    let (tx, rx) = mpsc::channel();
    b.set_receiver(Box::new(move |from, bytes| {
        let _ = tx.send((from, bytes));
    }));

    for seq in 0..3 {
        let env = MessageEnvelope::from_tensor(0, seq, 0, 0, &Tensor::vector(vec![seq as f32; 4]));
        a.send(1, &encode_envelope(&env)?)?;
    }
    for _ in 0..3 {
        let (from, bytes) = rx.recv_timeout(Duration::from_secs(2))?;
        let env = decode_envelope(&bytes)?;
        println!("agent 1 got seq {} from {from}: {:?}", env.seq, env.payload);
    }
    Ok(())
}
