//! Latency, jitter and loss measured over one simulated link.

use neuromesh::netsim::{measure_link_quality, LinkModel, MediumModel, SimNetwork, Topology};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let link = LinkModel::from_millis(4.8, 0.6, 0.3, 42);
    let mut net = SimNetwork::new(Topology::full_mesh(2, link), MediumModel::default())?;
    let q = measure_link_quality(&mut net, 0, 1, 128, 200.0, 60.0)?;
    println!("sent {} delivered {}", q.sent, q.delivered);
    println!("latency {:.3} ms, jitter {:.3} ms, loss {:.3}%", q.latency_mean_ms, q.jitter_ms, q.loss_pct);
    println!("throughput {:.1} msgs/s", q.throughput_msgs_per_s);
    Ok(())
}
