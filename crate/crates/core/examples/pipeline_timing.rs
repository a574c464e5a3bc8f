//! Three-stage pipeline with (10, 30, 20) ms stages against sequential
//! execution of the same stages.

use std::time::Duration;

use neuromesh::pipeline::{run_pipeline, run_sequential, Ingress, Stage};
use neuromesh::tensor::Tensor;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ms = Duration::from_millis;
    let encode = Stage::new("encode", |x: &Tensor| Ok(x.map(|v| v + 1.0))).with_delay(ms(10));
    let aggregate = Stage::new("aggregate", |x: &Tensor| Ok(x.map(|v| v * 2.0))).with_delay(ms(30));
    let decode = Stage::identity("decode").with_delay(ms(20));
    let inputs: Vec<Tensor> = (0..50).map(|i| Tensor::vector(vec![i as f32])).collect();

    let par = run_pipeline(&encode, &aggregate, &decode, &inputs, Ingress::OnDemand)?;
    let seq = run_sequential(&encode, &aggregate, &decode, &inputs, Ingress::OnDemand)?;
    for (name, run) in [("parallel", &par), ("sequential", &seq)] {
        let s = &run.stats;
        println!(
            "{name:>10}: period {:.2} ms, latency {:.2} ms over {} items",
            s.period_mean_ms(),
            s.latency_mean_ms(),
            s.items_processed
        );
    }
    println!("outputs identical: {}", par.outputs() == seq.outputs());

    // Ingress faster than the bottleneck stage: frames are dropped, not queued.
    let fast = run_pipeline(&encode, &aggregate, &decode, &inputs, Ingress::Periodic(ms(15)))?;
    println!("periodic 15 ms ingress: {} processed, {} dropped", fast.stats.items_processed, fast.stats.drops);
    Ok(())
}
