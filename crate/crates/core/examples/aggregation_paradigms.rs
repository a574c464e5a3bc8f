//! Reduction, pairwise difference-sum and broadcast aggregation for one agent.

use neuromesh::aggregation::{broadcast_aggregate, diff_sum_aggregate, reduce_aggregate, ReduceKind};
use neuromesh::tensor::{Activation, MlpSpec, Tensor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let own = Tensor::vector(vec![1.0, 2.0]);
    let neighbors = [Tensor::vector(vec![3.0, 0.0]), Tensor::vector(vec![-1.0, 4.0])];

    for kind in [ReduceKind::Sum, ReduceKind::Mean, ReduceKind::Max] {
        println!("{kind:?}: {:?}", reduce_aggregate(kind, &own, &neighbors)?.data());
    }

    let g = MlpSpec::random(&[2, 16, 2], Activation::Relu, &mut ChaCha8Rng::seed_from_u64(2));
    println!("diff_sum: {:?}", diff_sum_aggregate(&g, &own, &neighbors)?.data());

    let rows = broadcast_aggregate(&own, &neighbors)?;
    println!("broadcast {:?}:", rows.shape());
    for i in 0..rows.shape()[0] {
        println!("  {:?}", rows.row(i).unwrap_or_default());
    }
    Ok(())
}
