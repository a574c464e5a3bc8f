//! Encoder MLP, cross-attention over neighbor features and the shifted
//! softplus that keeps Beta parameters above one.

use neuromesh::tensor::{
    attention_forward, mlp_forward, softplus_shift_f64, Activation, AttentionSpec, MlpSpec, Tensor,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let encoder = MlpSpec::random(&[8, 64, 24], Activation::Relu, &mut rng);
    let attention = AttentionSpec::random(3, 2, 24, &mut rng)?;

    let own = mlp_forward(&encoder, &Tensor::vector(vec![0.5; 8]))?;
    let neighbors: Vec<Tensor> = (0..3)
        .map(|i| mlp_forward(&encoder, &Tensor::vector(vec![i as f32 * 0.1; 8])))
        .collect::<Result<_, _>>()?;
    let mixed = attention_forward(&attention, &own, &neighbors)?;
    println!("encoded {:?} -> attended {:?}", own.shape(), mixed.shape());
    println!("first components: {:?}", &mixed.data()[..4]);

    for y in [-20.0, 0.0, 3.0] {
        println!("softplus_shift({y}) = {:.12}", softplus_shift_f64(y));
    }
    Ok(())
}
