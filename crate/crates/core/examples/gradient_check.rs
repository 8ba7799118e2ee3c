//! Compares backpropagated gradients of the hinge ranking loss with central
//! finite differences on a small random network.
//!
//!     cargo run --release --example gradient_check -- [seed]

use rand::{Rng, SeedableRng};

use fofeqa::fofe::SparseCode;
use fofeqa::neural::{rank_step, FofeNet, NetInput, TrainRng};

const GAMMA: f64 = 0.5;

fn random_input(rng: &mut TrainRng) -> NetInput {
    NetInput {
        codes: (0..2)
            .map(|_| {
                let ids: Vec<usize> = (0..rng.gen_range(1..6)).map(|_| rng.gen_range(0..10)).collect();
                SparseCode::encode(&ids, 0.6)
            })
            .collect(),
        dense: (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    }
}

fn main() -> fofeqa::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(7);
    let mut rng = TrainRng::seed_from_u64(seed);
    let net = FofeNet::new(10, 4, 2, 3, &[6], 0.0, &mut rng)?;
    let pos = random_input(&mut rng);
    let negs: Vec<NetInput> = (0..3).map(|_| random_input(&mut rng)).collect();
    let neg_refs: Vec<&NetInput> = negs.iter().collect();

    let loss = |n: &FofeNet| rank_step(n, &pos, &neg_refs, GAMMA, None).map(|r| r.0);
    let (l0, grads) = rank_step(&net, &pos, &neg_refs, GAMMA, None)?;
    println!("loss {l0:.6}");

    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for l in 0..net.mlp().layers().len() {
        for i in 0..net.mlp().layers()[l].weights.len() {
            let mut plus = net.clone();
            plus.mlp_mut().layers_mut()[l].weights[i] += h;
            let mut minus = net.clone();
            minus.mlp_mut().layers_mut()[l].weights[i] -= h;
            let numeric = (loss(&plus)? - loss(&minus)?) / (2.0 * h);
            let analytic = grads.mlp.weights[l][i];
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8);
            worst = worst.max(rel);
        }
    }
    for (&row, g) in &grads.embedding {
        for (j, &analytic) in g.iter().enumerate() {
            let mut plus = net.clone();
            plus.embedding_mut().row_mut(row)[j] += h;
            let mut minus = net.clone();
            minus.embedding_mut().row_mut(row)[j] -= h;
            let numeric = (loss(&plus)? - loss(&minus)?) / (2.0 * h);
            worst = worst.max((analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8));
        }
    }
    println!("max relative error {worst:.2e} over weights and touched embedding rows");
    Ok(())
}
