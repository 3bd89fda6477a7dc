//! The gradient penalty needs a derivative of a derivative: the critic's
//! input gradient is built as taped operations, so the penalty on its norm
//! can be backpropagated into the critic weights. For a linear critic the
//! whole thing has a closed form - checked here.

use mmt::adversarial::{critic_waae, gradient_penalty, WaaeParams};
use mmt::{Rng, Tape, Tensor};

fn main() -> mmt::Result<()> {
    let mut rng = Rng::seed_from(3);
    let dim = 6;

    // a linear critic D(x) = w·x with ‖w‖ = 3
    let mut w = vec![0.0; dim];
    w[0] = 3.0;
    let params = WaaeParams {
        w_rec: Tensor::zeros(vec![dim, 4]),
        b_rec: Tensor::zeros(vec![1, 4]),
        w_adv: Tensor::from_vec(vec![dim, 1], w)?,
        b_adv: Tensor::zeros(vec![1, 1]),
    };

    let tape = Tape::new();
    let taped = params.leaf_onto(&tape, false, true)?;
    let real = Tensor::from_vec(vec![4, dim], (0..4 * dim).map(|i| (i as f64).sin()).collect())?;
    let fake = Tensor::from_vec(vec![4, dim], (0..4 * dim).map(|i| (i as f64).cos()).collect())?;

    let penalty = gradient_penalty(
        &tape,
        |t, probe| critic_waae(t, &taped, probe),
        &real,
        &fake,
        10.0,
        &mut rng,
    )?;
    println!("penalty = {:.12}", tape.scalar_of(penalty));
    println!("analytic: 10·(‖w‖−1)² = 10·(3−1)² = 40");
    assert!((tape.scalar_of(penalty) - 40.0).abs() < 1e-9);

    // and its gradient into the critic weight: 2λ(‖w‖−1)·w/‖w‖
    let grads = tape.backward(penalty)?;
    let got = grads.get(taped.w_adv).unwrap();
    println!("d penalty / d w = {:?}", got.values());
    let expect = 2.0 * 10.0 * (3.0 - 1.0) * 3.0 / 3.0; // first component only
    assert!((got.values()[0] - expect).abs() < 1e-8);
    println!("matches 2λ(‖w‖−1)w/‖w‖ to 1e-8");
    Ok(())
}
