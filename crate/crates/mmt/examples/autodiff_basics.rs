//! Tape-based reverse-mode differentiation in a few lines: record a small
//! computation, pull gradients back, and cross-check one of them against
//! central finite differences.

use mmt::check::{finite_difference, max_relative_error};
use mmt::{Rng, Tape, Tensor};

fn main() -> mmt::Result<()> {
    let mut rng = Rng::seed_from(7);
    let w0 = Tensor::glorot(3, 2, &mut rng);
    let x0 = Tensor::from_vec(vec![1, 3], vec![0.5, -1.0, 2.0])?;

    // loss = mean(tanh(x·W)²)
    let tape = Tape::new();
    let w = tape.leaf(w0.clone(), true)?;
    let x = tape.leaf(x0.clone(), true)?;
    let y = tape.tanh(tape.matmul(x, w)?)?;
    let loss = tape.mean_all(tape.mul(y, y)?)?;
    println!("loss = {:.6}", tape.scalar_of(loss));

    let grads = tape.backward(loss)?;
    println!("dloss/dx = {:?}", grads.get(x).unwrap().values());

    // the same derivative, numerically
    let fd = finite_difference(
        |vals| {
            let tape = Tape::new();
            let w = tape.leaf(w0.clone(), false).unwrap();
            let x = tape
                .leaf(Tensor::from_vec(vec![1, 3], vals.to_vec()).unwrap(), false)
                .unwrap();
            let y = tape.tanh(tape.matmul(x, w).unwrap()).unwrap();
            tape.scalar_of(tape.mean_all(tape.mul(y, y).unwrap()).unwrap())
        },
        x0.values(),
        1e-5,
    );
    let err = max_relative_error(grads.get(x).unwrap().values(), &fd);
    println!("max relative error vs finite differences: {err:.2e}");
    assert!(err < 1e-6);
    Ok(())
}
