//! Numerical gradient checking.
//!
//! Central finite differences over a black-box scalar function. These
//! helpers never touch the tape machinery, so they stay an independent
//! reference for the analytic gradients.

/// Central-difference gradient of `f` at `x` with the given step.
pub fn finite_difference<F>(mut f: F, x: &[f64], step: f64) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut grad = vec![0.0; x.len()];
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        let orig = probe[i];
        probe[i] = orig + step;
        let hi = f(&probe);
        probe[i] = orig - step;
        let lo = f(&probe);
        probe[i] = orig;
        grad[i] = (hi - lo) / (2.0 * step);
    }
    grad
}

/// Largest absolute difference, normalized by the largest magnitude present
/// in either vector (floored to avoid blowing up near-zero comparisons).
pub fn max_relative_error(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "gradient length mismatch");
    let scale = a
        .iter()
        .chain(b.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1e-10);
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (&x, &y)| m.max((x - y).abs()))
        / scale
}
