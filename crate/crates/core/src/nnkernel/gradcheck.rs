//! Central finite-difference checks for hand-written backward passes.
//!
//! The reported error for a gradient is `‖a − n‖₂ / max(‖a‖₂, ‖n‖₂, 1e-8)`
//! over the whole tensor, where `a` is the analytic and `n` the numerical
//! gradient. A norm-wise measure avoids blowing up on entries that are
//! numerically zero.

use super::layers::Parameters;
use super::tensor::Tensor2;

pub const DEFAULT_STEP: f64 = 1e-5;

pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let norm = |v: &mut dyn Iterator<Item = f64>| v.map(|x| x * x).sum::<f64>().sqrt();
    let diff = norm(&mut analytic.iter().zip(numeric).map(|(a, n)| a - n));
    let scale = norm(&mut analytic.iter().copied())
        .max(norm(&mut numeric.iter().copied()))
        .max(1e-8);
    diff / scale
}

/// Numerical gradient of `loss` with respect to every element of `x`.
pub fn numeric_input_gradient(
    x: &Tensor2,
    step: f64,
    mut loss: impl FnMut(&Tensor2) -> f64,
) -> Tensor2 {
    let mut g = Tensor2::zeros(x.rows, x.cols);
    let mut probe = x.clone();
    for i in 0..x.data.len() {
        let orig = probe.data[i];
        probe.data[i] = orig + step;
        let up = loss(&probe);
        probe.data[i] = orig - step;
        let down = loss(&probe);
        probe.data[i] = orig;
        g.data[i] = (up - down) / (2.0 * step);
    }
    g
}

/// Worst relative error across the parameter tensors of `model`, comparing
/// `analytic` (gradients in the same [`Parameters`] layout) against central
/// differences of `loss`.
#[allow(clippy::needless_range_loop)]
pub fn check_parameters<P: Parameters + Clone>(
    model: &P,
    analytic: &P,
    step: f64,
    mut loss: impl FnMut(&P) -> f64,
) -> f64 {
    let mut probe = model.clone();
    let analytic = analytic.tensors();
    let n_tensors = analytic.len();
    let mut worst: f64 = 0.0;
    for t in 0..n_tensors {
        let len = analytic[t].data.len();
        let mut numeric = vec![0.0; len];
        for (i, slot) in numeric.iter_mut().enumerate() {
            let orig = probe.tensors()[t].data[i];
            probe.tensors_mut()[t].data[i] = orig + step;
            let up = loss(&probe);
            probe.tensors_mut()[t].data[i] = orig - step;
            let down = loss(&probe);
            probe.tensors_mut()[t].data[i] = orig;
            *slot = (up - down) / (2.0 * step);
        }
        worst = worst.max(relative_error(&analytic[t].data, &numeric));
    }
    worst
}

/// `Σ c ⊙ y`, the scalar objective used to probe a layer's Jacobian.
pub fn probe_loss(y: &Tensor2, c: &Tensor2) -> f64 {
    y.data.iter().zip(&c.data).map(|(a, b)| a * b).sum()
}
