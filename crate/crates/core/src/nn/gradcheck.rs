//! Central finite-difference gradients, used as an independent oracle for
//! [`compute_gradients`](crate::nn::compute_gradients).

use crate::nn::{forward, Batch, Gradients, ModelWeights, NetworkSpec};
use crate::{Error, Result, Scalar};

/// `(F(w + eps) - F(w - eps)) / (2 eps)` for every parameter, in canonical order.
pub fn finite_diff_grad<T: Scalar>(
    spec: &NetworkSpec,
    weights: &ModelWeights<T>,
    batch: &Batch<T>,
    eps: T,
) -> Result<Gradients<T>> {
    if !(eps > T::zero()) {
        return Err(Error::Config(format!(
            "finite-difference step must be > 0, got {eps}"
        )));
    }
    let mut probe = weights.clone();
    let mut out = ModelWeights::zeros(spec);
    let two_eps = eps + eps;
    let originals = weights.to_flat();
    let mut numeric = Vec::with_capacity(originals.len());
    for (k, &original) in originals.iter().enumerate() {
        set_param(&mut probe, k, original + eps);
        let plus = forward(spec, &probe, batch)?.loss;
        set_param(&mut probe, k, original - eps);
        let minus = forward(spec, &probe, batch)?.loss;
        set_param(&mut probe, k, original);
        numeric.push((plus - minus) / two_eps);
    }
    for (o, v) in out.iter_mut().zip(numeric) {
        *o = v;
    }
    Ok(out)
}

fn set_param<T: Scalar>(w: &mut ModelWeights<T>, k: usize, value: T) {
    // locate (layer, tensor, offset) without walking the whole iterator
    let mut k = k;
    for layer in w.layers_mut() {
        let wn = layer.weight.len();
        if k < wn {
            layer.weight.data_mut()[k] = value;
            return;
        }
        k -= wn;
        let bn = layer.bias.len();
        if k < bn {
            layer.bias.data_mut()[k] = value;
            return;
        }
        k -= bn;
    }
    panic!("parameter index out of range");
}

/// Largest entry-wise `|a - n| / max(|a|, |n|, floor)`.
///
/// `floor` keeps near-zero entries from dominating through round-off; pass
/// zero for the plain relative error.
pub fn max_relative_error<T: Scalar>(
    analytic: &Gradients<T>,
    numeric: &Gradients<T>,
    floor: T,
) -> Result<T> {
    if !analytic.is_congruent(numeric) {
        return Err(Error::Shape("gradient layouts differ".into()));
    }
    Ok(analytic
        .iter()
        .zip(numeric.iter())
        .fold(T::zero(), |worst, (&a, &n)| {
            let scale = a.abs().max(n.abs()).max(floor);
            if scale == T::zero() {
                worst
            } else {
                worst.max((a - n).abs() / scale)
            }
        }))
}
