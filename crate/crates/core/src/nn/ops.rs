use crate::data::Dataset;
use crate::nn::{Dense, Gradients, ModelWeights, NetworkSpec, Tensor};
use crate::{Error, Result, Scalar};

/// A mini-batch: feature rows `[b, input_dim]` and their class labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch<T> {
    features: Tensor<T>,
    labels: Vec<usize>,
}

impl<T: Scalar> Batch<T> {
    pub fn new(features: Tensor<T>, labels: Vec<usize>) -> Result<Self> {
        if features.shape().len() != 2 {
            return Err(Error::Shape(format!(
                "batch features must be 2-D, got {:?}",
                features.shape()
            )));
        }
        if features.rows() != labels.len() {
            return Err(Error::Shape(format!(
                "{} feature rows but {} labels",
                features.rows(),
                labels.len()
            )));
        }
        Ok(Self { features, labels })
    }

    pub(crate) fn from_parts(features: Tensor<T>, labels: Vec<usize>) -> Self {
        Self { features, labels }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn features(&self) -> &Tensor<T> {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Stacks batches in order. All inputs must share a feature width.
    pub fn concat(batches: &[Batch<T>]) -> Result<Self> {
        let first = batches
            .first()
            .ok_or_else(|| Error::Shape("cannot concatenate zero batches".into()))?;
        let width = first.features.row_len();
        let mut data = Vec::new();
        let mut labels = Vec::new();
        for b in batches {
            if b.features.row_len() != width {
                return Err(Error::Shape("batches have different feature widths".into()));
            }
            data.extend_from_slice(b.features.data());
            labels.extend_from_slice(&b.labels);
        }
        Ok(Self {
            features: Tensor::from_parts(vec![labels.len(), width], data),
            labels,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Forward<T> {
    /// Softmax outputs, `[b, classes]`.
    pub probabilities: Tensor<T>,
    /// Mean cross-entropy over the batch.
    pub loss: T,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation<T> {
    pub loss: T,
    pub accuracy: f64,
}

fn check_inputs<T: Scalar>(
    spec: &NetworkSpec,
    weights: &ModelWeights<T>,
    features: &Tensor<T>,
    labels: &[usize],
) -> Result<()> {
    weights.check_spec(spec)?;
    if features.shape().len() != 2 || features.row_len() != spec.input_dim() {
        return Err(Error::Shape(format!(
            "features {:?} do not match input_dim {}",
            features.shape(),
            spec.input_dim()
        )));
    }
    if features.rows() != labels.len() {
        return Err(Error::Shape("row/label count mismatch".into()));
    }
    if let Some(&label) = labels.iter().find(|&&l| l >= spec.output_dim()) {
        return Err(Error::Label {
            label,
            num_classes: spec.output_dim(),
        });
    }
    Ok(())
}

/// `out[s, o] = bias[o] + sum_i x[s, i] * w[i, o]`, accumulated in ascending `i`.
fn dense_layer<T: Scalar>(x: &[T], rows: usize, layer: &Dense<T>, relu: bool) -> Vec<T> {
    let fan_in = layer.weight.shape()[0];
    let fan_out = layer.weight.shape()[1];
    let w = layer.weight.data();
    let mut out = Vec::with_capacity(rows * fan_out);
    for s in 0..rows {
        out.extend_from_slice(layer.bias.data());
        let acc = &mut out[s * fan_out..];
        for (i, &xi) in x[s * fan_in..(s + 1) * fan_in].iter().enumerate() {
            // exact zeros (sparse pixels, dead ReLUs) contribute nothing
            if xi == T::zero() {
                continue;
            }
            for (a, &wio) in acc.iter_mut().zip(&w[i * fan_out..(i + 1) * fan_out]) {
                *a = *a + xi * wio;
            }
        }
        if relu {
            for a in acc.iter_mut() {
                *a = a.max(T::zero());
            }
        }
    }
    out
}

/// Outputs of every layer: hidden activations after ReLU, then raw logits.
fn layer_outputs<T: Scalar>(weights: &ModelWeights<T>, x: &[T], rows: usize) -> Vec<Vec<T>> {
    let layers = weights.layers();
    let mut outs: Vec<Vec<T>> = Vec::with_capacity(layers.len());
    for (k, layer) in layers.iter().enumerate() {
        let input = if k == 0 { x } else { &outs[k - 1] };
        let relu = k + 1 < layers.len();
        let next = dense_layer(input, rows, layer, relu);
        outs.push(next);
    }
    outs
}

/// Row-wise softmax with max subtraction; returns probabilities and the
/// per-sample cross-entropy `ln(sum exp(z - m)) - (z_y - m)`.
fn softmax_cross_entropy<T: Scalar>(
    logits: &[T],
    classes: usize,
    labels: &[usize],
) -> (Vec<T>, Vec<T>) {
    let mut probs = Vec::with_capacity(logits.len());
    let mut losses = Vec::with_capacity(labels.len());
    for (row, &y) in logits.chunks_exact(classes).zip(labels) {
        let m = row.iter().copied().fold(T::neg_infinity(), T::max);
        let start = probs.len();
        let mut total = T::zero();
        for &z in row {
            let e = (z - m).exp();
            total = total + e;
            probs.push(e);
        }
        for p in &mut probs[start..] {
            *p = *p / total;
        }
        losses.push(total.ln() - (row[y] - m));
    }
    (probs, losses)
}

fn mean_in_order<T: Scalar>(values: &[T]) -> T {
    let total = values.iter().fold(T::zero(), |acc, &v| acc + v);
    total / T::from_count(values.len())
}

pub fn forward<T: Scalar>(
    spec: &NetworkSpec,
    weights: &ModelWeights<T>,
    batch: &Batch<T>,
) -> Result<Forward<T>> {
    check_inputs(spec, weights, &batch.features, &batch.labels)?;
    let rows = batch.len();
    let outs = layer_outputs(weights, batch.features.data(), rows);
    let logits = outs.last().expect("at least one layer");
    let (probs, losses) = softmax_cross_entropy(logits, spec.output_dim(), &batch.labels);
    Ok(Forward {
        probabilities: Tensor::from_parts(vec![rows, spec.output_dim()], probs),
        loss: mean_in_order(&losses),
    })
}

/// Backpropagation of the mean cross-entropy through softmax, ReLU and
/// dense layers. The returned loss is computed by the same path as
/// [`forward`] and is bit-identical to it.
pub fn compute_gradients<T: Scalar>(
    spec: &NetworkSpec,
    weights: &ModelWeights<T>,
    batch: &Batch<T>,
) -> Result<(T, Gradients<T>)> {
    check_inputs(spec, weights, &batch.features, &batch.labels)?;
    let rows = batch.len();
    let classes = spec.output_dim();
    let x = batch.features.data();
    let outs = layer_outputs(weights, x, rows);
    let (probs, losses) = softmax_cross_entropy(outs.last().unwrap(), classes, &batch.labels);
    let loss = mean_in_order(&losses);

    let batch_len = T::from_count(rows);
    let mut delta = probs;
    for (s, &y) in batch.labels.iter().enumerate() {
        delta[s * classes + y] = delta[s * classes + y] - T::one();
    }
    for d in &mut delta {
        *d = *d / batch_len;
    }

    let mut grads = ModelWeights::<T>::zeros(spec);
    let layers = weights.layers();
    for k in (0..layers.len()).rev() {
        let fan_in = layers[k].weight.shape()[0];
        let fan_out = layers[k].weight.shape()[1];
        let input: &[T] = if k == 0 { x } else { &outs[k - 1] };
        {
            let g = &mut grads.layers_mut()[k];
            let gw = g.weight.data_mut();
            for s in 0..rows {
                let d_row = &delta[s * fan_out..(s + 1) * fan_out];
                for (i, &a) in input[s * fan_in..(s + 1) * fan_in].iter().enumerate() {
                    if a == T::zero() {
                        continue;
                    }
                    for (gwo, &d) in gw[i * fan_out..(i + 1) * fan_out].iter_mut().zip(d_row) {
                        *gwo = *gwo + a * d;
                    }
                }
            }
            let gb = g.bias.data_mut();
            for d_row in delta.chunks_exact(fan_out) {
                for (b, &d) in gb.iter_mut().zip(d_row) {
                    *b = *b + d;
                }
            }
        }
        if k > 0 {
            // propagate through W and the ReLU of the previous layer
            let w = layers[k].weight.data();
            let mut prev = vec![T::zero(); rows * fan_in];
            for s in 0..rows {
                let d_row = &delta[s * fan_out..(s + 1) * fan_out];
                for i in 0..fan_in {
                    if input[s * fan_in + i] > T::zero() {
                        let w_row = &w[i * fan_out..(i + 1) * fan_out];
                        prev[s * fan_in + i] = w_row
                            .iter()
                            .zip(d_row)
                            .fold(T::zero(), |acc, (&wv, &d)| acc + wv * d);
                    }
                }
            }
            delta = prev;
        }
    }
    if !loss.is_finite() || grads.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("loss or gradient".into()));
    }
    Ok((loss, grads))
}

/// `weights - eta * grads`.
pub fn sgd_step<T: Scalar>(
    weights: &ModelWeights<T>,
    grads: &Gradients<T>,
    eta: T,
) -> Result<ModelWeights<T>> {
    if !(eta >= T::zero()) || !eta.is_finite() {
        return Err(Error::Config(format!(
            "learning rate must be finite and >= 0, got {eta}"
        )));
    }
    let out = weights.zip_map(grads, |w, g| w - eta * g)?;
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("weights diverged after SGD step".into()));
    }
    Ok(out)
}

const EVAL_CHUNK: usize = 256;

/// Mean cross-entropy and accuracy over a whole dataset. Accuracy uses the
/// arg-max of the probabilities with ties going to the lowest class index.
pub fn evaluate<T: Scalar>(
    spec: &NetworkSpec,
    weights: &ModelWeights<T>,
    dataset: &Dataset<T>,
) -> Result<Evaluation<T>> {
    check_inputs(spec, weights, dataset.features(), dataset.labels())?;
    let classes = spec.output_dim();
    let width = spec.input_dim();
    let x = dataset.features().data();
    let labels = dataset.labels();
    let mut total = T::zero();
    let mut correct = 0usize;
    for start in (0..labels.len()).step_by(EVAL_CHUNK) {
        let end = (start + EVAL_CHUNK).min(labels.len());
        let rows = end - start;
        let outs = layer_outputs(weights, &x[start * width..end * width], rows);
        let (probs, losses) =
            softmax_cross_entropy(outs.last().unwrap(), classes, &labels[start..end]);
        for l in losses {
            total = total + l;
        }
        for (row, &y) in probs.chunks_exact(classes).zip(&labels[start..end]) {
            if argmax_lowest(row) == y {
                correct += 1;
            }
        }
    }
    Ok(Evaluation {
        loss: total / T::from_count(labels.len()),
        accuracy: correct as f64 / labels.len() as f64,
    })
}

fn argmax_lowest<T: Scalar>(row: &[T]) -> usize {
    let mut best = 0;
    for (k, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = k;
        }
    }
    best
}
