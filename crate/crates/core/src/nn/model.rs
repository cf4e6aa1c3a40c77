use crate::nn::Tensor;
use crate::rng::SeededRng;
use crate::{Error, Result, Scalar};

/// Fully-connected classifier layout: ReLU on every hidden layer, softmax
/// output, mean categorical cross-entropy loss.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetworkSpec {
    input_dim: usize,
    hidden: Vec<usize>,
    output_dim: usize,
}

impl NetworkSpec {
    pub fn new(input_dim: usize, hidden: Vec<usize>, output_dim: usize) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::Spec("input_dim must be positive".into()));
        }
        if hidden.contains(&0) {
            return Err(Error::Spec(format!(
                "hidden widths must be positive: {hidden:?}"
            )));
        }
        if output_dim < 2 {
            return Err(Error::Spec(format!(
                "need at least 2 classes, got {output_dim}"
            )));
        }
        Ok(Self {
            input_dim,
            hidden,
            output_dim,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden(&self) -> &[usize] {
        &self.hidden
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn num_layers(&self) -> usize {
        self.hidden.len() + 1
    }

    /// `(fan_in, fan_out)` of each dense layer, input to output.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut widths = Vec::with_capacity(self.hidden.len() + 2);
        widths.push(self.input_dim);
        widths.extend_from_slice(&self.hidden);
        widths.push(self.output_dim);
        widths.windows(2).map(|w| (w[0], w[1])).collect()
    }

    pub fn param_count(&self) -> usize {
        self.layer_dims()
            .iter()
            .map(|&(fan_in, fan_out)| fan_in * fan_out + fan_out)
            .sum()
    }
}

/// One dense layer: `weight` is `[fan_in, fan_out]`, `bias` is `[fan_out]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense<T> {
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
}

/// Parameters of a network, one [`Dense`] per layer.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelWeights<T> {
    layers: Vec<Dense<T>>,
}

/// Gradients share the layout of the weights they were computed from.
pub type Gradients<T> = ModelWeights<T>;

impl<T: Scalar> ModelWeights<T> {
    pub fn from_layers(layers: Vec<Dense<T>>) -> Result<Self> {
        for (k, pair) in layers.windows(2).enumerate() {
            if pair[0].weight.shape()[1] != pair[1].weight.shape()[0] {
                return Err(Error::Shape(format!(
                    "layer {k} output does not feed layer {}",
                    k + 1
                )));
            }
        }
        for (k, layer) in layers.iter().enumerate() {
            if layer.weight.shape().len() != 2 || layer.bias.shape() != [layer.weight.shape()[1]] {
                return Err(Error::Shape(format!(
                    "layer {k} weight/bias shapes disagree"
                )));
            }
        }
        if layers.is_empty() {
            return Err(Error::Shape("no layers".into()));
        }
        Ok(Self { layers })
    }

    pub fn zeros(spec: &NetworkSpec) -> Self {
        let layers = spec
            .layer_dims()
            .into_iter()
            .map(|(fan_in, fan_out)| Dense {
                weight: Tensor::zeros(vec![fan_in, fan_out]),
                bias: Tensor::zeros(vec![fan_out]),
            })
            .collect();
        Self { layers }
    }

    pub fn layers(&self) -> &[Dense<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense<T>] {
        &mut self.layers
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.len() + l.bias.len())
            .sum()
    }

    /// Checks that these weights have exactly the layout `spec` describes.
    pub fn check_spec(&self, spec: &NetworkSpec) -> Result<()> {
        let dims = spec.layer_dims();
        if dims.len() != self.layers.len() {
            return Err(Error::Shape(format!(
                "spec has {} layers, weights have {}",
                dims.len(),
                self.layers.len()
            )));
        }
        for (k, (layer, (fan_in, fan_out))) in self.layers.iter().zip(dims).enumerate() {
            if layer.weight.shape() != [fan_in, fan_out] || layer.bias.shape() != [fan_out] {
                return Err(Error::Shape(format!(
                    "layer {k}: expected [{fan_in}, {fan_out}] + [{fan_out}], got {:?} + {:?}",
                    layer.weight.shape(),
                    layer.bias.shape()
                )));
            }
        }
        Ok(())
    }

    pub fn is_congruent(&self, other: &Self) -> bool {
        self.layers.len() == other.layers.len()
            && self.layers.iter().zip(&other.layers).all(|(a, b)| {
                a.weight.shape() == b.weight.shape() && a.bias.shape() == b.bias.shape()
            })
    }

    fn require_congruent(&self, other: &Self) -> Result<()> {
        if self.is_congruent(other) {
            Ok(())
        } else {
            Err(Error::Shape("parameter sets have different layouts".into()))
        }
    }

    /// All parameters in canonical order: per layer, weights row-major then bias.
    pub fn iter(&self) -> impl Iterator<Item = &T> + '_ {
        self.layers
            .iter()
            .flat_map(|l| l.weight.data().iter().chain(l.bias.data()))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut T> + '_ {
        self.layers.iter_mut().flat_map(|l| {
            let Dense { weight, bias } = l;
            weight
                .data_mut()
                .iter_mut()
                .chain(bias.data_mut().iter_mut())
        })
    }

    /// Flat copy of every parameter in canonical order.
    pub fn to_flat(&self) -> Vec<T> {
        self.iter().copied().collect()
    }

    /// Element-wise combination of two congruent parameter sets.
    pub fn zip_map(&self, other: &Self, mut f: impl FnMut(T, T) -> T) -> Result<Self> {
        self.require_congruent(other)?;
        let mut out = self.clone();
        for (o, b) in out.iter_mut().zip(other.iter()) {
            *o = f(*o, *b);
        }
        Ok(out)
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<T> {
        self.require_congruent(other)?;
        Ok(self
            .iter()
            .zip(other.iter())
            .fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs())))
    }

    pub fn cast<U: Scalar>(&self) -> ModelWeights<U> {
        ModelWeights {
            layers: self
                .layers
                .iter()
                .map(|l| Dense {
                    weight: l.weight.cast(),
                    bias: l.bias.cast(),
                })
                .collect(),
        }
    }
}

/// Glorot-uniform weights (bound `sqrt(6 / (fan_in + fan_out))`) and zero
/// biases. Draws are taken in canonical parameter order from a single
/// stream seeded with `seed`, computed in `f64` and then converted, so `f32`
/// and `f64` models from the same seed agree up to rounding.
pub fn init_weights<T: Scalar>(spec: &NetworkSpec, seed: u64) -> ModelWeights<T> {
    let mut rng = SeededRng::new(seed);
    let layers = spec
        .layer_dims()
        .into_iter()
        .map(|(fan_in, fan_out)| {
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let data = (0..fan_in * fan_out)
                .map(|_| T::lit(bound * (2.0 * rng.uniform() - 1.0)))
                .collect();
            Dense {
                weight: Tensor::from_parts(vec![fan_in, fan_out], data),
                bias: Tensor::zeros(vec![fan_out]),
            }
        })
        .collect();
    ModelWeights { layers }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_validation() {
        assert!(NetworkSpec::new(0, vec![], 2).is_err());
        assert!(NetworkSpec::new(4, vec![0], 2).is_err());
        assert!(NetworkSpec::new(4, vec![], 1).is_err());
        let s = NetworkSpec::new(784, vec![200, 200], 10).unwrap();
        assert_eq!(s.layer_dims(), vec![(784, 200), (200, 200), (200, 10)]);
        assert_eq!(
            s.param_count(),
            784 * 200 + 200 + 200 * 200 + 200 + 200 * 10 + 10
        );
    }

    #[test]
    fn init_is_deterministic() {
        let s = NetworkSpec::new(10, vec![8, 6], 3).unwrap();
        let a: ModelWeights<f64> = init_weights(&s, 7);
        let b: ModelWeights<f64> = init_weights(&s, 7);
        assert_eq!(a, b);
        let c: ModelWeights<f64> = init_weights(&s, 8);
        assert_ne!(a, c);
    }

    #[test]
    fn init_biases_zero_and_bounded() {
        let s = NetworkSpec::new(784, vec![200, 200], 10).unwrap();
        let w: ModelWeights<f64> = init_weights(&s, 3);
        w.check_spec(&s).unwrap();
        for l in w.layers() {
            assert!(l.bias.data().iter().all(|&b| b == 0.0));
        }
        let bound = (6.0f64 / (784.0 + 200.0)).sqrt();
        assert!(w.layers()[0].weight.data().iter().all(|v| v.abs() <= bound));
    }

    #[test]
    fn check_spec_catches_mismatch() {
        let s = NetworkSpec::new(4, vec![3], 2).unwrap();
        let other = NetworkSpec::new(4, vec![5], 2).unwrap();
        let w = ModelWeights::<f64>::zeros(&s);
        assert!(w.check_spec(&s).is_ok());
        assert!(w.check_spec(&other).is_err());
    }
}
