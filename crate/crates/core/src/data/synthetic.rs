use crate::data::Dataset;
use crate::nn::Tensor;
use crate::rng::SeededRng;
use crate::{Error, Result, Scalar};

/// Shape of the Gaussian-blob generator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SyntheticParams {
    /// Norm of every class center.
    pub separation: f64,
    /// Per-coordinate standard deviation of the isotropic noise.
    pub noise: f64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        Self {
            separation: 3.0,
            noise: 1.0,
        }
    }
}

/// Class-conditional Gaussian blobs with default [`SyntheticParams`].
pub fn synthetic<T: Scalar>(
    seed: u64,
    n: usize,
    input_dim: usize,
    num_classes: usize,
) -> Result<Dataset<T>> {
    synthetic_with(&SyntheticParams::default(), seed, n, input_dim, num_classes)
}

/// Sample `i` has label `i mod num_classes` and features
/// `center[label] + noise * z`. Centers are seeded random unit directions
/// scaled to `separation`; they are drawn first, then the samples in order,
/// all from one stream.
pub fn synthetic_with<T: Scalar>(
    params: &SyntheticParams,
    seed: u64,
    n: usize,
    input_dim: usize,
    num_classes: usize,
) -> Result<Dataset<T>> {
    if num_classes < 2 || input_dim == 0 {
        return Err(Error::Config(
            "synthetic data needs >= 2 classes and input_dim >= 1".into(),
        ));
    }
    if n < num_classes {
        return Err(Error::Config(format!(
            "need N >= num_classes, got {n} < {num_classes}"
        )));
    }
    let mut rng = SeededRng::new(seed);
    let mut centers = vec![0.0; num_classes * input_dim];
    for center in centers.chunks_exact_mut(input_dim) {
        rng.fill_gaussian(center);
        let norm = center.iter().map(|v| v * v).sum::<f64>().sqrt();
        for v in center.iter_mut() {
            *v *= params.separation / norm;
        }
    }
    let mut noise = vec![0.0; input_dim];
    let mut data = Vec::with_capacity(n * input_dim);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let label = i % num_classes;
        rng.fill_gaussian(&mut noise);
        let center = &centers[label * input_dim..(label + 1) * input_dim];
        data.extend(
            center
                .iter()
                .zip(&noise)
                .map(|(c, z)| T::lit(c + params.noise * z)),
        );
        labels.push(label);
    }
    Dataset::new(Tensor::new(vec![n, input_dim], data)?, labels, num_classes)
}
