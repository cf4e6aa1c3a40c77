//! Shared fixtures for the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use fedsim::data::{load_idx, synthetic_with, Dataset, SyntheticParams};
use fedsim::nn::{init_weights, Batch, ModelWeights, NetworkSpec, Tensor};
use fedsim::rng::SeededRng;

/// Seeded synthetic train/test pair with a fixed 1000-sample test split.
pub fn synthetic_split(
    seed: u64,
    n_train: usize,
    d: usize,
    classes: usize,
) -> (Dataset<f64>, Dataset<f64>) {
    let all = synthetic_with(
        &SyntheticParams::default(),
        seed,
        n_train + 1000,
        d,
        classes,
    )
    .unwrap();
    all.split_at(n_train).unwrap()
}

pub fn mnist_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/mnist-subset")
}

pub fn mnist_subset() -> (Dataset<f64>, Dataset<f64>) {
    let dir = mnist_dir();
    let train = load_idx(
        &dir.join("train-images-idx3-ubyte.gz"),
        &dir.join("train-labels-idx1-ubyte.gz"),
    )
    .unwrap();
    let test = load_idx(
        &dir.join("t10k-images-idx3-ubyte.gz"),
        &dir.join("t10k-labels-idx1-ubyte.gz"),
    )
    .unwrap();
    (train, test)
}

/// Hidden pre-activations computed with plain loops, independent of the
/// library's forward pass.
pub fn hidden_preactivations(w: &ModelWeights<f64>, batch: &Batch<f64>) -> Vec<f64> {
    let mut out = Vec::new();
    let layers = w.layers();
    for s in 0..batch.len() {
        let mut a: Vec<f64> = batch.features().row(s).to_vec();
        for (l, layer) in layers.iter().enumerate() {
            let (fi, fo) = (layer.weight.shape()[0], layer.weight.shape()[1]);
            let mut z = vec![0.0; fo];
            for (j, zj) in z.iter_mut().enumerate() {
                *zj = layer.bias.data()[j];
                for (i, ai) in a.iter().enumerate().take(fi) {
                    *zj += ai * layer.weight.data()[i * fo + j];
                }
            }
            if l + 1 < layers.len() {
                out.extend_from_slice(&z);
                a = z.into_iter().map(|v| v.max(0.0)).collect();
            }
        }
    }
    out
}

/// A random network, weights and batch for gradient checking. Biases are
/// nonzero and draws with a hidden pre-activation within `1e-4` of the ReLU
/// kink are rejected, since finite differences are not meaningful there.
pub fn gradcheck_instance(
    rng: &mut SeededRng,
    max_params: usize,
) -> (NetworkSpec, ModelWeights<f64>, Batch<f64>) {
    loop {
        let d = 1 + rng.below(30) as usize;
        let depth = rng.below(3) as usize;
        let hidden: Vec<usize> = (0..depth).map(|_| 1 + rng.below(40) as usize).collect();
        let classes = 2 + rng.below(9) as usize;
        let spec = NetworkSpec::new(d, hidden, classes).unwrap();
        if spec.param_count() > max_params {
            continue;
        }
        let mut w: ModelWeights<f64> = init_weights(&spec, rng.next_u64());
        for layer in w.layers_mut() {
            for v in layer.bias.data_mut() {
                *v = rng.uniform() - 0.5;
            }
        }
        let b = 1 + rng.below(16) as usize;
        let x: Vec<f64> = (0..b * d).map(|_| 2.0 * rng.uniform() - 1.0).collect();
        let y: Vec<usize> = (0..b).map(|_| rng.below(classes as u64) as usize).collect();
        let batch = Batch::new(Tensor::new(vec![b, d], x).unwrap(), y).unwrap();
        if hidden_preactivations(&w, &batch)
            .iter()
            .all(|z| z.abs() > 1e-4)
        {
            return (spec, w, batch);
        }
    }
}
