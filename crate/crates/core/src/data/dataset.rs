use crate::nn::{Batch, Tensor};
use crate::{Error, Result, Scalar};

/// Feature matrix `[N, input_dim]` with one class label per row.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset<T> {
    features: Tensor<T>,
    labels: Vec<usize>,
    num_classes: usize,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(features: Tensor<T>, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if features.shape().len() != 2 || features.rows() != labels.len() {
            return Err(Error::Shape(format!(
                "features {:?} do not match {} labels",
                features.shape(),
                labels.len()
            )));
        }
        if let Some(&label) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::Label { label, num_classes });
        }
        Ok(Self {
            features,
            labels,
            num_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.features.row_len()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn features(&self) -> &Tensor<T> {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> &[T] {
        self.features.row(i)
    }

    /// Widens the label space, e.g. when a file only happens to contain a
    /// prefix of the classes.
    pub fn with_num_classes(self, num_classes: usize) -> Result<Self> {
        Self::new(self.features, self.labels, num_classes)
    }

    fn gather(&self, indices: &[usize]) -> (Tensor<T>, Vec<usize>) {
        let width = self.input_dim();
        let mut data = Vec::with_capacity(indices.len() * width);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            data.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        (Tensor::from_parts(vec![indices.len(), width], data), labels)
    }

    /// Rows at `indices`, in that order. Indices must be in range and nonempty.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.len()) {
            return Err(Error::Shape(format!(
                "row index {bad} out of range {}",
                self.len()
            )));
        }
        let (features, labels) = self.gather(indices);
        Ok(Self {
            features,
            labels,
            num_classes: self.num_classes,
        })
    }

    /// Gathers rows into a training batch. Indices must be in range.
    pub fn batch(&self, indices: &[usize]) -> Batch<T> {
        let (features, labels) = self.gather(indices);
        Batch::from_parts(features, labels)
    }

    /// The first `n` rows and the remainder; both parts must be nonempty.
    pub fn split_at(&self, n: usize) -> Result<(Self, Self)> {
        if n == 0 || n >= self.len() {
            return Err(Error::Config(format!(
                "split point {n} must lie strictly inside 0..{}",
                self.len()
            )));
        }
        let head: Vec<usize> = (0..n).collect();
        let tail: Vec<usize> = (n..self.len()).collect();
        Ok((self.subset(&head)?, self.subset(&tail)?))
    }

    pub fn label_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    pub fn distinct_labels(&self) -> usize {
        self.label_counts().iter().filter(|&&c| c > 0).count()
    }

    pub fn cast<U: Scalar>(&self) -> Dataset<U> {
        Dataset {
            features: self.features.cast(),
            labels: self.labels.clone(),
            num_classes: self.num_classes,
        }
    }
}

/// The local training set of client `index`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClientDataset<T> {
    pub index: usize,
    pub data: Dataset<T>,
}

impl<T: Scalar> ClientDataset<T> {
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}
