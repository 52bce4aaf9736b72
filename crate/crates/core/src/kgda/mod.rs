//! Kernel generalized discriminant analysis.
//!
//! Discriminant directions live in the span of the mapped training samples,
//! `kappa = sum_j sigma_j phi(u_j)`, so everything is expressed through the
//! kernel matrix `K`: the projection of a sample is `sigma^T mu_u` with
//! `mu_u = (k(u_1, u), ..., k(u_M, u))`, and orthogonality of two directions
//! in feature space reads `sigma_i^T K sigma_j = 0`.
//!
//! Training maximizes the kernel Fisher criterion
//! `sigma^T U_b sigma / sigma^T (U_w + eps I) sigma`. The first direction is
//! the top generalized eigenvector; each further direction maximizes the
//! same criterion restricted to the K-orthogonal complement of the previous
//! ones ([`Extraction::KOrthogonal`]). [`Extraction::Generalized`] instead
//! takes the top-d generalized eigenvectors in one shot.

mod eigen;
mod kernel;
mod model;
mod scatter;

pub use eigen::{generalized_eigen, GeneralizedEigen};
pub use kernel::{
    compute_kernel_matrix, compute_kernel_matrix_with, kernel_row, KernelMatrix, KernelSpec,
};
pub use model::{
    classify_nearest_mean, project, train_gda, train_gda_with, Extraction, GdaModel, GdaOptions,
    RANK_TOLERANCE,
};
pub use scatter::{
    fisher_criterion, kernel_class_means, scatter_matrices, KernelMeans, ScatterMatrices,
    REGULARIZATION_FLOOR, REGULARIZATION_SCALE,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GdaError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("class {0} has no samples")]
    EmptyClass(usize),
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
    #[error("kernel matrix is numerically zero")]
    DegenerateKernel,
    #[error("between-class scatter has numerical rank 0; no discriminant exists")]
    InsufficientRank,
    #[error("zero vector")]
    ZeroVector,
    #[error("invalid discriminant count: {0}")]
    InvalidCount(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// `M` samples of dimension `n` with 1-based class labels in `1..=Z`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    samples: Vec<Vec<f64>>,
    labels: Vec<usize>,
    num_classes: usize,
    dim: usize,
}

impl LabeledDataset {
    /// Requires `Z >= 2`, every class in `1..=Z` nonempty, and a common,
    /// positive dimension.
    pub fn new(samples: Vec<Vec<f64>>, labels: Vec<usize>) -> Result<Self, GdaError> {
        if samples.len() != labels.len() {
            return Err(GdaError::InvalidDataset(format!(
                "{} samples but {} labels",
                samples.len(),
                labels.len()
            )));
        }
        let Some(first) = samples.first() else {
            return Err(GdaError::InvalidDataset("no samples".into()));
        };
        let dim = first.len();
        if dim == 0 {
            return Err(GdaError::InvalidDataset("samples have no features".into()));
        }
        if let Some(bad) = samples.iter().find(|s| s.len() != dim) {
            return Err(GdaError::DimensionMismatch {
                expected: dim,
                found: bad.len(),
            });
        }
        if samples.iter().flatten().any(|v| !v.is_finite()) {
            return Err(GdaError::InvalidDataset("non-finite feature value".into()));
        }
        if labels.contains(&0) {
            return Err(GdaError::InvalidDataset("labels are 1-based".into()));
        }
        let num_classes = labels.iter().copied().max().unwrap_or(0);
        if num_classes < 2 {
            return Err(GdaError::InvalidDataset(format!(
                "need at least 2 classes, found {num_classes}"
            )));
        }
        let mut counts = vec![0usize; num_classes];
        for &l in &labels {
            counts[l - 1] += 1;
        }
        if let Some(empty) = counts.iter().position(|&c| c == 0) {
            return Err(GdaError::EmptyClass(empty + 1));
        }
        Ok(Self {
            samples,
            labels,
            num_classes,
            dim,
        })
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.num_classes];
        for &l in &self.labels {
            counts[l - 1] += 1;
        }
        counts
    }
}
