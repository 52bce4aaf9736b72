use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{GdaError, LabeledDataset};
use crate::exec::Execution;

/// Kernel function `k(u, v) = phi(u) . phi(v)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelSpec {
    Linear,
    /// `exp(-gamma * |u - v|^2)`
    Rbf {
        gamma: f64,
    },
    /// `(u . v + coef)^degree`
    Polynomial {
        degree: u32,
        coef: f64,
    },
}

impl KernelSpec {
    /// RBF with `gamma = 1 / n`.
    pub fn rbf_default(dim: usize) -> Self {
        KernelSpec::Rbf {
            gamma: 1.0 / dim.max(1) as f64,
        }
    }

    pub fn polynomial_default() -> Self {
        KernelSpec::Polynomial {
            degree: 2,
            coef: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), GdaError> {
        match *self {
            KernelSpec::Linear => Ok(()),
            KernelSpec::Rbf { gamma } if gamma > 0.0 && gamma.is_finite() => Ok(()),
            KernelSpec::Rbf { gamma } => Err(GdaError::InvalidKernel(format!(
                "rbf gamma must be positive, got {gamma}"
            ))),
            KernelSpec::Polynomial { degree, coef } if degree >= 1 && coef.is_finite() => Ok(()),
            KernelSpec::Polynomial { degree, coef } => Err(GdaError::InvalidKernel(format!(
                "polynomial needs degree >= 1 and finite coef, got ({degree}, {coef})"
            ))),
        }
    }

    #[inline]
    pub fn eval(&self, u: &[f64], v: &[f64]) -> f64 {
        match *self {
            KernelSpec::Linear => dot(u, v),
            KernelSpec::Rbf { gamma } => {
                let d2: f64 = u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
                (-gamma * d2).exp()
            }
            KernelSpec::Polynomial { degree, coef } => (dot(u, v) + coef).powi(degree as i32),
        }
    }
}

fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// Symmetric Gram matrix of the training samples.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix(pub DMatrix<f64>);

impl KernelMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.0.nrows() == 0
    }
}

pub fn compute_kernel_matrix(
    data: &LabeledDataset,
    spec: &KernelSpec,
) -> Result<KernelMatrix, GdaError> {
    compute_kernel_matrix_with(data, spec, Execution::default())
}

/// Computes the upper triangle row by row and mirrors it, so the result is
/// exactly symmetric.
pub fn compute_kernel_matrix_with(
    data: &LabeledDataset,
    spec: &KernelSpec,
    exec: Execution,
) -> Result<KernelMatrix, GdaError> {
    spec.validate()?;
    let samples = data.samples();
    let m = samples.len();
    let rows = exec.map_range(m, |a| {
        (a..m)
            .map(|b| spec.eval(&samples[a], &samples[b]))
            .collect::<Vec<f64>>()
    });
    let mut k = DMatrix::zeros(m, m);
    for (a, row) in rows.into_iter().enumerate() {
        for (off, v) in row.into_iter().enumerate() {
            k[(a, a + off)] = v;
            k[(a + off, a)] = v;
        }
    }
    Ok(KernelMatrix(k))
}

/// `(k(u_1, u), ..., k(u_M, u))` against stored samples.
pub fn kernel_row(samples: &[Vec<f64>], spec: &KernelSpec, u: &[f64]) -> Vec<f64> {
    samples.iter().map(|s| spec.eval(s, u)).collect()
}
