use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::eigen::generalized_eigen;
use super::kernel::{compute_kernel_matrix_with, kernel_row, KernelSpec};
use super::scatter::{fisher_criterion, scatter_matrices, ScatterMatrices};
use super::{GdaError, LabeledDataset};
use crate::exec::Execution;

/// Eigenvalues of `U_b` below this fraction of the largest count as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Extraction {
    /// Sequential: each direction maximizes the criterion on the
    /// K-orthogonal complement of the ones before it.
    #[default]
    KOrthogonal,
    /// Top-d generalized eigenvectors of `(U_b, U_w + eps I)`.
    Generalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GdaOptions {
    /// Defaults to `Z - 1`.
    pub discriminants: Option<usize>,
    pub extraction: Extraction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GdaModel {
    pub kernel: KernelSpec,
    pub extraction: Extraction,
    pub epsilon: f64,
    pub num_classes: usize,
    pub dim: usize,
    pub samples: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    /// `sigma_1..sigma_d`, each of length `M`, with `sigma^T K sigma = 1`.
    pub discriminants: Vec<Vec<f64>>,
    /// `eta_1 >= ... >= eta_d`
    pub eigenvalues: Vec<f64>,
    /// Per class, the mean training projection (length `d`).
    pub class_means: Vec<Vec<f64>>,
    pub requested: usize,
    /// Set when fewer than `requested` discriminants were extractable.
    pub rank_limited: bool,
}

/// Orthonormal basis of the orthogonal complement of `span(cols)`.
fn complement_basis(cols: &DMatrix<f64>) -> DMatrix<f64> {
    let (m, s) = cols.shape();
    let mut aug = DMatrix::zeros(m, s + m);
    aug.view_mut((0, 0), (m, s)).copy_from(cols);
    aug.view_mut((0, s), (m, m)).fill_with_identity();
    let q = aug.qr().q();
    q.columns(s, m - s).into_owned()
}

fn numerical_rank(a: &DMatrix<f64>) -> usize {
    let ev = SymmetricEigen::new(a.clone()).eigenvalues;
    let top = ev.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if top <= 0.0 {
        return 0;
    }
    ev.iter().filter(|&&v| v > RANK_TOLERANCE * top).count()
}

/// Largest-magnitude entry positive (first such entry on ties).
fn fix_sign(v: &mut DVector<f64>) {
    let mut idx = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[idx].abs() {
            idx = i;
        }
    }
    if v[idx] < 0.0 {
        v.neg_mut();
    }
}

/// Scales to `sigma^T K sigma = 1`; `None` if `sigma` is (numerically) in
/// the null space of `K`.
fn k_normalize(k: &DMatrix<f64>, mut v: DVector<f64>) -> Option<DVector<f64>> {
    let q = v.dot(&(k * &v));
    let scale = k.amax() * v.norm_squared();
    if q.is_nan() || q <= 1e-14 * scale {
        return None;
    }
    v /= q.sqrt();
    fix_sign(&mut v);
    Some(v)
}

fn extract_k_orthogonal(
    k: &DMatrix<f64>,
    scatter: &ScatterMatrices,
    within: &DMatrix<f64>,
    target: usize,
) -> Result<(Vec<DVector<f64>>, Vec<f64>), GdaError> {
    let m = k.nrows();
    let mut sigmas: Vec<DVector<f64>> = Vec::with_capacity(target);
    let mut etas = Vec::with_capacity(target);
    while sigmas.len() < target && sigmas.len() < m {
        let (sigma, eta) = if sigmas.is_empty() {
            let ge = generalized_eigen(&scatter.between, within, 1)?;
            (ge.vectors.column(0).into_owned(), ge.values[0])
        } else {
            // sigma^T K sigma_j = 0 for all previous j: restrict to the
            // complement of span{K sigma_j}
            let constraints =
                DMatrix::from_columns(&sigmas.iter().map(|s| k * s).collect::<Vec<_>>());
            let q = complement_basis(&constraints);
            let qt = q.transpose();
            let mut a = &qt * &scatter.between * &q;
            let mut b = &qt * within * &q;
            a = (&a + a.transpose()) * 0.5;
            b = (&b + b.transpose()) * 0.5;
            let ge = generalized_eigen(&a, &b, 1)?;
            let sigma = &q * ge.vectors.column(0);
            // the reduced pencil carries rounding from the basis change;
            // evaluate the criterion on the full matrices instead
            let eta = fisher_criterion(&sigma, scatter)?;
            (sigma, eta)
        };
        match k_normalize(k, sigma) {
            Some(s) => {
                sigmas.push(s);
                etas.push(eta);
            }
            None => break,
        }
    }
    Ok((sigmas, etas))
}

fn extract_generalized(
    k: &DMatrix<f64>,
    scatter: &ScatterMatrices,
    within: &DMatrix<f64>,
    target: usize,
) -> Result<(Vec<DVector<f64>>, Vec<f64>), GdaError> {
    let ge = generalized_eigen(&scatter.between, within, target)?;
    let mut sigmas = Vec::with_capacity(target);
    let mut etas = Vec::with_capacity(target);
    for (i, &eta) in ge.values.iter().enumerate() {
        match k_normalize(k, ge.vectors.column(i).into_owned()) {
            Some(s) => {
                sigmas.push(s);
                etas.push(eta);
            }
            None => break,
        }
    }
    Ok((sigmas, etas))
}

pub fn train_gda(data: &LabeledDataset, spec: &KernelSpec, d: usize) -> Result<GdaModel, GdaError> {
    train_gda_with(
        data,
        spec,
        &GdaOptions {
            discriminants: Some(d),
            ..Default::default()
        },
        Execution::default(),
    )
}

pub fn train_gda_with(
    data: &LabeledDataset,
    spec: &KernelSpec,
    opts: &GdaOptions,
    exec: Execution,
) -> Result<GdaModel, GdaError> {
    let z = data.num_classes();
    let requested = opts.discriminants.unwrap_or(z - 1);
    if requested == 0 {
        return Err(GdaError::InvalidCount(
            "at least one discriminant is required".into(),
        ));
    }
    let km = compute_kernel_matrix_with(data, spec, exec)?;
    let k = km.matrix();
    if k.amax().is_nan() || k.amax() <= f64::MIN_POSITIVE {
        return Err(GdaError::DegenerateKernel);
    }
    let scatter = scatter_matrices(k, data.labels(), z)?;
    let rank = numerical_rank(&scatter.between);
    if rank == 0 {
        return Err(GdaError::InsufficientRank);
    }
    let target = requested.min(z - 1).min(rank);
    let within = scatter.regularized_within();
    let (sigmas, etas) = match opts.extraction {
        Extraction::KOrthogonal => extract_k_orthogonal(k, &scatter, &within, target)?,
        Extraction::Generalized => extract_generalized(k, &scatter, &within, target)?,
    };
    if sigmas.is_empty() {
        return Err(GdaError::InsufficientRank);
    }
    let class_means = scatter
        .means
        .class_means
        .iter()
        .map(|delta| sigmas.iter().map(|s| s.dot(delta)).collect())
        .collect();
    Ok(GdaModel {
        kernel: *spec,
        extraction: opts.extraction,
        epsilon: scatter.regularization(),
        num_classes: z,
        dim: data.dim(),
        samples: data.samples().to_vec(),
        labels: data.labels().to_vec(),
        rank_limited: sigmas.len() < requested,
        discriminants: sigmas.iter().map(|s| s.iter().copied().collect()).collect(),
        eigenvalues: etas,
        class_means,
        requested,
    })
}

impl GdaModel {
    /// Number of discriminants `d`.
    pub fn d(&self) -> usize {
        self.discriminants.len()
    }

    /// `M x d` matrix whose columns are the `sigma_k`.
    pub fn sigma_matrix(&self) -> DMatrix<f64> {
        let m = self.samples.len();
        DMatrix::from_fn(m, self.d(), |i, k| self.discriminants[k][i])
    }

    /// Structural consistency check for deserialized models.
    pub fn validate(&self) -> Result<(), GdaError> {
        self.kernel.validate()?;
        let m = self.samples.len();
        let bad = |what: &str| Err(GdaError::InvalidDataset(format!("model: {what}")));
        if m == 0 || self.labels.len() != m {
            return bad("sample/label count mismatch");
        }
        if self.samples.iter().any(|s| s.len() != self.dim) {
            return bad("sample dimension mismatch");
        }
        if self.discriminants.is_empty() || self.discriminants.iter().any(|s| s.len() != m) {
            return bad("discriminant length mismatch");
        }
        if self.eigenvalues.len() != self.d() {
            return bad("eigenvalue count mismatch");
        }
        if self.class_means.len() != self.num_classes
            || self.class_means.iter().any(|c| c.len() != self.d())
        {
            return bad("class mean shape mismatch");
        }
        if self.labels.iter().any(|&l| l == 0 || l > self.num_classes) {
            return bad("label out of range");
        }
        Ok(())
    }

    /// Projection of a sample given its kernel row `mu_u`.
    pub fn project_kernel_row(&self, row: &[f64]) -> Vec<f64> {
        self.discriminants
            .iter()
            .map(|s| s.iter().zip(row).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn project(&self, u: &[f64]) -> Result<Vec<f64>, GdaError> {
        if u.len() != self.dim {
            return Err(GdaError::DimensionMismatch {
                expected: self.dim,
                found: u.len(),
            });
        }
        Ok(self.project_kernel_row(&kernel_row(&self.samples, &self.kernel, u)))
    }

    pub fn project_batch(
        &self,
        us: &[Vec<f64>],
        exec: Execution,
    ) -> Result<Vec<Vec<f64>>, GdaError> {
        exec.map(us, |u| self.project(u)).into_iter().collect()
    }

    /// Nearest class mean in discriminant space, 1-based; ties go to the
    /// smallest class index.
    pub fn nearest_class(&self, projected: &[f64]) -> usize {
        let mut best = (1, f64::INFINITY);
        for (i, mean) in self.class_means.iter().enumerate() {
            let d2: f64 = mean
                .iter()
                .zip(projected)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            if d2 < best.1 {
                best = (i + 1, d2);
            }
        }
        best.0
    }

    pub fn classify(&self, u: &[f64]) -> Result<usize, GdaError> {
        Ok(self.nearest_class(&self.project(u)?))
    }
}

pub fn project(model: &GdaModel, u: &[f64]) -> Result<Vec<f64>, GdaError> {
    model.project(u)
}

pub fn classify_nearest_mean(model: &GdaModel, u: &[f64]) -> Result<usize, GdaError> {
    model.classify(u)
}
