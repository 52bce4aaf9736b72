//! Kernel class means and the M x M between/within/total scatter matrices.

use nalgebra::{DMatrix, DVector};

use super::eigen::dot2;
use super::GdaError;

/// Relative regularization added to the within-class scatter diagonal.
pub const REGULARIZATION_SCALE: f64 = 1e-8;
pub const REGULARIZATION_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct KernelMeans {
    /// `delta_i`, one per class, in class-index order.
    pub class_means: Vec<DVector<f64>>,
    /// `delta_0`
    pub global: DVector<f64>,
    pub class_counts: Vec<usize>,
}

/// `delta_i = (1/M_i) sum_{j in class i} K[:, j]`, `delta_0 = (1/M) sum_j K[:, j]`.
///
/// `labels` are 1-based; every class in `1..=num_classes` must be present.
pub fn kernel_class_means(
    k: &DMatrix<f64>,
    labels: &[usize],
    num_classes: usize,
) -> Result<KernelMeans, GdaError> {
    let m = k.nrows();
    if labels.len() != m || k.ncols() != m {
        return Err(GdaError::DimensionMismatch {
            expected: m,
            found: labels.len(),
        });
    }
    let mut sums = vec![DVector::zeros(m); num_classes];
    let mut counts = vec![0usize; num_classes];
    let mut global = DVector::zeros(m);
    for (j, &label) in labels.iter().enumerate() {
        if label == 0 || label > num_classes {
            return Err(GdaError::InvalidDataset(format!(
                "label {label} outside 1..={num_classes}"
            )));
        }
        let col = k.column(j);
        sums[label - 1] += &col;
        counts[label - 1] += 1;
        global += &col;
    }
    if let Some(empty) = counts.iter().position(|&c| c == 0) {
        return Err(GdaError::EmptyClass(empty + 1));
    }
    let class_means = sums
        .into_iter()
        .zip(&counts)
        .map(|(s, &c)| s / c as f64)
        .collect();
    Ok(KernelMeans {
        class_means,
        global: global / m as f64,
        class_counts: counts,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterMatrices {
    /// `U_b = sum_i (M_i/M)(delta_i - delta_0)(delta_i - delta_0)^T`
    pub between: DMatrix<f64>,
    /// `U_w = (1/M) sum_i sum_{j in i} (K_j - delta_i)(K_j - delta_i)^T`
    pub within: DMatrix<f64>,
    /// `U_t = (1/M) sum_j (K_j - delta_0)(K_j - delta_0)^T`
    pub total: DMatrix<f64>,
    pub means: KernelMeans,
}

fn symmetrize(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
}

pub fn scatter_matrices(
    k: &DMatrix<f64>,
    labels: &[usize],
    num_classes: usize,
) -> Result<ScatterMatrices, GdaError> {
    let means = kernel_class_means(k, labels, num_classes)?;
    let m = k.nrows();
    let mf = m as f64;

    // deviations as columns, then one GEMM each
    let mut dev_w = k.clone();
    let mut dev_t = k.clone();
    for (j, &label) in labels.iter().enumerate() {
        let mut cw = dev_w.column_mut(j);
        cw -= &means.class_means[label - 1];
        let mut ct = dev_t.column_mut(j);
        ct -= &means.global;
    }
    let mut within = &dev_w * dev_w.transpose() / mf;
    let mut total = &dev_t * dev_t.transpose() / mf;

    let mut dev_b = DMatrix::zeros(m, num_classes);
    for (i, mean) in means.class_means.iter().enumerate() {
        let w = (means.class_counts[i] as f64 / mf).sqrt();
        dev_b.set_column(i, &((mean - &means.global) * w));
    }
    let mut between = &dev_b * dev_b.transpose();

    symmetrize(&mut within);
    symmetrize(&mut total);
    symmetrize(&mut between);
    Ok(ScatterMatrices {
        between,
        within,
        total,
        means,
    })
}

impl ScatterMatrices {
    pub fn dim(&self) -> usize {
        self.within.nrows()
    }

    /// `eps = max(1e-8 * trace(U_w) / M, 1e-12)`.
    pub fn regularization(&self) -> f64 {
        let m = self.dim().max(1) as f64;
        (REGULARIZATION_SCALE * self.within.trace() / m).max(REGULARIZATION_FLOOR)
    }

    /// `U_w + eps I`
    pub fn regularized_within(&self) -> DMatrix<f64> {
        let mut w = self.within.clone();
        let eps = self.regularization();
        for i in 0..w.nrows() {
            w[(i, i)] += eps;
        }
        w
    }
}

/// `v^T A v` in compensated arithmetic; near-null directions of `U_w`
/// otherwise lose most of their digits.
fn quad_form(a: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    let n = v.len();
    let av: Vec<f64> = (0..n)
        .map(|i| dot2((0..n).map(|j| (a[(i, j)], v[j]))))
        .collect();
    dot2(v.iter().copied().zip(av))
}

/// Kernel Fisher criterion `sigma^T U_b sigma / sigma^T (U_w + eps I) sigma`.
pub fn fisher_criterion(sigma: &DVector<f64>, s: &ScatterMatrices) -> Result<f64, GdaError> {
    if sigma.len() != s.dim() {
        return Err(GdaError::DimensionMismatch {
            expected: s.dim(),
            found: sigma.len(),
        });
    }
    if sigma.iter().all(|&v| v == 0.0) {
        return Err(GdaError::ZeroVector);
    }
    let num = quad_form(&s.between, sigma);
    let den = quad_form(&s.within, sigma) + s.regularization() * sigma.norm_squared();
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_k() -> (DMatrix<f64>, Vec<usize>) {
        // linear kernel over a few 2-D points
        let pts = [
            [0.0, 1.0],
            [1.0, 2.0],
            [0.5, 0.0],
            [4.0, 4.0],
            [5.0, 3.0],
            [-2.0, 6.0],
            [-3.0, 5.0],
        ];
        let labels = vec![1, 1, 1, 2, 2, 3, 3];
        let k = DMatrix::from_fn(7, 7, |a, b| pts[a][0] * pts[b][0] + pts[a][1] * pts[b][1]);
        (k, labels)
    }

    #[test]
    fn hand_computed_means() {
        let k = DMatrix::identity(2, 2);
        let m = kernel_class_means(&k, &[1, 2], 2).unwrap();
        assert_eq!(m.class_means[0], DVector::from_vec(vec![1.0, 0.0]));
        assert_eq!(m.class_means[1], DVector::from_vec(vec![0.0, 1.0]));
        assert_eq!(m.global, DVector::from_vec(vec![0.5, 0.5]));
    }

    #[test]
    fn single_class_mean_is_global() {
        let (k, _) = toy_k();
        let m = kernel_class_means(&k, &[1; 7], 1).unwrap();
        assert!((&m.class_means[0] - &m.global).norm() < 1e-15);
    }

    #[test]
    fn global_is_weighted_class_mean() {
        let (k, labels) = toy_k();
        let m = kernel_class_means(&k, &labels, 3).unwrap();
        let mut acc = DVector::zeros(7);
        for (mean, &c) in m.class_means.iter().zip(&m.class_counts) {
            acc += mean * (c as f64 / 7.0);
        }
        assert!((acc - &m.global).amax() < 1e-12);
    }

    #[test]
    fn empty_class_is_reported() {
        let (k, _) = toy_k();
        let err = kernel_class_means(&k, &[1, 1, 1, 3, 3, 3, 3], 3).unwrap_err();
        assert_eq!(err, GdaError::EmptyClass(2));
    }

    #[test]
    fn identical_samples_give_zero_scatter() {
        let k = DMatrix::from_element(5, 5, 2.5);
        let s = scatter_matrices(&k, &[1, 2, 1, 2, 2], 2).unwrap();
        assert_eq!(s.between.amax(), 0.0);
        assert_eq!(s.within.amax(), 0.0);
        assert_eq!(s.total.amax(), 0.0);
        assert_eq!(s.regularization(), REGULARIZATION_FLOOR);
    }

    #[test]
    fn total_is_between_plus_within() {
        let (k, labels) = toy_k();
        let s = scatter_matrices(&k, &labels, 3).unwrap();
        let diff = &s.total - &s.between - &s.within;
        assert!(diff.norm() <= 1e-12 * s.total.norm());
    }

    #[test]
    fn fisher_scale_invariance_and_null_space() {
        // full rank, so the denominator stays away from eps
        let (k, labels) = toy_k();
        let k = k + DMatrix::identity(7, 7);
        let s = scatter_matrices(&k, &labels, 3).unwrap();
        let v = DVector::from_fn(7, |i, _| (i as f64 * 1.3).sin());
        let a = fisher_criterion(&v, &s).unwrap();
        let b = fisher_criterion(&(&v * -3.7), &s).unwrap();
        assert!((a - b).abs() <= 1e-12 * a.abs());
        assert_eq!(
            fisher_criterion(&DVector::zeros(7), &s),
            Err(GdaError::ZeroVector)
        );
        // orthogonal to every delta_i - delta_0
        let dirs = DMatrix::from_columns(
            &s.means
                .class_means
                .iter()
                .map(|m| m - &s.means.global)
                .collect::<Vec<_>>(),
        );
        let mut aug = DMatrix::zeros(7, 10);
        aug.view_mut((0, 0), (7, 3)).copy_from(&dirs);
        aug.view_mut((0, 3), (7, 7))
            .copy_from(&DMatrix::identity(7, 7));
        let q = aug.qr().q();
        let null = q.column(6).into_owned();
        assert!(fisher_criterion(&null, &s).unwrap().abs() < 1e-12);
    }
}
