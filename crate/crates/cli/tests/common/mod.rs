#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use quadseg::LabeledDataset;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Isotropic unit-variance classes in R^4 whose means sit on an equilateral
/// triangle of side `separation` in the first two coordinates.
pub fn triangle_classes(rng: &mut ChaCha8Rng, m: usize, separation: f64) -> LabeledDataset {
    let h = separation * 3f64.sqrt() / 2.0;
    let centers = [[0.0, 0.0], [separation, 0.0], [separation / 2.0, h]];
    let labels: Vec<usize> = (0..m).map(|j| j % 3 + 1).collect();
    let samples = labels
        .iter()
        .map(|&l| {
            (0..4)
                .map(|i| centers[l - 1].get(i).copied().unwrap_or(0.0) + normal(rng))
                .collect()
        })
        .collect();
    LabeledDataset::new(samples, labels).unwrap()
}

pub fn random_dataset(rng: &mut ChaCha8Rng, m: usize, n: usize, z: usize) -> LabeledDataset {
    let centers: Vec<Vec<f64>> = (0..z)
        .map(|_| (0..n).map(|_| rng.random_range(-2.0..2.0)).collect())
        .collect();
    let mut labels: Vec<usize> = (0..m).map(|j| j % z + 1).collect();
    // shuffle so class order does not follow sample order
    for i in (1..m).rev() {
        let j = rng.random_range(0..=i);
        labels.swap(i, j);
    }
    let samples = labels
        .iter()
        .map(|&l| centers[l - 1].iter().map(|c| c + normal(rng)).collect())
        .collect();
    LabeledDataset::new(samples, labels).unwrap()
}

/// Classical Fisher LDA in input space: `S_w^{-1/2}`-whitened eigenvectors
/// of `S_b`, returned as the columns of an `n x d` matrix.
pub struct Lda {
    pub axes: DMatrix<f64>,
    pub class_means: Vec<DVector<f64>>,
}

impl Lda {
    pub fn fit(data: &LabeledDataset, d: usize) -> Lda {
        let n = data.dim();
        let m = data.len() as f64;
        let z = data.num_classes();
        let x: Vec<DVector<f64>> = data
            .samples()
            .iter()
            .map(|s| DVector::from_column_slice(s))
            .collect();
        let mut means = vec![DVector::zeros(n); z];
        let mut counts = vec![0.0; z];
        for (v, &l) in x.iter().zip(data.labels()) {
            means[l - 1] += v;
            counts[l - 1] += 1.0;
        }
        for (mu, c) in means.iter_mut().zip(&counts) {
            *mu /= *c;
        }
        let global = x.iter().fold(DVector::zeros(n), |a, v| a + v) / m;
        let mut sw = DMatrix::zeros(n, n);
        for (v, &l) in x.iter().zip(data.labels()) {
            let e = v - &means[l - 1];
            sw += &e * e.transpose();
        }
        sw /= m;
        let mut sb = DMatrix::zeros(n, n);
        for (mu, c) in means.iter().zip(&counts) {
            let e = mu - &global;
            sb += &e * e.transpose() * (c / m);
        }
        let es = SymmetricEigen::new(sw);
        let inv_sqrt = DMatrix::from_diagonal(&es.eigenvalues.map(|v| 1.0 / v.sqrt()));
        let whiten = &es.eigenvectors * inv_sqrt * es.eigenvectors.transpose();
        let inner = SymmetricEigen::new(&whiten * sb * &whiten);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| inner.eigenvalues[b].total_cmp(&inner.eigenvalues[a]));
        let axes = DMatrix::from_columns(
            &order[..d]
                .iter()
                .map(|&i| &whiten * inner.eigenvectors.column(i))
                .collect::<Vec<_>>(),
        );
        let class_means = means.iter().map(|mu| axes.transpose() * mu).collect();
        Lda { axes, class_means }
    }

    pub fn project(&self, u: &[f64]) -> DVector<f64> {
        self.axes.transpose() * DVector::from_column_slice(u)
    }

    pub fn classify(&self, u: &[f64]) -> usize {
        let p = self.project(u);
        let mut best = (1, f64::INFINITY);
        for (i, mu) in self.class_means.iter().enumerate() {
            let d = (&p - mu).norm_squared();
            if d < best.1 {
                best = (i + 1, d);
            }
        }
        best.0
    }
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

/// Principal angles (radians, ascending) between `span(a)` and `span(b)`
/// under the inner product `<x, y> = x^T g y`, from the sines of the
/// component of `b` outside `span(a)`.
pub fn principal_angles(a: &DMatrix<f64>, b: &DMatrix<f64>, g: &DMatrix<f64>) -> Vec<f64> {
    let orth = |s: &DMatrix<f64>| {
        let gram = s.transpose() * g * s;
        let chol = gram.cholesky().expect("basis must be independent under g");
        let l_inv_t = chol.l().try_inverse().unwrap().transpose();
        s * l_inv_t
    };
    let (qa, qb) = (orth(a), orth(b));
    let rest = &qb - &qa * (qa.transpose() * g * &qb);
    let sin2 = SymmetricEigen::new(rest.transpose() * g * &rest).eigenvalues;
    let mut angles: Vec<f64> = sin2
        .iter()
        .map(|s| s.max(0.0).sqrt().min(1.0).asin())
        .collect();
    angles.sort_by(f64::total_cmp);
    angles
}
