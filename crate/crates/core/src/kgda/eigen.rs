//! Symmetric-definite generalized eigenproblem `A v = eta B v`.
//!
//! `B = L L^T` (Cholesky) turns the pencil into the ordinary symmetric problem
//! `L^-1 A L^-T y = eta y` with `v = L^-T y`. Eigenpairs are then polished by
//! Newton steps on the bordered system, with residuals accumulated in
//! compensated (twice working precision) arithmetic.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::GdaError;

const REFINE_STEPS: usize = 3;

#[derive(Debug, Clone)]
pub struct GeneralizedEigen {
    /// Descending.
    pub values: Vec<f64>,
    /// Columns match `values`; normalized so `v^T B v = 1`.
    pub vectors: DMatrix<f64>,
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

/// Top `count` eigenpairs of the pencil `(a, b)`; `b` must be positive definite.
pub fn generalized_eigen(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    count: usize,
) -> Result<GeneralizedEigen, GdaError> {
    let n = a.nrows();
    let chol = b.clone().cholesky().ok_or_else(|| {
        GdaError::Numerical("regularized within-class scatter is not positive definite".into())
    })?;
    let l = chol.l();
    // C = L^-1 A L^-T = L^-1 (L^-1 A)^T, using symmetry of A
    let x = l
        .solve_lower_triangular(a)
        .ok_or_else(|| GdaError::Numerical("singular Cholesky factor".into()))?;
    let mut c = l
        .solve_lower_triangular(&x.transpose())
        .ok_or_else(|| GdaError::Numerical("singular Cholesky factor".into()))?;
    symmetrize(&mut c);
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .total_cmp(&eig.eigenvalues[i])
            .then(i.cmp(&j))
    });
    let count = count.min(n);
    let lt = l.transpose();
    let mut pairs = Vec::with_capacity(count);
    for &idx in order.iter().take(count) {
        let y = eig.eigenvectors.column(idx).into_owned();
        let v = lt
            .solve_upper_triangular(&y)
            .ok_or_else(|| GdaError::Numerical("singular Cholesky factor".into()))?;
        let (v, eta) = refine_eigenpair(a, b, v, eig.eigenvalues[idx]);
        pairs.push((eta, v));
    }
    // refinement can swap near-equal values
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0));
    let mut vectors = DMatrix::zeros(n, pairs.len());
    for (slot, (_, v)) in pairs.iter().enumerate() {
        vectors.set_column(slot, v);
    }
    Ok(GeneralizedEigen {
        values: pairs.iter().map(|p| p.0).collect(),
        vectors,
    })
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Compensated accumulation of `sum_k x_k * y_k`.
pub(crate) fn dot2(terms: impl Iterator<Item = (f64, f64)>) -> f64 {
    let (mut s, mut c) = (0.0, 0.0);
    for (x, y) in terms {
        let (p, ep) = two_prod(x, y);
        let (t, es) = two_sum(s, p);
        s = t;
        c += ep + es;
    }
    s + c
}

/// `A v - eta B v` with `eta * B_ij` split exactly before multiplying by `v`.
pub(crate) fn accurate_residual(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    v: &DVector<f64>,
    eta: f64,
) -> DVector<f64> {
    let n = v.len();
    DVector::from_fn(n, |i, _| {
        let terms = (0..n).flat_map(|j| {
            let (p, e) = two_prod(eta, b[(i, j)]);
            [(a[(i, j)], v[j]), (-p, v[j]), (-e, v[j])]
        });
        dot2(terms)
    })
}

fn b_norm(b: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    v.dot(&(b * v)).sqrt()
}

/// Newton refinement of an eigenpair, keeping `v^T B v = 1`. A step is kept
/// only when it lowers the residual.
fn refine_eigenpair(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    v: DVector<f64>,
    eta: f64,
) -> (DVector<f64>, f64) {
    let n = v.len();
    let mut v = &v / b_norm(b, &v);
    let mut eta = eta;
    let mut res = accurate_residual(a, b, &v, eta).norm();
    for _ in 0..REFINE_STEPS {
        let bv = b * &v;
        let mut sys = DMatrix::zeros(n + 1, n + 1);
        sys.view_mut((0, 0), (n, n)).copy_from(&(a - b * eta));
        sys.view_mut((0, n), (n, 1)).copy_from(&(-&bv));
        sys.view_mut((n, 0), (1, n))
            .copy_from(&(bv.transpose() * 2.0));
        let r = accurate_residual(a, b, &v, eta);
        let mut rhs = DVector::zeros(n + 1);
        rhs.rows_mut(0, n).copy_from(&(-&r));
        rhs[n] = 1.0 - v.dot(&bv);
        let Some(step) = sys.lu().solve(&rhs) else {
            break;
        };
        if !step.iter().all(|x| x.is_finite()) {
            break;
        }
        let cand = &v + step.rows(0, n);
        let cand = &cand / b_norm(b, &cand);
        let cand_eta = eta + step[n];
        let cand_res = accurate_residual(a, b, &cand, cand_eta).norm();
        if cand_res < res {
            v = cand;
            eta = cand_eta;
            res = cand_res;
        } else {
            break;
        }
    }
    (v, eta)
}
