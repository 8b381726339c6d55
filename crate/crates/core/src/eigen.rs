//! Dense non-Hermitian eigensolver with residual certification.

use faer::linalg::evd::EvdError;
use faer::Mat;
use num_complex::Complex64 as C64;

use crate::basis::max_abs;
use crate::error::{Error, Result};

/// Eigenvalue with its unit-norm right eigenvector and residual
/// `||M v - lambda v||_2`.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub lambda: C64,
    pub vector: Vec<C64>,
    pub residual: f64,
}

/// Residuals must stay below `RESIDUAL_FACTOR * ||M||_max * dim`.
pub const RESIDUAL_FACTOR: f64 = 1e-10;

fn cmp_lambda(a: &C64, b: &C64) -> std::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

fn residual(m: &Mat<C64>, lambda: C64, v: &[C64]) -> f64 {
    let n = m.nrows();
    let mut acc = vec![C64::new(0.0, 0.0); n];
    for (c, &vc) in v.iter().enumerate() {
        if vc == C64::new(0.0, 0.0) {
            continue;
        }
        for (r, a) in acc.iter_mut().enumerate() {
            *a += m[(r, c)] * vc;
        }
    }
    acc.iter()
        .zip(v)
        .map(|(a, &x)| (a - lambda * x).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

fn check_square(m: &Mat<C64>) -> Result<usize> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::InvalidSize(format!(
            "eigenproblem needs a non-empty square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.col_iter()
        .any(|c| c.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()))
    {
        return Err(Error::InvalidParameter(
            "matrix has non-finite entries".into(),
        ));
    }
    Ok(m.nrows())
}

/// All eigenpairs of `m`, sorted by real part then imaginary part.
///
/// Fails with [`Error::NoConvergence`] if the QR iteration breaks down or any
/// residual exceeds the certification threshold.
pub fn eig_dense(m: &Mat<C64>) -> Result<Vec<EigenPair>> {
    let n = check_square(m)?;
    let evd = m.eigen().map_err(|e| match e {
        EvdError::NoConvergence => Error::NoConvergence {
            unconverged: (0..n).collect(),
        },
    })?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let tol = RESIDUAL_FACTOR * max_abs(m).max(f64::MIN_POSITIVE) * n as f64;
    let mut pairs = Vec::with_capacity(n);
    for k in 0..n {
        let lambda = s[k];
        let mut v: Vec<C64> = (0..n).map(|r| u[(r, k)]).collect();
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|z| *z /= norm);
        }
        let res = residual(m, lambda, &v);
        pairs.push(EigenPair {
            lambda,
            vector: v,
            residual: res,
        });
    }
    pairs.sort_by(|a, b| cmp_lambda(&a.lambda, &b.lambda));
    let bad: Vec<usize> = pairs
        .iter()
        .enumerate()
        .filter(|(_, p)| !(p.residual <= tol))
        .map(|(i, _)| i)
        .collect();
    if !bad.is_empty() {
        return Err(Error::NoConvergence { unconverged: bad });
    }
    Ok(pairs)
}

/// Eigenvalues only, sorted as in [`eig_dense`]. Cheaper; no certification.
pub fn eigenvalues(m: &Mat<C64>) -> Result<Vec<C64>> {
    let n = check_square(m)?;
    let mut ev = m.eigenvalues().map_err(|_| Error::NoConvergence {
        unconverged: (0..n).collect(),
    })?;
    ev.sort_by(cmp_lambda);
    Ok(ev)
}

/// Eigenpairs with `|lambda - center| <= radius`.
pub fn eig_window(m: &Mat<C64>, center: C64, radius: f64) -> Result<Vec<EigenPair>> {
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "window radius {radius} must be positive"
        )));
    }
    Ok(eig_dense(m)?
        .into_iter()
        .filter(|p| (p.lambda - center).norm() <= radius)
        .collect())
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn eigenvalues_hermitian(m: &Mat<C64>) -> Result<Vec<f64>> {
    let n = check_square(m)?;
    let mut ev =
        m.self_adjoint_eigenvalues(faer::Side::Lower)
            .map_err(|_| Error::NoConvergence {
                unconverged: (0..n).collect(),
            })?;
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// Eigenpairs of a Hermitian matrix, ascending, with unit eigenvectors.
pub fn eig_hermitian(m: &Mat<C64>) -> Result<Vec<(f64, Vec<C64>)>> {
    let n = check_square(m)?;
    let evd = m
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|_| Error::NoConvergence {
            unconverged: (0..n).collect(),
        })?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let mut pairs: Vec<(f64, Vec<C64>)> = (0..n)
        .map(|k| (s[k].re, (0..n).map(|r| u[(r, k)]).collect()))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(pairs)
}
