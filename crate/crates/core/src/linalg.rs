//! Small dense linear-algebra helpers shared by the state-space models.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::{Error, Result};

pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Cholesky factorisation, retrying with a growing diagonal jitter when the
/// matrix is only positive semidefinite up to rounding.
pub fn cholesky_jitter(m: &DMatrix<f64>, what: &str) -> Result<Cholesky<f64, Dyn>> {
    if let Some(c) = Cholesky::new(m.clone()) {
        return Ok(c);
    }
    let scale = m.diagonal().iter().fold(0.0_f64, |a, v| a.max(v.abs())).max(1e-300);
    let mut jitter = 1e-12 * scale;
    for _ in 0..7 {
        let mut shifted = m.clone();
        for i in 0..m.nrows() {
            shifted[(i, i)] += jitter;
        }
        if let Some(c) = Cholesky::new(shifted) {
            return Ok(c);
        }
        jitter *= 10.0;
    }
    Err(Error::NotPositiveDefinite(what.to_string()))
}

pub fn inverse_spd(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    let mut inv = cholesky_jitter(m, what)?.inverse();
    symmetrize(&mut inv);
    Ok(inv)
}

/// Log-determinant from a Cholesky factor.
pub fn log_det(chol: &Cholesky<f64, Dyn>) -> f64 {
    2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>()
}

/// Largest eigenvalue modulus of a square matrix.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    m.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Companion matrix of a VAR with lag coefficient blocks `lags[l]` (k x k).
pub fn companion(lags: &[DMatrix<f64>]) -> DMatrix<f64> {
    let p = lags.len();
    let k = lags.first().map_or(0, |b| b.nrows());
    let mut c = DMatrix::zeros(k * p, k * p);
    for (l, b) in lags.iter().enumerate() {
        c.view_mut((0, l * k), (k, k)).copy_from(b);
    }
    for i in k..k * p {
        c[(i, i - k)] = 1.0;
    }
    c
}

/// Solve the discrete Lyapunov equation `P = T P T' + Q` by doubling.
pub fn discrete_lyapunov(t: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if spectral_radius(t) >= 1.0 {
        return Err(Error::NonStationary(
            "transition matrix has an eigenvalue outside the unit circle".into(),
        ));
    }
    let mut a = t.clone();
    let mut p = q.clone();
    for _ in 0..64 {
        let next = &p + &a * &p * a.transpose();
        let delta = (&next - &p).abs().max();
        p = next;
        a = &a * &a;
        if delta <= 1e-14 * p.abs().max().max(1.0) {
            break;
        }
    }
    symmetrize(&mut p);
    Ok(p)
}

pub fn standard_normal_vec<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DVector<f64> {
    DVector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)))
}

/// Draw from `N(mean, L L')` given the lower Cholesky factor `L`.
pub fn mvn_draw<R: Rng + ?Sized>(rng: &mut R, mean: &DVector<f64>, chol_lower: &DMatrix<f64>) -> DVector<f64> {
    let z = standard_normal_vec(rng, mean.len());
    mean + chol_lower * z
}
