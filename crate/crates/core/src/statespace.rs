//! Linear Gaussian state-space models with missing observations.
//!
//! ```text
//! y_t       = Z a_t + e_t,        e_t ~ N(0, H)
//! a_{t+1}   = c + T a_t + u_t,    u_t ~ N(0, Q)
//! a_0       ~ N(m0, P0)
//! ```
//!
//! The filter works in predicted form and drops the rows of `y_t` that are
//! missing; the smoother uses the backward `r_t`/`N_t` recursions, which need
//! no inverse of the predicted state covariance.

use nalgebra::{DMatrix, DVector};

use crate::linalg::{cholesky_jitter, log_det, symmetrize};
use crate::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceModel {
    pub transition: DMatrix<f64>,
    pub intercept: Option<DVector<f64>>,
    pub state_cov: DMatrix<f64>,
    pub design: DMatrix<f64>,
    pub obs_cov: DMatrix<f64>,
    pub init_mean: DVector<f64>,
    pub init_cov: DMatrix<f64>,
}

impl StateSpaceModel {
    pub fn state_dim(&self) -> usize {
        self.transition.nrows()
    }

    pub fn obs_dim(&self) -> usize {
        self.design.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.state_dim();
        let n = self.obs_dim();
        let square = |a: &DMatrix<f64>, d: usize| a.nrows() == d && a.ncols() == d;
        if !square(&self.transition, m) || !square(&self.state_cov, m) || !square(&self.init_cov, m) {
            return Err(Error::DimensionMismatch { expected: m, actual: self.state_cov.nrows() });
        }
        if self.design.ncols() != m || self.init_mean.len() != m {
            return Err(Error::DimensionMismatch { expected: m, actual: self.design.ncols() });
        }
        if !square(&self.obs_cov, n) {
            return Err(Error::DimensionMismatch { expected: n, actual: self.obs_cov.nrows() });
        }
        if let Some(c) = &self.intercept {
            if c.len() != m {
                return Err(Error::DimensionMismatch { expected: m, actual: c.len() });
            }
        }
        for (what, a) in [("state innovation covariance", &self.state_cov), ("initial state covariance", &self.init_cov)] {
            let min_eig = a.clone().symmetric_eigen().eigenvalues.min();
            if min_eig < -1e-9 * a.amax().max(1.0) {
                return Err(Error::NotPositiveDefinite(what.into()));
            }
        }
        Ok(())
    }

    fn predict(&self, mean: &DVector<f64>, cov: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let mut a = &self.transition * mean;
        if let Some(c) = &self.intercept {
            a += c;
        }
        let mut p = &self.transition * cov * self.transition.transpose() + &self.state_cov;
        symmetrize(&mut p);
        (a, p)
    }
}

/// Per-period quantities kept for the smoother.
#[derive(Debug, Clone)]
struct Step {
    obs: Vec<usize>,
    /// Innovation `v_t` over observed rows.
    v: DVector<f64>,
    /// `F_t^{-1}` over observed rows.
    finv: DMatrix<f64>,
    /// Prediction gain `T P_t Z_W' F_t^{-1}`.
    gain: DMatrix<f64>,
    loglik: f64,
}

#[derive(Debug, Clone)]
pub struct KalmanOutput {
    /// `a_t = E[a_t | y_1..y_{t-1}]`, for `t = 0..=T`.
    pub predicted_mean: Vec<DVector<f64>>,
    pub predicted_cov: Vec<DMatrix<f64>>,
    /// `E[a_t | y_1..y_t]`, for `t = 0..T`.
    pub filtered_mean: Vec<DVector<f64>>,
    pub filtered_cov: Vec<DMatrix<f64>>,
    pub loglik: f64,
    steps: Vec<Step>,
}

impl KalmanOutput {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Log-likelihood contribution of each period.
    pub fn loglik_contributions(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.loglik).collect()
    }

    /// Keep only the first `t0` periods, so filtering can resume from there.
    pub fn truncated(&self, t0: usize) -> KalmanOutput {
        let t0 = t0.min(self.len());
        let steps: Vec<Step> = self.steps[..t0].to_vec();
        KalmanOutput {
            predicted_mean: self.predicted_mean[..=t0].to_vec(),
            predicted_cov: self.predicted_cov[..=t0].to_vec(),
            filtered_mean: self.filtered_mean[..t0].to_vec(),
            filtered_cov: self.filtered_cov[..t0].to_vec(),
            loglik: steps.iter().map(|s| s.loglik).sum(),
            steps,
        }
    }
}

fn check_data(ssm: &StateSpaceModel, data: &[Vec<Option<f64>>]) -> Result<()> {
    let n = ssm.obs_dim();
    for row in data {
        if row.len() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: row.len() });
        }
    }
    Ok(())
}

/// Run the filter over `data[t][i]` (period `t`, observable `i`).
pub fn kalman_filter(ssm: &StateSpaceModel, data: &[Vec<Option<f64>>]) -> Result<KalmanOutput> {
    ssm.validate()?;
    let empty = KalmanOutput {
        predicted_mean: vec![ssm.init_mean.clone()],
        predicted_cov: vec![ssm.init_cov.clone()],
        filtered_mean: Vec::new(),
        filtered_cov: Vec::new(),
        loglik: 0.0,
        steps: Vec::new(),
    };
    kalman_filter_resume(ssm, data, empty)
}

/// Continue a filter run over `data`, whose first `prefix.len()` periods
/// must be the ones the prefix was computed from.
pub fn kalman_filter_resume(ssm: &StateSpaceModel, data: &[Vec<Option<f64>>], prefix: KalmanOutput) -> Result<KalmanOutput> {
    check_data(ssm, data)?;
    let mut out = prefix;
    let t0 = out.len();
    if t0 > data.len() {
        return Err(Error::DimensionMismatch { expected: data.len(), actual: t0 });
    }
    let m = ssm.state_dim();
    for row in &data[t0..] {
        let a = out.predicted_mean.last().expect("initial state").clone();
        let p = out.predicted_cov.last().expect("initial state").clone();
        let obs: Vec<usize> = (0..row.len()).filter(|&i| row[i].is_some()).collect();
        let (af, pf, step) = if obs.is_empty() {
            let step = Step {
                obs,
                v: DVector::zeros(0),
                finv: DMatrix::zeros(0, 0),
                gain: DMatrix::zeros(m, 0),
                loglik: 0.0,
            };
            (a.clone(), p.clone(), step)
        } else {
            let zw = ssm.design.select_rows(&obs);
            let y = DVector::from_iterator(obs.len(), obs.iter().map(|&i| row[i].expect("observed")));
            let v = &y - &zw * &a;
            let pz = &p * zw.transpose();
            let mut f = &zw * &pz;
            for (r, &i) in obs.iter().enumerate() {
                for (c, &j) in obs.iter().enumerate() {
                    f[(r, c)] += ssm.obs_cov[(i, j)];
                }
            }
            symmetrize(&mut f);
            let chol = cholesky_jitter(&f, "innovation covariance")?;
            let finv = chol.inverse();
            let kf = &pz * &finv;
            let af = &a + &kf * &v;
            let mut pf = &p - &kf * pz.transpose();
            symmetrize(&mut pf);
            let ll = -0.5 * (obs.len() as f64 * LN_2PI + log_det(&chol) + v.dot(&(&finv * &v)));
            let gain = &ssm.transition * &kf;
            (af, pf, Step { obs, v, finv, gain, loglik: ll })
        };
        let (an, pn) = ssm.predict(&af, &pf);
        out.loglik += step.loglik;
        out.filtered_mean.push(af);
        out.filtered_cov.push(pf);
        out.predicted_mean.push(an);
        out.predicted_cov.push(pn);
        out.steps.push(step);
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct SmootherOutput {
    pub mean: Vec<DVector<f64>>,
    pub cov: Vec<DMatrix<f64>>,
    /// `lag_cov[t] = Cov(a_{t+1}, a_t | Y)` for `t = 0..T-1`.
    pub lag_cov: Vec<DMatrix<f64>>,
}

/// Backward pass over a completed filter run.
pub fn kalman_smoother(ssm: &StateSpaceModel, filt: &KalmanOutput) -> SmootherOutput {
    smooth_range(ssm, filt, 0, true)
}

/// Smoothed mean and covariance at one period; only the periods after `t`
/// are visited.
pub fn smoothed_at(ssm: &StateSpaceModel, filt: &KalmanOutput, t: usize) -> (DVector<f64>, DMatrix<f64>) {
    let s = smooth_range(ssm, filt, t, false);
    (s.mean[0].clone(), s.cov[0].clone())
}

fn smooth_range(ssm: &StateSpaceModel, filt: &KalmanOutput, from: usize, lags: bool) -> SmootherOutput {
    let n_t = filt.len();
    let m = ssm.state_dim();
    let count = n_t.saturating_sub(from);
    let mut mean = vec![DVector::zeros(m); count];
    let mut cov = vec![DMatrix::zeros(m, m); count];
    let mut lag_cov = if lags { vec![DMatrix::zeros(m, m); count.saturating_sub(1)] } else { Vec::new() };
    let mut r = DVector::zeros(m);
    let mut big_n = DMatrix::zeros(m, m);
    let eye = DMatrix::<f64>::identity(m, m);
    for t in (from..n_t).rev() {
        let step = &filt.steps[t];
        let a = &filt.predicted_mean[t];
        let p = &filt.predicted_cov[t];
        // L_t = T - K_t Z_W
        let (l, r_prev, n_prev) = if step.obs.is_empty() {
            let l = ssm.transition.clone();
            let r_prev = l.transpose() * &r;
            let n_prev = l.transpose() * &big_n * &l;
            (l, r_prev, n_prev)
        } else {
            let zw = ssm.design.select_rows(&step.obs);
            let l = &ssm.transition - &step.gain * &zw;
            let zf = zw.transpose() * &step.finv;
            let r_prev = &zf * &step.v + l.transpose() * &r;
            let n_prev = &zf * &zw + l.transpose() * &big_n * &l;
            (l, r_prev, n_prev)
        };
        if lags && t + 1 < n_t {
            // Cov(a_t, a_{t+1} | Y) = P_t L_t' (I - N_t P_{t+1})
            let c = p * l.transpose() * (&eye - &big_n * &filt.predicted_cov[t + 1]);
            lag_cov[t - from] = c.transpose();
        }
        let mut n_sym = n_prev;
        symmetrize(&mut n_sym);
        mean[t - from] = a + p * &r_prev;
        let mut v = p - p * &n_sym * p;
        symmetrize(&mut v);
        cov[t - from] = v;
        r = r_prev;
        big_n = n_sym;
    }
    SmootherOutput { mean, cov, lag_cov }
}
