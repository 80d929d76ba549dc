//! Mixed-frequency dynamic factor model estimated by EM.
//!
//! Monthly indicators load on the current factors; the quarterly target,
//! placed in the third month of its quarter, loads `[L_Q L_Q L_Q]` on
//! `[f_t, f_{t-1}, f_{t-2}]`. Every series carries an AR(1) idiosyncratic
//! component held in the state, so there is no measurement noise beyond a
//! tiny jitter.
//!
//! State vector: `[f_t, f_{t-1}, f_{t-2}, e_1 .. e_n, e_Q]`.

use nalgebra::{DMatrix, DVector};

use crate::impute::{rf_impute_head, HeadImputeParams};
use crate::linalg::{discrete_lyapunov, inverse_spd, spectral_radius, symmetrize};
use crate::series::{Month, Moments, MonthlyFrame, Quarter};
use crate::statespace::{kalman_filter, kalman_filter_resume, kalman_smoother, smoothed_at, KalmanOutput, StateSpaceModel};
use crate::trees::ForestParams;
use crate::{Error, Result};

/// Measurement jitter keeping innovation covariances positive definite.
pub const OBS_JITTER: f64 = 1e-8;
/// Spectral radius above which a factor VAR estimate is shrunk.
const STATIONARITY_BOUND: f64 = 0.999;
const SHRINK_TARGET: f64 = 0.95;
const MAX_IDIO_AR: f64 = 0.99;
const MIN_VARIANCE: f64 = 1e-6;
/// Relative slack for the EM likelihood-decrease check.
const DECREASE_TOL: f64 = 1e-8;
/// Furthest a nowcast may run past the last month of the panel.
const MAX_EXTENSION_MONTHS: i32 = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct DfmConfig {
    pub factors: usize,
    /// Factor VAR order, 1 or 2.
    pub factor_lags: usize,
    pub max_iter: usize,
    pub tol: f64,
    /// Imputer used to balance the panel head before the principal components.
    pub init_impute: HeadImputeParams,
}

impl Default for DfmConfig {
    fn default() -> Self {
        DfmConfig {
            factors: 1,
            factor_lags: 1,
            max_iter: 500,
            tol: 1e-4,
            init_impute: HeadImputeParams {
                forest: ForestParams { n_trees: 50, ..Default::default() },
                max_iter: 10,
                seed: 0,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DfmParams {
    /// `n x r` monthly loadings.
    pub lambda: DMatrix<f64>,
    /// Quarterly loading block `L_Q` (length `r`).
    pub lambda_q: DVector<f64>,
    /// Factor VAR lag matrices.
    pub phi: Vec<DMatrix<f64>>,
    pub factor_cov: DMatrix<f64>,
    pub alpha: Vec<f64>,
    pub sigma2: Vec<f64>,
    pub alpha_q: f64,
    pub sigma2_q: f64,
}

impl DfmParams {
    pub fn n_series(&self) -> usize {
        self.lambda.nrows()
    }

    pub fn n_factors(&self) -> usize {
        self.lambda.ncols()
    }

    pub fn state_dim(&self) -> usize {
        3 * self.n_factors() + self.n_series() + 1
    }

    /// Same model with factor `k` negated (and its loadings with it).
    pub fn flip_factor(&self, k: usize) -> DfmParams {
        let mut p = self.clone();
        p.lambda.column_mut(k).neg_mut();
        p.lambda_q[k] = -p.lambda_q[k];
        for l in &mut p.phi {
            l.row_mut(k).neg_mut();
            l.column_mut(k).neg_mut();
        }
        p.factor_cov.row_mut(k).neg_mut();
        p.factor_cov.column_mut(k).neg_mut();
        p
    }

    fn transition(&self) -> DMatrix<f64> {
        let r = self.n_factors();
        let n = self.n_series();
        let m = self.state_dim();
        let mut t = DMatrix::zeros(m, m);
        for (l, b) in self.phi.iter().enumerate() {
            t.view_mut((0, l * r), (r, r)).copy_from(b);
        }
        for i in 0..2 * r {
            t[(r + i, i)] = 1.0;
        }
        for i in 0..n {
            t[(3 * r + i, 3 * r + i)] = self.alpha[i];
        }
        t[(m - 1, m - 1)] = self.alpha_q;
        t
    }

    fn state_cov(&self) -> DMatrix<f64> {
        let r = self.n_factors();
        let n = self.n_series();
        let m = self.state_dim();
        let mut q = DMatrix::zeros(m, m);
        q.view_mut((0, 0), (r, r)).copy_from(&self.factor_cov);
        for i in 0..n {
            q[(3 * r + i, 3 * r + i)] = self.sigma2[i];
        }
        q[(m - 1, m - 1)] = self.sigma2_q;
        q
    }

    fn design(&self) -> DMatrix<f64> {
        let r = self.n_factors();
        let n = self.n_series();
        let m = self.state_dim();
        let mut z = DMatrix::zeros(n + 1, m);
        for i in 0..n {
            for k in 0..r {
                z[(i, k)] = self.lambda[(i, k)];
            }
            z[(i, 3 * r + i)] = 1.0;
        }
        for b in 0..3 {
            for k in 0..r {
                z[(n, b * r + k)] = self.lambda_q[k];
            }
        }
        z[(n, m - 1)] = 1.0;
        z
    }

    /// Unconditional state covariance implied by these parameters.
    pub fn stationary_cov(&self) -> Result<DMatrix<f64>> {
        discrete_lyapunov(&self.transition(), &self.state_cov())
    }

    fn check(&self) -> Result<()> {
        let r = self.n_factors();
        if r == 0 {
            return Err(Error::InvalidInput("the factor model needs at least one factor".into()));
        }
        if self.phi.is_empty() || self.phi.len() > 2 {
            return Err(Error::InvalidInput("factor VAR order must be 1 or 2".into()));
        }
        let radius = spectral_radius(&crate::linalg::companion(&self.phi));
        if radius >= 1.0 {
            return Err(Error::NonStationary(format!("factor VAR spectral radius {radius:.4}")));
        }
        if self.alpha.iter().chain(std::iter::once(&self.alpha_q)).any(|a| a.abs() >= 1.0) {
            return Err(Error::NonStationary("idiosyncratic AR coefficient on or outside the unit circle".into()));
        }
        if self.sigma2.iter().chain(std::iter::once(&self.sigma2_q)).any(|s| !(*s > 0.0)) {
            return Err(Error::InvalidInput("idiosyncratic variances must be positive".into()));
        }
        Ok(())
    }
}

/// State-space form of a parameter set with a given initial state covariance
/// (the stationary covariance when `init_cov` is `None`).
pub fn build_state_space(params: &DfmParams, init_cov: Option<&DMatrix<f64>>) -> Result<StateSpaceModel> {
    params.check()?;
    let m = params.state_dim();
    let n = params.n_series();
    let p0 = match init_cov {
        Some(p) => p.clone(),
        None => params.stationary_cov()?,
    };
    Ok(StateSpaceModel {
        transition: params.transition(),
        intercept: None,
        state_cov: params.state_cov(),
        design: params.design(),
        obs_cov: DMatrix::identity(n + 1, n + 1) * OBS_JITTER,
        init_mean: DVector::zeros(m),
        init_cov: p0,
    })
}

/// Standardised observation rows `[x_1 .. x_n, y_Q]` for each month.
fn observation_rows(frame: &MonthlyFrame, moments: &[Moments], target: &Moments) -> Vec<Vec<Option<f64>>> {
    (0..frame.len())
        .map(|t| {
            let mut row: Vec<Option<f64>> = frame
                .columns
                .iter()
                .zip(moments)
                .map(|(c, m)| c[t].map(|v| m.standardize(v)))
                .collect();
            row.push(frame.target[t].map(|v| target.standardize(v)));
            row
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct DfmModel {
    pub params: DfmParams,
    pub names: Vec<String>,
    pub moments: Vec<Moments>,
    pub target_moments: Moments,
    /// Initial state covariance held fixed during estimation.
    pub init_cov: DMatrix<f64>,
    /// Log-likelihood after each E-step.
    pub loglik_path: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Smoothed moments needed by the M-step.
struct Moments2 {
    mean: Vec<DVector<f64>>,
    /// `E[a_t a_t']`
    second: Vec<DMatrix<f64>>,
    /// `E[a_t a_{t-1}']` for `t >= 1` (index `t - 1`).
    cross: Vec<DMatrix<f64>>,
}

fn e_step(ssm: &StateSpaceModel, data: &[Vec<Option<f64>>]) -> Result<(f64, Moments2)> {
    let filt = kalman_filter(ssm, data)?;
    let sm = kalman_smoother(ssm, &filt);
    let second = sm
        .mean
        .iter()
        .zip(&sm.cov)
        .map(|(a, v)| a * a.transpose() + v)
        .collect();
    let cross = (1..sm.mean.len())
        .map(|t| &sm.mean[t] * sm.mean[t - 1].transpose() + &sm.lag_cov[t - 1])
        .collect();
    Ok((filt.loglik, Moments2 { mean: sm.mean, second, cross }))
}

/// Closed-form M-step. Returns the new parameters and whether a guard
/// (stationarity shrink or variance floor) altered the unconstrained optimum.
fn m_step(prev: &DfmParams, data: &[Vec<Option<f64>>], mo: &Moments2) -> Result<(DfmParams, bool)> {
    let r = prev.n_factors();
    let n = prev.n_series();
    let p = prev.phi.len();
    let big_t = data.len();
    let mut guard = false;
    let mut next = prev.clone();

    // factor VAR: f_t on [f_{t-1} .. f_{t-p}], all inside a_t
    let mut a = DMatrix::zeros(r, p * r);
    let mut b = DMatrix::zeros(p * r, p * r);
    let mut c = DMatrix::zeros(r, r);
    for s in &mo.second[1..] {
        a += s.view((0, r), (r, p * r));
        b += s.view((r, r), (p * r, p * r));
        c += s.view((0, 0), (r, r));
    }
    let phi_all = &a * inverse_spd(&b, "factor VAR moment matrix")?;
    let mut phi: Vec<DMatrix<f64>> = (0..p).map(|l| phi_all.view((0, l * r), (r, r)).into_owned()).collect();
    let mut q = (&c - &phi_all * a.transpose()) / (big_t - 1) as f64;
    symmetrize(&mut q);
    let min_eig = q.clone().symmetric_eigen().eigenvalues.min();
    if min_eig < MIN_VARIANCE {
        q += DMatrix::identity(r, r) * (MIN_VARIANCE - min_eig);
        guard = true;
    }
    let radius = spectral_radius(&crate::linalg::companion(&phi));
    if radius >= STATIONARITY_BOUND {
        // shrinking lag l by s^l scales every companion root by s
        let s = SHRINK_TARGET / radius;
        for (l, m) in phi.iter_mut().enumerate() {
            *m *= s.powi(l as i32 + 1);
        }
        guard = true;
    }
    next.phi = phi;
    next.factor_cov = q;

    // monthly loadings, row by row over observed months
    for i in 0..n {
        let e = 3 * r + i;
        let mut g = DMatrix::zeros(r, r);
        let mut h = DVector::zeros(r);
        let mut count = 0;
        for (t, row) in data.iter().enumerate() {
            if let Some(y) = row[i] {
                let s = &mo.second[t];
                g += s.view((0, 0), (r, r));
                h += mo.mean[t].rows(0, r) * y - s.view((0, e), (r, 1));
                count += 1;
            }
        }
        if count > 0 {
            let lam = inverse_spd(&g, "loading moment matrix")? * h;
            next.lambda.row_mut(i).copy_from(&lam.transpose());
        }
    }

    // quarterly loading through s_t = f_t + f_{t-1} + f_{t-2}
    {
        let e = 3 * r + n;
        let mut g = DMatrix::zeros(r, r);
        let mut h = DVector::zeros(r);
        let mut count = 0;
        for (t, row) in data.iter().enumerate() {
            if let Some(y) = row[n] {
                let s = &mo.second[t];
                let mut sm = DVector::zeros(r);
                for bi in 0..3 {
                    sm += mo.mean[t].rows(bi * r, r);
                    h -= s.view((bi * r, e), (r, 1));
                    for bj in 0..3 {
                        g += s.view((bi * r, bj * r), (r, r));
                    }
                }
                h += sm * y;
                count += 1;
            }
        }
        if count > 0 {
            next.lambda_q = inverse_spd(&g, "quarterly loading moment matrix")? * h;
        }
    }

    // idiosyncratic AR(1) components
    let idio = |k: usize| -> (f64, f64, bool) {
        let mut num = 0.0;
        let mut den = 0.0;
        let mut sq = 0.0;
        for t in 1..big_t {
            num += mo.cross[t - 1][(k, k)];
            den += mo.second[t - 1][(k, k)];
            sq += mo.second[t][(k, k)];
        }
        let alpha = if den > 0.0 { (num / den).clamp(-MAX_IDIO_AR, MAX_IDIO_AR) } else { 0.0 };
        let s2 = (sq - 2.0 * alpha * num + alpha * alpha * den) / (big_t - 1) as f64;
        if s2 < MIN_VARIANCE {
            (alpha, MIN_VARIANCE, true)
        } else {
            (alpha, s2, false)
        }
    };
    for i in 0..n {
        let (a, s2, g) = idio(3 * r + i);
        next.alpha[i] = a;
        next.sigma2[i] = s2;
        guard |= g;
    }
    let (a, s2, g) = idio(3 * r + n);
    next.alpha_q = a;
    next.sigma2_q = s2;
    guard |= g;
    Ok((next, guard))
}

/// Principal-components starting values on the head-balanced panel.
fn initial_params(z: &MonthlyFrame, target: &[Option<f64>], config: &DfmConfig) -> Result<DfmParams> {
    let r = config.factors;
    let p = config.factor_lags;
    let n = z.n_series();
    if r > n {
        return Err(Error::InvalidInput(format!("{r} factors requested for {n} series")));
    }
    let balanced = rf_impute_head(z, &config.init_impute)?;
    let usable = balanced
        .columns
        .iter()
        .map(|c| c.iter().rposition(Option::is_some).map_or(0, |i| i + 1))
        .min()
        .unwrap_or(0);
    let min_rows = 3 + p + 8;
    if usable < min_rows {
        return Err(Error::InsufficientHistory { series: "factor model panel".into(), required: min_rows, actual: usable });
    }
    let x = DMatrix::from_fn(usable, n, |t, j| balanced.columns[j][t].unwrap_or(0.0));
    let cov = x.transpose() * &x / usable as f64;
    let eig = cov.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut v = DMatrix::zeros(n, r);
    for k in 0..r {
        let mut col = eig.eigenvectors.column(order[k]).into_owned();
        if col.sum() < 0.0 {
            col.neg_mut();
        }
        v.set_column(k, &col);
    }
    let f = &x * &v;
    let ftf = f.transpose() * &f;
    let lambda = x.transpose() * &f * inverse_spd(&ftf, "principal component moment")?;

    // factor VAR by least squares
    let rows = usable - p;
    let mut lhs = DMatrix::zeros(rows, r);
    let mut rhs = DMatrix::zeros(rows, p * r);
    for t in p..usable {
        lhs.row_mut(t - p).copy_from(&f.row(t));
        for l in 1..=p {
            rhs.view_mut((t - p, (l - 1) * r), (1, r)).copy_from(&f.row(t - l));
        }
    }
    let coef = inverse_spd(&(rhs.transpose() * &rhs), "factor VAR design")? * rhs.transpose() * &lhs;
    let phi_all = coef.transpose();
    let mut phi: Vec<DMatrix<f64>> = (0..p).map(|l| phi_all.view((0, l * r), (r, r)).into_owned()).collect();
    let resid = &lhs - &rhs * &coef;
    let mut fcov = resid.transpose() * &resid / rows as f64 + DMatrix::identity(r, r) * MIN_VARIANCE;
    symmetrize(&mut fcov);
    let radius = spectral_radius(&crate::linalg::companion(&phi));
    if radius >= STATIONARITY_BOUND {
        let s = SHRINK_TARGET / radius;
        for (l, m) in phi.iter_mut().enumerate() {
            *m *= s.powi(l as i32 + 1);
        }
    }

    let ar1 = |e: &[f64]| -> (f64, f64) {
        let num: f64 = e.windows(2).map(|w| w[0] * w[1]).sum();
        let den: f64 = e[..e.len() - 1].iter().map(|v| v * v).sum();
        let a = if den > 0.0 { (num / den).clamp(-0.9, 0.9) } else { 0.0 };
        let s2 = e.windows(2).map(|w| (w[1] - a * w[0]).powi(2)).sum::<f64>() / (e.len() - 1) as f64;
        (a, s2.max(1e-3))
    };
    let fitted = &f * lambda.transpose();
    let mut alpha = vec![0.0; n];
    let mut sigma2 = vec![0.0; n];
    for j in 0..n {
        let e: Vec<f64> = (0..usable).map(|t| x[(t, j)] - fitted[(t, j)]).collect();
        let (a, s2) = ar1(&e);
        alpha[j] = a;
        sigma2[j] = s2;
    }

    // quarterly loading on the three-month factor sum
    let mut pairs = Vec::new();
    for t in 2..usable {
        if let Some(y) = target[t] {
            let s: DVector<f64> = (0..3).map(|b| f.row(t - b).transpose()).fold(DVector::zeros(r), |acc, v| acc + v);
            pairs.push((s, y));
        }
    }
    if pairs.len() < 4 {
        return Err(Error::InsufficientHistory { series: "target".into(), required: 4, actual: pairs.len() });
    }
    let mut g = DMatrix::zeros(r, r);
    let mut h = DVector::zeros(r);
    for (s, y) in &pairs {
        g += s * s.transpose();
        h += s * *y;
    }
    let lambda_q = inverse_spd(&g, "quarterly loading design")? * h;
    let eq: Vec<f64> = pairs.iter().map(|(s, y)| y - lambda_q.dot(s)).collect();
    let rho = {
        let num: f64 = eq.windows(2).map(|w| w[0] * w[1]).sum();
        let den: f64 = eq.iter().map(|v| v * v).sum();
        if den > 0.0 { num / den } else { 0.0 }
    };
    let alpha_q = rho.signum() * rho.abs().cbrt().min(0.9);
    let var_q = eq.iter().map(|v| v * v).sum::<f64>() / eq.len() as f64;
    // monthly innovation variance matching the quarterly residual variance
    let sigma2_q = (var_q * (1.0 - alpha_q * alpha_q)).max(1e-3);

    Ok(DfmParams { lambda, lambda_q, phi, factor_cov: fcov, alpha, sigma2, alpha_q, sigma2_q })
}

fn relative_change(new: f64, old: f64) -> f64 {
    (new - old).abs() / ((new.abs() + old.abs()) / 2.0).max(f64::MIN_POSITIVE)
}

/// Estimate the factor model on a raw monthly frame.
///
/// Indicators are standardised internally; the moments are kept so nowcasts
/// come back in the target's units.
pub fn fit_dfm(frame: &MonthlyFrame, config: &DfmConfig) -> Result<DfmModel> {
    fit_dfm_from(frame, config, None)
}

/// [`fit_dfm`] starting EM from `start` instead of principal components.
pub fn fit_dfm_from(frame: &MonthlyFrame, config: &DfmConfig, start: Option<&DfmParams>) -> Result<DfmModel> {
    if config.factors == 0 {
        return Err(Error::InvalidInput("the factor model needs at least one factor".into()));
    }
    if !(1..=2).contains(&config.factor_lags) {
        return Err(Error::InvalidInput("factor VAR order must be 1 or 2".into()));
    }
    let (z, moments) = crate::series::standardize(frame)?;
    let target_moments = crate::series::target_moments(frame)?;
    let zt: Vec<Option<f64>> = frame.target.iter().map(|v| v.map(|x| target_moments.standardize(x))).collect();
    let data = observation_rows(frame, &moments, &target_moments);
    let mut params = match start {
        Some(p) if p.n_series() == frame.n_series() && p.n_factors() == config.factors && p.phi.len() == config.factor_lags => p.clone(),
        _ => initial_params(&z, &zt, config)?,
    };
    let init_cov = params.stationary_cov()?;

    let mut path = Vec::new();
    let mut converged = false;
    let mut guarded = false;
    let mut iterations = 0;
    loop {
        let ssm = build_state_space(&params, Some(&init_cov))?;
        let (ll, mo) = e_step(&ssm, &data)?;
        if let Some(&prev) = path.last() {
            if !guarded && ll < prev - DECREASE_TOL * f64::max(1.0, f64::abs(prev)) {
                return Err(Error::LikelihoodDecrease { iteration: iterations, previous: prev, current: ll });
            }
            if relative_change(ll, prev) < config.tol {
                path.push(ll);
                converged = true;
                break;
            }
        }
        path.push(ll);
        if iterations >= config.max_iter {
            break;
        }
        let (next, g) = m_step(&params, &data, &mo)?;
        params = next;
        guarded = g;
        iterations += 1;
    }
    Ok(DfmModel {
        params,
        names: frame.names.clone(),
        moments,
        target_moments,
        init_cov,
        loglik_path: path,
        iterations,
        converged,
    })
}

impl DfmModel {
    pub fn state_space(&self) -> Result<StateSpaceModel> {
        build_state_space(&self.params, Some(&self.init_cov))
    }

    /// Reorder or check a frame's columns against the fitted series names.
    fn align(&self, frame: &MonthlyFrame) -> Result<MonthlyFrame> {
        if frame.names == self.names {
            return Ok(frame.clone());
        }
        let idx: Vec<usize> = self
            .names
            .iter()
            .map(|n| frame.names.iter().position(|f| f == n).ok_or_else(|| Error::UnknownSeries(n.clone())))
            .collect::<Result<_>>()?;
        Ok(frame.select(&idx))
    }

    /// Standardised observation rows of `frame` through month `end`.
    pub fn observations(&self, frame: &MonthlyFrame, end: Month) -> Result<Vec<Vec<Option<f64>>>> {
        let f = self.align(frame)?.with_end(end);
        Ok(observation_rows(&f, &self.moments, &self.target_moments))
    }

    fn ref_index(&self, frame: &MonthlyFrame, q: Quarter) -> Result<usize> {
        let end = q.last_month();
        if end < frame.start {
            return Err(Error::Calendar(format!("{q} ends before the panel starts")));
        }
        if end - frame.end() > MAX_EXTENSION_MONTHS {
            return Err(Error::Calendar(format!("{q} lies beyond the nowcast horizon of the panel")));
        }
        Ok((end - frame.start) as usize)
    }

    /// Smoothed expectation of the target in the third month of `q`.
    pub fn nowcast(&self, frame: &MonthlyFrame, q: Quarter) -> Result<f64> {
        self.nowcast_resumed(frame, q, None).map(|(v, _)| v)
    }

    /// Nowcast reusing a filter run whose periods agree with `frame`; returns
    /// the full filter run as well so callers can checkpoint it.
    pub fn nowcast_resumed(&self, frame: &MonthlyFrame, q: Quarter, prefix: Option<KalmanOutput>) -> Result<(f64, KalmanOutput)> {
        let t = self.ref_index(frame, q)?;
        let end = q.last_month().max(frame.end());
        let data = self.observations(frame, end)?;
        let ssm = self.state_space()?;
        let filt = match prefix {
            Some(p) => kalman_filter_resume(&ssm, &data, p)?,
            None => kalman_filter(&ssm, &data)?,
        };
        if let Some(y) = frame.target.get(t).copied().flatten() {
            return Ok((y, filt));
        }
        let (mean, _) = smoothed_at(&ssm, &filt, t);
        let z = ssm.design.row(self.params.n_series());
        let v = (z * &mean)[0];
        Ok((self.target_moments.destandardize(v), filt))
    }

    /// Smoothed common factors over the frame.
    pub fn smoothed_factors(&self, frame: &MonthlyFrame) -> Result<Vec<DVector<f64>>> {
        let data = self.observations(frame, frame.end())?;
        let ssm = self.state_space()?;
        let filt = kalman_filter(&ssm, &data)?;
        let r = self.params.n_factors();
        Ok(kalman_smoother(&ssm, &filt).mean.into_iter().map(|a| a.rows(0, r).into_owned()).collect())
    }

    /// Share of standardised indicator variance attributed to the factors.
    pub fn factor_share(&self) -> Result<f64> {
        let cov = self.params.stationary_cov()?;
        let r = self.params.n_factors();
        let pf = cov.view((0, 0), (r, r));
        let n = self.params.n_series();
        let (mut common, mut total) = (0.0, 0.0);
        for i in 0..n {
            let l = self.params.lambda.row(i);
            let c = (l * pf * l.transpose())[0];
            common += c;
            total += c + cov[(3 * r + i, 3 * r + i)];
        }
        Ok(common / total)
    }
}

/// Nowcast of quarter `q` from a fitted model and a vintage frame.
pub fn nowcast_dfm(model: &DfmModel, frame: &MonthlyFrame, q: Quarter) -> Result<f64> {
    model.nowcast(frame, q)
}
