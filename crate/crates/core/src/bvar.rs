//! Mixed-frequency Bayesian VAR with latent monthly GDP.
//!
//! The monthly VAR(p) runs over the indicators plus a latent monthly target
//! whose three-month mean must equal each published quarterly value. The
//! Gibbs sampler alternates
//!
//! 1. all unobserved monthly values given the parameters, drawn jointly from
//!    their Gaussian full conditional (banded precision) and then projected
//!    onto the quarterly aggregation constraints;
//! 2. VAR coefficients equation by equation from their normal full
//!    conditionals under an independent Minnesota prior;
//! 3. the innovation covariance from its inverse-Wishart full conditional.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::impute::fit_ar_orders;
use crate::linalg::{cholesky_jitter, companion, inverse_spd, spectral_radius, symmetrize};
use crate::series::{Month, Moments, MonthlyFrame, Quarter};
use crate::{Error, Result};

const MAX_STATIONARITY_ATTEMPTS: usize = 100;
/// Order of the univariate autoregressions that set the prior scales.
const SCALE_AR_ORDER: usize = 4;
/// Prior variance of an intercept relative to its equation's scale.
const INTERCEPT_PRIOR_SCALE: f64 = 100.0;
/// Prior standard deviation (standardised units) of unobserved presample values.
const PRESAMPLE_SD: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BvarConfig {
    pub lags: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub n_burn: usize,
    pub n_draws: usize,
    pub thin: usize,
}

impl Default for BvarConfig {
    fn default() -> Self {
        BvarConfig { lags: 2, lambda1: 0.2, lambda2: 0.5, lambda3: 1.0, n_burn: 1000, n_draws: 4000, thin: 1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinnesotaPrior {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub lags: usize,
    /// Residual scale per variable.
    pub sigma: Vec<f64>,
    /// Prior variances, `(1 + k p) x k`: row 0 is the intercept, row
    /// `1 + (l-1) k + j` is lag `l` of variable `j`; column `i` is equation `i`.
    pub variance: DMatrix<f64>,
}

impl MinnesotaPrior {
    /// Prior from explicit scales.
    pub fn new(sigma: Vec<f64>, lambda1: f64, lambda2: f64, lambda3: f64, lags: usize) -> Result<Self> {
        if lags == 0 {
            return Err(Error::InvalidInput("VAR order must be at least 1".into()));
        }
        if !(lambda1 > 0.0 && lambda2 > 0.0 && lambda3 >= 0.0) {
            return Err(Error::InvalidInput("Minnesota hyperparameters must be positive".into()));
        }
        if let Some(i) = sigma.iter().position(|s| !(*s > 0.0)) {
            return Err(Error::ZeroVariance(format!("variable {i}")));
        }
        let k = sigma.len();
        let mut variance = DMatrix::zeros(1 + k * lags, k);
        for i in 0..k {
            variance[(0, i)] = INTERCEPT_PRIOR_SCALE * sigma[i] * sigma[i];
            for l in 1..=lags {
                for j in 0..k {
                    let cross = if i == j { 1.0 } else { lambda2 };
                    variance[(1 + (l - 1) * k + j, i)] =
                        lambda1 * lambda1 / (l as f64).powf(lambda3) * cross * sigma[i] * sigma[i] / (sigma[j] * sigma[j]);
                }
            }
        }
        Ok(MinnesotaPrior { lambda1, lambda2, lambda3, lags, sigma, variance })
    }

    /// Prior variance of the lag-`l` coefficient of variable `j` in equation `i`.
    pub fn coef_variance(&self, i: usize, j: usize, l: usize) -> f64 {
        let k = self.sigma.len();
        self.variance[(1 + (l - 1) * k + j, i)]
    }
}

fn ar_scale(name: &str, values: &[f64]) -> Result<f64> {
    let sd = if values.len() >= SCALE_AR_ORDER + crate::impute::MIN_EXTRA_HISTORY {
        let fit = &fit_ar_orders(values, SCALE_AR_ORDER)?[SCALE_AR_ORDER - 1];
        (fit.rss / fit.n as f64).sqrt()
    } else {
        Moments::of(name, values.iter().copied())?.sd
    };
    if !(sd > 0.0) {
        return Err(Error::ZeroVariance(name.to_string()));
    }
    Ok(sd)
}

/// Minnesota prior with scales from AR(4) residual standard deviations of
/// each standardised indicator and of the standardised quarterly target.
pub fn build_minnesota(frame: &MonthlyFrame, lambda1: f64, lambda2: f64, lambda3: f64, lags: usize) -> Result<MinnesotaPrior> {
    let (z, _) = crate::series::standardize(frame)?;
    let tm = crate::series::target_moments(frame)?;
    let mut sigma = Vec::with_capacity(frame.n_series() + 1);
    for (j, col) in z.columns.iter().enumerate() {
        let run = last_run(col);
        sigma.push(ar_scale(&frame.names[j], &run)?);
    }
    let y: Vec<f64> = frame.target.iter().flatten().map(|v| tm.standardize(*v)).collect();
    sigma.push(ar_scale("target", &y)?);
    MinnesotaPrior::new(sigma, lambda1, lambda2, lambda3, lags)
}

fn last_run(col: &[Option<f64>]) -> Vec<f64> {
    let Some(last) = col.iter().rposition(Option::is_some) else { return Vec::new() };
    let first = col[..=last].iter().rposition(Option::is_none).map_or(0, |i| i + 1);
    col[first..=last].iter().map(|v| v.expect("observed")).collect()
}

/// Raw sampler output in the units the sampler ran in.
#[derive(Debug, Clone)]
pub struct Chain {
    pub lags: usize,
    /// Coefficients per draw, `(1 + k p) x k`: intercept row, then lag 1 of
    /// every variable, lag 2, and so on.
    pub coef: Vec<DMatrix<f64>>,
    pub sigma: Vec<DMatrix<f64>>,
    /// Last column of the panel per draw (the aggregated variable).
    pub last_col: Vec<Vec<f64>>,
    /// Last `p` rows of the panel per draw, oldest first.
    pub tail: Vec<DMatrix<f64>>,
    /// Stationarity rejections over the whole run.
    pub rejections: usize,
}

impl Chain {
    pub fn len(&self) -> usize {
        self.coef.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coef.is_empty()
    }
}

/// Retained draws of the mixed-frequency model.
#[derive(Debug, Clone)]
pub struct BvarDraws {
    pub start: Month,
    pub names: Vec<String>,
    /// Standardised units; the target is the last variable.
    pub chain: Chain,
    pub moments: Vec<Moments>,
    pub target_moments: Moments,
    pub seed: u64,
}

impl BvarDraws {
    pub fn len(&self) -> usize {
        self.chain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chain.is_empty()
    }

    pub fn months(&self) -> usize {
        self.chain.last_col.first().map_or(0, Vec::len)
    }

    pub fn end(&self) -> Month {
        self.start + self.months() as i32 - 1
    }

    /// Monthly latent target of draw `d` in target units.
    pub fn latent(&self, d: usize) -> Vec<f64> {
        self.chain.last_col[d].iter().map(|z| self.target_moments.destandardize(*z)).collect()
    }
}

/// Lower Cholesky factor stored densely but computed within each row's
/// envelope (`first[i]` is the first structurally non-zero column of row i).
struct Envelope {
    l: DMatrix<f64>,
    first: Vec<usize>,
}

impl Envelope {
    fn factor(mut q: DMatrix<f64>, first: Vec<usize>) -> Result<Self> {
        let m = q.nrows();
        for i in 0..m {
            for j in first[i]..=i {
                let lo = first[i].max(first[j]);
                let mut s = q[(i, j)];
                for k in lo..j {
                    s -= q[(i, k)] * q[(j, k)];
                }
                if i == j {
                    if !(s > 0.0) {
                        return Err(Error::NotPositiveDefinite("latent-state precision".into()));
                    }
                    q[(i, i)] = s.sqrt();
                } else {
                    q[(i, j)] = s / q[(j, j)];
                }
            }
            for j in (i + 1)..m {
                q[(i, j)] = 0.0;
            }
        }
        Ok(Envelope { l: q, first })
    }

    /// Solve `L x = b`.
    fn solve_lower(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut x = b.clone();
        for i in 0..x.len() {
            let mut s = x[i];
            for k in self.first[i]..i {
                s -= self.l[(i, k)] * x[k];
            }
            x[i] = s / self.l[(i, i)];
        }
        x
    }

    /// Solve `L' x = b`.
    fn solve_upper(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut y = b.clone();
        let mut x = DVector::zeros(y.len());
        for i in (0..y.len()).rev() {
            x[i] = y[i] / self.l[(i, i)];
            for j in self.first[i]..i {
                y[j] -= self.l[(i, j)] * x[i];
            }
        }
        x
    }

    fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.solve_upper(&self.solve_lower(b))
    }
}

/// Working panel in standardised units: `x[t][j]`, `j = k-1` the target.
struct Panel {
    x: Vec<Vec<f64>>,
    /// Unknown cells `(t, j)` in time order.
    unknown: Vec<(usize, usize)>,
    /// Index into `unknown` for each cell.
    index: Vec<Vec<Option<usize>>>,
    /// Aggregation constraints: three unknown indices and the quarterly value.
    constraints: Vec<([usize; 3], f64)>,
}

impl Panel {
    fn new(data: &[Vec<Option<f64>>], aggregates: &[(usize, f64)]) -> Result<Self> {
        let t_len = data.len();
        let k = data.first().map_or(0, Vec::len);
        let mut x = vec![vec![0.0; k]; t_len];
        let mut unknown = Vec::new();
        let mut index = vec![vec![None; k]; t_len];
        for t in 0..t_len {
            if data[t].len() != k {
                return Err(Error::DimensionMismatch { expected: k, actual: data[t].len() });
            }
            for j in 0..k {
                match data[t][j] {
                    Some(v) => x[t][j] = v,
                    None => {
                        index[t][j] = Some(unknown.len());
                        unknown.push((t, j));
                    }
                }
            }
        }
        let mut constraints = Vec::new();
        for &(t, y) in aggregates {
            if t < 2 || t >= t_len {
                return Err(Error::InvalidInput(format!("aggregate at row {t} needs rows {}..={t}", t as i64 - 2)));
            }
            let mut idx = [0; 3];
            for (slot, s) in (t - 2..=t).enumerate() {
                idx[slot] = index[s][k - 1]
                    .ok_or_else(|| Error::InvalidInput(format!("aggregated variable is observed at row {s}")))?;
                x[s][k - 1] = y;
            }
            constraints.push((idx, y));
        }
        Ok(Panel { x, unknown, index, constraints })
    }

    fn k(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }
}

/// `(coefficient matrix, W'W, W'Y, n_rows)` pieces of the VAR regression.
fn regression(x: &[Vec<f64>], p: usize) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let t_len = x.len();
    let k = x[0].len();
    let kk = 1 + k * p;
    let rows = t_len - p;
    let mut w = DMatrix::zeros(rows, kk);
    let mut y = DMatrix::zeros(rows, k);
    for t in p..t_len {
        let r = t - p;
        w[(r, 0)] = 1.0;
        for l in 1..=p {
            for j in 0..k {
                w[(r, 1 + (l - 1) * k + j)] = x[t - l][j];
            }
        }
        for j in 0..k {
            y[(r, j)] = x[t][j];
        }
    }
    let wtw = w.transpose() * &w;
    let wty = w.transpose() * &y;
    (w, wtw, wty)
}

fn lag_blocks(coef: &DMatrix<f64>, k: usize, p: usize) -> Vec<DMatrix<f64>> {
    (0..p).map(|l| coef.view((1 + l * k, 0), (k, k)).transpose()).collect()
}

fn is_stationary(coef: &DMatrix<f64>, k: usize, p: usize) -> bool {
    spectral_radius(&companion(&lag_blocks(coef, k, p))) < 1.0
}

/// Draw every unknown cell from its full conditional, then impose the
/// aggregation constraints by conditioning.
fn draw_latent<R: Rng>(panel: &mut Panel, coef: &DMatrix<f64>, sigma_inv: &DMatrix<f64>, p: usize, rng: &mut R) -> Result<()> {
    let m = panel.unknown.len();
    if m == 0 {
        return Ok(());
    }
    let k = panel.k();
    let t_len = panel.x.len();
    // e_t = sum_l G_l x_{t-l} - c with G_0 = I, G_l = -B_l
    let mut g: Vec<DMatrix<f64>> = vec![DMatrix::identity(k, k)];
    for b in lag_blocks(coef, k, p) {
        g.push(-b);
    }
    let c = coef.row(0).transpose();
    let mut mgg = vec![vec![DMatrix::zeros(k, k); p + 1]; p + 1];
    let mut gs = Vec::with_capacity(p + 1);
    for a in 0..=p {
        gs.push(g[a].transpose() * sigma_inv);
    }
    for a in 0..=p {
        for b in 0..=p {
            mgg[a][b] = &gs[a] * &g[b];
        }
    }

    let mut q = DMatrix::zeros(m, m);
    let mut h = DVector::zeros(m);
    let mut first: Vec<usize> = (0..m).collect();
    let prior_prec = 1.0 / (PRESAMPLE_SD * PRESAMPLE_SD);
    for t in 0..p.min(t_len) {
        for j in 0..k {
            if let Some(a) = panel.index[t][j] {
                q[(a, a)] += prior_prec;
            }
        }
    }
    for t in p..t_len {
        // known part of the residual
        let mut e = -&c;
        for l in 0..=p {
            let row = &panel.x[t - l];
            let known = DVector::from_iterator(k, (0..k).map(|j| if panel.index[t - l][j].is_some() { 0.0 } else { row[j] }));
            e += &g[l] * known;
        }
        let cells: Vec<(usize, usize, usize)> = (0..=p)
            .flat_map(|l| {
                let idx = &panel.index[t - l];
                (0..k).filter_map(move |j| idx[j].map(|a| (l, j, a)))
            })
            .collect();
        if cells.is_empty() {
            continue;
        }
        let ge: Vec<DVector<f64>> = (0..=p).map(|l| &gs[l] * &e).collect();
        for &(la, ja, a) in &cells {
            h[a] -= ge[la][ja];
            for &(lb, jb, b) in &cells {
                if b <= a {
                    q[(a, b)] += mgg[la][lb][(ja, jb)];
                    first[a] = first[a].min(b);
                }
            }
        }
    }
    for a in 0..m {
        for b in 0..a {
            q[(b, a)] = q[(a, b)];
        }
    }
    let env = Envelope::factor(q, first)?;
    let mean = env.solve(&h);
    let z = DVector::from_iterator(m, (0..m).map(|_| rng.sample::<f64, _>(StandardNormal)));
    let mut u = mean + env.solve_upper(&z);

    if !panel.constraints.is_empty() {
        let nc = panel.constraints.len();
        // columns of Q^{-1} A'
        let mut qa = DMatrix::zeros(m, nc);
        for (ci, (idx, _)) in panel.constraints.iter().enumerate() {
            let mut a = DVector::zeros(m);
            for &i in idx {
                a[i] = 1.0 / 3.0;
            }
            qa.set_column(ci, &env.solve(&a));
        }
        let mut aqa = DMatrix::zeros(nc, nc);
        let mut resid = DVector::zeros(nc);
        for (ci, (idx, y)) in panel.constraints.iter().enumerate() {
            resid[ci] = idx.iter().map(|&i| u[i]).sum::<f64>() / 3.0 - y;
            for cj in 0..nc {
                aqa[(ci, cj)] = idx.iter().map(|&i| qa[(i, cj)]).sum::<f64>() / 3.0;
            }
        }
        symmetrize(&mut aqa);
        let w = cholesky_jitter(&aqa, "aggregation constraint covariance")?.solve(&resid);
        u -= qa * w;
        // remove rounding so each constraint holds to machine precision
        for (idx, y) in &panel.constraints {
            u[idx[2]] = 3.0 * y - u[idx[0]] - u[idx[1]];
        }
    }
    for (a, &(t, j)) in panel.unknown.iter().enumerate() {
        panel.x[t][j] = u[a];
    }
    Ok(())
}

/// One block-Gibbs sweep over equations for the coefficients.
fn draw_coef<R: Rng>(
    coef: &DMatrix<f64>,
    wtw: &DMatrix<f64>,
    wty: &DMatrix<f64>,
    sigma_inv: &DMatrix<f64>,
    prior: &MinnesotaPrior,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    let k = coef.ncols();
    let kk = coef.nrows();
    let mut b = coef.clone();
    for i in 0..k {
        let mut prec = wtw * sigma_inv[(i, i)];
        for r in 0..kk {
            prec[(r, r)] += 1.0 / prior.variance[(r, i)];
        }
        let mut rhs = DVector::zeros(kk);
        for j in 0..k {
            rhs += wty.column(j) * sigma_inv[(i, j)];
            if j != i {
                rhs -= wtw * b.column(j) * sigma_inv[(i, j)];
            }
        }
        let chol = cholesky_jitter(&prec, "coefficient posterior precision")?;
        let mean = chol.solve(&rhs);
        let z = DVector::from_iterator(kk, (0..kk).map(|_| rng.sample::<f64, _>(StandardNormal)));
        // L' x = z gives x ~ N(0, prec^{-1})
        let noise = chol.l().transpose().solve_upper_triangular(&z).expect("non-singular factor");
        b.set_column(i, &(mean + noise));
    }
    Ok(b)
}

/// Inverse-Wishart draw `IW(scale, df)` via the Bartlett decomposition.
pub fn draw_inverse_wishart<R: Rng>(scale: &DMatrix<f64>, df: f64, rng: &mut R) -> Result<DMatrix<f64>> {
    let k = scale.nrows();
    let scale_inv = inverse_spd(scale, "inverse-Wishart scale")?;
    let l = cholesky_jitter(&scale_inv, "inverse-Wishart scale")?.l();
    let mut a = DMatrix::zeros(k, k);
    for i in 0..k {
        let chi = ChiSquared::new(df - i as f64).map_err(|e| Error::InvalidInput(e.to_string()))?;
        a[(i, i)] = chi.sample(rng).sqrt();
        for j in 0..i {
            a[(i, j)] = rng.sample(StandardNormal);
        }
    }
    let la = l * a;
    let w = &la * la.transpose();
    inverse_spd(&w, "Wishart draw")
}

/// Gibbs sampler on a raw panel `data[t][j]`.
///
/// Every `None` cell is sampled. Each `(t, y)` in `aggregates` requires the
/// mean of the last variable over rows `t-2..=t` to equal `y`; those cells
/// must be missing.
pub fn gibbs_sample(
    data: &[Vec<Option<f64>>],
    aggregates: &[(usize, f64)],
    prior: &MinnesotaPrior,
    config: &BvarConfig,
    seed: u64,
) -> Result<Chain> {
    if config.n_draws == 0 {
        return Err(Error::InvalidInput("at least one retained draw is required".into()));
    }
    let p = prior.lags;
    if config.lags != p {
        return Err(Error::InvalidInput(format!("prior built for {p} lags, sampler asked for {}", config.lags)));
    }
    let t_len = data.len();
    if t_len < p + 2 {
        return Err(Error::InsufficientHistory { series: "VAR panel".into(), required: p + 2, actual: t_len });
    }
    let mut panel = Panel::new(data, aggregates)?;
    let k = panel.k();
    if prior.sigma.len() != k {
        return Err(Error::DimensionMismatch { expected: k, actual: prior.sigma.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let kk = 1 + k * p;
    let mut coef = DMatrix::zeros(kk, k);
    let mut sigma = DMatrix::from_diagonal(&DVector::from_iterator(k, prior.sigma.iter().map(|s| s * s)));
    let prior_df = (k + 2) as f64;
    let prior_scale = &sigma * (prior_df - k as f64 - 1.0);

    let thin = config.thin.max(1);
    let total = config.n_burn + config.n_draws * thin;
    let mut out = Chain {
        lags: p,
        coef: Vec::with_capacity(config.n_draws),
        sigma: Vec::with_capacity(config.n_draws),
        last_col: Vec::with_capacity(config.n_draws),
        tail: Vec::with_capacity(config.n_draws),
        rejections: 0,
    };
    for it in 0..total {
        let sigma_inv = inverse_spd(&sigma, "innovation covariance")?;
        draw_latent(&mut panel, &coef, &sigma_inv, p, &mut rng)?;

        let (w, wtw, wty) = regression(&panel.x, p);
        let mut accepted = None;
        for _ in 0..MAX_STATIONARITY_ATTEMPTS {
            let cand = draw_coef(&coef, &wtw, &wty, &sigma_inv, prior, &mut rng)?;
            if is_stationary(&cand, k, p) {
                accepted = Some(cand);
                break;
            }
            out.rejections += 1;
        }
        coef = accepted.ok_or_else(|| {
            Error::NonStationary(format!("no stationary coefficient draw in {MAX_STATIONARITY_ATTEMPTS} attempts"))
        })?;

        let ymat = DMatrix::from_fn(t_len - p, k, |r, j| panel.x[r + p][j]);
        let resid = ymat - &w * &coef;
        let mut scale = &prior_scale + resid.transpose() * &resid;
        symmetrize(&mut scale);
        sigma = draw_inverse_wishart(&scale, prior_df + (t_len - p) as f64, &mut rng)?;

        if it >= config.n_burn && (it - config.n_burn) % thin == 0 {
            out.coef.push(coef.clone());
            out.sigma.push(sigma.clone());
            out.last_col.push(panel.x.iter().map(|r| r[k - 1]).collect());
            out.tail.push(DMatrix::from_fn(p, k, |r, j| panel.x[t_len - p + r][j]));
        }
    }
    Ok(out)
}

/// Run the sampler on a monthly frame extended (with missing values) to `end`.
///
/// Indicators may have ragged tails (and any other gaps); the target enters
/// only through its quarterly values.
pub fn gibbs_run(frame: &MonthlyFrame, prior: &MinnesotaPrior, config: &BvarConfig, end: Month, seed: u64) -> Result<BvarDraws> {
    let frame = frame.with_end(end.max(frame.end()));
    let (z, moments) = crate::series::standardize(&frame)?;
    let tm = crate::series::target_moments(&frame)?;
    let data: Vec<Vec<Option<f64>>> = (0..frame.len())
        .map(|t| z.columns.iter().map(|c| c[t]).chain(std::iter::once(None)).collect())
        .collect();
    let aggregates: Vec<(usize, f64)> = frame
        .target
        .iter()
        .enumerate()
        .filter_map(|(t, v)| v.filter(|_| t >= 2).map(|y| (t, tm.standardize(y))))
        .collect();
    let chain = gibbs_sample(&data, &aggregates, prior, config, seed)?;
    Ok(BvarDraws { start: frame.start, names: frame.names.clone(), chain, moments, target_moments: tm, seed })
}

/// Mean over draws of the quarterly aggregate of the latent monthly target.
///
/// Quarters past the sampled window are reached by simulating each draw's
/// VAR forward.
pub fn nowcast_bvar(draws: &BvarDraws, q: Quarter) -> Result<f64> {
    if draws.is_empty() {
        return Err(Error::InvalidInput("no retained draws".into()));
    }
    let last = q.last_month();
    if last - 2 < draws.start {
        return Err(Error::Calendar(format!("{q} starts before the sampled window")));
    }
    let k = draws.names.len() + 1;
    let ch = &draws.chain;
    let p = ch.lags;
    let ahead = (last - draws.end()).max(0) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(draws.seed ^ 0x5eed_f0e5);
    let mut sum = 0.0;
    for d in 0..draws.len() {
        let mut path = draws.latent(d);
        if ahead > 0 {
            let chol = cholesky_jitter(&ch.sigma[d], "innovation covariance")?.l();
            let blocks = lag_blocks(&ch.coef[d], k, p);
            let c = ch.coef[d].row(0).transpose();
            let mut hist: Vec<DVector<f64>> = (0..p).map(|r| ch.tail[d].row(r).transpose()).collect();
            for _ in 0..ahead {
                let mut x = c.clone();
                for (l, b) in blocks.iter().enumerate() {
                    x += b * &hist[hist.len() - 1 - l];
                }
                let z = DVector::from_iterator(k, (0..k).map(|_| rng.sample::<f64, _>(StandardNormal)));
                x += &chol * z;
                path.push(draws.target_moments.destandardize(x[k - 1]));
                hist.push(x);
            }
        }
        let t = (last - draws.start) as usize;
        sum += (path[t] + path[t - 1] + path[t - 2]) / 3.0;
    }
    Ok(sum / draws.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minnesota_formula() {
        let p = MinnesotaPrior::new(vec![1.0, 2.0], 0.2, 0.5, 1.0, 2).unwrap();
        assert!((p.coef_variance(0, 0, 1) - 0.04).abs() < 1e-15);
        assert!((p.coef_variance(0, 0, 2) - 0.02).abs() < 1e-15);
        let ratio = p.coef_variance(1, 0, 1) / p.coef_variance(1, 1, 1);
        assert!((ratio - 0.5 * 4.0 / 1.0).abs() < 1e-12);
        assert!(matches!(MinnesotaPrior::new(vec![1.0, 0.0], 0.2, 0.5, 1.0, 1), Err(Error::ZeroVariance(_))));
    }

    #[test]
    fn envelope_cholesky_matches_dense() {
        let m = 6;
        let mut q = DMatrix::zeros(m, m);
        for i in 0..m {
            q[(i, i)] = 4.0;
            if i > 0 {
                q[(i, i - 1)] = 1.0;
                q[(i - 1, i)] = 1.0;
            }
        }
        q[(5, 2)] = 0.5;
        q[(2, 5)] = 0.5;
        let first = vec![0, 0, 1, 2, 3, 2];
        let env = Envelope::factor(q.clone(), first).unwrap();
        let b = DVector::from_iterator(m, (0..m).map(|i| i as f64 - 2.0));
        let x = env.solve(&b);
        assert!((&q * x - b).amax() < 1e-12);
    }

    #[test]
    fn constant_latent_gives_constant_nowcast() {
        let chain = Chain {
            lags: 1,
            coef: vec![DMatrix::zeros(3, 2); 2],
            sigma: vec![DMatrix::identity(2, 2); 2],
            last_col: vec![vec![0.7; 6]; 2],
            tail: vec![DMatrix::zeros(1, 2); 2],
            rejections: 0,
        };
        let draws = BvarDraws {
            start: Month::new(2020, 1),
            names: vec!["a".into()],
            chain: chain.clone(),
            moments: vec![],
            target_moments: Moments { mean: 1.0, sd: 1.0 },
            seed: 0,
        };
        assert!((nowcast_bvar(&draws, Quarter::new(2020, 2)).unwrap() - 1.7).abs() < 1e-12);
        let empty = BvarDraws { chain: Chain { coef: vec![], ..chain }, ..draws };
        assert!(nowcast_bvar(&empty, Quarter::new(2020, 2)).is_err());
    }

    #[test]
    fn inverse_wishart_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let df = 10.0;
        let n = 4000;
        let mut acc = DMatrix::zeros(2, 2);
        for _ in 0..n {
            acc += draw_inverse_wishart(&s, df, &mut rng).unwrap();
        }
        acc /= n as f64;
        // E[IW(S, v)] = S / (v - k - 1)
        let expected = &s / (df - 3.0);
        assert!((acc - expected).amax() < 0.03);
    }
}
