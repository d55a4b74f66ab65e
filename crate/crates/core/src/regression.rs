//! Time-series regressions: OLS with Newey-West (Bartlett kernel) standard
//! errors, linear quantile regression, and the predictive-regression
//! alignment of returns on a lagged index.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data::{Panel, TimeSeries};
use crate::date::YearMonth;
use crate::error::{Error, Result};
use crate::linalg;
use crate::stats;

pub const INTERCEPT: &str = "const";

/// Newey-West truncation lag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NwLag {
    /// `floor(4 (n/100)^(2/9))`
    Auto,
    Fixed(usize),
}

impl NwLag {
    pub fn resolve(self, n: usize) -> usize {
        match self {
            Self::Auto => auto_lag(n),
            Self::Fixed(k) => k,
        }
    }
}

impl FromStr for NwLag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Self::Auto);
        }
        s.parse().map(Self::Fixed).map_err(|_| {
            Error::InvalidArgument(format!("HAC lag must be 'auto' or an integer, got '{s}'"))
        })
    }
}

impl fmt::Display for NwLag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Auto => f.write_str("auto"),
            Self::Fixed(k) => write!(f, "{k}"),
        }
    }
}

pub fn auto_lag(n: usize) -> usize {
    (4.0 * (n as f64 / 100.0).powf(2.0 / 9.0)).floor() as usize
}

/// Significance stars for regression tables: * 10%, ** 5%, *** 1%.
pub fn regression_stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.1 {
        "*"
    } else {
        ""
    }
}

/// A table cell such as `0.076* (0.04)`.
pub fn coef_cell(coef: f64, se: f64, p: f64) -> String {
    format!("{coef:.3}{} ({se:.2})", regression_stars(p))
}

/// Response and regressor columns on a shared date axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub start: YearMonth,
    pub y: Vec<f64>,
    /// Regressor names, excluding the intercept.
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Design {
    /// Intersect the date ranges of `y` and every column of `x`.
    pub fn aligned(y: &TimeSeries, x: &Panel) -> Result<Self> {
        let mut series = vec![y.clone().with_id("\u{0}y")];
        series.extend(x.to_series());
        let start = series
            .iter()
            .map(TimeSeries::start)
            .max()
            .ok_or(Error::AlignmentEmpty)?;
        let end = series
            .iter()
            .map(TimeSeries::end)
            .min()
            .ok_or(Error::AlignmentEmpty)?;
        if start > end {
            return Err(Error::AlignmentEmpty);
        }
        let cut: Vec<Vec<f64>> = series
            .iter()
            .map(|s| s.window(start, end).map(TimeSeries::into_values))
            .collect::<Result<_>>()?;
        let mut it = cut.into_iter();
        Ok(Self {
            start,
            y: it.next().expect("response"),
            names: x.ids().to_vec(),
            columns: it.collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn end(&self) -> YearMonth {
        self.start.add_months(self.len() as i64 - 1)
    }

    /// n×(k+1) matrix with a leading intercept column.
    pub fn matrix(&self) -> DMatrix<f64> {
        let cols: Vec<&[f64]> = self.columns.iter().map(Vec::as_slice).collect();
        linalg::with_intercept(&cols, self.len())
    }

    /// Coefficient names including the intercept.
    pub fn coef_names(&self) -> Vec<String> {
        std::iter::once(INTERCEPT.to_string())
            .chain(self.names.iter().cloned())
            .collect()
    }

    /// Rows with dates in `[from, to]`.
    pub fn window(&self, from: YearMonth, to: YearMonth) -> Result<Self> {
        let from = from.max(self.start);
        let to = to.min(self.end());
        if from > to {
            return Err(Error::AlignmentEmpty);
        }
        let a = self.start.months_until(from) as usize;
        let b = self.start.months_until(to) as usize;
        Ok(Self {
            start: from,
            y: self.y[a..=b].to_vec(),
            names: self.names.clone(),
            columns: self.columns.iter().map(|c| c[a..=b].to_vec()).collect(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionFit {
    /// Coefficient names, intercept first.
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub hac_se: Vec<f64>,
    pub t_stats: Vec<f64>,
    pub p_values: Vec<f64>,
    pub r2: f64,
    pub adj_r2: f64,
    pub n: usize,
    pub nw_lag: usize,
    pub ssr: f64,
    pub residuals: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub start: YearMonth,
}

impl RegressionFit {
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// `coef*** (se)` for one coefficient.
    pub fn cell(&self, name: &str) -> Option<String> {
        self.index_of(name)
            .map(|k| coef_cell(self.coefficients[k], self.hac_se[k], self.p_values[k]))
    }

    /// Residual standard error `sqrt(SSR / (n − p))`.
    pub fn residual_std_error(&self) -> f64 {
        (self.ssr / (self.n - self.names.len()) as f64).sqrt()
    }
}

/// Bartlett-weighted long-run covariance of the score contributions `x_t e_t`.
fn hac_meat(x: &DMatrix<f64>, e: &[f64], lag: usize) -> DMatrix<f64> {
    let (n, p) = x.shape();
    let g = DMatrix::from_fn(n, p, |t, j| x[(t, j)] * e[t]);
    let mut s = g.transpose() * &g;
    for l in 1..=lag.min(n.saturating_sub(1)) {
        let w = 1.0 - l as f64 / (lag as f64 + 1.0);
        let lead = g.rows(l, n - l);
        let back = g.rows(0, n - l);
        let gamma = lead.transpose() * back;
        s += (&gamma + gamma.transpose()) * w;
    }
    s
}

/// OLS of `y` on an intercept and the columns of `x`, with Newey-West
/// covariance `(X'X)⁻¹ S (X'X)⁻¹`. No small-sample correction is applied.
pub fn ols_nw(y: &TimeSeries, x: &Panel, lag: NwLag) -> Result<RegressionFit> {
    ols_nw_design(&Design::aligned(y, x)?, lag)
}

pub fn ols_nw_design(d: &Design, lag: NwLag) -> Result<RegressionFit> {
    let n = d.len();
    let p = d.columns.len() + 1;
    if n <= p {
        return Err(Error::TooShort {
            needed: p + 1,
            got: n,
        });
    }
    let x = d.matrix();
    let ls = linalg::least_squares(&d.y, &x)?;
    let nw_lag = lag.resolve(n);
    let meat = hac_meat(&x, &ls.residuals, nw_lag);
    let cov = &ls.xtx_inv * meat * &ls.xtx_inv;
    let hac_se: Vec<f64> = (0..p).map(|k| cov[(k, k)].max(0.0).sqrt()).collect();
    let t_stats: Vec<f64> = ls.coef.iter().zip(&hac_se).map(|(b, s)| b / s).collect();
    let dof = (n - p) as f64;
    let p_values = t_stats
        .iter()
        .map(|t| stats::t_two_sided(*t, dof))
        .collect();
    let ybar = stats::mean(&d.y);
    let tss: f64 = d.y.iter().map(|v| (v - ybar).powi(2)).sum();
    let r2 = if tss > 0.0 { 1.0 - ls.ssr / tss } else { 1.0 };
    let adj_r2 = 1.0 - (1.0 - r2) * (n as f64 - 1.0) / dof;
    Ok(RegressionFit {
        names: d.coef_names(),
        coefficients: ls.coef,
        hac_se,
        t_stats,
        p_values,
        r2,
        adj_r2,
        n,
        nw_lag,
        ssr: ls.ssr,
        residuals: ls.residuals,
        covariance: (0..p)
            .map(|i| (0..p).map(|j| cov[(i, j)]).collect())
            .collect(),
        start: d.start,
    })
}

/// Pinball loss `ρ_τ(u) = u (τ − 1{u<0})`.
pub fn pinball(u: f64, tau: f64) -> f64 {
    if u < 0.0 {
        u * (tau - 1.0)
    } else {
        u * tau
    }
}

/// `Σ ρ_τ(y − X b)` where `x` holds rows.
pub fn pinball_loss(y: &[f64], rows: &[Vec<f64>], b: &[f64], tau: f64) -> f64 {
    y.iter()
        .zip(rows)
        .map(|(yi, xi)| pinball(yi - dot(xi, b), tau))
        .sum()
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn residuals(y: &[f64], rows: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    y.iter().zip(rows).map(|(yi, xi)| yi - dot(xi, b)).collect()
}

fn rows_matrix(rows: &[Vec<f64>], idx: &[usize]) -> DMatrix<f64> {
    let p = rows[0].len();
    DMatrix::from_fn(idx.len(), p, |i, j| rows[idx[i]][j])
}

/// Iteratively reweighted least squares on a smoothed pinball loss, with the
/// smoothing parameter decayed from 1e-2 to 1e-8.
fn irls(y: &[f64], rows: &[Vec<f64>], tau: f64, b0: Vec<f64>) -> Vec<f64> {
    let n = y.len();
    let p = b0.len();
    let mut b = b0;
    let mut eps = 1e-2;
    while eps >= 1e-8 {
        for _ in 0..8 {
            let r = residuals(y, rows, &b);
            let mut xtwx = DMatrix::<f64>::zeros(p, p);
            let mut xtwy = DVector::<f64>::zeros(p);
            for t in 0..n {
                let w = if r[t] >= 0.0 { tau } else { 1.0 - tau } / r[t].abs().max(eps);
                for i in 0..p {
                    xtwy[i] += w * rows[t][i] * y[t];
                    for j in 0..=i {
                        xtwx[(i, j)] += w * rows[t][i] * rows[t][j];
                    }
                }
            }
            for i in 0..p {
                for j in 0..i {
                    xtwx[(j, i)] = xtwx[(i, j)];
                }
            }
            match xtwx.lu().solve(&xtwy) {
                Some(next) if next.iter().all(|v| v.is_finite()) => {
                    b = next.iter().copied().collect()
                }
                _ => return b,
            }
        }
        eps *= 0.1;
    }
    b
}

/// Choose `p` rows with the smallest |residual| that form a nonsingular basis.
fn initial_basis(rows: &[Vec<f64>], r: &[f64]) -> Option<Vec<usize>> {
    let p = rows[0].len();
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by(|&a, &b| r[a].abs().total_cmp(&r[b].abs()).then(a.cmp(&b)));
    let mut basis: Vec<usize> = Vec::with_capacity(p);
    for &i in &order {
        basis.push(i);
        let m = rows_matrix(rows, &basis);
        let rank = m.clone().svd(false, false).rank(1e-10 * m.norm().max(1.0));
        if rank < basis.len() {
            basis.pop();
        }
        if basis.len() == p {
            return Some(basis);
        }
    }
    None
}

const SLOPE_TOL: f64 = 1e-12;

/// Exact descent over basic solutions (vertices of the LP). Starting from
/// the basis `basis`, move along edge directions while the pinball loss
/// decreases, stepping to the best kink on each edge.
fn vertex_descent(
    y: &[f64],
    rows: &[Vec<f64>],
    tau: f64,
    mut basis: Vec<usize>,
) -> Option<Vec<f64>> {
    let n = y.len();
    let p = rows[0].len();
    let mut in_basis = vec![false; n];
    for &i in &basis {
        in_basis[i] = true;
    }
    let max_iter = 50 * n + 100;
    // pivots at a degenerate vertex can cycle through bases of equal loss
    let max_stall = 4 * p + 20;
    let mut b: Vec<f64>;
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut stall = 0;
    let mut degenerate_tries = 0;
    for _ in 0..max_iter {
        let xb = rows_matrix(rows, &basis);
        let yb = DVector::from_iterator(p, basis.iter().map(|&i| y[i]));
        let inv = xb.try_inverse()?;
        b = (&inv * yb).iter().copied().collect();
        let r = residuals(y, rows, &b);
        let loss: f64 = r.iter().map(|&u| pinball(u, tau)).sum();
        match &best {
            Some((l, _)) if loss >= *l - 1e-12 * (1.0 + l.abs()) => {
                stall += 1;
                if stall > max_stall {
                    return best.map(|(_, b)| b);
                }
            }
            _ => {
                best = Some((loss, b.clone()));
                stall = 0;
            }
        }
        let scale = r.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        let zero_tol = 1e-12 * scale;

        let mut step: Option<(f64, usize, usize)> = None; // (slope, basis slot, entering row)
        for slot in 0..p {
            for sign in [1.0, -1.0] {
                let d: Vec<f64> = (0..p).map(|k| sign * inv[(k, slot)]).collect();
                let g: Vec<f64> = rows.iter().map(|xi| dot(xi, &d)).collect();
                // leaving observation's residual becomes −t·sign
                let mut slope = if sign > 0.0 { 1.0 - tau } else { tau };
                let mut kinks: Vec<(f64, usize)> = Vec::new();
                for i in 0..n {
                    if in_basis[i] || g[i] == 0.0 {
                        continue;
                    }
                    if r[i].abs() <= zero_tol {
                        slope += if g[i] > 0.0 {
                            (1.0 - tau) * g[i]
                        } else {
                            -tau * g[i]
                        };
                    } else {
                        slope += if r[i] > 0.0 {
                            -tau * g[i]
                        } else {
                            (1.0 - tau) * g[i]
                        };
                        let t = r[i] / g[i];
                        if t > 0.0 {
                            kinks.push((t, i));
                        }
                    }
                }
                if slope >= -SLOPE_TOL || kinks.is_empty() {
                    continue;
                }
                kinks.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                let mut s = slope;
                let mut enter = kinks[kinks.len() - 1].1;
                for &(_, i) in &kinks {
                    s += g[i].abs();
                    if s >= 0.0 {
                        enter = i;
                        break;
                    }
                }
                if step.is_none_or(|(bs, _, _)| slope < bs) {
                    step = Some((slope, slot, enter));
                }
            }
        }
        match step {
            Some((_, slot, enter)) => {
                in_basis[basis[slot]] = false;
                basis[slot] = enter;
                in_basis[enter] = true;
                degenerate_tries = 0;
            }
            None => {
                // at a degenerate vertex other bases may expose a descent edge
                let zeros: Vec<usize> = (0..n)
                    .filter(|&i| !in_basis[i] && r[i].abs() <= zero_tol)
                    .collect();
                if zeros.is_empty() || degenerate_tries >= zeros.len().min(4 * p) {
                    return best.map(|(_, b)| b);
                }
                let enter = zeros[degenerate_tries % zeros.len()];
                let slot = degenerate_tries % p;
                let mut trial = basis.clone();
                trial[slot] = enter;
                degenerate_tries += 1;
                if rows_matrix(rows, &trial).try_inverse().is_some() {
                    in_basis[basis[slot]] = false;
                    in_basis[enter] = true;
                    basis = trial;
                }
            }
        }
    }
    best.map(|(_, b)| b)
}

/// Minimise `Σ ρ_τ(y − X b)` over `b`, where `rows` already include any
/// intercept column.
pub fn solve_quantile(y: &[f64], rows: &[Vec<f64>], tau: f64) -> Result<Vec<f64>> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::TauOutOfRange(tau));
    }
    let n = y.len();
    let p = rows.first().map_or(0, Vec::len);
    if p == 0 || n < p {
        return Err(Error::TooShort {
            needed: p.max(1),
            got: n,
        });
    }
    let x = DMatrix::from_fn(n, p, |i, j| rows[i][j]);
    let ols = linalg::least_squares(y, &x)?.coef;
    let warm = irls(y, rows, tau, ols);
    let r = residuals(y, rows, &warm);
    let basis = initial_basis(rows, &r).ok_or(Error::RankDeficient)?;
    let exact = vertex_descent(y, rows, tau, basis);
    Ok(match exact {
        Some(b) if pinball_loss(y, rows, &b, tau) <= pinball_loss(y, rows, &warm, tau) => b,
        _ => warm,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantileOptions {
    pub bootstrap_reps: usize,
    pub seed: u64,
}

impl Default for QuantileOptions {
    fn default() -> Self {
        Self {
            bootstrap_reps: 499,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantileFit {
    pub tau: f64,
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    /// Pairs-bootstrap standard errors.
    pub se: Vec<f64>,
    pub z_stats: Vec<f64>,
    pub p_values: Vec<f64>,
    pub objective: f64,
    pub n: usize,
    /// Bootstrap replicates that produced a solution.
    pub bootstrap_used: usize,
}

impl QuantileFit {
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn cell(&self, name: &str) -> Option<String> {
        self.index_of(name)
            .map(|k| coef_cell(self.coefficients[k], self.se[k], self.p_values[k]))
    }
}

/// Quantile regression of `y` on an intercept and the columns of `x`.
pub fn quantile_fit(
    y: &TimeSeries,
    x: &Panel,
    tau: f64,
    opts: &QuantileOptions,
) -> Result<QuantileFit> {
    quantile_fit_design(&Design::aligned(y, x)?, tau, opts)
}

pub fn quantile_fit_design(d: &Design, tau: f64, opts: &QuantileOptions) -> Result<QuantileFit> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::TauOutOfRange(tau));
    }
    let n = d.len();
    let p = d.columns.len() + 1;
    if n <= p {
        return Err(Error::TooShort {
            needed: p + 1,
            got: n,
        });
    }
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|t| {
            std::iter::once(1.0)
                .chain(d.columns.iter().map(|c| c[t]))
                .collect()
        })
        .collect();
    let coefficients = solve_quantile(&d.y, &rows, tau)?;
    let objective = pinball_loss(&d.y, &rows, &coefficients, tau);

    let draws: Vec<Vec<f64>> = (0..opts.bootstrap_reps)
        .into_par_iter()
        .filter_map(|rep| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(rep as u64 + 1);
            let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let yb: Vec<f64> = idx.iter().map(|&i| d.y[i]).collect();
            let xb: Vec<Vec<f64>> = idx.iter().map(|&i| rows[i].clone()).collect();
            solve_quantile(&yb, &xb, tau).ok()
        })
        .collect();
    let se: Vec<f64> = (0..p)
        .map(|k| {
            let v: Vec<f64> = draws.iter().map(|b| b[k]).collect();
            if v.len() > 1 {
                stats::std_dev(&v)
            } else {
                f64::NAN
            }
        })
        .collect();
    let z_stats: Vec<f64> = coefficients.iter().zip(&se).map(|(b, s)| b / s).collect();
    let p_values = z_stats.iter().map(|z| stats::z_two_sided(*z)).collect();
    Ok(QuantileFit {
        tau,
        names: d.coef_names(),
        coefficients,
        se,
        z_stats,
        p_values,
        objective,
        n,
        bootstrap_used: draws.len(),
    })
}

/// Timing of a predictive regression. For a dependent observation dated
/// `d`, the index enters at `d − lag_index − lead_dependent` and controls at
/// `d − lead_dependent`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveSpec {
    pub lag_index: usize,
    pub lead_dependent: usize,
    pub quantiles: Vec<f64>,
    pub nw_lag: NwLag,
    pub quantile_options: QuantileOptions,
}

impl Default for PredictiveSpec {
    fn default() -> Self {
        Self {
            lag_index: 1,
            lead_dependent: 0,
            quantiles: Vec::new(),
            nw_lag: NwLag::Auto,
            quantile_options: QuantileOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveFit {
    pub index_id: String,
    pub ols: RegressionFit,
    pub quantiles: Vec<QuantileFit>,
}

pub const MIN_PREDICTIVE_OBS: usize = 30;

/// Align returns, the shifted index and controls on the dependent date axis.
pub fn predictive_design(
    returns: &TimeSeries,
    index: &TimeSeries,
    controls: Option<&Panel>,
    lag_index: usize,
    lead_dependent: usize,
) -> Result<Design> {
    let lead = lead_dependent as i64;
    let mut series = vec![index.shifted(lag_index as i64 + lead)];
    if let Some(c) = controls {
        series.extend(c.to_series().into_iter().map(|s| s.shifted(lead)));
    }
    Design::aligned(returns, &Panel::aligned(&series)?)
}

/// Regress returns on the lagged index (and controls), by OLS with
/// Newey-West errors and at each requested quantile.
pub fn predictive_regression(
    returns: &TimeSeries,
    index: &TimeSeries,
    controls: Option<&Panel>,
    spec: &PredictiveSpec,
) -> Result<PredictiveFit> {
    let d = predictive_design(
        returns,
        index,
        controls,
        spec.lag_index,
        spec.lead_dependent,
    )?;
    predictive_regression_design(&d, spec)
}

pub fn predictive_regression_design(d: &Design, spec: &PredictiveSpec) -> Result<PredictiveFit> {
    if d.len() < MIN_PREDICTIVE_OBS {
        return Err(Error::TooShort {
            needed: MIN_PREDICTIVE_OBS,
            got: d.len(),
        });
    }
    let ols = ols_nw_design(d, spec.nw_lag)?;
    let quantiles = spec
        .quantiles
        .iter()
        .map(|&tau| quantile_fit_design(d, tau, &spec.quantile_options))
        .collect::<Result<_>>()?;
    Ok(PredictiveFit {
        index_id: d.names[0].clone(),
        ols,
        quantiles,
    })
}
