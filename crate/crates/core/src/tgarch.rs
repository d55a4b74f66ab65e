//! Factor-augmented bivariate threshold GARCH.
//!
//! Estimation is two-step. A VAR(1) in the housing variable `x` and the
//! macro factor `f` is fitted by equation-wise OLS; its residual pairs
//! `(ε_i, ε_f)` then drive three threshold-GARCH(1,1) recursions:
//!
//! ```text
//! σ²_i,t  = ω_i  + α_i ε²_i,t−1        + φ_i σ²_i,t−1   + γ_i ε²_i,t−1 D_i,t−1
//! σ²_f,t  = ω_f  + α_f ε²_f,t−1        + φ_f σ²_f,t−1   + γ_f ε²_f,t−1 D_f,t−1
//! σ_if,t  = ω_if + α_if ε_i,t−1 ε_f,t−1 + φ_if σ_if,t−1 + γ_if ε_i,t−1 ε_f,t−1 D_i,t−1 D_f,t−1
//! ```
//!
//! where `D = 1` for a negative lagged residual. The twelve parameters are
//! chosen to maximise the bivariate Gaussian log-likelihood, using
//! Nelder-Mead on an unconstrained reparameterisation:
//! `ω = softplus(w)`, `α = s·u`, `φ = s·(1−u)` with `s`, `u` logistic, so
//! that `ω > 0`, `α, φ ≥ 0` and `α + φ ≤ 1` always hold for the two variance
//! equations. Any parameter vector whose path leaves the positive-definite
//! cone is penalised.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::data::{Panel, TimeSeries};
use crate::date::YearMonth;
use crate::error::{Error, Result};
use crate::linalg;
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::stats;

const LN_2PI: f64 = 1.837_877_066_409_345_5;
/// Objective value assigned to parameter vectors with a non-PD path.
pub const PD_PENALTY: f64 = 1e10;

/// First month of simulated series.
pub const SIMULATION_START: (i32, u8) = (1971, 1);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquationParams {
    pub omega: f64,
    pub alpha: f64,
    pub phi: f64,
    pub gamma: f64,
}

impl EquationParams {
    pub const fn new(omega: f64, alpha: f64, phi: f64, gamma: f64) -> Self {
        Self {
            omega,
            alpha,
            phi,
            gamma,
        }
    }

    /// ω > 0, α ≥ 0, φ ≥ 0, α + φ ≤ 1.
    pub fn satisfies_variance_constraints(&self) -> bool {
        self.omega > 0.0 && self.alpha >= 0.0 && self.phi >= 0.0 && self.alpha + self.phi <= 1.0
    }

    /// α + φ + γ/2, the persistence of a threshold-GARCH variance under symmetric shocks.
    pub fn persistence(&self) -> f64 {
        self.alpha + self.phi + 0.5 * self.gamma
    }
}

/// Parameters of the housing variance, factor variance and covariance equations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TGarchParams {
    pub housing: EquationParams,
    pub factor: EquationParams,
    pub cross: EquationParams,
}

impl TGarchParams {
    pub fn validate(&self) -> Result<()> {
        for (name, eq) in [("housing", &self.housing), ("factor", &self.factor)] {
            if !eq.satisfies_variance_constraints() {
                return Err(Error::InvalidParams(format!(
                    "{name} equation violates ω>0, α≥0, φ≥0, α+φ≤1: {eq:?}"
                )));
            }
        }
        let all = [self.housing, self.factor, self.cross];
        if all.iter().any(|e| {
            ![e.omega, e.alpha, e.phi, e.gamma]
                .iter()
                .all(|v| v.is_finite())
        }) {
            return Err(Error::InvalidParams("non-finite parameter".into()));
        }
        Ok(())
    }

    pub fn to_array(&self) -> [f64; 12] {
        let mut out = [0.0; 12];
        for (k, e) in [self.housing, self.factor, self.cross].iter().enumerate() {
            out[4 * k..4 * k + 4].copy_from_slice(&[e.omega, e.alpha, e.phi, e.gamma]);
        }
        out
    }

    pub fn from_array(a: &[f64; 12]) -> Self {
        let eq = |k: usize| EquationParams::new(a[4 * k], a[4 * k + 1], a[4 * k + 2], a[4 * k + 3]);
        Self {
            housing: eq(0),
            factor: eq(1),
            cross: eq(2),
        }
    }

    /// One step of the three recursions.
    #[inline]
    pub fn step(&self, prev: CovState, e_i: f64, e_f: f64) -> CovState {
        let neg_i = e_i < 0.0;
        let neg_f = e_f < 0.0;
        let (h, f, c) = (&self.housing, &self.factor, &self.cross);
        let ei2 = e_i * e_i;
        let ef2 = e_f * e_f;
        let eif = e_i * e_f;
        CovState {
            var_i: h.omega
                + h.alpha * ei2
                + h.phi * prev.var_i
                + if neg_i { h.gamma * ei2 } else { 0.0 },
            var_f: f.omega
                + f.alpha * ef2
                + f.phi * prev.var_f
                + if neg_f { f.gamma * ef2 } else { 0.0 },
            cov: c.omega
                + c.alpha * eif
                + c.phi * prev.cov
                + if neg_i && neg_f { c.gamma * eif } else { 0.0 },
        }
    }
}

/// Conditional (co)variances at one date.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovState {
    pub var_i: f64,
    pub var_f: f64,
    pub cov: f64,
}

impl CovState {
    pub fn det(&self) -> f64 {
        self.var_i * self.var_f - self.cov * self.cov
    }

    pub fn is_positive_definite(&self) -> bool {
        self.var_i > 0.0 && self.var_f > 0.0 && self.det() > 0.0
    }

    /// Sample variances and covariance of a residual pair series.
    pub fn from_residuals(res: &ResidualPair) -> Self {
        Self {
            var_i: stats::variance(&res.housing),
            var_f: stats::variance(&res.factor),
            cov: stats::covariance(&res.housing, &res.factor),
        }
    }
}

/// Residual pairs `ζ_t = (ε_i,t, ε_f,t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualPair {
    pub start: YearMonth,
    pub housing: Vec<f64>,
    pub factor: Vec<f64>,
}

impl ResidualPair {
    pub fn new(start: YearMonth, housing: Vec<f64>, factor: Vec<f64>) -> Result<Self> {
        if housing.len() != factor.len() {
            return Err(Error::SchemaMismatch(
                "residual series differ in length".into(),
            ));
        }
        if housing.is_empty() {
            return Err(Error::TooShort { needed: 1, got: 0 });
        }
        Ok(Self {
            start,
            housing,
            factor,
        })
    }

    pub fn len(&self) -> usize {
        self.housing.len()
    }

    pub fn is_empty(&self) -> bool {
        self.housing.is_empty()
    }
}

/// VAR(1) coefficients: `[x_t, f_t]' = intercepts + matrix · [x_{t−1}, f_{t−1}]' + ζ_t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarCoefficients {
    pub intercepts: [f64; 2],
    /// Row 0 is the housing equation, row 1 the factor equation; columns are
    /// the lagged housing variable and the lagged factor.
    pub matrix: [[f64; 2]; 2],
}

impl VarCoefficients {
    pub fn zero() -> Self {
        Self {
            intercepts: [0.0; 2],
            matrix: [[0.0; 2]; 2],
        }
    }

    /// Largest eigenvalue modulus of the coefficient matrix.
    pub fn spectral_radius(&self) -> f64 {
        let [[a, b], [c, d]] = self.matrix;
        let tr = a + d;
        let det = a * d - b * c;
        let disc = tr * tr / 4.0 - det;
        if disc >= 0.0 {
            let r = disc.sqrt();
            (tr / 2.0 + r).abs().max((tr / 2.0 - r).abs())
        } else {
            det.sqrt()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarFit {
    pub coefficients: VarCoefficients,
    /// Conventional OLS standard errors, `[equation][intercept, lag x, lag f]`.
    pub std_errors: [[f64; 3]; 2],
    pub residuals: ResidualPair,
    /// Fitted values `[x̂_t, f̂_t]`, aligned with the residuals.
    pub fitted: Vec<[f64; 2]>,
}

/// Equation-by-equation OLS of `[x_t, f_t]` on `[1, x_{t−1}, f_{t−1}]`.
pub fn fit_var1(x: &TimeSeries, f: &TimeSeries) -> Result<VarFit> {
    let panel = Panel::aligned(&[x.clone().with_id("x"), f.clone().with_id("f")])?;
    let n = panel.len();
    if n < 10 {
        return Err(Error::TooShort { needed: 10, got: n });
    }
    let xv = panel.column_values(0);
    let fv = panel.column_values(1);
    let design = linalg::with_intercept(&[&xv[..n - 1], &fv[..n - 1]], n - 1);
    let fit = |y: &[f64]| {
        linalg::least_squares(y, &design).map_err(|e| match e {
            Error::RankDeficient => Error::CollinearRegressors,
            other => other,
        })
    };
    let ex = fit(&xv[1..])?;
    let ef = fit(&fv[1..])?;
    let dof = (n - 1 - 3) as f64;
    let se = |ls: &linalg::LeastSquares| {
        let s2 = ls.ssr / dof;
        [0, 1, 2].map(|k| (s2 * ls.xtx_inv[(k, k)]).sqrt())
    };
    let residuals = ResidualPair::new(
        panel.start().succ(),
        ex.residuals.clone(),
        ef.residuals.clone(),
    )?;
    Ok(VarFit {
        coefficients: VarCoefficients {
            intercepts: [ex.coef[0], ef.coef[0]],
            matrix: [[ex.coef[1], ex.coef[2]], [ef.coef[1], ef.coef[2]]],
        },
        std_errors: [se(&ex), se(&ef)],
        residuals,
        fitted: ex
            .fitted
            .iter()
            .zip(&ef.fitted)
            .map(|(a, b)| [*a, *b])
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovariancePath {
    pub sigma2_i: TimeSeries,
    pub sigma2_f: TimeSeries,
    pub sigma_if: TimeSeries,
}

impl CovariancePath {
    pub fn len(&self) -> usize {
        self.sigma2_i.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma2_i.is_empty()
    }

    pub fn state(&self, t: usize) -> CovState {
        CovState {
            var_i: self.sigma2_i.values()[t],
            var_f: self.sigma2_f.values()[t],
            cov: self.sigma_if.values()[t],
        }
    }

    /// Conditional standard deviation of the housing variable, σ_i,t.
    pub fn housing_volatility(&self) -> TimeSeries {
        let v = self.sigma2_i.values().iter().map(|s| s.sqrt()).collect();
        TimeSeries::new(self.sigma2_i.id(), self.sigma2_i.start(), v).expect("finite variances")
    }

    /// First index at which Σ_t fails to be positive definite.
    pub fn first_non_pd(&self) -> Option<usize> {
        (0..self.len()).find(|&t| !self.state(t).is_positive_definite())
    }
}

/// Run the recursions over `residuals`. The conditional covariance of the
/// first residual pair is `init`; each later Σ_t is built from Σ_{t−1} and
/// ζ_{t−1}.
pub fn tgarch_filter(
    residuals: &ResidualPair,
    params: &TGarchParams,
    init: CovState,
) -> Result<CovariancePath> {
    if !init.is_positive_definite() {
        return Err(Error::NonPositiveDefinite(0));
    }
    let n = residuals.len();
    let mut vi = Vec::with_capacity(n);
    let mut vf = Vec::with_capacity(n);
    let mut c = Vec::with_capacity(n);
    let mut state = init;
    for t in 0..n {
        if t > 0 {
            state = params.step(state, residuals.housing[t - 1], residuals.factor[t - 1]);
            if !state.is_positive_definite() {
                return Err(Error::NonPositiveDefinite(t));
            }
        }
        vi.push(state.var_i);
        vf.push(state.var_f);
        c.push(state.cov);
    }
    let start = residuals.start;
    Ok(CovariancePath {
        sigma2_i: TimeSeries::new("sigma2_i", start, vi)?,
        sigma2_f: TimeSeries::new("sigma2_f", start, vf)?,
        sigma_if: TimeSeries::new("sigma_if", start, c)?,
    })
}

#[inline]
fn gaussian_term(s: CovState, e_i: f64, e_f: f64) -> f64 {
    let det = s.det();
    let quad = (s.var_f * e_i * e_i - 2.0 * s.cov * e_i * e_f + s.var_i * e_f * e_f) / det;
    2.0 * LN_2PI + det.ln() + quad
}

/// Bivariate Gaussian log-likelihood `−½ Σ_t [2 ln 2π + ln|Σ_t| + ζ_t' Σ_t⁻¹ ζ_t]`.
pub fn log_likelihood(residuals: &ResidualPair, path: &CovariancePath) -> Result<f64> {
    if residuals.len() != path.len() {
        return Err(Error::SchemaMismatch(format!(
            "{} residuals, path of length {}",
            residuals.len(),
            path.len()
        )));
    }
    let mut acc = 0.0;
    for t in 0..residuals.len() {
        let s = path.state(t);
        if !s.is_positive_definite() {
            return Err(Error::NonPositiveDefinite(t));
        }
        acc += gaussian_term(s, residuals.housing[t], residuals.factor[t]);
    }
    Ok(-0.5 * acc)
}

/// Filter and likelihood in one pass without allocating the path. `None` if
/// Σ_t leaves the positive-definite cone.
pub fn log_likelihood_at(
    residuals: &ResidualPair,
    params: &TGarchParams,
    init: CovState,
) -> Option<f64> {
    if !init.is_positive_definite() {
        return None;
    }
    let (ei, ef) = (&residuals.housing, &residuals.factor);
    let mut state = init;
    let mut acc = gaussian_term(state, ei[0], ef[0]);
    for t in 1..ei.len() {
        state = params.step(state, ei[t - 1], ef[t - 1]);
        if !state.is_positive_definite() {
            return None;
        }
        acc += gaussian_term(state, ei[t], ef[t]);
    }
    acc.is_finite().then_some(-0.5 * acc)
}

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn softplus_inv(y: f64) -> f64 {
    if y > 30.0 {
        y + (-(-y).exp()).ln_1p()
    } else {
        y.exp_m1().ln()
    }
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn variance_eq_from_free(z: &[f64]) -> EquationParams {
    let s = logistic(z[1]);
    let u = logistic(z[2]);
    EquationParams::new(softplus(z[0]), s * u, s * (1.0 - u), z[3])
}

fn variance_eq_to_free(e: &EquationParams) -> [f64; 4] {
    let s = (e.alpha + e.phi).clamp(1e-6, 1.0 - 1e-6);
    let u = (e.alpha / (e.alpha + e.phi).max(1e-12)).clamp(1e-6, 1.0 - 1e-6);
    [softplus_inv(e.omega), logit(s), logit(u), e.gamma]
}

/// Map an unconstrained 12-vector to parameters satisfying the variance constraints.
pub fn params_from_free(z: &[f64]) -> TGarchParams {
    TGarchParams {
        housing: variance_eq_from_free(&z[0..4]),
        factor: variance_eq_from_free(&z[4..8]),
        cross: EquationParams::new(z[8], z[9], z[10], z[11]),
    }
}

pub fn params_to_free(p: &TGarchParams) -> [f64; 12] {
    let mut z = [0.0; 12];
    z[0..4].copy_from_slice(&variance_eq_to_free(&p.housing));
    z[4..8].copy_from_slice(&variance_eq_to_free(&p.factor));
    z[8..12].copy_from_slice(&[p.cross.omega, p.cross.alpha, p.cross.phi, p.cross.gamma]);
    z
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TGarchConfig {
    pub restarts: usize,
    pub max_evals: usize,
    pub diameter_tol: f64,
    /// Initial simplex edge in the unconstrained parameter space.
    pub initial_step: f64,
    /// Standard deviation of the Gaussian jitter applied to restart points.
    pub jitter: f64,
    pub seed: u64,
}

impl Default for TGarchConfig {
    fn default() -> Self {
        Self {
            restarts: 20,
            max_evals: 20_000,
            diameter_tol: 1e-8,
            initial_step: 0.25,
            jitter: 0.25,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerTrace {
    pub restarts: usize,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    pub initial_loglik: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TGarchFit {
    pub var: VarFit,
    pub params: TGarchParams,
    pub init: CovState,
    pub path: CovariancePath,
    pub loglik: f64,
    pub trace: OptimizerTrace,
}

impl TGarchFit {
    pub fn volatility(&self) -> TimeSeries {
        self.path.housing_volatility()
    }
}

/// Starting values: ω at a tenth of the sample (co)variance, α=0.05, φ=0.85, γ=0.05.
pub fn starting_params(init: &CovState) -> TGarchParams {
    TGarchParams {
        housing: EquationParams::new(0.1 * init.var_i, 0.05, 0.85, 0.05),
        factor: EquationParams::new(0.1 * init.var_f, 0.05, 0.85, 0.05),
        cross: EquationParams::new(0.1 * init.cov, 0.05, 0.85, 0.05),
    }
}

/// Maximum-likelihood fit of the threshold-GARCH recursions to VAR(1)
/// residuals of `(x, f)`.
pub fn fit_tgarch(x: &TimeSeries, f: &TimeSeries, config: &TGarchConfig) -> Result<TGarchFit> {
    let n = Panel::aligned(&[x.clone().with_id("x"), f.clone().with_id("f")])?.len();
    if n < 100 {
        return Err(Error::TooShort {
            needed: 100,
            got: n,
        });
    }
    let mut warnings = Vec::new();
    if n < 300 {
        warnings.push(format!(
            "only {n} observations; estimates may be unreliable below 300"
        ));
    }
    let var = fit_var1(x, f)?;
    let res = &var.residuals;
    let init = CovState::from_residuals(res);
    if !init.is_positive_definite() {
        return Err(Error::NonPositiveDefinite(0));
    }
    let start = starting_params(&init);
    let initial_loglik =
        log_likelihood_at(res, &start, init).ok_or(Error::NonPositiveDefinite(0))?;

    let objective = |z: &[f64]| match log_likelihood_at(res, &params_from_free(z), init) {
        Some(ll) => -ll,
        None => PD_PENALTY,
    };
    let opts = NelderMeadOptions {
        diameter_tol: config.diameter_tol,
        max_evals: config.max_evals,
        initial_step: config.initial_step,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut best_z = params_to_free(&start).to_vec();
    let mut best_value = -initial_loglik;
    let mut best_converged = false;
    let (mut iterations, mut evaluations) = (0, 0);
    let restarts = config.restarts.max(1);
    for k in 0..restarts {
        let x0: Vec<f64> = if k == 0 {
            best_z.clone()
        } else {
            best_z
                .iter()
                .map(|v| v + config.jitter * rng.sample::<f64, _>(StandardNormal))
                .collect()
        };
        let m = nelder_mead(objective, &x0, &opts);
        iterations += m.iterations;
        evaluations += m.evals;
        if m.value < best_value {
            best_value = m.value;
            best_z = m.x;
            best_converged = m.converged;
        } else if k == 0 {
            best_converged = m.converged;
        }
    }
    if !best_value.is_finite() || best_value >= PD_PENALTY {
        return Err(Error::OptimizerDiverged(
            "no positive-definite optimum found".into(),
        ));
    }
    let params = params_from_free(&best_z);
    let path = tgarch_filter(res, &params, init)?;
    let loglik = log_likelihood(res, &path)?;
    Ok(TGarchFit {
        params,
        init,
        path,
        loglik,
        trace: OptimizerTrace {
            restarts,
            iterations,
            evaluations,
            converged: best_converged,
            initial_loglik,
            warnings,
        },
        var,
    })
}

/// Output of [`simulate_tgarch`].
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedPair {
    pub x: TimeSeries,
    pub f: TimeSeries,
    /// True innovations `ζ_t` and their conditional covariance path.
    pub innovations: ResidualPair,
    pub path: CovariancePath,
    pub truth: SimulationTruth,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTruth {
    pub params: TGarchParams,
    pub coefficients: VarCoefficients,
    pub n: usize,
    pub seed: u64,
}

impl SimulationTruth {
    /// `key = value` lines describing the data-generating process.
    pub fn manifest(&self) -> String {
        let mut s = format!("n = {}\nseed = {}\n", self.n, self.seed);
        for (name, e) in [
            ("housing", self.params.housing),
            ("factor", self.params.factor),
            ("cross", self.params.cross),
        ] {
            s.push_str(&format!(
                "{name}.omega = {}\n{name}.alpha = {}\n{name}.phi = {}\n{name}.gamma = {}\n",
                e.omega, e.alpha, e.phi, e.gamma
            ));
        }
        let c = &self.coefficients;
        s.push_str(&format!(
            "var.intercepts = [{}, {}]\nvar.matrix = [[{}, {}], [{}, {}]]\n",
            c.intercepts[0],
            c.intercepts[1],
            c.matrix[0][0],
            c.matrix[0][1],
            c.matrix[1][0],
            c.matrix[1][1]
        ));
        s
    }
}

const BURN_IN: usize = 500;

/// Simulate `n` months of `(x, f)` from the VAR(1) mean equation with
/// threshold-GARCH innovations. Deterministic for a given seed.
pub fn simulate_tgarch(
    params: &TGarchParams,
    coeffs: &VarCoefficients,
    n: usize,
    seed: u64,
) -> Result<SimulatedPair> {
    params.validate()?;
    for (name, eq) in [("housing", params.housing), ("factor", params.factor)] {
        if eq.persistence() >= 1.0 {
            return Err(Error::NonStationaryParams(format!(
                "{name} equation: α + φ + γ/2 = {} ≥ 1",
                eq.persistence()
            )));
        }
    }
    if coeffs.spectral_radius() >= 1.0 {
        return Err(Error::NonStationaryParams(format!(
            "VAR coefficient matrix has spectral radius {}",
            coeffs.spectral_radius()
        )));
    }
    if n == 0 {
        return Err(Error::TooShort { needed: 1, got: 0 });
    }
    let h = params.housing;
    let fe = params.factor;
    let var_i = h.omega / (1.0 - h.persistence());
    let var_f = fe.omega / (1.0 - fe.persistence());
    let cross_denom = 1.0 - params.cross.alpha - params.cross.phi;
    let mut cov = if cross_denom > 0.0 {
        params.cross.omega / cross_denom
    } else {
        0.0
    };
    if var_i * var_f - cov * cov <= 0.0 {
        cov = 0.0;
    }
    let mut state = CovState { var_i, var_f, cov };

    let [[a, b], [c, d]] = coeffs.matrix;
    let det = (1.0 - a) * (1.0 - d) - b * c;
    let mut level = [
        ((1.0 - d) * coeffs.intercepts[0] + b * coeffs.intercepts[1]) / det,
        (c * coeffs.intercepts[0] + (1.0 - a) * coeffs.intercepts[1]) / det,
    ];

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = BURN_IN + n + 1;
    let mut xs = Vec::with_capacity(n + 1);
    let mut fs = Vec::with_capacity(n + 1);
    let mut ei = Vec::with_capacity(n);
    let mut ef = Vec::with_capacity(n);
    let mut path = Vec::with_capacity(n);
    let mut prev = (0.0, 0.0);
    for t in 0..total {
        if t > 0 {
            state = params.step(state, prev.0, prev.1);
        }
        if !state.is_positive_definite() {
            return Err(Error::NonPositiveDefinite(t));
        }
        let z1: f64 = rng.sample(StandardNormal);
        let z2: f64 = rng.sample(StandardNormal);
        // Cholesky factor of Σ_t
        let l11 = state.var_i.sqrt();
        let l21 = state.cov / l11;
        let l22 = (state.var_f - l21 * l21).sqrt();
        let e = (l11 * z1, l21 * z1 + l22 * z2);
        let next = [
            coeffs.intercepts[0] + a * level[0] + b * level[1] + e.0,
            coeffs.intercepts[1] + c * level[0] + d * level[1] + e.1,
        ];
        if t == BURN_IN {
            // first kept observation; its innovation is not part of the residual series
            xs.push(next[0]);
            fs.push(next[1]);
        } else if t > BURN_IN {
            xs.push(next[0]);
            fs.push(next[1]);
            ei.push(e.0);
            ef.push(e.1);
            path.push(state);
        }
        level = next;
        prev = e;
    }
    // keep exactly n observations; residuals cover observations 2..n
    xs.truncate(n);
    fs.truncate(n);
    ei.truncate(n.saturating_sub(1));
    ef.truncate(n.saturating_sub(1));
    path.truncate(n.saturating_sub(1));

    let start = YearMonth::new(SIMULATION_START.0, SIMULATION_START.1).expect("valid month");
    let res_start = start.succ();
    let innovations = if n > 1 {
        ResidualPair::new(res_start, ei, ef)?
    } else {
        ResidualPair {
            start: res_start,
            housing: vec![],
            factor: vec![],
        }
    };
    let mk = |id: &str, v: Vec<f64>| {
        if v.is_empty() {
            Ok(TimeSeries::new(id, res_start, vec![0.0])?)
        } else {
            TimeSeries::new(id, res_start, v)
        }
    };
    let path = CovariancePath {
        sigma2_i: mk("sigma2_i", path.iter().map(|s| s.var_i).collect())?,
        sigma2_f: mk("sigma2_f", path.iter().map(|s| s.var_f).collect())?,
        sigma_if: mk("sigma_if", path.iter().map(|s| s.cov).collect())?,
    };
    Ok(SimulatedPair {
        x: TimeSeries::new("x", start, xs)?,
        f: TimeSeries::new("f", start, fs)?,
        innovations,
        path,
        truth: SimulationTruth {
            params: *params,
            coefficients: *coeffs,
            n,
            seed,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn month() -> YearMonth {
        YearMonth::new(2000, 1).unwrap()
    }

    /// Common α, φ, γ in all three equations. With `ω_if = 0.3 ω` the
    /// intercept matrix is PD, which keeps every Σ_t PD.
    fn uniform(omega: f64, alpha: f64, phi: f64, gamma: f64) -> TGarchParams {
        let e = EquationParams::new(omega, alpha, phi, gamma);
        TGarchParams {
            housing: e,
            factor: e,
            cross: EquationParams::new(0.3 * omega, alpha, phi, gamma),
        }
    }

    #[test]
    fn constant_variance_degenerate_case() {
        let p = TGarchParams {
            housing: EquationParams::new(0.7, 0.0, 0.0, 0.0),
            factor: EquationParams::new(1.3, 0.0, 0.0, 0.0),
            cross: EquationParams::new(0.1, 0.0, 0.0, 0.0),
        };
        let res = ResidualPair::new(
            month(),
            vec![0.5, -1.0, 2.0, -0.3],
            vec![1.0, 1.0, -1.0, 0.2],
        )
        .unwrap();
        let init = CovState {
            var_i: 0.7,
            var_f: 1.3,
            cov: 0.1,
        };
        let path = tgarch_filter(&res, &p, init).unwrap();
        assert!(path.sigma2_i.values().iter().all(|v| *v == 0.7));
        assert!(path.sigma2_f.values().iter().all(|v| *v == 1.3));
    }

    /// Three steps worked by hand with ω=0.1, α=0.2, φ=0.5, γ=0.3,
    /// residuals (+1, −1, +1) in both equations, Σ_0 = I.
    ///
    /// σ²_0 = 1
    /// σ²_1 = 0.1 + 0.2·1 + 0.5·1            = 0.8   (ε_0 = +1, D = 0)
    /// σ²_2 = 0.1 + 0.2·1 + 0.5·0.8 + 0.3·1  = 1.0   (ε_1 = −1, D = 1)
    ///
    /// With ω_if = 0.03:
    /// σ_if,0 = 0
    /// σ_if,1 = 0.03 + 0.2·1 + 0.5·0              = 0.23
    /// σ_if,2 = 0.03 + 0.2·1 + 0.5·0.23 + 0.3·1   = 0.645 (both lagged residuals negative)
    #[test]
    fn three_step_hand_recursion() {
        let p = uniform(0.1, 0.2, 0.5, 0.3);
        let res = ResidualPair::new(month(), vec![1.0, -1.0, 1.0], vec![1.0, -1.0, 1.0]).unwrap();
        let init = CovState {
            var_i: 1.0,
            var_f: 1.0,
            cov: 0.0,
        };
        let path = tgarch_filter(&res, &p, init).unwrap();
        let expect_var = [1.0, 0.1 + 0.2 + 0.5, 0.1 + 0.2 + 0.5 * 0.8 + 0.3];
        let expect_cov = [0.0, 0.03 + 0.2, 0.03 + 0.2 + 0.5 * (0.03 + 0.2) + 0.3];
        assert_eq!(path.sigma2_i.values(), &expect_var);
        assert_eq!(path.sigma2_f.values(), &expect_var);
        assert_eq!(path.sigma_if.values(), &expect_cov);
    }

    #[test]
    fn cross_threshold_needs_both_negative() {
        let p = uniform(0.1, 0.2, 0.5, 0.3);
        let res = ResidualPair::new(month(), vec![-1.0, 0.0], vec![1.0, 0.0]).unwrap();
        let init = CovState {
            var_i: 1.0,
            var_f: 1.0,
            cov: 0.0,
        };
        let path = tgarch_filter(&res, &p, init).unwrap();
        // ε_i ε_f = −1: α term only, no γ term
        assert_eq!(path.sigma_if.values()[1], 0.03 - 0.2);
        // housing variance does see its own negative shock
        assert_eq!(path.sigma2_i.values()[1], 0.1 + 0.2 + 0.5 + 0.3);
    }

    #[test]
    fn positive_shocks_give_smaller_variances() {
        let p = uniform(0.1, 0.1, 0.7, 0.15);
        let ei = vec![0.8, -1.2, -0.3, 1.5, -2.0, 0.4, -0.9];
        let ef = vec![-0.5, -0.7, 0.9, -1.1, 0.3, -0.6, 1.2];
        let init = CovState {
            var_i: 1.0,
            var_f: 1.0,
            cov: 0.2,
        };
        let signed = tgarch_filter(
            &ResidualPair::new(month(), ei.clone(), ef.clone()).unwrap(),
            &p,
            init,
        )
        .unwrap();
        let abs = |v: &[f64]| v.iter().map(|x: &f64| x.abs()).collect::<Vec<_>>();
        let pos = tgarch_filter(
            &ResidualPair::new(month(), abs(&ei), abs(&ef)).unwrap(),
            &p,
            init,
        )
        .unwrap();
        for t in 0..ei.len() {
            assert!(pos.sigma2_i.values()[t] <= signed.sigma2_i.values()[t]);
            assert!(pos.sigma2_f.values()[t] <= signed.sigma2_f.values()[t]);
        }
    }

    #[test]
    fn filter_reports_non_pd() {
        let mut p = uniform(0.1, 0.0, 0.0, 0.0);
        p.cross.omega = 0.5; // |σ_if| > sqrt(σ²_i σ²_f)
        let res = ResidualPair::new(month(), vec![1.0, 1.0], vec![1.0, 1.0]).unwrap();
        let init = CovState {
            var_i: 0.1,
            var_f: 0.1,
            cov: 0.0,
        };
        assert!(matches!(
            tgarch_filter(&res, &p, init),
            Err(Error::NonPositiveDefinite(1))
        ));
    }

    #[test]
    fn loglik_identity_cases() {
        let res = ResidualPair::new(month(), vec![0.0], vec![0.0]).unwrap();
        let one = |id: &str| TimeSeries::new(id, month(), vec![1.0]).unwrap();
        let path = CovariancePath {
            sigma2_i: one("a"),
            sigma2_f: one("b"),
            sigma_if: TimeSeries::new("c", month(), vec![0.0]).unwrap(),
        };
        let ll = log_likelihood(&res, &path).unwrap();
        assert!((ll + (2.0 * std::f64::consts::PI).ln()).abs() < 1e-15);
    }

    #[test]
    fn fused_likelihood_matches_filter_then_likelihood() {
        let p = uniform(0.05, 0.1, 0.8, 0.08);
        let sim = simulate_tgarch(&p, &VarCoefficients::zero(), 300, 4).unwrap();
        let init = CovState::from_residuals(&sim.innovations);
        let path = tgarch_filter(&sim.innovations, &p, init).unwrap();
        let a = log_likelihood(&sim.innovations, &path).unwrap();
        let b = log_likelihood_at(&sim.innovations, &p, init).unwrap();
        assert!((a - b).abs() < 1e-9 * a.abs());
    }

    #[test]
    fn free_parameter_round_trip() {
        let p = TGarchParams {
            housing: EquationParams::new(0.1, 0.1, 0.8, 0.1),
            factor: EquationParams::new(0.3, 0.05, 0.9, -0.02),
            cross: EquationParams::new(0.03, 0.1, 0.8, 0.1),
        };
        let q = params_from_free(&params_to_free(&p));
        for (a, b) in p.to_array().iter().zip(q.to_array()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn free_parameters_always_feasible() {
        for z0 in [-40.0, -3.0, 0.0, 2.5, 40.0] {
            let z: Vec<f64> = (0..12).map(|k| z0 + k as f64 * 0.37).collect();
            let p = params_from_free(&z);
            assert!(p.housing.satisfies_variance_constraints(), "{p:?}");
            assert!(p.factor.satisfies_variance_constraints(), "{p:?}");
        }
    }

    #[test]
    fn simulation_is_deterministic_and_guarded() {
        let p = uniform(0.1, 0.1, 0.8, 0.1);
        let a = simulate_tgarch(&p, &VarCoefficients::zero(), 200, 7).unwrap();
        let b = simulate_tgarch(&p, &VarCoefficients::zero(), 200, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.x.len(), 200);
        assert_eq!(a.innovations.len(), 199);
        let hot = uniform(0.1, 0.2, 0.75, 0.2);
        assert!(matches!(
            simulate_tgarch(&hot, &VarCoefficients::zero(), 10, 1),
            Err(Error::NonStationaryParams(_))
        ));
        let explosive = VarCoefficients {
            intercepts: [0.0, 0.0],
            matrix: [[1.0, 0.0], [0.0, 0.5]],
        };
        assert!(matches!(
            simulate_tgarch(&p, &explosive, 10, 1),
            Err(Error::NonStationaryParams(_))
        ));
    }

    #[test]
    fn var1_rejects_constant_regressor() {
        let x = TimeSeries::new("x", month(), vec![3.0; 40]).unwrap();
        let f = TimeSeries::new(
            "f",
            month(),
            (0..40).map(|i| ((i * 13) % 7) as f64).collect(),
        )
        .unwrap();
        assert!(matches!(fit_var1(&x, &f), Err(Error::CollinearRegressors)));
    }

    #[test]
    fn var1_normal_equations() {
        let p = uniform(0.1, 0.1, 0.8, 0.1);
        let coeffs = VarCoefficients {
            intercepts: [0.2, -0.1],
            matrix: [[0.5, 0.2], [0.1, 0.4]],
        };
        let sim = simulate_tgarch(&p, &coeffs, 400, 11).unwrap();
        let v = fit_var1(&sim.x, &sim.f).unwrap();
        assert_eq!(v.residuals.len(), 399);
        let xv = sim.x.values();
        let fv = sim.f.values();
        for e in [&v.residuals.housing, &v.residuals.factor] {
            let s0: f64 = e.iter().sum();
            let s1: f64 = e.iter().zip(&xv[..399]).map(|(a, b)| a * b).sum();
            let s2: f64 = e.iter().zip(&fv[..399]).map(|(a, b)| a * b).sum();
            assert!(s0.abs() < 1e-8 && s1.abs() < 1e-8 && s2.abs() < 1e-8);
        }
    }
}
