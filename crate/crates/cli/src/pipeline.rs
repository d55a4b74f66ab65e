//! End-to-end pipeline over a report bundle directory.
//!
//! Every stage reads its inputs from files written by earlier stages, so a
//! stage rerun from cached intermediate CSVs reproduces the same outputs as
//! a full run.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use hrisk_core::breaks::{find_breaks_design, range_label};
use hrisk_core::data::{write_panel, Panel};
use hrisk_core::forecast::best_by_msfe;
use hrisk_core::regression::{coef_cell, predictive_design, quantile_fit_design};
use hrisk_core::risk_index::RISK_INDEX_ID;
use hrisk_core::{
    build_risk_index, build_volatility_panel, corr_matrix, describe, enumerate_models, evaluate,
    fit_pca, fit_tgarch, load_panel, predictive_regression, scores, split_train_test,
    subsample_fit, transform, Error, ModelSpec, PredictiveFit, PredictiveSpec, QuantileFit,
    QuantileOptions, RegressionFit, TGarchConfig, TimeSeries, TransformKind, YearMonth,
};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{BreakDesign, ForecastModel, PipelineConfig};
use crate::error::{CliError, CliResult};
use crate::table::{Cell, Table};

pub const DATA_DIR: &str = "data";
pub const SERIES_DIR: &str = "series";
pub const TABLES_DIR: &str = "tables";
pub const REPORT_FILE: &str = "REPORT.md";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const FACTOR_ID: &str = "F";

/// Stage names in execution order.
pub const STAGES: [&str; 10] = [
    "ingest", "factor", "tgarch", "index", "regress", "quantile", "select", "breaks", "forecast",
    "report",
];

/// Tables in report order.
const REPORT_TABLES: [&str; 17] = [
    "summary_statistics",
    "factor_proportions",
    "factor_loadings",
    "tgarch_parameters",
    "index_proportions",
    "index_loadings",
    "volatility_correlation",
    "volatility_summary",
    "predictive_ols",
    "predictive_quantile",
    "economic_conditions",
    "model_ranking",
    "controls_regression",
    "break_criterion",
    "breakpoints",
    "subsample_betas",
    "forecast_comparison",
];

const STAR_NOTE: &str =
    "*** p < 0.01, ** p < 0.05, * p < 0.1; Newey-West standard errors in parentheses.";

/// Seed for an independent random stream derived from the run seed.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    seed.wrapping_add((stream + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub struct Pipeline {
    pub cfg: PipelineConfig,
    config_bytes: Vec<u8>,
    pub out: PathBuf,
    /// Index series to use in place of the bundle's own.
    pub index_override: Option<PathBuf>,
}

impl Pipeline {
    /// Load and validate `config`. The bundle goes to `out` when given,
    /// otherwise to the configured output directory.
    pub fn from_file(config: &Path, out: Option<PathBuf>, seed: Option<u64>) -> CliResult<Self> {
        let config_bytes = std::fs::read(config)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", config.display())))?;
        let mut cfg = PipelineConfig::load(config)?;
        if let Some(s) = seed {
            cfg.seed = s;
        }
        let out = out.unwrap_or_else(|| cfg.output.clone());
        Ok(Self {
            cfg,
            config_bytes,
            out,
            index_override: None,
        })
    }

    pub fn run(&self) -> CliResult<()> {
        for s in STAGES {
            self.stage(s)?;
        }
        Ok(())
    }

    pub fn stage(&self, name: &str) -> CliResult<()> {
        match name {
            "ingest" => self.ingest(),
            "factor" => self.factor(),
            "tgarch" => self.tgarch(),
            "index" => self.index(),
            "regress" => self.regress(),
            "quantile" => self.quantile(),
            "select" => self.select(),
            "breaks" => self.breaks(),
            "forecast" => self.forecast(),
            "report" => self.report(),
            other => Err(CliError::Config(format!("unknown stage '{other}'"))),
        }
    }

    fn dir(&self, stage: &'static str, sub: &str) -> CliResult<PathBuf> {
        let d = self.out.join(sub);
        std::fs::create_dir_all(&d).map_err(CliError::output(stage))?;
        Ok(d)
    }

    fn read(&self, stage: &'static str, sub: &str, file: &str) -> CliResult<Panel> {
        load_panel(&self.out.join(sub).join(file), "date", &[]).map_err(CliError::stage(stage))
    }

    fn read_optional(&self, stage: &'static str, file: &str) -> CliResult<Option<Panel>> {
        let p = self.out.join(DATA_DIR).join(file);
        if p.is_file() {
            self.read(stage, DATA_DIR, file).map(Some)
        } else {
            Ok(None)
        }
    }

    fn write_table(&self, stage: &'static str, t: &Table, stem: &str) -> CliResult<()> {
        t.write(&self.dir(stage, TABLES_DIR)?, stem)
            .map_err(CliError::output(stage))
    }

    fn column(stage: &'static str, p: &Panel, id: &str) -> CliResult<TimeSeries> {
        p.column(id).ok_or_else(|| CliError::Stage {
            stage,
            source: Error::MissingColumn(id.to_string()),
        })
    }

    fn returns(&self, stage: &'static str) -> CliResult<TimeSeries> {
        let p = self.read(stage, DATA_DIR, "returns.csv")?;
        Self::column(stage, &p, &self.cfg.inputs.return_column)
    }

    fn risk_index(&self, stage: &'static str) -> CliResult<TimeSeries> {
        let p = match &self.index_override {
            Some(path) => load_panel(path, "date", &[]).map_err(CliError::stage(stage))?,
            None => self.read(stage, SERIES_DIR, "risk_index.csv")?,
        };
        Self::column(stage, &p, RISK_INDEX_ID)
    }

    fn controls(&self, stage: &'static str) -> CliResult<Panel> {
        self.read(stage, DATA_DIR, "controls.csv")
    }

    fn spec(&self, quantiles: Vec<f64>, stream: u64) -> PredictiveSpec {
        let r = &self.cfg.regression;
        PredictiveSpec {
            lag_index: r.lag_index,
            lead_dependent: r.lead,
            quantiles,
            nw_lag: r.nw_lag,
            quantile_options: QuantileOptions {
                bootstrap_reps: r.bootstrap_reps,
                seed: derive_seed(self.cfg.seed, stream),
            },
        }
    }

    // ---- ingest ------------------------------------------------------------

    fn ingest(&self) -> CliResult<()> {
        const S: &str = "ingest";
        let e = CliError::stage(S);
        let date = &self.cfg.inputs.date_column;
        let load = |p: &Path| load_panel(p, date, &[]).map_err(&e);
        let apply = |p: Panel, steps: &BTreeMap<String, Vec<TransformKind>>| -> CliResult<Panel> {
            for col in steps.keys() {
                if p.column(col).is_none() {
                    return Err(e(Error::MissingColumn(col.clone())));
                }
            }
            let series = p
                .to_series()
                .into_iter()
                .map(|mut s| {
                    for k in steps.get(s.id()).into_iter().flatten() {
                        s = transform(&s, *k)?;
                    }
                    Ok(s)
                })
                .collect::<hrisk_core::Result<Vec<_>>>()
                .map_err(&e)?;
            Panel::aligned(&series).map_err(&e)
        };
        let i = &self.cfg.inputs;
        let macro_panel = apply(load(&i.macro_panel)?, &self.cfg.transforms.macro_panel)?;
        let housing = apply(load(&i.housing)?, &self.cfg.transforms.housing)?;
        let returns = load(&i.returns)?;
        Self::column(S, &returns, &i.return_column)?;
        let controls = load(&i.controls)?;

        let dir = self.dir(S, DATA_DIR)?;
        let mut panels = vec![
            ("macro.csv", macro_panel),
            ("housing.csv", housing.clone()),
            ("returns.csv", returns.clone()),
            ("controls.csv", controls.clone()),
        ];
        for (file, path) in [
            ("nber.csv", &i.nber),
            ("vix.csv", &i.vix),
            ("econ.csv", &i.econ),
        ] {
            let target = dir.join(file);
            match path {
                Some(p) => panels.push((file, load(p)?)),
                None if target.exists() => {
                    std::fs::remove_file(&target).map_err(CliError::output(S))?
                }
                None => {}
            }
        }
        for (file, p) in &panels {
            write_panel(&dir.join(file), p).map_err(&e)?;
        }

        let mut t = summary_table("Summary statistics");
        for p in [&returns, &controls, &housing] {
            for s in p.to_series() {
                push_summary(&mut t, &s).map_err(&e)?;
            }
        }
        t.note("Excess kurtosis; JB is Jarque-Bera against χ²(2); Q(1) is lag-1 Ljung-Box against χ²(1).");
        self.write_table(S, &t, "summary_statistics")
    }

    // ---- factor ------------------------------------------------------------

    fn factor(&self) -> CliResult<()> {
        const S: &str = "factor";
        let e = CliError::stage(S);
        let macro_panel = self.read(S, DATA_DIR, "macro.csv")?;
        let model = fit_pca(&macro_panel, self.cfg.pca.factor_mode).map_err(&e)?;
        let score = scores(&model, &macro_panel, 1)
            .map_err(&e)?
            .remove(0)
            .series
            .with_id(FACTOR_ID);
        let dir = self.dir(S, SERIES_DIR)?;
        write_panel(
            &dir.join("factor.csv"),
            &Panel::from_series(vec![score]).map_err(&e)?,
        )
        .map_err(&e)?;

        let k = model.ids.len().min(10);
        let t = proportions_table(
            "Macro factor: variance explained",
            &model.eigenvalues,
            &model.proportions,
            k,
        );
        self.write_table(S, &t, "factor_proportions")?;

        let shown = model.ids.len().min(3);
        let mut header = vec!["variable".to_string()];
        header.extend((1..=shown).map(|c| format!("PC{c}")));
        let mut t = Table::with_header("Macro factor: loadings", header);
        for (j, id) in model.ids.iter().enumerate() {
            let mut row: Vec<Cell> = vec![id.as_str().into()];
            row.extend((0..shown).map(|c| model.loadings[c][j].into()));
            t.push(row);
        }
        t.note(format!(
            "{} mode; largest eigen-residual {:.1e}.",
            model.mode, model.max_residual
        ));
        self.write_table(S, &t, "factor_loadings")
    }

    // ---- tgarch ------------------------------------------------------------

    fn tgarch(&self) -> CliResult<()> {
        const S: &str = "tgarch";
        let e = CliError::stage(S);
        let housing = self.read(S, DATA_DIR, "housing.csv")?;
        let factor = Self::column(S, &self.read(S, SERIES_DIR, "factor.csv")?, FACTOR_ID)?;
        let tc = &self.cfg.tgarch;
        let fits = (0..housing.width())
            .into_par_iter()
            .map(|j| {
                let mut x = housing.series(j);
                if tc.standardize {
                    x = transform(&x, TransformKind::Standardize)?;
                }
                let config = TGarchConfig {
                    restarts: tc.restarts,
                    max_evals: tc.max_evals,
                    diameter_tol: tc.tolerance,
                    seed: derive_seed(self.cfg.seed, j as u64),
                    ..TGarchConfig::default()
                };
                let fit = fit_tgarch(&x, &factor, &config)?;
                if let Some(t) = fit.path.first_non_pd() {
                    return Err(Error::NonPositiveDefinite(t));
                }
                Ok(fit)
            })
            .collect::<Vec<_>>()
            .into_iter()
            .collect::<hrisk_core::Result<Vec<_>>>()
            .map_err(&e)?;

        let vol = build_volatility_panel(&fits, housing.ids()).map_err(&e)?;
        write_panel(&self.dir(S, SERIES_DIR)?.join("volatility.csv"), &vol).map_err(&e)?;

        let mut header = vec!["variable".to_string()];
        for eq in ["i", "f", "if"] {
            for p in ["omega", "alpha", "phi", "gamma"] {
                header.push(format!("{p}_{eq}"));
            }
        }
        header.extend(["loglik", "initial_loglik", "evaluations", "converged"].map(String::from));
        let mut t = Table::with_header("Threshold GARCH estimates", header).digits(4);
        for (id, fit) in housing.ids().iter().zip(&fits) {
            let mut row: Vec<Cell> = vec![id.as_str().into()];
            for eq in [fit.params.housing, fit.params.factor, fit.params.cross] {
                row.extend([eq.omega, eq.alpha, eq.phi, eq.gamma].map(Cell::from));
            }
            row.push(fit.loglik.into());
            row.push(fit.trace.initial_loglik.into());
            row.push(fit.trace.evaluations.into());
            row.push(if fit.trace.converged { "yes" } else { "no" }.into());
            t.push(row);
            for w in &fit.trace.warnings {
                t.note(format!("{id}: {w}"));
            }
        }
        t.note("Subscripts: i housing variance, f factor variance, if covariance.");
        self.write_table(S, &t, "tgarch_parameters")
    }

    // ---- index -------------------------------------------------------------

    fn index(&self) -> CliResult<()> {
        const S: &str = "index";
        let e = CliError::stage(S);
        let vol = self.read(S, SERIES_DIR, "volatility.csv")?;
        let idx = build_risk_index(&vol, self.cfg.pca.index_mode).map_err(&e)?;
        let out = Panel::from_series(vec![
            idx.standardized.clone(),
            idx.raw.clone().with_id("H_RAW"),
        ])
        .map_err(&e)?;
        write_panel(&self.dir(S, SERIES_DIR)?.join("risk_index.csv"), &out).map_err(&e)?;

        let k = idx.ids.len();
        let t = proportions_table(
            "Risk index: variance explained",
            &idx.eigenvalues,
            &idx.proportions,
            k,
        );
        self.write_table(S, &t, "index_proportions")?;

        let mut t = Table::new(
            "Risk index: first-component loadings",
            &["variable", "loading"],
        );
        for (id, l) in idx.ids.iter().zip(&idx.loadings) {
            t.push(vec![id.as_str().into(), (*l).into()]);
        }
        t.note(format!(
            "{} mode; index z-scored to mean 0, std 1.",
            idx.mode
        ));
        self.write_table(S, &t, "index_loadings")?;

        let c = corr_matrix(&vol).map_err(&e)?;
        let mut header = vec!["variable".to_string()];
        header.extend(c.ids.iter().cloned());
        let mut t = Table::with_header("Volatility correlations", header);
        for i in 0..c.ids.len() {
            let mut row: Vec<Cell> = vec![c.ids[i].as_str().into()];
            row.extend((0..c.ids.len()).map(|j| Cell::from(c.cell(i, j))));
            t.push(row);
        }
        t.note("*** p < .001, ** p < .01, * p < .05.");
        self.write_table(S, &t, "volatility_correlation")?;

        let mut t = summary_table("Volatility and index summary");
        for s in vol
            .to_series()
            .iter()
            .chain(std::iter::once(&idx.standardized))
        {
            push_summary(&mut t, s).map_err(&e)?;
        }
        self.write_table(S, &t, "volatility_summary")
    }

    // ---- regress -----------------------------------------------------------

    fn regress(&self) -> CliResult<()> {
        const S: &str = "regress";
        let e = CliError::stage(S);
        let returns = self.returns(S)?;
        let h = self.risk_index(S)?;
        let controls = self.controls(S)?;
        let nber = self.read_optional(S, "nber.csv")?;
        let vix = self.read_optional(S, "vix.csv")?;
        let spec = self.spec(Vec::new(), 0);
        let r = &self.cfg.regression;

        let mut models: Vec<(String, Option<Panel>)> = vec![("Univariate".into(), None)];
        if let Some(n) = &nber {
            models.push(("With NBER".into(), Some(n.clone())));
        }
        if let Some(v) = &vix {
            models.push(("With VIX".into(), Some(v.clone())));
        }
        if let (Some(n), Some(v)) = (&nber, &vix) {
            let both = Panel::aligned(&[n.to_series(), v.to_series()].concat()).map_err(&e)?;
            models.push(("With NBER and VIX".into(), Some(both)));
        }
        if !r.ff_factors.is_empty() {
            models.push((
                "With Fama-French factors".into(),
                Some(controls.select(&r.ff_factors).map_err(&e)?),
            ));
        }
        if !r.controls.is_empty() {
            models.push((
                "With controls".into(),
                Some(controls.select(&r.controls).map_err(&e)?),
            ));
        }

        let mut t = ols_table("Predictive OLS regressions");
        for (name, c) in &models {
            let fit = predictive_regression(&returns, &h, c.as_ref(), &spec).map_err(&e)?;
            push_ols_row(&mut t, name, &fit);
        }
        t.note(format!(
            "Returns regressed on the index lagged {} month(s){}.",
            r.lag_index,
            if r.lead > 0 {
                format!(", dependent led {} month(s)", r.lead)
            } else {
                String::new()
            }
        ));
        t.note(STAR_NOTE);
        self.write_table(S, &t, "predictive_ols")?;

        let econ_path = self.dir(S, TABLES_DIR)?.join("economic_conditions");
        if let Some(econ) = self.read_optional(S, "econ.csv")? {
            let lead_spec = PredictiveSpec {
                lag_index: 0,
                lead_dependent: 1,
                ..spec.clone()
            };
            let mut t = ols_table("Economic conditions on the risk index");
            t.header[0] = "measure".into();
            for s in econ.to_series() {
                let fit = predictive_regression(&s, &h, None, &lead_spec).map_err(&e)?;
                push_ols_row(&mut t, s.id(), &fit);
            }
            t.note("Each measure at t+1 regressed on the index at t.");
            t.note(STAR_NOTE);
            self.write_table(S, &t, "economic_conditions")?;
        } else {
            for ext in ["csv", "md"] {
                let _ = std::fs::remove_file(econ_path.with_extension(ext));
            }
        }
        Ok(())
    }

    // ---- quantile ----------------------------------------------------------

    fn quantile(&self) -> CliResult<()> {
        const S: &str = "quantile";
        let e = CliError::stage(S);
        let returns = self.returns(S)?;
        let h = self.risk_index(S)?;
        let r = &self.cfg.regression;
        let d = predictive_design(&returns, &h, None, r.lag_index, r.lead).map_err(&e)?;
        let mut t = quantile_table("Predictive quantile regressions");
        for (k, &tau) in r.quantiles.iter().enumerate() {
            let opts = QuantileOptions {
                bootstrap_reps: r.bootstrap_reps,
                seed: derive_seed(self.cfg.seed, 100 + k as u64),
            };
            let fit = quantile_fit_design(&d, tau, &opts).map_err(&e)?;
            push_quantile_row(&mut t, &format!("Q({tau})"), &fit);
        }
        t.note(format!(
            "Pairs-bootstrap standard errors ({} resamples) in parentheses; *** p < 0.01, ** p < 0.05, * p < 0.1.",
            r.bootstrap_reps
        ));
        self.write_table(S, &t, "predictive_quantile")
    }

    // ---- select ------------------------------------------------------------

    fn select(&self) -> CliResult<()> {
        const S: &str = "select";
        let e = CliError::stage(S);
        let returns = self.returns(S)?;
        let controls = self.controls(S)?;
        let sel = &self.cfg.selection;
        let ranking =
            enumerate_models(&returns, &controls, &sel.always_include, sel.top_k).map_err(&e)?;

        let mut header = [
            "rank",
            "included",
            "size",
            "log_marginal",
            "log_odds_vs_best",
            "log_odds_vs_base",
            "posterior_prob",
        ]
        .map(String::from)
        .to_vec();
        header.extend(ranking.candidates.iter().cloned());
        let mut t = Table::with_header("Model ranking by posterior probability", header);
        let best = ranking.best().log_marginal;
        for (k, m) in ranking.entries.iter().enumerate() {
            let mut row: Vec<Cell> = vec![
                (k + 1).into(),
                if m.included.is_empty() {
                    "(intercept only)".to_string()
                } else {
                    m.included.join(" + ")
                }
                .into(),
                m.included.len().into(),
                m.log_marginal.into(),
                (m.log_marginal - best).into(),
                m.log_odds_vs_base.into(),
                m.posterior_prob.into(),
            ];
            row.extend((0..ranking.candidates.len()).map(|j| Cell::Int((m.mask >> j & 1) as i64)));
            t.push(row);
        }
        t.note(format!(
            "{} subsets over {} observations; log marginal likelihood ≈ ℓ̂ − (p/2) ln n under a uniform subset prior.",
            ranking.models_evaluated, ranking.n
        ));
        self.write_table(S, &t, "model_ranking")?;

        let h = self.risk_index(S)?;
        let best = &ranking.best().included;
        let selected = if best.is_empty() {
            None
        } else {
            Some(controls.select(best).map_err(&e)?)
        };
        let fit = predictive_regression(&returns, &h, selected.as_ref(), &self.spec(Vec::new(), 0))
            .map_err(&e)?;
        let mut t = Table::new(
            "Predictive regression with selected controls",
            &[
                "variable", "estimate", "coef", "hac_se", "t_stat", "p_value",
            ],
        );
        for (k, name) in fit.ols.names.iter().enumerate() {
            let o = &fit.ols;
            t.push(vec![
                name.as_str().into(),
                coef_cell(o.coefficients[k], o.hac_se[k], o.p_values[k]).into(),
                o.coefficients[k].into(),
                o.hac_se[k].into(),
                o.t_stats[k].into(),
                o.p_values[k].into(),
            ]);
        }
        t.note(format!(
            "Adj. R² {:.4} ({:.2}%), N = {}, Newey-West lag {}.",
            fit.ols.adj_r2,
            100.0 * fit.ols.adj_r2,
            fit.ols.n,
            fit.ols.nw_lag
        ));
        t.note(STAR_NOTE);
        self.write_table(S, &t, "controls_regression")
    }

    // ---- breaks ------------------------------------------------------------

    fn breaks(&self) -> CliResult<()> {
        const S: &str = "breaks";
        let e = CliError::stage(S);
        let returns = self.returns(S)?;
        let h = self.risk_index(S)?;
        let r = &self.cfg.regression;
        let b = &self.cfg.breaks;
        let controls = match b.design {
            BreakDesign::Univariate => None,
            BreakDesign::FamaFrench => Some(self.controls(S)?.select(&r.ff_factors).map_err(&e)?),
        };
        let d =
            predictive_design(&returns, &h, controls.as_ref(), r.lag_index, r.lead).map_err(&e)?;
        let set = find_breaks_design(&d, b.max_breaks, b.trim).map_err(&e)?;

        let mut t = Table::new(
            "Break search by number of breaks",
            &["m", "total_ssr", "bic", "selected", "break_dates"],
        );
        for m in 0..set.criterion_values.len() {
            let dates: Vec<String> = set.breaks_by_m[m]
                .iter()
                .map(|&i| set.start.add_months(i as i64).colon_label())
                .collect();
            t.push(vec![
                m.into(),
                set.ssr_by_m[m].into(),
                set.criterion_values[m].into(),
                if m == set.chosen_m { "*" } else { "" }.into(),
                dates.join(" ").into(),
            ]);
        }
        t.note(format!(
            "Minimum segment {} of {} observations; * marks the BIC choice. A break date is the last month of the earlier regime.",
            set.min_segment, set.n
        ));
        self.write_table(S, &t, "break_criterion")?;

        let mut t = Table::new(
            "Selected break dates",
            &["break", "date", "segment_ssr_before"],
        );
        for (k, date) in set.break_dates.iter().enumerate() {
            t.push(vec![
                (k + 1).into(),
                date.colon_label().into(),
                set.segment_ssr[k].into(),
            ]);
        }
        if set.break_dates.is_empty() {
            t.note("No break selected.");
        }
        self.write_table(S, &t, "breakpoints")?;

        // latest selected break that leaves enough data on both sides, else
        // the best single-break placement
        let mut candidates: Vec<(YearMonth, bool)> =
            set.break_dates.iter().rev().map(|d| (*d, true)).collect();
        if let Some(&i) = set.breaks_by_m.get(1).and_then(|v| v.first()) {
            candidates.push((set.start.add_months(i as i64), false));
        }
        let spec = self.spec(r.quantiles.clone(), 200);
        let mut t = Table::new(
            "Risk index beta in sub-samples",
            &["period", "model", "beta", "coef", "se", "p_value", "n"],
        );
        let mut chosen = None;
        for (date, selected) in candidates {
            match subsample_fit(&returns, &h, controls.as_ref(), date, &spec) {
                Ok(fit) => {
                    chosen = Some((fit, selected));
                    break;
                }
                Err(Error::SegmentTooShort { .. }) => continue,
                Err(err) => return Err(e(err)),
            }
        }
        match chosen {
            Some((fit, selected)) => {
                for (range, side) in [(fit.pre_range, &fit.pre), (fit.post_range, &fit.post)] {
                    push_subsample_rows(&mut t, &range_label(range), side);
                }
                t.note(format!(
                    "Split after {}{}.",
                    fit.break_date.colon_label(),
                    if selected {
                        ""
                    } else {
                        " (best single break; BIC selected none)"
                    }
                ));
            }
            None => t.note("No break leaves at least 30 observations on both sides."),
        }
        t.note("OLS rows use Newey-West and quantile rows bootstrap standard errors; *** p < 0.01, ** p < 0.05, * p < 0.1.");
        self.write_table(S, &t, "subsample_betas")
    }

    // ---- forecast ----------------------------------------------------------

    fn forecast(&self) -> CliResult<()> {
        const S: &str = "forecast";
        let e = CliError::stage(S);
        let returns = self.returns(S)?;
        let h = self.risk_index(S)?;
        let controls = self.controls(S)?;
        let nber = self.read_optional(S, "nber.csv")?;
        let r = &self.cfg.regression;
        let mut regressors = controls.clone();
        if let Some(n) = &nber {
            for s in n.to_series() {
                if regressors.column(s.id()).is_none() {
                    let merged: Vec<TimeSeries> =
                        regressors.to_series().into_iter().chain([s]).collect();
                    regressors = Panel::aligned(&merged).map_err(&e)?;
                }
            }
        }
        let d =
            predictive_design(&returns, &h, Some(&regressors), r.lag_index, r.lead).map_err(&e)?;
        let (train, test) = split_train_test(&d, self.cfg.forecast.ratio).map_err(&e)?;

        let mut specs = Vec::new();
        let mut skipped = Vec::new();
        for m in &self.cfg.forecast.models {
            match m {
                ForecastModel::Univariate => specs.push(ModelSpec::univariate(RISK_INDEX_ID)),
                ForecastModel::Nber if nber.is_some() => {
                    specs.push(ModelSpec::with_recession(RISK_INDEX_ID, "NBER"))
                }
                ForecastModel::Nber => skipped.push("NBER model skipped: no recession input."),
                ForecastModel::Multivariate => {
                    specs.push(ModelSpec::multivariate(RISK_INDEX_ID, controls.ids()))
                }
                ForecastModel::FamaFrench => {
                    let mut s = ModelSpec::multivariate(RISK_INDEX_ID, &r.ff_factors);
                    s.id = "Fama-French three-factors".into();
                    specs.push(s);
                }
            }
        }
        let reports = specs
            .iter()
            .map(|s| evaluate(s, &train, &test))
            .collect::<hrisk_core::Result<Vec<_>>>()
            .map_err(&e)?;
        let best = best_by_msfe(&reports);
        let mut t = Table::new(
            "In-sample and out-of-sample accuracy",
            &[
                "model",
                "in_correlation_accuracy",
                "in_residual_std_error",
                "out_correlation_accuracy",
                "out_msfe",
                "out_sign_agreement",
                "n_train",
                "n_test",
            ],
        )
        .digits(4);
        for (k, rep) in reports.iter().enumerate() {
            let star = if Some(k) == best { "*" } else { "" };
            t.push(vec![
                format!("{}{star}", rep.model_id).into(),
                rep.in_sample.correlation_accuracy.into(),
                rep.in_sample.residual_std_error.into(),
                rep.out_of_sample.correlation_accuracy.into(),
                rep.out_of_sample.msfe.into(),
                rep.sign_agreement.into(),
                rep.n_train.into(),
                rep.n_test.into(),
            ]);
        }
        t.note("* lowest out-of-sample MSFE. Correlation accuracy is 100 × Pearson correlation of actual and predicted; sign agreement is the percentage of matching signs.");
        t.note(format!(
            "Chronological split {:.0}:{:.0}; coefficients estimated once on the training window.",
            100.0 * self.cfg.forecast.ratio,
            100.0 * (1.0 - self.cfg.forecast.ratio)
        ));
        for s in skipped {
            t.note(s);
        }
        self.write_table(S, &t, "forecast_comparison")
    }

    // ---- report ------------------------------------------------------------

    fn report(&self) -> CliResult<()> {
        const S: &str = "report";
        let io = CliError::output(S);
        let tables = self.out.join(TABLES_DIR);
        let mut md = format!(
            "# Housing risk report\n\nSeed {}. Tables are also available as CSV under `{TABLES_DIR}/`; plottable series under `{SERIES_DIR}/`.\n",
            self.cfg.seed
        );
        for stem in REPORT_TABLES {
            let p = tables.join(format!("{stem}.md"));
            if p.is_file() {
                md.push('\n');
                md.push_str(&std::fs::read_to_string(&p).map_err(&io)?);
            }
        }
        std::fs::write(self.out.join(REPORT_FILE), &md).map_err(&io)?;

        #[derive(Serialize)]
        struct Input {
            role: &'static str,
            file: String,
            sha256: String,
        }
        #[derive(Serialize)]
        struct Manifest {
            tool: &'static str,
            version: &'static str,
            core_version: &'static str,
            seed: u64,
            config_sha256: String,
            inputs: Vec<Input>,
            outputs: BTreeMap<String, String>,
        }
        let inputs = self
            .cfg
            .input_files()
            .into_iter()
            .map(|(role, p)| {
                Ok(Input {
                    role,
                    file: p
                        .file_name()
                        .map(|f| f.to_string_lossy().into_owned())
                        .unwrap_or_default(),
                    sha256: sha256_hex(&std::fs::read(p).map_err(&io)?),
                })
            })
            .collect::<CliResult<Vec<_>>>()?;
        let mut outputs = BTreeMap::new();
        for sub in [DATA_DIR, SERIES_DIR, TABLES_DIR] {
            let dir = self.out.join(sub);
            let Ok(entries) = std::fs::read_dir(&dir) else {
                continue;
            };
            for entry in entries {
                let p = entry.map_err(&io)?.path();
                let name = format!(
                    "{sub}/{}",
                    p.file_name().expect("directory entry").to_string_lossy()
                );
                outputs.insert(name, sha256_hex(&std::fs::read(&p).map_err(&io)?));
            }
        }
        outputs.insert(REPORT_FILE.into(), sha256_hex(md.as_bytes()));
        let m = Manifest {
            tool: "hrisk",
            version: env!("CARGO_PKG_VERSION"),
            core_version: hrisk_core::VERSION,
            seed: self.cfg.seed,
            config_sha256: sha256_hex(&self.config_bytes),
            inputs,
            outputs,
        };
        let json = serde_json::to_string_pretty(&m).expect("manifest serializes");
        std::fs::write(self.out.join(MANIFEST_FILE), json + "\n").map_err(&io)
    }
}

fn summary_table(title: &str) -> Table {
    Table::new(
        title,
        &[
            "variable",
            "n",
            "mean",
            "std_dev",
            "min",
            "max",
            "skewness",
            "excess_kurtosis",
            "jb",
            "jb_p",
            "q1",
            "q1_p",
        ],
    )
}

fn push_summary(t: &mut Table, s: &TimeSeries) -> hrisk_core::Result<()> {
    let d = describe(s)?;
    let test = |x: Option<hrisk_core::data::TestStat>| -> [Cell; 2] {
        match x {
            Some(x) => [x.statistic.into(), x.p_value.into()],
            None => ["".into(), "".into()],
        }
    };
    let mut row: Vec<Cell> = vec![
        s.id().into(),
        d.n.into(),
        d.mean.into(),
        d.std_dev.into(),
        d.min.into(),
        d.max.into(),
        d.skewness.into(),
        d.excess_kurtosis.into(),
    ];
    row.extend(test(d.jarque_bera));
    row.extend(test(d.ljung_box_q1));
    t.push(row);
    Ok(())
}

fn proportions_table(title: &str, eigenvalues: &[f64], proportions: &[f64], k: usize) -> Table {
    let mut t = Table::new(
        title,
        &["component", "eigenvalue", "proportion", "cumulative"],
    )
    .digits(4);
    let mut cum = 0.0;
    for c in 0..k {
        cum += proportions[c];
        t.push(vec![
            format!("PC{}", c + 1).into(),
            eigenvalues[c].into(),
            proportions[c].into(),
            cum.into(),
        ]);
    }
    t
}

fn ols_table(title: &str) -> Table {
    Table::new(
        title,
        &[
            "model",
            "beta",
            "coef",
            "hac_se",
            "t_stat",
            "p_value",
            "adj_r2",
            "adj_r2_pct",
            "n",
            "nw_lag",
        ],
    )
}

fn push_ols_row(t: &mut Table, name: &str, fit: &PredictiveFit) {
    let o: &RegressionFit = &fit.ols;
    let k = o.index_of(&fit.index_id).expect("index is a regressor");
    t.push(vec![
        name.into(),
        coef_cell(o.coefficients[k], o.hac_se[k], o.p_values[k]).into(),
        o.coefficients[k].into(),
        o.hac_se[k].into(),
        o.t_stats[k].into(),
        o.p_values[k].into(),
        o.adj_r2.into(),
        (100.0 * o.adj_r2).into(),
        o.n.into(),
        o.nw_lag.into(),
    ]);
}

fn quantile_table(title: &str) -> Table {
    Table::new(
        title,
        &[
            "model",
            "beta",
            "coef",
            "se",
            "z_stat",
            "p_value",
            "intercept",
            "objective",
            "n",
        ],
    )
}

fn push_quantile_row(t: &mut Table, name: &str, q: &QuantileFit) {
    // the index is the first regressor after the intercept
    let k = 1;
    t.push(vec![
        name.into(),
        coef_cell(q.coefficients[k], q.se[k], q.p_values[k]).into(),
        q.coefficients[k].into(),
        q.se[k].into(),
        q.z_stats[k].into(),
        q.p_values[k].into(),
        q.coefficients[0].into(),
        q.objective.into(),
        q.n.into(),
    ]);
}

fn push_subsample_rows(t: &mut Table, period: &str, fit: &PredictiveFit) {
    let o = &fit.ols;
    let k = o.index_of(&fit.index_id).expect("index is a regressor");
    t.push(vec![
        period.into(),
        "OLS".into(),
        coef_cell(o.coefficients[k], o.hac_se[k], o.p_values[k]).into(),
        o.coefficients[k].into(),
        o.hac_se[k].into(),
        o.p_values[k].into(),
        o.n.into(),
    ]);
    for q in &fit.quantiles {
        let k = q.index_of(&fit.index_id).expect("index is a regressor");
        t.push(vec![
            period.into(),
            format!("Q({})", q.tau).into(),
            coef_cell(q.coefficients[k], q.se[k], q.p_values[k]).into(),
            q.coefficients[k].into(),
            q.se[k].into(),
            q.p_values[k].into(),
            q.n.into(),
        ]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_seeds_differ() {
        let s: Vec<u64> = (0..10).map(|k| derive_seed(42, k)).collect();
        let mut u = s.clone();
        u.sort_unstable();
        u.dedup();
        assert_eq!(u.len(), 10);
        assert_eq!(derive_seed(42, 3), derive_seed(42, 3));
    }
}
