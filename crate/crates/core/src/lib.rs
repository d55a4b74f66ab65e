//! Housing-market volatility and risk-index estimation.
//!
//! Monthly time-series utilities, principal components, a factor-augmented
//! bivariate threshold GARCH, the housing risk index built from its
//! conditional volatilities, predictive and quantile regressions with HAC
//! inference, BIC model selection, multiple structural breaks and
//! out-of-sample forecast evaluation.

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod breaks;
pub mod data;
pub mod date;
pub mod eigen;
pub mod error;
pub mod forecast;
pub mod linalg;
pub mod optim;
pub mod pca;
pub mod regression;
pub mod risk_index;
pub mod selection;
pub mod stats;
pub mod tgarch;

pub use breaks::{find_breaks, subsample_fit, BreakpointSet, SubsampleFit};
pub use data::{
    corr_matrix, describe, load_panel, transform, CorrMatrix, Panel, SummaryStats, TimeSeries,
    TransformKind,
};
pub use date::YearMonth;
pub use error::{Error, Result};
pub use forecast::{evaluate, forecast_metrics, split_train_test, ForecastReport, ModelSpec};
pub use pca::{fit_pca, scores, PcaMode, PcaModel, ScoreSeries};
pub use regression::{
    ols_nw, predictive_regression, quantile_fit, Design, NwLag, PredictiveFit, PredictiveSpec,
    QuantileFit, QuantileOptions, RegressionFit,
};
pub use risk_index::{build_risk_index, build_volatility_panel, RiskIndex};
pub use selection::{enumerate_models, ModelEntry, ModelRanking};
pub use tgarch::{
    fit_tgarch, fit_var1, log_likelihood, simulate_tgarch, tgarch_filter, CovState, CovariancePath,
    EquationParams, TGarchConfig, TGarchFit, TGarchParams, VarCoefficients, VarFit,
};
