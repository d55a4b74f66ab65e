//! Pipeline configuration read from a TOML file.
//!
//! Relative paths are resolved against the directory holding the config
//! file. Every key except `[inputs]` has a default; [`DEFAULTS_HELP`] lists
//! them for `--help`.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use hrisk_core::{NwLag, PcaMode, TransformKind};
use serde::{de, Deserialize, Deserializer};

use crate::error::{CliError, CliResult};

pub const DEFAULTS_HELP: &str = "\
Config keys and defaults (TOML):
  seed = 0                        base seed for every stochastic stage
  output = \"report\"               bundle directory (HRISK_OUT_DIR and --out override)
  [inputs]
    date_column = \"date\"
    macro, housing, returns, controls   required CSV paths
    return_column = \"REIT\"        dependent column in the returns file
    nber, vix, econ               optional CSV paths
  [transforms.macro] / [transforms.housing]
    COLUMN = [\"log\", \"diff\"]      applied in order; log|diff|pct_change|standardize
  [pca]
    factor_mode = \"correlation\"   macro factor extraction
    index_mode = \"covariance\"     risk index over the volatility panel
  [tgarch]
    restarts = 20
    max_evals = 20000             per restart
    tolerance = 1e-8              simplex diameter
    standardize = true            z-score housing series before fitting
  [regression]
    lag_index = 1                 index lag in months
    lead = 0                      dependent lead in months
    quantiles = [0.25, 0.5, 0.75, 0.95]
    nw_lag = \"auto\"               auto = floor(4 (n/100)^(2/9)), or an integer
    bootstrap_reps = 499          quantile standard errors
    ff_factors = [\"MKT_RF\", \"SMB\", \"HML\"]
    controls = []                 extra control columns for a combined OLS row
  [selection]
    top_k = 20
    always_include = []
  [breaks]
    max_breaks = 5
    trim = 0.15
    design = \"fama-french\"        fama-french | univariate
  [forecast]
    ratio = 0.8
    models = [\"univariate\", \"nber\", \"multivariate\", \"fama-french\"]
";

fn parse_str<'de, D, T>(d: D) -> Result<T, D::Error>
where
    D: Deserializer<'de>,
    T: FromStr,
    T::Err: Display,
{
    let s = String::deserialize(d)?;
    s.parse().map_err(de::Error::custom)
}

/// `nw_lag` accepts `"auto"`, an integer, or an integer string.
fn parse_nw_lag<'de, D: Deserializer<'de>>(d: D) -> Result<NwLag, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Int(usize),
        Text(String),
    }
    match Raw::deserialize(d)? {
        Raw::Int(k) => Ok(NwLag::Fixed(k)),
        Raw::Text(s) => s.parse().map_err(de::Error::custom),
    }
}

fn parse_transforms<'de, D>(d: D) -> Result<BTreeMap<String, Vec<TransformKind>>, D::Error>
where
    D: Deserializer<'de>,
{
    let raw = BTreeMap::<String, Vec<String>>::deserialize(d)?;
    raw.into_iter()
        .map(|(col, steps)| {
            let kinds = steps
                .iter()
                .map(|s| s.parse().map_err(de::Error::custom))
                .collect::<Result<Vec<_>, _>>()?;
            Ok((col, kinds))
        })
        .collect()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    pub inputs: Inputs,
    #[serde(default)]
    pub transforms: Transforms,
    #[serde(default)]
    pub pca: PcaSection,
    #[serde(default)]
    pub tgarch: TGarchSection,
    #[serde(default)]
    pub regression: RegressionSection,
    #[serde(default)]
    pub selection: SelectionSection,
    #[serde(default)]
    pub breaks: BreaksSection,
    #[serde(default)]
    pub forecast: ForecastSection,
}

fn default_output() -> PathBuf {
    PathBuf::from("report")
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inputs {
    #[serde(default = "default_date_column")]
    pub date_column: String,
    #[serde(rename = "macro")]
    pub macro_panel: PathBuf,
    pub housing: PathBuf,
    pub returns: PathBuf,
    #[serde(default = "default_return_column")]
    pub return_column: String,
    pub controls: PathBuf,
    pub nber: Option<PathBuf>,
    pub vix: Option<PathBuf>,
    pub econ: Option<PathBuf>,
}

fn default_date_column() -> String {
    "date".into()
}

fn default_return_column() -> String {
    "REIT".into()
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Transforms {
    #[serde(rename = "macro", default, deserialize_with = "parse_transforms")]
    pub macro_panel: BTreeMap<String, Vec<TransformKind>>,
    #[serde(default, deserialize_with = "parse_transforms")]
    pub housing: BTreeMap<String, Vec<TransformKind>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PcaSection {
    #[serde(deserialize_with = "parse_str")]
    pub factor_mode: PcaMode,
    #[serde(deserialize_with = "parse_str")]
    pub index_mode: PcaMode,
}

impl Default for PcaSection {
    fn default() -> Self {
        Self {
            factor_mode: PcaMode::Correlation,
            index_mode: PcaMode::Covariance,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TGarchSection {
    pub restarts: usize,
    pub max_evals: usize,
    pub tolerance: f64,
    pub standardize: bool,
}

impl Default for TGarchSection {
    fn default() -> Self {
        Self {
            restarts: 20,
            max_evals: 20_000,
            tolerance: 1e-8,
            standardize: true,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegressionSection {
    pub lag_index: usize,
    pub lead: usize,
    pub quantiles: Vec<f64>,
    #[serde(deserialize_with = "parse_nw_lag")]
    pub nw_lag: NwLag,
    pub bootstrap_reps: usize,
    pub ff_factors: Vec<String>,
    pub controls: Vec<String>,
}

impl Default for RegressionSection {
    fn default() -> Self {
        Self {
            lag_index: 1,
            lead: 0,
            quantiles: vec![0.25, 0.5, 0.75, 0.95],
            nw_lag: NwLag::Auto,
            bootstrap_reps: 499,
            ff_factors: vec!["MKT_RF".into(), "SMB".into(), "HML".into()],
            controls: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SelectionSection {
    pub top_k: usize,
    pub always_include: Vec<String>,
}

impl Default for SelectionSection {
    fn default() -> Self {
        Self {
            top_k: 20,
            always_include: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BreakDesign {
    Univariate,
    FamaFrench,
}

impl FromStr for BreakDesign {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "univariate" => Ok(Self::Univariate),
            "fama-french" => Ok(Self::FamaFrench),
            other => Err(format!(
                "unknown break design '{other}' (univariate | fama-french)"
            )),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BreaksSection {
    pub max_breaks: usize,
    pub trim: f64,
    #[serde(deserialize_with = "parse_str")]
    pub design: BreakDesign,
}

impl Default for BreaksSection {
    fn default() -> Self {
        Self {
            max_breaks: 5,
            trim: 0.15,
            design: BreakDesign::FamaFrench,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForecastModel {
    Univariate,
    Nber,
    Multivariate,
    FamaFrench,
}

impl FromStr for ForecastModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "univariate" => Ok(Self::Univariate),
            "nber" => Ok(Self::Nber),
            "multivariate" => Ok(Self::Multivariate),
            "fama-french" => Ok(Self::FamaFrench),
            other => Err(format!(
                "unknown forecast model '{other}' (univariate | nber | multivariate | fama-french)"
            )),
        }
    }
}

impl<'de> Deserialize<'de> for ForecastModel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        parse_str(d)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForecastSection {
    pub ratio: f64,
    pub models: Vec<ForecastModel>,
}

impl Default for ForecastSection {
    fn default() -> Self {
        Self {
            ratio: 0.8,
            models: vec![
                ForecastModel::Univariate,
                ForecastModel::Nber,
                ForecastModel::Multivariate,
                ForecastModel::FamaFrench,
            ],
        }
    }
}

impl PipelineConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.message().to_string()))
    }

    /// Read, parse and validate a config file, resolving relative paths
    /// against its directory.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        cfg.resolve(path.parent().unwrap_or(Path::new(".")));
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve(&mut self, base: &Path) {
        let abs = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        let i = &mut self.inputs;
        for p in [
            &mut i.macro_panel,
            &mut i.housing,
            &mut i.returns,
            &mut i.controls,
        ] {
            abs(p);
        }
        for p in [&mut i.nber, &mut i.vix, &mut i.econ].into_iter().flatten() {
            abs(p);
        }
        abs(&mut self.output);
    }

    /// Input paths in a fixed order, labelled by role.
    pub fn input_files(&self) -> Vec<(&'static str, &Path)> {
        let i = &self.inputs;
        let mut v: Vec<(&'static str, &Path)> = vec![
            ("macro", &i.macro_panel),
            ("housing", &i.housing),
            ("returns", &i.returns),
            ("controls", &i.controls),
        ];
        for (name, p) in [("nber", &i.nber), ("vix", &i.vix), ("econ", &i.econ)] {
            if let Some(p) = p {
                v.push((name, p));
            }
        }
        v
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Config(m));
        let r = &self.regression;
        if let Some(q) = r.quantiles.iter().find(|q| !(**q > 0.0 && **q < 1.0)) {
            return bad(format!("regression.quantiles: {q} outside (0, 1)"));
        }
        if r.bootstrap_reps < 2 {
            return bad("regression.bootstrap_reps must be at least 2".into());
        }
        if !(self.breaks.trim > 0.0 && self.breaks.trim < 0.5) {
            return bad(format!(
                "breaks.trim: {} outside (0, 0.5)",
                self.breaks.trim
            ));
        }
        if !(self.forecast.ratio > 0.0 && self.forecast.ratio < 1.0) {
            return bad(format!(
                "forecast.ratio: {} outside (0, 1)",
                self.forecast.ratio
            ));
        }
        if self.forecast.models.is_empty() {
            return bad("forecast.models is empty".into());
        }
        let t = &self.tgarch;
        if t.restarts == 0 || t.max_evals == 0 || !(t.tolerance > 0.0) {
            return bad("tgarch: restarts, max_evals and tolerance must be positive".into());
        }
        if self.selection.top_k == 0 {
            return bad("selection.top_k must be positive".into());
        }
        for (_, p) in self.input_files() {
            if !p.is_file() {
                return Err(CliError::MissingInput(p.to_path_buf()));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [inputs]
        macro = "m.csv"
        housing = "h.csv"
        returns = "r.csv"
        controls = "c.csv"
    "#;

    #[test]
    fn defaults_fill_missing_sections() {
        let c = PipelineConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.seed, 0);
        assert_eq!(c.pca.factor_mode, PcaMode::Correlation);
        assert_eq!(c.pca.index_mode, PcaMode::Covariance);
        assert_eq!(c.regression.quantiles, vec![0.25, 0.5, 0.75, 0.95]);
        assert_eq!(c.regression.nw_lag, NwLag::Auto);
        assert_eq!(c.breaks.design, BreakDesign::FamaFrench);
        assert_eq!(c.forecast.models.len(), 4);
        assert_eq!(c.inputs.return_column, "REIT");
    }

    #[test]
    fn shipped_example_matches_defaults() {
        let example = PipelineConfig::parse(include_str!("../../../config/example.toml")).unwrap();
        let minimal = PipelineConfig::parse(MINIMAL).unwrap();
        assert_eq!(
            format!("{:?}", example.tgarch),
            format!("{:?}", minimal.tgarch)
        );
        assert_eq!(
            format!("{:?}", example.regression),
            format!("{:?}", minimal.regression)
        );
        assert_eq!(
            format!("{:?}", example.breaks),
            format!("{:?}", minimal.breaks)
        );
        assert_eq!(
            format!("{:?}", example.forecast),
            format!("{:?}", minimal.forecast)
        );
        assert!(example.transforms.macro_panel.is_empty());
    }

    #[test]
    fn typed_fields_parse() {
        let text = format!(
            "{MINIMAL}\n[regression]\nnw_lag = 4\n[pca]\nindex_mode = \"correlation\"\n\
             [transforms.macro]\nM01 = [\"log\", \"diff\"]\n[forecast]\nmodels = [\"univariate\"]\n"
        );
        let c = PipelineConfig::parse(&text).unwrap();
        assert_eq!(c.regression.nw_lag, NwLag::Fixed(4));
        assert_eq!(c.pca.index_mode, PcaMode::Correlation);
        assert_eq!(
            c.transforms.macro_panel["M01"],
            vec![TransformKind::Log, TransformKind::Diff]
        );
        assert_eq!(c.forecast.models, vec![ForecastModel::Univariate]);
    }

    #[test]
    fn bad_values_are_config_errors() {
        for extra in [
            "[pca]\nfactor_mode = \"spectral\"",
            "[transforms.housing]\nHOUST = [\"cube\"]",
            "[forecast]\nmodels = [\"arima\"]",
            "unknown_key = 1",
        ] {
            let e = PipelineConfig::parse(&format!("{MINIMAL}\n{extra}")).unwrap_err();
            assert_eq!(e.exit_code(), 1, "{extra}");
        }
        let mut c = PipelineConfig::parse(MINIMAL).unwrap();
        c.breaks.trim = 0.5;
        assert_eq!(c.validate().unwrap_err().exit_code(), 1);
    }

    #[test]
    fn missing_input_names_path() {
        let mut c = PipelineConfig::parse(MINIMAL).unwrap();
        c.resolve(Path::new("/nonexistent"));
        let e = c.validate().unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("/nonexistent/m.csv"));
    }
}
