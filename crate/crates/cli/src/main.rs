use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hrisk_cli::config::DEFAULTS_HELP;
use hrisk_cli::{simulate, write_simulation, CliResult, Pipeline, SimulationSettings, OUT_DIR_ENV};
use hrisk_core::NwLag;

#[derive(Parser)]
#[command(name = "hrisk", version, about = "Housing volatility risk index pipeline", after_long_help = DEFAULTS_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Pipeline config file (TOML)
    #[arg(short, long, default_value = "config.toml")]
    config: PathBuf,
    /// Bundle directory; overrides HRISK_OUT_DIR and the config's `output`
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Seeded {
    #[command(flatten)]
    common: Common,
    /// Base seed; overrides the config's `seed`
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct RegressArgs {
    #[command(flatten)]
    common: Common,
    /// Dependent column in the returns file [default: inputs.return_column]
    #[arg(long)]
    dep: Option<String>,
    /// Index CSV with an `H` column [default: the bundle's series/risk_index.csv]
    #[arg(long)]
    index: Option<PathBuf>,
    /// Index lag in months [default: regression.lag_index = 1]
    #[arg(long)]
    lag: Option<usize>,
    /// Dependent lead in months [default: regression.lead = 0]
    #[arg(long)]
    lead: Option<usize>,
    /// Comma-separated control columns for an extra OLS row [default: none]
    #[arg(long, value_delimiter = ',')]
    controls: Option<Vec<String>>,
    /// Comma-separated quantiles [default: 0.25,0.5,0.75,0.95]
    #[arg(long, value_delimiter = ',')]
    quantiles: Option<Vec<f64>>,
    /// Newey-West lag, `auto` or an integer [default: auto]
    #[arg(long)]
    nw_lag: Option<NwLag>,
    /// Base seed for the quantile bootstrap
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ForecastArgs {
    #[command(flatten)]
    common: Common,
    /// Training share of the sample [default: 0.8]
    #[arg(long)]
    ratio: Option<f64>,
    /// Comma-separated models: univariate, nber, multivariate, fama-french [default: all]
    #[arg(long, value_delimiter = ',')]
    models: Option<Vec<String>>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Directory for the synthetic CSVs, truth manifest and config
    #[arg(short, long, default_value = "synthetic")]
    out: PathBuf,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Months to simulate
    #[arg(long, default_value_t = 576)]
    n: usize,
    /// Loading of returns on the lagged true index
    #[arg(long, default_value_t = 0.1)]
    loading: f64,
    /// First month (YYYY-MM)
    #[arg(long, default_value = "1971-01")]
    start: String,
}

#[derive(Subcommand)]
enum Command {
    /// Load inputs, apply transforms, write summary statistics
    Ingest(Common),
    /// Extract the macro factor by principal components
    Factor(Common),
    /// Fit a threshold GARCH per housing series and write the volatility panel
    Tgarch(Seeded),
    /// Build the risk index from the volatility panel
    Index(Common),
    /// Predictive OLS regressions with Newey-West errors
    Regress(RegressArgs),
    /// Predictive quantile regressions with bootstrap errors
    Quantile(RegressArgs),
    /// Rank control subsets by posterior probability
    Select(Common),
    /// Search for structural breaks and re-estimate on sub-samples
    Breaks(Seeded),
    /// Compare forecasting models on a chronological split
    Forecast(ForecastArgs),
    /// Write synthetic inputs with known ground truth
    Simulate(SimulateArgs),
    /// Run every stage in order
    Run(Seeded),
    /// Assemble REPORT.md and manifest.json from the bundle
    Report(Common),
}

fn pipeline(c: &Common, seed: Option<u64>) -> CliResult<Pipeline> {
    let out = c
        .out
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from));
    Pipeline::from_file(&c.config, out, seed)
}

fn regress_pipeline(a: RegressArgs) -> CliResult<Pipeline> {
    let mut p = pipeline(&a.common, a.seed)?;
    let r = &mut p.cfg.regression;
    if let Some(v) = a.lag {
        r.lag_index = v;
    }
    if let Some(v) = a.lead {
        r.lead = v;
    }
    if let Some(v) = a.controls {
        r.controls = v;
    }
    if let Some(v) = a.quantiles {
        r.quantiles = v;
    }
    if let Some(v) = a.nw_lag {
        r.nw_lag = v;
    }
    if let Some(v) = a.dep {
        p.cfg.inputs.return_column = v;
    }
    p.index_override = a.index;
    p.cfg.validate()?;
    Ok(p)
}

fn dispatch(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::Ingest(c) => pipeline(&c, None)?.stage("ingest"),
        Command::Factor(c) => pipeline(&c, None)?.stage("factor"),
        Command::Tgarch(s) => pipeline(&s.common, s.seed)?.stage("tgarch"),
        Command::Index(c) => pipeline(&c, None)?.stage("index"),
        Command::Regress(a) => regress_pipeline(a)?.stage("regress"),
        Command::Quantile(a) => regress_pipeline(a)?.stage("quantile"),
        Command::Select(c) => pipeline(&c, None)?.stage("select"),
        Command::Breaks(s) => pipeline(&s.common, s.seed)?.stage("breaks"),
        Command::Forecast(a) => {
            let mut p = pipeline(&a.common, None)?;
            if let Some(r) = a.ratio {
                p.cfg.forecast.ratio = r;
            }
            if let Some(m) = a.models {
                p.cfg.forecast.models = m
                    .iter()
                    .map(|s| s.parse().map_err(hrisk_cli::CliError::Config))
                    .collect::<CliResult<_>>()?;
            }
            p.cfg.validate()?;
            p.stage("forecast")
        }
        Command::Simulate(a) => {
            let settings = SimulationSettings {
                n: a.n,
                start: a.start,
                seed: a.seed,
                index_loading: a.loading,
                ..SimulationSettings::default()
            };
            write_simulation(&a.out, &simulate(&settings)?)
        }
        Command::Run(s) => pipeline(&s.common, s.seed)?.run(),
        Command::Report(c) => pipeline(&c, None)?.stage("report"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
