//! Synthetic input panels with known ground truth.
//!
//! One latent macro factor `f_t` follows an AR(1) with threshold-GARCH
//! innovations. It drives a 76-column macro panel and the conditional means
//! of ten housing series. The housing variances follow their own threshold
//! recursions plus a shared term proportional to the factor variance, so the
//! ten volatilities co-move. The true index is the z-scored cross-sectional
//! mean of the ten true volatilities, and returns load on its lag.

use std::path::Path;

use hrisk_core::data::{write_panel, Panel};
use hrisk_core::risk_index::VOLATILITY_IDS;
use hrisk_core::{stats, Error, TimeSeries, YearMonth};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{CliError, CliResult};

pub const MACRO_COLUMNS: usize = 76;
pub const RETURN_ID: &str = "REIT";
pub const CONTROL_IDS: [&str; 12] = [
    "MKT_RF", "SMB", "HML", "MOM", "CRDSPR", "D12", "E12", "BM", "LTY", "NTIS", "SVAR", "DFY",
];
pub const ECON_IDS: [&str; 6] = ["NBER", "CFNAI", "MEI", "KCFSI", "IPG", "USSRP"];
const BURN_IN: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationSettings {
    pub n: usize,
    pub start: String,
    pub seed: u64,
    /// Loading of returns on the lagged true index.
    pub index_loading: f64,
    pub return_noise_sd: f64,
}

impl Default for SimulationSettings {
    fn default() -> Self {
        Self {
            n: 576,
            start: "1971-01".into(),
            seed: 42,
            index_loading: 0.1,
            return_noise_sd: 0.3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Gjr {
    pub omega: f64,
    pub alpha: f64,
    pub phi: f64,
    pub gamma: f64,
}

impl Gjr {
    fn next(&self, h: f64, e: f64) -> f64 {
        let neg = if e < 0.0 { 1.0 } else { 0.0 };
        self.omega + (self.alpha + self.gamma * neg) * e * e + self.phi * h
    }

    fn persistence(&self) -> f64 {
        self.alpha + self.phi + 0.5 * self.gamma
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HousingTruth {
    pub id: String,
    pub variance: Gjr,
    /// Weight of the factor variance in this series' variance.
    pub common_weight: f64,
    pub own_ar: f64,
    pub factor_loading: f64,
    pub shock_correlation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Truth {
    pub settings: SimulationSettings,
    pub factor_ar: f64,
    pub factor_variance: Gjr,
    pub macro_loadings: Vec<f64>,
    pub housing: Vec<HousingTruth>,
    pub return_intercept: f64,
    /// Return loadings on MKT_RF, SMB and HML.
    pub return_factor_loadings: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedData {
    pub macro_panel: Panel,
    pub housing: Panel,
    pub returns: Panel,
    pub controls: Panel,
    pub nber: Panel,
    pub vix: Panel,
    pub econ: Panel,
    pub factor: TimeSeries,
    /// True volatilities `σ_i,t`.
    pub volatility: Panel,
    pub true_index: TimeSeries,
    pub truth: Truth,
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    Distribution::<f64>::sample(&StandardNormal, rng)
}

fn invalid(m: String) -> CliError {
    CliError::Stage {
        stage: "simulate",
        source: Error::InvalidArgument(m),
    }
}

pub fn simulate(settings: &SimulationSettings) -> CliResult<SimulatedData> {
    let start: YearMonth = settings
        .start
        .parse()
        .map_err(|e| invalid(format!("start date: {e}")))?;
    if settings.n < 2 {
        return Err(invalid(format!("n = {} is too short", settings.n)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let n = settings.n;
    let total = BURN_IN + n + 1;

    let factor_ar = 0.5;
    let fv = Gjr {
        omega: 0.1,
        alpha: 0.1,
        phi: 0.75,
        gamma: 0.1,
    };
    let housing: Vec<HousingTruth> = VOLATILITY_IDS
        .iter()
        .enumerate()
        .map(|(i, id)| HousingTruth {
            id: id.to_string(),
            variance: Gjr {
                omega: 0.05 + 0.01 * i as f64,
                alpha: 0.08,
                phi: 0.7,
                gamma: 0.1,
            },
            common_weight: 0.15 + 0.02 * i as f64,
            own_ar: 0.2,
            factor_loading: 0.1,
            shock_correlation: 0.3,
        })
        .collect();
    for h in std::iter::once(&fv).chain(housing.iter().map(|h| &h.variance)) {
        if h.persistence() >= 1.0 {
            return Err(CliError::Stage {
                stage: "simulate",
                source: Error::NonStationaryParams(format!("persistence {} ≥ 1", h.persistence())),
            });
        }
    }

    // latent factor
    let mut f = vec![0.0; total];
    let mut hf = vec![fv.omega / (1.0 - fv.persistence()); total];
    let mut u = vec![0.0; total];
    for t in 0..total {
        if t > 0 {
            hf[t] = fv.next(hf[t - 1], u[t - 1]);
        }
        u[t] = hf[t].sqrt() * normal(&mut rng);
        f[t] = if t > 0 { factor_ar * f[t - 1] } else { 0.0 } + u[t];
    }

    // housing series and their true volatilities
    let k = housing.len();
    let mut x = vec![vec![0.0; total]; k];
    let mut sigma = vec![vec![0.0; total]; k];
    for (i, spec) in housing.iter().enumerate() {
        let g = spec.variance;
        let mean_hf = fv.omega / (1.0 - fv.persistence());
        let mut h = (g.omega + spec.common_weight * mean_hf) / (1.0 - g.persistence());
        let mut e_prev = 0.0;
        let r = spec.shock_correlation;
        for t in 0..total {
            if t > 0 {
                h = g.next(h, e_prev) + spec.common_weight * hf[t];
            }
            let z = r * u[t] / hf[t].sqrt() + (1.0 - r * r).sqrt() * normal(&mut rng);
            let e = h.sqrt() * z;
            sigma[i][t] = h.sqrt();
            x[i][t] = if t > 0 {
                spec.own_ar * x[i][t - 1] + spec.factor_loading * f[t - 1]
            } else {
                0.0
            } + e;
            e_prev = e;
        }
    }

    // true index over the kept window plus one leading month for the lag
    let keep = BURN_IN..total;
    let mean_sigma: Vec<f64> = keep
        .clone()
        .map(|t| sigma.iter().map(|s| s[t]).sum::<f64>() / k as f64)
        .collect();
    let (m, s) = (stats::mean(&mean_sigma), stats::std_dev(&mean_sigma));
    let h_true: Vec<f64> = mean_sigma.iter().map(|v| (v - m) / s).collect();

    let macro_loadings: Vec<f64> = (0..MACRO_COLUMNS)
        .map(|_| rng.random_range(0.4..1.2))
        .collect();
    let macro_cols: Vec<Vec<f64>> = macro_loadings
        .iter()
        .map(|l| {
            keep.clone()
                .skip(1)
                .map(|t| l * f[t] + normal(&mut rng))
                .collect()
        })
        .collect();

    let mut controls: Vec<Vec<f64>> = Vec::with_capacity(CONTROL_IDS.len());
    for sd in [0.5, 0.3, 0.3, 0.4] {
        controls.push((0..n).map(|_| sd * normal(&mut rng)).collect());
    }
    for _ in 4..CONTROL_IDS.len() {
        let mut v = vec![0.0; n];
        let mut prev = normal(&mut rng);
        for slot in v.iter_mut() {
            prev = 0.9 * prev + (1.0f64 - 0.81).sqrt() * normal(&mut rng);
            *slot = prev;
        }
        controls.push(v);
    }

    let return_intercept = 0.2;
    let ff = [0.9, 0.3, 0.4];
    let returns: Vec<f64> = (0..n)
        .map(|t| {
            return_intercept
                + settings.index_loading * h_true[t]
                + (0..3).map(|j| ff[j] * controls[j][t]).sum::<f64>()
                + settings.return_noise_sd * normal(&mut rng)
        })
        .collect();

    let f_kept: Vec<f64> = keep.clone().skip(1).map(|t| f[t]).collect();
    let h_kept = &h_true[1..];
    let nber: Vec<f64> = f_kept
        .iter()
        .map(|v| if *v < -1.0 { 1.0 } else { 0.0 })
        .collect();
    let vix: Vec<f64> = h_kept
        .iter()
        .map(|h| 20.0 + 4.0 * h + 2.0 * normal(&mut rng))
        .collect();
    let mut econ = vec![nber.clone()];
    for (wf, wh) in [(0.5, 0.0), (0.4, 0.0), (0.0, 0.6), (0.3, 0.0), (0.0, 0.3)] {
        econ.push(
            f_kept
                .iter()
                .zip(h_kept)
                .map(|(fv, hv)| wf * fv + wh * hv + 0.5 * normal(&mut rng))
                .collect(),
        );
    }

    let ids = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let map = |r: Result<Panel, Error>| {
        r.map_err(|source| CliError::Stage {
            stage: "simulate",
            source,
        })
    };
    let vol_ids: Vec<String> = housing.iter().map(|h| h.id.clone()).collect();
    let data = SimulatedData {
        macro_panel: map(Panel::new(
            start,
            (1..=MACRO_COLUMNS).map(|j| format!("M{j:02}")).collect(),
            macro_cols,
        ))?,
        housing: map(Panel::new(
            start,
            vol_ids.clone(),
            x.iter()
                .map(|c| keep.clone().skip(1).map(|t| c[t]).collect())
                .collect(),
        ))?,
        returns: map(Panel::new(start, ids(&[RETURN_ID]), vec![returns]))?,
        controls: map(Panel::new(start, ids(&CONTROL_IDS), controls))?,
        nber: map(Panel::new(start, ids(&["NBER"]), vec![nber]))?,
        vix: map(Panel::new(start, ids(&["VIX"]), vec![vix]))?,
        econ: map(Panel::new(start, ids(&ECON_IDS), econ))?,
        factor: TimeSeries::new("F", start, f_kept).map_err(|source| CliError::Stage {
            stage: "simulate",
            source,
        })?,
        volatility: map(Panel::new(
            start,
            vol_ids,
            sigma
                .iter()
                .map(|c| keep.clone().skip(1).map(|t| c[t]).collect())
                .collect(),
        ))?,
        true_index: TimeSeries::new("H_TRUE", start, h_kept.to_vec()).map_err(|source| {
            CliError::Stage {
                stage: "simulate",
                source,
            }
        })?,
        truth: Truth {
            settings: settings.clone(),
            factor_ar,
            factor_variance: fv,
            macro_loadings,
            housing,
            return_intercept,
            return_factor_loadings: ff,
        },
    };
    Ok(data)
}

/// Config that runs the pipeline on a simulated directory.
pub fn example_config(seed: u64) -> String {
    format!(
        "# Synthetic inputs written by `hrisk simulate`.\n\
         seed = {seed}\n\
         output = \"report\"\n\
         \n\
         [inputs]\n\
         date_column = \"date\"\n\
         macro = \"macro.csv\"\n\
         housing = \"housing.csv\"\n\
         returns = \"returns.csv\"\n\
         return_column = \"{RETURN_ID}\"\n\
         controls = \"controls.csv\"\n\
         nber = \"nber.csv\"\n\
         vix = \"vix.csv\"\n\
         econ = \"econ.csv\"\n"
    )
}

/// Write every simulated panel, the truth manifest and a matching config.
pub fn write_simulation(dir: &Path, data: &SimulatedData) -> CliResult<()> {
    let io = CliError::output("simulate");
    std::fs::create_dir_all(dir).map_err(&io)?;
    let stage = CliError::stage("simulate");
    for (name, p) in [
        ("macro.csv", &data.macro_panel),
        ("housing.csv", &data.housing),
        ("returns.csv", &data.returns),
        ("controls.csv", &data.controls),
        ("nber.csv", &data.nber),
        ("vix.csv", &data.vix),
        ("econ.csv", &data.econ),
        ("truth_volatility.csv", &data.volatility),
    ] {
        write_panel(&dir.join(name), p).map_err(&stage)?;
    }
    let series =
        Panel::from_series(vec![data.factor.clone(), data.true_index.clone()]).map_err(&stage)?;
    write_panel(&dir.join("truth_series.csv"), &series).map_err(&stage)?;
    let json = serde_json::to_string_pretty(&data.truth).expect("truth serializes");
    std::fs::write(dir.join("truth.json"), json + "\n").map_err(&io)?;
    std::fs::write(
        dir.join("config.toml"),
        example_config(data.truth.settings.seed),
    )
    .map_err(&io)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use hrisk_core::{fit_pca, PcaMode};

    fn small(seed: u64) -> SimulatedData {
        simulate(&SimulationSettings {
            n: 240,
            seed,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn shapes_and_alignment() {
        let d = small(1);
        assert_eq!(d.macro_panel.width(), MACRO_COLUMNS);
        assert_eq!(d.housing.width(), 10);
        assert_eq!(d.controls.ids(), CONTROL_IDS.map(String::from).as_slice());
        for p in [&d.macro_panel, &d.housing, &d.returns, &d.controls, &d.econ] {
            assert_eq!(p.len(), 240);
            assert_eq!(p.start(), YearMonth::new(1971, 1).unwrap());
        }
        let h = d.true_index.values();
        assert!(stats::mean(h).abs() < 0.2);
    }

    #[test]
    fn same_seed_same_data() {
        assert_eq!(small(7), small(7));
        assert_ne!(small(7).returns, small(8).returns);
    }

    #[test]
    fn macro_pc1_tracks_factor() {
        let d = small(3);
        let m = fit_pca(&d.macro_panel, PcaMode::Correlation).unwrap();
        let s = hrisk_core::scores(&m, &d.macro_panel, 1).unwrap();
        let r = stats::pearson(s[0].series.values(), d.factor.values()).unwrap();
        assert!(r.abs() > 0.95, "{r}");
    }
}
