//! Housing risk index: the first principal component of a panel of
//! conditional volatilities, z-scored.

use crate::data::{Panel, TimeSeries};
use crate::error::{Error, Result};
use crate::pca::{self, PcaMode};
use crate::stats;
use crate::tgarch::TGarchFit;

/// Column names of the volatility panel, in housing-panel order.
pub const VOLATILITY_IDS: [&str; 10] = [
    "HOUST", "PERMIT", "HPRICE", "HSTMW", "HSTNE", "HSTSOU", "HSTW", "HSOLD", "SATSOLD", "MORINT",
];

pub const RISK_INDEX_ID: &str = "H";

#[derive(Debug, Clone, PartialEq)]
pub struct RiskIndex {
    pub ids: Vec<String>,
    /// PC1 loadings, one per volatility series.
    pub loadings: Vec<f64>,
    pub centers: Vec<f64>,
    pub scales: Vec<f64>,
    pub raw: TimeSeries,
    pub standardized: TimeSeries,
    pub explained_share: f64,
    /// Variance proportions of every component.
    pub proportions: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    pub mode: PcaMode,
    pub raw_mean: f64,
    pub raw_std: f64,
}

/// Collect the conditional volatilities `σ_i,t` of several fits into a panel.
pub fn build_volatility_panel(fits: &[TGarchFit], ids: &[impl AsRef<str>]) -> Result<Panel> {
    if fits.len() != ids.len() {
        return Err(Error::SchemaMismatch(format!(
            "{} fits for {} ids",
            fits.len(),
            ids.len()
        )));
    }
    let series: Vec<TimeSeries> = fits
        .iter()
        .zip(ids)
        .map(|(f, id)| f.volatility().with_id(id.as_ref()))
        .collect();
    Panel::from_series(series)
}

impl RiskIndex {
    /// Recompute the raw and standardized index for a panel using the stored
    /// loadings, centering and z-score constants.
    pub fn apply(&self, vol: &Panel) -> Result<(TimeSeries, TimeSeries)> {
        if vol.ids() != self.ids.as_slice() {
            return Err(Error::SchemaMismatch(format!(
                "index built on {:?}, panel has {:?}",
                self.ids,
                vol.ids()
            )));
        }
        let raw: Vec<f64> = (0..vol.len())
            .map(|t| {
                (0..vol.width())
                    .map(|j| {
                        self.loadings[j] * (vol.column_values(j)[t] - self.centers[j])
                            / self.scales[j]
                    })
                    .sum()
            })
            .collect();
        let z = raw
            .iter()
            .map(|r| (r - self.raw_mean) / self.raw_std)
            .collect();
        Ok((
            TimeSeries::new("raw", vol.start(), raw)?,
            TimeSeries::new(RISK_INDEX_ID, vol.start(), z)?,
        ))
    }
}

/// Fit PCA to the volatility panel and z-score its first component.
pub fn build_risk_index(vol: &Panel, mode: PcaMode) -> Result<RiskIndex> {
    if vol.len() < 24 {
        return Err(Error::TooShort {
            needed: 24,
            got: vol.len(),
        });
    }
    let model = pca::fit_pca(vol, mode)?;
    let pc1 = pca::scores(&model, vol, 1)?.remove(0).series;
    let raw_mean = stats::mean(pc1.values());
    let raw_std = stats::std_dev(pc1.values());
    if !(raw_std > 0.0) {
        return Err(Error::ZeroVariance("PC1".into()));
    }
    let z = pc1
        .values()
        .iter()
        .map(|r| (r - raw_mean) / raw_std)
        .collect();
    Ok(RiskIndex {
        ids: model.ids.clone(),
        loadings: model.loadings[0].clone(),
        centers: model.centers.clone(),
        scales: model.scales.clone(),
        raw: pc1.with_id("raw"),
        standardized: TimeSeries::new(RISK_INDEX_ID, vol.start(), z)?,
        explained_share: model.proportions[0],
        proportions: model.proportions,
        eigenvalues: model.eigenvalues,
        mode,
        raw_mean,
        raw_std,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::date::YearMonth;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn planted(n: usize, seed: u64) -> (Panel, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 0.05).unwrap();
        // positive, persistent common volatility component
        let mut c = Vec::with_capacity(n);
        let mut level: f64 = 0.0;
        for _ in 0..n {
            level = 0.9 * level + 0.3 * noise.sample(&mut rng) / 0.05;
            c.push(1.0 + 0.2 * level.exp());
        }
        let cols = (0..10)
            .map(|j| {
                let w = 0.5 + 0.1 * j as f64;
                c.iter().map(|v| w * v + noise.sample(&mut rng)).collect()
            })
            .collect();
        let ids = VOLATILITY_IDS.iter().map(|s| s.to_string()).collect();
        (
            Panel::new(YearMonth::new(1971, 1).unwrap(), ids, cols).unwrap(),
            c,
        )
    }

    #[test]
    fn standardized_moments() {
        let (p, _) = planted(300, 1);
        let idx = build_risk_index(&p, PcaMode::Covariance).unwrap();
        let h = idx.standardized.values();
        assert!(stats::mean(h).abs() < 1e-8);
        assert!((stats::std_dev(h) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn recovers_planted_component() {
        let (p, c) = planted(400, 2);
        let idx = build_risk_index(&p, PcaMode::Covariance).unwrap();
        let r = stats::pearson(idx.standardized.values(), &c).unwrap();
        assert!(r.abs() > 0.95, "{r}");
        assert!(idx.loadings.iter().all(|l| *l >= 0.0));
        assert!(idx.explained_share > 0.5 && idx.explained_share <= 1.0);
    }

    #[test]
    fn round_trip_from_loadings() {
        let (p, _) = planted(120, 3);
        let idx = build_risk_index(&p, PcaMode::Correlation).unwrap();
        let (raw, h) = idx.apply(&p).unwrap();
        for (a, b) in h.values().iter().zip(idx.standardized.values()) {
            assert!((a - b).abs() < 1e-10);
        }
        for (a, b) in raw.values().iter().zip(idx.raw.values()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn short_panel_rejected() {
        let (p, _) = planted(20, 4);
        assert!(matches!(
            build_risk_index(&p, PcaMode::Covariance),
            Err(Error::TooShort { .. })
        ));
    }
}
