//! Principal components of a panel.
//!
//! Loadings are unit-norm eigenvectors of the covariance or correlation
//! matrix, ordered by descending eigenvalue. Each component is signed so
//! that its loadings sum to a nonnegative number (ties go to the first
//! nonzero loading being positive).

use std::fmt;
use std::str::FromStr;

use crate::data::{Panel, TimeSeries};
use crate::eigen::jacobi_eigen;
use crate::error::{Error, Result};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PcaMode {
    Covariance,
    Correlation,
}

impl FromStr for PcaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "covariance" | "cov" => Ok(Self::Covariance),
            "correlation" | "corr" => Ok(Self::Correlation),
            other => Err(Error::InvalidArgument(format!(
                "unknown PCA mode '{other}'"
            ))),
        }
    }
}

impl fmt::Display for PcaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Covariance => "covariance",
            Self::Correlation => "correlation",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub ids: Vec<String>,
    /// `loadings[c][j]`: weight of variable `j` in component `c`.
    pub loadings: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    pub proportions: Vec<f64>,
    pub centers: Vec<f64>,
    pub scales: Vec<f64>,
    pub mode: PcaMode,
    /// Maximum ‖A·v − e·v‖ over all eigenpairs, recorded at fit time.
    pub max_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSeries {
    /// 1-based.
    pub component_index: usize,
    pub series: TimeSeries,
}

fn apply_sign_convention(v: &mut [f64]) {
    let sum: f64 = v.iter().sum();
    let flip = if sum != 0.0 {
        sum < 0.0
    } else {
        v.iter().find(|x| **x != 0.0).is_some_and(|x| *x < 0.0)
    };
    if flip {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

pub fn fit_pca(p: &Panel, mode: PcaMode) -> Result<PcaModel> {
    let n = p.len();
    let k = p.width();
    if n < 2 {
        return Err(Error::TooShort { needed: 2, got: n });
    }
    if k == 0 {
        return Err(Error::InvalidArgument("panel has no columns".into()));
    }
    let centers: Vec<f64> = p.columns().iter().map(|c| stats::mean(c)).collect();
    let scales: Vec<f64> = match mode {
        PcaMode::Covariance => vec![1.0; k],
        PcaMode::Correlation => p
            .columns()
            .iter()
            .zip(p.ids())
            .map(|(c, id)| {
                let sd = stats::std_dev(c);
                if sd > 0.0 {
                    Ok(sd)
                } else {
                    Err(Error::ZeroVariance(id.clone()))
                }
            })
            .collect::<Result<_>>()?,
    };
    let z: Vec<Vec<f64>> = p
        .columns()
        .iter()
        .enumerate()
        .map(|(j, c)| c.iter().map(|x| (x - centers[j]) / scales[j]).collect())
        .collect();
    let mut a = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in i..k {
            let s: f64 = z[i].iter().zip(&z[j]).map(|(x, y)| x * y).sum::<f64>() / (n as f64 - 1.0);
            a[i][j] = s;
            a[j][i] = s;
        }
    }
    if mode == PcaMode::Correlation {
        for (i, row) in a.iter_mut().enumerate() {
            row[i] = 1.0;
        }
    }

    let eig = jacobi_eigen(&a)?;
    let mut max_residual: f64 = 0.0;
    for (val, vec) in eig.values.iter().zip(&eig.vectors) {
        let r = a
            .iter()
            .map(|row| row.iter().zip(vec).map(|(x, y)| x * y).sum::<f64>())
            .zip(vec)
            .map(|(av, v)| (av - val * v).powi(2))
            .sum::<f64>()
            .sqrt();
        max_residual = max_residual.max(r);
    }
    let eigenvalues: Vec<f64> = eig.values.iter().map(|v| v.max(0.0)).collect();
    let total: f64 = eigenvalues.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroVariance("panel".into()));
    }
    let proportions = eigenvalues.iter().map(|v| v / total).collect();
    let mut loadings = eig.vectors;
    for v in loadings.iter_mut() {
        apply_sign_convention(v);
    }
    Ok(PcaModel {
        ids: p.ids().to_vec(),
        loadings,
        eigenvalues,
        proportions,
        centers,
        scales,
        mode,
        max_residual,
    })
}

impl PcaModel {
    pub fn n_components(&self) -> usize {
        self.loadings.len()
    }

    pub fn cumulative_proportions(&self) -> Vec<f64> {
        self.proportions
            .iter()
            .scan(0.0, |acc, p| {
                *acc += p;
                Some(*acc)
            })
            .collect()
    }

    /// Standard deviation of each component (square root of its eigenvalue).
    pub fn component_std_devs(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|v| v.sqrt()).collect()
    }

    fn check_schema(&self, p: &Panel) -> Result<()> {
        if p.ids() != self.ids.as_slice() {
            return Err(Error::SchemaMismatch(format!(
                "model columns {:?}, panel columns {:?}",
                self.ids,
                p.ids()
            )));
        }
        Ok(())
    }

    /// Centered (and, in correlation mode, scaled) panel values.
    pub fn standardize(&self, p: &Panel) -> Result<Vec<Vec<f64>>> {
        self.check_schema(p)?;
        Ok(p.columns()
            .iter()
            .enumerate()
            .map(|(j, c)| {
                c.iter()
                    .map(|x| (x - self.centers[j]) / self.scales[j])
                    .collect()
            })
            .collect())
    }

    /// Map component scores back to the standardized scale.
    pub fn reconstruct(&self, scores: &[ScoreSeries]) -> Vec<Vec<f64>> {
        let n = scores.first().map_or(0, |s| s.series.len());
        let k = self.ids.len();
        let mut out = vec![vec![0.0; n]; k];
        for s in scores {
            let l = &self.loadings[s.component_index - 1];
            for (j, col) in out.iter_mut().enumerate() {
                for (t, v) in col.iter_mut().enumerate() {
                    *v += l[j] * s.series.values()[t];
                }
            }
        }
        out
    }
}

/// Scores of the first `k` components.
pub fn scores(model: &PcaModel, p: &Panel, k: usize) -> Result<Vec<ScoreSeries>> {
    if k == 0 || k > model.n_components() {
        return Err(Error::InvalidArgument(format!(
            "component count {k} outside 1..={}",
            model.n_components()
        )));
    }
    let z = model.standardize(p)?;
    (0..k)
        .map(|c| {
            let l = &model.loadings[c];
            let vals: Vec<f64> = (0..p.len())
                .map(|t| l.iter().zip(&z).map(|(w, col)| w * col[t]).sum())
                .collect();
            Ok(ScoreSeries {
                component_index: c + 1,
                series: TimeSeries::new(format!("PC{}", c + 1), p.start(), vals)?,
            })
        })
        .collect()
}
