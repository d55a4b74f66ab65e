//! Chronological train/test evaluation of linear forecasting models.
//!
//! Coefficients are estimated once on the training window (fixed scheme)
//! and applied unchanged to the test window.

use crate::error::{Error, Result};
use crate::linalg;
use crate::regression::Design;
use crate::stats;

/// A named selection of regressors from a design.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelSpec {
    pub id: String,
    pub regressors: Vec<String>,
}

impl ModelSpec {
    pub fn new(id: impl Into<String>, regressors: &[&str]) -> Self {
        Self {
            id: id.into(),
            regressors: regressors.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// The index alone.
    pub fn univariate(index: &str) -> Self {
        Self::new("Univariate", &[index])
    }

    /// The index and a recession dummy.
    pub fn with_recession(index: &str, dummy: &str) -> Self {
        Self::new("Univariate with NBER dummy", &[index, dummy])
    }

    /// The index and a set of standard risk factors.
    pub fn multivariate(index: &str, factors: &[String]) -> Self {
        let mut regressors = vec![index.to_string()];
        regressors.extend(factors.iter().cloned());
        Self {
            id: "Multivariate with risk factors".into(),
            regressors,
        }
    }

    /// The index and the market, size and value factors.
    pub fn fama_french(index: &str, market: &str, size: &str, value: &str) -> Self {
        Self::new("Fama-French three-factors", &[index, market, size, value])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InSample {
    pub correlation_accuracy: f64,
    pub residual_std_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutOfSample {
    pub correlation_accuracy: f64,
    pub msfe: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForecastReport {
    pub model_id: String,
    pub in_sample: InSample,
    pub out_of_sample: OutOfSample,
    /// Percentage of test observations where prediction and outcome share a sign.
    pub sign_agreement: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub coefficients: Vec<f64>,
}

/// Accuracy of a prediction vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForecastMetrics {
    pub msfe: f64,
    /// 100 × Pearson correlation; 0 when either side is constant.
    pub correlation_accuracy: f64,
    pub sign_agreement: f64,
}

pub fn forecast_metrics(actual: &[f64], predicted: &[f64]) -> Result<ForecastMetrics> {
    if actual.len() != predicted.len() {
        return Err(Error::SchemaMismatch(format!(
            "{} actual values, {} predictions",
            actual.len(),
            predicted.len()
        )));
    }
    if actual.is_empty() {
        return Err(Error::TooShort { needed: 1, got: 0 });
    }
    let n = actual.len() as f64;
    let msfe = actual
        .iter()
        .zip(predicted)
        .map(|(a, p)| (a - p).powi(2))
        .sum::<f64>()
        / n;
    let corr = stats::pearson(actual, predicted).unwrap_or(0.0);
    let agree = actual
        .iter()
        .zip(predicted)
        .filter(|(a, p)| a.signum() == p.signum() || (**a == 0.0 && **p == 0.0))
        .count();
    Ok(ForecastMetrics {
        msfe,
        correlation_accuracy: 100.0 * corr,
        sign_agreement: 100.0 * agree as f64 / n,
    })
}

/// First `⌊ratio·n⌋` rows for training, the rest for testing.
pub fn split_train_test(d: &Design, ratio: f64) -> Result<(Design, Design)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "split ratio {ratio} outside (0, 1)"
        )));
    }
    let n = d.len();
    let n_train = (ratio * n as f64).floor() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::TooShort { needed: 2, got: n });
    }
    let cut = d.start.add_months(n_train as i64);
    Ok((
        d.window(d.start, cut.add_months(-1))?,
        d.window(cut, d.end())?,
    ))
}

fn select(d: &Design, regressors: &[String]) -> Result<Vec<Vec<f64>>> {
    regressors
        .iter()
        .map(|r| {
            d.names
                .iter()
                .position(|n| n == r)
                .map(|j| d.columns[j].clone())
                .ok_or_else(|| Error::MissingColumn(r.clone()))
        })
        .collect()
}

fn predict(cols: &[Vec<f64>], coef: &[f64], n: usize) -> Vec<f64> {
    (0..n)
        .map(|t| {
            coef[0]
                + cols
                    .iter()
                    .zip(&coef[1..])
                    .map(|(c, b)| c[t] * b)
                    .sum::<f64>()
        })
        .collect()
}

/// Fit `spec` on `train` and score it on both windows.
pub fn evaluate(spec: &ModelSpec, train: &Design, test: &Design) -> Result<ForecastReport> {
    let xtr = select(train, &spec.regressors)?;
    let xte = select(test, &spec.regressors)?;
    let p = xtr.len() + 1;
    let n_train = train.len();
    if n_train <= p {
        return Err(Error::TooShort {
            needed: p + 1,
            got: n_train,
        });
    }
    let refs: Vec<&[f64]> = xtr.iter().map(Vec::as_slice).collect();
    let ls = linalg::least_squares(&train.y, &linalg::with_intercept(&refs, n_train))?;
    let fitted = predict(&xtr, &ls.coef, n_train);
    let in_corr = stats::pearson(&train.y, &fitted).unwrap_or(0.0);
    let predicted = predict(&xte, &ls.coef, test.len());
    let out = forecast_metrics(&test.y, &predicted)?;
    Ok(ForecastReport {
        model_id: spec.id.clone(),
        in_sample: InSample {
            correlation_accuracy: 100.0 * in_corr,
            residual_std_error: (ls.ssr / (n_train - p) as f64).sqrt(),
        },
        out_of_sample: OutOfSample {
            correlation_accuracy: out.correlation_accuracy,
            msfe: out.msfe,
        },
        sign_agreement: out.sign_agreement,
        n_train,
        n_test: test.len(),
        coefficients: ls.coef,
    })
}

/// Index of the report with the lowest out-of-sample MSFE.
pub fn best_by_msfe(reports: &[ForecastReport]) -> Option<usize> {
    (0..reports.len()).min_by(|&a, &b| {
        reports[a]
            .out_of_sample
            .msfe
            .total_cmp(&reports[b].out_of_sample.msfe)
            .then(a.cmp(&b))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::date::YearMonth;

    fn design(n: usize) -> Design {
        let x: Vec<f64> = (0..n).map(|t| (t as f64 * 0.7).sin()).collect();
        Design {
            start: YearMonth::new(1971, 1).unwrap(),
            y: x.iter().map(|v| 0.5 + 2.0 * v).collect(),
            names: vec!["x".into()],
            columns: vec![x],
        }
    }

    #[test]
    fn five_point_hand_example() {
        // squared errors 0, 1, 0, 1, 0 → 2/5
        let m = forecast_metrics(&[1.0, 2.0, 3.0, 2.0, 1.0], &[1.0, 1.0, 3.0, 3.0, 1.0]).unwrap();
        assert_eq!(m.msfe, 0.4);
        assert_eq!(m.sign_agreement, 100.0);
    }

    #[test]
    fn perfect_forecast() {
        let a = [0.3, -1.0, 2.0, 0.5];
        let m = forecast_metrics(&a, &a).unwrap();
        assert_eq!(m.msfe, 0.0);
        assert!((m.correlation_accuracy - 100.0).abs() < 1e-12);
    }

    #[test]
    fn split_sizes() {
        let (tr, te) = split_train_test(&design(576), 0.8).unwrap();
        assert_eq!((tr.len(), te.len()), (460, 116));
        let (tr, te) = split_train_test(&design(10), 0.8).unwrap();
        assert_eq!((tr.len(), te.len()), (8, 2));
        assert!(split_train_test(&design(10), 1.0).is_err());
        assert!(split_train_test(&design(10), 0.0).is_err());
    }

    #[test]
    fn exact_model_scores_perfectly() {
        let d = design(100);
        let (tr, te) = split_train_test(&d, 0.8).unwrap();
        let r = evaluate(&ModelSpec::new("m", &["x"]), &tr, &te).unwrap();
        assert!(r.out_of_sample.msfe < 1e-20);
        assert!((r.out_of_sample.correlation_accuracy - 100.0).abs() < 1e-9);
        assert_eq!(r.n_train + r.n_test, 100);
    }

    #[test]
    fn unknown_regressor() {
        let d = design(50);
        let (tr, te) = split_train_test(&d, 0.8).unwrap();
        assert!(matches!(
            evaluate(&ModelSpec::new("m", &["z"]), &tr, &te),
            Err(Error::MissingColumn(_))
        ));
    }
}
