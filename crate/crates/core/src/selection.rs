//! Exhaustive covariate-subset ranking by BIC-approximated marginal likelihood.
//!
//! Every subset of the candidate columns (plus an intercept) is scored by
//! `log m ≈ ℓ̂ − (p/2) ln n`, with `ℓ̂` the Gaussian log-likelihood at the
//! OLS fit and `p` the number of mean parameters. A uniform prior over
//! subsets turns differences of these scores into log posterior odds.

use rayon::prelude::*;

use crate::data::{Panel, TimeSeries};
use crate::error::{Error, Result};
use crate::regression::Design;
use crate::stats;

pub const MAX_CANDIDATES: usize = 20;

/// Relative pivot below which a column is treated as a linear combination
/// of the columns before it.
const PIVOT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelEntry {
    /// Bit `j` set when candidate `j` (input order) is included.
    pub mask: u32,
    /// Included ids, sorted.
    pub included: Vec<String>,
    pub log_marginal: f64,
    pub posterior_prob: f64,
    /// `log_marginal` minus that of the smallest admissible model.
    pub log_odds_vs_base: f64,
    pub ssr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelRanking {
    pub candidates: Vec<String>,
    pub n: usize,
    /// Top entries, best first.
    pub entries: Vec<ModelEntry>,
    pub models_evaluated: usize,
}

impl ModelRanking {
    pub fn best(&self) -> &ModelEntry {
        &self.entries[0]
    }
}

/// Centred cross-products shared by every subset.
struct Moments {
    gram: Vec<Vec<f64>>,
    xty: Vec<f64>,
    yty: f64,
}

impl Moments {
    fn new(y: &[f64], cols: &[Vec<f64>]) -> Self {
        let yc: Vec<f64> = {
            let m = stats::mean(y);
            y.iter().map(|v| v - m).collect()
        };
        let xc: Vec<Vec<f64>> = cols
            .iter()
            .map(|c| {
                let m = stats::mean(c);
                c.iter().map(|v| v - m).collect()
            })
            .collect();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        Self {
            gram: xc
                .iter()
                .map(|a| xc.iter().map(|b| dot(a, b)).collect())
                .collect(),
            xty: xc.iter().map(|a| dot(a, &yc)).collect(),
            yty: dot(&yc, &yc),
        }
    }

    /// Residual sum of squares after regressing on `cols` (and an intercept),
    /// by a Cholesky factorisation that skips dependent columns.
    fn ssr(&self, cols: &[usize]) -> f64 {
        let k = cols.len();
        let mut l = vec![0.0; k * k];
        let mut z = vec![0.0; k];
        let mut kept: Vec<usize> = Vec::with_capacity(k);
        let mut explained = 0.0;
        for (r, &cj) in cols.iter().enumerate() {
            let mut row = vec![0.0; k];
            for (pos, &ki) in kept.iter().enumerate() {
                let mut s = self.gram[cj][cols[ki]];
                for q in 0..pos {
                    s -= row[q] * l[pos * k + q];
                }
                row[pos] = s / l[pos * k + pos];
            }
            let d = self.gram[cj][cj] - row[..kept.len()].iter().map(|v| v * v).sum::<f64>();
            if !(d > PIVOT_TOL * self.gram[cj][cj]) {
                continue;
            }
            let pos = kept.len();
            row[pos] = d.sqrt();
            l[pos * k..pos * k + k].copy_from_slice(&row);
            let mut s = self.xty[cj];
            for q in 0..pos {
                s -= row[q] * z[q];
            }
            z[pos] = s / row[pos];
            explained += z[pos] * z[pos];
            kept.push(r);
        }
        (self.yty - explained).max(0.0)
    }
}

fn log_marginal(n: usize, ssr: f64, p: usize) -> f64 {
    let nf = n as f64;
    let s = (ssr / nf).max(f64::MIN_POSITIVE);
    let loglik = -0.5 * nf * ((2.0 * std::f64::consts::PI).ln() + s.ln() + 1.0);
    loglik - 0.5 * p as f64 * nf.ln()
}

/// Score every subset of `candidates` that contains `always_include`, and
/// return the `top_k` best.
pub fn enumerate_models(
    y: &TimeSeries,
    candidates: &Panel,
    always_include: &[String],
    top_k: usize,
) -> Result<ModelRanking> {
    let k = candidates.width();
    if k > MAX_CANDIDATES {
        return Err(Error::TooManyCandidates(k));
    }
    let d = Design::aligned(y, candidates)?;
    let n = d.len();
    if n < k + 3 {
        return Err(Error::TooShort {
            needed: k + 3,
            got: n,
        });
    }
    let ids = d.names.clone();
    let mut required = 0u32;
    for id in always_include {
        let j = ids
            .iter()
            .position(|c| c == id)
            .ok_or_else(|| Error::MissingColumn(id.clone()))?;
        required |= 1 << j;
    }
    let moments = Moments::new(&d.y, &d.columns);
    // subset columns are always visited in id order, so the score of a
    // subset does not depend on how the candidates were listed
    let mut by_name: Vec<usize> = (0..k).collect();
    by_name.sort_by(|&a, &b| ids[a].cmp(&ids[b]));

    let total: u32 = 1 << k;
    let mut scored: Vec<(u32, f64, f64)> = (0..total)
        .into_par_iter()
        .filter(|m| m & required == required)
        .map(|mask| {
            let cols: Vec<usize> = by_name
                .iter()
                .copied()
                .filter(|j| mask >> j & 1 == 1)
                .collect();
            let ssr = moments.ssr(&cols);
            (mask, log_marginal(n, ssr, cols.len() + 1), ssr)
        })
        .collect();

    let names_of = |mask: u32| -> Vec<String> {
        by_name
            .iter()
            .filter(|&&j| mask >> j & 1 == 1)
            .map(|&j| ids[j].clone())
            .collect()
    };
    scored.sort_by(|a, b| {
        b.1.total_cmp(&a.1)
            .then(a.0.count_ones().cmp(&b.0.count_ones()))
            .then_with(|| names_of(a.0).cmp(&names_of(b.0)))
    });
    let max = scored[0].1;
    let norm: f64 = scored.iter().map(|s| (s.1 - max).exp()).sum();
    let base = scored
        .iter()
        .find(|s| s.0 == required)
        .map(|s| s.1)
        .expect("required subset is always scored");
    let models_evaluated = scored.len();
    let entries = scored
        .into_iter()
        .take(top_k.max(1))
        .map(|(mask, lm, ssr)| ModelEntry {
            mask,
            included: names_of(mask),
            log_marginal: lm,
            posterior_prob: (lm - max).exp() / norm,
            log_odds_vs_base: lm - base,
            ssr,
        })
        .collect();
    Ok(ModelRanking {
        candidates: ids,
        n,
        entries,
        models_evaluated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::date::YearMonth;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn start() -> YearMonth {
        YearMonth::new(1980, 1).unwrap()
    }

    fn normals(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| StandardNormal.sample(rng)).collect()
    }

    #[test]
    fn strong_single_candidate_beats_intercept() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = normals(&mut rng, 100);
        let y: Vec<f64> = x
            .iter()
            .zip(normals(&mut rng, 100))
            .map(|(a, e)| 2.0 * a + e)
            .collect();
        let p = Panel::new(start(), vec!["x".into()], vec![x]).unwrap();
        let r = enumerate_models(&TimeSeries::new("y", start(), y).unwrap(), &p, &[], 5).unwrap();
        assert_eq!(r.best().included, vec!["x".to_string()]);
        assert_eq!(r.entries.len(), 2);
        let total: f64 = r.entries.iter().map(|e| e.posterior_prob).sum();
        assert!((total - 1.0).abs() < 1e-8);
    }

    #[test]
    fn ssr_matches_direct_ols() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let cols: Vec<Vec<f64>> = (0..3).map(|_| normals(&mut rng, 50)).collect();
        let y = normals(&mut rng, 50);
        let m = Moments::new(&y, &cols);
        let refs: Vec<&[f64]> = vec![&cols[0], &cols[2]];
        let direct = crate::linalg::least_squares(&y, &crate::linalg::with_intercept(&refs, 50))
            .unwrap()
            .ssr;
        assert!((m.ssr(&[0, 2]) - direct).abs() < 1e-9 * direct);
    }

    #[test]
    fn duplicate_column_penalised() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = normals(&mut rng, 80);
        let y: Vec<f64> = x
            .iter()
            .zip(normals(&mut rng, 80))
            .map(|(a, e)| a + e)
            .collect();
        let p = Panel::new(start(), vec!["a".into(), "b".into()], vec![x.clone(), x]).unwrap();
        let r = enumerate_models(&TimeSeries::new("y", start(), y).unwrap(), &p, &[], 4).unwrap();
        let a = r.entries.iter().find(|e| e.included == ["a"]).unwrap();
        let ab = r.entries.iter().find(|e| e.included.len() == 2).unwrap();
        assert!(a.log_marginal > ab.log_marginal);
        assert_eq!(a.ssr, ab.ssr);
    }

    #[test]
    fn always_include_is_respected() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let cols: Vec<Vec<f64>> = (0..4).map(|_| normals(&mut rng, 60)).collect();
        let y = normals(&mut rng, 60);
        let ids = vec!["a".into(), "b".into(), "c".into(), "d".into()];
        let p = Panel::new(start(), ids, cols).unwrap();
        let r = enumerate_models(
            &TimeSeries::new("y", start(), y).unwrap(),
            &p,
            &["c".into()],
            100,
        )
        .unwrap();
        assert_eq!(r.models_evaluated, 8);
        assert!(r
            .entries
            .iter()
            .all(|e| e.included.contains(&"c".to_string())));
    }

    #[test]
    fn too_many_candidates() {
        let cols: Vec<Vec<f64>> = (0..21).map(|j| vec![j as f64; 30]).collect();
        let ids = (0..21).map(|j| format!("x{j}")).collect();
        let p = Panel::new(start(), ids, cols).unwrap();
        let y = TimeSeries::new("y", start(), vec![0.0; 30]).unwrap();
        assert!(matches!(
            enumerate_models(&y, &p, &[], 5),
            Err(Error::TooManyCandidates(21))
        ));
    }
}
