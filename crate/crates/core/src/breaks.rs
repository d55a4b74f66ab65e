//! Multiple structural breaks in a linear regression.
//!
//! For each admissible segment the OLS sum of squared residuals is
//! tabulated, and dynamic programming finds the placement of `m` breaks
//! that minimises the total, for every `m` up to a maximum. The number of
//! breaks is then chosen by BIC, counting `(m+1)·p` regression coefficients
//! plus `m` break dates:
//! `BIC(m) = n ln(SSR_m / n) + ((m+1) p + m) ln n`.
//!
//! A break date is the last observation of the earlier regime.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::data::{Panel, TimeSeries};
use crate::date::YearMonth;
use crate::error::{Error, Result};
use crate::linalg;
use crate::regression::{self, Design, PredictiveFit, PredictiveSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct BreakpointSet {
    pub start: YearMonth,
    pub n: usize,
    /// Regression coefficients per regime.
    pub p: usize,
    pub min_segment: usize,
    /// Index (into the aligned sample) of the last observation of each earlier regime.
    pub break_indices: Vec<usize>,
    pub break_dates: Vec<YearMonth>,
    pub segment_ssr: Vec<f64>,
    pub total_ssr: f64,
    pub chosen_m: usize,
    /// BIC for m = 0..=max_breaks; `f64::INFINITY` where no placement exists.
    pub criterion_values: Vec<f64>,
    pub ssr_by_m: Vec<f64>,
    pub breaks_by_m: Vec<Vec<usize>>,
}

impl BreakpointSet {
    /// Labels such as `2009:M4`.
    pub fn labels(&self) -> Vec<String> {
        self.break_dates.iter().map(|d| d.colon_label()).collect()
    }
}

/// Segment SSR table: `table[i][len − h]` is the SSR of observations
/// `i .. i+len`. Built from running cross-products on centred data.
struct SegmentTable {
    h: usize,
    rows: Vec<Vec<f64>>,
}

impl SegmentTable {
    fn build(y: &[f64], x: &DMatrix<f64>, h: usize) -> Self {
        let n = y.len();
        let p = x.ncols();
        let rows = (0..n.saturating_sub(h - 1))
            .into_par_iter()
            .map(|i| {
                let mut xtx = DMatrix::<f64>::zeros(p, p);
                let mut xty = DVector::<f64>::zeros(p);
                let mut yty = 0.0;
                let mut out = Vec::with_capacity(n - i - h + 1);
                for j in i..n {
                    let xr = x.row(j).transpose();
                    xtx += &xr * xr.transpose();
                    xty += &xr * y[j];
                    yty += y[j] * y[j];
                    if j + 1 - i >= h {
                        out.push(match xtx.clone().cholesky() {
                            Some(ch) => {
                                let b = ch.solve(&xty);
                                (yty - b.dot(&xty)).max(0.0)
                            }
                            None => f64::INFINITY,
                        });
                    }
                }
                out
            })
            .collect();
        Self { h, rows }
    }

    /// SSR of observations `a..b` (exclusive end).
    fn get(&self, a: usize, b: usize) -> f64 {
        let len = b - a;
        if len < self.h {
            return f64::INFINITY;
        }
        self.rows[a][len - self.h]
    }
}

/// Least total SSR of splitting `0..n` into `m+1` segments, for each m.
/// Returns, per m, the total and the segment end points (exclusive).
fn dp(table: &SegmentTable, n: usize, max_breaks: usize) -> Vec<Option<(f64, Vec<usize>)>> {
    let h = table.h;
    // best[m][e]: least SSR of 0..e with m breaks; arg[m][e] the start of the last segment
    let mut best = vec![vec![f64::INFINITY; n + 1]; max_breaks + 1];
    let mut arg = vec![vec![0usize; n + 1]; max_breaks + 1];
    for e in h..=n {
        best[0][e] = table.get(0, e);
    }
    for m in 1..=max_breaks {
        for e in ((m + 1) * h)..=n {
            let mut b = f64::INFINITY;
            let mut a_best = 0;
            for a in (m * h)..=(e - h) {
                let v = best[m - 1][a] + table.get(a, e);
                if v < b {
                    b = v;
                    a_best = a;
                }
            }
            best[m][e] = b;
            arg[m][e] = a_best;
        }
    }
    (0..=max_breaks)
        .map(|m| {
            let total = best[m][n];
            if !total.is_finite() {
                return None;
            }
            let mut ends = vec![n];
            let mut e = n;
            for k in (1..=m).rev() {
                e = arg[k][e];
                ends.push(e);
            }
            ends.reverse();
            Some((total, ends))
        })
        .collect()
}

/// Total SSR of a given placement, by direct OLS on each segment.
/// `breaks` are indices of the last observation of each earlier regime.
pub fn placement_ssr(d: &Design, breaks: &[usize]) -> Result<Vec<f64>> {
    let x = d.matrix();
    let mut bounds = vec![0];
    bounds.extend(breaks.iter().map(|b| b + 1));
    bounds.push(d.len());
    bounds
        .windows(2)
        .map(|w| {
            let xs = x.rows(w[0], w[1] - w[0]).into_owned();
            linalg::least_squares(&d.y[w[0]..w[1]], &xs).map(|ls| ls.ssr)
        })
        .collect()
}

pub fn min_segment(n: usize, p: usize, trim: f64) -> usize {
    ((trim * n as f64).ceil() as usize).max(p + 1)
}

/// Locate up to `max_breaks` breaks in the regression of `y` on an
/// intercept and the columns of `x`.
pub fn find_breaks(
    y: &TimeSeries,
    x: &Panel,
    max_breaks: usize,
    trim: f64,
) -> Result<BreakpointSet> {
    find_breaks_design(&Design::aligned(y, x)?, max_breaks, trim)
}

pub fn find_breaks_design(d: &Design, max_breaks: usize, trim: f64) -> Result<BreakpointSet> {
    if !(trim > 0.0 && trim < 0.5) {
        return Err(Error::InfeasibleTrim(format!(
            "trim {trim} outside (0, 0.5)"
        )));
    }
    let n = d.len();
    let p = d.columns.len() + 1;
    let h = min_segment(n, p, trim);
    if (max_breaks + 1) * h > n {
        return Err(Error::InfeasibleTrim(format!(
            "{} segments of at least {h} observations do not fit in {n}",
            max_breaks + 1
        )));
    }
    // centring reduces cancellation in the running cross-products
    let ybar = d.y.iter().sum::<f64>() / n as f64;
    let yc: Vec<f64> = d.y.iter().map(|v| v - ybar).collect();
    let mut x = d.matrix();
    for j in 1..p {
        let m = x.column(j).mean();
        x.column_mut(j).add_scalar_mut(-m);
    }
    let table = SegmentTable::build(&yc, &x, h);
    let solutions = dp(&table, n, max_breaks);
    if solutions[0].is_none() {
        return Err(Error::RankDeficient);
    }
    let nf = n as f64;
    let mut criterion_values = Vec::with_capacity(max_breaks + 1);
    let mut ssr_by_m = Vec::with_capacity(max_breaks + 1);
    let mut breaks_by_m = Vec::with_capacity(max_breaks + 1);
    for (m, sol) in solutions.iter().enumerate() {
        match sol {
            Some((ssr, ends)) => {
                let k = ((m + 1) * p + m) as f64;
                criterion_values.push(nf * (ssr / nf).max(f64::MIN_POSITIVE).ln() + k * nf.ln());
                ssr_by_m.push(*ssr);
                breaks_by_m.push(ends[..m].iter().map(|e| e - 1).collect());
            }
            None => {
                criterion_values.push(f64::INFINITY);
                ssr_by_m.push(f64::INFINITY);
                breaks_by_m.push(Vec::new());
            }
        }
    }
    let chosen_m = (0..=max_breaks)
        .min_by(|&a, &b| {
            criterion_values[a]
                .total_cmp(&criterion_values[b])
                .then(a.cmp(&b))
        })
        .expect("m = 0 is always present");
    let break_indices: Vec<usize> = breaks_by_m[chosen_m].clone();
    let segment_ssr = placement_ssr(d, &break_indices)?;
    Ok(BreakpointSet {
        start: d.start,
        n,
        p,
        min_segment: h,
        break_dates: break_indices
            .iter()
            .map(|&b| d.start.add_months(b as i64))
            .collect(),
        total_ssr: segment_ssr.iter().sum(),
        segment_ssr,
        break_indices,
        chosen_m,
        criterion_values,
        ssr_by_m,
        breaks_by_m,
    })
}

/// Predictive regressions estimated separately before and after a break.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsampleFit {
    pub break_date: YearMonth,
    pub pre_range: (YearMonth, YearMonth),
    pub post_range: (YearMonth, YearMonth),
    pub pre: PredictiveFit,
    pub post: PredictiveFit,
}

/// Label such as `1971M1-2009M4`.
pub fn range_label(range: (YearMonth, YearMonth)) -> String {
    format!("{}-{}", range.0.compact_label(), range.1.compact_label())
}

/// Split the aligned predictive design at `break_date` (inclusive on the
/// left) and fit each side.
pub fn subsample_fit(
    returns: &TimeSeries,
    index: &TimeSeries,
    controls: Option<&Panel>,
    break_date: YearMonth,
    spec: &PredictiveSpec,
) -> Result<SubsampleFit> {
    let d = regression::predictive_design(
        returns,
        index,
        controls,
        spec.lag_index,
        spec.lead_dependent,
    )?;
    let min = regression::MIN_PREDICTIVE_OBS;
    let side = |from: YearMonth, to: YearMonth| -> Result<Design> {
        let got = if from > to {
            0
        } else {
            (from.months_until(to) + 1) as usize
        };
        if got < min {
            return Err(Error::SegmentTooShort { needed: min, got });
        }
        d.window(from, to)
    };
    let pre = side(d.start, break_date.min(d.end()))?;
    let post = side(break_date.succ().max(d.start), d.end())?;
    Ok(SubsampleFit {
        break_date,
        pre_range: (pre.start, pre.end()),
        post_range: (post.start, post.end()),
        pre: regression::predictive_regression_design(&pre, spec)?,
        post: regression::predictive_regression_design(&post, spec)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn ym() -> YearMonth {
        YearMonth::new(1971, 1).unwrap()
    }

    fn intercept_only(y: Vec<f64>) -> Design {
        Design {
            start: ym(),
            y,
            names: vec![],
            columns: vec![],
        }
    }

    #[test]
    fn planted_mean_shift() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let noise = Normal::new(0.0, 0.5).unwrap();
        let y: Vec<f64> = (0..200)
            .map(|t| if t < 100 { 0.0 } else { 2.0 } + noise.sample(&mut rng))
            .collect();
        let b = find_breaks_design(&intercept_only(y), 5, 0.15).unwrap();
        assert_eq!(b.chosen_m, 1);
        assert!((b.break_indices[0] as i64 + 1 - 100).abs() <= 3);
    }

    #[test]
    fn table_matches_direct_ssr() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let x: Vec<f64> = (0..60).map(|_| noise.sample(&mut rng)).collect();
        let y: Vec<f64> = x.iter().map(|v| 1.0 + v + noise.sample(&mut rng)).collect();
        let d = Design {
            start: ym(),
            y,
            names: vec!["x".into()],
            columns: vec![x],
        };
        let b = find_breaks_design(&d, 2, 0.15).unwrap();
        for m in 0..=2 {
            let direct: f64 = placement_ssr(&d, &b.breaks_by_m[m]).unwrap().iter().sum();
            assert!((direct - b.ssr_by_m[m]).abs() < 1e-8 * direct.max(1.0));
        }
        assert!((b.segment_ssr.iter().sum::<f64>() - b.total_ssr).abs() < 1e-8);
    }

    #[test]
    fn infeasible_trim() {
        let d = intercept_only(vec![0.0; 20]);
        assert!(matches!(
            find_breaks_design(&d, 5, 0.2),
            Err(Error::InfeasibleTrim(_))
        ));
    }

    #[test]
    fn labels() {
        let d = intercept_only(
            (0..100)
                .map(|t| if t < 50 { 0.0 } else { 10.0 } + (t % 3) as f64 * 0.1)
                .collect(),
        );
        let b = find_breaks_design(&d, 2, 0.15).unwrap();
        assert_eq!(b.labels(), vec!["1975:M2".to_string()]);
        assert_eq!(
            range_label((ym(), YearMonth::new(2009, 4).unwrap())),
            "1971M1-2009M4"
        );
    }
}
