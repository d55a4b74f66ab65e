//! Least-squares plumbing on top of `nalgebra`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative singular-value cutoff below which a design is treated as rank deficient.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub coef: Vec<f64>,
    pub fitted: Vec<f64>,
    pub residuals: Vec<f64>,
    pub ssr: f64,
    /// (X'X)⁻¹
    pub xtx_inv: DMatrix<f64>,
}

/// Build an n×p design from columns.
pub fn design(columns: &[&[f64]]) -> DMatrix<f64> {
    let n = columns.first().map_or(0, |c| c.len());
    DMatrix::from_fn(n, columns.len(), |i, j| columns[j][i])
}

/// Prepend an intercept column.
pub fn with_intercept(columns: &[&[f64]], n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, columns.len() + 1, |i, j| {
        if j == 0 {
            1.0
        } else {
            columns[j - 1][i]
        }
    })
}

/// OLS by SVD. Fails with `RankDeficient` if the smallest singular value is
/// below `RANK_TOL` times the largest.
pub fn least_squares(y: &[f64], x: &DMatrix<f64>) -> Result<LeastSquares> {
    let (n, p) = x.shape();
    if y.len() != n {
        return Err(Error::SchemaMismatch(format!(
            "{} responses for {n} rows",
            y.len()
        )));
    }
    if n < p || p == 0 {
        return Err(Error::TooShort {
            needed: p.max(1),
            got: n,
        });
    }
    let svd = x.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smax > 0.0) || smin <= RANK_TOL * smax {
        return Err(Error::RankDeficient);
    }
    let u = svd.u.as_ref().expect("left vectors");
    let vt = svd.v_t.as_ref().expect("right vectors");
    let yv = DVector::from_column_slice(y);
    let uty = u.transpose() * &yv;
    let scaled = DVector::from_fn(p, |k, _| uty[k] / svd.singular_values[k]);
    let coef = vt.transpose() * scaled;
    let inv_s2 = DMatrix::from_diagonal(&svd.singular_values.map(|s| 1.0 / (s * s)));
    let xtx_inv = vt.transpose() * inv_s2 * vt;
    let fitted = x * &coef;
    let residuals: Vec<f64> = y.iter().zip(fitted.iter()).map(|(a, b)| a - b).collect();
    let ssr = residuals.iter().map(|e| e * e).sum();
    Ok(LeastSquares {
        coef: coef.iter().copied().collect(),
        fitted: fitted.iter().copied().collect(),
        residuals,
        ssr,
        xtx_inv,
    })
}

/// Solve a square system, `None` if singular.
pub fn solve(a: &DMatrix<f64>, b: &[f64]) -> Option<Vec<f64>> {
    let lu = a.clone().lu();
    lu.solve(&DVector::from_column_slice(b))
        .map(|v| v.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_fit() {
        let x1 = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x1.iter().map(|v| 2.0 + 3.0 * v).collect();
        let ls = least_squares(&y, &with_intercept(&[&x1], 4)).unwrap();
        assert!((ls.coef[0] - 2.0).abs() < 1e-12);
        assert!((ls.coef[1] - 3.0).abs() < 1e-12);
        assert!(ls.ssr < 1e-20);
    }

    #[test]
    fn collinear_design_rejected() {
        let x1 = [1.0, 1.0, 1.0, 1.0];
        let y = [1.0, 2.0, 3.0, 4.0];
        assert!(matches!(
            least_squares(&y, &with_intercept(&[&x1], 4)),
            Err(Error::RankDeficient)
        ));
    }
}
