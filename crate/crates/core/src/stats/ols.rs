use serde::{Deserialize, Serialize};

use super::StatError;
use crate::sim::TeamTrace;
use crate::stage::Stage;

/// A column whose remaining norm after projecting out the earlier columns
/// falls below this fraction of its own norm is treated as aliased.
pub const ALIAS_TOLERANCE: f64 = 1e-9;

/// Least-squares solution with aliased columns pinned to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquares {
    pub coefficients: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Indices of columns that were linear combinations of earlier ones.
    pub aliased: Vec<usize>,
}

impl LeastSquares {
    pub fn rank(&self) -> usize {
        self.coefficients.len() - self.aliased.len()
    }

    pub fn residual_sum_of_squares(&self) -> f64 {
        self.residuals.iter().map(|r| r * r).sum()
    }
}

/// Ordinary least squares by Householder QR, columns taken in order.
///
/// `rows` is the design matrix in row-major form; every row has the same width.
pub fn least_squares(rows: &[Vec<f64>], y: &[f64]) -> Result<LeastSquares, StatError> {
    let n = rows.len();
    if n == 0 || n != y.len() {
        return Err(StatError::Domain(format!("design has {n} rows but response has {}", y.len())));
    }
    let p = rows[0].len();
    if rows.iter().any(|r| r.len() != p) {
        return Err(StatError::Domain("ragged design matrix".into()));
    }
    if rows.iter().flatten().chain(y).any(|v| !v.is_finite()) {
        return Err(StatError::Domain("non-finite value in regression input".into()));
    }

    // column-major working copy
    let mut a: Vec<Vec<f64>> = (0..p).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
    let mut qty = y.to_vec();
    let mut accepted = Vec::with_capacity(p);
    let mut aliased = Vec::new();
    let mut k = 0;

    for j in 0..p {
        let full_norm = a[j].iter().map(|v| v * v).sum::<f64>().sqrt();
        let tail_norm = a[j][k..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if k >= n || full_norm == 0.0 || tail_norm <= ALIAS_TOLERANCE * full_norm {
            aliased.push(j);
            continue;
        }
        let alpha = if a[j][k] > 0.0 { -tail_norm } else { tail_norm };
        let mut v: Vec<f64> = a[j][k..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        let reflect = |col: &mut [f64]| {
            let dot: f64 = v.iter().zip(&col[k..]).map(|(a, b)| a * b).sum();
            let f = 2.0 * dot / vnorm2;
            for (c, vi) in col[k..].iter_mut().zip(&v) {
                *c -= f * vi;
            }
        };
        for col in a.iter_mut().skip(j) {
            reflect(col);
        }
        reflect(&mut qty);
        accepted.push(j);
        k += 1;
    }

    // back substitution on the accepted columns; R[r][c] = a[accepted[c]][r]
    let mut solved = vec![0.0; accepted.len()];
    for r in (0..accepted.len()).rev() {
        let mut s = qty[r];
        for c in r + 1..accepted.len() {
            s -= a[accepted[c]][r] * solved[c];
        }
        solved[r] = s / a[accepted[r]][r];
    }
    let mut coefficients = vec![0.0; p];
    for (c, &j) in accepted.iter().enumerate() {
        coefficients[j] = solved[c];
    }
    let residuals = rows
        .iter()
        .zip(y)
        .map(|(row, yi)| yi - row.iter().zip(&coefficients).map(|(x, b)| x * b).sum::<f64>())
        .collect();
    Ok(LeastSquares { coefficients, residuals, aliased })
}

pub const REGRESSOR_NAMES: [&str; 6] = ["intercept", "inventory", "incoming_demand", "arrivals", "supply_line", "period"];

/// Smallest horizon accepted by [`fit_ordering_regression`].
pub const MIN_REGRESSION_PERIODS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderingCoefficients {
    pub intercept: f64,
    pub inventory: f64,
    pub incoming_demand: f64,
    pub arrivals: f64,
    pub supply_line: f64,
    pub period: f64,
}

impl OrderingCoefficients {
    fn from_slice(c: &[f64]) -> Self {
        Self { intercept: c[0], inventory: c[1], incoming_demand: c[2], arrivals: c[3], supply_line: c[4], period: c[5] }
    }
}

/// Fitted ordering rule of one agent in one game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    /// Which game the agent played in, e.g. a cell id.
    pub label: String,
    pub stage: Stage,
    pub observations: usize,
    pub coefficients: OrderingCoefficients,
    pub residual_variance: f64,
    /// Names of aliased regressors. A non-empty list excludes the fit from sign tests.
    pub aliased: Vec<String>,
}

impl RegressionFit {
    pub fn is_valid(&self) -> bool {
        self.aliased.is_empty()
    }

    /// Weight on the supply line exceeds the weight on inventory.
    pub fn supply_line_over_inventory(&self) -> bool {
        self.coefficients.supply_line > self.coefficients.inventory
    }
}

/// Design rows `[1, I_{t-1}, R_t, S_t, N_t, t]` and responses `O_t` for one stage.
pub fn ordering_design(trace: &TeamTrace, stage: Stage) -> (Vec<Vec<f64>>, Vec<f64>) {
    let i = stage.index();
    trace
        .periods
        .iter()
        .map(|p| {
            let row = vec![
                1.0,
                p.inventory_start[i] as f64,
                p.incoming_demand[i] as f64,
                p.arrivals[i] as f64,
                p.supply_line[i] as f64,
                p.period as f64,
            ];
            (row, p.orders[i] as f64)
        })
        .unzip()
}

pub fn fit_ordering_regression(trace: &TeamTrace, stage: Stage, label: &str) -> Result<RegressionFit, StatError> {
    if trace.periods.len() < MIN_REGRESSION_PERIODS {
        return Err(StatError::Domain(format!(
            "regression needs at least {MIN_REGRESSION_PERIODS} periods, trace has {}",
            trace.periods.len()
        )));
    }
    let (x, y) = ordering_design(trace, stage);
    let ls = least_squares(&x, &y)?;
    let dof = y.len() - ls.rank();
    let residual_variance = if dof > 0 { ls.residual_sum_of_squares() / dof as f64 } else { 0.0 };
    Ok(RegressionFit {
        label: label.to_string(),
        stage,
        observations: y.len(),
        coefficients: OrderingCoefficients::from_slice(&ls.coefficients),
        residual_variance,
        aliased: ls.aliased.iter().map(|&j| REGRESSOR_NAMES[j].to_string()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_fit_with_constant_regressors() {
        // O = 2 + 3 I; three regressors stuck at zero, the period column varies.
        let inv = [5.0, -2.0, 7.0, 0.0, 3.0, 11.0, -6.0, 4.0, 9.0, 1.0];
        let rows: Vec<Vec<f64>> =
            inv.iter().enumerate().map(|(t, &i)| vec![1.0, i, 0.0, 0.0, 0.0, (t + 1) as f64]).collect();
        let y: Vec<f64> = inv.iter().map(|i| 2.0 + 3.0 * i).collect();
        let fit = least_squares(&rows, &y).unwrap();
        assert_eq!(fit.aliased, vec![2, 3, 4]);
        assert!((fit.coefficients[0] - 2.0).abs() < 1e-9);
        assert!((fit.coefficients[1] - 3.0).abs() < 1e-9);
        assert!(fit.coefficients[5].abs() < 1e-9);
    }

    #[test]
    fn collinear_column_is_aliased() {
        let rows: Vec<Vec<f64>> = (0..10).map(|t| vec![1.0, t as f64, 7.0]).collect();
        let y: Vec<f64> = (0..10).map(|t| 1.0 + t as f64).collect();
        let fit = least_squares(&rows, &y).unwrap();
        assert_eq!(fit.aliased, vec![2]);
        assert_eq!(fit.coefficients[2], 0.0);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(least_squares(&[], &[]).is_err());
        assert!(least_squares(&[vec![1.0], vec![1.0, 2.0]], &[1.0, 2.0]).is_err());
        assert!(least_squares(&[vec![f64::NAN]], &[1.0]).is_err());
    }
}
