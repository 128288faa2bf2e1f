//! Statistics over completed games: order variance, exact and asymptotic
//! tests, the ordering-rule regression and the summary tables built on them.

mod hypothesis;
mod ols;
mod reports;
mod special;
mod variance;

pub use hypothesis::*;
pub use ols::{
    fit_ordering_regression, least_squares, ordering_design, LeastSquares, OrderingCoefficients, RegressionFit,
    ALIAS_TOLERANCE, MIN_REGRESSION_PERIODS, REGRESSOR_NAMES,
};
pub use reports::{
    agent_variances, bullwhip_report, cost_tables, group_runs, info_sharing_effects, myopia_sign_test,
    BullwhipReport, CostRow, InfoSharingEffect, MyopiaReport, RunView, StatReport,
};
pub use special::{incomplete_beta, normal_cdf, student_t_upper};
pub use variance::{exact_variance, order_variance, variance_to_f64, ExactVariance, VarianceProfile};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatError {
    #[error("{0}")]
    Domain(String),
}
