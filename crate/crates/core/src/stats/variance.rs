use num_rational::Ratio;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use super::StatError;
use crate::sim::TeamTrace;
use crate::stage::{Stage, NUM_STAGES};

/// Exact sample variance of integer data.
pub type ExactVariance = Ratio<i128>;

/// Unbiased sample variance (divisor `n - 1`) of integer observations.
pub fn exact_variance(values: &[u32]) -> Result<ExactVariance, StatError> {
    let n = values.len() as i128;
    if n < 2 {
        return Err(StatError::Domain(format!("variance is undefined for {n} observation(s)")));
    }
    let sum: i128 = values.iter().map(|&v| v as i128).sum();
    let sum_sq: i128 = values.iter().map(|&v| (v as i128) * (v as i128)).sum();
    Ok(Ratio::new(n * sum_sq - sum * sum, n * (n - 1)))
}

/// Sample variance of a stage's orders over the whole horizon.
pub fn order_variance(trace: &TeamTrace, stage: Stage) -> Result<ExactVariance, StatError> {
    exact_variance(&trace.orders(stage))
}

pub fn variance_to_f64(v: &ExactVariance) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

/// Order variances of the four stages of one game.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VarianceProfile {
    pub variances: [ExactVariance; NUM_STAGES],
}

impl VarianceProfile {
    pub fn of(trace: &TeamTrace) -> Result<Self, StatError> {
        let mut variances = [Ratio::from_integer(0); NUM_STAGES];
        for s in Stage::ALL {
            variances[s.index()] = order_variance(trace, s)?;
        }
        Ok(Self { variances })
    }

    /// `Var(stage i+1) > Var(stage i)` for the three adjacent pairs; ties are `false`.
    pub fn amplification(&self) -> [bool; NUM_STAGES - 1] {
        std::array::from_fn(|i| self.variances[i + 1] > self.variances[i])
    }

    pub fn as_f64(&self) -> [f64; NUM_STAGES] {
        self.variances.each_ref().map(variance_to_f64)
    }
}
