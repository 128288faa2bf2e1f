use serde::{Deserialize, Serialize};

use num_bigint::{BigInt, BigUint};
use num_rational::Ratio;
use num_traits::{One, ToPrimitive};

use super::special::{normal_cdf, student_t_upper};
use super::StatError;

/// Direction of the alternative hypothesis, stated for the first sample
/// (or, for the sign test, for the success count).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    Less,
    Greater,
    TwoSided,
}

fn binomial_row(n: u64) -> Vec<BigUint> {
    let mut row = Vec::with_capacity(n as usize + 1);
    let mut c = BigUint::one();
    row.push(c.clone());
    for j in 1..=n {
        c = c * BigUint::from(n - j + 1) / BigUint::from(j);
        row.push(c.clone());
    }
    row
}

fn ratio_to_f64(num: BigUint, den: &BigUint) -> f64 {
    Ratio::<BigInt>::new(num.into(), den.clone().into())
        .to_f64()
        .unwrap_or(f64::NAN)
}

/// Exact binomial sign test under success probability one half.
pub fn sign_test(successes: u64, trials: u64, alternative: Alternative) -> Result<f64, StatError> {
    if trials == 0 || successes > trials {
        return Err(StatError::Domain(format!(
            "sign test needs 0 <= k <= n and n >= 1 (k={successes}, n={trials})"
        )));
    }
    let row = binomial_row(trials);
    let total = BigUint::one() << trials as usize;
    let k = successes as usize;
    let upper: BigUint = row[k..].iter().sum();
    let lower: BigUint = row[..=k].iter().sum();
    let p = match alternative {
        Alternative::Greater => ratio_to_f64(upper, &total),
        Alternative::Less => ratio_to_f64(lower, &total),
        Alternative::TwoSided => {
            let smaller = upper.min(lower);
            let doubled = smaller << 1usize;
            if doubled >= total {
                1.0
            } else {
                ratio_to_f64(doubled, &total)
            }
        }
    };
    Ok(p.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    /// U statistic of the first sample.
    pub u: f64,
    pub p_value: f64,
    pub exact: bool,
}

/// Threshold on the pooled size below which tie-free inputs get an exact p.
pub const MWU_EXACT_MAX_N: usize = 16;

/// Midranks (1-based) of the pooled values, plus the tie-group sizes.
pub fn midranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < idx.len() {
        let mut j = i + 1;
        while j < idx.len() && values[idx[j]] == values[idx[i]] {
            j += 1;
        }
        let rank = (i + 1 + j) as f64 / 2.0;
        for &k in &idx[i..j] {
            ranks[k] = rank;
        }
        if j - i > 1 {
            ties.push(j - i);
        }
        i = j;
    }
    (ranks, ties)
}

/// Number of arrangements giving each value of U, for sizes `m` and `n`.
fn u_distribution(m: usize, n: usize) -> Vec<u64> {
    // f[m][n][u] = f[m-1][n][u-n] + f[m][n-1][u]
    let max_u = m * n;
    let mut table = vec![vec![Vec::<u64>::new(); n + 1]; m + 1];
    for i in 0..=m {
        for j in 0..=n {
            let mut row = vec![0u64; i * j + 1];
            if i == 0 || j == 0 {
                row[0] = 1;
            } else {
                for (u, slot) in row.iter_mut().enumerate() {
                    let from_a = if u >= j { table[i - 1][j].get(u - j).copied().unwrap_or(0) } else { 0 };
                    let from_b = table[i][j - 1].get(u).copied().unwrap_or(0);
                    *slot = from_a + from_b;
                }
            }
            table[i][j] = row;
        }
    }
    let out = std::mem::take(&mut table[m][n]);
    debug_assert_eq!(out.len(), max_u + 1);
    out
}

/// Mann-Whitney U test with midranks for ties.
///
/// Exact p by counting arrangements when the pooled size is at most
/// [`MWU_EXACT_MAX_N`] and there are no ties; otherwise the normal
/// approximation with tie-corrected variance and a 0.5 continuity correction.
pub fn mann_whitney_u(a: &[f64], b: &[f64], alternative: Alternative) -> Result<MannWhitney, StatError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatError::Domain("Mann-Whitney needs two non-empty samples".into()));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(StatError::Domain("samples contain NaN".into()));
    }
    let (m, n) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = midranks(&pooled);
    let rank_sum_a: f64 = ranks[..m].iter().sum();
    let u = rank_sum_a - (m * (m + 1)) as f64 / 2.0;

    if ties.is_empty() && m + n <= MWU_EXACT_MAX_N {
        let dist = u_distribution(m, n);
        let total: u64 = dist.iter().sum();
        let u_int = u.round() as usize;
        let lower: u64 = dist[..=u_int].iter().sum();
        let upper: u64 = dist[u_int..].iter().sum();
        let p = match alternative {
            Alternative::Less => lower as f64 / total as f64,
            Alternative::Greater => upper as f64 / total as f64,
            Alternative::TwoSided => (2.0 * lower.min(upper) as f64 / total as f64).min(1.0),
        };
        return Ok(MannWhitney { u, p_value: p, exact: true });
    }

    let (mf, nf) = (m as f64, n as f64);
    let big_n = mf + nf;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum();
    let variance = mf * nf / 12.0 * ((big_n + 1.0) - tie_term / (big_n * (big_n - 1.0)));
    let mean = mf * nf / 2.0;
    if variance <= 0.0 {
        return Ok(MannWhitney { u, p_value: 1.0, exact: false });
    }
    let sd = variance.sqrt();
    let p = match alternative {
        Alternative::Less => normal_cdf((u - mean + 0.5) / sd),
        Alternative::Greater => 1.0 - normal_cdf((u - mean - 0.5) / sd),
        Alternative::TwoSided => {
            let z = ((u - mean).abs() - 0.5).max(0.0) / sd;
            2.0 * (1.0 - normal_cdf(z))
        }
    };
    Ok(MannWhitney { u, p_value: p.clamp(0.0, 1.0), exact: false })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Welch {
    pub t: f64,
    pub dof: f64,
    pub p_value: f64,
    /// Both samples had zero variance; `p_value` is the limiting value.
    pub degenerate: bool,
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Unbiased sample variance; `None` below two observations.
pub fn sample_variance(values: &[f64]) -> Option<f64> {
    if values.len() < 2 {
        return None;
    }
    let m = mean(values);
    Some(values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (values.len() - 1) as f64)
}

/// Welch's unequal-variance t-test.
pub fn welch_t_test(a: &[f64], b: &[f64], alternative: Alternative) -> Result<Welch, StatError> {
    let (va, vb) = match (sample_variance(a), sample_variance(b)) {
        (Some(va), Some(vb)) => (va, vb),
        _ => return Err(StatError::Domain("Welch t-test needs at least two observations per sample".into())),
    };
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let diff = mean(a) - mean(b);
    let (sa, sb) = (va / na, vb / nb);
    let se2 = sa + sb;
    if se2 == 0.0 {
        let (t, p) = if diff == 0.0 {
            (0.0, 1.0)
        } else {
            let t = diff.signum() * f64::INFINITY;
            let p = match alternative {
                Alternative::TwoSided => 0.0,
                Alternative::Greater => if diff > 0.0 { 0.0 } else { 1.0 },
                Alternative::Less => if diff < 0.0 { 0.0 } else { 1.0 },
            };
            (t, p)
        };
        return Ok(Welch { t, dof: na + nb - 2.0, p_value: p, degenerate: true });
    }
    let t = diff / se2.sqrt();
    let dof = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    let p = match alternative {
        Alternative::Greater => student_t_upper(t, dof),
        Alternative::Less => student_t_upper(-t, dof),
        Alternative::TwoSided => (2.0 * student_t_upper(t.abs(), dof)).min(1.0),
    };
    Ok(Welch { t, dof, p_value: p.clamp(0.0, 1.0), degenerate: false })
}

/// Arithmetic mean, median and sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub sd: f64,
}

pub fn summarize(values: &[f64]) -> Option<Summary> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Some(Summary {
        n: values.len(),
        mean: mean(values),
        median: quantile_sorted(&sorted, 0.5),
        sd: sample_variance(values).map(f64::sqrt).unwrap_or(0.0),
    })
}

/// Linear-interpolation quantile (type 7) of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}
