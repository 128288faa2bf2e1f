use serde::{Deserialize, Serialize};

use super::hypothesis::{mann_whitney_u, sign_test, summarize, welch_t_test, Alternative, MannWhitney, Summary, Welch};
use super::ols::RegressionFit;
use super::variance::VarianceProfile;
use super::StatError;
use crate::money::{self, Money};
use crate::sim::TeamTrace;
use crate::stage::{InfoRegime, Stage, NUM_STAGES};

/// A completed game as seen by the reports.
pub trait RunView {
    /// Stable identifier used to cross-reference report rows.
    fn run_label(&self) -> String;
    fn run_trace(&self) -> &TeamTrace;
    /// Experimental configuration the run belongs to.
    fn configuration(&self) -> String {
        "ad-hoc".to_string()
    }
}

impl RunView for TeamTrace {
    fn run_label(&self) -> String {
        format!("seed-{:016x}-{}", self.seed, self.regime.as_str())
    }
    fn run_trace(&self) -> &TeamTrace {
        self
    }
}

impl<T: RunView + ?Sized> RunView for &T {
    fn run_label(&self) -> String {
        (**self).run_label()
    }
    fn run_trace(&self) -> &TeamTrace {
        (**self).run_trace()
    }
    fn configuration(&self) -> String {
        (**self).configuration()
    }
}

fn check_complete<R: RunView>(run: &R) -> Result<(), StatError> {
    let t = run.run_trace();
    if t.periods.len() != t.config.horizon as usize {
        return Err(StatError::Domain(format!(
            "run {} is incomplete: {} of {} periods",
            run.run_label(),
            t.periods.len(),
            t.config.horizon
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatReport {
    pub test: String,
    pub groups: Vec<String>,
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
    pub alternative: Alternative,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BullwhipReport {
    pub sign_test: StatReport,
    pub successes: u64,
    pub trials: u64,
    pub mean_variance: [f64; NUM_STAGES],
    /// `mean Var(S4) / mean Var(S1) - 1`.
    pub end_to_end_increase: Option<f64>,
    /// Mean over the three adjacent pairs of `mean Var(i+1) / mean Var(i) - 1`.
    pub mean_adjacent_increase: Option<f64>,
    pub runs: Vec<String>,
    pub per_run: Vec<VarianceProfile>,
}

/// Pools the three adjacent-pair amplification indicators of every run into
/// one exact sign test (one-sided, greater). Equal variances count as failures.
pub fn bullwhip_report<R: RunView>(runs: &[R]) -> Result<BullwhipReport, StatError> {
    if runs.is_empty() {
        return Err(StatError::Domain("bullwhip report needs at least one run".into()));
    }
    let mut per_run = Vec::with_capacity(runs.len());
    for r in runs {
        check_complete(r)?;
        per_run.push(VarianceProfile::of(r.run_trace())?);
    }
    let successes = per_run.iter().flat_map(|p| p.amplification()).filter(|&b| b).count() as u64;
    let trials = (per_run.len() * (NUM_STAGES - 1)) as u64;
    let p = sign_test(successes, trials, Alternative::Greater)?;

    let mut mean_variance = [0.0; NUM_STAGES];
    for p in &per_run {
        for (m, v) in mean_variance.iter_mut().zip(p.as_f64()) {
            *m += v;
        }
    }
    for m in &mut mean_variance {
        *m /= per_run.len() as f64;
    }
    let ratio = |hi: f64, lo: f64| if lo > 0.0 { Some(hi / lo - 1.0) } else { None };
    let end_to_end_increase = ratio(mean_variance[NUM_STAGES - 1], mean_variance[0]);
    let pairs: Option<Vec<f64>> = (0..NUM_STAGES - 1).map(|i| ratio(mean_variance[i + 1], mean_variance[i])).collect();
    let mean_adjacent_increase = pairs.map(|v| v.iter().sum::<f64>() / v.len() as f64);

    Ok(BullwhipReport {
        sign_test: StatReport {
            test: "sign test".into(),
            groups: vec!["Var(stage i+1) > Var(stage i)".into()],
            statistic: successes as f64,
            p_value: p,
            n: trials as usize,
            alternative: Alternative::Greater,
            notes: vec![format!("{} runs x {} adjacent pairs; equal variances count as failures", per_run.len(), NUM_STAGES - 1)],
        },
        successes,
        trials,
        mean_variance,
        end_to_end_increase,
        mean_adjacent_increase,
        runs: runs.iter().map(RunView::run_label).collect(),
        per_run,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MyopiaReport {
    pub sign_test: StatReport,
    pub successes: u64,
    pub valid_fits: usize,
    /// Fits dropped because a regressor was aliased.
    pub excluded_fits: usize,
}

/// Counts valid fits whose supply-line coefficient exceeds the inventory
/// coefficient and tests the count with an exact one-sided sign test.
pub fn myopia_sign_test(fits: &[RegressionFit]) -> Result<MyopiaReport, StatError> {
    let valid: Vec<&RegressionFit> = fits.iter().filter(|f| f.is_valid()).collect();
    let excluded_fits = fits.len() - valid.len();
    if valid.is_empty() {
        return Err(StatError::Domain(format!("no valid regression fits ({excluded_fits} excluded)")));
    }
    let successes = valid.iter().filter(|f| f.supply_line_over_inventory()).count() as u64;
    let p = sign_test(successes, valid.len() as u64, Alternative::Greater)?;
    let mut notes = Vec::new();
    if excluded_fits > 0 {
        notes.push(format!("{excluded_fits} rank-deficient fits excluded"));
    }
    Ok(MyopiaReport {
        sign_test: StatReport {
            test: "sign test".into(),
            groups: vec!["a_N > a_I".into()],
            statistic: successes as f64,
            p_value: p,
            n: valid.len(),
            alternative: Alternative::Greater,
            notes,
        },
        successes,
        valid_fits: valid.len(),
        excluded_fits,
    })
}

/// Groups runs by (configuration, regime) in order of first appearance.
pub fn group_runs<R: RunView>(runs: &[R]) -> Vec<((String, InfoRegime), Vec<&R>)> {
    let mut groups: Vec<((String, InfoRegime), Vec<&R>)> = Vec::new();
    for r in runs {
        let key = (r.configuration(), r.run_trace().regime);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(r),
            None => groups.push((key, vec![r])),
        }
    }
    groups
}

/// Order variances of every (run, stage) agent in `runs`.
pub fn agent_variances<R: RunView>(runs: &[R]) -> Result<Vec<f64>, StatError> {
    let mut out = Vec::with_capacity(runs.len() * NUM_STAGES);
    for r in runs {
        check_complete(r)?;
        out.extend(VarianceProfile::of(r.run_trace())?.as_f64());
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostRow {
    pub configuration: String,
    pub regime: InfoRegime,
    pub runs: usize,
    /// Mean over runs of the summed stage costs.
    pub mean_system_cost: Money,
    pub mean_stage_cost: [Money; NUM_STAGES],
    /// Per-agent order variance summary.
    pub variance: Summary,
    pub cells: Vec<String>,
}

/// Cost and variance rows, one per (configuration, regime).
pub fn cost_tables<R: RunView>(runs: &[R]) -> Result<Vec<CostRow>, StatError> {
    let mut rows = Vec::new();
    for ((configuration, regime), group) in group_runs(runs) {
        let variances = agent_variances(&group)?;
        let systems: Vec<Money> = group.iter().map(|r| r.run_trace().system_cost()).collect();
        let mean_stage_cost = Stage::ALL.map(|s| {
            let costs: Vec<Money> = group.iter().map(|r| r.run_trace().total_cost(s)).collect();
            money::mean(&costs).unwrap_or(Money::ZERO)
        });
        rows.push(CostRow {
            configuration,
            regime,
            runs: group.len(),
            mean_system_cost: money::mean(&systems).unwrap_or(Money::ZERO),
            mean_stage_cost,
            variance: summarize(&variances).expect("group is non-empty"),
            cells: group.iter().map(|r| r.run_label()).collect(),
        });
    }
    Ok(rows)
}

/// Isolated-versus-shared comparison of per-agent order variance for one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfoSharingEffect {
    pub configuration: String,
    pub isolated: Summary,
    pub shared: Summary,
    /// One-sided: isolated variance greater than shared.
    pub welch: Option<Welch>,
    pub mann_whitney: MannWhitney,
    pub isolated_cells: Vec<String>,
    pub shared_cells: Vec<String>,
}

pub fn info_sharing_effects<R: RunView>(runs: &[R]) -> Result<Vec<InfoSharingEffect>, StatError> {
    let groups = group_runs(runs);
    let mut configs: Vec<String> = Vec::new();
    for ((c, _), _) in &groups {
        if !configs.contains(c) {
            configs.push(c.clone());
        }
    }
    let mut out = Vec::new();
    for c in configs {
        let find = |regime| groups.iter().find(|((gc, gr), _)| *gc == c && *gr == regime).map(|(_, g)| g);
        let (Some(iso), Some(sh)) = (find(InfoRegime::Isolated), find(InfoRegime::Shared)) else {
            continue;
        };
        let a = agent_variances(iso)?;
        let b = agent_variances(sh)?;
        out.push(InfoSharingEffect {
            configuration: c,
            isolated: summarize(&a).expect("non-empty"),
            shared: summarize(&b).expect("non-empty"),
            welch: welch_t_test(&a, &b, Alternative::Greater).ok(),
            mann_whitney: mann_whitney_u(&a, &b, Alternative::Greater)?,
            isolated_cells: iso.iter().map(|r| r.run_label()).collect(),
            shared_cells: sh.iter().map(|r| r.run_label()).collect(),
        });
    }
    Ok(out)
}
