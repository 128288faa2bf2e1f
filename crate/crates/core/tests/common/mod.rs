//! Independent reference implementations used by several test targets.
#![allow(dead_code)]

use num_rational::Ratio;

use beerlab::sim::{GameConfig, PeriodRecord, TeamTrace};
use beerlab::stage::InfoRegime;
use beerlab::Money;

/// Ordering rule understood by the naive engine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NaiveRule {
    Constant(u32),
    Match,
    Panic { alpha: f64, beta: f64, target: i64 },
    Tracking,
}

/// Straight-line re-implementation of the chain with explicit per-period
/// histories instead of delay lines. Period `t` is 1-based; any index before
/// period 1 reads the prefill value.
pub struct NaiveGame<'a> {
    cfg: &'a GameConfig,
    orders: Vec<[u32; 4]>,
    shipments: Vec<[u32; 4]>,
    inventory: Vec<[i64; 4]>,
}

impl<'a> NaiveGame<'a> {
    fn order_at(&self, stage: usize, t: i64) -> u32 {
        if t < 1 { self.cfg.pipeline_prefill } else { self.orders[(t - 1) as usize][stage] }
    }

    fn shipment_at(&self, stage: usize, t: i64) -> u32 {
        if t < 1 { self.cfg.pipeline_prefill } else { self.shipments[(t - 1) as usize][stage] }
    }

    fn inv_before(&self, stage: usize, t: i64) -> i64 {
        if t <= 1 { self.cfg.initial_inventory } else { self.inventory[(t - 2) as usize][stage] }
    }

    fn arrival(&self, stage: usize, t: i64) -> u32 {
        if stage == 3 {
            self.order_at(3, t - self.cfg.production_delay as i64)
        } else {
            self.shipment_at(stage + 1, t - self.cfg.ship_delay as i64)
        }
    }

    fn incoming(&self, stage: usize, t: i64, demand: u32) -> u32 {
        if stage == 0 { demand } else { self.order_at(stage - 1, t - self.cfg.order_delay as i64) }
    }

    fn in_transit(&self, stage: usize, t: i64) -> u64 {
        if stage == 3 {
            let d = self.cfg.production_delay as i64;
            (t - d..t).map(|k| self.order_at(3, k) as u64).sum()
        } else {
            let d = self.cfg.ship_delay as i64;
            (t - d..t).map(|k| self.shipment_at(stage + 1, k) as u64).sum()
        }
    }

    fn supply_line(&self, stage: usize, t: i64) -> u64 {
        let own_orders: u64 = if stage == 3 {
            0
        } else {
            let d = self.cfg.order_delay as i64;
            (t - d..t).map(|k| self.order_at(stage, k) as u64).sum()
        };
        self.in_transit(stage, t) + own_orders
    }

    fn decide(&self, rule: NaiveRule, stage: usize, t: i64, demand: u32, regime: InfoRegime) -> u32 {
        let inv = self.inv_before(stage, t);
        match rule {
            NaiveRule::Constant(k) => k,
            NaiveRule::Match => self.incoming(stage, t, demand),
            NaiveRule::Panic { alpha, beta, target } => {
                let raw = self.incoming(stage, t, demand) as f64 + alpha * (target - inv).max(0) as f64
                    - beta * self.supply_line(stage, t) as f64;
                raw.max(0.0).round() as u32
            }
            NaiveRule::Tracking => {
                let lead = (if stage == 3 { self.cfg.production_delay } else { self.cfg.ship_delay }) as i64;
                let lmax = self.cfg.ship_delay.max(self.cfg.production_delay) as i64;
                let first = (t - lmax).max(1);
                let window: Vec<i64> = (first..t).map(|k| self.shipment_at(stage, k) as i64).collect();
                let (sum, n) = if window.is_empty() {
                    (self.cfg.pipeline_prefill as i64, 1)
                } else {
                    (window.iter().sum::<i64>(), window.len() as i64)
                };
                let own_backlog = (-inv).max(0);
                let on_hand = inv.max(0);
                let supplier_backlog = if stage < 3 && regime == InfoRegime::Shared {
                    (-self.inv_before(stage + 1, t)).max(0)
                } else {
                    0
                };
                let rest = own_backlog - on_hand - supplier_backlog - self.in_transit(stage, t) as i64;
                // O* = sum * lead / n + rest, rounded half away from zero, clamped to [0, c]
                let num = sum * lead + n * rest;
                if num <= 0 {
                    0
                } else {
                    (((2 * num + n) / (2 * n)) as u32).min(self.cfg.stage_capacity)
                }
            }
        }
    }
}

fn ratio(m: Money) -> Ratio<i64> {
    m.ratio()
}

/// Plays a game with the naive engine; returns period records and per-stage totals.
pub fn naive_play(
    cfg: &GameConfig,
    rules: [NaiveRule; 4],
    seed: u64,
    regime: InfoRegime,
) -> (Vec<PeriodRecord>, [Money; 4]) {
    let mut g = NaiveGame { cfg, orders: vec![], shipments: vec![], inventory: vec![] };
    let mut records = Vec::new();
    let mut totals = [Ratio::from_integer(0i64); 4];
    for t in 1..=cfg.horizon as i64 {
        let demand = cfg.demand_law.draw(seed, t as u32);
        let mut orders = [0u32; 4];
        for i in 0..4 {
            let o = g.decide(rules[i], i, t, demand, regime);
            orders[i] = if cfg.order_cap_enabled { o.min(cfg.stage_capacity) } else { o };
        }
        let mut rec_inc = [0u32; 4];
        let mut rec_arr = [0u32; 4];
        let mut rec_ship = [0u32; 4];
        let mut start = [0i64; 4];
        let mut end = [0i64; 4];
        let mut sl = [0u64; 4];
        let mut cost = [Money::ZERO; 4];
        for i in 0..4 {
            let inc = g.incoming(i, t, demand);
            let arr = g.arrival(i, t);
            let before = g.inv_before(i, t);
            let available = (before + arr as i64).max(0);
            let ship = (inc as i64).min(available).min(cfg.stage_capacity as i64) as u32;
            let after = before + arr as i64 - inc as i64;
            let c = ratio(cfg.holding_cost) * Ratio::from_integer(after.max(0))
                + ratio(cfg.backlog_cost) * Ratio::from_integer((-after).max(0));
            totals[i] += c;
            rec_inc[i] = inc;
            rec_arr[i] = arr;
            rec_ship[i] = ship;
            start[i] = before;
            end[i] = after;
            sl[i] = g.supply_line(i, t);
            cost[i] = Money::new(*c.numer(), *c.denom());
        }
        g.orders.push(orders);
        g.shipments.push(rec_ship);
        g.inventory.push(end);
        records.push(PeriodRecord {
            period: t as u32,
            demand,
            orders,
            incoming_demand: rec_inc,
            arrivals: rec_arr,
            shipments: rec_ship,
            inventory_start: start,
            inventory_end: end,
            supply_line: sl,
            period_cost: cost,
        });
    }
    (records, totals.map(|r| Money::new(*r.numer(), *r.denom())))
}

/// Compares an engine trace with the naive result; returns the first difference.
pub fn compare_with_naive(trace: &TeamTrace, naive: &(Vec<PeriodRecord>, [Money; 4])) -> Result<(), String> {
    if trace.periods.len() != naive.0.len() {
        return Err(format!("length {} vs {}", trace.periods.len(), naive.0.len()));
    }
    for (a, b) in trace.periods.iter().zip(&naive.0) {
        if a != b {
            return Err(format!("period {} differs:\nengine {a:?}\nnaive  {b:?}", a.period));
        }
    }
    if trace.total_cost_per_stage != naive.1 {
        return Err(format!("totals {:?} vs {:?}", trace.total_cost_per_stage, naive.1));
    }
    Ok(())
}

// ---- statistics oracles ----

pub fn binom(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// P(successes >= k) under Bin(n, 1/2) by listing all 2^n outcomes.
pub fn sign_upper_by_enumeration(k: u32, n: u32) -> f64 {
    let hits = (0u32..1 << n).filter(|m| m.count_ones() >= k).count();
    hits as f64 / (1u64 << n) as f64
}

/// Every way of choosing which `m` of `m + n` pooled items carry label A.
pub fn label_assignments(m: usize, total: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, left: usize, total: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for i in start..=total - left {
            cur.push(i);
            rec(i + 1, left - 1, total, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, m, total, &mut Vec::new(), &mut out);
    out
}

/// Lower-tail MWU p for tie-free data by relabelling the pooled sample.
pub fn mwu_lower_by_enumeration(a: &[f64], b: &[f64]) -> f64 {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let u_of = |idx: &[usize]| -> f64 {
        let mut u = 0.0;
        for &i in idx {
            for (j, &y) in pooled.iter().enumerate() {
                if !idx.contains(&j) && pooled[i] > y {
                    u += 1.0;
                }
            }
        }
        u
    };
    let observed = u_of(&(0..a.len()).collect::<Vec<_>>());
    let all = label_assignments(a.len(), pooled.len());
    let hits = all.iter().filter(|idx| u_of(idx) <= observed + 1e-9).count();
    hits as f64 / all.len() as f64
}

/// Student-t upper tail by composite Simpson integration of the density on
/// a substitution that maps `[t, inf)` onto a finite interval.
pub fn t_upper_by_quadrature(t: f64, dof: f64) -> f64 {
    let ln_c = ln_gamma_ref((dof + 1.0) / 2.0) - ln_gamma_ref(dof / 2.0) - 0.5 * (dof * std::f64::consts::PI).ln();
    let density = |x: f64| (ln_c - (dof + 1.0) / 2.0 * (1.0 + x * x / dof).ln()).exp();
    // x = t + u / (1 - u), u in [0, 1)
    let f = |u: f64| {
        if u >= 1.0 {
            0.0
        } else {
            let x = t + u / (1.0 - u);
            density(x) / ((1.0 - u) * (1.0 - u))
        }
    };
    let n = 200_000;
    let h = 1.0 / n as f64;
    let mut s = f(0.0) + f(1.0);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(i as f64 * h);
    }
    s * h / 3.0
}

/// Lanczos log-gamma (g = 7, n = 9), kept here so the oracle does not share
/// code with the implementation under test.
pub fn ln_gamma_ref(x: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma_ref(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + G + 0.5;
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Least squares through the normal equations and Gaussian elimination
/// with partial pivoting.
pub fn normal_equations(rows: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let p = rows[0].len();
    let mut a = vec![vec![0.0; p + 1]; p];
    for (r, yi) in rows.iter().zip(y) {
        for i in 0..p {
            for j in 0..p {
                a[i][j] += r[i] * r[j];
            }
            a[i][p] += r[i] * yi;
        }
    }
    for col in 0..p {
        let piv = (col..p).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        for row in 0..p {
            if row != col {
                let f = a[row][col] / a[col][col];
                let pivot_row = a[col].clone();
                for (x, y) in a[row][col..].iter_mut().zip(&pivot_row[col..]) {
                    *x -= f * y;
                }
            }
        }
    }
    (0..p).map(|i| a[i][p] / a[i][i]).collect()
}

// ---- experiment fixtures ----

/// Factorial plan whose chat tiers answer through the scripted responder.
pub fn stub_plan(replications: u32) -> beerlab::experiment::ExperimentPlan {
    let text = format!(
        r#"
name = "stub-test"
master_seed = 20250101
replications = {replications}

[tiers.shallow]
kind = "llm"
family = "A"
model_id = "shallow-model"
stub = {{ rule = "panic", alpha = 1.0, beta = 0.2, target = 12 }}

[tiers.deep]
kind = "llm"
family = "B"
model_id = "deep-model"
stub = {{ rule = "match_demand" }}
"#
    );
    beerlab::experiment::ExperimentPlan::from_toml_str(&text).unwrap()
}

/// Every file under `root`, keyed by its relative path.
pub fn snapshot(root: &std::path::Path) -> std::collections::BTreeMap<String, Vec<u8>> {
    fn walk(base: &std::path::Path, dir: &std::path::Path, out: &mut std::collections::BTreeMap<String, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(base, &path, out);
            } else {
                let rel = path.strip_prefix(base).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    let mut out = std::collections::BTreeMap::new();
    walk(root, root, &mut out);
    out
}

pub fn quiet(_: &beerlab::experiment::CellKey, _: &beerlab::experiment::CellOutcome) {}
