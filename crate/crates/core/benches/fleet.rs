//! Sequential vs data-parallel fleets of full games.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use beerlab::experiment::demand_seed;
use beerlab::par::{par_map, Parallelism};
use beerlab::policy::{OrderPolicy, ScriptRule, ScriptedPolicy, TrackingDemand};
use beerlab::sim::{run_game, GameConfig};
use beerlab::stats::{fit_ordering_regression, VarianceProfile};
use beerlab::{InfoRegime, Stage};

const GAMES: u32 = 512;

fn play_and_fit(rep: u32, tracking: bool) -> f64 {
    let cfg = GameConfig::default();
    let mut policies: Vec<Box<dyn OrderPolicy>> = Stage::ALL
        .iter()
        .map(|&s| -> Box<dyn OrderPolicy> {
            if tracking {
                Box::new(TrackingDemand::for_stage(&cfg, s))
            } else {
                Box::new(ScriptedPolicy::new(ScriptRule::Panic { alpha: 1.0, beta: 0.2, target: 12 }))
            }
        })
        .collect();
    let trace = run_game(&cfg, &mut policies, demand_seed(1, rep), InfoRegime::Isolated).unwrap();
    let var = VarianceProfile::of(&trace).unwrap().as_f64()[3];
    let fit = fit_ordering_regression(&trace, Stage::Manufacturer, "bench").unwrap();
    var + fit.coefficients.supply_line
}

fn fleet(c: &mut Criterion) {
    let reps: Vec<u32> = (0..GAMES).collect();
    let mut group = c.benchmark_group("fleet_512_games");
    for (label, mode) in [("sequential", Parallelism::Sequential), ("rayon", Parallelism::Available)] {
        for tracking in [true, false] {
            let policy = if tracking { "tracking" } else { "panic" };
            group.bench_with_input(BenchmarkId::new(policy, label), &mode, |b, &mode| {
                b.iter(|| par_map(&reps, mode, |&r| play_and_fit(black_box(r), tracking)))
            });
        }
    }
    group.finish();
}

criterion_group!(benches, fleet);
criterion_main!(benches);
