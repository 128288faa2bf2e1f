use super::config::{ConfigError, GameConfig};
use super::engine::{advance_period, ChainState, StructuralError};
use super::trace::TeamTrace;
use crate::money::Money;
use crate::policy::{Observation, OrderPolicy, PolicyDecision, PolicyError, SharedView, StageHistory};
use crate::stage::{InfoRegime, Stage, NUM_STAGES};

#[derive(Debug, thiserror::Error)]
pub enum GameError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("a game needs exactly {NUM_STAGES} decision sources, got {0}")]
    PolicyCount(usize),
    #[error("{stage} decision failed in period {period}: {source}")]
    Decision {
        stage: Stage,
        period: u32,
        #[source]
        source: PolicyError,
    },
    #[error(transparent)]
    Structural(#[from] StructuralError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GameOptions {
    /// Query the four policies of a period on separate threads. Useful when
    /// each decision is a network round trip; results are identical either way.
    pub concurrent_decisions: bool,
}

/// What `stage` may see before deciding in `period`.
pub fn observe(
    state: &ChainState,
    stage: Stage,
    period: u32,
    external_demand: u32,
    regime: InfoRegime,
    history: &StageHistory,
) -> Observation {
    let own = state.stage(stage);
    let shared_view = match regime {
        InfoRegime::Isolated => None,
        InfoRegime::Shared => Some(SharedView { inventory: Stage::ALL.map(|s| state.stage(s).inventory) }),
    };
    Observation {
        period,
        stage,
        regime,
        own_inventory: own.inventory,
        own_backlog: own.backlog(),
        arriving_now: own.inbound.front(),
        incoming_demand: state.incoming_demand(stage, external_demand),
        supply_line: own.supply_line(),
        in_transit: own.inbound.iter().collect(),
        orders_in_flight: own.outbound_orders.iter().collect(),
        history: history.clone(),
        shared_view,
    }
}

fn decide_one(
    policy: &mut dyn OrderPolicy,
    obs: &Observation,
    config: &GameConfig,
) -> Result<u32, PolicyError> {
    let PolicyDecision { order, .. } = policy.decide(obs)?;
    Ok(if config.order_cap_enabled { order.min(config.stage_capacity) } else { order })
}

/// Plays `config.horizon` periods. All four stages decide on the same
/// pre-decision snapshot; their orders take effect together.
pub fn run_game(
    config: &GameConfig,
    policies: &mut [Box<dyn OrderPolicy>],
    seed: u64,
    regime: InfoRegime,
) -> Result<TeamTrace, GameError> {
    run_game_with(config, policies, seed, regime, GameOptions::default())
}

pub fn run_game_with(
    config: &GameConfig,
    policies: &mut [Box<dyn OrderPolicy>],
    seed: u64,
    regime: InfoRegime,
    options: GameOptions,
) -> Result<TeamTrace, GameError> {
    config.validate()?;
    if policies.len() != NUM_STAGES {
        return Err(GameError::PolicyCount(policies.len()));
    }
    let policy_ids: [String; NUM_STAGES] = std::array::from_fn(|i| policies[i].id());

    let mut state = ChainState::initial(config);
    let mut histories: [StageHistory; NUM_STAGES] = Default::default();
    let mut periods = Vec::with_capacity(config.horizon as usize);

    for period in 1..=config.horizon {
        let demand = config.demand_law.draw(seed, period);
        let observations: Vec<Observation> = Stage::ALL
            .iter()
            .map(|&s| observe(&state, s, period, demand, regime, &histories[s.index()]))
            .collect();

        let results: Vec<Result<u32, PolicyError>> = if options.concurrent_decisions {
            std::thread::scope(|scope| {
                let handles: Vec<_> = policies
                    .iter_mut()
                    .zip(&observations)
                    .map(|(p, o)| scope.spawn(move || decide_one(p.as_mut(), o, config)))
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().unwrap_or_else(|_| Err(PolicyError::Observation("policy panicked".into()))))
                    .collect()
            })
        } else {
            policies
                .iter_mut()
                .zip(&observations)
                .map(|(p, o)| decide_one(p.as_mut(), o, config))
                .collect()
        };

        let mut orders = [0u32; NUM_STAGES];
        for (stage, result) in Stage::ALL.into_iter().zip(results) {
            orders[stage.index()] =
                result.map_err(|source| GameError::Decision { stage, period, source })?;
        }

        let (next, record) = advance_period(&state, orders, demand, period, config)?;
        for s in Stage::ALL {
            let i = s.index();
            let h = &mut histories[i];
            h.orders.push(record.orders[i]);
            h.incoming_demand.push(record.incoming_demand[i]);
            h.arrivals.push(record.arrivals[i]);
            h.shipments.push(record.shipments[i]);
        }
        state = next;
        periods.push(record);
    }

    let total_cost_per_stage: [Money; NUM_STAGES] = Stage::ALL.map(|s| state.stage(s).cumulative_cost);
    Ok(TeamTrace { config: config.clone(), seed, regime, policies: policy_ids, periods, total_cost_per_stage })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::{ScriptRule, ScriptedPolicy};

    fn constant(k: u32) -> Vec<Box<dyn OrderPolicy>> {
        (0..4).map(|_| Box::new(ScriptedPolicy::new(ScriptRule::Constant { k })) as Box<dyn OrderPolicy>).collect()
    }

    #[test]
    fn single_period_horizon() {
        let cfg = GameConfig { horizon: 1, ..Default::default() };
        let t = run_game(&cfg, &mut constant(4), 7, InfoRegime::Isolated).unwrap();
        assert_eq!(t.periods.len(), 1);
    }

    #[test]
    fn wrong_policy_count() {
        let mut p = constant(4);
        p.pop();
        let err = run_game(&GameConfig::default(), &mut p, 7, InfoRegime::Isolated).unwrap_err();
        assert!(matches!(err, GameError::PolicyCount(3)));
    }

    #[test]
    fn order_cap_applies_only_when_enabled() {
        let cfg = GameConfig { horizon: 3, order_cap_enabled: true, ..Default::default() };
        let t = run_game(&cfg, &mut constant(50), 1, InfoRegime::Isolated).unwrap();
        assert!(t.periods.iter().all(|p| p.orders == [20; 4]));
        let cfg = GameConfig { horizon: 3, ..Default::default() };
        let t = run_game(&cfg, &mut constant(50), 1, InfoRegime::Isolated).unwrap();
        assert!(t.periods.iter().all(|p| p.orders == [50; 4]));
    }

    #[test]
    fn concurrent_decisions_match_sequential() {
        let rule = ScriptRule::Panic { alpha: 1.0, beta: 0.2, target: 12 };
        let mk = || -> Vec<Box<dyn OrderPolicy>> {
            (0..4).map(|_| Box::new(ScriptedPolicy::new(rule)) as Box<dyn OrderPolicy>).collect()
        };
        let cfg = GameConfig::default();
        let a = run_game(&cfg, &mut mk(), 3, InfoRegime::Shared).unwrap();
        let b = run_game_with(&cfg, &mut mk(), 3, InfoRegime::Shared, GameOptions { concurrent_decisions: true })
            .unwrap();
        assert_eq!(a, b);
    }

    struct Failing;
    impl OrderPolicy for Failing {
        fn id(&self) -> String {
            "failing".into()
        }
        fn decide(&mut self, obs: &Observation) -> Result<PolicyDecision, PolicyError> {
            if obs.period == 3 {
                Err(PolicyError::InvalidOrder { value: "-1".into() })
            } else {
                Ok(PolicyDecision::new(4))
            }
        }
    }

    #[test]
    fn decision_error_carries_stage_and_period() {
        let mut p = constant(4);
        p[2] = Box::new(Failing);
        let err = run_game(&GameConfig::default(), &mut p, 1, InfoRegime::Isolated).unwrap_err();
        assert!(matches!(err, GameError::Decision { stage: Stage::Distributor, period: 3, .. }));
    }
}
