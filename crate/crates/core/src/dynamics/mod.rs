//! Population and learning dynamics over signaling games.
//!
//! Four families are provided: the two-population replicator dynamics as a
//! discrete map and as a continuous flow (fixed-step RK4, renormalized each
//! step), Roth-Erev urn reinforcement, myopic best response with inertia and
//! experimentation, and imitate-the-best dynamics on a graph. Every run is
//! single-threaded and deterministic given its configuration and seed.

mod best_response;
mod convergence;
mod localized;
mod reinforcement;
mod replicator;
mod trajectory;

pub use best_response::{
    best_response_run, best_response_run_from, receiver_best_response, sender_best_response,
};
pub use convergence::{detect_convergence, Convergence};
pub use localized::{localized_run, GraphSpec, UpdateRule};
pub use reinforcement::{
    roth_erev_run, roth_erev_run_with_stats, ReinforcementState, RothErev, RothErevStats,
    RoundOutcome,
};
pub use replicator::{replicator_flow, replicator_step, PopulationState, Replicator};
pub use trajectory::{behavioral_metrics, StepMetrics, Trajectory, TrajectorySample};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::game::{PureStrategyIndex, Role, SignalingGame};
use crate::util::short_digest;

/// Initial condition for population dynamics.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitCondition {
    /// Dirichlet(1, ..., 1) on both simplices, drawn from the run seed.
    #[default]
    Dirichlet,
    Uniform,
    Explicit {
        sender: Vec<f64>,
        receiver: Vec<f64>,
    },
}

impl InitCondition {
    pub fn realize(&self, game: &SignalingGame, seed: u64) -> Result<PopulationState> {
        match self {
            InitCondition::Dirichlet => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                PopulationState::sample_uniform(game, &mut rng)
            }
            InitCondition::Uniform => PopulationState::uniform(game),
            InitCondition::Explicit { sender, receiver } => {
                PopulationState::new(sender.clone(), receiver.clone(), 0.0)
            }
        }
    }
}

/// A complete dynamics choice, as it appears in run configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DynamicsConfig {
    ReplicatorMap {
        generations: u64,
        #[serde(default)]
        init: InitCondition,
    },
    ReplicatorFlow {
        t_end: f64,
        dt: f64,
        #[serde(default)]
        init: InitCondition,
    },
    RothErev {
        init_weight: f64,
        horizon: u64,
    },
    BestResponse {
        inertia: f64,
        experiment_rate: f64,
        horizon: u64,
    },
    Localized {
        graph: GraphSpec,
        rounds: u64,
    },
}

impl DynamicsConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            DynamicsConfig::ReplicatorMap { .. } => "replicator_map",
            DynamicsConfig::ReplicatorFlow { .. } => "replicator_flow",
            DynamicsConfig::RothErev { .. } => "roth_erev",
            DynamicsConfig::BestResponse { .. } => "best_response",
            DynamicsConfig::Localized { .. } => "localized",
        }
    }

    /// True for dynamics that evolve a [`PopulationState`].
    pub fn is_population(&self) -> bool {
        matches!(
            self,
            DynamicsConfig::ReplicatorMap { .. } | DynamicsConfig::ReplicatorFlow { .. }
        )
    }
}

/// Run any configured dynamic on `game` with `seed`, returning its
/// trajectory.
pub fn run_config(game: &SignalingGame, config: &DynamicsConfig, seed: u64) -> Result<Trajectory> {
    run_config_full(game, config, seed).map(|(t, _)| t)
}

/// [`run_config`] plus the terminal population state for population
/// dynamics.
pub fn run_config_full(
    game: &SignalingGame,
    config: &DynamicsConfig,
    seed: u64,
) -> Result<(Trajectory, Option<PopulationState>)> {
    match config {
        DynamicsConfig::ReplicatorMap { generations, init } => {
            let rep = Replicator::new(game)?;
            let pop = init.realize(game, seed)?;
            let mut traj = rep.empty_trajectory("replicator_map", (config, &pop), seed);
            let terminal = rep.map_run(&pop, *generations, &mut traj)?;
            Ok((traj, Some(terminal)))
        }
        DynamicsConfig::ReplicatorFlow { t_end, dt, init } => {
            let rep = Replicator::new(game)?;
            let pop = init.realize(game, seed)?;
            let mut traj = rep.empty_trajectory("replicator_flow", (config, &pop), seed);
            let terminal = rep.flow_run(&pop, *t_end, *dt, &mut traj)?;
            Ok((traj, Some(terminal)))
        }
        DynamicsConfig::RothErev { init_weight, horizon } => {
            Ok((roth_erev_run(game, *init_weight, *horizon, seed)?, None))
        }
        DynamicsConfig::BestResponse { inertia, experiment_rate, horizon } => Ok((
            best_response_run(game, *inertia, *experiment_rate, *horizon, seed)?,
            None,
        )),
        DynamicsConfig::Localized { graph, rounds } => {
            let adjacency = graph.build()?;
            Ok((localized_run(game, &adjacency, UpdateRule::ImitateBest, *rounds, seed)?, None))
        }
    }
}

/// Digest identifying a (game, dynamics, seed) run configuration.
pub fn run_digest(game: &SignalingGame, config: &DynamicsConfig, seed: u64) -> String {
    short_digest(&(game, config, seed))
}

/// Population-weighted mean of the pure sender strategies: a behavioral
/// encode matrix.
pub fn mean_sender_strategy(game: &SignalingGame, shares: &[f64]) -> Vec<Vec<f64>> {
    let mut encode = vec![vec![0.0; game.n_signals()]; game.n_states()];
    for (index, share) in shares.iter().enumerate() {
        if *share == 0.0 {
            continue;
        }
        let map = PureStrategyIndex { role: Role::Sender, index }.map(game);
        for (s, m) in map.into_iter().enumerate() {
            encode[s][m] += share;
        }
    }
    encode
}

/// Population-weighted mean of the pure receiver strategies: a behavioral
/// decode matrix.
pub fn mean_receiver_strategy(game: &SignalingGame, shares: &[f64]) -> Vec<Vec<f64>> {
    let mut decode = vec![vec![0.0; game.n_acts()]; game.n_signals()];
    for (index, share) in shares.iter().enumerate() {
        if *share == 0.0 {
            continue;
        }
        let map = PureStrategyIndex { role: Role::Receiver, index }.map(game);
        for (m, a) in map.into_iter().enumerate() {
            decode[m][a] += share;
        }
    }
    decode
}