//! Prebuilt, named experiments binding games, dynamics, and analysis.
//!
//! Each scenario builds its game, runs the configured (or default)
//! dynamics, and reports summary scalars, a classification where one
//! applies, and the artifacts needed to reproduce the run. Scenarios are
//! registered by name for the CLI.

mod apology;

pub use apology::{
    play_match, scenario_apology, AcceptanceRule, ApologyGameSpec, ApologyRule, ApologyStrategy,
    MatchOutcome, PairTables, PhaseCell, PhaseMap, APOLOGY_STRATEGIES,
};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::analysis::{
    classify_with, communication_success_ceiling, entropy_bits, estimate_basins_with, BasinReport,
    ClassifyOptions, EquilibriumClass,
};
use crate::dynamics::{
    detect_convergence, roth_erev_run_with_stats, run_config_full, Convergence, DynamicsConfig,
    InitCondition, PopulationState, Replicator, Trajectory,
};
use crate::error::{Error, Result};
use crate::game::{PureStrategyIndex, Role, SignalingGame};
use crate::util::short_digest;

/// Settings shared by every scenario. `dynamics: None` selects the
/// scenario's default; `game_patch` is a JSON fragment merged over the
/// scenario's game before validation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub dynamics: Option<DynamicsConfig>,
    /// Sample count for basin-estimating scenarios.
    pub n_samples: u64,
    /// Classification tolerance.
    pub tol: f64,
    pub game_patch: Option<Value>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig { seed: 1, dynamics: None, n_samples: 1000, tol: 0.05, game_patch: None }
    }
}

impl ScenarioConfig {
    pub fn with_seed(seed: u64) -> Self {
        ScenarioConfig { seed, ..Default::default() }
    }
}

/// Everything a scenario run produces.
#[derive(Debug, Clone, Serialize)]
pub struct ScenarioResult {
    pub scenario: String,
    pub config_digest: String,
    pub seed: u64,
    pub summary: BTreeMap<String, f64>,
    pub classification: Option<EquilibriumClass>,
    #[serde(skip)]
    pub trajectory: Option<Trajectory>,
    pub basin: Option<BasinReport>,
    pub phase_map: Option<PhaseMap>,
}

impl ScenarioResult {
    fn new(scenario: &str, config_digest: String, seed: u64) -> Self {
        ScenarioResult {
            scenario: scenario.to_string(),
            config_digest,
            seed,
            summary: BTreeMap::new(),
            classification: None,
            trajectory: None,
            basin: None,
            phase_map: None,
        }
    }
}

/// Recursive JSON merge: objects merge key-wise, everything else is
/// replaced by the patch.
pub fn merge_json(base: &mut Value, patch: &Value) {
    match (base, patch) {
        (Value::Object(base_map), Value::Object(patch_map)) => {
            for (k, v) in patch_map {
                merge_json(base_map.entry(k.clone()).or_insert(Value::Null), v);
            }
        }
        (slot, other) => *slot = other.clone(),
    }
}

fn apply_game_patch(game: SignalingGame, patch: &Option<Value>) -> Result<SignalingGame> {
    match patch {
        None => Ok(game),
        Some(patch) => {
            let mut value = serde_json::to_value(&game)?;
            merge_json(&mut value, patch);
            Ok(serde_json::from_value(value)?)
        }
    }
}

fn default_flow() -> DynamicsConfig {
    DynamicsConfig::ReplicatorFlow { t_end: 500.0, dt: 0.1, init: InitCondition::Dirichlet }
}

fn convergence_time(traj: &Trajectory) -> f64 {
    let window = 20.min(traj.samples().len());
    if window < 2 {
        return f64::NAN;
    }
    match detect_convergence(traj, window, 1e-6) {
        Ok(Convergence::ConvergedAt(t)) => t,
        _ => f64::NAN,
    }
}

fn classify_options(cfg: &ScenarioConfig) -> ClassifyOptions {
    let _ = cfg;
    ClassifyOptions::default()
}

/// Basic 2x2x2 Lewis game under the configured dynamics; reports terminal
/// success, mutual information, and the outcome class.
pub fn scenario_basic_lewis(cfg: &ScenarioConfig) -> Result<ScenarioResult> {
    let game = apply_game_patch(SignalingGame::lewis(2, 2, 2, &[0.5, 0.5])?, &cfg.game_patch)?;
    let dynamics = cfg.dynamics.clone().unwrap_or_else(default_flow);
    let digest = short_digest(&("basic_lewis", &game, &dynamics, cfg.seed, cfg.tol));
    let mut result = ScenarioResult::new("basic_lewis", digest, cfg.seed);

    let (traj, terminal) = if let DynamicsConfig::RothErev { init_weight, horizon } = &dynamics {
        let (traj, stats) = roth_erev_run_with_stats(&game, *init_weight, *horizon, cfg.seed)?;
        result.summary.insert("rolling_success".to_string(), stats.rolling_success);
        result.summary.insert("rolling_window".to_string(), stats.rolling_window as f64);
        (traj, None)
    } else {
        run_config_full(&game, &dynamics, cfg.seed)?
    };

    let last = traj.last().metrics;
    result.summary.insert("terminal_success".to_string(), last.success);
    result.summary.insert("terminal_mi_state_signal".to_string(), last.mi_state_signal);
    result.summary.insert("terminal_mi_state_act".to_string(), last.mi_state_act);
    result.summary.insert("converged_at".to_string(), convergence_time(&traj));
    if let Some(pop) = terminal {
        result.classification =
            Some(classify_with(&game, &pop, &dynamics, cfg.tol, &classify_options(cfg))?);
    }
    result.trajectory = Some(traj);
    Ok(result)
}

/// Costly signal + skewed prior: estimates the basin shares of the two
/// signaling systems. Signal 0 carries `cost_delta` in every state; state 0
/// occurs with probability `rare_prob`.
pub fn scenario_costly_signal(
    cost_delta: f64,
    rare_prob: f64,
    cfg: &ScenarioConfig,
) -> Result<ScenarioResult> {
    if !(cost_delta >= 0.0) || !cost_delta.is_finite() {
        return Err(Error::Param {
            field: "cost_delta".to_string(),
            detail: format!("must be >= 0, got {cost_delta}"),
        });
    }
    if !(rare_prob > 0.0 && rare_prob <= 0.5) {
        return Err(Error::Param {
            field: "rare_prob".to_string(),
            detail: format!("must lie in (0, 0.5], got {rare_prob}"),
        });
    }
    let game = apply_game_patch(
        SignalingGame::lewis(2, 2, 2, &[rare_prob, 1.0 - rare_prob])?
            .with_signal_cost(vec![vec![cost_delta, 0.0], vec![cost_delta, 0.0]])?,
        &cfg.game_patch,
    )?;
    let dynamics = cfg.dynamics.clone().unwrap_or_else(default_flow);
    let digest = short_digest(&(
        "costly_signal",
        &game,
        &dynamics,
        cfg.seed,
        cfg.n_samples,
        cfg.tol,
    ));
    let mut result = ScenarioResult::new("costly_signal", digest, cfg.seed);

    let basin = estimate_basins_with(
        &game,
        &dynamics,
        cfg.n_samples,
        cfg.seed,
        cfg.tol,
        &classify_options(cfg),
    )?;
    // Language [0,1] maps the rare state 0 onto the costly signal 0.
    result.summary.insert("share_costly_rare".to_string(), basin.fraction_of("SignalingSystem[0,1]"));
    result.summary.insert("ci95_costly_rare".to_string(), basin.ci95_of("SignalingSystem[0,1]"));
    result.summary.insert("share_other_system".to_string(), basin.fraction_of("SignalingSystem[1,0]"));
    result.summary.insert("ci95_other_system".to_string(), basin.ci95_of("SignalingSystem[1,0]"));
    result.summary.insert("fraction_pooling".to_string(), basin.fraction_of("Pooling"));
    result.summary.insert("fraction_partial_pooling".to_string(), basin.fraction_of("PartialPooling"));
    result.summary.insert("fraction_non_stationary".to_string(), basin.fraction_of("NonStationary"));

    // Representative trajectory: the dynamics run from basin sample 0's
    // seed, for inspection and CSV output.
    let (traj, _) = run_config_full(&game, &dynamics, cfg.seed)?;
    result.trajectory = Some(traj);
    result.basin = Some(basin);
    Ok(result)
}

/// Bottleneck channel: `n_signals <= n_states` with `n_acts = n_states`.
/// Reports the terminal success against the deterministic-pair ceiling and
/// the MI ceiling `log2(n_signals)`.
pub fn scenario_bottleneck(
    n_states: usize,
    n_signals: usize,
    cfg: &ScenarioConfig,
) -> Result<ScenarioResult> {
    if n_signals > n_states {
        return Err(Error::Param {
            field: "n_signals".to_string(),
            detail: format!("bottleneck needs n_signals <= n_states, got {n_signals} > {n_states}"),
        });
    }
    let prior = vec![1.0 / n_states as f64; n_states];
    let game =
        apply_game_patch(SignalingGame::lewis(n_states, n_signals, n_states, &prior)?, &cfg.game_patch)?;
    let dynamics = cfg.dynamics.clone().unwrap_or_else(default_flow);
    let digest = short_digest(&("bottleneck", &game, &dynamics, cfg.seed, cfg.tol));
    let mut result = ScenarioResult::new("bottleneck", digest, cfg.seed);

    let (traj, terminal) = run_config_full(&game, &dynamics, cfg.seed)?;
    let last = traj.last().metrics;
    result.summary.insert("terminal_success".to_string(), last.success);
    result.summary.insert("success_ceiling".to_string(), communication_success_ceiling(&game)?);
    result.summary.insert("terminal_mi_state_act".to_string(), last.mi_state_act);
    let mi_ceiling = entropy_bits(game.prior())
        .min((game.n_signals() as f64).log2())
        .min((game.n_acts() as f64).log2());
    result.summary.insert("mi_ceiling".to_string(), mi_ceiling);
    if let Some(pop) = terminal {
        result.classification =
            Some(classify_with(&game, &pop, &dynamics, cfg.tol, &classify_options(cfg))?);
    }
    result.trajectory = Some(traj);
    Ok(result)
}

/// Prior probability of the good state in the quality-reporting game.
pub const DECEPTION_GOOD_PRIOR: f64 = 0.15;

/// Flat cost of the modest claim, paid by every type (disclosure takes
/// effort; boasting is the cheap default).
pub const DECEPTION_MODESTY_COST: f64 = 0.2;

/// Build the quality-reporting game: states {good, bad}, signals
/// {claim-good, claim-bad}, acts {trust, reject}.
///
/// The sender is a seller: it earns `benefit_bias` exactly when its
/// good-claim is trusted (a sale needs both the claim and the belief), and
/// nothing otherwise. Claiming good is free for the good type and costs
/// `honesty_cost_gap` for the bad type; claiming bad costs every type
/// [`DECEPTION_MODESTY_COST`]. The receiver is rewarded for trusting good
/// and rejecting bad.
pub fn deception_game(benefit_bias: f64, honesty_cost_gap: f64) -> Result<SignalingGame> {
    if !(benefit_bias >= 0.0) || !benefit_bias.is_finite() {
        return Err(Error::Param {
            field: "benefit_bias".to_string(),
            detail: format!("must be >= 0, got {benefit_bias}"),
        });
    }
    if !(honesty_cost_gap >= 0.0) || !honesty_cost_gap.is_finite() {
        return Err(Error::Param {
            field: "honesty_cost_gap".to_string(),
            detail: format!("must be >= 0, got {honesty_cost_gap}"),
        });
    }
    let base = SignalingGame::lewis(2, 2, 2, &[DECEPTION_GOOD_PRIOR, 1.0 - DECEPTION_GOOD_PRIOR])?;
    let sender_payoff: Vec<Vec<Vec<f64>>> = (0..2)
        .map(|_s| {
            (0..2)
                .map(|m| {
                    (0..2)
                        .map(|a| if m == 0 && a == 0 { benefit_bias } else { 0.0 })
                        .collect()
                })
                .collect()
        })
        .collect();
    base.with_sender_payoff(sender_payoff)?.with_signal_cost(vec![
        vec![0.0, DECEPTION_MODESTY_COST],
        vec![honesty_cost_gap, DECEPTION_MODESTY_COST],
    ])
}

/// Quality-reporting game with partially conflicting interests: reports the
/// stationary deceiver share (time average over the second half of the run,
/// since the interior point is a cycling center) and classifies the
/// time-averaged population.
pub fn scenario_deception(
    benefit_bias: f64,
    honesty_cost_gap: f64,
    cfg: &ScenarioConfig,
) -> Result<ScenarioResult> {
    let game = apply_game_patch(deception_game(benefit_bias, honesty_cost_gap)?, &cfg.game_patch)?;
    let dynamics = cfg.dynamics.clone().unwrap_or(DynamicsConfig::ReplicatorFlow {
        t_end: 1000.0,
        dt: 0.1,
        init: InitCondition::Dirichlet,
    });
    if !dynamics.is_population() {
        return Err(Error::Param {
            field: "dynamics".to_string(),
            detail: "deception scenario needs a population dynamic".to_string(),
        });
    }
    let digest = short_digest(&("deception", &game, &dynamics, cfg.seed, cfg.tol));
    let mut result = ScenarioResult::new("deception", digest, cfg.seed);

    let (traj, terminal) = run_config_full(&game, &dynamics, cfg.seed)?;
    let terminal = terminal.expect("population dynamics return a terminal state");

    // Time-averaged population over the second half of the run.
    let samples = traj.samples();
    let half_start = samples.last().expect("non-empty").time / 2.0;
    let tail: Vec<_> = samples.iter().filter(|s| s.time >= half_start).collect();
    let n_tail = tail.len() as f64;
    let mut avg_sender = vec![0.0; tail[0].sender.len()];
    let mut avg_receiver = vec![0.0; tail[0].receiver.len()];
    for s in &tail {
        for (acc, v) in avg_sender.iter_mut().zip(&s.sender) {
            *acc += v / n_tail;
        }
        for (acc, v) in avg_receiver.iter_mut().zip(&s.receiver) {
            *acc += v / n_tail;
        }
    }
    let norm_s: f64 = avg_sender.iter().sum();
    let norm_r: f64 = avg_receiver.iter().sum();
    avg_sender.iter_mut().for_each(|v| *v /= norm_s);
    avg_receiver.iter_mut().for_each(|v| *v /= norm_r);
    let averaged = PopulationState::new(avg_sender.clone(), avg_receiver.clone(), terminal.time)?;

    let deceiver_share = |shares: &[f64]| -> f64 {
        shares
            .iter()
            .enumerate()
            .filter(|(index, _)| {
                // Strategies claiming good (signal 0) in the bad state (state 1).
                PureStrategyIndex { role: Role::Sender, index: *index }.map(&game)[1] == 0
            })
            .map(|(_, share)| share)
            .sum()
    };
    let trust_share: f64 = avg_receiver
        .iter()
        .enumerate()
        .filter(|(index, _)| {
            PureStrategyIndex { role: Role::Receiver, index: *index }.map(&game)[0] == 0
        })
        .map(|(_, share)| share)
        .sum();

    result.summary.insert("deceiver_share".to_string(), deceiver_share(&avg_sender));
    result.summary.insert("deceiver_share_terminal".to_string(), deceiver_share(&terminal.sender_pop));
    result.summary.insert("trust_share".to_string(), trust_share);
    result.summary.insert(
        "terminal_mi_state_signal".to_string(),
        traj.last().metrics.mi_state_signal,
    );
    result.classification =
        Some(classify_with(&game, &averaged, &dynamics, cfg.tol, &classify_options(cfg))?);
    result.trajectory = Some(traj);
    Ok(result)
}

/// Reward-the-measure experiment: run the basic game until `switch_time`,
/// then replace the sender's payoff with reward 1 for emitting signal 0
/// regardless of state or act, and keep running. Reports MI(state;signal)
/// before and after.
pub fn scenario_goodhart(switch_time: f64, cfg: &ScenarioConfig) -> Result<ScenarioResult> {
    let game = apply_game_patch(SignalingGame::lewis(2, 2, 2, &[0.5, 0.5])?, &cfg.game_patch)?;
    let dynamics = cfg.dynamics.clone().unwrap_or(DynamicsConfig::ReplicatorFlow {
        t_end: 1000.0,
        dt: 0.1,
        init: InitCondition::Dirichlet,
    });
    let gamed_payoff: Vec<Vec<Vec<f64>>> = (0..game.n_states())
        .map(|_| {
            (0..game.n_signals())
                .map(|m| vec![if m == 0 { 1.0 } else { 0.0 }; game.n_acts()])
                .collect()
        })
        .collect();
    let gamed = game.with_sender_payoff(gamed_payoff)?;

    let digest = short_digest(&("goodhart", &game, &dynamics, switch_time, cfg.seed, cfg.tol));
    let mut result = ScenarioResult::new("goodhart", digest, cfg.seed);

    let (mut traj, pre_pop, post_game) = match &dynamics {
        DynamicsConfig::ReplicatorFlow { t_end, dt, init } => {
            if !(0.0..=*t_end).contains(&switch_time) {
                return Err(Error::Param {
                    field: "switch_time".to_string(),
                    detail: format!("must lie within [0, t_end={t_end}], got {switch_time}"),
                });
            }
            let rep1 = Replicator::new(&game)?;
            let rep2 = Replicator::new(&gamed)?;
            let init_pop = init.realize(&game, cfg.seed)?;
            let mut traj = rep1.empty_trajectory("goodhart", (&dynamics, switch_time), cfg.seed);
            let at_switch = rep1.flow_run(&init_pop, switch_time, *dt, &mut traj)?;
            let mi_pre = traj.last().metrics.mi_state_signal;
            let terminal = rep2.flow_run(&at_switch, *t_end - switch_time, *dt, &mut traj)?;
            result.summary.insert("mi_pre_switch".to_string(), mi_pre);
            (traj, terminal, gamed)
        }
        DynamicsConfig::ReplicatorMap { generations, init } => {
            let switch_gen = switch_time.round() as u64;
            if switch_time < 0.0 || switch_gen > *generations {
                return Err(Error::Param {
                    field: "switch_time".to_string(),
                    detail: format!(
                        "must lie within [0, generations={generations}], got {switch_time}"
                    ),
                });
            }
            let rep1 = Replicator::new(&game)?;
            let rep2 = Replicator::new(&gamed)?;
            let init_pop = init.realize(&game, cfg.seed)?;
            let mut traj = rep1.empty_trajectory("goodhart", (&dynamics, switch_time), cfg.seed);
            let at_switch = rep1.map_run(&init_pop, switch_gen, &mut traj)?;
            let mi_pre = traj.last().metrics.mi_state_signal;
            let terminal = rep2.map_run(&at_switch, *generations - switch_gen, &mut traj)?;
            result.summary.insert("mi_pre_switch".to_string(), mi_pre);
            (traj, terminal, gamed)
        }
        other => {
            return Err(Error::Param {
                field: "dynamics".to_string(),
                detail: format!("goodhart needs a population dynamic, got {}", other.kind()),
            });
        }
    };

    let last = traj.last().metrics;
    result.summary.insert("mi_post_switch".to_string(), last.mi_state_signal);
    result.summary.insert("terminal_success".to_string(), last.success);
    result.classification = Some(classify_with(
        &post_game,
        &pre_pop,
        &dynamics,
        cfg.tol,
        &classify_options(cfg),
    )?);
    // Trajectory metrics after the switch were computed under the gamed
    // payoffs; nothing to recompute here.
    traj.seed = cfg.seed;
    result.trajectory = Some(traj);
    Ok(result)
}

/// Registry entry describing one named scenario.
#[derive(Debug, Clone, Serialize)]
pub struct ScenarioInfo {
    pub name: &'static str,
    pub description: &'static str,
    pub default_dynamics: &'static str,
}

/// All registered scenarios, in display order.
pub fn list() -> Vec<ScenarioInfo> {
    vec![
        ScenarioInfo {
            name: "basic_lewis",
            description: "Basic 2x2x2 sender-receiver game; a shared language emerges",
            default_dynamics: "replicator_flow",
        },
        ScenarioInfo {
            name: "costly_signal",
            description: "Signal costs and skewed priors break the symmetry between languages",
            default_dynamics: "replicator_flow",
        },
        ScenarioInfo {
            name: "bottleneck",
            description: "Fewer signals than states; communication hits the pooling ceiling",
            default_dynamics: "replicator_flow",
        },
        ScenarioInfo {
            name: "deception",
            description: "Quality reporting with deceptive types; contained deception persists",
            default_dynamics: "replicator_flow",
        },
        ScenarioInfo {
            name: "goodhart",
            description: "Rewarding the signal itself erodes its association with the state",
            default_dynamics: "replicator_flow",
        },
        ScenarioInfo {
            name: "apology",
            description: "Iterated PD with apologies; cost and fakeability are interchangeable",
            default_dynamics: "replicator_flow",
        },
    ]
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct CostlyParams {
    cost_delta: f64,
    rare_prob: f64,
}

impl Default for CostlyParams {
    fn default() -> Self {
        CostlyParams { cost_delta: 0.15, rare_prob: 0.3 }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct BottleneckParams {
    n_states: usize,
    n_signals: usize,
}

impl Default for BottleneckParams {
    fn default() -> Self {
        BottleneckParams { n_states: 3, n_signals: 2 }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct DeceptionParams {
    benefit_bias: f64,
    honesty_cost_gap: f64,
}

impl Default for DeceptionParams {
    fn default() -> Self {
        DeceptionParams { benefit_bias: 4.0, honesty_cost_gap: 2.6 }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct GoodhartParams {
    switch_time: f64,
}

impl Default for GoodhartParams {
    fn default() -> Self {
        GoodhartParams { switch_time: 300.0 }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ApologyParams {
    pd_payoffs: (f64, f64, f64, f64),
    continuation: f64,
    error_rate: f64,
    costs: Vec<f64>,
    fakeabilities: Vec<f64>,
    matches_per_pair: u64,
}

impl Default for ApologyParams {
    fn default() -> Self {
        ApologyParams {
            pd_payoffs: (5.0, 3.0, 1.0, 0.0),
            continuation: 0.995,
            error_rate: 0.05,
            costs: vec![0.0, 0.625, 1.25, 1.875, 2.5],
            fakeabilities: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            matches_per_pair: 200,
        }
    }
}

fn parse_params<T: serde::de::DeserializeOwned>(params: &Value) -> Result<T> {
    serde_json::from_value(params.clone()).map_err(|e| Error::Param {
        field: "params".to_string(),
        detail: e.to_string(),
    })
}

/// Run a registered scenario by name, with scenario-specific parameters as
/// a JSON object (defaults fill anything missing).
pub fn run_by_name(name: &str, params: &Value, cfg: &ScenarioConfig) -> Result<ScenarioResult> {
    if !params.is_object() && !params.is_null() {
        return Err(Error::Param {
            field: "params".to_string(),
            detail: "must be a JSON object".to_string(),
        });
    }
    let params = if params.is_null() { Value::Object(Default::default()) } else { params.clone() };
    match name {
        "basic_lewis" => {
            #[derive(Deserialize, Default)]
            #[serde(deny_unknown_fields, default)]
            struct BasicParams {}
            let _: BasicParams = parse_params(&params)?;
            scenario_basic_lewis(cfg)
        }
        "costly_signal" => {
            let p: CostlyParams = parse_params(&params)?;
            scenario_costly_signal(p.cost_delta, p.rare_prob, cfg)
        }
        "bottleneck" => {
            let p: BottleneckParams = parse_params(&params)?;
            scenario_bottleneck(p.n_states, p.n_signals, cfg)
        }
        "deception" => {
            let p: DeceptionParams = parse_params(&params)?;
            scenario_deception(p.benefit_bias, p.honesty_cost_gap, cfg)
        }
        "goodhart" => {
            let p: GoodhartParams = parse_params(&params)?;
            scenario_goodhart(p.switch_time, cfg)
        }
        "apology" => {
            let p: ApologyParams = parse_params(&params)?;
            if p.costs.is_empty() || p.fakeabilities.is_empty() {
                return Err(Error::Param {
                    field: "grid".to_string(),
                    detail: "costs and fakeabilities must be non-empty".to_string(),
                });
            }
            let spec = ApologyGameSpec {
                pd_payoffs: p.pd_payoffs,
                continuation: p.continuation,
                apology_cost: p.costs[0],
                fakeability: p.fakeabilities[0],
                error_rate: p.error_rate,
            };
            let grid: Vec<(f64, f64)> = p
                .costs
                .iter()
                .flat_map(|c| p.fakeabilities.iter().map(move |f| (*c, *f)))
                .collect();
            scenario_apology(&spec, &grid, p.matches_per_pair, cfg)
        }
        other => Err(Error::UnknownScenario(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::EquilibriumTag;
    use crate::dynamics::replicator_step;

    #[test]
    fn basic_lewis_converges_to_a_signaling_system() {
        let cfg = ScenarioConfig::with_seed(1);
        let result = scenario_basic_lewis(&cfg).unwrap();
        assert_eq!(result.classification.unwrap().tag, EquilibriumTag::SignalingSystem);
        assert!(result.summary["terminal_success"] >= 0.99);
        assert!(result.summary["converged_at"] < 500.0);
    }

    #[test]
    fn basic_lewis_at_the_uniform_rest_point_reports_no_signaling() {
        let cfg = ScenarioConfig {
            dynamics: Some(DynamicsConfig::ReplicatorFlow {
                t_end: 100.0,
                dt: 0.1,
                init: InitCondition::Uniform,
            }),
            ..ScenarioConfig::with_seed(1)
        };
        let result = scenario_basic_lewis(&cfg).unwrap();
        assert_eq!(result.classification.unwrap().tag, EquilibriumTag::Pooling);
        assert!(result.summary["terminal_mi_state_signal"].abs() < 1e-9);
    }

    #[test]
    fn basic_lewis_roth_erev_variant_reports_rolling_success() {
        let cfg = ScenarioConfig {
            dynamics: Some(DynamicsConfig::RothErev { init_weight: 1.0, horizon: 100_000 }),
            ..ScenarioConfig::with_seed(3)
        };
        let result = scenario_basic_lewis(&cfg).unwrap();
        assert!(result.summary["rolling_success"] >= 0.9);
        assert_eq!(result.summary["rolling_window"], 1000.0);
        assert!(result.classification.is_none());
    }

    #[test]
    fn costly_signal_with_no_cost_at_even_odds_recovers_the_basic_game() {
        // cost_delta 0 and rare_prob 0.5 build exactly the basic game, so
        // the basin report must coincide with the basic game's.
        let cfg = ScenarioConfig { n_samples: 100, ..ScenarioConfig::with_seed(5) };
        let result = scenario_costly_signal(0.0, 0.5, &cfg).unwrap();
        let game = SignalingGame::lewis(2, 2, 2, &[0.5, 0.5]).unwrap();
        let basic = crate::analysis::estimate_basins_with(
            &game,
            &default_flow(),
            100,
            5,
            cfg.tol,
            &Default::default(),
        )
        .unwrap();
        assert_eq!(result.basin.unwrap().classes, basic.classes);
        let both = result.summary["share_costly_rare"] + result.summary["share_other_system"];
        assert!((both - 1.0).abs() < 1e-12);
    }

    #[test]
    fn costly_signal_shifts_basins_toward_the_costly_rare_language() {
        let cfg = ScenarioConfig { n_samples: 400, ..ScenarioConfig::with_seed(7) };
        let result = scenario_costly_signal(0.15, 0.3, &cfg).unwrap();
        assert!(
            result.summary["share_costly_rare"] > result.summary["share_other_system"],
            "{result:?}"
        );
        assert!(result.summary["share_costly_rare"] > 0.5);
    }

    #[test]
    fn prohibitive_cost_drives_the_costly_signal_out_of_use() {
        let cfg = ScenarioConfig { n_samples: 300, ..ScenarioConfig::with_seed(11) };
        let result = scenario_costly_signal(0.6, 0.3, &cfg).unwrap();
        assert!(result.summary["fraction_pooling"] > 0.0);
    }

    #[test]
    fn costly_signal_validates_parameters() {
        let cfg = ScenarioConfig::with_seed(1);
        assert!(scenario_costly_signal(-0.1, 0.3, &cfg).is_err());
        assert!(scenario_costly_signal(0.1, 0.0, &cfg).is_err());
        assert!(scenario_costly_signal(0.1, 0.6, &cfg).is_err());
    }

    #[test]
    fn bottleneck_respects_the_deterministic_pair_ceiling() {
        let cfg = ScenarioConfig::with_seed(2);
        let result = scenario_bottleneck(3, 2, &cfg).unwrap();
        assert!((result.summary["success_ceiling"] - 2.0 / 3.0).abs() < 1e-12);
        assert!(result.summary["terminal_success"] <= 2.0 / 3.0 + 1e-6);
        assert!((result.summary["mi_ceiling"] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bottleneck_without_bottleneck_reduces_to_the_basic_scenario() {
        let cfg = ScenarioConfig::with_seed(1);
        let result = scenario_bottleneck(2, 2, &cfg).unwrap();
        assert!((result.summary["success_ceiling"] - 1.0).abs() < 1e-12);
        assert!(result.summary["terminal_success"] >= 0.99);
    }

    #[test]
    fn four_states_two_signals_cap_mi_at_one_bit() {
        let cfg = ScenarioConfig::with_seed(3);
        let result = scenario_bottleneck(4, 2, &cfg).unwrap();
        assert!((result.summary["mi_ceiling"] - 1.0).abs() < 1e-12);
        assert!(result.summary["terminal_mi_state_act"] <= 1.0 + 1e-9);
    }

    #[test]
    fn bottleneck_rejects_misordered_dimensions() {
        let cfg = ScenarioConfig::with_seed(1);
        assert!(scenario_bottleneck(2, 3, &cfg).is_err());
    }

    #[test]
    fn deception_fixed_point_is_stationary_and_pseudo_separating() {
        // Analytic interior rest point: deceiver share p_good/p_bad, trust
        // share (gap - modesty cost)/bias. Verified against the replicator
        // map directly, then classified.
        let bias = 4.0;
        let gap = 2.6;
        let game = deception_game(bias, gap).unwrap();
        let deceiver = DECEPTION_GOOD_PRIOR / (1.0 - DECEPTION_GOOD_PRIOR);
        let trust = (gap - DECEPTION_MODESTY_COST) / bias;
        let pop = PopulationState::new(
            vec![deceiver, 1.0 - deceiver, 0.0, 0.0],
            vec![0.0, trust, 0.0, 1.0 - trust],
            0.0,
        )
        .unwrap();
        let next = replicator_step(&game, &pop).unwrap();
        for (a, b) in pop.sender_pop.iter().zip(&next.sender_pop) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in pop.receiver_pop.iter().zip(&next.receiver_pop) {
            assert!((a - b).abs() < 1e-12);
        }
        let dynamics = DynamicsConfig::ReplicatorFlow {
            t_end: 1000.0,
            dt: 0.1,
            init: InitCondition::Dirichlet,
        };
        let class = crate::analysis::classify(&game, &pop, &dynamics, 0.05).unwrap();
        assert_eq!(class.tag, EquilibriumTag::PseudoSeparating);
        assert!(class.detail.contains("0.17"));
    }

    #[test]
    fn deception_intermediate_gap_sustains_a_contained_minority() {
        for seed in [1, 2, 3] {
            let cfg = ScenarioConfig::with_seed(seed);
            let result = scenario_deception(4.0, 2.6, &cfg).unwrap();
            let share = result.summary["deceiver_share"];
            assert!(share > 0.01 && share < 0.25, "seed {seed}: share {share}");
            assert_eq!(result.classification.unwrap().tag, EquilibriumTag::PseudoSeparating);
        }
    }

    #[test]
    fn deception_large_gap_separates_honestly() {
        let cfg = ScenarioConfig::with_seed(1);
        let result = scenario_deception(4.0, 5.0, &cfg).unwrap();
        assert!(result.summary["deceiver_share"] <= 0.01);
        assert_eq!(result.classification.unwrap().tag, EquilibriumTag::SignalingSystem);
    }

    #[test]
    fn deception_zero_gap_collapses_the_signal() {
        for seed in [1, 2, 3] {
            let cfg = ScenarioConfig::with_seed(seed);
            let result = scenario_deception(4.0, 0.0, &cfg).unwrap();
            assert!(result.summary["terminal_mi_state_signal"] <= 0.05);
            assert_eq!(result.classification.unwrap().tag, EquilibriumTag::Pooling);
        }
    }

    #[test]
    fn goodhart_switch_erodes_mutual_information() {
        let cfg = ScenarioConfig::with_seed(2);
        let result = scenario_goodhart(300.0, &cfg).unwrap();
        assert!(result.summary["mi_pre_switch"] >= 0.99);
        assert!(result.summary["mi_post_switch"] <= 0.05);
        assert_eq!(result.classification.unwrap().tag, EquilibriumTag::Pooling);
    }

    #[test]
    fn goodhart_from_the_start_never_builds_information() {
        let cfg = ScenarioConfig {
            dynamics: Some(DynamicsConfig::ReplicatorFlow {
                t_end: 1000.0,
                dt: 0.1,
                init: InitCondition::Uniform,
            }),
            ..ScenarioConfig::with_seed(1)
        };
        let result = scenario_goodhart(0.0, &cfg).unwrap();
        let traj = result.trajectory.unwrap();
        let max_mi = traj
            .samples()
            .iter()
            .map(|s| s.metrics.mi_state_signal)
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(max_mi <= 0.05, "MI reached {max_mi}");
    }

    #[test]
    fn goodhart_control_run_keeps_its_language() {
        let cfg = ScenarioConfig::with_seed(2);
        let result = scenario_goodhart(1000.0, &cfg).unwrap();
        assert!(result.summary["mi_post_switch"] >= 0.99);
    }

    #[test]
    fn goodhart_erosion_is_monotone_after_the_pooling_response_settles() {
        let cfg = ScenarioConfig::with_seed(4);
        let result = scenario_goodhart(300.0, &cfg).unwrap();
        let traj = result.trajectory.unwrap();
        let post: Vec<f64> = traj
            .samples()
            .iter()
            .filter(|s| s.time >= 320.0)
            .map(|s| s.metrics.mi_state_signal)
            .collect();
        for pair in post.windows(2) {
            assert!(pair[1] <= pair[0] + 0.02, "MI rose from {} to {}", pair[0], pair[1]);
        }
    }

    #[test]
    fn goodhart_validates_the_switch_time() {
        let cfg = ScenarioConfig::with_seed(1);
        match scenario_goodhart(1500.0, &cfg) {
            Err(Error::Param { field, .. }) => assert_eq!(field, "switch_time"),
            other => panic!("expected switch_time error, got {other:?}"),
        }
    }

    #[test]
    fn game_patches_merge_over_scenario_defaults() {
        let cfg = ScenarioConfig {
            game_patch: Some(serde_json::json!({"noise": 0.1})),
            ..ScenarioConfig::with_seed(1)
        };
        let result = scenario_basic_lewis(&cfg).unwrap();
        // Noise caps achievable success at 0.9.
        assert!(result.summary["terminal_success"] <= 0.9 + 1e-9);
        let invalid = ScenarioConfig {
            game_patch: Some(serde_json::json!({"prior": [0.45, 0.45]})),
            ..ScenarioConfig::with_seed(1)
        };
        assert!(scenario_basic_lewis(&invalid).is_err());
    }

    #[test]
    fn registry_lists_and_dispatches_every_scenario() {
        let names: Vec<&str> = list().iter().map(|s| s.name).collect();
        assert_eq!(
            names,
            vec!["basic_lewis", "costly_signal", "bottleneck", "deception", "goodhart", "apology"]
        );
        assert!(list().len() >= 6);

        let cfg = ScenarioConfig { n_samples: 50, ..ScenarioConfig::with_seed(1) };
        for info in list() {
            let params = if info.name == "apology" {
                serde_json::json!({
                    "costs": [0.0, 2.5],
                    "fakeabilities": [0.0, 1.0],
                    "matches_per_pair": 20
                })
            } else {
                serde_json::json!({})
            };
            let result = run_by_name(info.name, &params, &cfg).unwrap();
            assert_eq!(result.scenario, info.name);
            assert!(result.trajectory.is_some(), "{} lacks a trajectory", info.name);
        }
    }

    #[test]
    fn registry_rejects_unknown_names_and_parameters() {
        let cfg = ScenarioConfig::with_seed(1);
        assert!(matches!(
            run_by_name("nonsense", &serde_json::json!({}), &cfg),
            Err(Error::UnknownScenario(_))
        ));
        match run_by_name("goodhart", &serde_json::json!({"switch": 3}), &cfg) {
            Err(Error::Param { field, detail }) => {
                assert_eq!(field, "params");
                assert!(detail.contains("switch"));
            }
            other => panic!("expected params error, got {other:?}"),
        }
    }

    #[test]
    fn scenario_runs_are_reproducible() {
        let cfg = ScenarioConfig::with_seed(13);
        let a = scenario_basic_lewis(&cfg).unwrap();
        let b = scenario_basic_lewis(&cfg).unwrap();
        assert_eq!(a.summary, b.summary);
        assert_eq!(a.config_digest, b.config_digest);
        assert_eq!(
            a.trajectory.unwrap().to_csv_string(),
            b.trajectory.unwrap().to_csv_string()
        );
    }
}
