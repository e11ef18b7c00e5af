//! Quantifying communication and classifying outcomes.
//!
//! Mutual information between discrete variables, the zero-cost
//! communication-success rate, an equilibrium classifier over population
//! states (signaling system / pooling / partial pooling / pseudo-separating),
//! and Monte-Carlo basin-of-attraction estimation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    mean_receiver_strategy, mean_sender_strategy, DynamicsConfig, PopulationState, Replicator,
};
use crate::error::{Error, Result};
use crate::game::{PureStrategyIndex, ReceiverStrategy, Role, SenderStrategy, SignalingGame};
use crate::util::short_digest;

const JOINT_TOL: f64 = 1e-9;

/// Mutual information of a joint distribution, in bits, with `0 log 0 = 0`.
pub fn mutual_information(joint: &[Vec<f64>]) -> Result<f64> {
    if joint.is_empty() || joint[0].is_empty() {
        return Err(Error::InvalidJoint("empty matrix".to_string()));
    }
    let cols = joint[0].len();
    if joint.iter().any(|r| r.len() != cols) {
        return Err(Error::InvalidJoint("ragged rows".to_string()));
    }
    if joint.iter().flatten().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::InvalidJoint("entries must be finite and non-negative".to_string()));
    }
    let total: f64 = joint.iter().flatten().sum();
    if (total - 1.0).abs() > JOINT_TOL {
        return Err(Error::InvalidJoint(format!("entries must sum to 1, got {total}")));
    }

    let row_marginal: Vec<f64> = joint.iter().map(|r| r.iter().sum()).collect();
    let mut col_marginal = vec![0.0; cols];
    for row in joint {
        for (j, p) in row.iter().enumerate() {
            col_marginal[j] += p;
        }
    }
    let mut mi = 0.0;
    for (i, row) in joint.iter().enumerate() {
        for (j, &p) in row.iter().enumerate() {
            if p > 0.0 {
                mi += p * (p / (row_marginal[i] * col_marginal[j])).log2();
            }
        }
    }
    Ok(mi.max(0.0))
}

/// Shannon entropy of a distribution, in bits.
pub fn entropy_bits(dist: &[f64]) -> f64 {
    dist.iter().filter(|p| **p > 0.0).map(|p| -p * p.log2()).sum()
}

/// Probability that the receiver's act index equals the state index,
/// ignoring payoffs and costs. Undefined (an error) when acts cannot index
/// states.
pub fn communication_success(
    game: &SignalingGame,
    sender: &SenderStrategy,
    receiver: &ReceiverStrategy,
) -> Result<f64> {
    if game.n_acts() < game.n_states() {
        return Err(Error::ActsUndefined { n_states: game.n_states(), n_acts: game.n_acts() });
    }
    let mut success = 0.0;
    for s in 0..game.n_states() {
        let p_s = game.prior()[s];
        if p_s == 0.0 {
            continue;
        }
        for m in 0..game.n_signals() {
            let p_m = sender.prob(s, m);
            if p_m == 0.0 {
                continue;
            }
            for received in 0..game.n_signals() {
                success += p_s * p_m * game.channel(m, received) * receiver.prob(received, s);
            }
        }
    }
    Ok(success)
}

/// Best communication success attainable by any deterministic strategy
/// pair, by direct enumeration. Success is bilinear in the strategies, so
/// this is also the ceiling over all mixed profiles.
pub fn communication_success_ceiling(game: &SignalingGame) -> Result<f64> {
    let senders = crate::game::enumerate_pure_strategies(game, Role::Sender)?;
    let receivers = crate::game::enumerate_pure_strategies(game, Role::Receiver)?;
    let mut best: f64 = 0.0;
    for ps in &senders {
        let s = ps.sender_strategy(game);
        for pr in &receivers {
            let r = pr.receiver_strategy(game);
            best = best.max(communication_success(game, &s, &r)?);
        }
    }
    Ok(best)
}

/// Outcome class assigned by [`classify`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EquilibriumTag {
    SignalingSystem,
    Pooling,
    PartialPooling,
    PseudoSeparating,
    NonStationary,
}

impl EquilibriumTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            EquilibriumTag::SignalingSystem => "SignalingSystem",
            EquilibriumTag::Pooling => "Pooling",
            EquilibriumTag::PartialPooling => "PartialPooling",
            EquilibriumTag::PseudoSeparating => "PseudoSeparating",
            EquilibriumTag::NonStationary => "NonStationary",
        }
    }
}

/// Classification of a population state, with the state-to-signal language
/// for signaling systems and a free-text diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumClass {
    pub tag: EquilibriumTag,
    /// For signaling systems: the signal each state maps to.
    pub language: Option<Vec<usize>>,
    pub detail: String,
}

impl EquilibriumClass {
    /// Stable aggregation key: the tag, decorated with the language for
    /// signaling systems (e.g. `SignalingSystem[0,1]`).
    pub fn key(&self) -> String {
        match &self.language {
            Some(lang) => {
                let digits: Vec<String> = lang.iter().map(|m| m.to_string()).collect();
                format!("{}[{}]", self.tag.as_str(), digits.join(","))
            }
            None => self.tag.as_str().to_string(),
        }
    }
}

/// Knobs for [`classify_with`]. `pseudo_threshold` is the largest minority
/// share still counted as contained deception.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ClassifyOptions {
    pub pseudo_threshold: f64,
    /// Probe length (number of dynamics steps) used to test stationarity.
    pub probe_steps: usize,
    /// Probe step size for flow-based probes.
    pub probe_dt: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions { pseudo_threshold: 0.25, probe_steps: 20, probe_dt: 0.1 }
    }
}

/// Classify a population state under the given dynamics.
///
/// The state must be stationary (probed by evolving it and requiring every
/// share to move at most `tol`); otherwise `NonStationary`. Decision rules,
/// in order:
///
/// 1. SignalingSystem: the mean behavioral strategies are within `tol` of a
///    deterministic injective state-to-signal map inverted by the receiver,
///    and MI(state; act) is within `tol` of its ceiling
///    `min(H(prior), log2 n_signals, log2 n_acts)`.
/// 2. Pooling: MI(state; signal) <= tol.
/// 3. PseudoSeparating: the majority encoding is injective, receivers'
///    modal response inverts it, and the population share encoding against
///    the majority language lies in (tol, pseudo_threshold).
/// 4. PartialPooling: any other stationary state.
pub fn classify(
    game: &SignalingGame,
    pop: &PopulationState,
    dynamics: &DynamicsConfig,
    tol: f64,
) -> Result<EquilibriumClass> {
    classify_with(game, pop, dynamics, tol, &ClassifyOptions::default())
}

pub fn classify_with(
    game: &SignalingGame,
    pop: &PopulationState,
    dynamics: &DynamicsConfig,
    tol: f64,
    opts: &ClassifyOptions,
) -> Result<EquilibriumClass> {
    let replicator = Replicator::new(game)?;
    let stationary = match dynamics {
        DynamicsConfig::ReplicatorMap { .. } => {
            replicator.is_stationary_map(pop, opts.probe_steps, tol)?
        }
        // Learning dynamics do not evolve a population state; probe with the
        // flow, the population-level dynamic.
        _ => replicator.is_stationary(pop, opts.probe_steps, opts.probe_dt, tol)?,
    };
    if !stationary {
        return Ok(EquilibriumClass {
            tag: EquilibriumTag::NonStationary,
            language: None,
            detail: "population still moving under probe".to_string(),
        });
    }

    let encode = mean_sender_strategy(game, &pop.sender_pop);
    let decode = mean_receiver_strategy(game, &pop.receiver_pop);
    let prior = game.prior();

    let joint_signal: Vec<Vec<f64>> = (0..game.n_states())
        .map(|s| (0..game.n_signals()).map(|m| prior[s] * encode[s][m]).collect())
        .collect();
    let mi_signal = mutual_information(&joint_signal)?;

    let mut joint_act = vec![vec![0.0; game.n_acts()]; game.n_states()];
    for s in 0..game.n_states() {
        for m in 0..game.n_signals() {
            for received in 0..game.n_signals() {
                let p = prior[s] * encode[s][m] * game.channel(m, received);
                if p == 0.0 {
                    continue;
                }
                for a in 0..game.n_acts() {
                    joint_act[s][a] += p * decode[received][a];
                }
            }
        }
    }
    let mi_act = mutual_information(&joint_act)?;
    let mi_ceiling = entropy_bits(prior)
        .min((game.n_signals() as f64).log2())
        .min((game.n_acts() as f64).log2());

    // Modal signal per state and modal act per signal.
    let modal_signal: Vec<usize> = (0..game.n_states())
        .map(|s| {
            (0..game.n_signals())
                .max_by(|x, y| encode[s][*x].partial_cmp(&encode[s][*y]).unwrap())
                .unwrap()
        })
        .collect();
    let injective = {
        let mut seen = vec![false; game.n_signals()];
        modal_signal.iter().all(|&m| !std::mem::replace(&mut seen[m], true))
    };

    if injective {
        let sharp_sender =
            (0..game.n_states()).all(|s| encode[s][modal_signal[s]] >= 1.0 - tol);
        let sharp_receiver = game.n_acts() >= game.n_states()
            && (0..game.n_states()).all(|s| decode[modal_signal[s]][s] >= 1.0 - tol);
        if sharp_sender && sharp_receiver && mi_act >= mi_ceiling - tol {
            return Ok(EquilibriumClass {
                tag: EquilibriumTag::SignalingSystem,
                language: Some(modal_signal),
                detail: format!("MI(state;act) {mi_act:.4} of ceiling {mi_ceiling:.4} bits"),
            });
        }
    }

    if mi_signal <= tol {
        return Ok(EquilibriumClass {
            tag: EquilibriumTag::Pooling,
            language: None,
            detail: format!("MI(state;signal) {mi_signal:.4} bits"),
        });
    }

    if injective && game.n_acts() >= game.n_states() {
        // Share of senders whose encoding deviates from the majority
        // language anywhere.
        let mut deviant_share = 0.0;
        for (index, share) in pop.sender_pop.iter().enumerate() {
            if *share == 0.0 {
                continue;
            }
            let map = PureStrategyIndex { role: Role::Sender, index }.map(game);
            if map != modal_signal {
                deviant_share += share;
            }
        }
        let receivers_track_majority = (0..game.n_states()).all(|s| {
            let row = &decode[modal_signal[s]];
            let modal_act = (0..game.n_acts())
                .max_by(|x, y| row[*x].partial_cmp(&row[*y]).unwrap())
                .unwrap();
            modal_act == s
        });
        if receivers_track_majority
            && deviant_share > tol
            && deviant_share < opts.pseudo_threshold
        {
            return Ok(EquilibriumClass {
                tag: EquilibriumTag::PseudoSeparating,
                language: None,
                detail: format!("deceiver share {deviant_share:.4}"),
            });
        }
    }

    Ok(EquilibriumClass {
        tag: EquilibriumTag::PartialPooling,
        language: None,
        detail: format!("MI(state;signal) {mi_signal:.4} bits"),
    })
}

/// One class line of a [`BasinReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasinClass {
    pub tag: String,
    pub count: u64,
    pub fraction: f64,
    /// 95% binomial confidence half-width (normal approximation).
    pub ci95: f64,
}

/// Monte-Carlo estimate of basin-of-attraction shares by outcome class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasinReport {
    pub classes: Vec<BasinClass>,
    pub n_samples: u64,
    pub seed: u64,
    pub config_digest: String,
}

impl BasinReport {
    pub fn fraction_of(&self, key: &str) -> f64 {
        self.classes.iter().find(|c| c.tag == key).map_or(0.0, |c| c.fraction)
    }

    pub fn ci95_of(&self, key: &str) -> f64 {
        self.classes.iter().find(|c| c.tag == key).map_or(0.0, |c| c.ci95)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

/// Sample Dirichlet-uniform initial conditions, run the configured
/// population dynamics from each, classify the terminal states, and
/// aggregate class fractions with binomial confidence intervals.
///
/// Sample `i` uses seed `seed + i`, so results are independent of the
/// parallel schedule. Per-sample dynamics errors are recorded as
/// `NonStationary` rather than failing the estimate.
pub fn estimate_basins(
    game: &SignalingGame,
    dynamics: &DynamicsConfig,
    n_samples: u64,
    seed: u64,
) -> Result<BasinReport> {
    estimate_basins_with(game, dynamics, n_samples, seed, 0.05, &ClassifyOptions::default())
}

pub fn estimate_basins_with(
    game: &SignalingGame,
    dynamics: &DynamicsConfig,
    n_samples: u64,
    seed: u64,
    tol: f64,
    opts: &ClassifyOptions,
) -> Result<BasinReport> {
    if n_samples < 1 {
        return Err(Error::Param {
            field: "n_samples".to_string(),
            detail: "must be at least 1".to_string(),
        });
    }
    if !dynamics.is_population() {
        return Err(Error::Param {
            field: "dynamics".to_string(),
            detail: format!("basin estimation needs a population dynamic, got {}", dynamics.kind()),
        });
    }
    let replicator = Replicator::new(game)?;

    let keys: Vec<String> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let sample_seed = seed.wrapping_add(i);
            let mut rng = ChaCha8Rng::seed_from_u64(sample_seed);
            let run = PopulationState::sample_uniform(game, &mut rng).and_then(|init| {
                let terminal = match dynamics {
                    DynamicsConfig::ReplicatorFlow { t_end, dt, .. } => {
                        replicator.flow_terminal(&init, *t_end, *dt)?
                    }
                    DynamicsConfig::ReplicatorMap { generations, .. } => {
                        let mut pop = init;
                        for _ in 0..*generations {
                            pop = replicator.step(&pop)?;
                        }
                        pop
                    }
                    _ => unreachable!("population dynamics checked above"),
                };
                classify_with(game, &terminal, dynamics, tol, opts)
            });
            match run {
                Ok(class) => class.key(),
                Err(_) => EquilibriumTag::NonStationary.as_str().to_string(),
            }
        })
        .collect();

    let mut counts = std::collections::BTreeMap::new();
    for key in keys {
        *counts.entry(key).or_insert(0u64) += 1;
    }
    let n = n_samples as f64;
    let classes = counts
        .into_iter()
        .map(|(tag, count)| {
            let fraction = count as f64 / n;
            let ci95 = 1.96 * (fraction * (1.0 - fraction) / n).sqrt();
            BasinClass { tag, count, fraction, ci95 }
        })
        .collect();
    Ok(BasinReport {
        classes,
        n_samples,
        seed,
        config_digest: short_digest(&(game, dynamics, n_samples, seed)),
    })
}
