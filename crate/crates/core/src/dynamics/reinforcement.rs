use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::SignalingGame;
use crate::util::short_digest;

use super::trajectory::{behavioral_metrics, Trajectory, TrajectorySample};

/// Urn weights for both learners: `sender_weights[state][signal]` and
/// `receiver_weights[signal][act]`, all positive and non-decreasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReinforcementState {
    pub sender_weights: Vec<Vec<f64>>,
    pub receiver_weights: Vec<Vec<f64>>,
}

impl ReinforcementState {
    fn flat(game: &SignalingGame, init_weight: f64) -> Self {
        ReinforcementState {
            sender_weights: vec![vec![init_weight; game.n_signals()]; game.n_states()],
            receiver_weights: vec![vec![init_weight; game.n_acts()]; game.n_signals()],
        }
    }

    pub fn behavioral_sender(&self) -> Vec<Vec<f64>> {
        normalize_rows(&self.sender_weights)
    }

    pub fn behavioral_receiver(&self) -> Vec<Vec<f64>> {
        normalize_rows(&self.receiver_weights)
    }
}

fn normalize_rows(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    m.iter()
        .map(|row| {
            let sum: f64 = row.iter().sum();
            row.iter().map(|w| w / sum).collect()
        })
        .collect()
}

/// What happened in one reinforcement round.
#[derive(Debug, Clone, Copy)]
pub struct RoundOutcome {
    pub state: usize,
    pub sent: usize,
    pub received: usize,
    pub act: usize,
    /// `act == state`, when acts can index states.
    pub matched: Option<bool>,
    pub sender_reward: f64,
    pub receiver_reward: f64,
}

/// Roth-Erev urn learning: sample a state from the prior, a signal and an
/// act from the normalized urn weights, then add each side's realized payoff
/// to the urn entries just used. No discounting.
pub struct RothErev<'g> {
    game: &'g SignalingGame,
    pub state: ReinforcementState,
    rng: ChaCha8Rng,
    rounds_done: u64,
}

impl<'g> RothErev<'g> {
    pub fn new(game: &'g SignalingGame, init_weight: f64, seed: u64) -> Result<Self> {
        if !(init_weight > 0.0) || !init_weight.is_finite() {
            return Err(Error::Param {
                field: "init_weight".to_string(),
                detail: format!("must be positive, got {init_weight}"),
            });
        }
        Ok(RothErev {
            game,
            state: ReinforcementState::flat(game, init_weight),
            rng: ChaCha8Rng::seed_from_u64(seed),
            rounds_done: 0,
        })
    }

    pub fn rounds_done(&self) -> u64 {
        self.rounds_done
    }

    fn sample_index(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
        let total: f64 = weights.iter().sum();
        let mut target = rng.gen::<f64>() * total;
        for (i, w) in weights.iter().enumerate() {
            target -= w;
            if target < 0.0 {
                return i;
            }
        }
        weights.len() - 1
    }

    pub fn step(&mut self) -> Result<RoundOutcome> {
        let game = self.game;
        let state = Self::sample_index(&mut self.rng, game.prior());
        let sent = Self::sample_index(&mut self.rng, &self.state.sender_weights[state]);
        let received = if game.noise() > 0.0 && self.rng.gen::<f64>() < game.noise() {
            // Uniform over the other signals.
            let other = self.rng.gen_range(0..game.n_signals() - 1);
            if other >= sent {
                other + 1
            } else {
                other
            }
        } else {
            sent
        };
        let act = Self::sample_index(&mut self.rng, &self.state.receiver_weights[received]);

        let sender_reward = game.sender_payoff(state, received, act) - game.signal_cost(state, sent);
        let receiver_reward = game.receiver_payoff(state, received, act);
        if sender_reward < 0.0 {
            return Err(Error::NegativePayoff(sender_reward));
        }
        if receiver_reward < 0.0 {
            return Err(Error::NegativePayoff(receiver_reward));
        }
        self.state.sender_weights[state][sent] += sender_reward;
        self.state.receiver_weights[received][act] += receiver_reward;
        self.rounds_done += 1;

        let matched = (game.n_acts() >= game.n_states()).then_some(act == state);
        Ok(RoundOutcome { state, sent, received, act, matched, sender_reward, receiver_reward })
    }

    fn sample(&self, time: f64) -> TrajectorySample {
        let encode = self.state.behavioral_sender();
        let decode = self.state.behavioral_receiver();
        let metrics = behavioral_metrics(self.game, &encode, &decode);
        TrajectorySample {
            time,
            sender: encode.into_iter().flatten().collect(),
            receiver: decode.into_iter().flatten().collect(),
            metrics,
        }
    }
}

/// Summary of realized play at the end of a reinforcement run.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RothErevStats {
    /// Number of trailing rounds the rolling figure covers.
    pub rolling_window: u64,
    /// Fraction of those rounds where the act matched the state (NaN for
    /// bottleneck games).
    pub rolling_success: f64,
}

fn weight_labels(game: &SignalingGame) -> (Vec<String>, Vec<String>) {
    let sender = (0..game.n_states())
        .flat_map(|s| (0..game.n_signals()).map(move |m| format!("w_s{s}_m{m}")))
        .collect();
    let receiver = (0..game.n_signals())
        .flat_map(|m| (0..game.n_acts()).map(move |a| format!("w_m{m}_a{a}")))
        .collect();
    (sender, receiver)
}

/// Run urn reinforcement for `horizon` rounds, sampling the behavioral
/// strategies on a logarithmic schedule (initial state, geometrically spaced
/// rounds, and the final round).
pub fn roth_erev_run(
    game: &SignalingGame,
    init_weight: f64,
    horizon: u64,
    seed: u64,
) -> Result<Trajectory> {
    roth_erev_run_with_stats(game, init_weight, horizon, seed).map(|(t, _)| t)
}

/// [`roth_erev_run`] plus the realized rolling success over the trailing
/// `min(1000, horizon)` rounds.
pub fn roth_erev_run_with_stats(
    game: &SignalingGame,
    init_weight: f64,
    horizon: u64,
    seed: u64,
) -> Result<(Trajectory, RothErevStats)> {
    if horizon < 1 {
        return Err(Error::Param {
            field: "horizon".to_string(),
            detail: "must be at least 1".to_string(),
        });
    }
    let mut sim = RothErev::new(game, init_weight, seed)?;
    let digest = short_digest(&(game, "roth_erev", init_weight, horizon, seed));
    let (sender_labels, receiver_labels) = weight_labels(game);
    let mut traj = Trajectory::new(sender_labels, receiver_labels, digest, seed);
    traj.push(sim.sample(0.0))?;

    let window = horizon.min(1000);
    let mut recent = std::collections::VecDeque::with_capacity(window as usize);
    let mut next_record = 1u64;
    for round in 1..=horizon {
        let outcome = sim.step()?;
        if let Some(m) = outcome.matched {
            if recent.len() == window as usize {
                recent.pop_front();
            }
            recent.push_back(m);
        }
        if round == next_record || round == horizon {
            traj.push(sim.sample(round as f64))?;
            next_record = (next_record + 1).max((next_record as f64 * 1.25) as u64);
        }
    }

    let rolling_success = if recent.is_empty() {
        f64::NAN
    } else {
        recent.iter().filter(|m| **m).count() as f64 / recent.len() as f64
    };
    Ok((traj, RothErevStats { rolling_window: window, rolling_success }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    fn basic_game() -> SignalingGame {
        SignalingGame::lewis(2, 2, 2, &[0.5, 0.5]).unwrap()
    }

    #[test]
    fn single_round_adds_exactly_the_realized_rewards() {
        let game = basic_game();
        let mut sim = RothErev::new(&game, 1.0, 3).unwrap();
        let outcome = sim.step().unwrap();
        let sender_total: f64 = sim.state.sender_weights.iter().flatten().sum();
        let receiver_total: f64 = sim.state.receiver_weights.iter().flatten().sum();
        assert_eq!(sender_total, 4.0 + outcome.sender_reward);
        assert_eq!(receiver_total, 4.0 + outcome.receiver_reward);
        let changed = sim
            .state
            .sender_weights
            .iter()
            .flatten()
            .filter(|w| **w != 1.0)
            .count();
        assert!(changed <= 1);
    }

    #[test]
    fn unreachable_states_are_never_updated() {
        let game = SignalingGame::lewis(2, 2, 2, &[1.0, 0.0]).unwrap();
        let mut sim = RothErev::new(&game, 1.0, 5).unwrap();
        for _ in 0..1000 {
            sim.step().unwrap();
        }
        assert_eq!(sim.state.sender_weights[1], vec![1.0, 1.0]);
        assert!(sim.state.sender_weights[0].iter().sum::<f64>() > 2.0);
    }

    #[test]
    fn runs_are_deterministic_per_seed() {
        let game = basic_game();
        let a = roth_erev_run(&game, 1.0, 5000, 11).unwrap();
        let b = roth_erev_run(&game, 1.0, 5000, 11).unwrap();
        assert_eq!(a, b);
        let c = roth_erev_run(&game, 1.0, 5000, 12).unwrap();
        assert_ne!(a.to_csv_string(), c.to_csv_string());
    }

    #[test]
    fn negative_realized_payoffs_are_rejected() {
        let game = basic_game()
            .with_signal_cost(vec![vec![2.0, 2.0], vec![2.0, 2.0]])
            .unwrap();
        let mut sim = RothErev::new(&game, 1.0, 0).unwrap();
        match sim.step() {
            Err(Error::NegativePayoff(_)) => {}
            other => panic!("expected negative payoff error, got {other:?}"),
        }
    }

    #[test]
    fn parameters_are_validated() {
        let game = basic_game();
        assert!(RothErev::new(&game, 0.0, 0).is_err());
        assert!(roth_erev_run(&game, 1.0, 0, 0).is_err());
    }

    #[test]
    fn learning_reaches_high_rolling_success_at_desk_scale() {
        // Monte-Carlo oracle: 200 seeds, horizon 1e5, trailing-1000 realized
        // success at least 0.9 in at least 95% of runs.
        use rayon::prelude::*;
        let game = basic_game();
        let passed = (0..200u64)
            .into_par_iter()
            .filter(|seed| {
                let (_, stats) = roth_erev_run_with_stats(&game, 1.0, 100_000, *seed).unwrap();
                stats.rolling_success >= 0.9
            })
            .count();
        assert!(passed >= 190, "only {passed}/200 runs reached rolling success 0.9");
    }

    #[test]
    fn log_schedule_is_sparse_and_covers_the_run() {
        let game = basic_game();
        let traj = roth_erev_run(&game, 1.0, 100_000, 1).unwrap();
        let times: Vec<f64> = traj.samples().iter().map(|s| s.time).collect();
        assert!(times.len() < 100, "{} samples is not logarithmic", times.len());
        assert_eq!(*times.first().unwrap(), 0.0);
        assert_eq!(*times.last().unwrap(), 100_000.0);
    }
}
