use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::game::{
    enumerate_pure_strategies, PureStrategyIndex, ReceiverStrategy, Role, SenderStrategy,
    SignalingGame,
};
use crate::util::short_digest;

use super::trajectory::{behavioral_metrics, Trajectory, TrajectorySample};

/// Myopic best reply of the sender against a fixed receiver strategy,
/// evaluated under the sender's subjective prior and including signal costs.
///
/// The reply decomposes per state, so no strategy enumeration is needed;
/// ties go to the lowest signal, which makes the overall reply the lowest
/// pure-strategy index among maximizers.
pub fn sender_best_response(game: &SignalingGame, receiver: &ReceiverStrategy) -> PureStrategyIndex {
    let mut map = Vec::with_capacity(game.n_states());
    for s in 0..game.n_states() {
        let mut best = 0usize;
        let mut best_value = f64::NEG_INFINITY;
        for m in 0..game.n_signals() {
            let mut value = -game.signal_cost(s, m);
            for received in 0..game.n_signals() {
                let p_ch = game.channel(m, received);
                for a in 0..game.n_acts() {
                    value += p_ch * receiver.prob(received, a) * game.sender_payoff(s, received, a);
                }
            }
            if value > best_value + 1e-12 {
                best = m;
                best_value = value;
            }
        }
        map.push(best);
    }
    PureStrategyIndex { role: Role::Sender, index: map_to_index(&map, game.n_signals()) }
}

/// Myopic best reply of the receiver against a fixed sender strategy,
/// under the receiver's subjective prior. Ties go to the lowest act.
pub fn receiver_best_response(game: &SignalingGame, sender: &SenderStrategy) -> PureStrategyIndex {
    // Probability (up to normalization) that each signal arrives from each
    // state, under the receiver's prior.
    let mut arrive = vec![vec![0.0; game.n_states()]; game.n_signals()];
    for s in 0..game.n_states() {
        for m in 0..game.n_signals() {
            let p = game.receiver_prior()[s] * sender.prob(s, m);
            if p == 0.0 {
                continue;
            }
            for received in 0..game.n_signals() {
                arrive[received][s] += p * game.channel(m, received);
            }
        }
    }
    let mut map = Vec::with_capacity(game.n_signals());
    for received in 0..game.n_signals() {
        let mut best = 0usize;
        let mut best_value = f64::NEG_INFINITY;
        for a in 0..game.n_acts() {
            let value: f64 = (0..game.n_states())
                .map(|s| arrive[received][s] * game.receiver_payoff(s, received, a))
                .sum();
            if value > best_value + 1e-12 {
                best = a;
                best_value = value;
            }
        }
        map.push(best);
    }
    PureStrategyIndex { role: Role::Receiver, index: map_to_index(&map, game.n_acts()) }
}

fn map_to_index(map: &[usize], base: usize) -> usize {
    map.iter().fold(0, |acc, &digit| acc * base + digit)
}

/// Best-response play with inertia and experimentation, both sides replying
/// simultaneously to the opponent's previous pure strategy. Starts from a
/// seeded random strategy pair.
pub fn best_response_run(
    game: &SignalingGame,
    inertia: f64,
    experiment_rate: f64,
    horizon: u64,
    seed: u64,
) -> Result<Trajectory> {
    let n_sender = enumerate_pure_strategies(game, Role::Sender)?.len();
    let n_receiver = enumerate_pure_strategies(game, Role::Receiver)?.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let init_sender = rng.gen_range(0..n_sender);
    let init_receiver = rng.gen_range(0..n_receiver);
    best_response_impl(game, init_sender, init_receiver, inertia, experiment_rate, horizon, seed, rng)
}

/// [`best_response_run`] from explicit initial pure strategies.
pub fn best_response_run_from(
    game: &SignalingGame,
    init_sender: usize,
    init_receiver: usize,
    inertia: f64,
    experiment_rate: f64,
    horizon: u64,
    seed: u64,
) -> Result<Trajectory> {
    let rng = ChaCha8Rng::seed_from_u64(seed);
    best_response_impl(game, init_sender, init_receiver, inertia, experiment_rate, horizon, seed, rng)
}

#[allow(clippy::too_many_arguments)]
fn best_response_impl(
    game: &SignalingGame,
    init_sender: usize,
    init_receiver: usize,
    inertia: f64,
    experiment_rate: f64,
    horizon: u64,
    seed: u64,
    mut rng: ChaCha8Rng,
) -> Result<Trajectory> {
    for (field, v) in [("inertia", inertia), ("experiment_rate", experiment_rate)] {
        if !(0.0..1.0).contains(&v) {
            return Err(Error::Param {
                field: field.to_string(),
                detail: format!("must lie in [0, 1), got {v}"),
            });
        }
    }
    if horizon < 1 {
        return Err(Error::Param {
            field: "horizon".to_string(),
            detail: "must be at least 1".to_string(),
        });
    }
    let n_sender = enumerate_pure_strategies(game, Role::Sender)?.len();
    let n_receiver = enumerate_pure_strategies(game, Role::Receiver)?.len();
    if init_sender >= n_sender || init_receiver >= n_receiver {
        return Err(Error::Param {
            field: "init".to_string(),
            detail: "initial strategy index out of range".to_string(),
        });
    }

    let digest = short_digest(&(
        game,
        "best_response",
        init_sender,
        init_receiver,
        inertia,
        experiment_rate,
        horizon,
        seed,
    ));
    let mut traj = Trajectory::new(
        (0..n_sender).map(|i| format!("x{i}")).collect(),
        (0..n_receiver).map(|j| format!("y{j}")).collect(),
        digest,
        seed,
    );

    let mut current_s = init_sender;
    let mut current_r = init_receiver;
    traj.push(pure_sample(game, current_s, current_r, n_sender, n_receiver, 0.0))?;

    for t in 1..=horizon {
        let prev_sender =
            PureStrategyIndex { role: Role::Sender, index: current_s }.sender_strategy(game);
        let prev_receiver =
            PureStrategyIndex { role: Role::Receiver, index: current_r }.receiver_strategy(game);

        let next_s = if rng.gen::<f64>() < inertia {
            current_s
        } else if rng.gen::<f64>() < experiment_rate {
            rng.gen_range(0..n_sender)
        } else {
            sender_best_response(game, &prev_receiver).index
        };
        let next_r = if rng.gen::<f64>() < inertia {
            current_r
        } else if rng.gen::<f64>() < experiment_rate {
            rng.gen_range(0..n_receiver)
        } else {
            receiver_best_response(game, &prev_sender).index
        };
        current_s = next_s;
        current_r = next_r;
        traj.push(pure_sample(game, current_s, current_r, n_sender, n_receiver, t as f64))?;
    }
    Ok(traj)
}

fn pure_sample(
    game: &SignalingGame,
    sender_idx: usize,
    receiver_idx: usize,
    n_sender: usize,
    n_receiver: usize,
    time: f64,
) -> TrajectorySample {
    let mut sender = vec![0.0; n_sender];
    sender[sender_idx] = 1.0;
    let mut receiver = vec![0.0; n_receiver];
    receiver[receiver_idx] = 1.0;
    let encode = PureStrategyIndex { role: Role::Sender, index: sender_idx }
        .sender_strategy(game)
        .encode()
        .to_vec();
    let decode = PureStrategyIndex { role: Role::Receiver, index: receiver_idx }
        .receiver_strategy(game)
        .decode()
        .to_vec();
    TrajectorySample {
        time,
        sender,
        receiver,
        metrics: behavioral_metrics(game, &encode, &decode),
    }
}
