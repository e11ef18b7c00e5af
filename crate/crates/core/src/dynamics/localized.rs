use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{enumerate_pure_strategies, Role, SignalingGame};
use crate::util::short_digest;

use super::trajectory::{behavioral_metrics, Trajectory, TrajectorySample};
use super::{mean_receiver_strategy, mean_sender_strategy};

/// How nodes revise strategies after a round of play.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateRule {
    /// Copy the strategy pair of the best-scoring interaction partner,
    /// with probability proportional to how far it outperformed the node.
    /// The proportional adoption keeps the well-mixed limit close to the
    /// replicator dynamics; copying on rank alone lets low-variance
    /// middling strategies stabilize away from it.
    ImitateBest,
}

/// Named graph constructions plus raw adjacency lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphSpec {
    Complete { n: usize },
    Ring { n: usize },
    /// Disjoint fully connected cliques of the given sizes.
    Cliques { sizes: Vec<usize> },
    Adjacency { list: Vec<Vec<usize>> },
}

impl GraphSpec {
    pub fn build(&self) -> Result<Vec<Vec<usize>>> {
        let adjacency = match self {
            GraphSpec::Complete { n } => (0..*n)
                .map(|i| (0..*n).filter(|j| *j != i).collect())
                .collect(),
            GraphSpec::Ring { n } => {
                if *n == 1 {
                    vec![vec![]]
                } else if *n == 2 {
                    vec![vec![1], vec![0]]
                } else {
                    (0..*n).map(|i| vec![(i + *n - 1) % *n, (i + 1) % *n]).collect()
                }
            }
            GraphSpec::Cliques { sizes } => {
                let mut adjacency = Vec::new();
                let mut offset = 0;
                for size in sizes {
                    for i in 0..*size {
                        adjacency.push(
                            (0..*size).filter(|j| *j != i).map(|j| offset + j).collect(),
                        );
                    }
                    offset += size;
                }
                adjacency
            }
            GraphSpec::Adjacency { list } => list.clone(),
        };
        if adjacency.is_empty() {
            return Err(Error::EmptyGraph);
        }
        let n = adjacency.len();
        if adjacency.iter().flatten().any(|j| *j >= n) {
            return Err(Error::Param {
                field: "graph".to_string(),
                detail: "neighbor index out of range".to_string(),
            });
        }
        Ok(adjacency)
    }
}

/// Imitation dynamics on a graph: every node holds one pure sender and one
/// pure receiver strategy; each round every node plays both roles against a
/// sampled neighbor (realized games: sampled state, noisy channel), then
/// copies the strategy pair of the best-performing neighbor it interacted
/// with, when that neighbor outperformed it (synchronous update). The
/// trajectory records global strategy frequencies.
///
/// Imitation compares only realized-payoff interaction partners. Copying
/// the global argmax of expected payoffs would make dense graphs
/// monomorphic in one round, and exact expected-payoff ties freeze mixed
/// states; sampled play keeps the dynamics close to the well-mixed limit.
pub fn localized_run(
    game: &SignalingGame,
    adjacency: &[Vec<usize>],
    rule: UpdateRule,
    rounds: u64,
    seed: u64,
) -> Result<Trajectory> {
    let UpdateRule::ImitateBest = rule;
    let n = adjacency.len();
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    if adjacency.iter().flatten().any(|j| *j >= n) {
        return Err(Error::Param {
            field: "graph".to_string(),
            detail: "neighbor index out of range".to_string(),
        });
    }

    let sender_maps: Vec<Vec<usize>> = enumerate_pure_strategies(game, Role::Sender)?
        .iter()
        .map(|p| p.map(game))
        .collect();
    let receiver_maps: Vec<Vec<usize>> = enumerate_pure_strategies(game, Role::Receiver)?
        .iter()
        .map(|p| p.map(game))
        .collect();
    let n_sender = sender_maps.len();
    let n_receiver = receiver_maps.len();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut senders: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n_sender)).collect();
    let mut receivers: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n_receiver)).collect();

    let digest = short_digest(&(game, "localized", adjacency, rounds, seed));
    let mut traj = Trajectory::new(
        (0..n_sender).map(|i| format!("x{i}")).collect(),
        (0..n_receiver).map(|j| format!("y{j}")).collect(),
        digest,
        seed,
    );
    traj.push(frequency_sample(game, &senders, &receivers, n_sender, n_receiver, 0.0))?;

    let prior = game.prior();
    // Payoff span for scaling adoption probabilities.
    let (a, b) = crate::game::payoff_matrices(game)?;
    let hi = a.iter().chain(&b).flatten().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = a.iter().chain(&b).flatten().copied().fold(f64::INFINITY, f64::min);
    let span = (hi - lo).max(1e-9);

    let play = |rng: &mut ChaCha8Rng, sender_map: &[usize], receiver_map: &[usize]| {
        let mut target = rng.gen::<f64>();
        let mut state = prior.len() - 1;
        for (s, p) in prior.iter().enumerate() {
            target -= p;
            if target < 0.0 {
                state = s;
                break;
            }
        }
        let sent = sender_map[state];
        let received = if game.noise() > 0.0 && rng.gen::<f64>() < game.noise() {
            let other = rng.gen_range(0..game.n_signals() - 1);
            if other >= sent {
                other + 1
            } else {
                other
            }
        } else {
            sent
        };
        let act = receiver_map[received];
        let sender_payoff = game.sender_payoff(state, received, act) - game.signal_cost(state, sent);
        let receiver_payoff = game.receiver_payoff(state, received, act);
        (sender_payoff, receiver_payoff)
    };

    let mut sender_scores = vec![0.0; n];
    let mut receiver_scores = vec![0.0; n];
    let mut sender_plays = vec![0u32; n];
    let mut receiver_plays = vec![0u32; n];
    let mut partners: Vec<Vec<usize>> = vec![Vec::new(); n];
    for round in 1..=rounds {
        sender_scores.iter_mut().for_each(|s| *s = 0.0);
        receiver_scores.iter_mut().for_each(|s| *s = 0.0);
        sender_plays.iter_mut().for_each(|p| *p = 0);
        receiver_plays.iter_mut().for_each(|p| *p = 0);
        partners.iter_mut().for_each(|p| p.clear());

        for i in 0..n {
            if adjacency[i].is_empty() {
                continue;
            }
            let j = adjacency[i][rng.gen_range(0..adjacency[i].len())];
            // i as sender vs j as receiver, then roles reversed.
            let (sp1, rp1) = play(&mut rng, &sender_maps[senders[i]], &receiver_maps[receivers[j]]);
            let (sp2, rp2) = play(&mut rng, &sender_maps[senders[j]], &receiver_maps[receivers[i]]);
            sender_scores[i] += sp1;
            receiver_scores[j] += rp1;
            sender_scores[j] += sp2;
            receiver_scores[i] += rp2;
            sender_plays[i] += 1;
            sender_plays[j] += 1;
            receiver_plays[i] += 1;
            receiver_plays[j] += 1;
            partners[i].push(j);
            partners[j].push(i);
        }

        let perf = |scores: &[f64], plays: &[u32], k: usize| {
            if plays[k] > 0 {
                scores[k] / plays[k] as f64
            } else {
                0.0
            }
        };

        // Each role is imitated independently from the node's interaction
        // partners; joint pair-copying creates linkage equilibria that the
        // two-population dynamics do not have.
        let mut next_senders = senders.clone();
        let mut next_receivers = receivers.clone();
        for i in 0..n {
            let mut best = i;
            for &j in &partners[i] {
                if perf(&sender_scores, &sender_plays, j)
                    > perf(&sender_scores, &sender_plays, best) + 1e-12
                {
                    best = j;
                }
            }
            if best != i {
                let gap = perf(&sender_scores, &sender_plays, best)
                    - perf(&sender_scores, &sender_plays, i);
                if rng.gen::<f64>() < gap / span {
                    next_senders[i] = senders[best];
                }
            }
            let mut best = i;
            for &j in &partners[i] {
                if perf(&receiver_scores, &receiver_plays, j)
                    > perf(&receiver_scores, &receiver_plays, best) + 1e-12
                {
                    best = j;
                }
            }
            if best != i {
                let gap = perf(&receiver_scores, &receiver_plays, best)
                    - perf(&receiver_scores, &receiver_plays, i);
                if rng.gen::<f64>() < gap / span {
                    next_receivers[i] = receivers[best];
                }
            }
        }
        senders = next_senders;
        receivers = next_receivers;
        traj.push(frequency_sample(game, &senders, &receivers, n_sender, n_receiver, round as f64))?;
    }
    Ok(traj)
}

fn frequency_sample(
    game: &SignalingGame,
    senders: &[usize],
    receivers: &[usize],
    n_sender: usize,
    n_receiver: usize,
    time: f64,
) -> TrajectorySample {
    let n = senders.len() as f64;
    let mut sender = vec![0.0; n_sender];
    for &s in senders {
        sender[s] += 1.0 / n;
    }
    let mut receiver = vec![0.0; n_receiver];
    for &r in receivers {
        receiver[r] += 1.0 / n;
    }
    let encode = mean_sender_strategy(game, &sender);
    let decode = mean_receiver_strategy(game, &receiver);
    TrajectorySample {
        time,
        sender,
        receiver,
        metrics: behavioral_metrics(game, &encode, &decode),
    }
}
