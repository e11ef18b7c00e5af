//! Cross-module invariants: linearity, symmetry, equivariance, determinism.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use siggame::analysis::{classify, entropy_bits, mutual_information};
use siggame::dynamics::{
    run_config, run_config_full, DynamicsConfig, GraphSpec, InitCondition, PopulationState,
};
use siggame::game::{expected_payoffs, GameSpec, ReceiverStrategy, SenderStrategy, SignalingGame};

fn simplex_strategy(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1e-3..1.0f64, n).prop_map(|raw| {
        let sum: f64 = raw.iter().sum();
        raw.iter().map(|x| x / sum).collect()
    })
}

fn game_strategy() -> impl Strategy<Value = SignalingGame> {
    (2usize..4, 2usize..4, 2usize..4).prop_flat_map(|(ns, nm, na)| {
        (
            simplex_strategy(ns),
            prop::collection::vec(-2.0..2.0f64, ns * nm * na),
            prop::collection::vec(-2.0..2.0f64, ns * nm * na),
            prop::collection::vec(0.0..1.0f64, ns * nm),
            0.0..0.5f64,
        )
            .prop_map(move |(prior, spay, rpay, cost, noise)| {
                let tensor = |flat: &[f64]| -> Vec<Vec<Vec<f64>>> {
                    (0..ns)
                        .map(|s| {
                            (0..nm)
                                .map(|m| {
                                    (0..na).map(|a| flat[(s * nm + m) * na + a]).collect()
                                })
                                .collect()
                        })
                        .collect()
                };
                SignalingGame::try_from(GameSpec {
                    n_states: ns,
                    n_signals: nm,
                    n_acts: na,
                    prior: prior.clone(),
                    sender_prior: prior.clone(),
                    receiver_prior: prior,
                    sender_payoff: tensor(&spay),
                    receiver_payoff: tensor(&rpay),
                    signal_cost: (0..ns)
                        .map(|s| (0..nm).map(|m| cost[s * nm + m]).collect())
                        .collect(),
                    noise,
                })
                .expect("generated games are valid")
            })
    })
}

fn rows(n: usize, k: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(simplex_strategy(k), n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn expected_payoffs_are_linear_in_the_sender_mixture(
        game in game_strategy(),
        w in 0.0..1.0f64,
        seed in 0u64..1000,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s1 = random_sender(&mut rng, &game);
        let s2 = random_sender(&mut rng, &game);
        let r = random_receiver(&mut rng, &game);
        let mixed = SenderStrategy::new(
            s1.encode()
                .iter()
                .zip(s2.encode())
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| w * x + (1.0 - w) * y).collect())
                .collect(),
        )
        .unwrap();
        let (v1, u1) = expected_payoffs(&game, &s1, &r).unwrap();
        let (v2, u2) = expected_payoffs(&game, &s2, &r).unwrap();
        let (vm, um) = expected_payoffs(&game, &mixed, &r).unwrap();
        prop_assert!((vm - (w * v1 + (1.0 - w) * v2)).abs() < 1e-9);
        prop_assert!((um - (w * u1 + (1.0 - w) * u2)).abs() < 1e-9);
    }

    #[test]
    fn mutual_information_is_symmetric_and_bounded(
        joint in (2usize..5, 2usize..5).prop_flat_map(|(r, c)| {
            prop::collection::vec(1e-6..1.0f64, r * c).prop_map(move |raw| {
                let sum: f64 = raw.iter().sum();
                (0..r)
                    .map(|i| (0..c).map(|j| raw[i * c + j] / sum).collect::<Vec<f64>>())
                    .collect::<Vec<Vec<f64>>>()
            })
        })
    ) {
        let mi = mutual_information(&joint).unwrap();
        let cols = joint[0].len();
        let transposed: Vec<Vec<f64>> = (0..cols)
            .map(|j| joint.iter().map(|row| row[j]).collect())
            .collect();
        let mi_t = mutual_information(&transposed).unwrap();
        prop_assert!((mi - mi_t).abs() < 1e-12);

        let row_marginal: Vec<f64> = joint.iter().map(|r| r.iter().sum()).collect();
        let col_marginal: Vec<f64> =
            (0..cols).map(|j| joint.iter().map(|r| r[j]).sum()).collect();
        prop_assert!(mi >= 0.0);
        prop_assert!(mi <= entropy_bits(&row_marginal).min(entropy_bits(&col_marginal)) + 1e-12);
    }

    #[test]
    fn replicator_flow_keeps_populations_on_the_simplex(
        game in game_strategy(),
        seed in 0u64..500,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let init = PopulationState::sample_uniform(&game, &mut rng).unwrap();
        let traj = siggame::dynamics::replicator_flow(&game, &init, 5.0, 0.1).unwrap();
        for sample in traj.samples() {
            let sx: f64 = sample.sender.iter().sum();
            let sy: f64 = sample.receiver.iter().sum();
            prop_assert!((sx - 1.0).abs() <= 1e-9);
            prop_assert!((sy - 1.0).abs() <= 1e-9);
            prop_assert!(sample.sender.iter().all(|v| *v >= 0.0));
            prop_assert!(sample.receiver.iter().all(|v| *v >= 0.0));
        }
    }
}

fn random_sender(rng: &mut ChaCha8Rng, game: &SignalingGame) -> SenderStrategy {
    use rand::Rng;
    SenderStrategy::new(
        (0..game.n_states())
            .map(|_| {
                let raw: Vec<f64> =
                    (0..game.n_signals()).map(|_| -f64::ln(1.0 - rng.gen::<f64>())).collect();
                let sum: f64 = raw.iter().sum();
                raw.iter().map(|x| x / sum).collect()
            })
            .collect(),
    )
    .unwrap()
}

fn random_receiver(rng: &mut ChaCha8Rng, game: &SignalingGame) -> ReceiverStrategy {
    use rand::Rng;
    ReceiverStrategy::new(
        (0..game.n_signals())
            .map(|_| {
                let raw: Vec<f64> =
                    (0..game.n_acts()).map(|_| -f64::ln(1.0 - rng.gen::<f64>())).collect();
                let sum: f64 = raw.iter().sum();
                raw.iter().map(|x| x / sum).collect()
            })
            .collect(),
    )
    .unwrap()
}

/// Relabeling the two signals consistently everywhere permutes trajectories
/// without changing metrics.
#[test]
fn replicator_flow_is_equivariant_under_signal_relabeling() {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..10 {
        let spec = GameSpec {
            n_states: 2,
            n_signals: 2,
            n_acts: 2,
            prior: vec![0.4, 0.6],
            sender_prior: vec![0.4, 0.6],
            receiver_prior: vec![0.4, 0.6],
            sender_payoff: (0..2)
                .map(|_| {
                    (0..2)
                        .map(|_| (0..2).map(|_| rng.gen_range(-1.0..2.0)).collect())
                        .collect()
                })
                .collect(),
            receiver_payoff: (0..2)
                .map(|_| {
                    (0..2)
                        .map(|_| (0..2).map(|_| rng.gen_range(-1.0..2.0)).collect())
                        .collect()
                })
                .collect(),
            signal_cost: (0..2)
                .map(|_| (0..2).map(|_| rng.gen_range(0.0..0.5)).collect())
                .collect(),
            noise: rng.gen_range(0.0..0.4),
        };
        let game = SignalingGame::try_from(spec.clone()).unwrap();

        // Swap the signal labels: payoff/cost columns swap; sender pure
        // strategies map i -> 3 - i, receiver pure strategies swap their
        // digit positions (1 <-> 2).
        let mut swapped = spec.clone();
        for s in 0..2 {
            swapped.sender_payoff[s].swap(0, 1);
            swapped.receiver_payoff[s].swap(0, 1);
            swapped.signal_cost[s].swap(0, 1);
        }
        let permuted_game = SignalingGame::try_from(swapped).unwrap();

        let sender_perm = |i: usize| 3 - i;
        let receiver_perm = |j: usize| match j {
            1 => 2,
            2 => 1,
            other => other,
        };

        let init = {
            let mut r = ChaCha8Rng::seed_from_u64(rng.gen());
            PopulationState::sample_uniform(&game, &mut r).unwrap()
        };
        let mut permuted_sender = vec![0.0; 4];
        let mut permuted_receiver = vec![0.0; 4];
        for i in 0..4 {
            permuted_sender[sender_perm(i)] = init.sender_pop[i];
            permuted_receiver[receiver_perm(i)] = init.receiver_pop[i];
        }
        let permuted_init =
            PopulationState::new(permuted_sender, permuted_receiver, 0.0).unwrap();

        let traj = siggame::dynamics::replicator_flow(&game, &init, 50.0, 0.1).unwrap();
        let permuted_traj =
            siggame::dynamics::replicator_flow(&permuted_game, &permuted_init, 50.0, 0.1).unwrap();

        for (a, b) in traj.samples().iter().zip(permuted_traj.samples()) {
            for i in 0..4 {
                assert!((a.sender[i] - b.sender[sender_perm(i)]).abs() < 1e-9);
                assert!((a.receiver[i] - b.receiver[receiver_perm(i)]).abs() < 1e-9);
            }
            assert!((a.metrics.mi_state_signal - b.metrics.mi_state_signal).abs() < 1e-9);
            assert!((a.metrics.sender_mean_payoff - b.metrics.sender_mean_payoff).abs() < 1e-9);
        }
    }
}

/// The discrete map and the continuous flow agree on which attractor a
/// start belongs to, across 200 shared random starts of the basic game.
#[test]
fn map_and_flow_agree_on_attractor_classification() {
    use rayon::prelude::*;
    let game = SignalingGame::lewis(2, 2, 2, &[0.5, 0.5]).unwrap();
    let flow_config =
        DynamicsConfig::ReplicatorFlow { t_end: 500.0, dt: 0.1, init: InitCondition::Dirichlet };
    let map_config =
        DynamicsConfig::ReplicatorMap { generations: 2000, init: InitCondition::Dirichlet };
    let agreements = (0..200u64)
        .into_par_iter()
        .filter(|seed| {
            let (_, flow_pop) = run_config_full(&game, &flow_config, *seed).unwrap();
            let (_, map_pop) = run_config_full(&game, &map_config, *seed).unwrap();
            let flow_class = classify(&game, &flow_pop.unwrap(), &flow_config, 0.05).unwrap();
            let map_class = classify(&game, &map_pop.unwrap(), &map_config, 0.05).unwrap();
            flow_class.key() == map_class.key()
        })
        .count();
    assert_eq!(agreements, 200, "map and flow disagreed on {} starts", 200 - agreements);
}

/// Identical (configuration, seed) pairs give identical trajectories for
/// every dynamics family.
#[test]
fn all_dynamics_are_deterministic_given_config_and_seed() {
    let game = SignalingGame::lewis(2, 2, 2, &[0.5, 0.5]).unwrap();
    let configs = vec![
        DynamicsConfig::ReplicatorFlow { t_end: 50.0, dt: 0.1, init: InitCondition::Dirichlet },
        DynamicsConfig::ReplicatorMap { generations: 100, init: InitCondition::Dirichlet },
        DynamicsConfig::RothErev { init_weight: 1.0, horizon: 10_000 },
        DynamicsConfig::BestResponse { inertia: 0.1, experiment_rate: 0.05, horizon: 500 },
        DynamicsConfig::Localized { graph: GraphSpec::Ring { n: 24 }, rounds: 100 },
    ];
    for config in configs {
        let a = run_config(&game, &config, 42).unwrap();
        let b = run_config(&game, &config, 42).unwrap();
        assert_eq!(a, b, "{} was not deterministic", config.kind());
        assert_eq!(a.to_csv_string(), b.to_csv_string());
    }
}
