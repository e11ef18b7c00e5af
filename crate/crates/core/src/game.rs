//! Signaling games, strategies, and exact expected-payoff evaluation.
//!
//! A [`SignalingGame`] is a finite sender-receiver game: the sender observes
//! one of `n_states` states, emits one of `n_signals` signals (paying a
//! state-dependent cost), the signal passes through a symmetric noisy
//! channel, and the receiver maps the received signal to one of `n_acts`
//! acts. Payoff tensors are indexed `[state][signal][act]` so rewards may
//! attach to the signal itself, not only to the (state, act) pair.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SIMPLEX_TOL: f64 = 1e-12;

/// Default upper bound on the enumerable pure-strategy space per role.
pub const DEFAULT_ENUMERATION_CAP: u64 = 4096;

fn check_simplex(field: &str, v: &[f64], expected_len: usize) -> Result<()> {
    if v.len() != expected_len {
        return Err(Error::Simplex {
            field: field.to_string(),
            detail: format!("expected {} entries, got {}", expected_len, v.len()),
        });
    }
    if v.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::Simplex {
            field: field.to_string(),
            detail: "entries must be finite and non-negative".to_string(),
        });
    }
    let sum: f64 = v.iter().sum();
    if (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::Simplex {
            field: field.to_string(),
            detail: format!("entries must sum to 1, got {sum}"),
        });
    }
    Ok(())
}

fn check_rows(field: &str, m: &[Vec<f64>], rows: usize, cols: usize) -> Result<()> {
    if m.len() != rows || m.iter().any(|r| r.len() != cols) {
        return Err(Error::Mismatch(format!("{field}: expected {rows}x{cols} matrix")));
    }
    Ok(())
}

/// Raw field layout of a [`SignalingGame`], mirroring its JSON document.
///
/// This is both the serde representation and the public construction
/// surface: fill one in and convert with `SignalingGame::try_from`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GameSpec {
    pub n_states: usize,
    pub n_signals: usize,
    pub n_acts: usize,
    pub prior: Vec<f64>,
    pub sender_prior: Vec<f64>,
    pub receiver_prior: Vec<f64>,
    pub sender_payoff: Vec<Vec<Vec<f64>>>,
    pub receiver_payoff: Vec<Vec<Vec<f64>>>,
    pub signal_cost: Vec<Vec<f64>>,
    pub noise: f64,
}

/// A validated, immutable signaling game.
///
/// All invariants (simplex priors, finite payoffs, non-negative costs,
/// noise in `[0, 0.5]`) are established at construction; every operation on
/// the game is a pure function, so games are safe to share across threads.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "GameSpec", into = "GameSpec")]
pub struct SignalingGame {
    n_states: usize,
    n_signals: usize,
    n_acts: usize,
    prior: Vec<f64>,
    sender_prior: Vec<f64>,
    receiver_prior: Vec<f64>,
    sender_payoff: Vec<Vec<Vec<f64>>>,
    receiver_payoff: Vec<Vec<Vec<f64>>>,
    signal_cost: Vec<Vec<f64>>,
    noise: f64,
}

impl TryFrom<GameSpec> for SignalingGame {
    type Error = Error;

    fn try_from(spec: GameSpec) -> Result<Self> {
        if spec.n_states < 2 || spec.n_signals < 2 || spec.n_acts < 2 {
            return Err(Error::Dimension(format!(
                "n_states={}, n_signals={}, n_acts={} (each must be >= 2)",
                spec.n_states, spec.n_signals, spec.n_acts
            )));
        }
        check_simplex("prior", &spec.prior, spec.n_states)?;
        check_simplex("sender_prior", &spec.sender_prior, spec.n_states)?;
        check_simplex("receiver_prior", &spec.receiver_prior, spec.n_states)?;
        for (field, tensor) in [
            ("sender_payoff", &spec.sender_payoff),
            ("receiver_payoff", &spec.receiver_payoff),
        ] {
            if tensor.len() != spec.n_states
                || tensor.iter().any(|by_signal| {
                    by_signal.len() != spec.n_signals
                        || by_signal.iter().any(|by_act| by_act.len() != spec.n_acts)
                })
            {
                return Err(Error::Mismatch(format!(
                    "{field}: expected {}x{}x{} tensor",
                    spec.n_states, spec.n_signals, spec.n_acts
                )));
            }
            if tensor.iter().flatten().flatten().any(|p| !p.is_finite()) {
                return Err(Error::NonFinite { field: field.to_string() });
            }
        }
        check_rows("signal_cost", &spec.signal_cost, spec.n_states, spec.n_signals)?;
        if spec.signal_cost.iter().flatten().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::Param {
                field: "signal_cost".to_string(),
                detail: "entries must be finite and >= 0".to_string(),
            });
        }
        if !spec.noise.is_finite() || !(0.0..=0.5).contains(&spec.noise) {
            return Err(Error::NoiseRange(spec.noise));
        }
        Ok(SignalingGame {
            n_states: spec.n_states,
            n_signals: spec.n_signals,
            n_acts: spec.n_acts,
            prior: spec.prior,
            sender_prior: spec.sender_prior,
            receiver_prior: spec.receiver_prior,
            sender_payoff: spec.sender_payoff,
            receiver_payoff: spec.receiver_payoff,
            signal_cost: spec.signal_cost,
            noise: spec.noise,
        })
    }
}

impl From<SignalingGame> for GameSpec {
    fn from(g: SignalingGame) -> GameSpec {
        GameSpec {
            n_states: g.n_states,
            n_signals: g.n_signals,
            n_acts: g.n_acts,
            prior: g.prior,
            sender_prior: g.sender_prior,
            receiver_prior: g.receiver_prior,
            sender_payoff: g.sender_payoff,
            receiver_payoff: g.receiver_payoff,
            signal_cost: g.signal_cost,
            noise: g.noise,
        }
    }
}

impl SignalingGame {
    /// Basic Lewis game: both parties are rewarded 1 whenever the receiver's
    /// act index matches the state index, with zero costs, zero noise, and
    /// subjective priors equal to the objective prior.
    ///
    /// `n_acts < n_states` yields a bottleneck game and is allowed.
    pub fn lewis(n_states: usize, n_signals: usize, n_acts: usize, prior: &[f64]) -> Result<Self> {
        let tensor: Vec<Vec<Vec<f64>>> = (0..n_states)
            .map(|s| {
                (0..n_signals)
                    .map(|_| (0..n_acts).map(|a| if a == s { 1.0 } else { 0.0 }).collect())
                    .collect()
            })
            .collect();
        SignalingGame::try_from(GameSpec {
            n_states,
            n_signals,
            n_acts,
            prior: prior.to_vec(),
            sender_prior: prior.to_vec(),
            receiver_prior: prior.to_vec(),
            sender_payoff: tensor.clone(),
            receiver_payoff: tensor,
            signal_cost: vec![vec![0.0; n_signals]; n_states],
            noise: 0.0,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_signals(&self) -> usize {
        self.n_signals
    }

    pub fn n_acts(&self) -> usize {
        self.n_acts
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn sender_prior(&self) -> &[f64] {
        &self.sender_prior
    }

    pub fn receiver_prior(&self) -> &[f64] {
        &self.receiver_prior
    }

    pub fn sender_payoff(&self, state: usize, signal: usize, act: usize) -> f64 {
        self.sender_payoff[state][signal][act]
    }

    pub fn receiver_payoff(&self, state: usize, signal: usize, act: usize) -> f64 {
        self.receiver_payoff[state][signal][act]
    }

    pub fn signal_cost(&self, state: usize, signal: usize) -> f64 {
        self.signal_cost[state][signal]
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }

    /// Probability that `received` comes out of the channel when `sent` goes
    /// in: `1 - noise` on the diagonal, `noise` spread uniformly over the
    /// other signals.
    pub fn channel(&self, sent: usize, received: usize) -> f64 {
        if sent == received {
            1.0 - self.noise
        } else {
            self.noise / (self.n_signals - 1) as f64
        }
    }

    /// Copy with a different sender payoff tensor (other fields unchanged).
    pub fn with_sender_payoff(&self, tensor: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let mut spec = GameSpec::from(self.clone());
        spec.sender_payoff = tensor;
        SignalingGame::try_from(spec)
    }

    /// Copy with a different signal-cost matrix (other fields unchanged).
    pub fn with_signal_cost(&self, cost: Vec<Vec<f64>>) -> Result<Self> {
        let mut spec = GameSpec::from(self.clone());
        spec.signal_cost = cost;
        SignalingGame::try_from(spec)
    }

    /// Copy with a different noise level (other fields unchanged).
    pub fn with_noise(&self, noise: f64) -> Result<Self> {
        let mut spec = GameSpec::from(self.clone());
        spec.noise = noise;
        SignalingGame::try_from(spec)
    }

    /// Copy with different subjective priors (objective prior unchanged).
    pub fn with_subjective_priors(&self, sender: Vec<f64>, receiver: Vec<f64>) -> Result<Self> {
        let mut spec = GameSpec::from(self.clone());
        spec.sender_prior = sender;
        spec.receiver_prior = receiver;
        SignalingGame::try_from(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("game serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Convenience constructor matching the basic-model layout.
pub fn new_lewis_game(
    n_states: usize,
    n_signals: usize,
    n_acts: usize,
    prior: &[f64],
) -> Result<SignalingGame> {
    SignalingGame::lewis(n_states, n_signals, n_acts, prior)
}

/// Row-stochastic map from states to signals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SenderStrategy {
    encode: Vec<Vec<f64>>,
}

/// Row-stochastic map from received signals to acts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReceiverStrategy {
    decode: Vec<Vec<f64>>,
}

fn check_stochastic(field: &str, m: &[Vec<f64>]) -> Result<()> {
    for (i, row) in m.iter().enumerate() {
        check_simplex(&format!("{field}[{i}]"), row, row.len())?;
    }
    Ok(())
}

impl SenderStrategy {
    pub fn new(encode: Vec<Vec<f64>>) -> Result<Self> {
        check_stochastic("encode", &encode)?;
        Ok(SenderStrategy { encode })
    }

    /// Deterministic strategy sending `map[state]` in each state.
    pub fn deterministic(map: &[usize], n_signals: usize) -> Self {
        let encode = map
            .iter()
            .map(|&m| {
                let mut row = vec![0.0; n_signals];
                row[m] = 1.0;
                row
            })
            .collect();
        SenderStrategy { encode }
    }

    pub fn encode(&self) -> &[Vec<f64>] {
        &self.encode
    }

    pub fn prob(&self, state: usize, signal: usize) -> f64 {
        self.encode[state][signal]
    }
}

impl ReceiverStrategy {
    pub fn new(decode: Vec<Vec<f64>>) -> Result<Self> {
        check_stochastic("decode", &decode)?;
        Ok(ReceiverStrategy { decode })
    }

    /// Deterministic strategy performing `map[signal]` on each signal.
    pub fn deterministic(map: &[usize], n_acts: usize) -> Self {
        let decode = map
            .iter()
            .map(|&a| {
                let mut row = vec![0.0; n_acts];
                row[a] = 1.0;
                row
            })
            .collect();
        ReceiverStrategy { decode }
    }

    pub fn decode(&self) -> &[Vec<f64>] {
        &self.decode
    }

    pub fn prob(&self, signal: usize, act: usize) -> f64 {
        self.decode[signal][act]
    }
}

/// Which side of the game a pure strategy belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Sender,
    Receiver,
}

/// Index of one deterministic strategy, ordered lexicographically by its
/// mixed-radix digits (digit for input 0 is the most significant).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PureStrategyIndex {
    pub role: Role,
    pub index: usize,
}

fn index_to_map(index: usize, digits: usize, base: usize) -> Vec<usize> {
    let mut map = vec![0usize; digits];
    let mut rest = index;
    for d in (0..digits).rev() {
        map[d] = rest % base;
        rest /= base;
    }
    map
}

impl PureStrategyIndex {
    /// The deterministic input-to-output map this index encodes.
    pub fn map(&self, game: &SignalingGame) -> Vec<usize> {
        match self.role {
            Role::Sender => index_to_map(self.index, game.n_states(), game.n_signals()),
            Role::Receiver => index_to_map(self.index, game.n_signals(), game.n_acts()),
        }
    }

    pub fn sender_strategy(&self, game: &SignalingGame) -> SenderStrategy {
        debug_assert_eq!(self.role, Role::Sender);
        SenderStrategy::deterministic(&self.map(game), game.n_signals())
    }

    pub fn receiver_strategy(&self, game: &SignalingGame) -> ReceiverStrategy {
        debug_assert_eq!(self.role, Role::Receiver);
        ReceiverStrategy::deterministic(&self.map(game), game.n_acts())
    }
}

/// Size of the pure-strategy space for `role`.
pub fn pure_strategy_count(game: &SignalingGame, role: Role) -> u128 {
    let (base, digits) = match role {
        Role::Sender => (game.n_signals() as u128, game.n_states() as u32),
        Role::Receiver => (game.n_acts() as u128, game.n_signals() as u32),
    };
    base.checked_pow(digits).unwrap_or(u128::MAX)
}

/// Complete lexicographically ordered pure-strategy list for `role`, bounded
/// by `cap`.
pub fn enumerate_pure_strategies_capped(
    game: &SignalingGame,
    role: Role,
    cap: u64,
) -> Result<Vec<PureStrategyIndex>> {
    let needed = pure_strategy_count(game, role);
    if needed > cap as u128 {
        return Err(Error::EnumerationCap { needed, cap });
    }
    Ok((0..needed as usize).map(|index| PureStrategyIndex { role, index }).collect())
}

/// [`enumerate_pure_strategies_capped`] with [`DEFAULT_ENUMERATION_CAP`].
pub fn enumerate_pure_strategies(game: &SignalingGame, role: Role) -> Result<Vec<PureStrategyIndex>> {
    enumerate_pure_strategies_capped(game, role, DEFAULT_ENUMERATION_CAP)
}

/// Exact expected payoffs of a strategy pair: the sender value includes the
/// expected signal cost, the receiver value does not. Both average over the
/// objective prior and the noisy channel.
pub fn expected_payoffs(
    game: &SignalingGame,
    sender: &SenderStrategy,
    receiver: &ReceiverStrategy,
) -> Result<(f64, f64)> {
    if sender.encode().len() != game.n_states()
        || sender.encode().iter().any(|r| r.len() != game.n_signals())
    {
        return Err(Error::Mismatch(format!(
            "sender strategy: expected {}x{}",
            game.n_states(),
            game.n_signals()
        )));
    }
    if receiver.decode().len() != game.n_signals()
        || receiver.decode().iter().any(|r| r.len() != game.n_acts())
    {
        return Err(Error::Mismatch(format!(
            "receiver strategy: expected {}x{}",
            game.n_signals(),
            game.n_acts()
        )));
    }

    let mut sender_value = 0.0;
    let mut receiver_value = 0.0;
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
            let mut s_inner = -game.signal_cost(s, m);
            let mut r_inner = 0.0;
            for received in 0..game.n_signals() {
                let p_ch = game.channel(m, received);
                if p_ch == 0.0 {
                    continue;
                }
                for a in 0..game.n_acts() {
                    let p_a = receiver.prob(received, a);
                    if p_a == 0.0 {
                        continue;
                    }
                    s_inner += p_ch * p_a * game.sender_payoff(s, received, a);
                    r_inner += p_ch * p_a * game.receiver_payoff(s, received, a);
                }
            }
            sender_value += p_s * p_m * s_inner;
            receiver_value += p_s * p_m * r_inner;
        }
    }
    Ok((sender_value, receiver_value))
}

/// Bimatrix form over the enumerated pure strategies: `A[i][j]` and
/// `B[i][j]` are the sender and receiver expected payoffs of pure sender `i`
/// against pure receiver `j`.
pub fn payoff_matrices(game: &SignalingGame) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    payoff_matrices_capped(game, DEFAULT_ENUMERATION_CAP)
}

pub fn payoff_matrices_capped(
    game: &SignalingGame,
    cap: u64,
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let senders = enumerate_pure_strategies_capped(game, Role::Sender, cap)?;
    let receivers = enumerate_pure_strategies_capped(game, Role::Receiver, cap)?;
    let sender_strats: Vec<SenderStrategy> =
        senders.iter().map(|p| p.sender_strategy(game)).collect();
    let receiver_strats: Vec<ReceiverStrategy> =
        receivers.iter().map(|p| p.receiver_strategy(game)).collect();

    let mut a = vec![vec![0.0; receivers.len()]; senders.len()];
    let mut b = vec![vec![0.0; receivers.len()]; senders.len()];
    for (i, ss) in sender_strats.iter().enumerate() {
        for (j, rs) in receiver_strats.iter().enumerate() {
            let (sv, rv) = expected_payoffs(game, ss, rs)?;
            a[i][j] = sv;
            b[i][j] = rv;
        }
    }
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Independent oracle: expected payoffs by literal enumeration of every
    /// (state, sent signal, received signal, act) path with its probability.
    fn oracle_expected_payoffs(
        game: &SignalingGame,
        sender: &SenderStrategy,
        receiver: &ReceiverStrategy,
    ) -> (f64, f64) {
        let mut sv = 0.0;
        let mut rv = 0.0;
        for s in 0..game.n_states() {
            for sent in 0..game.n_signals() {
                // Cost attaches to the emitted signal, independent of the path taken after.
                sv -= game.prior()[s] * sender.prob(s, sent) * game.signal_cost(s, sent);
                for received in 0..game.n_signals() {
                    for a in 0..game.n_acts() {
                        let p = game.prior()[s]
                            * sender.prob(s, sent)
                            * game.channel(sent, received)
                            * receiver.prob(received, a);
                        sv += p * game.sender_payoff(s, received, a);
                        rv += p * game.receiver_payoff(s, received, a);
                    }
                }
            }
        }
        (sv, rv)
    }

    fn basic_game() -> SignalingGame {
        SignalingGame::lewis(2, 2, 2, &[0.5, 0.5]).unwrap()
    }

    fn separating_pair(game: &SignalingGame) -> (SenderStrategy, ReceiverStrategy) {
        (
            SenderStrategy::deterministic(&[0, 1], game.n_signals()),
            ReceiverStrategy::deterministic(&[0, 1], game.n_acts()),
        )
    }

    fn random_game(rng: &mut ChaCha8Rng) -> SignalingGame {
        let dims = [2usize, 3];
        let n_states = dims[rng.gen_range(0..dims.len())];
        let n_signals = dims[rng.gen_range(0..dims.len())];
        let n_acts = dims[rng.gen_range(0..dims.len())];
        let simplex = |rng: &mut ChaCha8Rng, n: usize| {
            let raw: Vec<f64> = (0..n).map(|_| -f64::ln(1.0 - rng.gen::<f64>())).collect();
            let sum: f64 = raw.iter().sum();
            raw.iter().map(|x| x / sum).collect::<Vec<f64>>()
        };
        let tensor = |rng: &mut ChaCha8Rng| -> Vec<Vec<Vec<f64>>> {
            (0..n_states)
                .map(|_| {
                    (0..n_signals)
                        .map(|_| (0..n_acts).map(|_| rng.gen_range(-2.0..2.0)).collect())
                        .collect()
                })
                .collect()
        };
        SignalingGame::try_from(GameSpec {
            n_states,
            n_signals,
            n_acts,
            prior: simplex(rng, n_states),
            sender_prior: simplex(rng, n_states),
            receiver_prior: simplex(rng, n_states),
            sender_payoff: tensor(rng),
            receiver_payoff: tensor(rng),
            signal_cost: (0..n_states)
                .map(|_| (0..n_signals).map(|_| rng.gen_range(0.0..1.0)).collect())
                .collect(),
            noise: rng.gen_range(0.0..0.5),
        })
        .unwrap()
    }

    fn random_sender(rng: &mut ChaCha8Rng, game: &SignalingGame) -> SenderStrategy {
        let encode = (0..game.n_states())
            .map(|_| {
                let raw: Vec<f64> =
                    (0..game.n_signals()).map(|_| -f64::ln(1.0 - rng.gen::<f64>())).collect();
                let sum: f64 = raw.iter().sum();
                raw.iter().map(|x| x / sum).collect()
            })
            .collect();
        SenderStrategy::new(encode).unwrap()
    }

    fn random_receiver(rng: &mut ChaCha8Rng, game: &SignalingGame) -> ReceiverStrategy {
        let decode = (0..game.n_signals())
            .map(|_| {
                let raw: Vec<f64> =
                    (0..game.n_acts()).map(|_| -f64::ln(1.0 - rng.gen::<f64>())).collect();
                let sum: f64 = raw.iter().sum();
                raw.iter().map(|x| x / sum).collect()
            })
            .collect();
        ReceiverStrategy::new(decode).unwrap()
    }

    #[test]
    fn lewis_game_rewards_matched_act() {
        let g = basic_game();
        for s in 0..2 {
            for m in 0..2 {
                for a in 0..2 {
                    let expected = if a == s { 1.0 } else { 0.0 };
                    assert_eq!(g.sender_payoff(s, m, a), expected);
                    assert_eq!(g.receiver_payoff(s, m, a), expected);
                }
            }
        }
        assert_eq!(g.noise(), 0.0);
        assert_eq!(g.signal_cost(1, 1), 0.0);
    }

    #[test]
    fn lewis_game_accepts_boundary_prior() {
        let g = SignalingGame::lewis(2, 2, 2, &[1.0, 0.0]).unwrap();
        assert_eq!(g.prior(), &[1.0, 0.0]);
    }

    #[test]
    fn lewis_game_allows_bottleneck() {
        let g = SignalingGame::lewis(3, 2, 3, &[1.0 / 3.0; 3]).unwrap();
        assert_eq!(g.n_states(), 3);
        assert_eq!(g.n_signals(), 2);
    }

    #[test]
    fn lewis_game_rejects_bad_inputs() {
        assert!(matches!(SignalingGame::lewis(1, 2, 2, &[1.0]), Err(Error::Dimension(_))));
        let err = SignalingGame::lewis(2, 2, 2, &[0.4, 0.5]).unwrap_err();
        match err {
            Error::Simplex { field, .. } => assert_eq!(field, "prior"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn separating_pair_attains_full_payoff() {
        let g = basic_game();
        let (s, r) = separating_pair(&g);
        let (sv, rv) = expected_payoffs(&g, &s, &r).unwrap();
        assert!((sv - 1.0).abs() < 1e-15);
        assert!((rv - 1.0).abs() < 1e-15);
    }

    #[test]
    fn costly_rare_signal_value_matches_oracle() {
        // Cost 0.1 on signal m in every state, prior [0.3, 0.7]; sender uses
        // m only for state H, receiver matches: value drops by 0.3 * 0.1.
        let g = SignalingGame::lewis(2, 2, 2, &[0.3, 0.7])
            .unwrap()
            .with_signal_cost(vec![vec![0.1, 0.0], vec![0.1, 0.0]])
            .unwrap();
        let (s, r) = separating_pair(&g);
        let (sv, rv) = expected_payoffs(&g, &s, &r).unwrap();
        assert!((sv - 0.97).abs() < 1e-12, "sender value {sv}");
        assert!((rv - 1.0).abs() < 1e-12);
        let (osv, orv) = oracle_expected_payoffs(&g, &s, &r);
        assert!((sv - osv).abs() < 1e-12);
        assert!((rv - orv).abs() < 1e-12);
    }

    #[test]
    fn noisy_channel_value_matches_oracle() {
        let g = basic_game().with_noise(0.1).unwrap();
        let (s, r) = separating_pair(&g);
        let (sv, rv) = expected_payoffs(&g, &s, &r).unwrap();
        assert!((sv - 0.9).abs() < 1e-12, "sender value {sv}");
        assert!((rv - 0.9).abs() < 1e-12);
        let (osv, orv) = oracle_expected_payoffs(&g, &s, &r);
        assert!((sv - osv).abs() < 1e-12);
        assert!((rv - orv).abs() < 1e-12);
    }

    #[test]
    fn expected_payoffs_rejects_mismatched_shapes() {
        let g = basic_game();
        let s = SenderStrategy::deterministic(&[0, 1, 2], 3);
        let r = ReceiverStrategy::deterministic(&[0, 1], 2);
        assert!(matches!(expected_payoffs(&g, &s, &r), Err(Error::Mismatch(_))));
    }

    #[test]
    fn expected_payoffs_matches_oracle_on_random_games() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..100 {
            let g = random_game(&mut rng);
            let s = random_sender(&mut rng, &g);
            let r = random_receiver(&mut rng, &g);
            let (sv, rv) = expected_payoffs(&g, &s, &r).unwrap();
            let (osv, orv) = oracle_expected_payoffs(&g, &s, &r);
            assert!((sv - osv).abs() < 1e-12);
            assert!((rv - orv).abs() < 1e-12);
        }
    }

    #[test]
    fn expected_payoffs_linear_in_each_argument() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let g = random_game(&mut rng);
            let s1 = random_sender(&mut rng, &g);
            let s2 = random_sender(&mut rng, &g);
            let r = random_receiver(&mut rng, &g);
            let w = rng.gen::<f64>();
            let mixed = SenderStrategy::new(
                s1.encode()
                    .iter()
                    .zip(s2.encode())
                    .map(|(a, b)| {
                        a.iter().zip(b).map(|(x, y)| w * x + (1.0 - w) * y).collect()
                    })
                    .collect(),
            )
            .unwrap();
            let (v1, u1) = expected_payoffs(&g, &s1, &r).unwrap();
            let (v2, u2) = expected_payoffs(&g, &s2, &r).unwrap();
            let (vm, um) = expected_payoffs(&g, &mixed, &r).unwrap();
            assert!((vm - (w * v1 + (1.0 - w) * v2)).abs() < 1e-9);
            assert!((um - (w * u1 + (1.0 - w) * u2)).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_cost_shift_moves_only_sender_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let g = random_game(&mut rng);
            let s = random_sender(&mut rng, &g);
            let r = random_receiver(&mut rng, &g);
            let k = rng.gen_range(0.0..2.0);
            let shifted = g
                .with_signal_cost(
                    (0..g.n_states())
                        .map(|st| {
                            (0..g.n_signals()).map(|m| g.signal_cost(st, m) + k).collect()
                        })
                        .collect(),
                )
                .unwrap();
            let (sv, rv) = expected_payoffs(&g, &s, &r).unwrap();
            let (sv2, rv2) = expected_payoffs(&shifted, &s, &r).unwrap();
            assert!((sv - sv2 - k).abs() < 1e-12);
            assert!((rv - rv2).abs() < 1e-12);
        }
    }

    #[test]
    fn enumeration_is_lexicographic_and_complete() {
        let g = basic_game();
        let senders = enumerate_pure_strategies(&g, Role::Sender).unwrap();
        assert_eq!(senders.len(), 4);
        let maps: Vec<Vec<usize>> = senders.iter().map(|p| p.map(&g)).collect();
        assert_eq!(maps, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);

        let g3 = SignalingGame::lewis(3, 3, 3, &[1.0 / 3.0; 3]).unwrap();
        assert_eq!(enumerate_pure_strategies(&g3, Role::Sender).unwrap().len(), 27);
    }

    #[test]
    fn enumeration_cap_is_enforced() {
        let g = SignalingGame::lewis(10, 10, 10, &[0.1; 10]).unwrap();
        match enumerate_pure_strategies(&g, Role::Sender) {
            Err(Error::EnumerationCap { needed, cap }) => {
                assert_eq!(needed, 10_000_000_000);
                assert_eq!(cap, DEFAULT_ENUMERATION_CAP);
            }
            other => panic!("expected cap error, got {other:?}"),
        }
    }

    #[test]
    fn payoff_matrices_match_expected_payoffs_on_all_pure_pairs() {
        for g in [basic_game(), SignalingGame::lewis(3, 3, 3, &[1.0 / 3.0; 3]).unwrap()] {
            let (a, b) = payoff_matrices(&g).unwrap();
            let senders = enumerate_pure_strategies(&g, Role::Sender).unwrap();
            let receivers = enumerate_pure_strategies(&g, Role::Receiver).unwrap();
            for (i, ps) in senders.iter().enumerate() {
                for (j, pr) in receivers.iter().enumerate() {
                    let (sv, rv) = expected_payoffs(
                        &g,
                        &ps.sender_strategy(&g),
                        &pr.receiver_strategy(&g),
                    )
                    .unwrap();
                    assert!((a[i][j] - sv).abs() <= 1e-12);
                    assert!((b[i][j] - rv).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn basic_game_matrix_structure() {
        let g = basic_game();
        let (a, b) = payoff_matrices(&g).unwrap();
        assert_eq!(a, b);
        for row in &a {
            for &v in row {
                assert!(
                    (v - 0.0).abs() < 1e-12 || (v - 0.5).abs() < 1e-12 || (v - 1.0).abs() < 1e-12,
                    "unexpected entry {v}"
                );
            }
        }
        // Separating sender (map [0,1], index 1) vs matched decoder (index 1).
        assert!((a[1][1] - 1.0).abs() < 1e-12);
        // Pooling-on-m sender (index 0) scores 0.5 against every decoder.
        for j in 0..4 {
            assert!((a[0][j] - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn json_round_trip_preserves_key_names() {
        let g = basic_game().with_noise(0.25).unwrap();
        let json = g.to_json();
        for key in [
            "n_states",
            "n_signals",
            "n_acts",
            "prior",
            "sender_prior",
            "receiver_prior",
            "sender_payoff",
            "receiver_payoff",
            "signal_cost",
            "noise",
        ] {
            assert!(json.contains(&format!("\"{key}\"")), "missing key {key}");
        }
        let back = SignalingGame::from_json(&json).unwrap();
        assert_eq!(back.noise(), 0.25);
        assert_eq!(back.prior(), g.prior());
    }

    #[test]
    fn json_rejects_invalid_games() {
        let mut spec = GameSpec::from(basic_game());
        spec.prior = vec![0.45, 0.45];
        let text = serde_json::to_string(&spec).unwrap();
        assert!(SignalingGame::from_json(&text).is_err());
    }
}
