use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::analysis;
use crate::error::{Error, Result};
use crate::game::{expected_payoffs, ReceiverStrategy, SenderStrategy, SignalingGame};

/// Per-sample measurements attached to every trajectory point.
///
/// `success` and the payoff columns are `NaN` when undefined (bottleneck
/// games for success, non-signaling trajectories for all of them).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics {
    pub success: f64,
    pub mi_state_signal: f64,
    pub mi_state_act: f64,
    pub sender_mean_payoff: f64,
    pub receiver_mean_payoff: f64,
}

impl StepMetrics {
    pub fn nan() -> Self {
        StepMetrics {
            success: f64::NAN,
            mi_state_signal: f64::NAN,
            mi_state_act: f64::NAN,
            sender_mean_payoff: f64::NAN,
            receiver_mean_payoff: f64::NAN,
        }
    }
}

/// One point of a run: a time stamp, the tracked sender/receiver vectors
/// (population shares, normalized weights, or pure-strategy indicators,
/// depending on the dynamic), and the metrics at that point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub time: f64,
    pub sender: Vec<f64>,
    pub receiver: Vec<f64>,
    pub metrics: StepMetrics,
}

/// Time series produced by a dynamics run, tagged with the digest of the
/// producing configuration and the seed. Sample times are strictly
/// increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    sender_labels: Vec<String>,
    receiver_labels: Vec<String>,
    samples: Vec<TrajectorySample>,
    pub config_digest: String,
    pub seed: u64,
}

impl Trajectory {
    pub fn new<S: Into<String>>(
        sender_labels: Vec<S>,
        receiver_labels: Vec<S>,
        config_digest: String,
        seed: u64,
    ) -> Self {
        Trajectory {
            sender_labels: sender_labels.into_iter().map(Into::into).collect(),
            receiver_labels: receiver_labels.into_iter().map(Into::into).collect(),
            samples: Vec::new(),
            config_digest,
            seed,
        }
    }

    pub fn push(&mut self, sample: TrajectorySample) -> Result<()> {
        if sample.sender.len() != self.sender_labels.len()
            || sample.receiver.len() != self.receiver_labels.len()
        {
            return Err(Error::Mismatch("trajectory sample width".to_string()));
        }
        if let Some(last) = self.samples.last() {
            if sample.time <= last.time {
                return Err(Error::Param {
                    field: "trajectory".to_string(),
                    detail: format!(
                        "sample times must strictly increase ({} after {})",
                        sample.time, last.time
                    ),
                });
            }
        }
        self.samples.push(sample);
        Ok(())
    }

    pub fn samples(&self) -> &[TrajectorySample] {
        &self.samples
    }

    pub fn last(&self) -> &TrajectorySample {
        self.samples.last().expect("trajectories are non-empty")
    }

    pub fn sender_labels(&self) -> &[String] {
        &self.sender_labels
    }

    pub fn receiver_labels(&self) -> &[String] {
        &self.receiver_labels
    }

    /// CSV export: `t`, one column per tracked value, then the five metric
    /// columns. Numbers are written in shortest round-trip form.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        write!(w, "t")?;
        for label in self.sender_labels.iter().chain(&self.receiver_labels) {
            write!(w, ",{label}")?;
        }
        writeln!(w, ",success,mi_state_signal,mi_state_act,sender_mean_payoff,receiver_mean_payoff")?;
        for s in &self.samples {
            write!(w, "{}", s.time)?;
            for v in s.sender.iter().chain(&s.receiver) {
                write!(w, ",{v}")?;
            }
            writeln!(
                w,
                ",{},{},{},{},{}",
                s.metrics.success,
                s.metrics.mi_state_signal,
                s.metrics.mi_state_act,
                s.metrics.sender_mean_payoff,
                s.metrics.receiver_mean_payoff
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is UTF-8")
    }
}

/// Metrics of a behavioral strategy pair: communication success (NaN for
/// bottleneck games where act==state is undefined), mutual information
/// between state and emitted signal, between state and act (through the
/// channel), and both expected payoffs.
pub fn behavioral_metrics(
    game: &SignalingGame,
    encode: &[Vec<f64>],
    decode: &[Vec<f64>],
) -> StepMetrics {
    let prior = game.prior();
    let joint_sig: Vec<Vec<f64>> = (0..game.n_states())
        .map(|s| (0..game.n_signals()).map(|m| prior[s] * encode[s][m]).collect())
        .collect();
    let mut joint_act = vec![vec![0.0; game.n_acts()]; game.n_states()];
    for s in 0..game.n_states() {
        for m in 0..game.n_signals() {
            if encode[s][m] == 0.0 {
                continue;
            }
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
    let mi_state_signal = analysis::mutual_information(&joint_sig).unwrap_or(f64::NAN);
    let mi_state_act = analysis::mutual_information(&joint_act).unwrap_or(f64::NAN);
    let success = if game.n_acts() >= game.n_states() {
        (0..game.n_states()).map(|s| joint_act[s][s]).sum()
    } else {
        f64::NAN
    };
    let (sender_mean_payoff, receiver_mean_payoff) = match (
        SenderStrategy::new(encode.to_vec()),
        ReceiverStrategy::new(decode.to_vec()),
    ) {
        (Ok(s), Ok(r)) => expected_payoffs(game, &s, &r).unwrap_or((f64::NAN, f64::NAN)),
        _ => (f64::NAN, f64::NAN),
    };
    StepMetrics {
        success,
        mi_state_signal,
        mi_state_act,
        sender_mean_payoff,
        receiver_mean_payoff,
    }
}
