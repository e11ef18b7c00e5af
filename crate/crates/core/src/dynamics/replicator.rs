use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{payoff_matrices, Role, SignalingGame};
use crate::util::short_digest;

use super::trajectory::{behavioral_metrics, Trajectory, TrajectorySample};
use super::{mean_receiver_strategy, mean_sender_strategy};

const POP_TOL: f64 = 1e-9;

/// Shares of each pure sender and receiver strategy in the two populations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationState {
    pub sender_pop: Vec<f64>,
    pub receiver_pop: Vec<f64>,
    pub time: f64,
}

fn check_pop(field: &str, v: &[f64]) -> Result<()> {
    if v.is_empty() || v.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::Simplex {
            field: field.to_string(),
            detail: "entries must be finite and non-negative".to_string(),
        });
    }
    let sum: f64 = v.iter().sum();
    if (sum - 1.0).abs() > POP_TOL {
        return Err(Error::Simplex {
            field: field.to_string(),
            detail: format!("entries must sum to 1, got {sum}"),
        });
    }
    Ok(())
}

impl PopulationState {
    pub fn new(sender_pop: Vec<f64>, receiver_pop: Vec<f64>, time: f64) -> Result<Self> {
        check_pop("sender_pop", &sender_pop)?;
        check_pop("receiver_pop", &receiver_pop)?;
        Ok(PopulationState { sender_pop, receiver_pop, time })
    }

    /// Uniform shares over both enumerated pure-strategy spaces.
    pub fn uniform(game: &SignalingGame) -> Result<Self> {
        let ns = crate::game::enumerate_pure_strategies(game, Role::Sender)?.len();
        let nr = crate::game::enumerate_pure_strategies(game, Role::Receiver)?.len();
        Ok(PopulationState {
            sender_pop: vec![1.0 / ns as f64; ns],
            receiver_pop: vec![1.0 / nr as f64; nr],
            time: 0.0,
        })
    }

    /// Dirichlet(1, ..., 1) sample on both simplices: uniform over each
    /// simplex, drawn as normalized exponentials.
    pub fn sample_uniform<R: Rng>(game: &SignalingGame, rng: &mut R) -> Result<Self> {
        let ns = crate::game::enumerate_pure_strategies(game, Role::Sender)?.len();
        let nr = crate::game::enumerate_pure_strategies(game, Role::Receiver)?.len();
        Ok(PopulationState {
            sender_pop: dirichlet_flat(rng, ns),
            receiver_pop: dirichlet_flat(rng, nr),
            time: 0.0,
        })
    }

    fn max_distance(&self, other: &PopulationState) -> f64 {
        self.sender_pop
            .iter()
            .zip(&other.sender_pop)
            .chain(self.receiver_pop.iter().zip(&other.receiver_pop))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

pub(crate) fn dirichlet_flat<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let draws: Vec<f64> = (0..n).map(|_| -f64::ln(1.0 - rng.gen::<f64>())).collect();
    let sum: f64 = draws.iter().sum();
    draws.iter().map(|x| x / sum).collect()
}

/// Two-population replicator dynamics over the enumerated pure strategies,
/// with the bimatrix form precomputed once.
///
/// The discrete map needs positive fitness, so a joint offset of
/// `1 - min(entry)` is added to both payoff matrices when any entry is
/// non-positive. The continuous flow is invariant to common payoff shifts
/// and uses the raw matrices.
pub struct Replicator<'g> {
    game: &'g SignalingGame,
    a: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
    offset: f64,
}

impl<'g> Replicator<'g> {
    pub fn new(game: &'g SignalingGame) -> Result<Self> {
        let (a, b) = payoff_matrices(game)?;
        let min = a
            .iter()
            .chain(&b)
            .flatten()
            .copied()
            .fold(f64::INFINITY, f64::min);
        let offset = if min <= 0.0 { 1.0 - min } else { 0.0 };
        Ok(Replicator { game, a, b, offset })
    }

    pub fn game(&self) -> &SignalingGame {
        self.game
    }

    /// Offset applied to the discrete map's fitness (0 when all payoffs are
    /// already positive).
    pub fn fitness_offset(&self) -> f64 {
        self.offset
    }

    fn sender_fitness(&self, receiver_pop: &[f64], out: &mut [f64]) {
        for (i, row) in self.a.iter().enumerate() {
            out[i] = row.iter().zip(receiver_pop).map(|(aij, yj)| aij * yj).sum();
        }
    }

    fn receiver_fitness(&self, sender_pop: &[f64], out: &mut [f64]) {
        for j in 0..self.b[0].len() {
            out[j] = self.b.iter().zip(sender_pop).map(|(row, xi)| row[j] * xi).sum();
        }
    }

    /// One generation of the discrete replicator map
    /// `x_i' = x_i f_i / f̄` on both populations.
    pub fn step(&self, pop: &PopulationState) -> Result<PopulationState> {
        let mut fs = vec![0.0; pop.sender_pop.len()];
        let mut fr = vec![0.0; pop.receiver_pop.len()];
        self.sender_fitness(&pop.receiver_pop, &mut fs);
        self.receiver_fitness(&pop.sender_pop, &mut fr);
        for f in fs.iter_mut().chain(fr.iter_mut()) {
            *f += self.offset;
        }
        let mean_s: f64 = fs.iter().zip(&pop.sender_pop).map(|(f, x)| f * x).sum();
        let mean_r: f64 = fr.iter().zip(&pop.receiver_pop).map(|(f, y)| f * y).sum();
        if mean_s <= 0.0 || !mean_s.is_finite() {
            return Err(Error::NonPositiveFitness(mean_s));
        }
        if mean_r <= 0.0 || !mean_r.is_finite() {
            return Err(Error::NonPositiveFitness(mean_r));
        }
        let sender_pop: Vec<f64> =
            pop.sender_pop.iter().zip(&fs).map(|(x, f)| x * f / mean_s).collect();
        let receiver_pop: Vec<f64> =
            pop.receiver_pop.iter().zip(&fr).map(|(y, f)| y * f / mean_r).collect();
        Ok(PopulationState { sender_pop, receiver_pop, time: pop.time + 1.0 })
    }

    fn derivative(
        &self,
        x: &[f64],
        y: &[f64],
        fs: &mut [f64],
        fr: &mut [f64],
        dx: &mut [f64],
        dy: &mut [f64],
    ) {
        self.sender_fitness(y, fs);
        self.receiver_fitness(x, fr);
        let mean_s: f64 = fs.iter().zip(x).map(|(f, xi)| f * xi).sum();
        let mean_r: f64 = fr.iter().zip(y).map(|(f, yj)| f * yj).sum();
        for i in 0..x.len() {
            dx[i] = x[i] * (fs[i] - mean_s);
        }
        for j in 0..y.len() {
            dy[j] = y[j] * (fr[j] - mean_r);
        }
    }

    /// One fixed RK4 step of the continuous flow, in place. Returns the
    /// simplex drift before renormalization.
    fn rk4_step(&self, x: &mut Vec<f64>, y: &mut Vec<f64>, dt: f64, step: usize) -> Result<f64> {
        let ns = x.len();
        let nr = y.len();
        let mut fs = vec![0.0; ns];
        let mut fr = vec![0.0; nr];
        let mut k1x = vec![0.0; ns];
        let mut k1y = vec![0.0; nr];
        let mut k2x = vec![0.0; ns];
        let mut k2y = vec![0.0; nr];
        let mut k3x = vec![0.0; ns];
        let mut k3y = vec![0.0; nr];
        let mut k4x = vec![0.0; ns];
        let mut k4y = vec![0.0; nr];
        let mut xs = vec![0.0; ns];
        let mut ys = vec![0.0; nr];

        self.derivative(x, y, &mut fs, &mut fr, &mut k1x, &mut k1y);
        for i in 0..ns {
            xs[i] = x[i] + 0.5 * dt * k1x[i];
        }
        for j in 0..nr {
            ys[j] = y[j] + 0.5 * dt * k1y[j];
        }
        self.derivative(&xs, &ys, &mut fs, &mut fr, &mut k2x, &mut k2y);
        for i in 0..ns {
            xs[i] = x[i] + 0.5 * dt * k2x[i];
        }
        for j in 0..nr {
            ys[j] = y[j] + 0.5 * dt * k2y[j];
        }
        self.derivative(&xs, &ys, &mut fs, &mut fr, &mut k3x, &mut k3y);
        for i in 0..ns {
            xs[i] = x[i] + dt * k3x[i];
        }
        for j in 0..nr {
            ys[j] = y[j] + dt * k3y[j];
        }
        self.derivative(&xs, &ys, &mut fs, &mut fr, &mut k4x, &mut k4y);

        for i in 0..ns {
            x[i] += dt / 6.0 * (k1x[i] + 2.0 * k2x[i] + 2.0 * k3x[i] + k4x[i]);
        }
        for j in 0..nr {
            y[j] += dt / 6.0 * (k1y[j] + 2.0 * k2y[j] + 2.0 * k3y[j] + k4y[j]);
        }

        for v in x.iter_mut().chain(y.iter_mut()) {
            if v.is_nan() {
                return Err(Error::Integration {
                    step,
                    detail: "NaN in replicator derivative".to_string(),
                });
            }
            if *v < 0.0 {
                if *v > -1e-12 {
                    *v = 0.0;
                } else {
                    return Err(Error::Integration {
                        step,
                        detail: format!("population share left the simplex ({v})"),
                    });
                }
            }
        }
        let sum_x: f64 = x.iter().sum();
        let sum_y: f64 = y.iter().sum();
        let drift = (sum_x - 1.0).abs().max((sum_y - 1.0).abs());
        // Simplex preservation invariant: the replicator derivative sums to
        // zero, so per-step drift is rounding noise.
        assert!(drift <= 1e-9, "simplex drift {drift} exceeds 1e-9 at step {step}");
        for v in x.iter_mut() {
            *v /= sum_x;
        }
        for v in y.iter_mut() {
            *v /= sum_y;
        }
        Ok(drift)
    }

    /// Integrate the flow from `init` to `init.time + duration`, returning
    /// the terminal state without recording a trajectory.
    pub fn flow_terminal(
        &self,
        init: &PopulationState,
        duration: f64,
        dt: f64,
    ) -> Result<PopulationState> {
        self.flow_impl(init, duration, dt, |_| Ok(()))
    }

    /// Integrate the flow, appending one sample per `dt` (including the
    /// initial state unless the trajectory already ends at `init.time`).
    pub fn flow_run(
        &self,
        init: &PopulationState,
        duration: f64,
        dt: f64,
        traj: &mut Trajectory,
    ) -> Result<PopulationState> {
        let already_recorded = traj
            .samples()
            .last()
            .is_some_and(|s| (s.time - init.time).abs() < 1e-12);
        if !already_recorded {
            traj.push(self.sample_of(init))?;
        }
        let mut recorder = |pop: &PopulationState| traj.push(self.sample_of(pop));
        self.flow_impl(init, duration, dt, &mut recorder)
    }

    fn flow_impl<F>(
        &self,
        init: &PopulationState,
        duration: f64,
        dt: f64,
        mut record: F,
    ) -> Result<PopulationState>
    where
        F: FnMut(&PopulationState) -> Result<()>,
    {
        if dt <= 0.0 || !dt.is_finite() {
            return Err(Error::Param {
                field: "dt".to_string(),
                detail: format!("must be positive, got {dt}"),
            });
        }
        if duration < 0.0 || !duration.is_finite() {
            return Err(Error::Param {
                field: "t_end".to_string(),
                detail: format!("must be non-negative, got {duration}"),
            });
        }
        let mut x = init.sender_pop.clone();
        let mut y = init.receiver_pop.clone();
        let whole_steps = (duration / dt + 1e-9).floor() as usize;
        let mut t = init.time;
        for step in 0..whole_steps {
            self.rk4_step(&mut x, &mut y, dt, step)?;
            t = init.time + (step + 1) as f64 * dt;
            record(&PopulationState { sender_pop: x.clone(), receiver_pop: y.clone(), time: t })?;
        }
        let remainder = init.time + duration - t;
        if remainder > 1e-9 {
            self.rk4_step(&mut x, &mut y, remainder, whole_steps)?;
            t = init.time + duration;
            record(&PopulationState { sender_pop: x.clone(), receiver_pop: y.clone(), time: t })?;
        }
        Ok(PopulationState { sender_pop: x, receiver_pop: y, time: t })
    }

    /// Iterate the discrete map `generations` times, recording every
    /// generation.
    pub fn map_run(
        &self,
        init: &PopulationState,
        generations: u64,
        traj: &mut Trajectory,
    ) -> Result<PopulationState> {
        let already_recorded = traj
            .samples()
            .last()
            .is_some_and(|s| (s.time - init.time).abs() < 1e-12);
        if !already_recorded {
            traj.push(self.sample_of(init))?;
        }
        let mut pop = init.clone();
        for _ in 0..generations {
            pop = self.step(&pop)?;
            traj.push(self.sample_of(&pop))?;
        }
        Ok(pop)
    }

    /// True when evolving from `pop` moves every share by at most `tol`
    /// over `steps` probe steps.
    pub fn is_stationary(
        &self,
        pop: &PopulationState,
        steps: usize,
        dt: f64,
        tol: f64,
    ) -> Result<bool> {
        let mut current = pop.clone();
        for _ in 0..steps {
            current = self.flow_terminal(&current, dt, dt)?;
            if current.max_distance(pop) > tol {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Same check under the discrete map.
    pub fn is_stationary_map(&self, pop: &PopulationState, steps: usize, tol: f64) -> Result<bool> {
        let mut current = pop.clone();
        for _ in 0..steps {
            current = self.step(&current)?;
            if current.max_distance(pop) > tol {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn sample_of(&self, pop: &PopulationState) -> TrajectorySample {
        let encode = mean_sender_strategy(self.game, &pop.sender_pop);
        let decode = mean_receiver_strategy(self.game, &pop.receiver_pop);
        TrajectorySample {
            time: pop.time,
            sender: pop.sender_pop.clone(),
            receiver: pop.receiver_pop.clone(),
            metrics: behavioral_metrics(self.game, &encode, &decode),
        }
    }

    pub(crate) fn empty_trajectory(&self, tag: &str, extra: impl Serialize, seed: u64) -> Trajectory {
        let digest = short_digest(&(
            self.game,
            tag,
            serde_json::to_value(extra).expect("digest serialization"),
            seed,
        ));
        Trajectory::new(
            (0..self.a.len()).map(|i| format!("x{i}")).collect(),
            (0..self.b[0].len()).map(|j| format!("y{j}")).collect(),
            digest,
            seed,
        )
    }
}

/// One generation of the discrete replicator map.
pub fn replicator_step(game: &SignalingGame, pop: &PopulationState) -> Result<PopulationState> {
    Replicator::new(game)?.step(pop)
}


/// Continuous replicator flow from `pop` for `t_end` time units, sampled
/// every `dt`.
pub fn replicator_flow(
    game: &SignalingGame,
    pop: &PopulationState,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory> {
    let rep = Replicator::new(game)?;
    let mut traj = rep.empty_trajectory("replicator_flow", (&pop.sender_pop, &pop.receiver_pop, t_end, dt), 0);
    rep.flow_run(pop, t_end, dt, &mut traj)?;
    Ok(traj)
}
