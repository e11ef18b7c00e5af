//! Apology-augmented iterated prisoner's dilemma.
//!
//! Players repeat a prisoner's dilemma with geometric continuation and a
//! per-round chance of accidental defection. After defecting, a player may
//! send an apology at cost `c_a`; honest apologies (for accidents) are
//! always recognizable, fake apologies (covering deliberate defection) pass
//! as genuine with probability `phi`. A cooperator forgives a defection
//! exactly when it accepts a passing apology for it; otherwise it triggers
//! grim punishment for the rest of the match.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{StepMetrics, Trajectory, TrajectorySample};
use crate::error::{Error, Result};
use crate::util::short_digest;

use super::{ScenarioConfig, ScenarioResult};

/// Parameters of the repeated game. `pd_payoffs = (T, R, P, S)` with
/// `T > R > P > S` and `2R > T + S`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApologyGameSpec {
    pub pd_payoffs: (f64, f64, f64, f64),
    /// Probability of another round after each round.
    pub continuation: f64,
    /// Cost paid for every apology sent, honest or fake.
    pub apology_cost: f64,
    /// Probability a fake apology passes as genuine.
    pub fakeability: f64,
    /// Per-round probability that an intended cooperation executes as
    /// defection.
    pub error_rate: f64,
}

impl Default for ApologyGameSpec {
    fn default() -> Self {
        ApologyGameSpec {
            pd_payoffs: (5.0, 3.0, 1.0, 0.0),
            continuation: 0.995,
            apology_cost: 1.0,
            fakeability: 0.5,
            error_rate: 0.05,
        }
    }
}

impl ApologyGameSpec {
    pub fn validate(&self) -> Result<()> {
        let (t, r, p, s) = self.pd_payoffs;
        if !(t > r && r > p && p > s) {
            return Err(Error::Param {
                field: "pd_payoffs".to_string(),
                detail: format!("need T > R > P > S, got ({t}, {r}, {p}, {s})"),
            });
        }
        if !(2.0 * r > t + s) {
            return Err(Error::Param {
                field: "pd_payoffs".to_string(),
                detail: "need 2R > T + S for iterated play".to_string(),
            });
        }
        if !(self.continuation > 0.0 && self.continuation < 1.0) {
            return Err(Error::Param {
                field: "continuation".to_string(),
                detail: format!(
                    "must lie in (0, 1): apologies need repeat interactions, got {}",
                    self.continuation
                ),
            });
        }
        if !(self.apology_cost >= 0.0) || !self.apology_cost.is_finite() {
            return Err(Error::Param {
                field: "apology_cost".to_string(),
                detail: format!("must be >= 0, got {}", self.apology_cost),
            });
        }
        if !(0.0..=1.0).contains(&self.fakeability) {
            return Err(Error::Param {
                field: "fakeability".to_string(),
                detail: format!("must lie in [0, 1], got {}", self.fakeability),
            });
        }
        if !(0.0..0.5).contains(&self.error_rate) {
            return Err(Error::Param {
                field: "error_rate".to_string(),
                detail: format!("must lie in [0, 0.5), got {}", self.error_rate),
            });
        }
        Ok(())
    }

    fn with_cell(&self, apology_cost: f64, fakeability: f64) -> Self {
        ApologyGameSpec { apology_cost, fakeability, ..*self }
    }
}

/// When a player apologizes after its own defection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApologyRule {
    /// Never apologize.
    Never,
    /// Apologize only for accidental defections.
    Honest,
    /// Defect deliberately every round and apologize every time.
    Fake,
}

/// Whether a player forgives on a passing apology.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AcceptanceRule {
    Accept,
    Reject,
}

/// One of the six composite strategies: an apology rule and an acceptance
/// rule over a grim-with-forgiveness base. `Fake` types override the base
/// with unconditional defection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApologyStrategy {
    pub apology: ApologyRule,
    pub acceptance: AcceptanceRule,
}

impl ApologyStrategy {
    pub fn name(&self) -> &'static str {
        match (self.apology, self.acceptance) {
            (ApologyRule::Never, AcceptanceRule::Accept) => "never_accept",
            (ApologyRule::Never, AcceptanceRule::Reject) => "never_reject",
            (ApologyRule::Honest, AcceptanceRule::Accept) => "honest_accept",
            (ApologyRule::Honest, AcceptanceRule::Reject) => "honest_reject",
            (ApologyRule::Fake, AcceptanceRule::Accept) => "fake_accept",
            (ApologyRule::Fake, AcceptanceRule::Reject) => "fake_reject",
        }
    }
}

/// The full strategy set, in registry order.
pub const APOLOGY_STRATEGIES: [ApologyStrategy; 6] = [
    ApologyStrategy { apology: ApologyRule::Never, acceptance: AcceptanceRule::Accept },
    ApologyStrategy { apology: ApologyRule::Never, acceptance: AcceptanceRule::Reject },
    ApologyStrategy { apology: ApologyRule::Honest, acceptance: AcceptanceRule::Accept },
    ApologyStrategy { apology: ApologyRule::Honest, acceptance: AcceptanceRule::Reject },
    ApologyStrategy { apology: ApologyRule::Fake, acceptance: AcceptanceRule::Accept },
    ApologyStrategy { apology: ApologyRule::Fake, acceptance: AcceptanceRule::Reject },
];

/// Result of one repeated match.
#[derive(Debug, Clone, Copy)]
pub struct MatchOutcome {
    /// Total payoff of each player over the match, apology costs included.
    pub payoff_a: f64,
    pub payoff_b: f64,
    /// Fraction of executed actions that were cooperation.
    pub coop_rate: f64,
    pub rounds: u32,
}

/// Play one match to its geometric end.
pub fn play_match<R: Rng>(
    spec: &ApologyGameSpec,
    a: ApologyStrategy,
    b: ApologyStrategy,
    rng: &mut R,
) -> MatchOutcome {
    let (t, r, p, s) = spec.pd_payoffs;
    let mut payoff_a = 0.0;
    let mut payoff_b = 0.0;
    let mut coop_actions = 0u32;
    let mut rounds = 0u32;
    let mut triggered_a = false;
    let mut triggered_b = false;

    loop {
        rounds += 1;
        let intends_coop_a = a.apology != ApologyRule::Fake && !triggered_a;
        let intends_coop_b = b.apology != ApologyRule::Fake && !triggered_b;
        let coop_a = intends_coop_a && !(rng.gen::<f64>() < spec.error_rate);
        let coop_b = intends_coop_b && !(rng.gen::<f64>() < spec.error_rate);

        let apology_a = !coop_a
            && match a.apology {
                ApologyRule::Never => false,
                ApologyRule::Honest => intends_coop_a,
                ApologyRule::Fake => true,
            };
        let apology_b = !coop_b
            && match b.apology {
                ApologyRule::Never => false,
                ApologyRule::Honest => intends_coop_b,
                ApologyRule::Fake => true,
            };
        // Honest apologies are always recognizable; fake ones pass with
        // probability phi.
        let passes_a = apology_a
            && (a.apology != ApologyRule::Fake || rng.gen::<f64>() < spec.fakeability);
        let passes_b = apology_b
            && (b.apology != ApologyRule::Fake || rng.gen::<f64>() < spec.fakeability);

        let (round_a, round_b) = match (coop_a, coop_b) {
            (true, true) => (r, r),
            (true, false) => (s, t),
            (false, true) => (t, s),
            (false, false) => (p, p),
        };
        payoff_a += round_a - if apology_a { spec.apology_cost } else { 0.0 };
        payoff_b += round_b - if apology_b { spec.apology_cost } else { 0.0 };
        coop_actions += coop_a as u32 + coop_b as u32;

        if !coop_a && !(passes_a && b.acceptance == AcceptanceRule::Accept) {
            triggered_b = true;
        }
        if !coop_b && !(passes_b && a.acceptance == AcceptanceRule::Accept) {
            triggered_a = true;
        }

        if !(rng.gen::<f64>() < spec.continuation) {
            break;
        }
    }
    MatchOutcome {
        payoff_a,
        payoff_b,
        coop_rate: coop_actions as f64 / (2 * rounds) as f64,
        rounds,
    }
}

/// Monte-Carlo estimates over all strategy pairs: mean match payoffs,
/// mean cooperation rates, and the sampling variance of the cooperation
/// estimates.
#[derive(Debug, Clone)]
pub struct PairTables {
    pub payoff: [[f64; 6]; 6],
    pub coop: [[f64; 6]; 6],
    pub coop_var: [[f64; 6]; 6],
    pub n_matches: u64,
}

impl PairTables {
    /// Estimate by playing `n_matches` matches per unordered pair; each
    /// match contributes both perspectives.
    pub fn estimate(spec: &ApologyGameSpec, n_matches: u64, seed: u64) -> Result<Self> {
        if n_matches < 1 {
            return Err(Error::Param {
                field: "matches_per_pair".to_string(),
                detail: "must be at least 1".to_string(),
            });
        }
        let mut payoff_sum = [[0.0f64; 6]; 6];
        let mut payoff_n = [[0u64; 6]; 6];
        let mut coop_sum = [[0.0f64; 6]; 6];
        let mut coop_sq = [[0.0f64; 6]; 6];

        for i in 0..6 {
            for j in i..6 {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream((i * 6 + j) as u64 + 1);
                for _ in 0..n_matches {
                    let outcome =
                        play_match(spec, APOLOGY_STRATEGIES[i], APOLOGY_STRATEGIES[j], &mut rng);
                    payoff_sum[i][j] += outcome.payoff_a;
                    payoff_n[i][j] += 1;
                    payoff_sum[j][i] += outcome.payoff_b;
                    payoff_n[j][i] += 1;
                    coop_sum[i][j] += outcome.coop_rate;
                    coop_sq[i][j] += outcome.coop_rate * outcome.coop_rate;
                }
            }
        }

        let mut payoff = [[0.0; 6]; 6];
        let mut coop = [[0.0; 6]; 6];
        let mut coop_var = [[0.0; 6]; 6];
        for i in 0..6 {
            for j in 0..6 {
                payoff[i][j] = payoff_sum[i][j] / payoff_n[i][j] as f64;
                let (lo, hi) = (i.min(j), i.max(j));
                let n = n_matches as f64;
                let mean = coop_sum[lo][hi] / n;
                coop[i][j] = mean;
                coop_var[i][j] = (coop_sq[lo][hi] / n - mean * mean).max(0.0);
            }
        }
        Ok(PairTables { payoff, coop, coop_var, n_matches })
    }

    pub fn cooperation_at(&self, shares: &[f64; 6]) -> f64 {
        let mut rate = 0.0;
        for i in 0..6 {
            for j in 0..6 {
                rate += shares[i] * shares[j] * self.coop[i][j];
            }
        }
        rate
    }

    /// Delta-method 95% half-width of [`Self::cooperation_at`], treating
    /// pair estimates as independent across unordered pairs.
    pub fn cooperation_ci95(&self, shares: &[f64; 6]) -> f64 {
        let n = self.n_matches as f64;
        let mut var = 0.0;
        for i in 0..6 {
            for j in i..6 {
                let weight = if i == j {
                    shares[i] * shares[j]
                } else {
                    2.0 * shares[i] * shares[j]
                };
                var += weight * weight * self.coop_var[i][j] / n;
            }
        }
        1.96 * var.sqrt()
    }
}

fn fitness(payoff: &[[f64; 6]; 6], x: &[f64; 6]) -> [f64; 6] {
    let mut f = [0.0; 6];
    for i in 0..6 {
        f[i] = (0..6).map(|j| payoff[i][j] * x[j]).sum();
    }
    f
}

fn replicator_derivative(payoff: &[[f64; 6]; 6], x: &[f64; 6]) -> [f64; 6] {
    let f = fitness(payoff, x);
    let mean: f64 = (0..6).map(|i| f[i] * x[i]).sum();
    let mut dx = [0.0; 6];
    for i in 0..6 {
        dx[i] = x[i] * (f[i] - mean);
    }
    dx
}

/// Single-population replicator flow over the six strategies, fixed-step
/// RK4 with per-step renormalization, from [`APOLOGY_INITIAL_SHARES`].
///
/// The payoff table holds match totals; the derivative rescales them to
/// per-round magnitude (a positive scaling only reparametrizes time) so
/// the fixed step stays stable.
fn evolve_shares(
    tables: &PairTables,
    per_round: f64,
    t_end: f64,
    dt: f64,
    mut record: impl FnMut(f64, &[f64; 6], f64, f64),
) -> [f64; 6] {
    let mut scaled = tables.payoff;
    for row in &mut scaled {
        for v in row.iter_mut() {
            *v *= per_round;
        }
    }
    let mut x = APOLOGY_INITIAL_SHARES;
    record(0.0, &x, tables.cooperation_at(&x), mean_fitness(&tables.payoff, &x));
    let steps = (t_end / dt + 1e-9).floor() as usize;
    for step in 0..steps {
        let k1 = replicator_derivative(&scaled, &x);
        let mut x2 = x;
        for i in 0..6 {
            x2[i] = x[i] + 0.5 * dt * k1[i];
        }
        let k2 = replicator_derivative(&scaled, &x2);
        for i in 0..6 {
            x2[i] = x[i] + 0.5 * dt * k2[i];
        }
        let k3 = replicator_derivative(&scaled, &x2);
        for i in 0..6 {
            x2[i] = x[i] + dt * k3[i];
        }
        let k4 = replicator_derivative(&scaled, &x2);
        for i in 0..6 {
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            debug_assert!(x[i] > -1e-9, "share left the simplex: {}", x[i]);
            if x[i] < 0.0 {
                x[i] = 0.0;
            }
        }
        let sum: f64 = x.iter().sum();
        for v in &mut x {
            *v /= sum;
        }
        let time = (step + 1) as f64 * dt;
        record(time, &x, tables.cooperation_at(&x), mean_fitness(&tables.payoff, &x));
    }
    x
}

fn mean_fitness(payoff: &[[f64; 6]; 6], x: &[f64; 6]) -> f64 {
    let f = fitness(payoff, x);
    (0..6).map(|i| f[i] * x[i]).sum()
}

/// One cell of the phase map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseCell {
    pub cost: f64,
    pub fakeability: f64,
    pub cooperation_rate: f64,
    pub ci95: f64,
    pub terminal_shares: Vec<f64>,
}

/// Terminal cooperation rate per (cost, fakeability) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseMap {
    pub cells: Vec<PhaseCell>,
}

impl PhaseMap {
    /// CSV export: `c_a,phi,cooperation_rate,ci95`.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "c_a,phi,cooperation_rate,ci95")?;
        for cell in &self.cells {
            writeln!(
                w,
                "{},{},{},{}",
                cell.cost, cell.fakeability, cell.cooperation_rate, cell.ci95
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is UTF-8")
    }

    pub fn cell(&self, cost: f64, fakeability: f64) -> Option<&PhaseCell> {
        self.cells
            .iter()
            .find(|c| (c.cost - cost).abs() < 1e-12 && (c.fakeability - fakeability).abs() < 1e-12)
    }
}

/// Replicator horizon for each grid cell (per-round payoff time scale).
pub const APOLOGY_T_END: f64 = 1000.0;
pub const APOLOGY_DT: f64 = 0.05;

/// Initial shares, in [`APOLOGY_STRATEGIES`] order: an established apology
/// culture (honest apologizers who accept apologies) with a minority of
/// every other type. Cooperative conventions need this cultural starting
/// point; they cannot bootstrap from nowhere.
pub const APOLOGY_INITIAL_SHARES: [f64; 6] = [0.05, 0.05, 0.75, 0.05, 0.05, 0.05];

/// For each `(c_a, phi)` grid cell: estimate all pairwise match payoffs by
/// Monte Carlo, evolve the six-strategy population by replicator flow from
/// the uniform mixture, and record the terminal cooperation rate. Cell `k`
/// uses seed `cfg.seed + k`.
pub fn scenario_apology(
    spec: &ApologyGameSpec,
    grid: &[(f64, f64)],
    matches_per_pair: u64,
    cfg: &ScenarioConfig,
) -> Result<ScenarioResult> {
    spec.validate()?;
    if grid.is_empty() {
        return Err(Error::Param {
            field: "grid".to_string(),
            detail: "must contain at least one (cost, fakeability) cell".to_string(),
        });
    }
    for (c, phi) in grid {
        spec.with_cell(*c, *phi).validate()?;
    }

    let digest = short_digest(&("apology", spec, grid, matches_per_pair, cfg.seed));
    let mut result = ScenarioResult::new("apology", digest.clone(), cfg.seed);

    let cells: Vec<Result<(PhaseCell, Option<Trajectory>)>> = grid
        .par_iter()
        .enumerate()
        .map(|(idx, (cost, phi))| {
            let cell_spec = spec.with_cell(*cost, *phi);
            let cell_seed = cfg.seed.wrapping_add(idx as u64);
            let tables = PairTables::estimate(&cell_spec, matches_per_pair, cell_seed)?;

            let mut trajectory = if idx == 0 {
                Some(Trajectory::new(
                    APOLOGY_STRATEGIES.iter().map(|s| s.name().to_string()).collect(),
                    Vec::<String>::new(),
                    digest.clone(),
                    cell_seed,
                ))
            } else {
                None
            };
            let per_round = 1.0 - cell_spec.continuation;
            // Cooperation and shares are time-averaged over the second half
            // of the run: contested regions cycle, and interior replicator
            // orbits average to their rest point.
            let mut tail_coop = 0.0;
            let mut tail_shares = [0.0f64; 6];
            let mut tail_n = 0u64;
            let terminal =
                evolve_shares(&tables, per_round, APOLOGY_T_END, APOLOGY_DT, |time, x, coop, fit| {
                    if time >= APOLOGY_T_END / 2.0 {
                        tail_coop += coop;
                        for (acc, v) in tail_shares.iter_mut().zip(x) {
                            *acc += v;
                        }
                        tail_n += 1;
                    }
                    if let Some(traj) = trajectory.as_mut() {
                        let sample = TrajectorySample {
                            time,
                            sender: x.to_vec(),
                            receiver: Vec::new(),
                            metrics: StepMetrics {
                                success: coop,
                                mi_state_signal: f64::NAN,
                                mi_state_act: f64::NAN,
                                sender_mean_payoff: fit,
                                receiver_mean_payoff: fit,
                            },
                        };
                        traj.push(sample).expect("strictly increasing times");
                    }
                });
            let _ = terminal;
            for v in &mut tail_shares {
                *v /= tail_n as f64;
            }
            let cell = PhaseCell {
                cost: *cost,
                fakeability: *phi,
                cooperation_rate: tail_coop / tail_n as f64,
                ci95: tables.cooperation_ci95(&tail_shares),
                terminal_shares: tail_shares.to_vec(),
            };
            Ok((cell, trajectory))
        })
        .collect();

    let mut phase_cells = Vec::with_capacity(grid.len());
    for outcome in cells {
        let (cell, traj) = outcome?;
        if let Some(traj) = traj {
            result.trajectory = Some(traj);
        }
        phase_cells.push(cell);
    }

    let rates: Vec<f64> = phase_cells.iter().map(|c| c.cooperation_rate).collect();
    let mean = rates.iter().sum::<f64>() / rates.len() as f64;
    result.summary.insert("cooperation_rate_mean".to_string(), mean);
    result
        .summary
        .insert("cooperation_rate_min".to_string(), rates.iter().copied().fold(f64::INFINITY, f64::min));
    result
        .summary
        .insert("cooperation_rate_max".to_string(), rates.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    result.phase_map = Some(PhaseMap { cells: phase_cells });
    Ok(result)
}
