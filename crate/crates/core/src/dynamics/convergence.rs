use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::trajectory::Trajectory;

/// Result of [`detect_convergence`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convergence {
    ConvergedAt(f64),
    NotConverged,
}

impl Convergence {
    pub fn time(&self) -> Option<f64> {
        match self {
            Convergence::ConvergedAt(t) => Some(*t),
            Convergence::NotConverged => None,
        }
    }
}

/// Earliest sample time from which every tracked value stays within `tol`
/// of its value there for `window` consecutive samples.
///
/// The check only looks forward inside each window, so extending a
/// trajectory never changes an already-reported answer.
pub fn detect_convergence(traj: &Trajectory, window: usize, tol: f64) -> Result<Convergence> {
    if window < 2 {
        return Err(Error::Param {
            field: "window".to_string(),
            detail: "must cover at least 2 samples".to_string(),
        });
    }
    let samples = traj.samples();
    if window > samples.len() {
        return Err(Error::Window { window, len: samples.len() });
    }
    'outer: for k in 0..=samples.len() - window {
        let base = &samples[k];
        for sample in &samples[k + 1..k + window] {
            let drift = base
                .sender
                .iter()
                .zip(&sample.sender)
                .chain(base.receiver.iter().zip(&sample.receiver))
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if drift > tol {
                continue 'outer;
            }
        }
        return Ok(Convergence::ConvergedAt(base.time));
    }
    Ok(Convergence::NotConverged)
}
