use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Ensemble, Trajectory};
use crate::error::{Error, Result};

/// Pointwise ensemble mean and sample variance of `(u, x, y)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleStats {
    pub times: Vec<f64>,
    pub mean: Vec<[f64; 3]>,
    pub variance: Vec<[f64; 3]>,
    pub count: usize,
}

pub fn ensemble_stats(e: &Ensemble) -> Result<EnsembleStats> {
    if e.is_empty() {
        return Err(Error::Empty("ensemble"));
    }
    let n = e.len();
    let len = e.n_steps + 1;
    let mut mean = vec![[0.0; 3]; len];
    let mut variance = vec![[0.0; 3]; len];
    for j in 0..len {
        let mut acc = [0.0; 3];
        for t in &e.trajectories {
            let r = t.states[j].as_array();
            for k in 0..3 {
                acc[k] += r[k];
            }
        }
        let m = acc.map(|a| a / n as f64);
        if n > 1 {
            let mut ss = [0.0; 3];
            for t in &e.trajectories {
                let r = t.states[j].as_array();
                for k in 0..3 {
                    ss[k] += (r[k] - m[k]) * (r[k] - m[k]);
                }
            }
            variance[j] = ss.map(|v| v / (n - 1) as f64);
        }
        mean[j] = m;
    }
    Ok(EnsembleStats { times: e.times(), mean, variance, count: n })
}

/// Condition on any subset of the final-state components.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FinalCondition {
    pub u: Option<f64>,
    pub x: Option<f64>,
    pub y: Option<f64>,
}

impl FinalCondition {
    pub fn on_u(u: f64) -> Self {
        Self { u: Some(u), ..Self::default() }
    }

    pub fn matches(&self, s: &crate::bloch::BlochState, tolerance: f64) -> bool {
        let ok = |target: Option<f64>, v: f64| target.is_none_or(|c| (v - c).abs() <= tolerance);
        ok(self.u, s.u) && ok(self.x, s.x) && ok(self.y, s.y)
    }
}

/// Outcome of post-selection.
#[derive(Debug, Clone, PartialEq)]
pub enum PostSelection {
    Selected(Ensemble),
    Empty,
}

impl PostSelection {
    pub fn ensemble(&self) -> Option<&Ensemble> {
        match self {
            PostSelection::Selected(e) => Some(e),
            PostSelection::Empty => None,
        }
    }

    pub fn len(&self) -> usize {
        self.ensemble().map_or(0, Ensemble::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Members whose final state lies within `tolerance` of `target` on each conditioned component.
pub fn postselect(e: &Ensemble, target: &FinalCondition, tolerance: f64) -> Result<PostSelection> {
    if !(tolerance > 0.0) {
        return Err(Error::InvalidParams(format!("tolerance must be positive, got {tolerance}")));
    }
    let trajectories: Vec<Trajectory> =
        e.trajectories.iter().filter(|t| target.matches(&t.final_state(), tolerance)).cloned().collect();
    if trajectories.is_empty() {
        return Ok(PostSelection::Empty);
    }
    Ok(PostSelection::Selected(Ensemble { trajectories, ..e.clone_empty() }))
}

impl Ensemble {
    fn clone_empty(&self) -> Ensemble {
        Ensemble {
            trajectories: Vec::new(),
            params: self.params,
            initial: self.initial,
            scheme: self.scheme,
            n_steps: self.n_steps,
        }
    }
}

/// Member with the smallest time-averaged trace distance to all other members.
/// Every grid point carries equal weight; ties go to the lowest seed.
pub fn empirical_mlp(sub: &Ensemble) -> Result<Trajectory> {
    let n = sub.len();
    if n < 2 {
        return Err(Error::InvalidParams(format!("empirical MLP needs at least two trajectories, got {n}")));
    }
    let scores: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|a| {
            let ta = &sub.trajectories[a];
            let mut total = 0.0;
            for (b, tb) in sub.trajectories.iter().enumerate() {
                if a == b {
                    continue;
                }
                total += ta.states.iter().zip(&tb.states).map(|(sa, sb)| sa.trace_distance(sb)).sum::<f64>();
            }
            total
        })
        .collect();
    let mut best = 0;
    for k in 1..n {
        let (sk, sb) = (scores[k], scores[best]);
        let seed_k = sub.trajectories[k].seed;
        let seed_b = sub.trajectories[best].seed;
        if sk < sb || (sk == sb && seed_k < seed_b) {
            best = k;
        }
    }
    Ok(sub.trajectories[best].clone())
}
