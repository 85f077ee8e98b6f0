use rayon::prelude::*;
use serde::Serialize;

use super::{CovarianceGrid, Variable};
use crate::error::{Error, Result};
use crate::trajectory::{Ensemble, Trajectory};

fn sample(t: &Trajectory, v: Variable, j: usize) -> f64 {
    match v {
        Variable::U => t.states[j].u,
        Variable::X => t.states[j].x,
        Variable::Y => t.states[j].y,
        Variable::XiI => t.noises[j].xi_i,
        Variable::XiQ => t.noises[j].xi_q,
        Variable::I => t.readouts[j].i,
        Variable::Q => t.readouts[j].q,
    }
}

fn grid_index(e: &Ensemble, v: Variable, t: f64) -> Result<usize> {
    let dt = e.params.dt;
    let last = if v.per_step() { e.n_steps.checked_sub(1).ok_or(Error::Empty("no steps"))? } else { e.n_steps };
    if !(t >= -0.5 * dt) || t > (last as f64 + 0.5) * dt {
        return Err(Error::InvalidParams(format!("time {t} lies outside the recorded grid for {}", v.name())));
    }
    let j = ((t / dt).round().max(0.0) as usize).min(last);
    if (j as f64 * dt - t).abs() > 1e-9 * dt.max(t.abs()) {
        log::warn!("time {t} is off the grid; using nearest point {}", j as f64 * dt);
    }
    Ok(j)
}

/// Sample covariance with its delete-one jackknife standard error.
fn jackknife_cov(a: &[f64], b: &[f64]) -> (f64, f64) {
    let n = a.len() as f64;
    let sa: f64 = a.iter().sum();
    let sb: f64 = b.iter().sum();
    let sab: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let cov = sab / n - (sa / n) * (sb / n);
    if a.len() < 2 {
        return (cov, f64::NAN);
    }
    let m = n - 1.0;
    let loo: Vec<f64> = a.iter().zip(b).map(|(x, y)| (sab - x * y) / m - (sa - x) * (sb - y) / (m * m)).collect();
    let mean = loo.iter().sum::<f64>() / n;
    let var = loo.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() * m / n;
    (cov, var.sqrt())
}

/// `Cov[a(t1) b(t2)]` over the ensemble with its jackknife standard error.
/// Times are snapped to the nearest grid point.
pub fn empirical_cov(e: &Ensemble, a: Variable, b: Variable, t1: f64, t2: f64) -> Result<(f64, f64)> {
    if e.is_empty() {
        return Err(Error::Empty("ensemble"));
    }
    let i = grid_index(e, a, t1)?;
    let j = grid_index(e, b, t2)?;
    let xa: Vec<f64> = e.trajectories.iter().map(|t| sample(t, a, i)).collect();
    let xb: Vec<f64> = e.trajectories.iter().map(|t| sample(t, b, j)).collect();
    Ok(jackknife_cov(&xa, &xb))
}

/// Monte Carlo covariance grid with standard errors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalGrid {
    pub grid: CovarianceGrid,
    pub stderr: Vec<Vec<f64>>,
    pub n_trajectories: usize,
}

pub fn empirical_grid(e: &Ensemble, a: Variable, b: Variable, times: &[f64]) -> Result<EmpiricalGrid> {
    let rows: Vec<Vec<(f64, f64)>> = times
        .par_iter()
        .map(|&t1| times.iter().map(|&t2| empirical_cov(e, a, b, t1, t2)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let values = rows.iter().map(|r| r.iter().map(|c| c.0).collect()).collect();
    let stderr = rows.iter().map(|r| r.iter().map(|c| c.1).collect()).collect();
    Ok(EmpiricalGrid {
        grid: CovarianceGrid { a, b, times: times.to_vec(), values, initial: e.initial, params: e.params },
        stderr,
        n_trajectories: e.len(),
    })
}

/// Cell-by-cell agreement between a closed form and a Monte Carlo estimate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub cells: usize,
    pub within: usize,
    /// `|analytic − empirical| / SE` per cell (`0` or `∞` where `SE = 0`).
    pub z_scores: Vec<Vec<f64>>,
}

impl Comparison {
    pub fn fraction(&self) -> f64 {
        if self.cells == 0 {
            1.0
        } else {
            self.within as f64 / self.cells as f64
        }
    }
}

/// Counts cells with `|analytic − empirical| ≤ k·SE`; a cell with zero SE
/// passes only if the two agree to `1e-12`.
pub fn compare(analytic: &CovarianceGrid, empirical: &EmpiricalGrid, k: f64) -> Result<Comparison> {
    if analytic.values.len() != empirical.grid.values.len() {
        return Err(Error::InvalidParams("grids have different shapes".into()));
    }
    let mut cells = 0;
    let mut within = 0;
    let mut z_scores = Vec::with_capacity(analytic.values.len());
    for ((ra, re), rs) in analytic.values.iter().zip(&empirical.grid.values).zip(&empirical.stderr) {
        let mut row = Vec::with_capacity(ra.len());
        for ((a, e), s) in ra.iter().zip(re).zip(rs) {
            let diff = (a - e).abs();
            let z = if *s > 0.0 {
                diff / s
            } else if diff <= 1e-12 {
                0.0
            } else {
                f64::INFINITY
            };
            cells += 1;
            if z <= k {
                within += 1;
            }
            row.push(z);
        }
        z_scores.push(row);
    }
    Ok(Comparison { cells, within, z_scores })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bloch::BlochState;
    use crate::measurement::MeasurementParams;
    use crate::trajectory::{generate_ensemble, Scheme, SdeOptions};
    use approx::assert_abs_diff_eq;

    #[test]
    fn jackknife_matches_brute_force() {
        let a = [1.0, 2.5, -0.3, 4.0, 0.7, 1.9];
        let b = [0.2, -1.0, 0.8, 2.2, 0.0, 1.1];
        let (c, se) = jackknife_cov(&a, &b);
        let n = a.len();
        let cov = |xa: &[f64], xb: &[f64]| {
            let m = xa.len() as f64;
            let ma = xa.iter().sum::<f64>() / m;
            let mb = xb.iter().sum::<f64>() / m;
            xa.iter().zip(xb).map(|(x, y)| x * y).sum::<f64>() / m - ma * mb
        };
        assert_abs_diff_eq!(c, cov(&a, &b), epsilon = 1e-14);
        let loo: Vec<f64> = (0..n)
            .map(|k| {
                let xa: Vec<f64> = a.iter().enumerate().filter(|(i, _)| *i != k).map(|(_, v)| *v).collect();
                let xb: Vec<f64> = b.iter().enumerate().filter(|(i, _)| *i != k).map(|(_, v)| *v).collect();
                cov(&xa, &xb)
            })
            .collect();
        let mean = loo.iter().sum::<f64>() / n as f64;
        let var = loo.iter().map(|v| (v - mean).powi(2)).sum::<f64>() * (n as f64 - 1.0) / n as f64;
        assert_abs_diff_eq!(se, var.sqrt(), epsilon = 1e-13);
        let (c, se) = jackknife_cov(&[3.0; 5], &[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_abs_diff_eq!(c, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(se, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn equal_time_autocovariance_is_sample_variance() {
        let p = MeasurementParams::new(1.0, 0.0, 0.2, 0.01).unwrap();
        let e =
            generate_ensemble(&BlochState::new(1.0, 1.0, 0.0), &p, Scheme::Exact, 50, 500, 3, &SdeOptions::default()).unwrap();
        let (c, _) = empirical_cov(&e, Variable::U, Variable::U, 0.3, 0.3).unwrap();
        let vals: Vec<f64> = e.trajectories.iter().map(|t| t.states[30].u).collect();
        let m = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / vals.len() as f64;
        assert_abs_diff_eq!(c, var, epsilon = 1e-14);
        assert!(empirical_cov(&e, Variable::XiI, Variable::U, 0.5, 0.1).is_err());
        assert!(empirical_cov(&e, Variable::U, Variable::U, 0.6, 0.1).is_err());
        let (c0, se0) = empirical_cov(&e, Variable::U, Variable::X, 0.0, 0.2).unwrap();
        assert_eq!(c0, 0.0);
        assert!(se0 < 1e-12);
    }

    #[test]
    fn zero_se_cells_need_exact_agreement() {
        let p = MeasurementParams::new(1.0, 0.0, 0.2, 0.01).unwrap();
        let e = generate_ensemble(&BlochState::GROUND, &p, Scheme::Exact, 10, 20, 0, &SdeOptions::default()).unwrap();
        let times = [0.0, 0.05, 0.1];
        let emp = empirical_grid(&e, Variable::U, Variable::U, &times).unwrap();
        let ana = super::super::analytic_grid(Variable::U, Variable::U, &times, &BlochState::GROUND, &p).unwrap();
        assert_eq!(compare(&ana, &emp, 3.0).unwrap().fraction(), 1.0);
        let mut shifted = ana.clone();
        shifted.values[1][1] = 1e-6;
        assert_eq!(compare(&shifted, &emp, 3.0).unwrap().within, 8);
    }
}
