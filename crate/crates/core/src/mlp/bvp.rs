use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use super::{mlp_rhs, optimal_readout, stochastic_energy, PhasePoint};
use crate::bloch::BlochState;
use crate::error::{Error, Result};
use crate::measurement::MeasurementParams;
use crate::numerics::{rk4_step, steps_for};
use crate::trajectory::FinalCondition;

/// Settings for the multiple-shooting solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BvpOptions {
    /// Largest RK4 step, in units of `1/γ1` when `γ1 = 1`.
    pub h: f64,
    /// Number of shooting segments; by default one per half unit of time.
    pub segments: Option<usize>,
    /// Max-norm tolerance on the boundary and matching residuals.
    pub tol: f64,
    pub max_iterations: usize,
    pub max_restarts: usize,
    /// Starting guess for the initial momenta.
    pub initial_momenta: [f64; 3],
    /// Seed for the perturbed restart guesses.
    pub seed: u64,
}

impl Default for BvpOptions {
    fn default() -> Self {
        Self { h: 1e-3, segments: None, tol: 1e-10, max_iterations: 60, max_restarts: 8, initial_momenta: [0.0; 3], seed: 0 }
    }
}

/// A solved most-likely path sampled on the RK4 grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MlpPath {
    pub times: Vec<f64>,
    pub points: Vec<PhasePoint>,
    pub readouts: Vec<(f64, f64)>,
    /// Stochastic energy at the initial point.
    pub energy: f64,
    /// Max-norm of the boundary and matching residuals at convergence.
    pub residual: f64,
}

impl MlpPath {
    pub fn energies(&self, p: &MeasurementParams) -> Vec<f64> {
        self.points.iter().map(|q| stochastic_energy(q, p)).collect()
    }

    /// `max |H − H(0)| / max(|H(0)|, γ1)` along the path.
    pub fn energy_drift(&self, p: &MeasurementParams) -> f64 {
        let h0 = self.energy;
        let worst = self.energies(p).iter().map(|h| (h - h0).abs()).fold(0.0, f64::max);
        worst / h0.abs().max(p.gamma1)
    }

    /// Action `∫ (−p·ṙ + H) dt` by the trapezoidal rule.
    pub fn action(&self, p: &MeasurementParams) -> f64 {
        let integrand: Vec<f64> = self
            .points
            .iter()
            .map(|q| {
                let d = mlp_rhs(q, p);
                -(q.momenta[0] * d[0] + q.momenta[1] * d[1] + q.momenta[2] * d[2]) + stochastic_energy(q, p)
            })
            .collect();
        self.times.windows(2).zip(integrand.windows(2)).map(|(t, f)| 0.5 * (t[1] - t[0]) * (f[0] + f[1])).sum()
    }

    pub fn final_point(&self) -> PhasePoint {
        *self.points.last().expect("path is non-empty")
    }
}

struct Problem<'a> {
    s0: BlochState,
    target: FinalCondition,
    params: &'a MeasurementParams,
    segments: usize,
    steps: usize,
    h: f64,
}

impl Problem<'_> {
    fn flow(&self, v: &[f64; 6]) -> Option<[f64; 6]> {
        let f = |w: &[f64; 6]| mlp_rhs(&PhasePoint::from_array(w), self.params);
        let mut w = *v;
        for _ in 0..self.steps {
            w = rk4_step(&f, &w, self.h);
        }
        w.iter().all(|c| c.is_finite()).then_some(w)
    }

    fn start(&self, z: &[f64], k: usize) -> [f64; 6] {
        if k == 0 {
            [self.s0.u, self.s0.x, self.s0.y, z[0], z[1], z[2]]
        } else {
            let o = 3 + 6 * (k - 1);
            std::array::from_fn(|i| z[o + i])
        }
    }

    fn residual(&self, z: &[f64]) -> Option<DVector<f64>> {
        let n = z.len();
        let mut r = DVector::zeros(n);
        for k in 0..self.segments {
            let end = self.flow(&self.start(z, k))?;
            if k + 1 < self.segments {
                let next = self.start(z, k + 1);
                for i in 0..6 {
                    r[6 * k + i] = end[i] - next[i];
                }
            } else {
                let o = 6 * k;
                let targets = [self.target.u, self.target.x, self.target.y];
                for i in 0..3 {
                    r[o + i] = match targets[i] {
                        Some(t) => end[i] - t,
                        None => end[3 + i],
                    };
                }
            }
        }
        Some(r)
    }

    fn initial_guess(&self, p0: [f64; 3]) -> Vec<f64> {
        let mut z = vec![0.0; 3 + 6 * (self.segments - 1)];
        z[..3].copy_from_slice(&p0);
        let mut v = self.start(&z, 0);
        for k in 1..self.segments {
            v = self.flow(&v).unwrap_or(v);
            z[3 + 6 * (k - 1)..3 + 6 * k].copy_from_slice(&v);
        }
        z
    }

    fn newton(&self, mut z: Vec<f64>, tol: f64, max_iterations: usize) -> std::result::Result<Vec<f64>, f64> {
        let mut f = match self.residual(&z) {
            Some(f) => f,
            None => return Err(f64::INFINITY),
        };
        for _ in 0..max_iterations {
            let norm = f.amax();
            if norm < tol {
                return Ok(z);
            }
            let n = z.len();
            let mut jac = DMatrix::zeros(n, n);
            for j in 0..n {
                let step = 1e-7 * z[j].abs().max(1.0);
                let mut zp = z.clone();
                zp[j] += step;
                let fp = self.residual(&zp).ok_or(norm)?;
                jac.set_column(j, &((fp - &f) / step));
            }
            let delta = jac.svd(true, true).solve(&(-&f), 1e-14).map_err(|_| norm)?;
            let mut lambda = 1.0;
            let current = f.norm();
            loop {
                let trial: Vec<f64> = z.iter().zip(delta.iter()).map(|(a, d)| a + lambda * d).collect();
                if let Some(ft) = self.residual(&trial) {
                    if ft.norm() < (1.0 - 1e-4 * lambda) * current {
                        z = trial;
                        f = ft;
                        break;
                    }
                }
                lambda *= 0.5;
                if lambda < 1e-6 {
                    return Err(norm);
                }
            }
        }
        let norm = f.amax();
        if norm < tol {
            Ok(z)
        } else {
            Err(norm)
        }
    }
}

/// Solves the canonical equations from `s0` to the final condition `target`
/// after time `duration`. Components left free at the final time get the
/// natural condition `p_i(T) = 0`.
pub fn solve_mlp_bvp(
    s0: &BlochState,
    target: &FinalCondition,
    duration: f64,
    params: &MeasurementParams,
    opts: &BvpOptions,
) -> Result<MlpPath> {
    s0.validate()?;
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(Error::InvalidParams(format!("duration must be positive, got {duration}")));
    }
    let segments = opts.segments.unwrap_or_else(|| (duration / 0.5).ceil().max(1.0) as usize);
    let seg_len = duration / segments as f64;
    let steps = steps_for(seg_len, opts.h);
    let problem = Problem { s0: *s0, target: *target, params, segments, steps, h: seg_len / steps as f64 };

    let finish = |problem: &Problem<'_>, z: Vec<f64>| {
        let residual = problem.residual(&z).map_or(f64::INFINITY, |r| r.amax());
        assemble(problem, &z, residual)
    };
    let mut best = f64::INFINITY;
    match problem.newton(problem.initial_guess(opts.initial_momenta), opts.tol, opts.max_iterations) {
        Ok(z) => return Ok(finish(&problem, z)),
        Err(r) => best = best.min(r),
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for attempt in 1..=opts.max_restarts {
        let mut p0 = opts.initial_momenta;
        let spread = Normal::new(0.0, 0.5 * attempt as f64).unwrap();
        for c in &mut p0 {
            *c += spread.sample(&mut rng);
        }
        match problem.newton(problem.initial_guess(p0), opts.tol, opts.max_iterations) {
            Ok(z) => return Ok(finish(&problem, z)),
            Err(r) => {
                log::debug!("shooting attempt {attempt} stopped with residual {r:e}");
                best = best.min(r);
            }
        }
    }
    Err(Error::NoConvergence { iterations: opts.max_restarts + 1, residual: best })
}

fn assemble(problem: &Problem<'_>, z: &[f64], residual: f64) -> MlpPath {
    let f = |w: &[f64; 6]| mlp_rhs(&PhasePoint::from_array(w), problem.params);
    let mut times = vec![0.0];
    let mut points = vec![PhasePoint::from_array(&problem.start(z, 0))];
    let mut step = 0usize;
    for k in 0..problem.segments {
        let mut w = problem.start(z, k);
        if k > 0 {
            // Replace the previous segment's endpoint with the matched node.
            *points.last_mut().expect("non-empty") = PhasePoint::from_array(&w);
        }
        for _ in 0..problem.steps {
            w = rk4_step(&f, &w, problem.h);
            step += 1;
            times.push(step as f64 * problem.h);
            points.push(PhasePoint::from_array(&w));
        }
    }
    let readouts = points.iter().map(|q| optimal_readout(q, problem.params)).collect();
    let energy = stochastic_energy(&points[0], problem.params);
    MlpPath { times, points, readouts, energy, residual }
}
