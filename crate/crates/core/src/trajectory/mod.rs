//! Quantum trajectories of the monitored qubit.
//!
//! Three update schemes are available: the exact Kraus map with outcomes drawn
//! from the true heterodyne distribution, a Stratonovich–Heun integration of the
//! continuum equations, and an Itô Euler–Maruyama integration.

mod io;
mod stats;

pub use io::{read_ensemble_csv, write_ensemble_csv, write_manifest, EnsembleManifest, CSV_HEADER};
pub use stats::{empirical_mlp, ensemble_stats, postselect, EnsembleStats, FinalCondition, PostSelection};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bloch::BlochState;
use crate::error::{Error, Result};
use crate::measurement::{sample_alpha, update_with_loss_dephasing, MeasurementParams, QuadratureSample};

/// Integration scheme for a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Exact,
    Stratonovich,
    Ito,
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::Exact => "exact",
            Scheme::Stratonovich => "stratonovich",
            Scheme::Ito => "ito",
        })
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Scheme::Exact),
            "stratonovich" => Ok(Scheme::Stratonovich),
            "ito" => Ok(Scheme::Ito),
            other => Err(Error::Parse(format!("unknown scheme {other:?}"))),
        }
    }
}

/// Noise part of the quadrature currents, `ξ_I = I − ζx`, `ξ_Q = Q − ζy`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseSample {
    pub xi_i: f64,
    pub xi_q: f64,
}

/// Options for the SDE schemes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdeOptions {
    /// Largest excursion outside the Bloch ball that is clipped back onto the
    /// sphere; anything larger aborts the trajectory.
    pub clip_tolerance: f64,
}

impl Default for SdeOptions {
    fn default() -> Self {
        Self { clip_tolerance: 1e-6 }
    }
}

/// One realisation: `n + 1` states on the grid `t_j = j δt` and the `n`
/// readouts and noises recorded on each step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<BlochState>,
    pub readouts: Vec<QuadratureSample>,
    pub noises: Vec<NoiseSample>,
    pub seed: u64,
}

impl Trajectory {
    pub fn n_steps(&self) -> usize {
        self.readouts.len()
    }

    pub fn final_state(&self) -> BlochState {
        *self.states.last().expect("trajectory has at least the initial state")
    }

    pub fn duration(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }
}

/// Trajectories sharing an initial state, parameters, scheme and time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub trajectories: Vec<Trajectory>,
    pub params: MeasurementParams,
    pub initial: BlochState,
    pub scheme: Scheme,
    pub n_steps: usize,
}

impl Ensemble {
    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        time_grid(self.params.dt, self.n_steps)
    }

    pub fn seeds(&self) -> Vec<u64> {
        self.trajectories.iter().map(|t| t.seed).collect()
    }
}

pub fn time_grid(dt: f64, n_steps: usize) -> Vec<f64> {
    (0..=n_steps).map(|j| j as f64 * dt).collect()
}

/// Right-hand side of the Stratonovich equations for given currents `(I, Q)`.
pub fn stratonovich_rhs(s: &BlochState, i: f64, q: f64, p: &MeasurementParams) -> [f64; 3] {
    let (u, x, y) = (s.u, s.x, s.y);
    let g1 = p.gamma1;
    let z = p.zeta();
    let proj = x * i + y * q;
    let decay = 1.0 - p.eta * u;
    [
        -g1 * u * (1.0 - 0.5 * p.eta * u) - z * u * proj,
        -0.5 * g1 * x * decay - p.gamma_phi * x + z * (u * i - x * proj),
        -0.5 * g1 * y * decay - p.gamma_phi * y + z * (u * q - y * proj),
    ]
}

/// Itô drift `(−γ1 u, −γ2 x, −γ2 y)`.
pub fn ito_drift(s: &BlochState, p: &MeasurementParams) -> [f64; 3] {
    let g2 = p.gamma2();
    [-p.gamma1 * s.u, -g2 * s.x, -g2 * s.y]
}

/// Itô diffusion matrix; row `i` holds the coefficients of `(ξ_I, ξ_Q)` in `ṙ_i`.
pub fn ito_diffusion(s: &BlochState, p: &MeasurementParams) -> [[f64; 2]; 3] {
    let z = p.zeta();
    let (u, x, y) = (s.u, s.x, s.y);
    [[-z * u * x, -z * u * y], [z * (u - x * x), -z * x * y], [-z * x * y, z * (u - y * y)]]
}

/// Right-hand side of the Itô equations for given noises `(ξ_I, ξ_Q)`.
pub fn ito_rhs(s: &BlochState, xi_i: f64, xi_q: f64, p: &MeasurementParams) -> [f64; 3] {
    let a = ito_drift(s, p);
    let b = ito_diffusion(s, p);
    [0, 1, 2].map(|k| a[k] + b[k][0] * xi_i + b[k][1] * xi_q)
}

/// Extra drift `d` such that the Itô drift equals the Stratonovich drift
/// (currents at their means) plus `d`.
pub fn ito_correction(s: &BlochState, p: &MeasurementParams) -> [f64; 3] {
    let z2 = p.zeta() * p.zeta();
    let (u, x, y) = (s.u, s.x, s.y);
    let r2 = x * x + y * y;
    [z2 * u * (r2 - u), z2 * x * (r2 - 2.0 * u), z2 * y * (r2 - 2.0 * u)]
}

/// One step of `θ̇ = (γ1/2) sin θ + √(γ1/2)(1 + cos θ) I` with the current
/// held fixed over the step (Stratonovich sense), integrated by RK4.
pub fn theta_sde_step(theta: f64, i: f64, gamma1: f64, dt: f64) -> f64 {
    let f = |th: &[f64; 1]| [0.5 * gamma1 * th[0].sin() + (0.5 * gamma1).sqrt() * (1.0 + th[0].cos()) * i];
    crate::numerics::rk4_step(&f, &[theta], dt)[0]
}

fn add_scaled(s: &BlochState, h: f64, k: &[f64; 3]) -> BlochState {
    BlochState::new(s.u + h * k[0], s.x + h * k[1], s.y + h * k[2])
}

/// One Stratonovich–Heun step driven by fixed noises; both stages evaluate the
/// currents as `ζx + ξ` at their own state.
pub fn stratonovich_step(s: &BlochState, noise: NoiseSample, p: &MeasurementParams) -> BlochState {
    let z = p.zeta();
    let rhs = |st: &BlochState| stratonovich_rhs(st, z * st.x + noise.xi_i, z * st.y + noise.xi_q, p);
    let k1 = rhs(s);
    let mid = add_scaled(s, p.dt, &k1);
    let k2 = rhs(&mid);
    let avg = [0, 1, 2].map(|k| 0.5 * (k1[k] + k2[k]));
    add_scaled(s, p.dt, &avg)
}

/// One Euler–Maruyama step of the Itô equations.
pub fn ito_step(s: &BlochState, noise: NoiseSample, p: &MeasurementParams) -> BlochState {
    add_scaled(s, p.dt, &ito_rhs(s, noise.xi_i, noise.xi_q, p))
}

fn clip(s: BlochState, step: usize, opts: &SdeOptions) -> Result<BlochState> {
    if !(s.u.is_finite() && s.x.is_finite() && s.y.is_finite()) {
        return Err(Error::IntegrationFailure { step, reason: "non-finite state".into() });
    }
    let overshoot = s.radius_sq().sqrt() - 1.0;
    if overshoot <= 0.0 {
        Ok(s)
    } else if overshoot < opts.clip_tolerance {
        Ok(s.project_to_ball())
    } else {
        Err(Error::IntegrationFailure { step, reason: format!("state left the Bloch ball by {overshoot:e}") })
    }
}

fn draw_noise(rng: &mut ChaCha8Rng, dt: f64) -> NoiseSample {
    let sd = (1.0 / dt).sqrt();
    let a: f64 = rng.sample(StandardNormal);
    let b: f64 = rng.sample(StandardNormal);
    NoiseSample { xi_i: sd * a, xi_q: sd * b }
}

fn sdt_readout(s: &BlochState, n: NoiseSample, z: f64) -> QuadratureSample {
    QuadratureSample { i: z * s.x + n.xi_i, q: z * s.y + n.xi_q }
}

/// Simulates `n_steps` steps from `s0` with the default SDE options.
pub fn simulate_trajectory(
    s0: &BlochState,
    p: &MeasurementParams,
    scheme: Scheme,
    n_steps: usize,
    seed: u64,
) -> Result<Trajectory> {
    simulate_trajectory_with(s0, p, scheme, n_steps, seed, &SdeOptions::default())
}

pub fn simulate_trajectory_with(
    s0: &BlochState,
    p: &MeasurementParams,
    scheme: Scheme,
    n_steps: usize,
    seed: u64,
    opts: &SdeOptions,
) -> Result<Trajectory> {
    p.validate()?;
    s0.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = p.zeta();
    let mut states = Vec::with_capacity(n_steps + 1);
    let mut readouts = Vec::with_capacity(n_steps);
    let mut noises = Vec::with_capacity(n_steps);
    let mut s = *s0;
    states.push(s);
    let k = p.eta * p.epsilon();
    for step in 0..n_steps {
        let (next, readout, noise) = match scheme {
            Scheme::Exact => {
                let alpha = sample_alpha(&s, k, &mut rng);
                let r = QuadratureSample::from_alpha(alpha, p.dt);
                let next = update_with_loss_dephasing(&s, p, alpha)
                    .map_err(|e| Error::IntegrationFailure { step, reason: e.to_string() })?;
                (next, r, NoiseSample { xi_i: r.i - z * s.x, xi_q: r.q - z * s.y })
            }
            Scheme::Stratonovich => {
                let n = draw_noise(&mut rng, p.dt);
                (clip(stratonovich_step(&s, n, p), step, opts)?, sdt_readout(&s, n, z), n)
            }
            Scheme::Ito => {
                let n = draw_noise(&mut rng, p.dt);
                (clip(ito_step(&s, n, p), step, opts)?, sdt_readout(&s, n, z), n)
            }
        };
        s = next;
        states.push(s);
        readouts.push(readout);
        noises.push(noise);
    }
    Ok(Trajectory { times: time_grid(p.dt, n_steps), states, readouts, noises, seed })
}

/// Integrates an SDE scheme with a prescribed noise record instead of random draws.
pub fn integrate_with_noises(
    s0: &BlochState,
    p: &MeasurementParams,
    scheme: Scheme,
    noises: &[NoiseSample],
    opts: &SdeOptions,
) -> Result<Trajectory> {
    p.validate()?;
    s0.validate()?;
    let z = p.zeta();
    let mut s = *s0;
    let mut states = vec![s];
    let mut readouts = Vec::with_capacity(noises.len());
    for (step, n) in noises.iter().enumerate() {
        readouts.push(sdt_readout(&s, *n, z));
        let next = match scheme {
            Scheme::Stratonovich => stratonovich_step(&s, *n, p),
            Scheme::Ito => ito_step(&s, *n, p),
            Scheme::Exact => return Err(Error::InvalidParams("the exact scheme draws its own outcomes".into())),
        };
        s = clip(next, step, opts)?;
        states.push(s);
    }
    Ok(Trajectory { times: time_grid(p.dt, noises.len()), states, readouts, noises: noises.to_vec(), seed: 0 })
}

/// Generates `n_trajectories` members in parallel; member `k` uses seed `base_seed + k`.
pub fn generate_ensemble(
    s0: &BlochState,
    p: &MeasurementParams,
    scheme: Scheme,
    n_steps: usize,
    n_trajectories: usize,
    base_seed: u64,
    opts: &SdeOptions,
) -> Result<Ensemble> {
    if n_trajectories == 0 {
        return Err(Error::Empty("ensemble needs at least one trajectory"));
    }
    p.validate()?;
    s0.validate()?;
    let trajectories = (0..n_trajectories as u64)
        .into_par_iter()
        .map(|k| simulate_trajectory_with(s0, p, scheme, n_steps, base_seed.wrapping_add(k), opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(Ensemble { trajectories, params: *p, initial: *s0, scheme, n_steps })
}
