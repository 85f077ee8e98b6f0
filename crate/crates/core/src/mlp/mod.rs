//! Most-likely paths from the stochastic action.
//!
//! Optimising the action over the readouts gives a canonical system in the
//! state `(u, x, y)` and its conjugate momenta `(p_u, p_x, p_y)`, with the
//! stochastic Hamiltonian as a constant of motion.

mod bvp;
pub mod ideal;

pub use bvp::{solve_mlp_bvp, BvpOptions, MlpPath};

use serde::{Deserialize, Serialize};

use crate::bloch::BlochState;
use crate::measurement::MeasurementParams;
use crate::numerics::{rk4_step, steps_for};
use crate::trajectory::stratonovich_rhs;

/// A state together with its conjugate momenta.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhasePoint {
    pub state: BlochState,
    pub momenta: [f64; 3],
}

impl PhasePoint {
    pub fn new(state: BlochState, momenta: [f64; 3]) -> Self {
        Self { state, momenta }
    }

    pub fn to_array(&self) -> [f64; 6] {
        let [pu, px, py] = self.momenta;
        [self.state.u, self.state.x, self.state.y, pu, px, py]
    }

    pub fn from_array(v: &[f64; 6]) -> Self {
        Self { state: BlochState::new(v[0], v[1], v[2]), momenta: [v[3], v[4], v[5]] }
    }
}

/// Stochastic Hamiltonian at fixed readouts `(I, Q)`.
pub fn stochastic_hamiltonian(pp: &PhasePoint, i: f64, q: f64, p: &MeasurementParams) -> f64 {
    let rdot = stratonovich_rhs(&pp.state, i, q, p);
    let [pu, px, py] = pp.momenta;
    let z = p.zeta();
    let s = &pp.state;
    pu * rdot[0] + px * rdot[1] + py * rdot[2] - 0.5 * i * i + z * s.x * i - 0.5 * q * q + z * s.y * q
        - 0.5 * p.eta * p.gamma1 * s.u
}

/// Readouts that make the action stationary.
pub fn optimal_readout(pp: &PhasePoint, p: &MeasurementParams) -> (f64, f64) {
    let z = p.zeta();
    let BlochState { u, x, y } = pp.state;
    let [pu, px, py] = pp.momenta;
    (z * (x + px * (u - x * x) - pu * u * x - py * x * y), z * (y + py * (u - y * y) - pu * u * y - px * x * y))
}

/// Stochastic energy: the Hamiltonian at the optimal readouts.
pub fn stochastic_energy(pp: &PhasePoint, p: &MeasurementParams) -> f64 {
    let (i, q) = optimal_readout(pp, p);
    stochastic_hamiltonian(pp, i, q, p)
}

/// Canonical flow `(∂H/∂p, −∂H/∂r)` with the readouts at their optimum.
pub fn mlp_rhs(pp: &PhasePoint, p: &MeasurementParams) -> [f64; 6] {
    let (i, q) = optimal_readout(pp, p);
    let rdot = stratonovich_rhs(&pp.state, i, q, p);
    let BlochState { u, x, y } = pp.state;
    let [pu, px, py] = pp.momenta;
    let g1 = p.gamma1;
    let eta = p.eta;
    let z = p.zeta();
    let proj = x * i + y * q;
    let damp = 0.5 * g1 * (1.0 - eta * u) + p.gamma_phi;
    let pu_dot = pu * (g1 * (1.0 - eta * u) + z * proj) - px * (0.5 * g1 * eta * x + z * i) - py * (0.5 * g1 * eta * y + z * q)
        + 0.5 * eta * g1;
    let px_dot = pu * z * u * i + px * (damp + z * (proj + x * i)) + py * z * y * i - z * i;
    let py_dot = pu * z * u * q + px * z * x * q + py * (damp + z * (proj + y * q)) - z * q;
    [rdot[0], rdot[1], rdot[2], pu_dot, px_dot, py_dot]
}

/// Integrates the canonical system over `duration` with RK4 steps no larger
/// than `h_max`, returning every grid point.
pub fn integrate_mlp(pp0: &PhasePoint, duration: f64, p: &MeasurementParams, h_max: f64) -> (Vec<f64>, Vec<PhasePoint>) {
    let n = steps_for(duration, h_max).max(1);
    let h = duration / n as f64;
    let f = |v: &[f64; 6]| mlp_rhs(&PhasePoint::from_array(v), p);
    let mut v = pp0.to_array();
    let mut times = Vec::with_capacity(n + 1);
    let mut points = Vec::with_capacity(n + 1);
    times.push(0.0);
    points.push(*pp0);
    for k in 1..=n {
        v = rk4_step(&f, &v, h);
        times.push(k as f64 * h);
        points.push(PhasePoint::from_array(&v));
    }
    (times, points)
}
