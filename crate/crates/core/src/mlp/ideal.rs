//! Ideal detection (`η = 1`, `γφ = 0`) on the `y = 0` great circle.
//!
//! States are pure, `u = 1 + cos θ`, `x = sin θ`, and the optimised
//! Hamiltonian is `H' = γ1 (a p² + b p + c)` with `a = −c = cos⁴(θ/2)` and
//! `b = sin θ (1 + cos θ / 2)`.

use serde::{Deserialize, Serialize};

use crate::bloch::BlochState;
use crate::error::{Error, Result};
use crate::numerics::{brent, rk4_step, steps_for};

/// Branch of the zero-energy line: `Plus` relaxes towards `|g⟩` (θ increasing),
/// `Minus` excites towards `|e⟩` (θ decreasing).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

/// `(a, b, c)` at angle `θ`.
pub fn coefficients(theta: f64) -> (f64, f64, f64) {
    let c2 = theta.cos() * 0.5 + 0.5;
    let a = c2 * c2;
    let b = theta.sin() * (1.0 + 0.5 * theta.cos());
    (a, b, -a)
}

fn coefficient_derivatives(theta: f64) -> (f64, f64, f64) {
    let half = 0.5 * theta;
    let da = -2.0 * half.cos().powi(3) * half.sin();
    let db = theta.cos() + 0.5 * (2.0 * theta).cos();
    (da, db, -da)
}

pub fn ideal_h_prime(theta: f64, p: f64, gamma1: f64) -> f64 {
    let (a, b, c) = coefficients(theta);
    gamma1 * (a * p * p + b * p + c)
}

/// Canonical flow `(θ̇, ṗ)` of the optimised Hamiltonian.
pub fn ideal_rhs(theta: f64, p: f64, gamma1: f64) -> [f64; 2] {
    let (a, b, _) = coefficients(theta);
    let (da, db, dc) = coefficient_derivatives(theta);
    [gamma1 * (2.0 * a * p + b), -gamma1 * (da * p * p + db * p + dc)]
}

/// Most likely current `I = √(γ1/2)(sin θ + p (1 + cos θ))`.
pub fn ideal_mlp_readout(theta: f64, p: f64, gamma1: f64) -> f64 {
    (0.5 * gamma1).sqrt() * (theta.sin() + p * (1.0 + theta.cos()))
}

pub fn theta_to_state(theta: f64) -> BlochState {
    BlochState::new(1.0 + theta.cos(), theta.sin(), 0.0)
}

/// Real solutions of `H'(θ, p) = E`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnergyRoots {
    None,
    /// Both roots, larger first.
    Pair(f64, f64),
    /// At `θ = π` with `E = 0` every momentum lies on the energy line.
    Degenerate,
}

fn at_ground(theta: f64) -> bool {
    1.0 + theta.cos() == 0.0
}

pub fn p_at_energy(theta: f64, energy: f64, gamma1: f64) -> EnergyRoots {
    if at_ground(theta) {
        return if energy == 0.0 { EnergyRoots::Degenerate } else { EnergyRoots::None };
    }
    let (a, b, c) = coefficients(theta);
    let c = c - energy / gamma1;
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return EnergyRoots::None;
    }
    let q = -0.5 * (b + if b >= 0.0 { 1.0 } else { -1.0 } * disc.sqrt());
    let (r1, r2) = if q == 0.0 { (0.0, 0.0) } else { (q / a, c / q) };
    EnergyRoots::Pair(r1.max(r2), r1.min(r2))
}

/// Momentum on a zero-energy line. At `θ = π` the `Plus` branch is `0` and the
/// `Minus` branch diverges like `8/(θ − π)³`; there `+∞` is returned.
pub fn p_zero_energy(theta: f64, branch: Branch) -> f64 {
    if at_ground(theta) {
        return match branch {
            Branch::Plus => 0.0,
            Branch::Minus => f64::INFINITY,
        };
    }
    match p_at_energy(theta, 0.0, 1.0) {
        EnergyRoots::Pair(hi, lo) => match branch {
            Branch::Plus => hi,
            Branch::Minus => lo,
        },
        _ => unreachable!("zero-energy discriminant is positive away from the ground state"),
    }
}

fn check_open_interval(theta: f64) -> Result<()> {
    if theta.abs() >= std::f64::consts::PI || !theta.is_finite() {
        return Err(Error::InvalidParams(format!(
            "angle {theta} must lie strictly inside (-pi, pi); paths do not pass through the ground state"
        )));
    }
    Ok(())
}

fn action_antiderivative(theta: f64, sign: f64) -> f64 {
    let half = 0.5 * theta;
    let root = (10.0 + 6.0 * theta.cos()).sqrt();
    let w = 2f64.sqrt() * half.sin() / (5.0 + 3.0 * theta.cos()).sqrt();
    (-sign * root * half.sin() + 2.0) / (2.0 * (1.0 + theta.cos())) - 2.0 * half.cos().ln() - sign * 2.0 * w.atanh()
}

/// `−∫ p dθ` along a zero-energy branch from `θ0` to `θf`.
pub fn ideal_action_zero_energy(theta0: f64, thetaf: f64, branch: Branch) -> Result<f64> {
    check_open_interval(theta0)?;
    check_open_interval(thetaf)?;
    let s = branch.sign();
    Ok(action_antiderivative(thetaf, s) - action_antiderivative(theta0, s))
}

fn time_antiderivative(theta: f64, gamma1: f64) -> f64 {
    let w = 2f64.sqrt() * (0.5 * theta).sin() / (5.0 + 3.0 * theta.cos()).sqrt();
    2.0 / gamma1 * w.atanh()
}

/// Time spent on a zero-energy line between `θ0` and `θf`.
pub fn ideal_time_zero_energy(theta0: f64, thetaf: f64, gamma1: f64) -> Result<f64> {
    check_open_interval(theta0)?;
    check_open_interval(thetaf)?;
    Ok((time_antiderivative(thetaf, gamma1) - time_antiderivative(theta0, gamma1)).abs())
}

/// Angle reached after time `t` along a zero-energy branch from `θ0`.
pub fn ideal_theta_at_time(theta0: f64, t: f64, branch: Branch, gamma1: f64) -> Result<f64> {
    check_open_interval(theta0)?;
    let g = time_antiderivative(theta0, gamma1) + branch.sign() * t;
    let w = (0.5 * gamma1 * g).tanh();
    // w² = tan²(θ/2) / (4 + tan²(θ/2))
    Ok(2.0 * (2.0 * w / (1.0 - w * w).sqrt()).atan())
}

/// Same as [`ideal_theta_at_time`] but by bracketed root finding on the time integral.
pub fn ideal_theta_at_time_bracketed(theta0: f64, t: f64, branch: Branch, gamma1: f64) -> Result<f64> {
    check_open_interval(theta0)?;
    let target = time_antiderivative(theta0, gamma1) + branch.sign() * t;
    let edge = std::f64::consts::PI - 1e-9;
    brent(|th| time_antiderivative(th, gamma1) - target, -edge, edge, 1e-14)
}

/// A most-likely path in `(θ, p_θ)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdealPath {
    pub times: Vec<f64>,
    pub theta: Vec<f64>,
    pub p: Vec<f64>,
    pub energy: f64,
    pub gamma1: f64,
}

impl IdealPath {
    pub fn readouts(&self) -> Vec<f64> {
        self.theta.iter().zip(&self.p).map(|(t, p)| ideal_mlp_readout(*t, *p, self.gamma1)).collect()
    }

    pub fn states(&self) -> Vec<BlochState> {
        self.theta.iter().map(|t| theta_to_state(*t)).collect()
    }

    /// `∫ (−p θ̇ + H') dt` by the trapezoidal rule.
    pub fn action(&self) -> f64 {
        let f: Vec<f64> = self
            .theta
            .iter()
            .zip(&self.p)
            .map(|(t, p)| -p * ideal_rhs(*t, *p, self.gamma1)[0] + ideal_h_prime(*t, *p, self.gamma1))
            .collect();
        self.times.windows(2).zip(f.windows(2)).map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1])).sum()
    }
}

/// Integrates the `(θ, p)` flow for `duration`.
pub fn integrate_ideal(theta0: f64, p0: f64, duration: f64, gamma1: f64, h_max: f64) -> IdealPath {
    let n = steps_for(duration, h_max).max(1);
    let h = duration / n as f64;
    let f = |v: &[f64; 2]| ideal_rhs(v[0], v[1], gamma1);
    let mut v = [theta0, p0];
    let mut times = vec![0.0];
    let mut theta = vec![theta0];
    let mut p = vec![p0];
    for k in 1..=n {
        v = rk4_step(&f, &v, h);
        times.push(k as f64 * h);
        theta.push(v[0]);
        p.push(v[1]);
    }
    IdealPath { times, theta, p, energy: ideal_h_prime(theta0, p0, gamma1), gamma1 }
}

fn shoot(theta0: f64, p0: f64, duration: f64, gamma1: f64, h: f64) -> f64 {
    let n = steps_for(duration, h).max(1);
    let dt = duration / n as f64;
    let f = |v: &[f64; 2]| ideal_rhs(v[0], v[1], gamma1);
    let mut v = [theta0, p0];
    for _ in 0..n {
        v = rk4_step(&f, &v, dt);
        if !v[0].is_finite() || !v[1].is_finite() || v[0].abs() >= std::f64::consts::PI {
            return f64::NAN;
        }
    }
    v[0]
}

/// Fixed-endpoint most-likely path between `θ0` and `θf` in time `duration`,
/// by shooting on the initial momentum. When several momenta connect the
/// endpoints the path of largest action is returned.
pub fn solve_ideal_bvp(theta0: f64, thetaf: f64, duration: f64, gamma1: f64, h: f64) -> Result<IdealPath> {
    check_open_interval(theta0)?;
    check_open_interval(thetaf)?;
    if !(duration > 0.0) {
        return Err(Error::InvalidParams(format!("duration must be positive, got {duration}")));
    }
    let miss = |p0: f64| shoot(theta0, p0, duration, gamma1, h) - thetaf;
    let grid: Vec<f64> = (0..=480).map(|k| (-6.0 + 12.0 * k as f64 / 480.0f64).sinh()).collect();
    let values: Vec<f64> = grid.iter().map(|&p| miss(p)).collect();
    let mut best: Option<IdealPath> = None;
    for k in 0..grid.len() - 1 {
        let (fa, fb) = (values[k], values[k + 1]);
        if !(fa.is_finite() && fb.is_finite()) || fa.signum() == fb.signum() {
            continue;
        }
        let p0 = brent(miss, grid[k], grid[k + 1], 1e-14)?;
        let path = integrate_ideal(theta0, p0, duration, gamma1, h);
        if (path.theta.last().unwrap() - thetaf).abs() > 1e-8 {
            continue;
        }
        if best.as_ref().is_none_or(|b| path.action() > b.action()) {
            best = Some(path);
        }
    }
    best.ok_or(Error::NoConvergence { iterations: grid.len(), residual: f64::NAN })
}

/// One row of a phase portrait: both momenta at energy `E` and angle `θ`
/// (`NaN` where no real root exists).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PortraitRow {
    pub energy: f64,
    pub theta: f64,
    pub p_plus: f64,
    pub p_minus: f64,
}

pub fn phase_portrait(energies: &[f64], thetas: &[f64], gamma1: f64) -> Vec<PortraitRow> {
    let mut rows = Vec::with_capacity(energies.len() * thetas.len());
    for &energy in energies {
        for &theta in thetas {
            let (p_plus, p_minus) = match p_at_energy(theta, energy, gamma1) {
                EnergyRoots::Pair(hi, lo) => (hi, lo),
                _ => (f64::NAN, f64::NAN),
            };
            rows.push(PortraitRow { energy, theta, p_plus, p_minus });
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::integrate;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn hamiltonian_examples() {
        assert!(ideal_h_prime(PI, 3.0, 1.0).abs() < 1e-15);
        assert_abs_diff_eq!(ideal_h_prime(0.7, 0.0, 2.0), -2.0 * (0.35f64).cos().powi(4), epsilon = 1e-15);
        assert_abs_diff_eq!(ideal_h_prime(0.0, 1.0, 1.0), 0.0);
        assert_abs_diff_eq!(ideal_h_prime(0.0, -1.0, 1.0), 0.0);
        assert_abs_diff_eq!(ideal_h_prime(0.0, 0.0, 3.0), -3.0);
    }

    #[test]
    fn rhs_matches_theta_equation_with_optimal_readout() {
        for k in 0..50 {
            let th = -3.0 + 0.12 * k as f64;
            let p = 0.3 * (k as f64 - 25.0) / 10.0;
            let i = ideal_mlp_readout(th, p, 1.0);
            let thdot = 0.5 * th.sin() + 0.5f64.sqrt() * (1.0 + th.cos()) * i;
            assert_abs_diff_eq!(ideal_rhs(th, p, 1.0)[0], thdot, epsilon = 1e-13);
            let h = 1e-6;
            let dh = (ideal_h_prime(th + h, p, 1.0) - ideal_h_prime(th - h, p, 1.0)) / (2.0 * h);
            assert_abs_diff_eq!(ideal_rhs(th, p, 1.0)[1], -dh, epsilon = 1e-8);
        }
    }

    #[test]
    fn zero_energy_limits() {
        assert_eq!(p_zero_energy(0.0, Branch::Plus), 1.0);
        assert_eq!(p_zero_energy(0.0, Branch::Minus), -1.0);
        assert_eq!(p_zero_energy(PI, Branch::Plus), 0.0);
        assert!(p_zero_energy(PI - 1e-3, Branch::Plus).abs() < 1e-3);
        for d in [1e-2, 3e-3, 1e-3] {
            let p = p_zero_energy(PI - d, Branch::Minus);
            assert!((p / (8.0 / (-d).powi(3)) - 1.0).abs() < 10.0 * d, "{d}: {p}");
        }
        assert_eq!(p_zero_energy(PI, Branch::Minus), f64::INFINITY);
    }

    #[test]
    fn zero_energy_matches_printed_formula() {
        for k in 0..60 {
            let th = -3.0 + 0.1 * k as f64;
            let half = 0.5 * th;
            let num = |s: f64| s * half.cos() * (10.0 + 6.0 * th.cos()).sqrt() - (2.0 + th.cos()) * th.sin();
            let den = (1.0 + th.cos()).powi(2);
            assert_abs_diff_eq!(p_zero_energy(th, Branch::Plus), num(1.0) / den, epsilon = 1e-9 * (1.0 + (num(1.0) / den).abs()));
            assert_abs_diff_eq!(
                p_zero_energy(th, Branch::Minus),
                num(-1.0) / den,
                epsilon = 1e-9 * (1.0 + (num(-1.0) / den).abs())
            );
        }
    }

    #[test]
    fn energy_roots_substitute_back() {
        for &e in &[-1.5, -0.3, 0.0, 0.4, 2.0] {
            for k in 0..40 {
                let th = -3.1 + 0.155 * k as f64;
                match p_at_energy(th, e, 1.3) {
                    EnergyRoots::Pair(hi, lo) => {
                        assert!(hi >= lo);
                        for r in [hi, lo] {
                            assert!((ideal_h_prime(th, r, 1.3) - e).abs() < 1e-10 * (1.0 + r * r));
                        }
                    }
                    EnergyRoots::None => {
                        let (a, b, c) = coefficients(th);
                        assert!(b * b - 4.0 * a * (c - e / 1.3) < 0.0);
                    }
                    EnergyRoots::Degenerate => unreachable!(),
                }
            }
        }
        assert_eq!(p_at_energy(PI, 0.0, 1.0), EnergyRoots::Degenerate);
        assert_eq!(p_at_energy(PI, 0.5, 1.0), EnergyRoots::None);
        assert_eq!(p_at_energy(0.0, -5.0, 1.0), EnergyRoots::None);
    }

    #[test]
    fn action_and_time_against_quadrature() {
        assert_eq!(ideal_action_zero_energy(1.0, 1.0, Branch::Plus).unwrap(), 0.0);
        assert_eq!(ideal_time_zero_energy(1.0, 1.0, 1.0).unwrap(), 0.0);
        for &(a, b) in &[(0.1, 3.0), (0.5, 2.2), (2.9, 0.3)] {
            for br in [Branch::Plus, Branch::Minus] {
                let q = integrate(|t| -p_zero_energy(t, br), a, b, 1e-12).unwrap();
                let c = ideal_action_zero_energy(a, b, br).unwrap();
                assert!((q - c).abs() < 1e-8 * q.abs().max(1.0), "{a}->{b} {br:?}: {q} vs {c}");
            }
            let q =
                integrate(|t| 2f64.sqrt() / (2.0 * (0.5 * t).cos() * (5.0 + 3.0 * t.cos()).sqrt()), a.min(b), a.max(b), 1e-12)
                    .unwrap();
            assert_abs_diff_eq!(ideal_time_zero_energy(a, b, 2.0).unwrap(), q, epsilon = 1e-8);
        }
        assert!(ideal_action_zero_energy(0.0, PI, Branch::Plus).is_err());
    }

    #[test]
    fn time_inversion_round_trip() {
        for k in 0..30 {
            let th = 0.1 + 0.1 * k as f64;
            let t = ideal_time_zero_energy(0.1, th, 1.0).unwrap();
            let back = ideal_theta_at_time(0.1, t, Branch::Plus, 1.0).unwrap();
            assert_abs_diff_eq!(back, th, epsilon = 1e-8);
            let br = ideal_theta_at_time_bracketed(0.1, t, Branch::Plus, 1.0).unwrap();
            assert_abs_diff_eq!(br, th, epsilon = 1e-8);
            let down = ideal_theta_at_time(th, t, Branch::Minus, 1.0).unwrap();
            assert_abs_diff_eq!(down, 0.1, epsilon = 1e-8);
        }
    }

    #[test]
    fn zero_energy_flow_follows_the_branch() {
        let th0 = 0.4;
        let path = integrate_ideal(th0, p_zero_energy(th0, Branch::Plus), 1.0, 1.0, 1e-3);
        let expected = ideal_theta_at_time(th0, 1.0, Branch::Plus, 1.0).unwrap();
        assert_abs_diff_eq!(*path.theta.last().unwrap(), expected, epsilon = 1e-9);
        let th = *path.theta.last().unwrap();
        assert_abs_diff_eq!(*path.p.last().unwrap(), p_zero_energy(th, Branch::Plus), epsilon = 1e-9);
    }

    #[test]
    fn stabilised_excited_state() {
        let path = integrate_ideal(0.0, 0.0, 3.0, 1.0, 1e-3);
        assert!(path.theta.iter().all(|t| *t == 0.0));
        assert_eq!(path.energy, -1.0);
        assert_abs_diff_eq!(path.action(), -3.0, epsilon = 1e-12);
        assert!(path.readouts().iter().all(|i| *i == 0.0));
    }

    #[test]
    fn bvp_recovers_zero_energy_path() {
        let (a, b) = (0.6, 2.0);
        let t = ideal_time_zero_energy(a, b, 1.0).unwrap();
        let path = solve_ideal_bvp(a, b, t, 1.0, 1e-3).unwrap();
        assert!(path.energy.abs() < 1e-7, "{}", path.energy);
        assert_abs_diff_eq!(path.p[0], p_zero_energy(a, Branch::Plus), epsilon = 1e-6);
        assert_abs_diff_eq!(path.action(), ideal_action_zero_energy(a, b, Branch::Plus).unwrap(), epsilon = 1e-6);
        assert!(solve_ideal_bvp(0.5, PI, 1.0, 1.0, 1e-3).is_err());
    }

    #[test]
    fn phase_portrait_marks_missing_roots() {
        let rows = phase_portrait(&[-5.0, 0.0], &[0.0, 1.0], 1.0);
        assert_eq!(rows.len(), 4);
        assert!(rows[0].p_plus.is_nan());
        assert_eq!(rows[2].p_plus, 1.0);
    }
}
