//! Single-step heterodyne measurement of the fluorescence field.
//!
//! Over a step `δt` the qubit emits into the output mode with probability
//! `ε = γ1 δt` (when excited). Heterodyne detection projects the mode on a
//! coherent state `|α⟩`, giving a complex outcome whose real and imaginary
//! parts are rescaled into the quadrature currents `I` and `Q`.

use nalgebra::Matrix2;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::bloch::{BlochState, PHYSICAL_TOL};
use crate::error::{Error, Result};

/// Largest emission probability `γ1 δt` accepted by default.
pub const MAX_STEP_STRENGTH: f64 = 0.1;

/// Monitoring channel: relaxation rate `γ1`, pure dephasing `γφ`, detection
/// efficiency `η` and time step `δt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementParams {
    pub gamma1: f64,
    #[serde(default)]
    pub gamma_phi: f64,
    pub eta: f64,
    pub dt: f64,
}

impl MeasurementParams {
    pub fn new(gamma1: f64, gamma_phi: f64, eta: f64, dt: f64) -> Result<Self> {
        let p = Self { gamma1, gamma_phi, eta, dt };
        p.validate()?;
        Ok(p)
    }

    /// Ideal detection: unit efficiency and no extra dephasing.
    pub fn ideal(gamma1: f64, dt: f64) -> Result<Self> {
        Self::new(gamma1, 0.0, 1.0, dt)
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_with_limit(MAX_STEP_STRENGTH)
    }

    pub fn validate_with_limit(&self, max_strength: f64) -> Result<()> {
        if !(self.gamma1 > 0.0 && self.gamma1.is_finite()) {
            return Err(Error::InvalidParams(format!("gamma1 must be positive, got {}", self.gamma1)));
        }
        if !(self.gamma_phi >= 0.0 && self.gamma_phi.is_finite()) {
            return Err(Error::InvalidParams(format!("gamma_phi must be non-negative, got {}", self.gamma_phi)));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::InvalidParams(format!("eta must lie in [0, 1], got {}", self.eta)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParams(format!("dt must be positive, got {}", self.dt)));
        }
        if self.epsilon() > max_strength {
            return Err(Error::InvalidParams(format!("gamma1*dt = {} exceeds {max_strength}", self.epsilon())));
        }
        Ok(())
    }

    pub fn with_dt(&self, dt: f64) -> Self {
        Self { dt, ..*self }
    }

    /// Emission probability per step, `ε = γ1 δt`.
    pub fn epsilon(&self) -> f64 {
        self.gamma1 * self.dt
    }

    /// Signal amplitude `ζ = √(η γ1 / 2)`.
    pub fn zeta(&self) -> f64 {
        (self.eta * self.gamma1 / 2.0).sqrt()
    }

    /// Total coherence decay rate `γ2 = γ1 / 2 + γφ`.
    pub fn gamma2(&self) -> f64 {
        0.5 * self.gamma1 + self.gamma_phi
    }

    /// Coherence factor applied by the phase-flip channel over one step.
    pub fn dephasing_factor(&self) -> f64 {
        (-self.gamma_phi * self.dt).exp()
    }
}

/// Rescaled quadrature currents of one heterodyne outcome.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct QuadratureSample {
    pub i: f64,
    pub q: f64,
}

impl QuadratureSample {
    pub fn new(i: f64, q: f64) -> Self {
        Self { i, q }
    }

    /// `Re α = I √(δt/2)`, `Im α = −Q √(δt/2)`.
    pub fn from_alpha(alpha: Complex64, dt: f64) -> Self {
        let s = (dt / 2.0).sqrt();
        Self { i: alpha.re / s, q: -alpha.im / s }
    }

    pub fn to_alpha(&self, dt: f64) -> Complex64 {
        let s = (dt / 2.0).sqrt();
        Complex64::new(self.i * s, -self.q * s)
    }
}

fn check_strength(eps: f64) -> Result<()> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidParams(format!("measurement strength must lie in [0, 1), got {eps}")));
    }
    Ok(())
}

fn density_unchecked(s: &BlochState, eps: f64, alpha: Complex64) -> f64 {
    let a2 = alpha.norm_sqr();
    (-a2).exp() * (1.0 - 0.5 * eps * s.u * (1.0 - a2) + eps.sqrt() * (s.x * alpha.re - s.y * alpha.im))
}

/// Outcome density `P(α)` with respect to `d²α / π`.
///
/// For physical states this equals the Kraus trace `tr(M_α ρ M_α†)` and is
/// non-negative; a negative value means the state or `ε` is invalid.
pub fn prob_alpha(s: &BlochState, eps: f64, alpha: Complex64) -> Result<f64> {
    check_strength(eps)?;
    let p = density_unchecked(s, eps, alpha);
    if p < -PHYSICAL_TOL {
        return Err(Error::InvalidOutcome { density: p });
    }
    Ok(p.max(0.0))
}

/// Outcome density for finite efficiency, including outcomes recorded while the
/// emitted photon was lost. It has the same form as [`prob_alpha`] with `ε → ηε`.
pub fn outcome_density(s: &BlochState, p: &MeasurementParams, alpha: Complex64) -> Result<f64> {
    prob_alpha(s, p.eta * p.epsilon(), alpha)
}

/// Norm of the outcome density restricted to no-loss events,
/// `1 − (u/2) ε (1 − η)`.
pub fn no_loss_norm(s: &BlochState, p: &MeasurementParams) -> f64 {
    1.0 - 0.5 * s.u * p.epsilon() * (1.0 - p.eta)
}

/// Measurement operator `M_α` in the `{|e⟩, |g⟩}` basis for a detector of
/// efficiency `eta` (`eta = 1` gives the lossless operator).
pub fn kraus_operator(alpha: Complex64, eps: f64, eta: f64) -> Matrix2<Complex64> {
    let env = (-0.5 * alpha.norm_sqr()).exp();
    Matrix2::new(
        Complex64::new((1.0 - eps).sqrt() * env, 0.0),
        Complex64::new(0.0, 0.0),
        alpha.conj() * (eta * eps).sqrt() * env,
        Complex64::new(env, 0.0),
    )
}

/// Log-density of the quadrature currents over one step, to first order in δt.
pub fn logp_quadratures(s: &BlochState, p: &MeasurementParams, i: f64, q: f64) -> f64 {
    let z = p.zeta();
    -0.5 * p.dt * (i * i - 2.0 * z * s.x * i + q * q - 2.0 * z * s.y * q + p.eta * p.gamma1 * s.u)
}

/// Draws `(I, Q)` from the short-time Gaussian: means `ζx`, `ζy`, variances `1/δt`.
pub fn sample_quadratures<R: Rng + ?Sized>(s: &BlochState, p: &MeasurementParams, rng: &mut R) -> QuadratureSample {
    let sd = (1.0 / p.dt).sqrt();
    let z = p.zeta();
    let ni: f64 = rng.sample(StandardNormal);
    let nq: f64 = rng.sample(StandardNormal);
    QuadratureSample { i: z * s.x + sd * ni, q: z * s.y + sd * nq }
}

/// Draws `α` exactly from the density `P(α)` of [`prob_alpha`] with strength `eps`.
///
/// The density splits into a vacuum Gaussian of weight
/// `1 − εu/2 − (x² + y²)/(2u)` plus `(εu/2) e^{−|α|²} |α + v|²` with
/// `v = (x − i y)^* / (√ε u)`; the second part is drawn by rejection from
/// `e^{−|α|²}(|α|² + |v|²)`, which bounds it up to a factor two.
pub fn sample_alpha<R: Rng + ?Sized>(s: &BlochState, eps: f64, rng: &mut R) -> Complex64 {
    let gauss = Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).unwrap();
    let vacuum = |rng: &mut R| Complex64::new(gauss.sample(rng), gauss.sample(rng));
    let k = eps;
    if k <= 0.0 || s.u <= 1e-300 {
        return vacuum(rng);
    }
    let w_vac = (1.0 - 0.5 * k * s.u - (s.x * s.x + s.y * s.y) / (2.0 * s.u)).clamp(0.0, 1.0);
    if rng.random::<f64>() < w_vac {
        return vacuum(rng);
    }
    let v = Complex64::new(s.x, -s.y) / (k.sqrt() * s.u);
    let v2 = v.norm_sqr();
    let radial = Gamma::new(2.0, 1.0).unwrap();
    loop {
        let cand = if rng.random::<f64>() < 1.0 / (1.0 + v2) {
            let r: f64 = radial.sample(rng);
            let r = r.sqrt();
            let phi = rng.random::<f64>() * std::f64::consts::TAU;
            Complex64::from_polar(r, phi)
        } else {
            vacuum(rng)
        };
        let accept = (cand + v).norm_sqr() / (2.0 * (cand.norm_sqr() + v2));
        if rng.random::<f64>() < accept {
            return cand;
        }
    }
}

/// Conditional state after outcome `α` for an ideal detector.
pub fn kraus_update(s: &BlochState, alpha: Complex64, eps: f64) -> Result<BlochState> {
    lossy_kraus_update(s, alpha, eps, 1.0)
}

fn lossy_kraus_update(s: &BlochState, alpha: Complex64, eps: f64, eta: f64) -> Result<BlochState> {
    check_strength(eps)?;
    let k = eta * eps;
    let p = density_unchecked(s, k, alpha);
    if !(p > 0.0) {
        return Err(Error::InvalidOutcome { density: p });
    }
    let w = (-alpha.norm_sqr()).exp() / p;
    let c = (1.0 - eps).sqrt();
    let sk = k.sqrt();
    Ok(BlochState::new(s.u * (1.0 - eps) * w, c * (s.x + sk * s.u * alpha.re) * w, c * (s.y - sk * s.u * alpha.im) * w))
}

/// One exact step with finite efficiency and pure dephasing.
///
/// The measurement map averages over loss events (the lost branch leaves the
/// meter in vacuum and the qubit in `|g⟩`); the phase-flip channel of
/// strength `γφ δt` is applied afterwards.
pub fn update_with_loss_dephasing(s: &BlochState, p: &MeasurementParams, alpha: Complex64) -> Result<BlochState> {
    let next = lossy_kraus_update(s, alpha, p.epsilon(), p.eta)?;
    let f = p.dephasing_factor();
    Ok(BlochState::new(next.u, next.x * f, next.y * f))
}

/// Whether outcome `α` raises the excitation, i.e. `u' > u`.
pub fn energy_gain_predicate(s: &BlochState, alpha: Complex64, eps: f64) -> bool {
    if eps <= 0.0 || s.u <= 0.0 {
        return false;
    }
    0.5 * s.u * (1.0 - alpha.norm_sqr()) - (s.x * alpha.re - s.y * alpha.im) / eps.sqrt() > 1.0
}

/// Pure-state update when a photon counter registers no click.
pub fn no_click_update(a: Complex64, b: Complex64, eps: f64) -> (Complex64, Complex64) {
    let keep = (1.0 - eps).sqrt();
    let norm = (a.norm_sqr() * (1.0 - eps) + b.norm_sqr()).sqrt();
    (a * keep / norm, b / norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::AlphaGrid;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_state(rng: &mut impl Rng) -> BlochState {
        loop {
            let s = BlochState::new(rng.random_range(0.0..2.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            if s.is_physical() {
                return s;
            }
        }
    }

    #[test]
    fn params_validation() {
        assert!(MeasurementParams::new(1.0, 0.0, 1.0, 0.01).is_ok());
        assert!(MeasurementParams::new(0.0, 0.0, 1.0, 0.01).is_err());
        assert!(MeasurementParams::new(1.0, -0.1, 1.0, 0.01).is_err());
        assert!(MeasurementParams::new(1.0, 0.0, 1.2, 0.01).is_err());
        assert!(MeasurementParams::new(1.0, 0.0, 1.0, 0.5).is_err());
        let p = MeasurementParams::new(2.0, 0.3, 0.5, 0.01).unwrap();
        assert_abs_diff_eq!(p.epsilon(), 0.02);
        assert_abs_diff_eq!(p.zeta(), 0.5f64.sqrt());
        assert_abs_diff_eq!(p.gamma2(), 1.3);
    }

    #[test]
    fn quadrature_rescaling_round_trip() {
        let a = Complex64::new(0.3, -0.7);
        let s = QuadratureSample::from_alpha(a, 0.02);
        assert_abs_diff_eq!(s.i, 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.q, 7.0, epsilon = 1e-12);
        let b = s.to_alpha(0.02);
        assert_abs_diff_eq!((a - b).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn prob_alpha_examples() {
        let a = Complex64::new(0.4, 0.9);
        let vac = (-a.norm_sqr()).exp();
        assert_abs_diff_eq!(prob_alpha(&BlochState::GROUND, 0.05, a).unwrap(), vac, epsilon = 1e-15);
        assert_abs_diff_eq!(prob_alpha(&BlochState::new(1.0, 1.0, 0.0), 0.0, a).unwrap(), vac, epsilon = 1e-15);
        let eps = 0.03;
        assert_abs_diff_eq!(
            prob_alpha(&BlochState::EXCITED, eps, a).unwrap(),
            vac * (1.0 - eps * (1.0 - a.norm_sqr())),
            epsilon = 1e-15
        );
        assert!(prob_alpha(&BlochState::GROUND, 1.0, a).is_err());
        // Outside the Bloch ball the density can turn negative.
        let bad = BlochState::new(1.0, 50.0, 0.0);
        assert!(prob_alpha(&bad, 0.05, Complex64::new(-1.0, 0.0)).is_err());
    }

    #[test]
    fn prob_alpha_matches_kraus_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let s = random_state(&mut rng);
            let eps = rng.random_range(0.0..0.5);
            let eta = rng.random_range(0.0..1.0);
            let a = Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let rho = s.to_density().unwrap().0;
            let m = kraus_operator(a, eps, eta);
            let lost = (1.0 - eta) * eps * (-a.norm_sqr()).exp() * 0.5 * s.u;
            let tr = (m * rho * m.adjoint()).trace().re + lost;
            assert_abs_diff_eq!(prob_alpha(&s, eta * eps, a).unwrap(), tr, epsilon = 1e-13);
        }
    }

    #[test]
    fn povm_completeness_and_normalization_by_quadrature() {
        let grid = AlphaGrid::default();
        for &eps in &[0.01, 0.05, 0.1] {
            for (r, c) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                let entry: Complex64 = grid.integrate(|a| {
                    let m = kraus_operator(a, eps, 1.0);
                    (m.adjoint() * m)[(r, c)]
                });
                let target = if r == c { 1.0 } else { 0.0 };
                assert!((entry - target).norm() < 1e-4, "eps={eps} ({r},{c})");
            }
            for s in [BlochState::new(1.0, 1.0, 0.0), BlochState::EXCITED, BlochState::new(0.5, 0.3, -0.6)] {
                let total: f64 = grid.integrate(|a| prob_alpha(&s, eps, a).unwrap());
                assert_abs_diff_eq!(total, 1.0, epsilon = 1e-4);
            }
        }
    }

    #[test]
    fn average_update_decays_excitation() {
        let grid = AlphaGrid::default();
        let eps = 0.05;
        let s = BlochState::new(1.3, 0.4, 0.5);
        let mean_u: f64 = grid.integrate(|a| {
            let p = prob_alpha(&s, eps, a).unwrap();
            if p > 0.0 {
                kraus_update(&s, a, eps).unwrap().u * p
            } else {
                0.0
            }
        });
        assert_abs_diff_eq!(mean_u, s.u * (1.0 - eps), epsilon = 1e-4);
    }

    #[test]
    fn no_loss_norm_by_quadrature() {
        let grid = AlphaGrid::default();
        let p = MeasurementParams::new(1.0, 0.0, 0.3, 0.05).unwrap();
        let s = BlochState::new(1.5, 0.2, 0.4);
        let rho = s.to_density().unwrap().0;
        let norm: f64 = grid.integrate(|a| {
            let m = kraus_operator(a, p.epsilon(), p.eta);
            (m * rho * m.adjoint()).trace().re
        });
        assert_abs_diff_eq!(norm, no_loss_norm(&s, &p), epsilon = 1e-4);
        assert_abs_diff_eq!(no_loss_norm(&s, &p), 1.0 - 0.75 * 0.05 * 0.7, epsilon = 1e-15);
    }

    #[test]
    fn logp_examples() {
        let p = MeasurementParams::ideal(1.0, 0.01).unwrap();
        assert_abs_diff_eq!(logp_quadratures(&BlochState::GROUND, &p, 2.0, -3.0), -0.005 * 13.0, epsilon = 1e-15);
        // Maximum over I sits at √(γ1/2) x.
        let s = BlochState::new(1.0, 0.8, 0.0);
        let best = (0.5f64).sqrt() * 0.8;
        let f = |i: f64| logp_quadratures(&s, &p, i, 0.0);
        assert!(f(best) > f(best + 1e-3) && f(best) > f(best - 1e-3));
    }

    #[test]
    fn gaussian_sampler_moments() {
        let p = MeasurementParams::ideal(1.0, 0.01).unwrap();
        let s = BlochState::new(1.0, 1.0, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 200_000;
        let draws: Vec<_> = (0..n).map(|_| sample_quadratures(&s, &p, &mut rng)).collect();
        let mi = draws.iter().map(|d| d.i).sum::<f64>() / n as f64;
        let mq = draws.iter().map(|d| d.q).sum::<f64>() / n as f64;
        let vi = draws.iter().map(|d| (d.i - mi).powi(2)).sum::<f64>() / n as f64;
        let cov = draws.iter().map(|d| (d.i - mi) * (d.q - mq)).sum::<f64>() / n as f64;
        let se = (100.0 / n as f64).sqrt();
        assert!((mi - 0.5f64.sqrt()).abs() < 3.0 * se);
        assert!(mq.abs() < 3.0 * se);
        assert!((vi - 100.0).abs() < 3.0 * 100.0 * (2.0 / n as f64).sqrt());
        assert!(cov.abs() < 3.0 * 100.0 / (n as f64).sqrt());
    }

    #[test]
    fn exact_sampler_matches_density_moments() {
        // E[Re α] = √ε x / 2, E[Im α] = −√ε y / 2, E|α|² = 1 + ε u / 2.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let eps = 0.08;
        for s in [BlochState::new(1.0, 1.0, 0.0), BlochState::new(0.7, -0.3, 0.6), BlochState::EXCITED] {
            let n = 400_000;
            let draws: Vec<_> = (0..n).map(|_| sample_alpha(&s, eps, &mut rng)).collect();
            let re: Vec<f64> = draws.iter().map(|a| a.re).collect();
            let im: Vec<f64> = draws.iter().map(|a| a.im).collect();
            let n2: Vec<f64> = draws.iter().map(|a| a.norm_sqr()).collect();
            let (m_re, se_re) = crate::numerics::mean_and_stderr(&re).unwrap();
            let (m_im, se_im) = crate::numerics::mean_and_stderr(&im).unwrap();
            let (m_n2, se_n2) = crate::numerics::mean_and_stderr(&n2).unwrap();
            assert!((m_re - eps.sqrt() * s.x / 2.0).abs() < 4.0 * se_re, "{s:?}");
            assert!((m_im + eps.sqrt() * s.y / 2.0).abs() < 4.0 * se_im, "{s:?}");
            assert!((m_n2 - 1.0 - eps * s.u / 2.0).abs() < 4.0 * se_n2, "{s:?}");
        }
    }

    #[test]
    fn kraus_update_examples() {
        let a = Complex64::new(0.3, -0.2);
        let s = BlochState::new(1.2, 0.5, 0.4);
        assert_eq!(kraus_update(&s, a, 0.0).unwrap(), s);
        assert_eq!(kraus_update(&BlochState::GROUND, a, 0.05).unwrap(), BlochState::GROUND);
        let out = kraus_update(&BlochState::new(1.0, 1.0, 0.0), Complex64::new(0.0, 0.0), 0.01).unwrap();
        assert_abs_diff_eq!(out.u, 0.99 / 0.995, epsilon = 1e-14);
        assert_abs_diff_eq!(out.x, 0.99f64.sqrt() / 0.995, epsilon = 1e-14);
        assert_abs_diff_eq!(out.y, 0.0);
    }

    #[test]
    fn kraus_update_preserves_purity() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut s = BlochState::new(1.0, 0.6, 0.8);
        for _ in 0..10_000 {
            let a = Complex64::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
            s = kraus_update(&s, a, 0.02).unwrap();
            assert!(s.purity_defect().abs() <= 1e-10);
        }
    }

    #[test]
    fn energy_gain_predicate_agrees_with_update() {
        assert!(!energy_gain_predicate(&BlochState::EXCITED, Complex64::new(0.0, 0.0), 0.05));
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut checked = 0;
        for _ in 0..100_000 {
            let s = random_state(&mut rng);
            let eps = rng.random_range(1e-4..0.5);
            let a = Complex64::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
            assert!(!energy_gain_predicate(&BlochState::GROUND, a, eps));
            let next = kraus_update(&s, a, eps).unwrap();
            let margin = (next.u - s.u).abs();
            if margin < 1e-9 {
                continue;
            }
            checked += 1;
            assert_eq!(energy_gain_predicate(&s, a, eps), next.u > s.u, "{s:?} {a} {eps}");
        }
        assert!(checked > 90_000);
    }

    #[test]
    fn lossless_limit_reduces_to_kraus_update() {
        let p = MeasurementParams::ideal(1.0, 0.05).unwrap();
        let s = BlochState::new(0.8, 0.3, -0.5);
        let a = Complex64::new(-0.4, 1.1);
        let u1 = update_with_loss_dephasing(&s, &p, a).unwrap();
        let u2 = kraus_update(&s, a, p.epsilon()).unwrap();
        assert_eq!(u1, u2);
    }

    #[test]
    fn lossy_update_matches_kraus_map() {
        let p = MeasurementParams::new(1.0, 0.4, 0.35, 0.05).unwrap();
        let s = BlochState::new(1.4, -0.2, 0.5);
        let a = Complex64::new(0.7, 0.2);
        let rho = s.to_density().unwrap().0;
        let m = kraus_operator(a, p.epsilon(), p.eta);
        let mut out = m * rho * m.adjoint();
        out[(1, 1)] += Complex64::new((1.0 - p.eta) * p.epsilon() * (-a.norm_sqr()).exp() * rho[(0, 0)].re, 0.0);
        let tr = out.trace();
        out /= tr;
        let f = p.dephasing_factor();
        let expected = BlochState::new(2.0 * out[(0, 0)].re, 2.0 * out[(0, 1)].re * f, -2.0 * out[(0, 1)].im * f);
        let got = update_with_loss_dephasing(&s, &p, a).unwrap();
        assert_abs_diff_eq!(got.u, expected.u, epsilon = 1e-14);
        assert_abs_diff_eq!(got.x, expected.x, epsilon = 1e-14);
        assert_abs_diff_eq!(got.y, expected.y, epsilon = 1e-14);
    }

    #[test]
    fn no_click_update_never_raises_excitation() {
        let (a, b) = no_click_update(Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), 0.1);
        assert_eq!(a.norm(), 0.0);
        assert_abs_diff_eq!(b.norm(), 1.0);
        let (a, _) = no_click_update(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), 0.1);
        assert_abs_diff_eq!(a.norm(), 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let th: f64 = rng.random_range(0.01..1.56);
            let ph = rng.random_range(0.0..std::f64::consts::TAU);
            let a = Complex64::from_polar(th.cos(), ph);
            let b = Complex64::new(th.sin(), 0.0);
            let eps = rng.random_range(1e-6..0.99);
            let (a2, b2) = no_click_update(a, b, eps);
            assert!(a2.norm_sqr() < a.norm_sqr());
            assert_abs_diff_eq!(a2.norm_sqr() + b2.norm_sqr(), 1.0, epsilon = 1e-12);
        }
    }
}
