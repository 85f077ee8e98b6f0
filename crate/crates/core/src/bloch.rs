//! Qubit states in modified Bloch coordinates.
//!
//! The excitation `u = 1 + z = 2 ρ_ee` replaces the usual `z` coordinate, so the
//! ground state is `(0, 0, 0)` and the excited state `(2, 0, 0)`. Matrices are
//! written in the `{|e⟩, |g⟩}` basis.

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance for Bloch-ball membership and density-matrix checks.
pub const PHYSICAL_TOL: f64 = 1e-9;

/// Qubit state `(u, x, y)` with `u = 1 + z`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BlochState {
    pub u: f64,
    pub x: f64,
    pub y: f64,
}

impl BlochState {
    pub const GROUND: BlochState = BlochState { u: 0.0, x: 0.0, y: 0.0 };
    pub const EXCITED: BlochState = BlochState { u: 2.0, x: 0.0, y: 0.0 };
    pub const MAXIMALLY_MIXED: BlochState = BlochState { u: 1.0, x: 0.0, y: 0.0 };

    pub const fn new(u: f64, x: f64, y: f64) -> Self {
        Self { u, x, y }
    }

    /// Builds a state and rejects it if it lies outside the Bloch ball.
    pub fn checked(u: f64, x: f64, y: f64) -> Result<Self> {
        let s = Self::new(u, x, y);
        s.validate()?;
        Ok(s)
    }

    /// Ordinary Bloch `z` coordinate.
    pub fn z(&self) -> f64 {
        self.u - 1.0
    }

    /// Squared Bloch-vector length `x² + y² + (1 − u)²`.
    pub fn radius_sq(&self) -> f64 {
        self.x * self.x + self.y * self.y + (1.0 - self.u) * (1.0 - self.u)
    }

    /// `1 − |r|²`; zero for pure states, one for the maximally mixed state.
    pub fn purity_defect(&self) -> f64 {
        1.0 - self.radius_sq()
    }

    pub fn is_physical(&self) -> bool {
        self.u.is_finite() && self.x.is_finite() && self.y.is_finite() && self.purity_defect() >= -PHYSICAL_TOL
    }

    pub fn validate(&self) -> Result<()> {
        if self.is_physical() {
            Ok(())
        } else {
            Err(Error::NonPhysical { u: self.u, x: self.x, y: self.y, violation: -self.purity_defect() })
        }
    }

    /// Trace distance between two qubit states: half the Euclidean distance of
    /// their Bloch vectors.
    pub fn trace_distance(&self, other: &BlochState) -> f64 {
        let du = self.u - other.u;
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        0.5 * (du * du + dx * dx + dy * dy).sqrt()
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.u, self.x, self.y]
    }

    pub fn from_array(r: [f64; 3]) -> Self {
        Self::new(r[0], r[1], r[2])
    }

    /// Scales the Bloch vector back onto the unit sphere if it overshoots.
    pub fn project_to_ball(&self) -> Self {
        let r2 = self.radius_sq();
        if r2 <= 1.0 {
            return *self;
        }
        let k = 1.0 / r2.sqrt();
        Self::new(1.0 + (self.u - 1.0) * k, self.x * k, self.y * k)
    }

    pub fn to_density(&self) -> Result<DensityMatrix2> {
        self.validate()?;
        let half = 0.5;
        let m = Matrix2::new(
            Complex64::new(self.u * half, 0.0),
            Complex64::new(self.x * half, -self.y * half),
            Complex64::new(self.x * half, self.y * half),
            Complex64::new(1.0 - self.u * half, 0.0),
        );
        Ok(DensityMatrix2(m))
    }
}

/// Converts a physical Bloch state to its density matrix.
pub fn to_density(s: &BlochState) -> Result<DensityMatrix2> {
    s.to_density()
}

/// Inverse of [`to_density`].
pub fn from_density(rho: &DensityMatrix2) -> Result<BlochState> {
    rho.to_bloch()
}

/// `1 − (x² + y² + (1 − u)²)`.
pub fn purity_defect(s: &BlochState) -> f64 {
    s.purity_defect()
}

/// 2×2 density matrix in the `{|e⟩, |g⟩}` basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix2(pub Matrix2<Complex64>);

impl DensityMatrix2 {
    pub fn new(m: Matrix2<Complex64>) -> Result<Self> {
        let rho = Self(m);
        rho.validate()?;
        Ok(rho)
    }

    pub fn matrix(&self) -> &Matrix2<Complex64> {
        &self.0
    }

    pub fn rho_ee(&self) -> Complex64 {
        self.0[(0, 0)]
    }

    pub fn rho_eg(&self) -> Complex64 {
        self.0[(0, 1)]
    }

    pub fn rho_ge(&self) -> Complex64 {
        self.0[(1, 0)]
    }

    pub fn rho_gg(&self) -> Complex64 {
        self.0[(1, 1)]
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let a = self.rho_ee().re;
        let d = self.rho_gg().re;
        let b = 0.5 * (self.rho_eg() + self.rho_ge().conj());
        let mean = 0.5 * (a + d);
        let half_gap = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
        [mean - half_gap, mean + half_gap]
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.0;
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidDensity("non-finite entry".into()));
        }
        let herm_err = (m[(0, 1)] - m[(1, 0)].conj()).norm().max(m[(0, 0)].im.abs()).max(m[(1, 1)].im.abs());
        if herm_err > PHYSICAL_TOL {
            return Err(Error::InvalidDensity(format!("not Hermitian (deviation {herm_err:e})")));
        }
        let tr = (m[(0, 0)] + m[(1, 1)]).re;
        if (tr - 1.0).abs() > PHYSICAL_TOL {
            return Err(Error::InvalidDensity(format!("trace {tr} != 1")));
        }
        let [lo, _] = self.eigenvalues();
        if lo < -PHYSICAL_TOL {
            return Err(Error::InvalidDensity(format!("negative eigenvalue {lo:e}")));
        }
        Ok(())
    }

    pub fn to_bloch(&self) -> Result<BlochState> {
        self.validate()?;
        let eg = self.rho_eg();
        Ok(BlochState::new(2.0 * self.rho_ee().re, 2.0 * eg.re, -2.0 * eg.im))
    }
}

/// Polar angle of a pure state on the x–z great circle, measured from the
/// excited state (`θ = 0`) towards the ground state (`θ = π`).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct PolarAngle(pub f64);

impl PolarAngle {
    pub fn to_state(self) -> BlochState {
        BlochState::new(1.0 + self.0.cos(), self.0.sin(), 0.0)
    }

    /// Angle of a state on the x–z circle (`y` is ignored).
    pub fn from_state(s: &BlochState) -> Self {
        PolarAngle(s.x.atan2(s.u - 1.0))
    }
}

impl From<PolarAngle> for BlochState {
    fn from(theta: PolarAngle) -> Self {
        theta.to_state()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn basis_states_map_to_diagonal_matrices() {
        let g = BlochState::GROUND.to_density().unwrap();
        assert_eq!(g.rho_ee().re, 0.0);
        assert_eq!(g.rho_gg().re, 1.0);
        let e = BlochState::EXCITED.to_density().unwrap();
        assert_eq!(e.rho_ee().re, 1.0);
        assert_eq!(e.rho_gg().re, 0.0);
    }

    #[test]
    fn x_state_has_all_entries_one_half() {
        let rho = BlochState::new(1.0, 1.0, 0.0).to_density().unwrap();
        for z in rho.matrix().iter() {
            assert_abs_diff_eq!(z.re, 0.5);
            assert_abs_diff_eq!(z.im, 0.0);
        }
    }

    #[test]
    fn from_density_of_known_matrices() {
        let mixed = DensityMatrix2::new(Matrix2::new(
            Complex64::new(0.5, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.5, 0.0),
        ))
        .unwrap();
        assert_eq!(mixed.to_bloch().unwrap(), BlochState::MAXIMALLY_MIXED);
        let ground = DensityMatrix2::new(Matrix2::new(
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
        ))
        .unwrap();
        assert_eq!(ground.to_bloch().unwrap(), BlochState::GROUND);
    }

    #[test]
    fn rejects_invalid_inputs() {
        assert!(BlochState::checked(1.0, 1.0, 0.1).is_err());
        assert!(BlochState::new(2.5, 0.0, 0.0).to_density().is_err());
        let non_herm = DensityMatrix2(Matrix2::new(
            Complex64::new(0.5, 0.0),
            Complex64::new(0.2, 0.0),
            Complex64::new(0.1, 0.0),
            Complex64::new(0.5, 0.0),
        ));
        assert!(non_herm.to_bloch().is_err());
        let bad_trace = DensityMatrix2(Matrix2::new(
            Complex64::new(0.6, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.6, 0.0),
        ));
        assert!(bad_trace.to_bloch().is_err());
    }

    #[test]
    fn purity_defect_examples() {
        assert_eq!(BlochState::EXCITED.purity_defect(), 0.0);
        assert_eq!(BlochState::MAXIMALLY_MIXED.purity_defect(), 1.0);
        for k in 0..=100 {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / 100.0;
            assert!(PolarAngle(theta).to_state().purity_defect().abs() < 1e-15);
        }
    }

    #[test]
    fn round_trip_over_random_density_matrices() {
        // Random valid ρ = A A† / tr(A A†).
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let mut a = Matrix2::<Complex64>::zeros();
            for z in a.iter_mut() {
                *z = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            }
            let m = a * a.adjoint();
            let tr = m.trace();
            let rho = DensityMatrix2::new(m / tr).unwrap();
            let back = rho.to_bloch().unwrap().to_density().unwrap();
            assert!((back.0 - rho.0).norm() < 1e-12);
        }
    }

    #[test]
    fn polar_angle_round_trip() {
        for &t in &[0.1, 1.0, 2.5, 3.0, -1.2] {
            let s = PolarAngle(t).to_state();
            assert_abs_diff_eq!(PolarAngle::from_state(&s).0, t, epsilon = 1e-12);
        }
    }

    proptest! {
        #[test]
        fn bloch_density_round_trip(r in 0.0..1.0f64, th in 0.0..std::f64::consts::PI, ph in 0.0..6.3f64) {
            let s = BlochState::new(1.0 + r * th.cos(), r * th.sin() * ph.cos(), r * th.sin() * ph.sin());
            let back = s.to_density().unwrap().to_bloch().unwrap();
            prop_assert!((back.u - s.u).abs() < 1e-12);
            prop_assert!((back.x - s.x).abs() < 1e-12);
            prop_assert!((back.y - s.y).abs() < 1e-12);
        }
    }
}
