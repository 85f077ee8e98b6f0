use num_complex::Complex64;

use super::{AdjointState, CMatrix, Channel, OperatorSet};
use crate::error::{Error, Result};

/// Heterodyne-monitored fluorescence as a three-channel master equation:
/// `L₁ = √(γ1/2) σ₋`, `L₂ = i L₁` (the two quadratures, efficiency `η`) and an
/// unmonitored dephasing channel `L₃ = √(γφ/2) σz` (zero when `γφ = 0`).
pub fn fluorescence_operator_set(gamma1: f64, gamma_phi: f64, eta: f64) -> Result<OperatorSet> {
    if !(gamma1 > 0.0) || !(gamma_phi >= 0.0) || !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidParams(format!("invalid rates gamma1={gamma1}, gamma_phi={gamma_phi}, eta={eta}")));
    }
    let zero = Complex64::new(0.0, 0.0);
    let a = Complex64::new((gamma1 / 2.0).sqrt(), 0.0);
    let lower = CMatrix::from_row_slice(2, 2, &[zero, zero, a, zero]);
    let d = Complex64::new((gamma_phi / 2.0).sqrt(), 0.0);
    let dephase = CMatrix::from_row_slice(2, 2, &[d, zero, zero, -d]);
    OperatorSet::new(
        CMatrix::zeros(2, 2),
        vec![
            Channel { operator: lower.clone(), eta },
            Channel { operator: lower * Complex64::i(), eta },
            Channel { operator: dephase, eta: 0.0 },
        ],
    )
}

/// The traceless `ξ` with `tr(ξ ρ̇) = p_u u̇ + p_x ẋ + p_y ẏ`.
pub fn adjoint_from_momenta(p: [f64; 3]) -> AdjointState {
    let [pu, px, py] = p;
    AdjointState(CMatrix::from_row_slice(
        2,
        2,
        &[Complex64::new(pu, 0.0), Complex64::new(px, -py), Complex64::new(px, py), Complex64::new(-pu, 0.0)],
    ))
}

/// Inverse of [`adjoint_from_momenta`]; the trace part of `ξ` is a gauge and is dropped.
pub fn momenta_from_adjoint(xi: &AdjointState) -> [f64; 3] {
    let m = &xi.0;
    [0.5 * (m[(0, 0)].re - m[(1, 1)].re), m[(0, 1)].re, -m[(0, 1)].im]
}
