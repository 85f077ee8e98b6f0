//! Leading-order covariance functions of the monitored qubit and Monte Carlo
//! estimators to compare them with.
//!
//! `Cov[a(t1) b(t2)] = ⟨a(t1) b(t2)⟩ − ⟨a(t1)⟩⟨b(t2)⟩` throughout.

mod empirical;

pub use empirical::{compare, empirical_cov, empirical_grid, Comparison, EmpiricalGrid};

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::bloch::BlochState;
use crate::error::{Error, Result};
use crate::measurement::MeasurementParams;

/// Quantities whose correlations can be requested.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variable {
    #[serde(rename = "u")]
    U,
    #[serde(rename = "x")]
    X,
    #[serde(rename = "y")]
    Y,
    #[serde(rename = "xi_I")]
    XiI,
    #[serde(rename = "xi_Q")]
    XiQ,
    #[serde(rename = "I")]
    I,
    #[serde(rename = "Q")]
    Q,
}

impl Variable {
    pub const STATE: [Variable; 3] = [Variable::U, Variable::X, Variable::Y];
    pub const NOISE: [Variable; 2] = [Variable::XiI, Variable::XiQ];

    pub fn name(self) -> &'static str {
        match self {
            Variable::U => "u",
            Variable::X => "x",
            Variable::Y => "y",
            Variable::XiI => "xi_I",
            Variable::XiQ => "xi_Q",
            Variable::I => "I",
            Variable::Q => "Q",
        }
    }

    /// Whether the variable is defined on steps rather than grid points.
    pub fn per_step(self) -> bool {
        matches!(self, Variable::XiI | Variable::XiQ | Variable::I | Variable::Q)
    }

    fn decompose(self, zeta: f64) -> Vec<(Variable, f64)> {
        match self {
            Variable::I => vec![(Variable::X, zeta), (Variable::XiI, 1.0)],
            Variable::Q => vec![(Variable::Y, zeta), (Variable::XiQ, 1.0)],
            v => vec![(v, 1.0)],
        }
    }
}

impl std::str::FromStr for Variable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "u" => Variable::U,
            "x" => Variable::X,
            "y" => Variable::Y,
            "xi_I" => Variable::XiI,
            "xi_Q" => Variable::XiQ,
            "I" => Variable::I,
            "Q" => Variable::Q,
            other => return Err(Error::Parse(format!("unknown variable {other:?}"))),
        })
    }
}

/// Causal propagator `Θ(t − t') e^{−γ (t − t')}` with `Θ(0) = 0`; `γ1` for `u`,
/// `γ2` for `x` and `y`.
pub fn green_state(var: Variable, t: f64, t_prime: f64, p: &MeasurementParams) -> Result<f64> {
    let rate = match var {
        Variable::U => p.gamma1,
        Variable::X | Variable::Y => p.gamma2(),
        other => return Err(Error::InvalidParams(format!("{} has no state propagator", other.name()))),
    };
    Ok(if t > t_prime { (-rate * (t - t_prime)).exp() } else { 0.0 })
}

fn swap_xy(s: &BlochState) -> BlochState {
    BlochState::new(s.u, s.y, s.x)
}

pub fn cov_uu(t1: f64, t2: f64, s0: &BlochState, p: &MeasurementParams) -> f64 {
    let m = t1.min(t2);
    let g2 = p.gamma2();
    let z2 = p.zeta().powi(2);
    z2 * s0.u * s0.u * (s0.x * s0.x + s0.y * s0.y) / (2.0 * g2) * (-p.gamma1 * (t1 + t2)).exp() * (1.0 - (-2.0 * g2 * m).exp())
}

/// `(1 − e^{−2δm}) / (2δ)`, continuous through `δ = 0`.
fn relaxed_window(delta: f64, m: f64, gamma1: f64) -> f64 {
    if delta.abs() < 1e-8 * gamma1 {
        m - delta * m * m
    } else {
        -(-2.0 * delta * m).exp_m1() / (2.0 * delta)
    }
}

pub fn cov_xx(t1: f64, t2: f64, s0: &BlochState, p: &MeasurementParams) -> f64 {
    let m = t1.min(t2);
    let g1 = p.gamma1;
    let g2 = p.gamma2();
    let (u0, x0, y0) = (s0.u, s0.x, s0.y);
    let bracket = u0 * u0 * relaxed_window(g1 - g2, m, g1) - 2.0 * u0 * x0 * x0 * (-(-g1 * m).exp_m1()) / g1
        + x0 * x0 * (x0 * x0 + y0 * y0) * (-(-2.0 * g2 * m).exp_m1()) / (2.0 * g2);
    p.zeta().powi(2) * (-g2 * (t1 + t2)).exp() * bracket
}

pub fn cov_yy(t1: f64, t2: f64, s0: &BlochState, p: &MeasurementParams) -> f64 {
    cov_xx(t1, t2, &swap_xy(s0), p)
}

pub fn cov_xy(t1: f64, t2: f64, s0: &BlochState, p: &MeasurementParams) -> f64 {
    let m = t1.min(t2);
    let g1 = p.gamma1;
    let g2 = p.gamma2();
    let (u0, x0, y0) = (s0.u, s0.x, s0.y);
    p.zeta().powi(2)
        * (-g2 * (t1 + t2)).exp()
        * (x0 * y0 * (x0 * x0 + y0 * y0) * (-(-2.0 * g2 * m).exp_m1()) / (2.0 * g2)
            - 2.0 * u0 * x0 * y0 * (-(-g1 * m).exp_m1()) / g1)
}

/// `Cov[u(t1) x(t2)]`.
pub fn cov_ux(t1: f64, t2: f64, s0: &BlochState, p: &MeasurementParams) -> f64 {
    let m = t1.min(t2);
    let g1 = p.gamma1;
    let g2 = p.gamma2();
    let (u0, x0, y0) = (s0.u, s0.x, s0.y);
    p.zeta().powi(2)
        * (-g1 * t1 - g2 * t2).exp()
        * (u0 * x0 * (x0 * x0 + y0 * y0) * (-(-2.0 * g2 * m).exp_m1()) / (2.0 * g2) - u0 * u0 * x0 * (-(-g1 * m).exp_m1()) / g1)
}

/// `Cov[u(t1) y(t2)]`.
pub fn cov_uy(t1: f64, t2: f64, s0: &BlochState, p: &MeasurementParams) -> f64 {
    cov_ux(t1, t2, &swap_xy(s0), p)
}

/// `⟨r(t1) ξ(t2)⟩` at leading order; zero unless `t1 > t2`.
pub fn corr_state_noise(a: Variable, k: Variable, t1: f64, t2: f64, s0: &BlochState, p: &MeasurementParams) -> Result<f64> {
    if !Variable::STATE.contains(&a) || !Variable::NOISE.contains(&k) {
        return Err(Error::InvalidParams(format!("need a state and a noise variable, got {} and {}", a.name(), k.name())));
    }
    if t1 <= t2 {
        return Ok(0.0);
    }
    let z = p.zeta();
    let g1 = p.gamma1;
    let g2 = p.gamma2();
    let (u0, x0, y0) = (s0.u, s0.x, s0.y);
    let diag = |c: f64| z * u0 * (-g2 * t1 - (g1 - g2) * t2).exp() - z * c * c * (-g2 * (t1 + t2)).exp();
    let off = -z * x0 * y0 * (-g2 * (t1 + t2)).exp();
    Ok(match (a, k) {
        (Variable::U, Variable::XiI) => -z * x0 * u0 * (-g1 * t1 - g2 * t2).exp(),
        (Variable::U, Variable::XiQ) => -z * y0 * u0 * (-g1 * t1 - g2 * t2).exp(),
        (Variable::X, Variable::XiI) => diag(x0),
        (Variable::Y, Variable::XiQ) => diag(y0),
        _ => off,
    })
}

/// Next-order contribution to `⟨u(t1) ξ_I(t2)⟩` for `t1 > t2`.
pub fn corr_u_xi_i_higher_order(t1: f64, t2: f64, s0: &BlochState, p: &MeasurementParams) -> f64 {
    if t1 <= t2 {
        return 0.0;
    }
    let g2 = p.gamma2();
    -p.zeta().powi(3) * s0.u * s0.x.powi(3) * (-p.gamma1 * t1 - g2 * t2).exp() * (-(-2.0 * g2 * t2).exp_m1()) / (2.0 * g2)
}

fn basic_cov(a: Variable, b: Variable, t1: f64, t2: f64, s0: &BlochState, p: &MeasurementParams, dt: Option<f64>) -> Result<f64> {
    use Variable::*;
    Ok(match (a, b) {
        (U, U) => cov_uu(t1, t2, s0, p),
        (X, X) => cov_xx(t1, t2, s0, p),
        (Y, Y) => cov_yy(t1, t2, s0, p),
        (X, Y) | (Y, X) => cov_xy(t1, t2, s0, p),
        (U, X) => cov_ux(t1, t2, s0, p),
        (X, U) => cov_ux(t2, t1, s0, p),
        (U, Y) => cov_uy(t1, t2, s0, p),
        (Y, U) => cov_uy(t2, t1, s0, p),
        (U | X | Y, XiI | XiQ) => corr_state_noise(a, b, t1, t2, s0, p)?,
        (XiI | XiQ, U | X | Y) => corr_state_noise(b, a, t2, t1, s0, p)?,
        (XiI, XiI) | (XiQ, XiQ) => {
            if t1 != t2 {
                0.0
            } else {
                match dt {
                    Some(dt) => 1.0 / dt,
                    None => return Err(Error::InvalidParams("equal-time white-noise covariance needs a step size".into())),
                }
            }
        }
        (XiI, XiQ) | (XiQ, XiI) => 0.0,
        _ => unreachable!("composite variables are decomposed first"),
    })
}

/// Leading-order `Cov[a(t1) b(t2)]` for any pair, including readout currents
/// through `I = ζx + ξ_I`, `Q = ζy + ξ_Q`. With `dt` given, the white-noise
/// delta contributes `1/dt` at equal times.
pub fn analytic_cov(
    a: Variable,
    b: Variable,
    t1: f64,
    t2: f64,
    s0: &BlochState,
    p: &MeasurementParams,
    dt: Option<f64>,
) -> Result<f64> {
    let z = p.zeta();
    let mut total = 0.0;
    for (va, ca) in a.decompose(z) {
        for (vb, cb) in b.decompose(z) {
            total += ca * cb * basic_cov(va, vb, t1, t2, s0, p, dt)?;
        }
    }
    Ok(total)
}

/// A correlator evaluated on a square time grid: `values[i][j]` is the
/// covariance at `(t1, t2) = (times[i], times[j])`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovarianceGrid {
    pub a: Variable,
    pub b: Variable,
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub initial: BlochState,
    pub params: MeasurementParams,
}

/// Evaluates [`analytic_cov`] on `times × times`.
pub fn analytic_grid(a: Variable, b: Variable, times: &[f64], s0: &BlochState, p: &MeasurementParams) -> Result<CovarianceGrid> {
    let mut values = Vec::with_capacity(times.len());
    for &t1 in times {
        values.push(times.iter().map(|&t2| analytic_cov(a, b, t1, t2, s0, p, Some(p.dt))).collect::<Result<Vec<_>>>()?);
    }
    Ok(CovarianceGrid { a, b, times: times.to_vec(), values, initial: *s0, params: *p })
}

/// Metadata written next to a grid CSV.
#[derive(Debug, Clone, Serialize)]
pub struct GridMetadata<'a> {
    pub schema_version: u32,
    pub pair: [&'static str; 2],
    pub initial: BlochState,
    pub params: MeasurementParams,
    pub source: &'a str,
    pub n_trajectories: Option<usize>,
    pub scheme: Option<String>,
}

/// Writes a grid: a header row with the `t2` values, then one row per `t1`
/// starting with its time.
pub fn write_grid_csv<W: Write>(times: &[f64], values: &[Vec<f64>], mut w: W) -> Result<()> {
    write!(w, "t1\\t2")?;
    for t in times {
        write!(w, ",{t:.16e}")?;
    }
    writeln!(w)?;
    for (t1, row) in times.iter().zip(values) {
        write!(w, "{t1:.16e}")?;
        for v in row {
            write!(w, ",{v:.16e}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}
