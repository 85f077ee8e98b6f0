//! Diffusive stochastic master equations for an `n`-level system with `m`
//! monitored channels, stepped with the positivity-preserving normalised
//! Kraus scheme, together with the first-order superoperators, the stochastic
//! Hamiltonian and the adjoint (most-likely-path) equations.

mod fluorescence;

pub use fluorescence::{adjoint_from_momenta, fluorescence_operator_set, momenta_from_adjoint};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::bloch::{BlochState, PHYSICAL_TOL};
use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c(0.5)
}

fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    (m - m.adjoint()).camax() <= tol
}

/// Real eigenvalues and eigenvectors of a Hermitian matrix.
fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = hermitian_part(m).symmetric_eigen();
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

fn hermitian_function(m: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let (vals, vecs) = hermitian_eigen(m);
    let n = vals.len();
    let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(n, vals.iter().map(|v| c(f(*v)))));
    &vecs * d * vecs.adjoint()
}

/// One monitored (or unmonitored, `eta = 0`) decoherence channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub operator: CMatrix,
    pub eta: f64,
}

/// Hamiltonian and channels of a diffusive master equation.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSet {
    pub hamiltonian: CMatrix,
    pub channels: Vec<Channel>,
}

impl OperatorSet {
    pub fn new(hamiltonian: CMatrix, channels: Vec<Channel>) -> Result<Self> {
        let set = Self { hamiltonian, channels };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.hamiltonian.nrows();
        if n == 0 || self.hamiltonian.ncols() != n {
            return Err(Error::InvalidParams("hamiltonian must be square and non-empty".into()));
        }
        if !is_hermitian(&self.hamiltonian, 1e-12) {
            return Err(Error::InvalidParams("hamiltonian is not Hermitian".into()));
        }
        for (k, ch) in self.channels.iter().enumerate() {
            if ch.operator.shape() != (n, n) {
                return Err(Error::InvalidParams(format!("channel {k} has shape {:?}, expected {n}x{n}", ch.operator.shape())));
            }
            if !(0.0..=1.0).contains(&ch.eta) {
                return Err(Error::InvalidParams(format!("channel {k} efficiency {} outside [0, 1]", ch.eta)));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.nrows()
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    /// `K = iH + Σ L†L / 2`.
    fn k_operator(&self) -> CMatrix {
        let mut k = &self.hamiltonian * Complex64::i();
        for ch in &self.channels {
            k += ch.operator.adjoint() * &ch.operator * c(0.5);
        }
        k
    }

    /// `Σ_ν ‖L_ν†L_ν‖` in the spectral norm.
    pub fn dissipation_scale(&self) -> f64 {
        self.channels
            .iter()
            .map(|ch| hermitian_eigen(&(ch.operator.adjoint() * &ch.operator)).0.into_iter().fold(0.0, f64::max))
            .sum()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelJson {
    operator: Vec<[f64; 2]>,
    eta: f64,
}

/// JSON form: complex matrices as row-major lists of `[re, im]` pairs.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OperatorSetJson {
    dim: usize,
    hamiltonian: Vec<[f64; 2]>,
    channels: Vec<ChannelJson>,
}

fn to_pairs(m: &CMatrix) -> Vec<[f64; 2]> {
    let n = m.nrows();
    (0..n * n)
        .map(|k| {
            let z = m[(k / n, k % n)];
            [z.re, z.im]
        })
        .collect()
}

fn from_pairs(n: usize, v: &[[f64; 2]]) -> std::result::Result<CMatrix, String> {
    if v.len() != n * n {
        return Err(format!("expected {} entries, found {}", n * n, v.len()));
    }
    Ok(CMatrix::from_row_iterator(n, n, v.iter().map(|[re, im]| Complex64::new(*re, *im))))
}

impl Serialize for OperatorSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        OperatorSetJson {
            dim: self.dim(),
            hamiltonian: to_pairs(&self.hamiltonian),
            channels: self.channels.iter().map(|ch| ChannelJson { operator: to_pairs(&ch.operator), eta: ch.eta }).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for OperatorSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = OperatorSetJson::deserialize(d)?;
        let h = from_pairs(raw.dim, &raw.hamiltonian).map_err(D::Error::custom)?;
        let channels = raw
            .channels
            .iter()
            .map(|ch| Ok(Channel { operator: from_pairs(raw.dim, &ch.operator)?, eta: ch.eta }))
            .collect::<std::result::Result<Vec<_>, String>>()
            .map_err(D::Error::custom)?;
        OperatorSet::new(h, channels).map_err(D::Error::custom)
    }
}

/// A density matrix of any dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralState(pub CMatrix);

impl GeneralState {
    pub fn new(rho: CMatrix) -> Result<Self> {
        let s = Self(rho);
        s.validate()?;
        Ok(s)
    }

    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        let v = nalgebra::DVector::from_column_slice(psi);
        let norm = v.norm();
        if norm == 0.0 {
            return Err(Error::InvalidDensity("zero state vector".into()));
        }
        let v = v / c(norm);
        Self::new(&v * v.adjoint())
    }

    pub fn validate(&self) -> Result<()> {
        let rho = &self.0;
        if rho.nrows() != rho.ncols() {
            return Err(Error::InvalidDensity("matrix is not square".into()));
        }
        if !is_hermitian(rho, 1e-10) {
            return Err(Error::InvalidDensity("matrix is not Hermitian".into()));
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
            return Err(Error::InvalidDensity(format!("trace {tr} differs from one")));
        }
        let min = self.min_eigenvalue();
        if min < -1e-10 {
            return Err(Error::InvalidDensity(format!("negative eigenvalue {min:e}")));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigen(&self.0).0.into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn from_bloch(s: &BlochState) -> Result<Self> {
        let m = s.to_density()?.0;
        Ok(Self(CMatrix::from_fn(2, 2, |i, j| m[(i, j)])))
    }

    /// Bloch coordinates of a qubit state (basis order `|e⟩, |g⟩`).
    pub fn to_bloch(&self) -> Result<BlochState> {
        if self.dim() != 2 {
            return Err(Error::InvalidDensity(format!("Bloch coordinates need a qubit, got dimension {}", self.dim())));
        }
        Ok(bloch_of(&self.0))
    }
}

/// Bloch coordinates of any 2×2 matrix (not necessarily a state).
pub fn bloch_of(m: &CMatrix) -> BlochState {
    BlochState::new(2.0 * m[(0, 0)].re, 2.0 * m[(0, 1)].re, -2.0 * m[(0, 1)].im)
}

/// Operator-valued conjugate of the density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjointState(pub CMatrix);

impl AdjointState {
    pub fn new(xi: CMatrix) -> Result<Self> {
        if !is_hermitian(&xi, 1e-12) {
            return Err(Error::InvalidParams("adjoint state must be Hermitian".into()));
        }
        Ok(Self(xi))
    }

    pub fn zeros(n: usize) -> Self {
        Self(CMatrix::zeros(n, n))
    }
}

/// Precomputed operators of the normalised Kraus step for fixed `dt`.
#[derive(Debug, Clone)]
pub struct RouchonStepper {
    ops: OperatorSet,
    dt: f64,
    /// `(I − K dt) R^{−1/2}`.
    a0: CMatrix,
    /// `√η_ν dt L̃_ν`, the coefficient of `r_ν` in `M̃_r`.
    b: Vec<CMatrix>,
    /// `L̃_ν = L_ν R^{−1/2}`.
    l_tilde: Vec<CMatrix>,
}

impl RouchonStepper {
    pub fn new(ops: &OperatorSet, dt: f64) -> Result<Self> {
        ops.validate()?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParams(format!("dt must be positive, got {dt}")));
        }
        let scale = ops.dissipation_scale() * dt;
        if scale > 0.1 {
            return Err(Error::InvalidParams(format!("dt * sum ||L'L|| = {scale} exceeds 0.1")));
        }
        let n = ops.dim();
        let k = ops.k_operator();
        let id = CMatrix::identity(n, n);
        let r = &id + k.adjoint() * &k * c(dt * dt);
        let (vals, _) = hermitian_eigen(&r);
        if vals.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::Singular("normalisation operator is not positive definite".into()));
        }
        let r_inv_sqrt = hermitian_function(&r, |v| 1.0 / v.sqrt());
        let a0 = (&id - &k * c(dt)) * &r_inv_sqrt;
        let l_tilde: Vec<CMatrix> = ops.channels.iter().map(|ch| &ch.operator * &r_inv_sqrt).collect();
        let b = ops.channels.iter().zip(&l_tilde).map(|(ch, lt)| lt * c(ch.eta.sqrt() * dt)).collect();
        Ok(Self { ops: ops.clone(), dt, a0, b, l_tilde })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn ops(&self) -> &OperatorSet {
        &self.ops
    }

    fn kraus(&self, r: &[f64]) -> CMatrix {
        let mut m = self.a0.clone();
        for (b, rv) in self.b.iter().zip(r) {
            m += b * c(*rv);
        }
        m
    }

    /// Unnormalised updated state `M̃_r ρ M̃_r† + Σ (1 − η_ν) L̃_ν ρ L̃_ν† dt`.
    fn numerator(&self, rho: &CMatrix, r: &[f64]) -> CMatrix {
        let m = self.kraus(r);
        let mut out = &m * rho * m.adjoint();
        for (ch, lt) in self.ops.channels.iter().zip(&self.l_tilde) {
            if ch.eta < 1.0 {
                out += lt * rho * lt.adjoint() * c((1.0 - ch.eta) * self.dt);
            }
        }
        out
    }

    pub fn step(&self, rho: &GeneralState, r: &[f64]) -> Result<GeneralState> {
        if r.len() != self.ops.n_channels() {
            return Err(Error::InvalidParams(format!("expected {} outcomes, got {}", self.ops.n_channels(), r.len())));
        }
        let num = self.numerator(&rho.0, r);
        let tr = num.trace().re;
        if !(tr > 0.0 && tr.is_finite()) {
            return Err(Error::IntegrationFailure { step: 0, reason: format!("non-positive trace {tr:e}") });
        }
        Ok(GeneralState(hermitian_part(&num) * c(1.0 / tr)))
    }

    /// Joint outcome density, `tr(numerator) · Π √(dt/2π) e^{−r²dt/2}`.
    pub fn outcome_density(&self, rho: &GeneralState, r: &[f64]) -> f64 {
        let gauss: f64 =
            r.iter().map(|rv| (self.dt / (2.0 * std::f64::consts::PI)).sqrt() * (-0.5 * rv * rv * self.dt).exp()).product();
        self.numerator(&rho.0, r).trace().re * gauss
    }

    /// Draws outcomes from the exact density.
    ///
    /// The density is a mixture over the eigen-decomposition of `ρ` plus the
    /// unmonitored part. Each pure component `‖a + Σ r_ν b_ν‖² Π φ(r_ν)` is
    /// drawn by rejection from `(‖a‖² + Σ r_ν² ‖b_ν‖²) Π φ(r_ν)`, which bounds it
    /// up to the factor `1 + m'` (`m'` = number of non-zero `b_ν`).
    pub fn sample_outcomes<R: Rng + ?Sized>(&self, rho: &GeneralState, rng: &mut R) -> Vec<f64> {
        let m = self.ops.n_channels();
        let sd = (1.0 / self.dt).sqrt();
        let gauss = |rng: &mut R| -> Vec<f64> { (0..m).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect() };
        let (vals, vecs) = hermitian_eigen(&rho.0);
        let mut weights = Vec::with_capacity(vals.len() + 1);
        let mut parts = Vec::with_capacity(vals.len());
        for (k, lam) in vals.iter().enumerate() {
            let lam = lam.max(0.0);
            let psi = vecs.column(k).into_owned();
            let a = &self.a0 * &psi;
            let b: Vec<_> = self.b.iter().map(|bm| bm * &psi).collect();
            let w = a.norm_squared() + b.iter().map(|v| v.norm_squared()).sum::<f64>() / self.dt;
            weights.push(lam * w);
            parts.push((a, b));
        }
        let mut lost = 0.0;
        for (ch, lt) in self.ops.channels.iter().zip(&self.l_tilde) {
            if ch.eta < 1.0 {
                lost += (1.0 - ch.eta) * self.dt * (lt * &rho.0 * lt.adjoint()).trace().re;
            }
        }
        weights.push(lost.max(0.0));
        let total: f64 = weights.iter().sum();
        let mut pick = rng.random::<f64>() * total;
        let mut chosen = weights.len() - 1;
        for (k, w) in weights.iter().enumerate() {
            if pick < *w {
                chosen = k;
                break;
            }
            pick -= w;
        }
        if chosen == parts.len() {
            return gauss(rng);
        }
        let (a, b) = &parts[chosen];
        let a2 = a.norm_squared();
        let b2: Vec<f64> = b.iter().map(|v| v.norm_squared()).collect();
        let active = b2.iter().filter(|v| **v > 0.0).count();
        let mut comp = Vec::with_capacity(m + 1);
        comp.push(a2);
        comp.extend(b2.iter().map(|v| v / self.dt));
        let comp_total: f64 = comp.iter().sum();
        loop {
            let mut r = gauss(rng);
            let mut pick = rng.random::<f64>() * comp_total;
            for (k, w) in comp.iter().enumerate() {
                if pick < *w {
                    if k > 0 {
                        // |r| √dt is Maxwell distributed for the r² φ(r) component.
                        let chi: f64 = (0..3).map(|_| rng.sample::<f64, _>(StandardNormal).powi(2)).sum::<f64>().sqrt();
                        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                        r[k - 1] = sign * chi * sd;
                    }
                    break;
                }
                pick -= w;
            }
            let mut v = a.clone();
            for (bv, rv) in b.iter().zip(&r) {
                v += bv * c(*rv);
            }
            let bound = (1 + active) as f64 * (a2 + b2.iter().zip(&r).map(|(w, rv)| w * rv * rv).sum::<f64>());
            if bound <= 0.0 || rng.random::<f64>() * bound < v.norm_squared() {
                return r;
            }
        }
    }
}

/// One normalised Kraus step with outcomes `r`.
pub fn rouchon_step(rho: &GeneralState, r: &[f64], dt: f64, ops: &OperatorSet) -> Result<GeneralState> {
    RouchonStepper::new(ops, dt)?.step(rho, r)
}

/// Exact outcome draw for one step.
pub fn sample_outcomes<R: Rng + ?Sized>(rho: &GeneralState, dt: f64, ops: &OperatorSet, rng: &mut R) -> Result<Vec<f64>> {
    Ok(RouchonStepper::new(ops, dt)?.sample_outcomes(rho, rng))
}

/// Short-time Gaussian draw: `r_ν ~ N(√η_ν tr((L_ν + L_ν†)ρ), 1/dt)`.
pub fn sample_outcomes_gaussian<R: Rng + ?Sized>(rho: &GeneralState, dt: f64, ops: &OperatorSet, rng: &mut R) -> Vec<f64> {
    let normal = Normal::new(0.0, (1.0 / dt).sqrt()).unwrap();
    mean_signal(rho, ops).into_iter().map(|m| m + normal.sample(rng)).collect()
}

/// `√η_ν tr((L_ν + L_ν†) ρ)` per channel.
pub fn mean_signal(rho: &GeneralState, ops: &OperatorSet) -> Vec<f64> {
    ops.channels.iter().map(|ch| ch.eta.sqrt() * two_re_tr(&ch.operator, &rho.0)).collect()
}

/// `tr(Lρ + ρL†) = 2 Re tr(Lρ)`.
fn two_re_tr(l: &CMatrix, rho: &CMatrix) -> f64 {
    2.0 * (l * rho).trace().re
}

/// Lindblad generator `−i[H, ρ] + Σ (LρL† − {L†L, ρ}/2)`.
pub fn lindblad(rho: &CMatrix, ops: &OperatorSet) -> CMatrix {
    let h = &ops.hamiltonian;
    let mut out = (h * rho - rho * h) * Complex64::new(0.0, -1.0);
    for ch in &ops.channels {
        let l = &ch.operator;
        let ld = l.adjoint();
        let ldl = &ld * l;
        out += l * rho * &ld - (&ldl * rho + rho * &ldl) * c(0.5);
    }
    out
}

/// Itô diffusion directions `√η_ν (Lρ + ρL† − tr(Lρ + ρL†) ρ)`.
pub fn ito_diffusion(rho: &CMatrix, ops: &OperatorSet) -> Vec<CMatrix> {
    ops.channels
        .iter()
        .map(|ch| {
            let l = &ch.operator;
            (l * rho + rho * l.adjoint() - rho * c(two_re_tr(l, rho))) * c(ch.eta.sqrt())
        })
        .collect()
}

/// First-order drift `𝓛(ρ, r)` of the discrete scheme at fixed outcomes.
pub fn drift_superop(rho: &GeneralState, r: &[f64], ops: &OperatorSet) -> CMatrix {
    let rho = &rho.0;
    let mut out = lindblad(rho, ops);
    for (ch, rv) in ops.channels.iter().zip(r) {
        let l = &ch.operator;
        let lrl = l * rho * l.adjoint();
        out += (rho * lrl.trace() - &lrl) * c(ch.eta);
        out += (l * rho + rho * l.adjoint() - rho * c(two_re_tr(l, rho))) * c(rv * ch.eta.sqrt());
    }
    out
}

/// `𝓕(ρ, r) / dt = Σ_ν (−r²/2 + r √η tr(Lρ + ρL†) − η tr(LρL†))`.
pub fn log_likelihood_rate(rho: &GeneralState, r: &[f64], ops: &OperatorSet) -> f64 {
    ops.channels
        .iter()
        .zip(r)
        .map(|(ch, rv)| {
            let l = &ch.operator;
            -0.5 * rv * rv + rv * ch.eta.sqrt() * two_re_tr(l, &rho.0) - ch.eta * (l * &rho.0 * l.adjoint()).trace().re
        })
        .sum()
}

/// First-order log-likelihood `𝓕(ρ, r)` of one step.
pub fn log_likelihood(rho: &GeneralState, r: &[f64], ops: &OperatorSet, dt: f64) -> f64 {
    log_likelihood_rate(rho, r, ops) * dt
}

/// `tr(ξ 𝓛(ρ, r)) + 𝓕(ρ, r)/dt`; boundary terms are left to the caller.
pub fn general_stochastic_hamiltonian(xi: &AdjointState, rho: &GeneralState, r: &[f64], ops: &OperatorSet) -> f64 {
    (&xi.0 * drift_superop(rho, r, ops)).trace().re + log_likelihood_rate(rho, r, ops)
}

/// Outcomes that make the Hamiltonian stationary.
pub fn stationary_readout(xi: &AdjointState, rho: &GeneralState, ops: &OperatorSet) -> Vec<f64> {
    let shift = (&xi.0 * &rho.0).trace().re - 1.0;
    ops.channels
        .iter()
        .map(|ch| {
            let l = &ch.operator;
            let sym = l * &rho.0 + &rho.0 * l.adjoint();
            ch.eta.sqrt() * ((&xi.0 * &sym).trace().re - sym.trace().re * shift)
        })
        .collect()
}

/// `dξ/dt = −∂H/∂ρ`.
pub fn adjoint_rhs(xi: &AdjointState, rho: &GeneralState, r: &[f64], ops: &OperatorSet) -> CMatrix {
    let x = &xi.0;
    let rho = &rho.0;
    let h = &ops.hamiltonian;
    let shift = (x * rho).trace().re - 1.0;
    let mut out = (h * x - x * h) * Complex64::new(0.0, -1.0);
    for (ch, rv) in ops.channels.iter().zip(r) {
        let l = &ch.operator;
        let ld = l.adjoint();
        let ldl = &ld * l;
        out -= &ld * x * l - (&ldl * x + x * &ldl) * c(0.5);
        let lrl = (l * rho * &ld).trace().re;
        out -= (x * c(lrl) + &ldl * c(shift) - &ld * x * l) * c(ch.eta);
        let sig = two_re_tr(l, rho);
        out -= (x * l + &ld * x - x * c(sig) - (l + &ld) * c(shift)) * c(rv * ch.eta.sqrt());
    }
    hermitian_part(&out)
}

/// Coupled most-likely-path flow `(ρ̇, ξ̇)` with the outcomes at their optimum.
pub fn mlp_flow(xi: &AdjointState, rho: &GeneralState, ops: &OperatorSet) -> (CMatrix, CMatrix) {
    let r = stationary_readout(xi, rho, ops);
    (drift_superop(rho, &r, ops), adjoint_rhs(xi, rho, &r, ops))
}

/// Expected one-step increment of a linear functional, `(E[ρ'] − ρ) / dt`,
/// which for the normalised Kraus scheme equals `(A₀ρA₀† + dt Σ L̃ρL̃† − ρ)/dt`.
pub fn discrete_generator_linear(rho: &GeneralState, stepper: &RouchonStepper) -> CMatrix {
    let a0 = &stepper.a0;
    let mut e = a0 * &rho.0 * a0.adjoint();
    for lt in &stepper.l_tilde {
        e += lt * &rho.0 * lt.adjoint() * c(stepper.dt);
    }
    (e - &rho.0) * c(1.0 / stepper.dt)
}

/// Gauss–Hermite nodes and weights for `∫ f(x) e^{−x²} dx`.
pub fn gauss_hermite(k: usize) -> (Vec<f64>, Vec<f64>) {
    let jac = DMatrix::<f64>::from_fn(k, k, |i, j| if i + 1 == j || j + 1 == i { (i.max(j) as f64 / 2.0).sqrt() } else { 0.0 });
    let eig = jac.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> =
        (0..k).map(|i| (eig.eigenvalues[i], std::f64::consts::PI.sqrt() * eig.eigenvectors[(0, i)].powi(2))).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// `E[(f(ρ') − f(ρ)) / dt]` for the discrete scheme by tensor Gauss–Hermite
/// quadrature over the outcomes (`nodes` points per channel).
pub fn discrete_generator<F: Fn(&CMatrix) -> f64>(f: F, rho: &GeneralState, stepper: &RouchonStepper, nodes: usize) -> f64 {
    let (x, w) = gauss_hermite(nodes);
    let m = stepper.ops.n_channels();
    let scale = (2.0 / stepper.dt).sqrt();
    let f0 = f(&rho.0);
    let mut total = 0.0;
    let mut idx = vec![0usize; m];
    loop {
        let r: Vec<f64> = idx.iter().map(|&i| scale * x[i]).collect();
        let weight: f64 = idx.iter().map(|&i| w[i] / std::f64::consts::PI.sqrt()).product();
        let num = stepper.numerator(&rho.0, &r);
        let tr = num.trace().re;
        total += weight * tr * (f(&(num * c(1.0 / tr))) - f0);
        let mut k = 0;
        while k < m {
            idx[k] += 1;
            if idx[k] < nodes {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == m {
            break;
        }
    }
    total / stepper.dt
}

/// Itô generator `Df·Lind(ρ) + ½ Σ D²f(G_ν, G_ν)` by central differences of step `h`.
pub fn ito_generator<F: Fn(&CMatrix) -> f64>(f: F, rho: &GeneralState, ops: &OperatorSet, h: f64) -> f64 {
    let r = &rho.0;
    let drift = lindblad(r, ops);
    let mut total = (f(&(r + &drift * c(h))) - f(&(r - &drift * c(h)))) / (2.0 * h);
    let f0 = f(r);
    for g in ito_diffusion(r, ops) {
        total += 0.5 * (f(&(r + &g * c(h))) - 2.0 * f0 + f(&(r - &g * c(h)))) / (h * h);
    }
    total
}

/// How outcomes are drawn when simulating.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutcomeSampler {
    Exact,
    Gaussian,
}

/// A simulated master-equation trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct SmeTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<GeneralState>,
    pub outcomes: Vec<Vec<f64>>,
    pub seed: u64,
}

pub fn simulate_sme(
    rho0: &GeneralState,
    ops: &OperatorSet,
    dt: f64,
    n_steps: usize,
    seed: u64,
    sampler: OutcomeSampler,
) -> Result<SmeTrajectory> {
    rho0.validate()?;
    if rho0.dim() != ops.dim() {
        return Err(Error::InvalidParams(format!("state dimension {} does not match operators {}", rho0.dim(), ops.dim())));
    }
    let stepper = RouchonStepper::new(ops, dt)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rho = rho0.clone();
    let mut states = vec![rho.clone()];
    let mut outcomes = Vec::with_capacity(n_steps);
    for step in 0..n_steps {
        let r = match sampler {
            OutcomeSampler::Exact => stepper.sample_outcomes(&rho, &mut rng),
            OutcomeSampler::Gaussian => sample_outcomes_gaussian(&rho, dt, ops, &mut rng),
        };
        rho = stepper.step(&rho, &r).map_err(|e| match e {
            Error::IntegrationFailure { reason, .. } => Error::IntegrationFailure { step, reason },
            other => other,
        })?;
        if rho.min_eigenvalue() < -PHYSICAL_TOL {
            return Err(Error::IntegrationFailure { step, reason: "state lost positivity".into() });
        }
        states.push(rho.clone());
        outcomes.push(r);
    }
    Ok(SmeTrajectory { times: (0..=n_steps).map(|j| j as f64 * dt).collect(), states, outcomes, seed })
}
