//! Reconstruction of qubit observables from heterodyne outcomes.
//!
//! A contextual value `C_A(α)` is a function of the outcome whose average
//! against the POVM elements reproduces the observable,
//! `∫ d²α/π C_A(α) E_α = A`. Its sample mean over repeated single weak
//! measurements of the same state then estimates `tr(ρA)`.

use std::fmt;
use std::str::FromStr;

use nalgebra::Matrix2;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bloch::BlochState;
use crate::error::{Error, Result};
use crate::measurement::sample_alpha;
use crate::numerics::mean_and_stderr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    Identity,
    SigmaX,
    SigmaY,
    SigmaZ,
}

impl Observable {
    pub const ALL: [Observable; 4] = [Observable::Identity, Observable::SigmaX, Observable::SigmaY, Observable::SigmaZ];

    pub fn name(self) -> &'static str {
        match self {
            Observable::Identity => "identity",
            Observable::SigmaX => "sigma_x",
            Observable::SigmaY => "sigma_y",
            Observable::SigmaZ => "sigma_z",
        }
    }

    /// Matrix in the `|e⟩, |g⟩` basis.
    pub fn matrix(self) -> Matrix2<Complex64> {
        let (o, l, i) = (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), Complex64::i());
        match self {
            Observable::Identity => Matrix2::new(l, o, o, l),
            Observable::SigmaX => Matrix2::new(o, l, l, o),
            Observable::SigmaY => Matrix2::new(o, -i, i, o),
            Observable::SigmaZ => Matrix2::new(l, o, o, -l),
        }
    }

    /// `tr(ρA)` for a qubit state.
    pub fn expectation(self, s: &BlochState) -> f64 {
        match self {
            Observable::Identity => 1.0,
            Observable::SigmaX => s.x,
            Observable::SigmaY => s.y,
            Observable::SigmaZ => s.z(),
        }
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Observable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "identity" | "i" | "1" => Ok(Observable::Identity),
            "sigma_x" | "sx" | "x" => Ok(Observable::SigmaX),
            "sigma_y" | "sy" | "y" => Ok(Observable::SigmaY),
            "sigma_z" | "sz" | "z" => Ok(Observable::SigmaZ),
            other => Err(Error::Parse(format!("unknown observable '{other}'"))),
        }
    }
}

/// POVM element `E_α = M_α† M_α` of an ideal step of strength `ε`.
pub fn povm_element(alpha: Complex64, eps: f64) -> Matrix2<Complex64> {
    let a2 = alpha.norm_sqr();
    let env = (-a2).exp();
    let off = alpha * eps.sqrt() * env;
    Matrix2::new(Complex64::new((1.0 - eps * (1.0 - a2)) * env, 0.0), off, off.conj(), Complex64::new(env, 0.0))
}

/// Contextual value for one target observable at strength `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContextualValue {
    pub target: Observable,
    pub epsilon: f64,
}

impl ContextualValue {
    pub fn eval(&self, alpha: Complex64) -> f64 {
        let e = self.epsilon;
        match self.target {
            Observable::Identity => 1.0,
            Observable::SigmaX => 2.0 / e.sqrt() * alpha.re,
            Observable::SigmaY => -2.0 / e.sqrt() * alpha.im,
            Observable::SigmaZ => 2.0 / e * (alpha.norm_sqr() - 1.0) - 1.0,
        }
    }
}

pub fn cv_for(target: Observable, eps: f64) -> Result<ContextualValue> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParams(format!("epsilon must lie in (0, 1), got {eps}")));
    }
    Ok(ContextualValue { target, epsilon: eps })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Reconstruction {
    pub estimate: f64,
    pub stderr: f64,
    pub n: usize,
}

/// Sample mean of `C_A(α)` with its standard error.
pub fn reconstruct_expectation(samples: &[Complex64], cv: &ContextualValue) -> Result<Reconstruction> {
    if samples.is_empty() {
        return Err(Error::Empty("no outcome samples"));
    }
    let vals: Vec<f64> = samples.iter().map(|a| cv.eval(*a)).collect();
    let (estimate, stderr) = mean_and_stderr(&vals)?;
    Ok(Reconstruction { estimate, stderr, n: samples.len() })
}

const CHUNK: usize = 1 << 16;

/// `n` outcomes of independent single weak measurements of the same state,
/// drawn from the exact ideal-detector density. Chunk `k` uses stream `k` of
/// the ChaCha generator seeded with `seed`, so results do not depend on the
/// thread count.
pub fn sample_repeated(s: &BlochState, eps: f64, n: usize, seed: u64) -> Result<Vec<Complex64>> {
    s.validate()?;
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidParams(format!("epsilon must lie in [0, 1), got {eps}")));
    }
    let chunks = n.div_ceil(CHUNK);
    Ok((0..chunks)
        .into_par_iter()
        .flat_map_iter(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let len = CHUNK.min(n - k * CHUNK);
            (0..len).map(move |_| sample_alpha(s, eps, &mut rng)).collect::<Vec<_>>()
        })
        .collect())
}

/// Machine-readable reconstruction summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvReport {
    pub target: Observable,
    #[serde(rename = "N")]
    pub n: usize,
    pub epsilon: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub truth_if_known: Option<f64>,
}

/// Samples `n` outcomes from `s` and reconstructs each requested observable.
pub fn reconstruct_state(s: &BlochState, eps: f64, n: usize, seed: u64, targets: &[Observable]) -> Result<Vec<CvReport>> {
    if n == 0 {
        return Err(Error::Empty("zero samples requested"));
    }
    let samples = sample_repeated(s, eps, n, seed)?;
    targets
        .iter()
        .map(|&t| {
            let r = reconstruct_expectation(&samples, &cv_for(t, eps)?)?;
            Ok(CvReport {
                target: t,
                n,
                epsilon: eps,
                estimate: r.estimate,
                stderr: r.stderr,
                truth_if_known: Some(t.expectation(s)),
            })
        })
        .collect()
}
