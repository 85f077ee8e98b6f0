use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{time_grid, Ensemble, NoiseSample, Scheme, Trajectory};
use crate::bloch::BlochState;
use crate::error::{Error, Result};
use crate::measurement::{MeasurementParams, QuadratureSample};

pub const CSV_HEADER: &str = "t,u,x,y,I,Q,xi_I,xi_Q";

/// Metadata written next to an ensemble CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleManifest {
    pub schema_version: u32,
    pub params: MeasurementParams,
    pub scheme: Scheme,
    pub initial: BlochState,
    pub n_steps: usize,
    pub n_trajectories: usize,
    pub seeds: Vec<u64>,
}

impl EnsembleManifest {
    pub fn from_ensemble(e: &Ensemble) -> Self {
        Self {
            schema_version: 1,
            params: e.params,
            scheme: e.scheme,
            initial: e.initial,
            n_steps: e.n_steps,
            n_trajectories: e.len(),
            seeds: e.seeds(),
        }
    }
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes all members as consecutive blocks of `n_steps + 1` rows under a
/// single header. The last row of each block has empty readout and noise cells.
pub fn write_ensemble_csv<W: Write>(e: &Ensemble, mut w: W) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for t in &e.trajectories {
        for (j, s) in t.states.iter().enumerate() {
            write!(w, "{},{},{},{}", num(t.times[j]), num(s.u), num(s.x), num(s.y))?;
            if j < t.readouts.len() {
                let r = t.readouts[j];
                let n = t.noises[j];
                writeln!(w, ",{},{},{},{}", num(r.i), num(r.q), num(n.xi_i), num(n.xi_q))?;
            } else {
                writeln!(w, ",,,,")?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_manifest<W: Write>(e: &Ensemble, mut w: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, &EnsembleManifest::from_ensemble(e))?;
    writeln!(w)?;
    Ok(())
}

/// Reads an ensemble written by [`write_ensemble_csv`]; the manifest supplies
/// the parameters, block length and seeds.
pub fn read_ensemble_csv<R: BufRead>(manifest: &EnsembleManifest, r: R) -> Result<Ensemble> {
    let mut lines = r.lines();
    let header = lines.next().ok_or(Error::Empty("csv"))??;
    if header.trim() != CSV_HEADER {
        return Err(Error::Parse(format!("unexpected header {header:?}")));
    }
    let block = manifest.n_steps + 1;
    let mut trajectories = Vec::with_capacity(manifest.n_trajectories);
    let mut current: Option<Trajectory> = None;
    let mut row = 0usize;
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 8 {
            return Err(Error::Parse(format!("row {row}: expected 8 cells, found {}", cells.len())));
        }
        let parse = |c: &str| c.trim().parse::<f64>().map_err(|e| Error::Parse(format!("row {row}: {e}")));
        let j = row % block;
        if j == 0 {
            let k = trajectories.len();
            let seed = *manifest.seeds.get(k).ok_or_else(|| Error::Parse("more blocks than seeds".into()))?;
            current = Some(Trajectory {
                times: Vec::with_capacity(block),
                states: Vec::with_capacity(block),
                readouts: Vec::with_capacity(block - 1),
                noises: Vec::with_capacity(block - 1),
                seed,
            });
        }
        let t = current.as_mut().expect("block started");
        t.times.push(parse(cells[0])?);
        t.states.push(BlochState::new(parse(cells[1])?, parse(cells[2])?, parse(cells[3])?));
        if j + 1 < block {
            t.readouts.push(QuadratureSample::new(parse(cells[4])?, parse(cells[5])?));
            t.noises.push(NoiseSample { xi_i: parse(cells[6])?, xi_q: parse(cells[7])? });
        } else {
            trajectories.push(current.take().expect("block started"));
        }
        row += 1;
    }
    if current.is_some() || trajectories.len() != manifest.n_trajectories {
        return Err(Error::Parse(format!(
            "expected {} complete trajectories, found {}",
            manifest.n_trajectories,
            trajectories.len()
        )));
    }
    debug_assert!(trajectories.iter().all(|t| t.times.len() == time_grid(manifest.params.dt, manifest.n_steps).len()));
    Ok(Ensemble {
        trajectories,
        params: manifest.params,
        initial: manifest.initial,
        scheme: manifest.scheme,
        n_steps: manifest.n_steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::{generate_ensemble, SdeOptions};

    #[test]
    fn csv_round_trip_is_lossless() {
        let p = MeasurementParams::new(1.0, 0.1, 0.3, 0.01).unwrap();
        let e = generate_ensemble(&BlochState::new(1.0, 1.0, 0.0), &p, Scheme::Exact, 12, 3, 77, &SdeOptions::default()).unwrap();
        let mut buf = Vec::new();
        write_ensemble_csv(&e, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,u,x,y,I,Q,xi_I,xi_Q\n"));
        assert_eq!(text.lines().count(), 1 + 3 * 13);
        assert!(text.lines().nth(13).unwrap().ends_with(",,,,"));
        let mut mbuf = Vec::new();
        write_manifest(&e, &mut mbuf).unwrap();
        let manifest: EnsembleManifest = serde_json::from_slice(&mbuf).unwrap();
        let back = read_ensemble_csv(&manifest, buf.as_slice()).unwrap();
        assert_eq!(back, e);
    }

    #[test]
    fn rejects_wrong_header() {
        let p = MeasurementParams::ideal(1.0, 0.01).unwrap();
        let e = generate_ensemble(&BlochState::GROUND, &p, Scheme::Ito, 2, 1, 0, &SdeOptions::default()).unwrap();
        let m = EnsembleManifest::from_ensemble(&e);
        assert!(read_ensemble_csv(&m, "t,u,x\n".as_bytes()).is_err());
    }
}
