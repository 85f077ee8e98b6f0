use std::fs::File;
use std::io::{BufReader, Write};

use fluorotraj::contextual::reconstruct_state;
use fluorotraj::correlators::{analytic_grid, compare, empirical_grid, write_grid_csv};
use fluorotraj::mlp::ideal::{
    ideal_mlp_readout, ideal_time_zero_energy, integrate_ideal, p_zero_energy, phase_portrait, solve_ideal_bvp, theta_to_state,
    Branch, IdealPath,
};
use fluorotraj::mlp::{solve_mlp_bvp, stochastic_energy};
use fluorotraj::sme::{bloch_of, fluorescence_operator_set, simulate_sme, CMatrix, GeneralState, OperatorSet, SmeTrajectory};
use fluorotraj::trajectory::{
    empirical_mlp, ensemble_stats, generate_ensemble, postselect, read_ensemble_csv, write_ensemble_csv, write_manifest,
    EnsembleManifest, EnsembleStats, PostSelection, SdeOptions,
};
use fluorotraj::{Ensemble, Trajectory};
use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::*;
use crate::error::CliError;
use crate::output::{num, write_row, Output};

type Outcome = Result<Value, CliError>;

/// Currents are reported in units of `√(γ1/2)`.
fn current_scale(gamma1: f64) -> f64 {
    (gamma1 / 2.0).sqrt()
}

fn generate(spec: &EnsembleSpec) -> Result<Ensemble, CliError> {
    if spec.n_trajectories == 0 {
        return Err(CliError::Config("n_trajectories must be at least 1".into()));
    }
    let opts = SdeOptions { clip_tolerance: spec.clip_tolerance };
    log::info!("generating {} {} trajectories of {} steps", spec.n_trajectories, spec.scheme, spec.n_steps);
    Ok(generate_ensemble(&spec.initial, &spec.params, spec.scheme, spec.n_steps, spec.n_trajectories, spec.seed, &opts)?)
}

fn load_ensemble(source: &EnsembleSource) -> Result<Ensemble, CliError> {
    match source {
        EnsembleSource::Generate(spec) => generate(spec),
        EnsembleSource::Files { csv, manifest } => {
            let open = |p: &std::path::Path| {
                File::open(p).map_err(|e| CliError::Config(format!("missing ensemble file {}: {e}", p.display())))
            };
            let m: EnsembleManifest = serde_json::from_reader(BufReader::new(open(manifest)?))
                .map_err(|e| CliError::Config(format!("{}: {e}", manifest.display())))?;
            Ok(read_ensemble_csv(&m, BufReader::new(open(csv)?))?)
        }
    }
}

fn final_mean(stats: &EnsembleStats) -> [f64; 3] {
    *stats.mean.last().expect("stats cover at least the initial time")
}

pub fn simulate(cfg: &SimulateConfig, out: &mut Output) -> Outcome {
    let e = generate(&cfg.ensemble)?;
    let mut w = out.create("ensemble.csv")?;
    write_ensemble_csv(&e, &mut w)?;
    write_manifest(&e, out.create("manifest.json")?)?;
    let stats = ensemble_stats(&e)?;
    Ok(json!({ "n_trajectories": e.len(), "n_steps": e.n_steps, "final_mean": final_mean(&stats) }))
}

fn write_stats(out: &mut Output, name: &str, stats: &EnsembleStats) -> Result<(), CliError> {
    let mut w = out.create(name)?;
    writeln!(w, "t,mean_u,mean_x,mean_y,var_u,var_x,var_y")?;
    for (j, t) in stats.times.iter().enumerate() {
        let (m, v) = (stats.mean[j], stats.variance[j]);
        write_row(&mut w, &[*t, m[0], m[1], m[2], v[0], v[1], v[2]])?;
    }
    w.flush()?;
    Ok(())
}

fn write_path(out: &mut Output, name: &str, t: &Trajectory, gamma1: f64) -> Result<(), CliError> {
    let c = current_scale(gamma1);
    let mut w = out.create(name)?;
    writeln!(w, "t,u,x,y,I,Q")?;
    for (j, s) in t.states.iter().enumerate() {
        write!(w, "{},{},{},{}", num(t.times[j]), num(s.u), num(s.x), num(s.y))?;
        match t.readouts.get(j) {
            Some(r) => writeln!(w, ",{},{}", num(r.i / c), num(r.q / c))?,
            None => writeln!(w, ",,")?,
        }
    }
    w.flush()?;
    Ok(())
}

pub fn average(cfg: &AverageConfig, out: &mut Output) -> Outcome {
    let e = load_ensemble(&cfg.ensemble)?;
    let stats = ensemble_stats(&e)?;
    write_stats(out, "averages.csv", &stats)?;
    let mut summary = json!({ "n_trajectories": e.len(), "final_mean": final_mean(&stats) });
    if let Some(ps) = &cfg.postselect {
        let sub = match postselect(&e, &ps.target, ps.tolerance)? {
            PostSelection::Selected(sub) => sub,
            PostSelection::Empty => return Err(CliError::Numeric("no trajectory ends inside the post-selection window".into())),
        };
        let sub_stats = ensemble_stats(&sub)?;
        write_stats(out, "subensemble_averages.csv", &sub_stats)?;
        summary["n_selected"] = json!(sub.len());
        if sub.len() >= 2 {
            let medoid = empirical_mlp(&sub)?;
            write_path(out, "mlp_empirical.csv", &medoid, e.params.gamma1)?;
            summary["empirical_mlp_seed"] = json!(medoid.seed);
        } else {
            log::warn!("a single selected trajectory has no most probable path");
        }
        summary["current_unit"] = json!("sqrt(gamma1/2)");
    }
    Ok(summary)
}

pub fn mlp(cfg: &MlpConfig, out: &mut Output) -> Outcome {
    let path = solve_mlp_bvp(&cfg.initial, &cfg.target, cfg.duration, &cfg.params, &cfg.solver.options(cfg.seed))?;
    let c = current_scale(cfg.params.gamma1);
    let mut w = out.create("mlp_path.csv")?;
    writeln!(w, "t,u,x,y,p_u,p_x,p_y,I,Q,H")?;
    for ((t, q), (i, qq)) in path.times.iter().zip(&path.points).zip(&path.readouts) {
        let s = q.state;
        let [pu, px, py] = q.momenta;
        write_row(&mut w, &[*t, s.u, s.x, s.y, pu, px, py, i / c, qq / c, stochastic_energy(q, &cfg.params)])?;
    }
    w.flush()?;
    Ok(json!({
        "energy": path.energy,
        "residual": path.residual,
        "energy_drift": path.energy_drift(&cfg.params),
        "action": path.action(&cfg.params),
        "final_state": path.final_point().state,
        "initial_momenta": path.points[0].momenta,
        "current_unit": "sqrt(gamma1/2)",
    }))
}

fn ideal_path(spec: &IdealPathSpec, gamma1: f64, h: f64) -> Result<IdealPath, CliError> {
    match spec.duration {
        Some(t) => Ok(solve_ideal_bvp(spec.theta0, spec.thetaf, t, gamma1, h)?),
        None if spec.theta0 == spec.thetaf => {
            ideal_time_zero_energy(spec.theta0, spec.thetaf, gamma1)?;
            let p = p_zero_energy(spec.theta0, Branch::Plus);
            Ok(IdealPath { times: vec![0.0], theta: vec![spec.theta0], p: vec![p], energy: 0.0, gamma1 })
        }
        None => {
            let t = ideal_time_zero_energy(spec.theta0, spec.thetaf, gamma1)?;
            let branch = if spec.thetaf > spec.theta0 { Branch::Plus } else { Branch::Minus };
            Ok(integrate_ideal(spec.theta0, p_zero_energy(spec.theta0, branch), t, gamma1, h))
        }
    }
}

pub fn mlp_ideal(cfg: &MlpIdealConfig, out: &mut Output) -> Outcome {
    if cfg.paths.is_empty() && cfg.portrait.is_none() {
        return Err(CliError::Config("nothing to do: give paths and/or a portrait".into()));
    }
    let c = current_scale(cfg.gamma1);
    let mut summaries = Vec::new();
    for (k, spec) in cfg.paths.iter().enumerate() {
        let path = ideal_path(spec, cfg.gamma1, cfg.h)?;
        let mut w = out.create(&format!("ideal_path_{k}.csv"))?;
        writeln!(w, "t,theta,p_theta,u,x,I")?;
        for ((t, th), p) in path.times.iter().zip(&path.theta).zip(&path.p) {
            let s = theta_to_state(*th);
            write_row(&mut w, &[*t, *th, *p, s.u, s.x, ideal_mlp_readout(*th, *p, cfg.gamma1) / c])?;
        }
        w.flush()?;
        summaries.push(json!({
            "theta0": spec.theta0,
            "thetaf": spec.thetaf,
            "duration": path.times.last().copied().unwrap_or(0.0),
            "energy": path.energy,
            "action": path.action(),
        }));
    }
    if let Some(p) = &cfg.portrait {
        if p.n_theta < 2 || !(p.theta_max > p.theta_min) {
            return Err(CliError::Config("portrait needs n_theta >= 2 and theta_max > theta_min".into()));
        }
        let thetas: Vec<f64> =
            (0..p.n_theta).map(|k| p.theta_min + (p.theta_max - p.theta_min) * k as f64 / (p.n_theta - 1) as f64).collect();
        let mut w = out.create("portrait.csv")?;
        writeln!(w, "energy,theta,p_plus,p_minus")?;
        for row in phase_portrait(&p.energies, &thetas, cfg.gamma1) {
            write_row(&mut w, &[row.energy, row.theta, row.p_plus, row.p_minus])?;
        }
        w.flush()?;
    }
    Ok(json!({ "paths": summaries, "current_unit": "sqrt(gamma1/2)" }))
}

pub fn correlate(cfg: &CorrelateConfig, out: &mut Output) -> Outcome {
    if cfg.pairs.is_empty() || cfg.times.count == 0 {
        return Err(CliError::Config("correlate needs at least one pair and one time".into()));
    }
    let e = load_ensemble(&cfg.ensemble)?;
    let times = cfg.times.times();
    let mut reports = Vec::new();
    for [a, b] in &cfg.pairs {
        let tag = format!("{}_{}", a.name(), b.name());
        let ana = analytic_grid(*a, *b, &times, &e.initial, &e.params)?;
        let emp = empirical_grid(&e, *a, *b, &times)?;
        let cmp = compare(&ana, &emp, cfg.k_se)?;
        write_grid_csv(&times, &ana.values, out.create(&format!("analytic_{tag}.csv"))?)?;
        write_grid_csv(&times, &emp.grid.values, out.create(&format!("empirical_{tag}.csv"))?)?;
        write_grid_csv(&times, &emp.stderr, out.create(&format!("stderr_{tag}.csv"))?)?;
        let max_z = cmp.z_scores.iter().flatten().copied().fold(0.0, f64::max);
        let max_abs = ana.values.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max);
        reports.push(json!({
            "pair": [a.name(), b.name()],
            "cells": cmp.cells,
            "within": cmp.within,
            "fraction_within": cmp.fraction(),
            "max_abs_diff_over_se": max_z,
            "max_abs_analytic": max_abs,
            "analytic_identically_zero": max_abs < 1e-14,
        }));
    }
    let report = json!({ "k_se": cfg.k_se, "n_trajectories": e.len(), "pairs": reports });
    out.json("correlate_report.json", &report)?;
    Ok(report)
}

fn complex_entries(entries: &[[f64; 2]]) -> Vec<Complex64> {
    entries.iter().map(|[re, im]| Complex64::new(*re, *im)).collect()
}

fn initial_state(spec: &StateSpec) -> Result<GeneralState, CliError> {
    Ok(match spec {
        StateSpec::Bloch(s) => GeneralState::from_bloch(s)?,
        StateSpec::Pure(amps) => GeneralState::pure(&complex_entries(amps))?,
        StateSpec::Density { dim, entries } => {
            if entries.len() != dim * dim {
                return Err(CliError::Config(format!("density needs {} entries, got {}", dim * dim, entries.len())));
            }
            GeneralState::new(CMatrix::from_row_slice(*dim, *dim, &complex_entries(entries)))?
        }
    })
}

fn operator_set(spec: &OperatorSpec) -> Result<OperatorSet, CliError> {
    Ok(match spec {
        OperatorSpec::Fluorescence { gamma1, gamma_phi, eta } => fluorescence_operator_set(*gamma1, *gamma_phi, *eta)?,
        OperatorSpec::Explicit(ops) => {
            ops.validate()?;
            ops.clone()
        }
    })
}

fn mean_se(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = values.collect();
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (m, f64::NAN);
    }
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

pub fn sme(cfg: &SmeConfig, out: &mut Output) -> Outcome {
    if cfg.n_trajectories == 0 {
        return Err(CliError::Config("n_trajectories must be at least 1".into()));
    }
    let ops = operator_set(&cfg.operators)?;
    let rho0 = initial_state(&cfg.initial)?;
    let runs: Vec<SmeTrajectory> = (0..cfg.n_trajectories as u64)
        .into_par_iter()
        .map(|k| simulate_sme(&rho0, &ops, cfg.dt, cfg.n_steps, cfg.seed.wrapping_add(k), cfg.sampler))
        .collect::<Result<_, _>>()?;

    let n = ops.dim();
    let m = ops.n_channels();
    let mut w = out.create("sme.csv")?;
    let mut header = vec!["trajectory".to_string(), "t".to_string()];
    for r in 0..n {
        for c in 0..n {
            header.push(format!("rho_{r}{c}_re"));
            header.push(format!("rho_{r}{c}_im"));
        }
    }
    header.extend((0..m).map(|k| format!("r_{k}")));
    writeln!(w, "{}", header.join(","))?;
    for (k, run) in runs.iter().enumerate() {
        for (j, rho) in run.states.iter().enumerate() {
            let mut cells = vec![k.to_string(), num(run.times[j])];
            for r in 0..n {
                for c in 0..n {
                    let z = rho.0[(r, c)];
                    cells.push(num(z.re));
                    cells.push(num(z.im));
                }
            }
            match run.outcomes.get(j) {
                Some(o) => cells.extend(o.iter().map(|v| num(*v))),
                None => cells.extend(std::iter::repeat_n(String::new(), m)),
            }
            writeln!(w, "{}", cells.join(","))?;
        }
    }
    w.flush()?;

    let mut summary = json!({ "n_trajectories": runs.len(), "dim": n, "n_channels": m });
    if cfg.compare_bloch {
        summary["comparison"] = compare_with_bloch(cfg, &runs)?;
    }
    Ok(summary)
}

/// Final-time ensemble means of the general engine against the qubit exact scheme.
fn compare_with_bloch(cfg: &SmeConfig, runs: &[SmeTrajectory]) -> Outcome {
    let (OperatorSpec::Fluorescence { gamma1, gamma_phi, eta }, StateSpec::Bloch(s0)) = (&cfg.operators, &cfg.initial) else {
        return Err(CliError::Config("compare_bloch needs fluorescence operators and a Bloch initial state".into()));
    };
    let p = fluorotraj::MeasurementParams::new(*gamma1, *gamma_phi, *eta, cfg.dt)?;
    let spec = EnsembleSpec {
        params: p,
        initial: *s0,
        scheme: fluorotraj::Scheme::Exact,
        n_steps: cfg.n_steps,
        n_trajectories: cfg.n_trajectories,
        seed: cfg.seed.wrapping_add(1 << 32),
        clip_tolerance: SdeOptions::default().clip_tolerance,
    };
    let e = generate(&spec)?;
    let finals: Vec<[f64; 3]> =
        runs.iter().map(|r| bloch_of(&r.states.last().expect("initial state present").0).as_array()).collect();
    let mut rows = Vec::new();
    let mut agree = true;
    for (k, name) in ["u", "x", "y"].iter().enumerate() {
        let (ms, ss) = mean_se(finals.iter().map(|f| f[k]));
        let (mb, sb) = mean_se(e.trajectories.iter().map(|t| t.final_state().as_array()[k]));
        let se = (ss * ss + sb * sb).sqrt();
        let z = if se > 0.0 {
            (ms - mb).abs() / se
        } else if ms == mb {
            0.0
        } else {
            f64::INFINITY
        };
        agree &= z <= 3.0;
        rows.push(json!({ "component": name, "sme_mean": ms, "bloch_mean": mb, "combined_se": se, "z": z }));
    }
    Ok(json!({ "t": cfg.dt * cfg.n_steps as f64, "components": rows, "within_3_se": agree }))
}

pub fn cv_reconstruct(cfg: &CvConfig, out: &mut Output) -> Outcome {
    if cfg.targets.is_empty() {
        return Err(CliError::Config("no target observables".into()));
    }
    let reports = reconstruct_state(&cfg.state, cfg.epsilon, cfg.n_samples, cfg.seed, &cfg.targets)?;
    out.json("cv_report.json", &reports)?;
    Ok(serde_json::to_value(&reports)?)
}
