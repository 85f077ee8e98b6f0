use fluorotraj::correlators::{analytic_cov, analytic_grid, compare, empirical_grid, write_grid_csv, Variable};
use fluorotraj::trajectory::{generate_ensemble, SdeOptions};
use fluorotraj::{BlochState, MeasurementParams, Scheme};

fn params() -> MeasurementParams {
    MeasurementParams::new(1.0, 0.0, 0.2, 0.01).unwrap()
}

fn times(n: usize, h: f64) -> Vec<f64> {
    (0..n).map(|k| k as f64 * h).collect()
}

#[test]
fn ground_state_grids_vanish() {
    let p = params();
    for (a, b) in
        [(Variable::U, Variable::U), (Variable::X, Variable::X), (Variable::Y, Variable::U), (Variable::U, Variable::XiI)]
    {
        let g = analytic_grid(a, b, &times(6, 0.2), &BlochState::GROUND, &p).unwrap();
        assert!(g.values.iter().flatten().all(|v| *v == 0.0), "{a:?}{b:?}");
    }
}

#[test]
fn autocovariances_are_symmetric() {
    let p = params();
    let s0 = BlochState::new(1.3, 0.4, -0.5);
    for v in [Variable::U, Variable::X, Variable::Y] {
        let g = analytic_grid(v, v, &times(8, 0.25), &s0, &p).unwrap();
        for i in 0..8 {
            assert_eq!(g.values[i][0], 0.0);
            for j in 0..8 {
                assert!((g.values[i][j] - g.values[j][i]).abs() < 1e-14);
            }
        }
    }
    // Cross covariances transpose under exchange of the pair.
    for t1 in [0.3, 1.1] {
        for t2 in [0.5, 1.7] {
            let a = analytic_cov(Variable::U, Variable::X, t1, t2, &s0, &p, None).unwrap();
            let b = analytic_cov(Variable::X, Variable::U, t2, t1, &s0, &p, None).unwrap();
            assert!((a - b).abs() < 1e-14);
        }
    }
}

#[test]
fn noise_and_causal_correlators_match_monte_carlo() {
    let p = params();
    let s0 = BlochState::new(1.0, 1.0, 0.0);
    let e = generate_ensemble(&s0, &p, Scheme::Exact, 100, 4000, 3, &SdeOptions::default()).unwrap();
    let t = times(10, 0.1);
    for (a, b) in [(Variable::XiI, Variable::XiI), (Variable::XiQ, Variable::XiQ), (Variable::XiI, Variable::XiQ)] {
        let c = compare(&analytic_grid(a, b, &t, &s0, &p).unwrap(), &empirical_grid(&e, a, b, &t).unwrap(), 3.0).unwrap();
        assert!(c.fraction() >= 0.9, "{a:?}{b:?}: {}", c.fraction());
    }
    // State variables cannot respond to later noise.
    let emp = empirical_grid(&e, Variable::U, Variable::XiI, &t).unwrap();
    let ana = analytic_grid(Variable::U, Variable::XiI, &t, &s0, &p).unwrap();
    let mut cells = 0;
    let mut within = 0;
    for i in 0..t.len() {
        for j in i..t.len() {
            assert_eq!(ana.values[i][j], 0.0);
            cells += 1;
            if emp.grid.values[i][j].abs() <= 3.0 * emp.stderr[i][j] {
                within += 1;
            }
        }
    }
    assert!(within as f64 >= 0.9 * cells as f64, "{within}/{cells}");
}

#[test]
fn grid_csv_layout() {
    let mut out = Vec::new();
    write_grid_csv(&[0.0, 0.5], &[vec![1.0, 2.0], vec![3.0, 4.0]], &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0], "t1\\t2,0.0000000000000000e0,5.0000000000000000e-1");
    assert!(lines[2].ends_with(",4.0000000000000000e0"));
}
