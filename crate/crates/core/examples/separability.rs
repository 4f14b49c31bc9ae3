//! Separability scans of analytic fields and of simulated snapshots.

use coefid::diagnostics::{reports_text, sample_matrix, separability_scan, ConditioningReport, Role, Tolerance};
use coefid::experiment::{self, ExperimentConfig, ProblemSpec};

fn main() -> coefid::Result<()> {
    let times: Vec<f64> = (0..24).map(|k| k as f64 / 23.0).collect();
    let points: Vec<Vec<f64>> = (0..40).map(|k| vec![-1.0 + 2.0 * k as f64 / 39.0]).collect();
    let fields: [(&str, fn(f64, &[f64]) -> f64); 3] = [
        ("exp(-t) sin x", |t, x| (-t).exp() * x[0].sin()),
        ("sin(t + x)", |t, x| (t + x[0]).sin()),
        ("exp(-(x - t)^2)", |t, x| (-(x[0] - t).powi(2)).exp()),
    ];
    for (name, f) in fields {
        let r = separability_scan(&sample_matrix(&times, &points, f), Role::State, Tolerance::Fixed(1e-10))?;
        println!("{name}");
        print!("{}", reports_text(&[r]));
    }

    // Scans and the normal-matrix spectrum for simulated Burgers snapshots.
    let mut cfg = ExperimentConfig::new(ProblemSpec::Burgers1d(Default::default()));
    cfg.solver.n_coll = Some(32);
    cfg.solver.dt = Some(1e-3);
    cfg.sampling.n_master = Some(20);
    cfg.sampling.interior_points = Some(40);
    cfg.recovery.degrees = Some(vec![8]);
    cfg.recovery.test_degree = Some(16);
    let plan = cfg.resolve()?;
    let traj = experiment::solve_forward(&plan, false)?;
    let prepared = experiment::prepare(&plan, &traj)?;
    let results = experiment::recover_degrees(&plan, &prepared);
    let d = experiment::diagnose(&plan, &prepared, &results)?;
    println!("burgers snapshots");
    print!("{}", reports_text(&d.separability));
    if let Some((n, c)) = &d.conditioning {
        print!("degree {n} {}", c.text());
    }
    let flat = ConditioningReport::from_spectrum(vec![0.0, 1e-3, 1.0], 1e-12);
    print!("a zero eigenvalue: {}", flat.text());
    Ok(())
}
