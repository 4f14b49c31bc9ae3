//! Building an experiment in code, writing every artifact to a directory.

use coefid::experiment::{self, AdvDiff1d, ExperimentConfig, ProblemSpec, OUTPUT_ROOT_ENV};

fn main() -> coefid::Result<()> {
    let mut cfg = ExperimentConfig::new(ProblemSpec::Advdiff1d(AdvDiff1d {
        delta: 0.1,
        omega: 4.0 * std::f64::consts::PI,
        ..Default::default()
    }));
    cfg.solver.n_coll = Some(64);
    cfg.solver.dt = Some(1e-4);
    cfg.sampling.n_master = Some(30);
    cfg.sampling.interior_points = Some(80);
    cfg.recovery.degrees = Some(vec![8, 16, 24]);
    cfg.recovery.test_degree = Some(32);
    println!("{}", cfg.to_toml()?);

    let root = std::env::var_os(OUTPUT_ROOT_ENV).map_or_else(std::env::temp_dir, Into::into);
    let dir = root.join("custom_problem");
    let report = experiment::run(&cfg, Some(&dir))?;
    for r in &report.results {
        if let Some(e) = r.errors() {
            println!("n={:<3} alpha {:.3e} kappa {:.3e}", r.degree, e.alpha[0], e.kappa.unwrap_or(f64::NAN));
        }
    }
    for f in &report.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}
