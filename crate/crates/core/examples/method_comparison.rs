//! Galerkin against collocation on noisy diffusion data.

use std::path::Path;

use coefid::experiment::{self, ExperimentConfig, SweepParameter};

fn main() -> coefid::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/example2_noisy.toml");
    let cfg = ExperimentConfig::load(&path)?;
    let (_, rows) = experiment::sweep(&cfg, SweepParameter::Method, rayon::current_num_threads())?;
    for row in rows {
        let r = &row.result;
        let err = r.errors().and_then(|e| e.kappa).unwrap_or(f64::NAN);
        println!("{:<12} n={:<3} kappa error {err:.4e}", r.method.name(), r.degree);
    }
    Ok(())
}
