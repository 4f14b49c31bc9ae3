//! Two velocity components and a diffusivity in 2D. Takes about half a minute in release mode.

use std::path::Path;

use coefid::experiment::{self, ExperimentConfig};

fn main() -> coefid::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/example5_2d.toml");
    let cfg = ExperimentConfig::load(&path)?;
    let report = experiment::run(&cfg, None)?;
    for r in &report.results {
        match r.errors() {
            Some(e) => println!("n={:<3} alpha {:?} kappa {:?} eigenvalue ratio {:.2e}", r.degree, e.alpha, e.kappa, r.ratio()),
            None => println!("n={:<3} failed", r.degree),
        }
    }
    Ok(())
}
