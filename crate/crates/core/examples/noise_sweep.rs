//! Filtered against unfiltered recovery at two noise levels.

use std::path::Path;

use coefid::experiment::{self, ExperimentConfig, SweepParameter};

fn main() -> coefid::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/example1_noisy.toml");
    let mut cfg = ExperimentConfig::load(&path)?;
    cfg.recovery.degrees = Some(vec![12, 20]);
    let (plan, rows) = experiment::sweep(&cfg, SweepParameter::Noise, rayon::current_num_threads())?;
    print!("{}", experiment::sweep_csv(&plan, &rows));
    Ok(())
}
