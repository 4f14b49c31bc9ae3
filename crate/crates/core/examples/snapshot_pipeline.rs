//! Sampling, noise, local polynomial filtering and derivative estimation,
//! checked against the clean trajectory.

use std::path::Path;

use coefid::experiment::{self, ExperimentConfig};

fn main() -> coefid::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/example1_noisy.toml");
    let mut cfg = ExperimentConfig::load(&path)?;
    for filtered in [false, true] {
        cfg.filter.enabled = filtered;
        let plan = cfg.resolve()?;
        let traj = experiment::solve_forward(&plan, true)?;
        let p = experiment::prepare(&plan, &traj)?;
        let s = &p.snapshots;
        let mut err2 = 0.0;
        let mut ut_err2 = 0.0;
        let mut n = 0.0;
        let u_t = p.derivs.u_t_interior.as_ref().expect("estimated");
        for (m, &t) in s.times.iter().enumerate() {
            for (q, x) in s.interior.points().iter().enumerate() {
                let clean = traj.query(t, x, false)?;
                let h = 1e-3;
                let dt = (traj.query(t + h, x, true).unwrap_or(clean) - traj.query(t - h, x, true).unwrap_or(clean))
                    / (2.0 * h);
                err2 += (s.interior_values[m][q] - clean).powi(2);
                ut_err2 += (u_t[m][q] - dt).powi(2);
                n += 1.0;
            }
        }
        println!(
            "filtered={filtered}: {} times x {} points, rms state error {:.2e}, rms u_t error {:.2e} (noise {:.0e})",
            s.n_times(),
            s.interior.len(),
            (err2 / n).sqrt(),
            (ut_err2 / n).sqrt(),
            plan.epsilon
        );
    }
    Ok(())
}
