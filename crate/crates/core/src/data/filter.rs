use rayon::prelude::*;

use super::localfit::fit_local_polynomial;
use super::{DenseSource, FilterConfig, SnapshotSet};
use crate::error::{Error, Result};

/// Replaces every snapshot value by a local least-squares polynomial fitted
/// to the nearest dense noisy observations at the same time.
///
/// Interior points are numbered `0..Q` and boundary points `Q..Q+B` in the
/// error listing.
pub fn filter(s: &SnapshotSet, cfg: &FilterConfig, source: &DenseSource<'_>) -> Result<SnapshotSet> {
    s.validate()?;
    cfg.validate(s.dim())?;
    let traj = source.trajectory();
    let points: Vec<Vec<f64>> = s
        .interior
        .points()
        .iter()
        .cloned()
        .chain(s.boundary.points())
        .collect();
    let neighborhoods: Vec<Vec<usize>> = points
        .par_iter()
        .map(|x| source.nearest_dense(x, cfg.n_neighbors))
        .collect();
    let dense_points: Vec<Vec<Vec<f64>>> = neighborhoods
        .iter()
        .map(|nb| nb.iter().map(|&i| source.dense_point(i)).collect())
        .collect();

    let q_interior = s.interior.len();
    let mut out = s.clone();
    let mut failures = Vec::new();
    for (m, &t) in s.times.iter().enumerate() {
        let level = traj.level_at(t)?;
        let dense = source.dense_field(level);
        let fitted: Vec<Option<f64>> = points
            .par_iter()
            .enumerate()
            .map(|(q, x)| {
                let vals: Vec<f64> = neighborhoods[q].iter().map(|&i| dense[i]).collect();
                fit_local_polynomial(&dense_points[q], &vals, cfg.poly_degree).map(|p| p.value(x))
            })
            .collect();
        for (q, v) in fitted.into_iter().enumerate() {
            match v {
                Some(v) if q < q_interior => out.interior_values[m][q] = v,
                Some(v) => out.boundary_values[m][q - q_interior] = v,
                None => failures.push((m, q)),
            }
        }
    }
    if !failures.is_empty() {
        return Err(Error::RankDeficientFit { points: failures });
    }
    out.filtered = true;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::BoxDomain;
    use crate::data::add_noise;
    use crate::data::testutil::{analytic_trajectory, snapshots_at};

    #[test]
    fn reproduces_polynomial_data() {
        let d = BoxDomain::interval(-4.0, 4.0).unwrap();
        let f = |x: f64| 0.5 - x + 0.1 * x.powi(3);
        let traj = analytic_trajectory(&d, 12, 0.1, 2, |_, x| f(x[0]));
        let source = DenseSource::new(&traj, 0.0, 0, 1001, 1);
        let s = snapshots_at(&traj, &[0.1, 0.2], 30, 1);
        let out = filter(&s, &FilterConfig::default(), &source).unwrap();
        assert!(out.filtered);
        for (a, b) in out.interior_values.iter().flatten().zip(s.interior_values.iter().flatten()) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn reduces_noise() {
        let d = BoxDomain::interval(-4.0, 4.0).unwrap();
        let traj = analytic_trajectory(&d, 30, 0.1, 1, |_, x| (-x[0] * x[0]).exp());
        let eps = 1e-3;
        let source = DenseSource::new(&traj, eps, 9, 4001, 1);
        let clean = snapshots_at(&traj, &[0.0], 50, 1);
        let noisy = add_noise(&clean, eps, 9).unwrap();
        let out = filter(&noisy, &FilterConfig::default(), &source).unwrap();
        let rms = |v: &SnapshotSet| {
            let e: Vec<f64> = v.interior_values[0]
                .iter()
                .zip(&clean.interior_values[0])
                .map(|(a, b)| a - b)
                .collect();
            (e.iter().map(|x| x * x).sum::<f64>() / e.len() as f64).sqrt()
        };
        assert!(rms(&out) < rms(&noisy) / 3.0, "{} vs {}", rms(&out), rms(&noisy));
    }

    #[test]
    fn too_few_neighbors_is_an_error() {
        let d = BoxDomain::interval(-1.0, 1.0).unwrap();
        let traj = analytic_trajectory(&d, 8, 0.1, 1, |_, x| x[0]);
        let source = DenseSource::new(&traj, 0.0, 0, 101, 1);
        let s = snapshots_at(&traj, &[0.0], 4, 1);
        let cfg = FilterConfig {
            poly_degree: 10,
            n_neighbors: 8,
        };
        assert!(matches!(
            filter(&s, &cfg, &source),
            Err(Error::InsufficientNeighborhood { .. })
        ));
    }
}
