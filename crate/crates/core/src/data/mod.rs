//! Observation data: snapshot sampling at quadrature points, additive noise,
//! local-polynomial filtering and derivative estimation.

mod derivatives;
mod filter;
pub mod io;
pub mod localfit;
mod source;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::basis::BoxDomain;
use crate::error::{Error, Result};
use crate::forward::SolutionTrajectory;
use crate::quadrature::{BoundaryRule, QuadratureRule};

pub use derivatives::{
    estimate_boundary_gradient, estimate_interior_derivatives, estimate_time_derivative, DerivativeEstimates,
    DerivativeMethod,
};
pub use filter::filter;
pub use source::DenseSource;

/// State samples `u(t_m, x_q)` on the interior and boundary rules.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSet {
    pub times: Vec<f64>,
    pub master_times: Vec<f64>,
    pub interior: QuadratureRule,
    /// `interior_values[m][q]`.
    pub interior_values: Vec<Vec<f64>>,
    pub boundary: BoundaryRule,
    /// `boundary_values[m][b]`, boundary points flattened face by face.
    pub boundary_values: Vec<Vec<f64>>,
    pub noise_level: f64,
    pub rng_seed: u64,
    pub filtered: bool,
}

impl SnapshotSet {
    pub fn dim(&self) -> usize {
        self.interior.points().first().map_or(0, |p| p.len())
    }

    pub fn n_times(&self) -> usize {
        self.times.len()
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.times.len();
        if m == 0 {
            return Err(Error::Dimension("snapshot set has no times".into()));
        }
        if self.interior_values.len() != m || self.boundary_values.len() != m {
            return Err(Error::Dimension("value rows do not match the number of times".into()));
        }
        if self.interior_values.iter().any(|r| r.len() != self.interior.len())
            || self.boundary_values.iter().any(|r| r.len() != self.boundary.len())
        {
            return Err(Error::Dimension("value columns do not match the rules".into()));
        }
        Ok(())
    }

    /// Smallest box holding every sample point where `max_m |u|` reaches
    /// `threshold` times the overall maximum, or `None` when that box is
    /// flat in some direction.
    pub fn support_box(&self, threshold: f64) -> Option<BoxDomain> {
        let peak = |rows: &[Vec<f64>], k: usize| rows.iter().map(|r| r[k].abs()).fold(0.0, f64::max);
        let boundary = self.boundary.points();
        let all: Vec<(&[f64], f64)> = (0..self.interior.len())
            .map(|k| (&self.interior.points()[k][..], peak(&self.interior_values, k)))
            .chain(boundary.iter().enumerate().map(|(k, x)| (&x[..], peak(&self.boundary_values, k))))
            .collect();
        let top = all.iter().map(|p| p.1).fold(0.0, f64::max);
        if !(top > 0.0) {
            return None;
        }
        let d = self.dim();
        let (mut lo, mut hi) = (vec![f64::INFINITY; d], vec![f64::NEG_INFINITY; d]);
        for (x, _) in all.iter().filter(|p| p.1 >= threshold * top) {
            for k in 0..d {
                lo[k] = lo[k].min(x[k]);
                hi[k] = hi[k].max(x[k]);
            }
        }
        BoxDomain::new(lo, hi).ok()
    }
}

/// How snapshot times are drawn from the master set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeSampling {
    #[default]
    WithoutReplacement,
    Iid,
}

/// Draws `m` snapshot times from `master_times` and records the trajectory
/// at every interior and boundary point.
pub fn sample(
    traj: &SolutionTrajectory,
    master_times: &[f64],
    m: usize,
    interior: &QuadratureRule,
    boundary: &BoundaryRule,
    seed: u64,
    sampling: TimeSampling,
) -> Result<SnapshotSet> {
    if m == 0 || master_times.is_empty() {
        return Err(Error::Config("need at least one snapshot time".into()));
    }
    if sampling == TimeSampling::WithoutReplacement && m > master_times.len() {
        return Err(Error::Config(format!(
            "M = {m} exceeds the {} master times",
            master_times.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let times: Vec<f64> = match sampling {
        TimeSampling::WithoutReplacement => index::sample(&mut rng, master_times.len(), m)
            .into_iter()
            .map(|i| master_times[i])
            .collect(),
        TimeSampling::Iid => (0..m)
            .map(|_| master_times[rng.random_range(0..master_times.len())])
            .collect(),
    };
    let levels = times
        .iter()
        .map(|&t| traj.level_at(t))
        .collect::<Result<Vec<_>>>()?;
    let iw = interior
        .points()
        .iter()
        .map(|p| traj.weights_at(p))
        .collect::<Result<Vec<_>>>()?;
    let bw = boundary
        .points()
        .iter()
        .map(|p| traj.weights_at(p))
        .collect::<Result<Vec<_>>>()?;
    let interior_values = levels
        .iter()
        .map(|&l| iw.iter().map(|w| traj.sample_level(l, w)).collect())
        .collect();
    let boundary_values = levels
        .iter()
        .map(|&l| bw.iter().map(|w| traj.sample_level(l, w)).collect())
        .collect();
    Ok(SnapshotSet {
        times,
        master_times: master_times.to_vec(),
        interior: interior.clone(),
        interior_values,
        boundary: boundary.clone(),
        boundary_values,
        noise_level: 0.0,
        rng_seed: seed,
        filtered: false,
    })
}

/// Adds i.i.d. `N(0, ε²)` noise to every interior and boundary value.
pub fn add_noise(s: &SnapshotSet, epsilon: f64, seed: u64) -> Result<SnapshotSet> {
    if !(epsilon >= 0.0) {
        return Err(Error::Config(format!("noise level {epsilon} must be non-negative")));
    }
    let mut out = s.clone();
    out.noise_level = epsilon;
    if epsilon == 0.0 {
        return Ok(out);
    }
    let normal = Normal::new(0.0, epsilon).expect("finite positive standard deviation");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for row in out.interior_values.iter_mut().chain(out.boundary_values.iter_mut()) {
        for v in row.iter_mut() {
            *v += normal.sample(&mut rng);
        }
    }
    Ok(out)
}

/// Local polynomial neighborhood settings shared by the filter and the
/// derivative estimators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    pub poly_degree: usize,
    pub n_neighbors: usize,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            poly_degree: 10,
            n_neighbors: 300,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self, dim: usize) -> Result<()> {
        let needed = localfit::coefficient_count(dim, self.poly_degree);
        if self.n_neighbors <= needed {
            return Err(Error::InsufficientNeighborhood {
                needed: needed + 1,
                available: self.n_neighbors,
            });
        }
        Ok(())
    }
}
