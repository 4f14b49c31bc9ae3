use crate::basis::BoxDomain;
use crate::error::{Error, Result};

use super::spectral::{PointWeights, SpectralGrid};

/// Stored time levels of a forward solve on its collocation grid.
#[derive(Debug, Clone)]
pub struct SolutionTrajectory {
    domain: BoxDomain,
    grid: SpectralGrid,
    dt: f64,
    steps: Vec<usize>,
    times: Vec<f64>,
    values: Vec<Vec<f64>>,
}

impl SolutionTrajectory {
    /// `steps` must be strictly increasing; level `k` holds the state after
    /// `steps[k]` steps of size `dt`.
    pub fn new(domain: BoxDomain, grid: SpectralGrid, dt: f64, steps: Vec<usize>, values: Vec<Vec<f64>>) -> Self {
        assert_eq!(steps.len(), values.len());
        assert!(steps.windows(2).all(|w| w[0] < w[1]), "steps must increase");
        let times = steps.iter().map(|&s| s as f64 * dt).collect();
        Self {
            domain,
            grid,
            dt,
            steps,
            times,
            values,
        }
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn steps(&self) -> &[usize] {
        &self.steps
    }

    /// Number of stored levels.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn level_values(&self, level: usize) -> &[f64] {
        &self.values[level]
    }

    /// Level holding step `step`, if stored.
    pub fn level_of_step(&self, step: usize) -> Option<usize> {
        self.steps.binary_search(&step).ok()
    }

    /// Level stored at exactly time `t` (up to rounding of `t / dt`).
    pub fn level_at(&self, t: f64) -> Result<usize> {
        let step = (t / self.dt).round();
        if step >= 0.0 && (step * self.dt - t).abs() <= 1e-9 * self.dt.max(t.abs() * 1e-3) {
            if let Some(l) = self.level_of_step(step as usize) {
                return Ok(l);
            }
        }
        Err(Error::NotStored {
            time: t,
            nearest: self.times[self.nearest_level(t)],
        })
    }

    pub fn nearest_level(&self, t: f64) -> usize {
        let pos = self.times.partition_point(|&s| s < t);
        match pos {
            0 => 0,
            p if p >= self.len() => self.len() - 1,
            p => {
                if (self.times[p] - t).abs() < (t - self.times[p - 1]).abs() {
                    p
                } else {
                    p - 1
                }
            }
        }
    }

    pub fn weights_at(&self, x: &[f64]) -> Result<PointWeights> {
        self.domain.check(x)?;
        Ok(self.grid.weights_at(x))
    }

    pub fn sample_level(&self, level: usize, w: &PointWeights) -> f64 {
        self.grid.interpolate(&self.values[level], w)
    }

    /// Value of the spatial interpolant at `(t, x)`. Without
    /// `allow_time_interp`, `t` must be a stored level; with it, values are
    /// interpolated linearly between the bracketing levels.
    pub fn query(&self, t: f64, x: &[f64], allow_time_interp: bool) -> Result<f64> {
        let w = self.weights_at(x)?;
        match self.level_at(t) {
            Ok(l) => Ok(self.sample_level(l, &w)),
            Err(e) if !allow_time_interp => Err(e),
            Err(e) => {
                let first = self.times[0];
                let last = self.times[self.len() - 1];
                if t < first || t > last {
                    return Err(e);
                }
                let hi = self.times.partition_point(|&s| s < t);
                let lo = hi - 1;
                let theta = (t - self.times[lo]) / (self.times[hi] - self.times[lo]);
                Ok((1.0 - theta) * self.sample_level(lo, &w) + theta * self.sample_level(hi, &w))
            }
        }
    }

    /// Spectral derivative `∂u/∂x_axis` on the grid at a stored level.
    pub fn derivative_values(&self, level: usize, axis: usize) -> Vec<f64> {
        self.grid.differentiate(&self.values[level], axis)
    }

    /// Spectral second derivative `∂²u/∂x_axis²` on the grid at a stored level.
    pub fn second_derivative_values(&self, level: usize, axis: usize) -> Vec<f64> {
        let d = self.grid.differentiate(&self.values[level], axis);
        self.grid.differentiate(&d, axis)
    }

    /// Trajectory restricted to a subset of levels (ascending level indices).
    pub fn select_levels(&self, levels: &[usize]) -> Self {
        Self::new(
            self.domain.clone(),
            self.grid.clone(),
            self.dt,
            levels.iter().map(|&l| self.steps[l]).collect(),
            levels.iter().map(|&l| self.values[l].clone()).collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(c: f64) -> SolutionTrajectory {
        let d = BoxDomain::interval(-1.0, 1.0).unwrap();
        let g = SpectralGrid::chebyshev(&d, 16);
        let n = g.len();
        SolutionTrajectory::new(d, g, 0.1, vec![0, 2, 5], vec![vec![c; n]; 3])
    }

    #[test]
    fn exact_lookup_and_values() {
        let t = constant(3.0);
        assert!((t.query(0.5, &[0.3], false).unwrap() - 3.0).abs() < 1e-12);
        let node = t.grid().point(4);
        assert_eq!(t.query(0.2, &node, false).unwrap(), 3.0);
        assert!(matches!(t.query(0.3, &[0.0], false), Err(Error::NotStored { .. })));
        assert!((t.query(0.3, &[0.0], true).unwrap() - 3.0).abs() < 1e-12);
        assert!(t.query(0.2, &[1.5], false).is_err());
        assert_eq!(t.level_at(0.5).unwrap(), 2);
        assert_eq!(t.nearest_level(0.31), 1);
    }
}
