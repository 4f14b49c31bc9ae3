//! Dense noisy observations used as neighborhoods for filtering and for
//! derivative estimation.
//!
//! Every observation `u(τ, x) + ε·η` draws `η` from a counter-based stream
//! keyed by `(seed, kind, step)` and indexed by the point, so the same
//! observation is reproduced regardless of query order or threading.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::forward::{PointWeights, SolutionTrajectory};

const SPACE_STREAM: u64 = 1 << 48;
const TIME_STREAM: u64 = 2 << 48;

/// Standard normal draw number `counter` of stream `stream`.
pub(crate) fn keyed_gaussian(seed: u64, stream: u64, counter: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos((counter as u128) * 16);
    rng.sample(StandardNormal)
}

/// Uniform observation grid plus the noisy time series at fixed points.
#[derive(Debug)]
pub struct DenseSource<'a> {
    traj: &'a SolutionTrajectory,
    epsilon: f64,
    seed: u64,
    axes: Vec<Vec<f64>>,
    /// Per axis, interpolation matrix from solver grid to dense points.
    interp: Vec<DMatrix<f64>>,
    time_levels: Vec<usize>,
}

impl<'a> DenseSource<'a> {
    /// `dense_points` uniform points per dimension (endpoints included).
    /// The time neighborhoods use the stored levels whose step is a multiple
    /// of `time_stride`.
    pub fn new(traj: &'a SolutionTrajectory, epsilon: f64, seed: u64, dense_points: usize, time_stride: usize) -> Self {
        assert!(dense_points >= 2);
        let domain = traj.domain();
        let grid = traj.grid();
        let axes: Vec<Vec<f64>> = (0..domain.dim())
            .map(|k| {
                let (a, b) = (domain.lower()[k], domain.upper()[k]);
                (0..dense_points)
                    .map(|i| a + (b - a) * i as f64 / (dense_points - 1) as f64)
                    .collect()
            })
            .collect();
        let interp = axes
            .iter()
            .zip(grid.axes())
            .map(|(pts, ax)| {
                let mut m = DMatrix::zeros(pts.len(), ax.len());
                for (i, &x) in pts.iter().enumerate() {
                    for (j, w) in ax.interpolation_weights(x).into_iter().enumerate() {
                        m[(i, j)] = w;
                    }
                }
                m
            })
            .collect();
        let stride = time_stride.max(1);
        let time_levels = (0..traj.len())
            .filter(|&l| traj.steps()[l] % stride == 0)
            .collect();
        Self {
            traj,
            epsilon,
            seed,
            axes,
            interp,
            time_levels,
        }
    }

    pub fn trajectory(&self) -> &SolutionTrajectory {
        self.traj
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn dense_len(&self) -> usize {
        self.axes.iter().map(|a| a.len()).product()
    }

    pub fn dense_point(&self, flat: usize) -> Vec<f64> {
        match self.dim() {
            1 => vec![self.axes[0][flat]],
            _ => {
                let nx = self.axes[0].len();
                vec![self.axes[0][flat % nx], self.axes[1][flat / nx]]
            }
        }
    }

    /// Noisy observations on the whole dense grid at a stored level, first
    /// axis fastest.
    pub fn dense_field(&self, level: usize) -> Vec<f64> {
        let values = self.traj.level_values(level);
        let clean: Vec<f64> = match self.dim() {
            1 => (&self.interp[0] * nalgebra::DVector::from_column_slice(values))
                .as_slice()
                .to_vec(),
            _ => {
                let g = self.traj.grid();
                let (nx, ny) = (g.axes()[0].len(), g.axes()[1].len());
                // values[i + nx*j] is column-major for an nx × ny matrix.
                let u = DMatrix::from_column_slice(nx, ny, values);
                let m = &self.interp[0] * u * self.interp[1].transpose();
                m.as_slice().to_vec()
            }
        };
        if self.epsilon == 0.0 {
            return clean;
        }
        let stream = SPACE_STREAM | self.traj.steps()[level] as u64;
        clean
            .into_iter()
            .enumerate()
            .map(|(i, v)| v + self.epsilon * keyed_gaussian(self.seed, stream, i as u64))
            .collect()
    }

    /// Flat indices of the `n` dense points nearest to `x`, ties broken by
    /// index.
    pub fn nearest_dense(&self, x: &[f64], n: usize) -> Vec<usize> {
        let dim = self.dim();
        let spacing: Vec<f64> = self.axes.iter().map(|a| a[1] - a[0]).collect();
        let center: Vec<i64> = (0..dim)
            .map(|k| ((x[k] - self.axes[k][0]) / spacing[k]).round() as i64)
            .collect();
        let lens: Vec<i64> = self.axes.iter().map(|a| a.len() as i64).collect();
        let total = self.dense_len();
        let n = n.min(total);
        let mut radius = match dim {
            1 => (n as i64) / 2 + 1,
            _ => ((n as f64 / std::f64::consts::PI).sqrt().ceil() as i64) + 1,
        };
        loop {
            let mut cand: Vec<(f64, usize)> = Vec::new();
            let range = |k: usize| (center[k] - radius).max(0)..=(center[k] + radius).min(lens[k] - 1);
            let dist = |p: &[f64]| -> f64 { p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum() };
            match dim {
                1 => {
                    for i in range(0) {
                        let p = [self.axes[0][i as usize]];
                        cand.push((dist(&p), i as usize));
                    }
                }
                _ => {
                    let nx = self.axes[0].len();
                    for j in range(1) {
                        for i in range(0) {
                            let p = [self.axes[0][i as usize], self.axes[1][j as usize]];
                            cand.push((dist(&p), i as usize + nx * j as usize));
                        }
                    }
                }
            }
            // Every point inside the ball of this radius is a candidate, so
            // the n nearest are final once n of them fall inside it.
            let reach = (radius as f64) * spacing.iter().cloned().fold(f64::INFINITY, f64::min);
            let inside = cand.iter().filter(|(d, _)| d.sqrt() <= reach).count();
            if inside >= n || cand.len() == total {
                cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                return cand.into_iter().take(n).map(|(_, i)| i).collect();
            }
            radius *= 2;
        }
    }

    /// Levels forming the time-neighborhood master set.
    pub fn time_levels(&self) -> &[usize] {
        &self.time_levels
    }

    /// The `n` master levels nearest in time to `t`.
    pub fn nearest_time_levels(&self, t: f64, n: usize) -> Vec<usize> {
        let times = self.traj.times();
        let lv = &self.time_levels;
        let n = n.min(lv.len());
        let pos = lv.partition_point(|&l| times[l] < t);
        let (mut lo, mut hi) = (pos, pos);
        while hi - lo < n {
            let take_left = match (lo > 0, hi < lv.len()) {
                (true, true) => (t - times[lv[lo - 1]]) <= (times[lv[hi]] - t),
                (true, false) => true,
                (false, _) => false,
            };
            if take_left {
                lo -= 1;
            } else {
                hi += 1;
            }
        }
        lv[lo..hi].to_vec()
    }

    /// Noisy observations at a fixed point over the given levels. `point_id`
    /// keys the noise so every observation point gets its own series.
    pub fn time_series(&self, weights: &PointWeights, point_id: u64, levels: &[usize]) -> Vec<f64> {
        levels
            .iter()
            .map(|&l| {
                let clean = self.traj.sample_level(l, weights);
                if self.epsilon == 0.0 {
                    clean
                } else {
                    let stream = TIME_STREAM | self.traj.steps()[l] as u64;
                    clean + self.epsilon * keyed_gaussian(self.seed, stream, point_id)
                }
            })
            .collect()
    }
}
