use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::localfit::{fit_local_polynomial, second_order_difference, value_weights, LocalJet, StencilPosition};
use super::{DenseSource, FilterConfig, SnapshotSet};
use crate::error::{Error, Result};

/// How derivatives of the state are estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeMethod {
    /// Resolved solver data: second-order differences in time on the solver
    /// step, spectral differentiation in space.
    FiniteDifference,
    /// Derivatives of local least-squares polynomials fitted to noisy
    /// neighborhoods.
    LocalPolynomial,
}

impl DerivativeMethod {
    pub fn for_noise(epsilon: f64) -> Self {
        if epsilon > 0.0 {
            DerivativeMethod::LocalPolynomial
        } else {
            DerivativeMethod::FiniteDifference
        }
    }
}

/// Derivative estimates aligned with a [`SnapshotSet`]. Fields are filled
/// by the individual estimators and combined with [`DerivativeEstimates::merge`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DerivativeEstimates {
    /// `∂u/∂t` at `[m][q]` interior points.
    pub u_t_interior: Option<Vec<Vec<f64>>>,
    /// `∂u/∂t` at `[m][b]` boundary points.
    pub u_t_boundary: Option<Vec<Vec<f64>>>,
    /// `∇u` at `[m][b]` boundary points.
    pub grad_boundary: Option<Vec<Vec<Vec<f64>>>>,
    /// `∇u` at `[m][q]` interior points (collocation only).
    pub grad_interior: Option<Vec<Vec<Vec<f64>>>>,
    /// `∂²u/∂x_l²` at `[m][q]` interior points (collocation only).
    pub hess_diag_interior: Option<Vec<Vec<Vec<f64>>>>,
}

impl DerivativeEstimates {
    pub fn merge(mut self, other: DerivativeEstimates) -> Self {
        self.u_t_interior = other.u_t_interior.or(self.u_t_interior);
        self.u_t_boundary = other.u_t_boundary.or(self.u_t_boundary);
        self.grad_boundary = other.grad_boundary.or(self.grad_boundary);
        self.grad_interior = other.grad_interior.or(self.grad_interior);
        self.hess_diag_interior = other.hess_diag_interior.or(self.hess_diag_interior);
        self
    }

    fn check_finite(&self) -> Result<()> {
        let scalar = [&self.u_t_interior, &self.u_t_boundary];
        let vector = [&self.grad_boundary, &self.grad_interior, &self.hess_diag_interior];
        let ok = scalar.iter().all(|a| a.iter().flatten().flatten().all(|v| v.is_finite()))
            && vector
                .iter()
                .all(|a| a.iter().flatten().flatten().flatten().all(|v| v.is_finite()));
        if ok {
            Ok(())
        } else {
            Err(Error::Format("non-finite derivative estimate".into()))
        }
    }
}

/// `∂u/∂t` at every interior and boundary snapshot point.
///
/// With local polynomials the time series at a point is the noisy
/// observation there, or for filtered snapshots the spatial filter applied
/// to the dense observations of every time level.
pub fn estimate_time_derivative(
    s: &SnapshotSet,
    source: &DenseSource<'_>,
    cfg: &FilterConfig,
    method: DerivativeMethod,
) -> Result<DerivativeEstimates> {
    s.validate()?;
    let traj = source.trajectory();
    let points: Vec<Vec<f64>> = s
        .interior
        .points()
        .iter()
        .cloned()
        .chain(s.boundary.points())
        .collect();
    let weights = points
        .iter()
        .map(|p| traj.weights_at(p))
        .collect::<Result<Vec<_>>>()?;

    let rows: Vec<Vec<f64>> = match method {
        DerivativeMethod::FiniteDifference => {
            if source.epsilon() > 0.0 {
                return Err(Error::Config(
                    "finite-difference time derivatives need noiseless data".into(),
                ));
            }
            s.times
                .iter()
                .map(|&t| {
                    let level = traj.level_at(t)?;
                    let k = traj.steps()[level];
                    let find = |step: usize| traj.level_of_step(step);
                    let (stencil, position) = if k > 0 && find(k - 1).is_some() && find(k + 1).is_some() {
                        ([k - 1, k, k + 1], StencilPosition::Central)
                    } else if find(k + 1).is_some() && find(k + 2).is_some() {
                        ([k, k + 1, k + 2], StencilPosition::Forward)
                    } else if k >= 2 && find(k - 1).is_some() && find(k - 2).is_some() {
                        ([k - 2, k - 1, k], StencilPosition::Backward)
                    } else {
                        return Err(Error::InsufficientNeighborhood {
                            needed: 3,
                            available: 1,
                        });
                    };
                    let levels = stencil.map(|st| find(st).expect("checked above"));
                    Ok(weights
                        .iter()
                        .map(|w| {
                            let v = levels.map(|l| traj.sample_level(l, w));
                            second_order_difference(v, traj.dt(), position)
                        })
                        .collect())
                })
                .collect::<Result<_>>()?
        }
        DerivativeMethod::LocalPolynomial => {
            let needed = cfg.n_neighbors.max(cfg.poly_degree + 2);
            let level_sets: Vec<Vec<usize>> = s
                .times
                .iter()
                .map(|&t| source.nearest_time_levels(t, cfg.n_neighbors))
                .collect();
            if let Some(short) = level_sets.iter().find(|l| l.len() < needed) {
                return Err(Error::InsufficientNeighborhood {
                    needed,
                    available: short.len(),
                });
            }
            let smoothed = if s.filtered {
                let all: BTreeSet<usize> = level_sets.iter().flatten().copied().collect();
                Some(filtered_levels(&points, source, cfg, &all)?)
            } else {
                None
            };
            s.times
                .iter()
                .zip(&level_sets)
                .map(|(&t, levels)| {
                    let times: Vec<Vec<f64>> = levels.iter().map(|&l| vec![traj.times()[l]]).collect();
                    weights
                        .par_iter()
                        .enumerate()
                        .map(|(id, w)| {
                            let series = match &smoothed {
                                Some(map) => levels.iter().map(|l| map[l][id]).collect(),
                                None => source.time_series(w, id as u64, levels),
                            };
                            fit_local_polynomial(&times, &series, cfg.poly_degree)
                                .map(|p| p.jet(&[t]).gradient[0])
                                .ok_or(Error::InsufficientNeighborhood {
                                    needed,
                                    available: levels.len(),
                                })
                        })
                        .collect::<Result<Vec<f64>>>()
                })
                .collect::<Result<_>>()?
        }
    };
    let q = s.interior.len();
    let est = DerivativeEstimates {
        u_t_interior: Some(rows.iter().map(|r| r[..q].to_vec()).collect()),
        u_t_boundary: Some(rows.iter().map(|r| r[q..].to_vec()).collect()),
        ..Default::default()
    };
    est.check_finite()?;
    Ok(est)
}

/// Spatially filtered dense observations at `points` for each of `levels`.
fn filtered_levels(
    points: &[Vec<f64>],
    source: &DenseSource<'_>,
    cfg: &FilterConfig,
    levels: &BTreeSet<usize>,
) -> Result<BTreeMap<usize, Vec<f64>>> {
    cfg.validate(source.dim())?;
    let stencils: Vec<Option<(Vec<usize>, Vec<f64>)>> = points
        .par_iter()
        .map(|x| {
            let nb = source.nearest_dense(x, cfg.n_neighbors);
            let pts: Vec<Vec<f64>> = nb.iter().map(|&i| source.dense_point(i)).collect();
            value_weights(&pts, x, cfg.poly_degree).map(|w| (nb, w))
        })
        .collect();
    let failures: Vec<(usize, usize)> = stencils
        .iter()
        .enumerate()
        .filter(|(_, st)| st.is_none())
        .map(|(q, _)| (0, q))
        .collect();
    if !failures.is_empty() {
        return Err(Error::RankDeficientFit { points: failures });
    }
    let stencils: Vec<(Vec<usize>, Vec<f64>)> = stencils.into_iter().flatten().collect();
    Ok(levels
        .par_iter()
        .map(|&l| {
            let dense = source.dense_field(l);
            let values = stencils
                .iter()
                .map(|(nb, w)| nb.iter().zip(w).map(|(&i, w)| w * dense[i]).sum())
                .collect();
            (l, values)
        })
        .collect())
}

/// Value, gradient and second derivatives at `points` for every snapshot time.
fn spatial_jets(
    s: &SnapshotSet,
    points: &[Vec<f64>],
    source: &DenseSource<'_>,
    cfg: &FilterConfig,
    method: DerivativeMethod,
    point_offset: usize,
) -> Result<Vec<Vec<LocalJet>>> {
    let traj = source.trajectory();
    let dim = s.dim();
    match method {
        DerivativeMethod::FiniteDifference => {
            let weights = points
                .iter()
                .map(|p| traj.weights_at(p))
                .collect::<Result<Vec<_>>>()?;
            s.times
                .iter()
                .map(|&t| {
                    let level = traj.level_at(t)?;
                    let firsts: Vec<Vec<f64>> = (0..dim).map(|a| traj.derivative_values(level, a)).collect();
                    let seconds: Vec<Vec<f64>> =
                        (0..dim).map(|a| traj.second_derivative_values(level, a)).collect();
                    let grid = traj.grid();
                    Ok(weights
                        .iter()
                        .map(|w| LocalJet {
                            value: traj.sample_level(level, w),
                            gradient: firsts.iter().map(|f| grid.interpolate(f, w)).collect(),
                            second: seconds.iter().map(|f| grid.interpolate(f, w)).collect(),
                        })
                        .collect())
                })
                .collect()
        }
        DerivativeMethod::LocalPolynomial => {
            cfg.validate(dim)?;
            let neighborhoods: Vec<Vec<usize>> = points
                .par_iter()
                .map(|x| source.nearest_dense(x, cfg.n_neighbors))
                .collect();
            let dense_points: Vec<Vec<Vec<f64>>> = neighborhoods
                .iter()
                .map(|nb| nb.iter().map(|&i| source.dense_point(i)).collect())
                .collect();
            let mut failures = Vec::new();
            let mut out = Vec::with_capacity(s.times.len());
            for (m, &t) in s.times.iter().enumerate() {
                let level = traj.level_at(t)?;
                let dense = source.dense_field(level);
                let jets: Vec<Option<LocalJet>> = points
                    .par_iter()
                    .enumerate()
                    .map(|(q, x)| {
                        let vals: Vec<f64> = neighborhoods[q].iter().map(|&i| dense[i]).collect();
                        fit_local_polynomial(&dense_points[q], &vals, cfg.poly_degree).map(|p| p.jet(x))
                    })
                    .collect();
                let mut row = Vec::with_capacity(points.len());
                for (q, j) in jets.into_iter().enumerate() {
                    match j {
                        Some(j) => row.push(j),
                        None => {
                            failures.push((m, q + point_offset));
                            row.push(LocalJet {
                                value: f64::NAN,
                                gradient: vec![f64::NAN; dim],
                                second: vec![f64::NAN; dim],
                            });
                        }
                    }
                }
                out.push(row);
            }
            if failures.is_empty() {
                Ok(out)
            } else {
                Err(Error::RankDeficientFit { points: failures })
            }
        }
    }
}

/// `∇u` at the boundary points.
pub fn estimate_boundary_gradient(
    s: &SnapshotSet,
    source: &DenseSource<'_>,
    cfg: &FilterConfig,
    method: DerivativeMethod,
) -> Result<DerivativeEstimates> {
    s.validate()?;
    let points = s.boundary.points();
    let jets = spatial_jets(s, &points, source, cfg, method, s.interior.len())?;
    let est = DerivativeEstimates {
        grad_boundary: Some(
            jets.into_iter()
                .map(|row| row.into_iter().map(|j| j.gradient).collect())
                .collect(),
        ),
        ..Default::default()
    };
    est.check_finite()?;
    Ok(est)
}

/// `∇u` and the diagonal second derivatives at the interior points.
pub fn estimate_interior_derivatives(
    s: &SnapshotSet,
    source: &DenseSource<'_>,
    cfg: &FilterConfig,
    method: DerivativeMethod,
) -> Result<DerivativeEstimates> {
    s.validate()?;
    let jets = spatial_jets(s, s.interior.points(), source, cfg, method, 0)?;
    let mut grads = Vec::with_capacity(jets.len());
    let mut hess = Vec::with_capacity(jets.len());
    for row in jets {
        let (g, h): (Vec<_>, Vec<_>) = row.into_iter().map(|j| (j.gradient, j.second)).unzip();
        grads.push(g);
        hess.push(h);
    }
    let est = DerivativeEstimates {
        grad_interior: Some(grads),
        hess_diag_interior: Some(hess),
        ..Default::default()
    };
    est.check_finite()?;
    Ok(est)
}
