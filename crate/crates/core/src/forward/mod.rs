//! Forward solvers that generate the synthetic observations.
//!
//! Space is discretized by Chebyshev (Dirichlet) or Fourier (periodic)
//! collocation; time by Crank–Nicolson for linear flux, and by an
//! implicit-explicit scheme for the Burgers flux (trapezoidal diffusion,
//! second-order Adams–Bashforth advection started with one Heun step).

mod spectral;
mod trajectory;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::BoxDomain;
use crate::error::{Error, Result};

pub use spectral::{PointWeights, SpectralAxis, SpectralGrid};
pub use trajectory::SolutionTrajectory;

/// Scalar field on the spatial domain.
pub type ScalarField = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

pub fn field(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> ScalarField {
    Arc::new(f)
}

pub fn constant_field(c: f64) -> ScalarField {
    Arc::new(move |_| c)
}

/// Known flux function `F` inside the advection term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FluxSpec {
    /// `F(u) = u`.
    #[default]
    Linear,
    /// `F(u) = u²/2`.
    Burgers,
}

impl FluxSpec {
    #[inline]
    pub fn value(self, u: f64) -> f64 {
        match self {
            FluxSpec::Linear => u,
            FluxSpec::Burgers => 0.5 * u * u,
        }
    }

    #[inline]
    pub fn derivative(self, u: f64) -> f64 {
        match self {
            FluxSpec::Linear => 1.0,
            FluxSpec::Burgers => u,
        }
    }
}

/// True coefficient fields driving the forward model.
#[derive(Clone)]
pub struct CoefficientFields {
    pub alpha: Vec<ScalarField>,
    pub kappa: ScalarField,
    pub flux: FluxSpec,
}

impl fmt::Debug for CoefficientFields {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientFields")
            .field("alpha", &self.alpha.len())
            .field("flux", &self.flux)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpatialScheme {
    Chebyshev,
    Fourier,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCondition {
    Dirichlet,
    Periodic,
}

/// Which time levels the trajectory keeps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StorePlan {
    /// Every step including the initial state.
    All,
    /// Every `k`-th step including the initial state.
    Every(usize),
    /// The listed step indices (0 is the initial state).
    Steps(Vec<usize>),
}

#[derive(Clone)]
pub struct SolverConfig {
    pub domain: BoxDomain,
    pub scheme: SpatialScheme,
    pub bc: BoundaryCondition,
    /// Collocation points per dimension.
    pub n_coll: usize,
    pub dt: f64,
    pub t_final: f64,
    pub initial_condition: ScalarField,
    pub store: StorePlan,
}

impl fmt::Debug for SolverConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SolverConfig")
            .field("domain", &self.domain)
            .field("scheme", &self.scheme)
            .field("bc", &self.bc)
            .field("n_coll", &self.n_coll)
            .field("dt", &self.dt)
            .field("t_final", &self.t_final)
            .field("store", &self.store)
            .finish_non_exhaustive()
    }
}

impl SolverConfig {
    /// Number of time steps; `t_final` must be an integer multiple of `dt`.
    pub fn n_steps(&self) -> Result<usize> {
        let n = (self.t_final / self.dt).round();
        if (n * self.dt - self.t_final).abs() > 1e-9 * self.t_final {
            return Err(Error::Config(format!(
                "t_final {} is not a multiple of dt {}",
                self.t_final, self.dt
            )));
        }
        Ok(n as usize)
    }

    pub fn validate(&self) -> Result<()> {
        match (self.scheme, self.bc) {
            (SpatialScheme::Fourier, BoundaryCondition::Periodic)
            | (SpatialScheme::Chebyshev, BoundaryCondition::Dirichlet) => {}
            (s, b) => {
                return Err(Error::Config(format!(
                    "{s:?} collocation is paired with {b:?} boundary conditions"
                )))
            }
        }
        if !(self.dt > 0.0 && self.t_final > 0.0) {
            return Err(Error::Config("dt and t_final must be positive".into()));
        }
        if self.n_coll < 4 {
            return Err(Error::Config("n_coll must be at least 4".into()));
        }
        if self.scheme == SpatialScheme::Fourier && self.n_coll % 2 == 1 {
            return Err(Error::Config("Fourier collocation needs an even n_coll".into()));
        }
        self.n_steps().map(|_| ())
    }

    pub fn grid(&self) -> SpectralGrid {
        match self.scheme {
            SpatialScheme::Chebyshev => SpectralGrid::chebyshev(&self.domain, self.n_coll),
            SpatialScheme::Fourier => SpectralGrid::fourier(&self.domain, self.n_coll),
        }
    }
}

/// Sampled coefficient values on the grid.
struct GridCoefficients {
    alpha: Vec<Vec<f64>>,
    kappa: Vec<f64>,
}

fn sample_coefficients(grid: &SpectralGrid, coeffs: &CoefficientFields) -> Result<GridCoefficients> {
    if coeffs.alpha.len() != grid.dim() {
        return Err(Error::Dimension(format!(
            "{} velocity components for a {}-dimensional domain",
            coeffs.alpha.len(),
            grid.dim()
        )));
    }
    let points = grid.points();
    let kappa: Vec<f64> = points.iter().map(|p| (coeffs.kappa)(p)).collect();
    if let Some(k) = kappa.iter().find(|&&k| !(k >= 0.0)) {
        return Err(Error::Config(format!("diffusivity {k} is negative on the grid")));
    }
    let alpha = coeffs
        .alpha
        .iter()
        .map(|a| points.iter().map(|p| a(p)).collect())
        .collect();
    Ok(GridCoefficients { alpha, kappa })
}

/// Dense `∇·(κ∇u)` operator, plus `−∇·(α u)` when `with_advection` is set.
fn assemble_operator(grid: &SpectralGrid, c: &GridCoefficients, with_advection: bool) -> DMatrix<f64> {
    let n = grid.len();
    let mut op = DMatrix::zeros(n, n);
    for axis in 0..grid.dim() {
        let d = grid.axes()[axis].diff();
        grid.for_each_line(axis, |line| {
            let m = line.len();
            for a in 0..m {
                for b in 0..m {
                    let mut diffusion = 0.0;
                    for k in 0..m {
                        diffusion += d[(a, k)] * c.kappa[line[k]] * d[(k, b)];
                    }
                    let mut entry = diffusion;
                    if with_advection {
                        entry -= d[(a, b)] * c.alpha[axis][line[b]];
                    }
                    op[(line[a], line[b])] += entry;
                }
            }
        });
    }
    for i in 0..n {
        if grid.is_boundary(i) {
            op.row_mut(i).fill(0.0);
        }
    }
    op
}

fn stored_steps(plan: &StorePlan, n_steps: usize) -> Vec<usize> {
    match plan {
        StorePlan::All => (0..=n_steps).collect(),
        StorePlan::Every(k) => {
            let k = (*k).max(1);
            let mut v: Vec<usize> = (0..=n_steps).step_by(k).collect();
            if *v.last().unwrap() != n_steps {
                v.push(n_steps);
            }
            v
        }
        StorePlan::Steps(s) => {
            let mut v: Vec<usize> = s.iter().copied().filter(|&k| k <= n_steps).collect();
            v.sort_unstable();
            v.dedup();
            v
        }
    }
}

/// Advances `∂u/∂t = −∇·(α F(u)) + ∇·(κ∇u)` from the initial condition and
/// returns the stored levels.
pub fn solve(config: &SolverConfig, coeffs: &CoefficientFields) -> Result<SolutionTrajectory> {
    config.validate()?;
    let n_steps = config.n_steps()?;
    let grid = config.grid();
    let gc = sample_coefficients(&grid, coeffs)?;
    let dt = config.dt;
    let n = grid.len();

    let mut u = DVector::from_iterator(n, grid.points().iter().map(|p| (config.initial_condition)(p)));
    let keep = stored_steps(&config.store, n_steps);
    let mut keep_iter = keep.iter().peekable();
    let mut levels = Vec::with_capacity(keep.len());
    let mut store = |step: usize, u: &DVector<f64>, keep_iter: &mut std::iter::Peekable<std::slice::Iter<usize>>| {
        if keep_iter.peek() == Some(&&step) {
            keep_iter.next();
            levels.push((step, u.as_slice().to_vec()));
        }
    };
    store(0, &u, &mut keep_iter);

    let check = |step: usize, u: &DVector<f64>| -> Result<()> {
        if u.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::UnstableStep {
                step,
                time: step as f64 * dt,
            })
        }
    };

    match coeffs.flux {
        FluxSpec::Linear => {
            let op = assemble_operator(&grid, &gc, true);
            let identity = DMatrix::<f64>::identity(n, n);
            let implicit = &identity - &op * (0.5 * dt);
            let explicit = &identity + &op * (0.5 * dt);
            let lu = implicit.lu();
            if !lu.is_invertible() {
                return Err(Error::SingularSystem);
            }
            let mut rhs = DVector::zeros(n);
            for step in 1..=n_steps {
                explicit.mul_to(&u, &mut rhs);
                if !lu.solve_mut(&mut rhs) {
                    return Err(Error::SingularSystem);
                }
                std::mem::swap(&mut u, &mut rhs);
                check(step, &u)?;
                store(step, &u, &mut keep_iter);
            }
        }
        FluxSpec::Burgers => {
            let op = assemble_operator(&grid, &gc, false);
            let identity = DMatrix::<f64>::identity(n, n);
            let implicit = &identity - &op * (0.5 * dt);
            let explicit = &identity + &op * (0.5 * dt);
            let lu = implicit.lu();
            if !lu.is_invertible() {
                return Err(Error::SingularSystem);
            }
            let advect = |u: &DVector<f64>| -> DVector<f64> {
                let mut out = DVector::zeros(n);
                for axis in 0..grid.dim() {
                    let flux: Vec<f64> = u
                        .iter()
                        .zip(&gc.alpha[axis])
                        .map(|(&v, &a)| a * coeffs.flux.value(v))
                        .collect();
                    let d = grid.differentiate(&flux, axis);
                    for i in 0..n {
                        out[i] -= d[i];
                    }
                }
                for i in 0..n {
                    if grid.is_boundary(i) {
                        out[i] = 0.0;
                    }
                }
                out
            };
            let implicit_solve = |rhs: DVector<f64>| -> Result<DVector<f64>> {
                lu.solve(&rhs).ok_or(Error::SingularSystem)
            };

            let mut prev_adv = advect(&u);
            if n_steps >= 1 {
                // Heun startup step.
                let base = &explicit * &u;
                let predictor = implicit_solve(&base + &prev_adv * dt)?;
                let pred_adv = advect(&predictor);
                let next = implicit_solve(&base + (&prev_adv + &pred_adv) * (0.5 * dt))?;
                u = next;
                check(1, &u)?;
                store(1, &u, &mut keep_iter);
            }
            for step in 2..=n_steps {
                let adv = advect(&u);
                let rhs = &explicit * &u + (&adv * 1.5 - &prev_adv * 0.5) * dt;
                prev_adv = adv;
                u = implicit_solve(rhs)?;
                check(step, &u)?;
                store(step, &u, &mut keep_iter);
            }
        }
    }

    let (steps, values): (Vec<usize>, Vec<Vec<f64>>) = levels.into_iter().unzip();
    Ok(SolutionTrajectory::new(
        config.domain.clone(),
        grid,
        dt,
        steps,
        values,
    ))
}
