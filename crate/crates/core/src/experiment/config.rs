use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::problem::ProblemSpec;
use crate::basis::Truncation;
use crate::data::{FilterConfig, TimeSampling};
use crate::error::{Error, Result};
use crate::forward::{BoundaryCondition, SolverConfig, SpatialScheme, StorePlan};
use crate::recovery::{Method, RecoveryOptions, Unknowns};

/// Forward-solver overrides; unset fields take the problem defaults.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scheme: Option<SpatialScheme>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bc: Option<BoundaryCondition>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_coll: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_final: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingSection {
    /// Size of the uniform master time set `t_k = k T / n_master`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_master: Option<usize>,
    /// Number of snapshot times drawn from the master set, all of them by
    /// default.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    /// Gauss points per dimension in the interior.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interior_points: Option<usize>,
    /// Gauss points per boundary edge (ignored in 1D).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary_points: Option<usize>,
    pub seed: u64,
    pub time_sampling: TimeSampling,
}

impl Default for SamplingSection {
    fn default() -> Self {
        Self {
            n_master: None,
            m: None,
            interior_points: None,
            boundary_points: None,
            seed: 1,
            time_sampling: TimeSampling::WithoutReplacement,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self { epsilon: 0.0, seed: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterSection {
    /// Replace noisy snapshot values by local polynomial fits.
    pub enabled: bool,
    pub poly_degree: usize,
    pub n_neighbors: usize,
    /// Uniform points per dimension of the dense noisy observations.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dense_points: Option<usize>,
    /// Solver steps between the dense observation times. Defaults to
    /// `n_steps / n_neighbors`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time_stride: Option<usize>,
}

impl Default for FilterSection {
    fn default() -> Self {
        let f = FilterConfig::default();
        Self {
            enabled: true,
            poly_degree: f.poly_degree,
            n_neighbors: f.n_neighbors,
            dense_points: None,
            time_stride: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecoverySection {
    pub method: Method,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degrees: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_degree: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unknowns: Option<Unknowns>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation: Option<Truncation>,
    pub rank_tol: f64,
}

impl Default for RecoverySection {
    fn default() -> Self {
        Self {
            method: Method::Galerkin,
            degrees: None,
            test_degree: None,
            unknowns: None,
            truncation: None,
            rank_tol: RecoveryOptions::default().rank_tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationSection {
    /// Uniform evaluation points per dimension, endpoints included.
    pub points: usize,
    pub region: EvalRegion,
    /// Relative level defining the data support, see [`EvalRegion::Support`].
    pub support_threshold: f64,
}

impl Default for EvaluationSection {
    fn default() -> Self {
        Self {
            points: 201,
            region: EvalRegion::Support,
            support_threshold: 1e-2,
        }
    }
}

/// Where recovered fields are compared with the truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalRegion {
    /// The whole domain.
    Domain,
    /// The smallest box around the sample points where the observed state
    /// reaches `support_threshold` of its peak. Outside of it the data carry
    /// almost no information on the fields.
    #[default]
    Support,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// Divides grid sizes, the number of times and the dense observation
    /// grid. 1 reproduces the full-size setup.
    pub scale: f64,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: None, scale: 1.0 }
    }
}

/// Values swept by `sweep`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub epsilons: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub methods: Vec<Method>,
}

/// A complete experiment description, read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub sampling: SamplingSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub filter: FilterSection,
    #[serde(default)]
    pub recovery: RecoverySection,
    #[serde(default)]
    pub evaluation: EvaluationSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub sweep: SweepSection,
}

impl ExperimentConfig {
    pub fn new(problem: ProblemSpec) -> Self {
        Self {
            problem,
            solver: Default::default(),
            sampling: Default::default(),
            noise: Default::default(),
            filter: Default::default(),
            recovery: Default::default(),
            evaluation: Default::default(),
            output: Default::default(),
            sweep: Default::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Applies the problem defaults and the scale factor and checks the
    /// result. Runs no computation.
    pub fn resolve(&self) -> Result<Plan> {
        let scale = self.output.scale;
        if !(scale >= 1.0 && scale.is_finite()) {
            return Err(Error::Config(format!("scale {scale} must be at least 1")));
        }
        let shrink = |n: usize, min: usize| ((n as f64 / scale).round() as usize).max(min);
        let def = self.problem.defaults();
        let domain = self.problem.domain()?;
        let dim = domain.dim();

        let scheme = self.solver.scheme.unwrap_or(def.scheme);
        let bc = self.solver.bc.unwrap_or(def.bc);
        let mut n_coll = shrink(self.solver.n_coll.unwrap_or(def.n_coll), 8);
        if scheme == SpatialScheme::Fourier && n_coll % 2 == 1 {
            n_coll += 1;
        }
        let solver = SolverConfig {
            domain: domain.clone(),
            scheme,
            bc,
            n_coll,
            dt: self.solver.dt.unwrap_or(def.dt),
            t_final: self.solver.t_final.unwrap_or(def.t_final),
            initial_condition: self.problem.initial_condition(),
            store: StorePlan::All,
        };
        solver.validate()?;
        let n_steps = solver.n_steps()?;

        let n_master = shrink(self.sampling.n_master.unwrap_or(def.n_master), 1);
        let m = self.sampling.m.map_or(n_master, |m| shrink(m, 1));
        if self.sampling.time_sampling == TimeSampling::WithoutReplacement && m > n_master {
            return Err(Error::Config(format!(
                "M = {m} exceeds the {n_master} master times"
            )));
        }
        let master_steps: Vec<usize> = (1..=n_master)
            .map(|k| ((k as f64 * n_steps as f64) / n_master as f64).round() as usize)
            .collect();
        if master_steps.windows(2).any(|w| w[0] == w[1]) || master_steps[0] == 0 {
            return Err(Error::Config(format!(
                "{n_master} master times do not fit into {n_steps} solver steps"
            )));
        }
        let interior_points = shrink(self.sampling.interior_points.unwrap_or(def.interior_points), 4);
        let boundary_points = match dim {
            1 => 1,
            _ => shrink(self.sampling.boundary_points.unwrap_or(def.boundary_points), 4),
        };

        let epsilon = self.noise.epsilon;
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::Config(format!("noise level {epsilon} must be non-negative")));
        }
        let filter = FilterConfig {
            poly_degree: self.filter.poly_degree,
            n_neighbors: self.filter.n_neighbors,
        };
        filter.validate(dim)?;
        let dense_default = if dim == 1 { 4001 } else { 201 };
        let dense_points = shrink(self.filter.dense_points.unwrap_or(dense_default), 2);
        if epsilon > 0.0 && dense_points.pow(dim as u32) < filter.n_neighbors {
            return Err(Error::Config(format!(
                "{dense_points} dense points per dimension cannot supply {} neighbors",
                filter.n_neighbors
            )));
        }
        // By default the dense time series is just long enough for one
        // neighborhood to span the whole time interval.
        let time_stride = self
            .filter
            .time_stride
            .unwrap_or(n_steps / filter.n_neighbors)
            .max(1);

        let degrees = self.recovery.degrees.clone().unwrap_or(def.degrees);
        if degrees.is_empty() {
            return Err(Error::Config("no trial degrees given".into()));
        }
        let recovery = RecoveryOptions {
            method: self.recovery.method,
            unknowns: self.recovery.unknowns.unwrap_or(def.unknowns),
            test_degree: self.recovery.test_degree.unwrap_or(def.test_degree),
            truncation: self.recovery.truncation.unwrap_or(def.truncation),
            rank_tol: self.recovery.rank_tol,
        };
        if !(recovery.rank_tol >= 0.0) {
            return Err(Error::Config("rank_tol must be non-negative".into()));
        }
        if self.evaluation.points < 2 {
            return Err(Error::Config("need at least two evaluation points".into()));
        }
        let threshold = self.evaluation.support_threshold;
        if !(0.0..1.0).contains(&threshold) {
            return Err(Error::Config(format!("support threshold {threshold} must lie in [0, 1)")));
        }
        Ok(Plan {
            problem: self.problem.clone(),
            solver,
            n_steps,
            master_steps,
            m,
            interior_points,
            boundary_points,
            sampling_seed: self.sampling.seed,
            time_sampling: self.sampling.time_sampling,
            epsilon,
            noise_seed: self.noise.seed,
            filter_enabled: self.filter.enabled && epsilon > 0.0,
            filter,
            dense_points,
            time_stride,
            degrees,
            recovery,
            eval_points: self.evaluation.points,
            eval_region: self.evaluation.region,
            support_threshold: threshold,
        })
    }
}

/// Fully resolved experiment settings.
#[derive(Debug, Clone)]
pub struct Plan {
    pub problem: ProblemSpec,
    /// Storage is decided by the pipeline.
    pub solver: SolverConfig,
    pub n_steps: usize,
    /// Solver steps of the master times.
    pub master_steps: Vec<usize>,
    pub m: usize,
    pub interior_points: usize,
    pub boundary_points: usize,
    pub sampling_seed: u64,
    pub time_sampling: TimeSampling,
    pub epsilon: f64,
    pub noise_seed: u64,
    pub filter_enabled: bool,
    pub filter: FilterConfig,
    pub dense_points: usize,
    pub time_stride: usize,
    pub degrees: Vec<usize>,
    pub recovery: RecoveryOptions,
    pub eval_points: usize,
    pub eval_region: EvalRegion,
    pub support_threshold: f64,
}
