//! End-to-end experiments on the benchmark problems: forward solve,
//! sampling, noise and filtering, recovery over a list of trial degrees,
//! diagnostics, and the files that record them.

mod config;
mod problem;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::basis::BoxDomain;
use crate::data::io::{fmt_f64, snapshots_csv, write_snapshots};
use crate::data::{
    add_noise, estimate_boundary_gradient, estimate_interior_derivatives, estimate_time_derivative, filter, sample,
    DenseSource, DerivativeEstimates, DerivativeMethod, SnapshotSet,
};
use crate::diagnostics::{self, ConditioningReport, SeparabilityReport, Tolerance};
use crate::error::{Error, Result};
use crate::forward::{self, SolutionTrajectory, StorePlan};
use crate::quadrature::{gauss_boundary, gauss_interior, QuadratureRule};
use crate::recovery::{self, CoefficientSolution, FieldErrors, Method};

pub use config::{
    EvalRegion, EvaluationSection, ExperimentConfig, FilterSection, NoiseSection, OutputSection, Plan, RecoverySection,
    SamplingSection, SolverSection, SweepSection,
};
pub use problem::{AdvDiff1d, AdvDiff2d, Advection1d, Burgers1d, Defaults, Diffusion1d, ProblemSpec};

/// Environment variable naming the default output root.
pub const OUTPUT_ROOT_ENV: &str = "COEFID_OUT";

impl Plan {
    pub fn master_times(&self) -> Vec<f64> {
        self.master_steps.iter().map(|&s| s as f64 * self.solver.dt).collect()
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.solver.domain
    }

    /// Box on which errors are measured for the given data.
    pub fn evaluation_box(&self, s: &SnapshotSet) -> BoxDomain {
        match self.eval_region {
            EvalRegion::Domain => self.domain().clone(),
            EvalRegion::Support => s.support_box(self.support_threshold).unwrap_or_else(|| self.domain().clone()),
        }
    }

    /// Uniform grid on `region`, tensor in 2D, as an equal-weight rule so
    /// errors are discrete relative `ℓ²` norms.
    pub fn evaluation_rule(&self, region: &BoxDomain) -> QuadratureRule {
        let n = self.eval_points;
        let axis = |k: usize| -> Vec<f64> {
            (0..n)
                .map(|i| region.lower()[k] + region.width(k) * i as f64 / (n - 1) as f64)
                .collect()
        };
        let points: Vec<Vec<f64>> = match region.dim() {
            1 => axis(0).into_iter().map(|x| vec![x]).collect(),
            _ => {
                let (xs, ys) = (axis(0), axis(1));
                ys.iter().flat_map(|&y| xs.iter().map(move |&x| vec![x, y])).collect()
            }
        };
        let w = vec![1.0; points.len()];
        QuadratureRule::new(points, w, 0, n)
    }

    fn derivative_method(&self) -> DerivativeMethod {
        DerivativeMethod::for_noise(self.epsilon)
    }
}

/// Runs the forward model, keeping the levels later stages need: the master
/// times and their neighbors for noiseless data, every `time_stride`-th step
/// as well when noisy time series are requested.
pub fn solve_forward(plan: &Plan, noisy: bool) -> Result<SolutionTrajectory> {
    let mut steps: Vec<usize> = vec![0];
    for &s in &plan.master_steps {
        steps.extend([s.saturating_sub(2), s.saturating_sub(1), s, s + 1, s + 2]);
    }
    if noisy {
        steps.extend((0..=plan.n_steps).step_by(plan.time_stride));
    }
    let mut cfg = plan.solver.clone();
    cfg.store = StorePlan::Steps(steps);
    forward::solve(&cfg, &plan.problem.coefficients())
}

/// Snapshots with everything recovery and diagnostics read.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub snapshots: SnapshotSet,
    pub derivs: DerivativeEstimates,
    /// Where errors are measured.
    pub eval_box: BoxDomain,
}

/// Sampling, noise, optional filtering and derivative estimation.
pub fn prepare(plan: &Plan, traj: &SolutionTrajectory) -> Result<Prepared> {
    let d = plan.domain();
    let interior = gauss_interior(d, plan.interior_points);
    let boundary = gauss_boundary(d, plan.boundary_points);
    let clean = sample(
        traj,
        &plan.master_times(),
        plan.m,
        &interior,
        &boundary,
        plan.sampling_seed,
        plan.time_sampling,
    )?;
    let mut s = add_noise(&clean, plan.epsilon, plan.noise_seed)?;
    s.rng_seed = plan.sampling_seed;
    let source = DenseSource::new(traj, plan.epsilon, plan.noise_seed, plan.dense_points, plan.time_stride);
    if plan.filter_enabled {
        s = filter(&s, &plan.filter, &source)?;
    }
    let method = plan.derivative_method();
    let derivs = estimate_time_derivative(&s, &source, &plan.filter, method)?
        .merge(estimate_boundary_gradient(&s, &source, &plan.filter, method)?)
        .merge(estimate_interior_derivatives(&s, &source, &plan.filter, method)?);
    let eval_box = plan.evaluation_box(&s);
    Ok(Prepared {
        snapshots: s,
        derivs,
        eval_box,
    })
}

impl Prepared {
    /// Wraps snapshots and derivative estimates read back from disk.
    pub fn from_parts(plan: &Plan, snapshots: SnapshotSet, derivs: DerivativeEstimates) -> Self {
        let eval_box = plan.evaluation_box(&snapshots);
        Self {
            snapshots,
            derivs,
            eval_box,
        }
    }
}

/// The state at the master times on the solver grid:
/// `t,x[,y],u`, one row per node and time.
pub fn trajectory_csv(plan: &Plan, traj: &SolutionTrajectory) -> String {
    let grid = traj.grid();
    let points = grid.points();
    let mut out = match grid.dim() {
        1 => String::from("t,x,u\n"),
        _ => String::from("t,x,y,u\n"),
    };
    for &step in &plan.master_steps {
        let Some(level) = traj.level_of_step(step) else { continue };
        let t = fmt_f64(traj.times()[level]);
        for (x, u) in points.iter().zip(traj.level_values(level)) {
            let coords: Vec<String> = x.iter().map(|v| fmt_f64(*v)).collect();
            let _ = writeln!(out, "{t},{},{}", coords.join(","), fmt_f64(*u));
        }
    }
    out
}

/// Outcome of one trial degree.
#[derive(Debug, Clone)]
pub struct DegreeResult {
    pub degree: usize,
    pub method: Method,
    pub outcome: std::result::Result<(CoefficientSolution, FieldErrors), DegreeFailure>,
}

/// Why a degree produced no solution.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeFailure {
    pub kind: &'static str,
    pub message: String,
    pub exit_code: i32,
    /// Eigenvalue ratio when the failure is non-uniqueness.
    pub ratio: Option<f64>,
}

impl DegreeResult {
    pub fn errors(&self) -> Option<&FieldErrors> {
        self.outcome.as_ref().ok().map(|(_, e)| e)
    }

    pub fn ratio(&self) -> f64 {
        match &self.outcome {
            Ok((s, _)) => s.eigenvalue_ratio(),
            Err(f) => f.ratio.unwrap_or(f64::NAN),
        }
    }
}

/// Recovers at every degree of the plan, in parallel.
pub fn recover_degrees(plan: &Plan, prepared: &Prepared) -> Vec<DegreeResult> {
    let truth = plan.problem.coefficients();
    let rule = plan.evaluation_rule(&prepared.eval_box);
    plan.degrees
        .par_iter()
        .map(|&n| {
            let outcome = recovery::recover(
                &prepared.snapshots,
                &prepared.derivs,
                n,
                truth.flux,
                &plan.recovery,
            )
            .and_then(|sol| {
                let e = sol.relative_errors(&truth, &rule)?;
                Ok((sol, e))
            })
            .map_err(|e| DegreeFailure {
                kind: e.kind(),
                message: e.to_string(),
                exit_code: e.exit_code(),
                ratio: match &e {
                    Error::NonUniqueSolution { ratio, .. } => Some(*ratio),
                    _ => None,
                },
            });
            DegreeResult {
                degree: n,
                method: plan.recovery.method,
                outcome,
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct Diagnosis {
    pub separability: Vec<SeparabilityReport>,
    /// For the first degree that assembled.
    pub conditioning: Option<(usize, ConditioningReport)>,
}

pub fn diagnose(plan: &Plan, prepared: &Prepared, results: &[DegreeResult]) -> Result<Diagnosis> {
    let tol = if plan.epsilon > 0.0 {
        Tolerance::NoiseAware {
            epsilon: plan.epsilon,
            floor: 1e-8,
        }
    } else {
        Tolerance::Fixed(1e-8)
    };
    let separability = diagnostics::scan_snapshots(
        &prepared.snapshots,
        Some(&prepared.derivs),
        plan.problem.coefficients().flux,
        tol,
    )?;
    let conditioning = results.iter().find_map(|r| match &r.outcome {
        Ok((sol, _)) => Some((
            r.degree,
            ConditioningReport::from_spectrum(sol.spectrum.clone(), plan.recovery.rank_tol),
        )),
        Err(_) => None,
    });
    Ok(Diagnosis {
        separability,
        conditioning,
    })
}

fn error_columns(plan: &Plan) -> Vec<String> {
    let dim = plan.domain().dim();
    let mut cols = Vec::new();
    if plan.recovery.unknowns.has_alpha() {
        if dim == 1 {
            cols.push("err_alpha".to_string());
        } else {
            cols.extend((1..=dim).map(|l| format!("err_alpha_{l}")));
        }
    }
    if plan.recovery.unknowns.has_kappa() {
        cols.push("err_kappa".to_string());
    }
    cols
}

fn error_cells(plan: &Plan, r: &DegreeResult) -> String {
    let n = error_columns(plan).len();
    let values: Vec<f64> = match r.errors() {
        Some(e) => e.alpha.iter().copied().chain(e.kappa).collect(),
        None => vec![f64::NAN; n],
    };
    values.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(",")
}

fn status(r: &DegreeResult) -> &'static str {
    match &r.outcome {
        Ok(_) => "ok",
        Err(f) => f.kind,
    }
}

/// One row per degree: `problem,method,degree,epsilon,filtered,status,err_…,eig_ratio,objective`.
pub fn errors_csv(plan: &Plan, results: &[DegreeResult]) -> String {
    let mut out = format!(
        "problem,method,degree,epsilon,filtered,status,{},eig_ratio,objective\n",
        error_columns(plan).join(",")
    );
    for r in results {
        let objective = r.outcome.as_ref().map_or(f64::NAN, |(s, _)| s.objective);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            plan.problem.name(),
            r.method.name(),
            r.degree,
            fmt_f64(plan.epsilon),
            plan.filter_enabled,
            status(r),
            error_cells(plan, r),
            fmt_f64(r.ratio()),
            fmt_f64(objective)
        );
    }
    out
}

/// Everything a run produced.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub prepared: Prepared,
    pub results: Vec<DegreeResult>,
    pub diagnosis: Diagnosis,
    /// `(stage, seconds)` in execution order.
    pub timings: Vec<(String, f64)>,
    pub files: Vec<PathBuf>,
}

impl RunReport {
    /// The first failed degree, if any.
    pub fn failure(&self) -> Option<ErrorRecord> {
        failure(&self.results)
    }
}

/// The first failed degree, if any.
pub fn failure(results: &[DegreeResult]) -> Option<ErrorRecord> {
    results.iter().find_map(ErrorRecord::from_degree)
}

#[derive(Serialize)]
struct Manifest<'a> {
    crate_version: &'static str,
    problem: &'static str,
    sampling_seed: u64,
    noise_seed: u64,
    resolved: ResolvedSizes,
    timings: Vec<Timing>,
    files: Vec<String>,
    config: &'a ExperimentConfig,
}

#[derive(Serialize)]
struct ResolvedSizes {
    n_coll: usize,
    dt: f64,
    t_final: f64,
    n_steps: usize,
    n_master: usize,
    m: usize,
    interior_points: usize,
    boundary_points: usize,
    dense_points: usize,
    time_stride: usize,
    filtered: bool,
    degrees: Vec<usize>,
    test_degree: usize,
    eval_lower: Vec<f64>,
    eval_upper: Vec<f64>,
}

#[derive(Serialize)]
struct Timing {
    stage: String,
    seconds: f64,
}

fn write_file(dir: &Path, name: &str, contents: &[u8], files: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents)?;
    files.push(path);
    Ok(())
}

/// Writes the manifest, listing the files already written.
fn write_manifest(
    dir: &Path,
    config: &ExperimentConfig,
    plan: &Plan,
    eval_box: &BoxDomain,
    timings: &[(String, f64)],
    files: &mut Vec<PathBuf>,
) -> Result<()> {
    let manifest = Manifest {
        crate_version: env!("CARGO_PKG_VERSION"),
        problem: plan.problem.name(),
        sampling_seed: plan.sampling_seed,
        noise_seed: plan.noise_seed,
        resolved: ResolvedSizes {
            n_coll: plan.solver.n_coll,
            dt: plan.solver.dt,
            t_final: plan.solver.t_final,
            n_steps: plan.n_steps,
            n_master: plan.master_steps.len(),
            m: plan.m,
            interior_points: plan.interior_points,
            boundary_points: plan.boundary_points,
            dense_points: plan.dense_points,
            time_stride: plan.time_stride,
            filtered: plan.filter_enabled,
            degrees: plan.degrees.clone(),
            test_degree: plan.recovery.test_degree,
            eval_lower: eval_box.lower().to_vec(),
            eval_upper: eval_box.upper().to_vec(),
        },
        timings: timings
            .iter()
            .map(|(s, t)| Timing {
                stage: s.clone(),
                seconds: *t,
            })
            .collect(),
        files: files
            .iter()
            .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .collect(),
        config,
    };
    let text = toml::to_string(&manifest).map_err(|e| Error::Format(e.to_string()))?;
    write_file(dir, "manifest.toml", text.as_bytes(), files)
}

/// A failure as recorded in `error.toml`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorRecord {
    pub kind: String,
    pub exit_code: i32,
    pub message: String,
    /// Trial degree, when the failure belongs to one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degree: Option<usize>,
}

impl From<&Error> for ErrorRecord {
    fn from(e: &Error) -> Self {
        Self {
            kind: e.kind().to_string(),
            exit_code: e.exit_code(),
            message: e.to_string(),
            degree: None,
        }
    }
}

impl ErrorRecord {
    fn from_degree(r: &DegreeResult) -> Option<Self> {
        r.outcome.as_ref().err().map(|f| Self {
            kind: f.kind.to_string(),
            exit_code: f.exit_code,
            message: f.message.clone(),
            degree: Some(r.degree),
        })
    }

    /// Writes `error.toml` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let path = dir.join("error.toml");
        let text = toml::to_string(self).map_err(|e| Error::Format(e.to_string()))?;
        fs::write(&path, text)?;
        Ok(path)
    }
}

/// Writes snapshots, solutions, errors and diagnostics of a run.
pub fn write_outputs(
    dir: &Path,
    config: &ExperimentConfig,
    plan: &Plan,
    report: &mut RunReport,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    let stale = dir.join("error.toml");
    if stale.exists() {
        fs::remove_file(stale)?;
    }
    let mut files = Vec::new();
    let mut bin = Vec::new();
    write_snapshots(&mut bin, &report.prepared.snapshots, Some(&report.prepared.derivs))?;
    write_file(dir, "snapshots.bin", &bin, &mut files)?;
    write_file(dir, "snapshots.csv", snapshots_csv(&report.prepared.snapshots).as_bytes(), &mut files)?;
    let truth = plan.problem.coefficients();
    let eval = plan.evaluation_rule(&report.prepared.eval_box);
    for r in &report.results {
        if let Ok((sol, _)) = &r.outcome {
            write_file(dir, &format!("solution_n{}.txt", r.degree), sol.to_text().as_bytes(), &mut files)?;
            let csv = sol.fields_csv(eval.points(), Some(&truth))?;
            write_file(dir, &format!("fields_n{}.csv", r.degree), csv.as_bytes(), &mut files)?;
        }
    }
    write_file(dir, "errors.csv", errors_csv(plan, &report.results).as_bytes(), &mut files)?;
    let sep = &report.diagnosis.separability;
    write_file(dir, "separability.csv", diagnostics::reports_csv(sep).as_bytes(), &mut files)?;
    let mut text = diagnostics::reports_text(sep);
    if plan.epsilon > 0.0 {
        text.push_str("tolerance: noise-aware heuristic 10*eps*sqrt(window size)/sigma1\n");
    }
    if let Some((n, c)) = &report.diagnosis.conditioning {
        let _ = write!(text, "degree {n} ");
        text.push_str(&c.text());
    }
    write_file(dir, "separability.txt", text.as_bytes(), &mut files)?;
    if let Some(record) = report.failure() {
        files.push(record.write(dir)?);
    }
    write_manifest(dir, config, plan, &report.prepared.eval_box, &report.timings, &mut files)?;
    report.files = files;
    Ok(())
}

/// Full pipeline. Artifacts are written to `out` when given. A degree that
/// fails does not stop the others; see [`RunReport::failure`].
pub fn run(config: &ExperimentConfig, out: Option<&Path>) -> Result<RunReport> {
    let plan = config.resolve()?;
    let mut timings = Vec::new();
    let clock = Instant::now();
    let traj = solve_forward(&plan, plan.epsilon > 0.0)?;
    timings.push(("solve".to_string(), clock.elapsed().as_secs_f64()));
    let clock = Instant::now();
    let prepared = prepare(&plan, &traj)?;
    timings.push(("prepare".to_string(), clock.elapsed().as_secs_f64()));
    drop(traj);
    let clock = Instant::now();
    let results = recover_degrees(&plan, &prepared);
    timings.push(("recover".to_string(), clock.elapsed().as_secs_f64()));
    let clock = Instant::now();
    let diagnosis = diagnose(&plan, &prepared, &results)?;
    timings.push(("diagnose".to_string(), clock.elapsed().as_secs_f64()));
    let mut report = RunReport {
        prepared,
        results,
        diagnosis,
        timings,
        files: Vec::new(),
    };
    if let Some(dir) = out {
        write_outputs(dir, config, &plan, &mut report)?;
    }
    Ok(report)
}

/// What `sweep` varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    /// The trial degrees of the config.
    Degree,
    /// `sweep.epsilons` (default `1e-3, 1e-4`), each with and without filtering.
    Noise,
    /// `sweep.methods` (default Galerkin and collocation).
    Method,
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub epsilon: f64,
    pub filtered: bool,
    pub result: DegreeResult,
    pub seconds: f64,
}

/// Runs the pipeline across the swept values on one forward solution, with
/// at most `jobs` points in flight.
pub fn sweep(config: &ExperimentConfig, parameter: SweepParameter, jobs: usize) -> Result<(Plan, Vec<SweepRow>)> {
    let base = config.resolve()?;
    let mut points: Vec<Plan> = Vec::new();
    match parameter {
        SweepParameter::Degree => points.push(base.clone()),
        SweepParameter::Noise => {
            let eps = if config.sweep.epsilons.is_empty() {
                vec![1e-3, 1e-4]
            } else {
                config.sweep.epsilons.clone()
            };
            for e in eps {
                for filtered in [true, false] {
                    let mut p = base.clone();
                    p.epsilon = e;
                    p.filter_enabled = filtered && e > 0.0;
                    points.push(p);
                }
            }
        }
        SweepParameter::Method => {
            let methods = if config.sweep.methods.is_empty() {
                vec![Method::Galerkin, Method::Collocation]
            } else {
                config.sweep.methods.clone()
            };
            for m in methods {
                let mut p = base.clone();
                p.recovery.method = m;
                points.push(p);
            }
        }
    }
    let noisy = points.iter().any(|p| p.epsilon > 0.0);
    let traj = solve_forward(&base, noisy)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let rows = pool.install(|| {
        points
            .par_iter()
            .map(|p| -> Result<Vec<SweepRow>> {
                let clock = Instant::now();
                let prepared = prepare(p, &traj)?;
                let prep_time = clock.elapsed().as_secs_f64();
                let results = recover_degrees(p, &prepared);
                let per = (clock.elapsed().as_secs_f64() - prep_time) / results.len() as f64;
                Ok(results
                    .into_iter()
                    .map(|r| SweepRow {
                        epsilon: p.epsilon,
                        filtered: p.filter_enabled,
                        result: r,
                        seconds: prep_time + per,
                    })
                    .collect())
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok((base, rows.into_iter().flatten().collect()))
}

/// One row per sweep point:
/// `problem,method,degree,epsilon,filtered,status,err_…,eig_ratio,seconds`.
pub fn sweep_csv(plan: &Plan, rows: &[SweepRow]) -> String {
    let mut out = format!(
        "problem,method,degree,epsilon,filtered,status,{},eig_ratio,seconds\n",
        error_columns(plan).join(",")
    );
    for row in rows {
        let r = &row.result;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            plan.problem.name(),
            r.method.name(),
            r.degree,
            fmt_f64(row.epsilon),
            row.filtered,
            status(r),
            error_cells(plan, r),
            fmt_f64(r.ratio()),
            fmt_f64(row.seconds)
        );
    }
    out
}
