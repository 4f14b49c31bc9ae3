//! Diagnostics for data that cannot determine the coefficients.
//!
//! If a quantity `g(t, x)` entering the equation factors as `T(t)·X(x)` on
//! part of the space-time domain, the coefficient multiplying it is only
//! seen through one fixed spatial profile there and cannot be recovered.
//! The scan samples `g` on the snapshot grid (rows: times in increasing
//! order, columns: interior points in rule order) and checks the singular
//! values of dyadic sub-blocks.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::data::io::fmt_f64;
use crate::data::{DerivativeEstimates, SnapshotSet};
use crate::error::{Error, Result};
use crate::forward::FluxSpec;
use crate::recovery::LeastSquaresSystem;

/// Which quantity is tested.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    /// The flux `F(u)` multiplying the velocity.
    Advection,
    /// The first spatial derivative `∂u/∂x_1` multiplying the diffusivity.
    Diffusion,
    /// The state `u` itself.
    State,
}

impl Role {
    pub fn name(self) -> &'static str {
        match self {
            Role::Advection => "advection",
            Role::Diffusion => "diffusion",
            Role::State => "state",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Numerically rank one.
    Separable,
    /// Numerically rank at most two.
    WeaklySeparable,
    NonSeparable,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Separable => "separable",
            Verdict::WeaklySeparable => "weakly_separable",
            Verdict::NonSeparable => "non_separable",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowResult {
    pub index: usize,
    /// 0 for the full matrix, 1 for halves, 2 for quarters.
    pub level: usize,
    pub rows: (usize, usize),
    pub cols: (usize, usize),
    pub sigma1: f64,
    /// `σ2/σ1`, zero for a zero window.
    pub ratio2: f64,
    /// `σ3/σ1`, zero for a zero window.
    pub ratio3: f64,
    pub tol: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparabilityReport {
    pub role: Role,
    pub windows: Vec<WindowResult>,
}

impl SeparabilityReport {
    /// Verdict on the full matrix.
    pub fn global(&self) -> Verdict {
        self.windows[0].verdict
    }

    /// Most degenerate verdict over all windows.
    pub fn worst(&self) -> Verdict {
        self.windows.iter().map(|w| w.verdict).min().expect("full window always present")
    }

    /// True when some window is rank one.
    pub fn flagged(&self) -> bool {
        self.worst() == Verdict::Separable
    }
}

/// Threshold on the singular value ratios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Tolerance {
    Fixed(f64),
    /// `max(floor, 10·ε·√(rows·cols)/σ1)`: the spectral norm of an i.i.d.
    /// noise matrix grows like `ε·√size`, so ratios below that cannot be
    /// told apart from zero.
    NoiseAware { epsilon: f64, floor: f64 },
}

impl Tolerance {
    fn resolve(self, rows: usize, cols: usize, sigma1: f64) -> f64 {
        match self {
            Tolerance::Fixed(t) => t,
            Tolerance::NoiseAware { epsilon, floor } => {
                if sigma1 > 0.0 {
                    floor.max(10.0 * epsilon * ((rows * cols) as f64).sqrt() / sigma1)
                } else {
                    floor
                }
            }
        }
    }
}

fn split(len: usize, parts: usize) -> Vec<(usize, usize)> {
    (0..parts).map(|k| (k * len / parts, (k + 1) * len / parts)).collect()
}

fn classify(g: &DMatrix<f64>, tol: Tolerance) -> (f64, f64, f64, f64, Verdict) {
    let mut sv: Vec<f64> = g.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let s1 = sv[0];
    let tol = tol.resolve(g.nrows(), g.ncols(), s1);
    if s1 == 0.0 {
        return (0.0, 0.0, 0.0, tol, Verdict::Separable);
    }
    let r2 = sv.get(1).map_or(0.0, |s| s / s1);
    let r3 = sv.get(2).map_or(0.0, |s| s / s1);
    let verdict = if r2 <= tol {
        Verdict::Separable
    } else if r3 <= tol {
        Verdict::WeaklySeparable
    } else {
        Verdict::NonSeparable
    };
    (s1, r2, r3, tol, verdict)
}

/// Scans `g` (rows: times, columns: points) over the full matrix, its 2×2
/// halves and its 4×4 quarters. Levels whose windows would have fewer than
/// three rows or columns are skipped.
pub fn separability_scan(g: &DMatrix<f64>, role: Role, tol: Tolerance) -> Result<SeparabilityReport> {
    if g.nrows() < 3 || g.ncols() < 3 {
        return Err(Error::WindowTooSmall {
            index: 0,
            rows: g.nrows(),
            cols: g.ncols(),
        });
    }
    let mut windows = Vec::new();
    for level in 0..=2usize {
        let parts = 1 << level;
        if g.nrows() / parts < 3 || g.ncols() / parts < 3 {
            break;
        }
        for &rows in &split(g.nrows(), parts) {
            for &cols in &split(g.ncols(), parts) {
                let block = g.view((rows.0, cols.0), (rows.1 - rows.0, cols.1 - cols.0)).into_owned();
                let (sigma1, ratio2, ratio3, tol, verdict) = classify(&block, tol);
                windows.push(WindowResult {
                    index: windows.len(),
                    level,
                    rows,
                    cols,
                    sigma1,
                    ratio2,
                    ratio3,
                    tol,
                    verdict,
                });
            }
        }
    }
    Ok(SeparabilityReport { role, windows })
}

/// Samples `f(t, x)` on a tensor grid, rows over `times`, columns over
/// `points`.
pub fn sample_matrix(times: &[f64], points: &[Vec<f64>], f: impl Fn(f64, &[f64]) -> f64) -> DMatrix<f64> {
    DMatrix::from_fn(times.len(), points.len(), |i, j| f(times[i], &points[j]))
}

/// Builds the matrix for `role` from snapshot data, rows sorted by time.
pub fn role_matrix(
    role: Role,
    s: &SnapshotSet,
    derivs: Option<&DerivativeEstimates>,
    flux: FluxSpec,
) -> Result<DMatrix<f64>> {
    s.validate()?;
    let mut order: Vec<usize> = (0..s.n_times()).collect();
    order.sort_by(|&a, &b| s.times[a].total_cmp(&s.times[b]));
    let q = s.interior.len();
    match role {
        Role::State => Ok(DMatrix::from_fn(order.len(), q, |i, j| s.interior_values[order[i]][j])),
        Role::Advection => Ok(DMatrix::from_fn(order.len(), q, |i, j| {
            flux.value(s.interior_values[order[i]][j])
        })),
        Role::Diffusion => {
            let g = derivs
                .and_then(|d| d.grad_interior.as_ref())
                .ok_or(Error::Missing("interior gradient estimates"))?;
            Ok(DMatrix::from_fn(order.len(), q, |i, j| g[order[i]][j][0]))
        }
    }
}

/// Runs the scan for every role the data support.
pub fn scan_snapshots(
    s: &SnapshotSet,
    derivs: Option<&DerivativeEstimates>,
    flux: FluxSpec,
    tol: Tolerance,
) -> Result<Vec<SeparabilityReport>> {
    let mut roles = vec![Role::Advection];
    if derivs.is_some_and(|d| d.grad_interior.is_some()) {
        roles.push(Role::Diffusion);
    }
    roles.push(Role::State);
    roles
        .into_iter()
        .map(|r| separability_scan(&role_matrix(r, s, derivs, flux)?, r, tol))
        .collect()
}

pub fn reports_csv(reports: &[SeparabilityReport]) -> String {
    let mut out = String::from("role,window,level,row_start,row_end,col_start,col_end,sigma1,ratio2,ratio3,tol,verdict\n");
    for r in reports {
        for w in &r.windows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                r.role.name(),
                w.index,
                w.level,
                w.rows.0,
                w.rows.1,
                w.cols.0,
                w.cols.1,
                fmt_f64(w.sigma1),
                fmt_f64(w.ratio2),
                fmt_f64(w.ratio3),
                fmt_f64(w.tol),
                w.verdict.name()
            );
        }
    }
    out
}

pub fn reports_text(reports: &[SeparabilityReport]) -> String {
    let mut out = String::new();
    for r in reports {
        let flagged = r.windows.iter().filter(|w| w.verdict == Verdict::Separable).count();
        let weak = r.windows.iter().filter(|w| w.verdict == Verdict::WeaklySeparable).count();
        let _ = writeln!(
            out,
            "{}: global {} (sigma2/sigma1 = {:.3e}, sigma3/sigma1 = {:.3e}); {} of {} windows separable, {} weakly separable",
            r.role.name(),
            r.global().name(),
            r.windows[0].ratio2,
            r.windows[0].ratio3,
            flagged,
            r.windows.len(),
            weak
        );
    }
    out
}

/// Spectrum of the normal matrix and the resulting uniqueness prediction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditioningReport {
    /// Ascending eigenvalues.
    pub eigenvalues: Vec<f64>,
    pub ratio: f64,
    pub rank_tol: f64,
    pub unique: bool,
}

pub fn conditioning_report(sys: &LeastSquaresSystem, rank_tol: f64) -> ConditioningReport {
    ConditioningReport::from_spectrum(sys.spectrum(), rank_tol)
}

impl ConditioningReport {
    /// From ascending eigenvalues.
    pub fn from_spectrum(eigenvalues: Vec<f64>, rank_tol: f64) -> Self {
        let hi = eigenvalues.last().copied().unwrap_or(0.0);
    let ratio = if hi > 0.0 { eigenvalues[0] / hi } else { 0.0 };
        Self {
            eigenvalues,
            ratio,
            rank_tol,
            unique: ratio >= rank_tol,
        }
    }

    pub fn text(&self) -> String {
        format!(
            "normal matrix: {} eigenvalues in [{:.3e}, {:.3e}], ratio {:.3e} ({} at tolerance {:.1e})\n",
            self.eigenvalues.len(),
            self.eigenvalues.first().copied().unwrap_or(0.0),
            self.eigenvalues.last().copied().unwrap_or(0.0),
            self.ratio,
            if self.unique { "unique" } else { "not unique" },
            self.rank_tol
        )
    }
}
