//! Least-squares identification of the velocity and diffusivity fields.
//!
//! With `α_ℓ = Σ a^ℓ_i φ_i` and `κ = Σ k_i φ_i`, the weak form tested
//! against `ψ_j` is linear in `c = [a^1, …, a^d, k]`:
//! `∫ u_t ψ_j = (E c)_j` at every snapshot time. The Galerkin estimate
//! minimizes `Σ_m w_m ‖E_m c − b_m‖²` through the normal matrix
//! `Ξ = Σ_m w_m E_mᵀ E_m`. The collocation estimate does the same with the
//! strong-form residual at the interior quadrature points.

mod assembly;
mod format;

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::{BasisSet, Truncation};
use crate::data::io::fmt_f64;
use crate::data::{DerivativeEstimates, SnapshotSet};
use crate::error::{Error, Result};
use crate::forward::{CoefficientFields, FluxSpec};
use crate::quadrature::QuadratureRule;

pub use assembly::{assemble_collocation, assemble_galerkin, GalerkinAssembler, GalerkinBlocks};
pub use format::{format_hex_f64, parse_hex_f64};

/// Which fields are recovered. Fields left out are taken to be zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unknowns {
    Alpha,
    Kappa,
    #[default]
    Both,
}

impl Unknowns {
    pub fn has_alpha(self) -> bool {
        matches!(self, Unknowns::Alpha | Unknowns::Both)
    }

    pub fn has_kappa(self) -> bool {
        matches!(self, Unknowns::Kappa | Unknowns::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Galerkin,
    Collocation,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Galerkin => "galerkin",
            Method::Collocation => "collocation",
        }
    }
}

/// Position of each field's coefficients inside `c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub dim: usize,
    /// Trial basis size per field.
    pub n: usize,
    pub unknowns: Unknowns,
}

impl Layout {
    pub fn n_fields(&self) -> usize {
        let a = if self.unknowns.has_alpha() { self.dim } else { 0 };
        a + self.unknowns.has_kappa() as usize
    }

    pub fn len(&self) -> usize {
        self.n_fields() * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Offset of `a^ℓ`. Only meaningful when alpha is recovered.
    pub fn alpha_offset(&self, l: usize) -> usize {
        l * self.n
    }

    /// Offset of `k`. Only meaningful when kappa is recovered.
    pub fn kappa_offset(&self) -> usize {
        if self.unknowns.has_alpha() {
            self.dim * self.n
        } else {
            0
        }
    }
}

/// `min Σ_m w_m ‖E_m c − b_m‖²` kept in block form so residuals can be
/// formed without the normal equations.
#[derive(Debug, Clone)]
pub struct LeastSquaresSystem {
    pub blocks: Vec<DMatrix<f64>>,
    pub rhs: Vec<DVector<f64>>,
    pub weights: Vec<f64>,
    pub layout: Layout,
    pub method: Method,
}

impl LeastSquaresSystem {
    /// `Ξ = Σ_m w_m E_mᵀ E_m`.
    pub fn normal_matrix(&self) -> DMatrix<f64> {
        let p = self.layout.len();
        let mut xi = DMatrix::zeros(p, p);
        for (e, &w) in self.blocks.iter().zip(&self.weights) {
            xi.gemm_tr(w, e, e, 1.0);
        }
        // Exact symmetry keeps the eigen solver and Cholesky consistent.
        let sym = (&xi + xi.transpose()) * 0.5;
        sym
    }

    /// `Σ_m w_m E_mᵀ b_m`.
    pub fn normal_rhs(&self) -> DVector<f64> {
        let mut r = DVector::zeros(self.layout.len());
        for ((e, b), &w) in self.blocks.iter().zip(&self.rhs).zip(&self.weights) {
            r.gemv_tr(w, e, b, 1.0);
        }
        r
    }

    /// `Σ_m w_m E_mᵀ (b_m − E_m c)`.
    fn normal_residual(&self, c: &DVector<f64>) -> DVector<f64> {
        let mut r = DVector::zeros(self.layout.len());
        for ((e, b), &w) in self.blocks.iter().zip(&self.rhs).zip(&self.weights) {
            let res = b - e * c;
            r.gemv_tr(w, e, &res, 1.0);
        }
        r
    }

    /// `J(c) = Σ_m w_m ‖E_m c − b_m‖²`.
    pub fn objective(&self, c: &[f64]) -> f64 {
        let c = DVector::from_column_slice(c);
        self.blocks
            .iter()
            .zip(&self.rhs)
            .zip(&self.weights)
            .map(|((e, b), w)| w * (e * &c - b).norm_squared())
            .sum()
    }

    /// All blocks stacked with rows scaled by `√w_m`.
    pub fn stacked(&self) -> (DMatrix<f64>, DVector<f64>) {
        let rows: usize = self.blocks.iter().map(|e| e.nrows()).sum();
        let p = self.layout.len();
        let mut a = DMatrix::zeros(rows, p);
        let mut b = DVector::zeros(rows);
        let mut r0 = 0;
        for ((e, rhs), &w) in self.blocks.iter().zip(&self.rhs).zip(&self.weights) {
            let sw = w.sqrt();
            a.rows_mut(r0, e.nrows()).copy_from(&(e * sw));
            b.rows_mut(r0, e.nrows()).copy_from(&(rhs * sw));
            r0 += e.nrows();
        }
        (a, b)
    }

    /// Ascending eigenvalues of `Ξ`.
    pub fn spectrum(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.normal_matrix().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

/// Solves the least-squares system.
///
/// Fails with [`Error::NonUniqueSolution`] when `λ_min(Ξ)/λ_max(Ξ)` is below
/// `rank_tol`. Otherwise the normal equations are solved by Cholesky and the
/// result refined with residuals formed from the blocks themselves, which
/// recovers the accuracy of an orthogonal-factorization solve for moderately
/// conditioned systems.
pub fn solve_least_squares(sys: &LeastSquaresSystem, rank_tol: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if sys.layout.is_empty() {
        return Err(Error::Config("no unknown fields selected".into()));
    }
    let xi = sys.normal_matrix();
    let eig = xi.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let spectrum: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let lmax = *spectrum.last().expect("non-empty layout");
    let lmin = spectrum[0];
    let ratio = if lmax > 0.0 { lmin / lmax } else { 0.0 };
    if !(ratio >= rank_tol) {
        let cutoff = rank_tol * lmax.max(0.0);
        let null_basis = order
            .iter()
            .filter(|&&i| eig.eigenvalues[i] <= cutoff)
            .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
            .collect();
        return Err(Error::NonUniqueSolution { ratio, null_basis });
    }

    let rhs = sys.normal_rhs();
    let solve = |r: &DVector<f64>| -> Result<DVector<f64>> {
        match xi.clone().cholesky() {
            Some(ch) => Ok(ch.solve(r)),
            None => xi.clone().lu().solve(r).ok_or(Error::SingularSystem),
        }
    };
    let mut c = solve(&rhs)?;
    for _ in 0..2 {
        let delta = solve(&sys.normal_residual(&c))?;
        c += delta;
    }
    Ok((c.iter().copied().collect(), spectrum))
}

/// Settings for [`recover`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecoveryOptions {
    pub method: Method,
    pub unknowns: Unknowns,
    /// Degree of the Galerkin test space.
    pub test_degree: usize,
    pub truncation: Truncation,
    pub rank_tol: f64,
}

impl Default for RecoveryOptions {
    fn default() -> Self {
        Self {
            method: Method::Galerkin,
            unknowns: Unknowns::Both,
            test_degree: 50,
            truncation: Truncation::TotalDegree,
            rank_tol: 1e-12,
        }
    }
}

/// Recovers the coefficient fields in the trial space of `degree`.
pub fn recover(
    s: &SnapshotSet,
    derivs: &DerivativeEstimates,
    degree: usize,
    flux: FluxSpec,
    opts: &RecoveryOptions,
) -> Result<CoefficientSolution> {
    let domain = s_domain(s)?;
    let trial = BasisSet::new(domain.clone(), degree, opts.truncation);
    let sys = match opts.method {
        Method::Galerkin => {
            let test = BasisSet::new(domain, opts.test_degree, opts.truncation);
            assemble_galerkin(s, derivs, &trial, &test, flux, opts.unknowns)?
        }
        Method::Collocation => assemble_collocation(s, derivs, &trial, flux, opts.unknowns)?,
    };
    let (c, spectrum) = solve_least_squares(&sys, opts.rank_tol)?;
    let objective = sys.objective(&c);
    Ok(CoefficientSolution {
        method: opts.method,
        unknowns: opts.unknowns,
        basis: trial,
        coefficients: c,
        objective,
        spectrum,
        test_degree: (opts.method == Method::Galerkin).then_some(opts.test_degree),
    })
}

/// Bounding box of the snapshot geometry, taken from the boundary rule.
fn s_domain(s: &SnapshotSet) -> Result<crate::basis::BoxDomain> {
    let pts = s.boundary.points();
    let dim = s.dim();
    if pts.is_empty() || dim == 0 {
        return Err(Error::Missing("boundary points"));
    }
    let lower = (0..dim)
        .map(|k| pts.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min))
        .collect();
    let upper = (0..dim)
        .map(|k| pts.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    crate::basis::BoxDomain::new(lower, upper)
}

/// Relative `L²` errors of a recovered solution against the truth.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldErrors {
    /// One entry per velocity component; empty when alpha was not recovered.
    pub alpha: Vec<f64>,
    pub kappa: Option<f64>,
}

/// Recovered coefficients with the data needed to evaluate and report them.
#[derive(Debug, Clone)]
pub struct CoefficientSolution {
    pub method: Method,
    pub unknowns: Unknowns,
    pub basis: BasisSet,
    pub coefficients: Vec<f64>,
    /// `J(c)` at the solution.
    pub objective: f64,
    /// Ascending eigenvalues of the normal matrix.
    pub spectrum: Vec<f64>,
    pub test_degree: Option<usize>,
}

impl CoefficientSolution {
    pub fn layout(&self) -> Layout {
        Layout {
            dim: self.basis.dim(),
            n: self.basis.len(),
            unknowns: self.unknowns,
        }
    }

    pub fn alpha_coefficients(&self, l: usize) -> Option<&[f64]> {
        let lay = self.layout();
        (self.unknowns.has_alpha() && l < lay.dim).then(|| &self.coefficients[lay.alpha_offset(l)..][..lay.n])
    }

    pub fn kappa_coefficients(&self) -> Option<&[f64]> {
        let lay = self.layout();
        self.unknowns
            .has_kappa()
            .then(|| &self.coefficients[lay.kappa_offset()..][..lay.n])
    }

    /// `α_ℓ(x)`, zero when alpha was not recovered.
    pub fn alpha(&self, l: usize, x: &[f64]) -> Result<f64> {
        match self.alpha_coefficients(l) {
            Some(a) => self.basis.combine(a, x),
            None => Ok(0.0),
        }
    }

    /// `κ(x)`, zero when kappa was not recovered.
    pub fn kappa(&self, x: &[f64]) -> Result<f64> {
        match self.kappa_coefficients() {
            Some(k) => self.basis.combine(k, x),
            None => Ok(0.0),
        }
    }

    pub fn eigenvalue_ratio(&self) -> f64 {
        match (self.spectrum.first(), self.spectrum.last()) {
            (Some(&lo), Some(&hi)) if hi > 0.0 => lo / hi,
            _ => 0.0,
        }
    }

    /// Discrete relative `L²` errors on `rule`. A zero true field is
    /// compared in absolute terms.
    pub fn relative_errors(&self, truth: &CoefficientFields, rule: &QuadratureRule) -> Result<FieldErrors> {
        let rel = |f: &dyn Fn(&[f64]) -> Result<f64>, g: &dyn Fn(&[f64]) -> f64| -> Result<f64> {
            let (mut num, mut den) = (0.0, 0.0);
            for (p, w) in rule.points().iter().zip(rule.weights()) {
                let gv = g(p);
                num += w * (f(p)? - gv).powi(2);
                den += w * gv * gv;
            }
            Ok(if den > 0.0 { (num / den).sqrt() } else { num.sqrt() })
        };
        let alpha = if self.unknowns.has_alpha() {
            (0..self.basis.dim())
                .map(|l| rel(&|x| self.alpha(l, x), &|x| truth.alpha[l](x)))
                .collect::<Result<_>>()?
        } else {
            Vec::new()
        };
        let kappa = if self.unknowns.has_kappa() {
            Some(rel(&|x| self.kappa(x), &|x| (truth.kappa)(x))?)
        } else {
            None
        };
        Ok(FieldErrors { alpha, kappa })
    }

    /// Column names of [`CoefficientSolution::field_values`].
    pub fn field_names(&self) -> Vec<String> {
        let dim = self.basis.dim();
        let mut names = Vec::new();
        if self.unknowns.has_alpha() {
            if dim == 1 {
                names.push("alpha".to_string());
            } else {
                names.extend((1..=dim).map(|l| format!("alpha_{l}")));
            }
        }
        if self.unknowns.has_kappa() {
            names.push("kappa".to_string());
        }
        names
    }

    /// Recovered field values at `x` in the order of [`Self::field_names`].
    pub fn field_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        if self.unknowns.has_alpha() {
            for l in 0..self.basis.dim() {
                out.push(self.alpha(l, x)?);
            }
        }
        if self.unknowns.has_kappa() {
            out.push(self.kappa(x)?);
        }
        Ok(out)
    }

    /// CSV of recovered fields at `points`, with the true values alongside
    /// when given.
    pub fn fields_csv(&self, points: &[Vec<f64>], truth: Option<&CoefficientFields>) -> Result<String> {
        let dim = self.basis.dim();
        let names = self.field_names();
        let mut out = String::from(if dim == 1 { "x" } else { "x,y" });
        for n in &names {
            let _ = write!(out, ",{n}");
        }
        if truth.is_some() {
            for suffix in ["true", "err"] {
                for n in &names {
                    let _ = write!(out, ",{n}_{suffix}");
                }
            }
        }
        out.push('\n');
        for p in points {
            let cells: Vec<String> = p.iter().map(|v| fmt_f64(*v)).collect();
            out.push_str(&cells.join(","));
            let values = self.field_values(p)?;
            for v in &values {
                let _ = write!(out, ",{}", fmt_f64(*v));
            }
            if let Some(t) = truth {
                let mut exact = Vec::with_capacity(values.len());
                if self.unknowns.has_alpha() {
                    exact.extend(t.alpha.iter().map(|a| a(p)));
                }
                if self.unknowns.has_kappa() {
                    exact.push((t.kappa)(p));
                }
                for v in &exact {
                    let _ = write!(out, ",{}", fmt_f64(*v));
                }
                for (v, e) in values.iter().zip(&exact) {
                    let _ = write!(out, ",{}", fmt_f64(v - e));
                }
            }
            out.push('\n');
        }
        Ok(out)
    }

    /// Plain-text record with coefficients as hexadecimal floats, readable by
    /// [`CoefficientSolution::from_text`].
    pub fn to_text(&self) -> String {
        let d = self.basis.domain();
        let mut out = String::new();
        let _ = writeln!(out, "method {}", self.method.name());
        let _ = writeln!(
            out,
            "unknowns {}",
            match self.unknowns {
                Unknowns::Alpha => "alpha",
                Unknowns::Kappa => "kappa",
                Unknowns::Both => "both",
            }
        );
        let _ = writeln!(out, "degree {}", self.basis.degree());
        let _ = writeln!(
            out,
            "truncation {}",
            match self.basis.truncation() {
                Truncation::TotalDegree => "total_degree",
                Truncation::Tensor => "tensor",
            }
        );
        let hex = |v: &[f64]| v.iter().map(|x| format_hex_f64(*x)).collect::<Vec<_>>().join(" ");
        let _ = writeln!(out, "lower {}", hex(d.lower()));
        let _ = writeln!(out, "upper {}", hex(d.upper()));
        if let Some(t) = self.test_degree {
            let _ = writeln!(out, "test_degree {t}");
        }
        let _ = writeln!(out, "objective {}", format_hex_f64(self.objective));
        let _ = writeln!(out, "spectrum {}", hex(&self.spectrum));
        let _ = writeln!(out, "coefficients {}", self.coefficients.len());
        for c in &self.coefficients {
            let _ = writeln!(out, "{}", format_hex_f64(*c));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |what: &str| Error::Format(format!("solution file: {what}"));
        let mut method = None;
        let mut unknowns = None;
        let mut degree = None;
        let mut truncation = Truncation::TotalDegree;
        let mut lower = None;
        let mut upper = None;
        let mut test_degree = None;
        let mut objective = f64::NAN;
        let mut spectrum = Vec::new();
        let mut coefficients = Vec::new();
        let hexes = |rest: &str| -> Result<Vec<f64>> { rest.split_whitespace().map(parse_hex_f64).collect() };
        let mut lines = text.lines();
        while let Some(line) = lines.next() {
            let (key, rest) = line.split_once(' ').unwrap_or((line, ""));
            match key {
                "method" => {
                    method = Some(match rest {
                        "galerkin" => Method::Galerkin,
                        "collocation" => Method::Collocation,
                        _ => return Err(bad("unknown method")),
                    })
                }
                "unknowns" => {
                    unknowns = Some(match rest {
                        "alpha" => Unknowns::Alpha,
                        "kappa" => Unknowns::Kappa,
                        "both" => Unknowns::Both,
                        _ => return Err(bad("unknown field selection")),
                    })
                }
                "degree" => degree = Some(rest.parse::<usize>().map_err(|_| bad("degree"))?),
                "truncation" => {
                    truncation = match rest {
                        "total_degree" => Truncation::TotalDegree,
                        "tensor" => Truncation::Tensor,
                        _ => return Err(bad("truncation")),
                    }
                }
                "lower" => lower = Some(hexes(rest)?),
                "upper" => upper = Some(hexes(rest)?),
                "test_degree" => test_degree = Some(rest.parse::<usize>().map_err(|_| bad("test degree"))?),
                "objective" => objective = parse_hex_f64(rest)?,
                "spectrum" => spectrum = hexes(rest)?,
                "coefficients" => {
                    let n: usize = rest.parse().map_err(|_| bad("coefficient count"))?;
                    coefficients = (0..n)
                        .map(|_| lines.next().ok_or_else(|| bad("truncated coefficients")).and_then(parse_hex_f64))
                        .collect::<Result<_>>()?;
                }
                "" => {}
                _ => return Err(bad(&format!("unexpected key {key:?}"))),
            }
        }
        let domain = crate::basis::BoxDomain::new(lower.ok_or_else(|| bad("lower"))?, upper.ok_or_else(|| bad("upper"))?)?;
        let basis = BasisSet::new(domain, degree.ok_or_else(|| bad("degree"))?, truncation);
        let sol = Self {
            method: method.ok_or_else(|| bad("method"))?,
            unknowns: unknowns.ok_or_else(|| bad("unknowns"))?,
            basis,
            coefficients,
            objective,
            spectrum,
            test_degree,
        };
        if sol.coefficients.len() != sol.layout().len() {
            return Err(bad("coefficient count does not match the basis"));
        }
        Ok(sol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::BoxDomain;
    use crate::forward::field;
    use crate::quadrature::{gauss_boundary, gauss_interior};
    use proptest::prelude::*;

    /// Snapshots of `u(t, x) = 2 + sin(x + t) · cos(y)` (1D: no `y` factor)
    /// with `u_t` defined by the PDE for polynomial `α`, `κ`, so the data
    /// satisfy the equation exactly whatever `u` does in time.
    pub(crate) fn manufactured(dim: usize, flux: FluxSpec) -> (SnapshotSet, DerivativeEstimates, CoefficientFields) {
        let d = match dim {
            1 => BoxDomain::interval(-1.0, 2.0).unwrap(),
            _ => BoxDomain::square(-1.0, 1.0).unwrap(),
        };
        // α_ℓ, κ and their gradients.
        let alpha = move |l: usize, x: &[f64]| -> (f64, Vec<f64>) {
            match (dim, l) {
                (1, _) => (1.0 + 0.5 * x[0] - 0.2 * x[0] * x[0], vec![0.5 - 0.4 * x[0]]),
                (_, 0) => (0.5 + x[1], vec![0.0, 1.0]),
                _ => (0.3 - 0.2 * x[0] * x[1], vec![-0.2 * x[1], -0.2 * x[0]]),
            }
        };
        let kappa = move |x: &[f64]| -> (f64, Vec<f64>) {
            match dim {
                1 => (0.4 + 0.1 * x[0], vec![0.1]),
                _ => (0.4 + 0.1 * x[0] - 0.05 * x[1] * x[1], vec![0.1, -0.1 * x[1]]),
            }
        };
        // u, ∇u and the diagonal Hessian.
        let state = |t: f64, x: &[f64]| -> (f64, Vec<f64>, Vec<f64>) {
            let s = (x[0] + t).sin();
            let c = (x[0] + t).cos();
            match dim {
                1 => (2.0 + s, vec![c], vec![-s]),
                _ => {
                    let (cy, sy) = (x[1].cos(), x[1].sin());
                    (2.0 + s * cy, vec![c * cy, -s * sy], vec![-s * cy, -s * cy])
                }
            }
        };
        let u_t = |t: f64, x: &[f64]| -> f64 {
            let (u, g, h) = state(t, x);
            let (k, gk) = kappa(x);
            let mut adv = 0.0;
            for l in 0..dim {
                let (a, ga) = alpha(l, x);
                adv += ga[l] * flux.value(u) + a * flux.derivative(u) * g[l];
            }
            let diff: f64 = (0..dim).map(|l| gk[l] * g[l] + k * h[l]).sum();
            diff - adv
        };
        let interior = gauss_interior(&d, if dim == 1 { 40 } else { 24 });
        let boundary = gauss_boundary(&d, 24);
        let times = vec![0.0, 0.4, 0.9, 1.3, 2.0];
        let over = |pts: &[Vec<f64>], f: &dyn Fn(f64, &[f64]) -> f64| -> Vec<Vec<f64>> {
            times.iter().map(|&t| pts.iter().map(|p| f(t, p)).collect()).collect()
        };
        let bp = boundary.points();
        let ip = interior.points().to_vec();
        let s = SnapshotSet {
            times: times.clone(),
            master_times: times.clone(),
            interior_values: over(&ip, &|t, x| state(t, x).0),
            boundary_values: over(&bp, &|t, x| state(t, x).0),
            interior,
            boundary,
            noise_level: 0.0,
            rng_seed: 0,
            filtered: false,
        };
        let tensor = |pts: &[Vec<f64>], k: usize| -> Vec<Vec<Vec<f64>>> {
            times
                .iter()
                .map(|&t| {
                    pts.iter()
                        .map(|p| {
                            let st = state(t, p);
                            if k == 1 { st.1 } else { st.2 }
                        })
                        .collect()
                })
                .collect()
        };
        let derivs = DerivativeEstimates {
            u_t_interior: Some(over(&ip, &u_t)),
            u_t_boundary: Some(over(&bp, &u_t)),
            grad_boundary: Some(tensor(&bp, 1)),
            grad_interior: Some(tensor(&ip, 1)),
            hess_diag_interior: Some(tensor(&ip, 2)),
        };
        let truth = CoefficientFields {
            alpha: (0..dim).map(|l| field(move |x| alpha(l, x).0)).collect(),
            kappa: field(move |x| kappa(x).0),
            flux,
        };
        (s, derivs, truth)
    }

    fn opts(method: Method, test_degree: usize) -> RecoveryOptions {
        RecoveryOptions {
            method,
            test_degree,
            ..Default::default()
        }
    }

    #[test]
    fn manufactured_fields_are_recovered() {
        for (dim, flux) in [(1, FluxSpec::Linear), (1, FluxSpec::Burgers), (2, FluxSpec::Linear)] {
            let (s, d, truth) = manufactured(dim, flux);
            let rule = gauss_interior(&s_domain(&s).unwrap(), 20);
            for method in [Method::Galerkin, Method::Collocation] {
                let sol = recover(&s, &d, 3, flux, &opts(method, 8)).unwrap();
                let e = sol.relative_errors(&truth, &rule).unwrap();
                for err in e.alpha.iter().chain(&e.kappa) {
                    assert!(*err < 1e-9, "{dim}D {flux:?} {method:?}: {e:?}");
                }
                assert!(sol.objective < 1e-18);
            }
        }
    }

    #[test]
    fn galerkin_matches_orthogonal_factorization() {
        let (s, d, _) = manufactured(1, FluxSpec::Linear);
        let dom = s_domain(&s).unwrap();
        let trial = BasisSet::new(dom.clone(), 6, Truncation::TotalDegree);
        let test = BasisSet::new(dom, 12, Truncation::TotalDegree);
        let mut d = d;
        // Perturb the data so the residual is not zero.
        for row in d.u_t_interior.as_mut().unwrap() {
            for (q, v) in row.iter_mut().enumerate() {
                *v += 1e-3 * ((q * 7 % 11) as f64 - 5.0);
            }
        }
        let sys = assemble_galerkin(&s, &d, &trial, &test, FluxSpec::Linear, Unknowns::Both).unwrap();
        let (c, spectrum) = solve_least_squares(&sys, 1e-14).unwrap();
        assert!(spectrum[spectrum.len() - 1] / spectrum[0] < 1e10);
        let (a, b) = sys.stacked();
        let qr = a.clone().qr();
        let oracle = qr.r().solve_upper_triangular(&(qr.q().transpose() * b)).unwrap();
        let c = DVector::from_column_slice(&c);
        assert!((&c - &oracle).norm() / oracle.norm() < 1e-10);
    }

    #[test]
    fn spatially_constant_state_is_not_unique() {
        let (mut s, mut d, _) = manufactured(1, FluxSpec::Linear);
        for (m, &t) in s.times.iter().enumerate() {
            let u = (-t).exp();
            s.interior_values[m].iter_mut().for_each(|v| *v = u);
            s.boundary_values[m].iter_mut().for_each(|v| *v = u);
            d.u_t_interior.as_mut().unwrap()[m].iter_mut().for_each(|v| *v = -u);
            d.grad_boundary.as_mut().unwrap()[m].iter_mut().for_each(|g| g[0] = 0.0);
        }
        match recover(&s, &d, 4, FluxSpec::Linear, &opts(Method::Galerkin, 10)) {
            Err(Error::NonUniqueSolution { ratio, null_basis }) => {
                assert!(ratio < 1e-8);
                // The constant in α and every κ direction are free.
                assert!(null_basis.len() >= 6, "{}", null_basis.len());
            }
            other => panic!("expected non-uniqueness, got {other:?}"),
        }
    }

    #[test]
    fn single_field_layouts() {
        let (s, d, truth) = manufactured(2, FluxSpec::Linear);
        let rule = gauss_interior(&s_domain(&s).unwrap(), 12);
        // With κ fixed at zero the data are no longer consistent, but the
        // layout and evaluation paths must still line up.
        for unknowns in [Unknowns::Alpha, Unknowns::Kappa] {
            let o = RecoveryOptions {
                unknowns,
                test_degree: 6,
                ..Default::default()
            };
            let sol = recover(&s, &d, 2, FluxSpec::Linear, &o).unwrap();
            assert_eq!(sol.coefficients.len(), sol.layout().len());
            let e = sol.relative_errors(&truth, &rule).unwrap();
            assert_eq!(e.alpha.len(), if unknowns == Unknowns::Alpha { 2 } else { 0 });
            assert_eq!(e.kappa.is_some(), unknowns == Unknowns::Kappa);
            assert_eq!(sol.field_names().len(), sol.field_values(&[0.0, 0.0]).unwrap().len());
        }
    }

    #[test]
    fn missing_derivatives_are_reported() {
        let (s, mut d, _) = manufactured(1, FluxSpec::Linear);
        d.grad_boundary = None;
        assert!(matches!(
            recover(&s, &d, 3, FluxSpec::Linear, &opts(Method::Galerkin, 6)),
            Err(Error::Missing(_))
        ));
        d.grad_interior = None;
        assert!(matches!(
            recover(&s, &d, 3, FluxSpec::Linear, &opts(Method::Collocation, 6)),
            Err(Error::Missing(_))
        ));
    }

    #[test]
    fn text_round_trip() {
        let (s, d, _) = manufactured(2, FluxSpec::Linear);
        let sol = recover(&s, &d, 2, FluxSpec::Linear, &opts(Method::Galerkin, 5)).unwrap();
        let back = CoefficientSolution::from_text(&sol.to_text()).unwrap();
        assert_eq!(back.coefficients, sol.coefficients);
        assert_eq!(back.spectrum, sol.spectrum);
        assert_eq!(back.basis, sol.basis);
        assert_eq!(back.test_degree, Some(5));
        let csv = sol.fields_csv(&[vec![0.1, 0.2]], None).unwrap();
        assert!(csv.starts_with("x,y,alpha_1,alpha_2,kappa\n"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn solution_minimizes_the_objective(
            dir in proptest::collection::vec(-1.0f64..1.0, 8),
            step in 1e-4f64..1e-1,
            scale in 0.1f64..10.0,
        ) {
            let (s, mut d, _) = manufactured(1, FluxSpec::Linear);
            for row in d.u_t_interior.as_mut().unwrap() {
                for (q, v) in row.iter_mut().enumerate() {
                    *v += 0.01 * (q as f64).sin();
                }
            }
            let dom = s_domain(&s).unwrap();
            let trial = BasisSet::new(dom.clone(), 3, Truncation::TotalDegree);
            let test = BasisSet::new(dom, 8, Truncation::TotalDegree);
            let mut sys = assemble_galerkin(&s, &d, &trial, &test, FluxSpec::Linear, Unknowns::Both).unwrap();
            let (c, _) = solve_least_squares(&sys, 1e-14).unwrap();
            let j0 = sys.objective(&c);
            let moved: Vec<f64> = c.iter().zip(&dir).map(|(a, b)| a + step * b).collect();
            prop_assert!(sys.objective(&moved) >= j0);

            // A common time weight does not change the minimizer.
            sys.weights.iter_mut().for_each(|w| *w *= scale);
            let (c2, _) = solve_least_squares(&sys, 1e-14).unwrap();
            for (a, b) in c.iter().zip(&c2) {
                prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
            }
        }
    }
}
