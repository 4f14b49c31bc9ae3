use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::{Layout, LeastSquaresSystem, Method, Unknowns};
use crate::basis::BasisSet;
use crate::data::{DerivativeEstimates, SnapshotSet};
use crate::error::{Error, Result};
use crate::forward::FluxSpec;

/// Basis values and derivatives at a fixed set of points, one row per point.
struct Table {
    values: DMatrix<f64>,
    /// One matrix per axis.
    grads: Vec<DMatrix<f64>>,
    laplacians: DMatrix<f64>,
}

impl Table {
    fn new(basis: &BasisSet, points: &[Vec<f64>]) -> Self {
        let (n, dim) = (basis.len(), basis.dim());
        let rows: Vec<_> = points.par_iter().map(|p| basis.eval_all_unchecked(p)).collect();
        let mut values = DMatrix::zeros(points.len(), n);
        let mut grads = vec![DMatrix::zeros(points.len(), n); dim];
        let mut laplacians = DMatrix::zeros(points.len(), n);
        for (r, bp) in rows.iter().enumerate() {
            for i in 0..n {
                values[(r, i)] = bp.values[i];
                laplacians[(r, i)] = bp.laplacians[i];
                for (l, g) in grads.iter_mut().enumerate() {
                    g[(r, i)] = bp.grads[i][l];
                }
            }
        }
        Self {
            values,
            grads,
            laplacians,
        }
    }
}

/// `leftᵀ · diag(d) · right`.
fn weighted_product(left: &DMatrix<f64>, d: &[f64], right: &DMatrix<f64>) -> DMatrix<f64> {
    let mut scaled = right.clone();
    for (mut row, &w) in scaled.row_iter_mut().zip(d) {
        row *= w;
    }
    left.tr_mul(&scaled)
}

fn check_inputs(s: &SnapshotSet, trial: &BasisSet) -> Result<()> {
    s.validate()?;
    if trial.dim() != s.dim() {
        return Err(Error::Dimension(format!(
            "{}-dimensional basis for {}-dimensional data",
            trial.dim(),
            s.dim()
        )));
    }
    for p in s.interior.points().iter().chain(&s.boundary.points()) {
        if !trial.domain().contains(p) {
            return Err(Error::OutsideDomain { point: p.clone() });
        }
    }
    Ok(())
}

fn time_weights(m: usize) -> Vec<f64> {
    vec![1.0 / m as f64; m]
}

/// Weak-form blocks at one snapshot time: the advection matrices `A^(ℓ)`,
/// the diffusion matrix `K` and the load vector `b`, so that for the true
/// coefficients `b ≈ −Σ_ℓ A^(ℓ) a^ℓ + K k`.
#[derive(Debug, Clone)]
pub struct GalerkinBlocks {
    pub advection: Vec<DMatrix<f64>>,
    pub diffusion: DMatrix<f64>,
    pub load: DVector<f64>,
}

impl GalerkinBlocks {
    /// `E = [−A^(1) … −A^(d), K]` restricted to the unknown fields.
    pub fn stacked(&self, unknowns: Unknowns) -> DMatrix<f64> {
        let (j, n) = self.diffusion.shape();
        let mut parts: Vec<DMatrix<f64>> = Vec::new();
        if unknowns.has_alpha() {
            parts.extend(self.advection.iter().map(|a| -a));
        }
        if unknowns.has_kappa() {
            parts.push(self.diffusion.clone());
        }
        let mut e = DMatrix::zeros(j, n * parts.len());
        for (k, p) in parts.iter().enumerate() {
            e.columns_mut(k * n, n).copy_from(p);
        }
        e
    }
}

/// Precomputed basis tables for weak-form assembly on a fixed snapshot
/// geometry.
pub struct GalerkinAssembler<'a> {
    s: &'a SnapshotSet,
    derivs: &'a DerivativeEstimates,
    flux: FluxSpec,
    trial_len: usize,
    test_len: usize,
    trial: Table,
    test: Table,
    trial_boundary: DMatrix<f64>,
    test_boundary: DMatrix<f64>,
    /// `∇ψ_j · n` at the boundary points.
    test_normal_derivative: DMatrix<f64>,
    normals: Vec<Vec<f64>>,
    boundary_weights: Vec<f64>,
}

impl<'a> GalerkinAssembler<'a> {
    pub fn new(
        s: &'a SnapshotSet,
        derivs: &'a DerivativeEstimates,
        trial: &BasisSet,
        test: &BasisSet,
        flux: FluxSpec,
    ) -> Result<Self> {
        check_inputs(s, trial)?;
        if test.domain() != trial.domain() {
            return Err(Error::Dimension("trial and test bases live on different domains".into()));
        }
        let u_t = derivs.u_t_interior.as_ref().ok_or(Error::Missing("time derivative estimates"))?;
        let grad = derivs
            .grad_boundary
            .as_ref()
            .ok_or(Error::Missing("boundary gradient estimates"))?;
        if u_t.len() != s.n_times() || grad.len() != s.n_times() {
            return Err(Error::Dimension("derivative estimates do not match the snapshot times".into()));
        }
        let bpoints = s.boundary.points();
        let normals: Vec<Vec<f64>> = s.boundary.iter().map(|(_, _, n)| n.to_vec()).collect();
        let boundary_weights: Vec<f64> = s.boundary.iter().map(|(_, w, _)| w).collect();
        let test_b = Table::new(test, &bpoints);
        let mut test_normal_derivative = DMatrix::zeros(bpoints.len(), test.len());
        for (l, g) in test_b.grads.iter().enumerate() {
            for (r, n) in normals.iter().enumerate() {
                for j in 0..test.len() {
                    test_normal_derivative[(r, j)] += g[(r, j)] * n[l];
                }
            }
        }
        Ok(Self {
            s,
            derivs,
            flux,
            trial_len: trial.len(),
            test_len: test.len(),
            trial: Table::new(trial, s.interior.points()),
            test: Table::new(test, s.interior.points()),
            trial_boundary: Table::new(trial, &bpoints).values,
            test_boundary: test_b.values,
            test_normal_derivative,
            normals,
            boundary_weights,
        })
    }

    pub fn blocks(&self, m: usize) -> GalerkinBlocks {
        let s = self.s;
        let dim = s.dim();
        let w = s.interior.weights();
        let u = &s.interior_values[m];
        let ub = &s.boundary_values[m];
        let u_t = &self.derivs.u_t_interior.as_ref().expect("checked in new")[m];
        let grad = &self.derivs.grad_boundary.as_ref().expect("checked in new")[m];
        let wb = &self.boundary_weights;

        let wf: Vec<f64> = w.iter().zip(u).map(|(w, &u)| w * self.flux.value(u)).collect();
        let advection = (0..dim)
            .map(|l| {
                let wbf: Vec<f64> = (0..ub.len())
                    .map(|r| wb[r] * self.flux.value(ub[r]) * self.normals[r][l])
                    .collect();
                weighted_product(&self.test_boundary, &wbf, &self.trial_boundary)
                    - weighted_product(&self.test.grads[l], &wf, &self.trial.values)
            })
            .collect();

        let wu: Vec<f64> = w.iter().zip(u).map(|(w, u)| w * u).collect();
        let wbg: Vec<f64> = (0..ub.len())
            .map(|r| wb[r] * grad[r].iter().zip(&self.normals[r]).map(|(g, n)| g * n).sum::<f64>())
            .collect();
        let wbu: Vec<f64> = wb.iter().zip(ub).map(|(w, u)| w * u).collect();
        let mut diffusion = weighted_product(&self.test_boundary, &wbg, &self.trial_boundary)
            - weighted_product(&self.test_normal_derivative, &wbu, &self.trial_boundary)
            + weighted_product(&self.test.laplacians, &wu, &self.trial.values);
        for l in 0..dim {
            diffusion += weighted_product(&self.test.grads[l], &wu, &self.trial.grads[l]);
        }

        let wut = DVector::from_iterator(w.len(), w.iter().zip(u_t).map(|(w, v)| w * v));
        let load = self.test.values.tr_mul(&wut);
        GalerkinBlocks {
            advection,
            diffusion,
            load,
        }
    }

    pub fn test_len(&self) -> usize {
        self.test_len
    }

    pub fn trial_len(&self) -> usize {
        self.trial_len
    }
}

/// Weak-form least-squares system over all snapshot times, equal time
/// weights `1/M`.
pub fn assemble_galerkin(
    s: &SnapshotSet,
    derivs: &DerivativeEstimates,
    trial: &BasisSet,
    test: &BasisSet,
    flux: FluxSpec,
    unknowns: Unknowns,
) -> Result<LeastSquaresSystem> {
    let asm = GalerkinAssembler::new(s, derivs, trial, test, flux)?;
    let (blocks, rhs): (Vec<_>, Vec<_>) = (0..s.n_times())
        .into_par_iter()
        .map(|m| {
            let b = asm.blocks(m);
            (b.stacked(unknowns), b.load)
        })
        .unzip();
    Ok(LeastSquaresSystem {
        blocks,
        rhs,
        weights: time_weights(s.n_times()),
        layout: Layout {
            dim: s.dim(),
            n: trial.len(),
            unknowns,
        },
        method: Method::Galerkin,
    })
}

/// Strong-form least-squares system: one row per interior point and time,
/// rows scaled by the square root of the quadrature weight.
pub fn assemble_collocation(
    s: &SnapshotSet,
    derivs: &DerivativeEstimates,
    trial: &BasisSet,
    flux: FluxSpec,
    unknowns: Unknowns,
) -> Result<LeastSquaresSystem> {
    check_inputs(s, trial)?;
    let u_t = derivs.u_t_interior.as_ref().ok_or(Error::Missing("time derivative estimates"))?;
    let grads = derivs
        .grad_interior
        .as_ref()
        .ok_or(Error::Missing("interior gradient estimates"))?;
    let hess = derivs
        .hess_diag_interior
        .as_ref()
        .ok_or(Error::Missing("interior second derivative estimates"))?;
    let m_len = s.n_times();
    if u_t.len() != m_len || grads.len() != m_len || hess.len() != m_len {
        return Err(Error::Dimension("derivative estimates do not match the snapshot times".into()));
    }
    let dim = s.dim();
    let n = trial.len();
    let table = Table::new(trial, s.interior.points());
    let layout = Layout { dim, n, unknowns };
    let q_len = s.interior.len();
    let sqrt_w: Vec<f64> = s.interior.weights().iter().map(|w| w.sqrt()).collect();

    let (blocks, rhs): (Vec<_>, Vec<_>) = (0..m_len)
        .into_par_iter()
        .map(|m| {
            let mut r = DMatrix::zeros(q_len, layout.len());
            let mut b = DVector::zeros(q_len);
            for q in 0..q_len {
                let u = s.interior_values[m][q];
                let g = &grads[m][q];
                let lap: f64 = hess[m][q].iter().sum();
                let (f, df) = (flux.value(u), flux.derivative(u));
                for i in 0..n {
                    let phi = table.values[(q, i)];
                    if unknowns.has_alpha() {
                        for l in 0..dim {
                            let v = table.grads[l][(q, i)] * f + phi * df * g[l];
                            r[(q, layout.alpha_offset(l) + i)] = sqrt_w[q] * v;
                        }
                    }
                    if unknowns.has_kappa() {
                        let grad_dot: f64 = (0..dim).map(|l| table.grads[l][(q, i)] * g[l]).sum();
                        r[(q, layout.kappa_offset() + i)] = -sqrt_w[q] * (grad_dot + phi * lap);
                    }
                }
                b[q] = -sqrt_w[q] * u_t[m][q];
            }
            (r, b)
        })
        .unzip();
    Ok(LeastSquaresSystem {
        blocks,
        rhs,
        weights: time_weights(m_len),
        layout,
        method: Method::Collocation,
    })
}
