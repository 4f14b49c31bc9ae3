//! Manufactured snapshot data with exact derivatives.
#![allow(dead_code)]

use coefid::data::{DerivativeEstimates, SnapshotSet};
use coefid::{gauss_boundary, gauss_interior, BoxDomain};

/// Value, time derivative, gradient and diagonal second derivatives.
pub struct Jet {
    pub u: f64,
    pub u_t: f64,
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
}

pub type Field = fn(f64, &[f64]) -> Jet;

/// `e^{-t} (sin x + 0.3 x²)` in 1D.
pub fn smooth_1d(t: f64, x: &[f64]) -> Jet {
    let e = (-t).exp();
    let x = x[0];
    let v = x.sin() + 0.3 * x * x;
    Jet {
        u: e * v,
        u_t: -e * v,
        grad: vec![e * (x.cos() + 0.6 * x)],
        hess: vec![e * (-x.sin() + 0.6)],
    }
}

/// `e^{-t} (sin x cos(y/2) + 0.3 x y)` in 2D.
pub fn smooth_2d(t: f64, p: &[f64]) -> Jet {
    let e = (-t).exp();
    let (x, y) = (p[0], p[1]);
    let v = x.sin() * (0.5 * y).cos() + 0.3 * x * y;
    Jet {
        u: e * v,
        u_t: -e * v,
        grad: vec![
            e * (x.cos() * (0.5 * y).cos() + 0.3 * y),
            e * (-0.5 * x.sin() * (0.5 * y).sin() + 0.3 * x),
        ],
        hess: vec![
            -e * x.sin() * (0.5 * y).cos(),
            -0.25 * e * x.sin() * (0.5 * y).cos(),
        ],
    }
}

/// Spatially constant `e^{-t}`.
pub fn flat(t: f64, x: &[f64]) -> Jet {
    let e = (-t).exp();
    Jet {
        u: e,
        u_t: -e,
        grad: vec![0.0; x.len()],
        hess: vec![0.0; x.len()],
    }
}

/// Exact snapshots and derivatives of `f` at `times` on Gauss rules.
pub fn manufactured(
    domain: &BoxDomain,
    interior_points: usize,
    boundary_points: usize,
    times: &[f64],
    f: Field,
) -> (SnapshotSet, DerivativeEstimates) {
    let interior = gauss_interior(domain, interior_points);
    let boundary = gauss_boundary(domain, boundary_points);
    let bpts = boundary.points();
    let ij: Vec<Vec<Jet>> = times
        .iter()
        .map(|&t| interior.points().iter().map(|p| f(t, p)).collect())
        .collect();
    let bj: Vec<Vec<Jet>> = times.iter().map(|&t| bpts.iter().map(|p| f(t, p)).collect()).collect();
    let s = SnapshotSet {
        times: times.to_vec(),
        master_times: times.to_vec(),
        interior,
        interior_values: ij.iter().map(|r| r.iter().map(|j| j.u).collect()).collect(),
        boundary,
        boundary_values: bj.iter().map(|r| r.iter().map(|j| j.u).collect()).collect(),
        noise_level: 0.0,
        rng_seed: 0,
        filtered: false,
    };
    let d = DerivativeEstimates {
        u_t_interior: Some(ij.iter().map(|r| r.iter().map(|j| j.u_t).collect()).collect()),
        u_t_boundary: Some(bj.iter().map(|r| r.iter().map(|j| j.u_t).collect()).collect()),
        grad_boundary: Some(bj.iter().map(|r| r.iter().map(|j| j.grad.clone()).collect()).collect()),
        grad_interior: Some(ij.iter().map(|r| r.iter().map(|j| j.grad.clone()).collect()).collect()),
        hess_diag_interior: Some(ij.iter().map(|r| r.iter().map(|j| j.hess.clone()).collect()).collect()),
    };
    (s, d)
}

pub fn config_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}
