//! Least-squares polynomial fits over small neighborhoods.
//!
//! Coordinates are mapped to `[-1, 1]` over the bounding box of the samples
//! and the fit uses a total-degree Legendre basis, which keeps the design
//! matrix well conditioned at degree 10.

use nalgebra::{DMatrix, DVector};

use crate::basis::{legendre_values, legendre_with_derivatives};

/// Singular value ratio below which a local design matrix counts as rank
/// deficient.
const RANK_TOL: f64 = 1e-11;

#[derive(Debug, Clone)]
pub struct LocalPolynomial {
    center: Vec<f64>,
    half_width: Vec<f64>,
    degree: usize,
    indices: Vec<Vec<usize>>,
    coeffs: Vec<f64>,
}

/// Number of coefficients of a total-degree `degree` polynomial in `dim`
/// variables.
pub fn coefficient_count(dim: usize, degree: usize) -> usize {
    match dim {
        1 => degree + 1,
        _ => (degree + 1) * (degree + 2) / 2,
    }
}

fn total_degree_indices(dim: usize, degree: usize) -> Vec<Vec<usize>> {
    match dim {
        1 => (0..=degree).map(|e| vec![e]).collect(),
        _ => {
            let mut out = Vec::new();
            for total in 0..=degree {
                for first in (0..=total).rev() {
                    out.push(vec![first, total - first]);
                }
            }
            out
        }
    }
}

struct Design {
    center: Vec<f64>,
    half_width: Vec<f64>,
    indices: Vec<Vec<usize>>,
    svd: nalgebra::SVD<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl Design {
    fn new(points: &[Vec<f64>], degree: usize) -> Option<Self> {
        let dim = points.first()?.len();
        let indices = total_degree_indices(dim, degree);
        if points.len() < indices.len() {
            return None;
        }
        let mut center = vec![0.0; dim];
        let mut half_width = vec![0.0; dim];
        for k in 0..dim {
            let lo = points.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min);
            let hi = points.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max);
            if !(hi > lo) {
                return None;
            }
            center[k] = 0.5 * (lo + hi);
            half_width[k] = 0.5 * (hi - lo);
        }
        let mut design = DMatrix::zeros(points.len(), indices.len());
        for (r, p) in points.iter().enumerate() {
            let row = basis_row(&indices, degree, &center, &half_width, p);
            design.row_mut(r).copy_from_slice(&row);
        }
        let svd = design.svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if !(smin > RANK_TOL * smax) {
            return None;
        }
        Some(Self {
            center,
            half_width,
            indices,
            svd,
        })
    }
}

fn basis_row(indices: &[Vec<usize>], degree: usize, center: &[f64], half_width: &[f64], x: &[f64]) -> Vec<f64> {
    let axes: Vec<Vec<f64>> = (0..center.len())
        .map(|k| legendre_values(degree, (x[k] - center[k]) / half_width[k]))
        .collect();
    indices
        .iter()
        .map(|idx| idx.iter().enumerate().map(|(k, &e)| axes[k][e]).product())
        .collect()
}

/// Fits a total-degree polynomial to scattered samples. Returns `None` when
/// the samples do not determine it.
pub fn fit_local_polynomial(points: &[Vec<f64>], values: &[f64], degree: usize) -> Option<LocalPolynomial> {
    let d = Design::new(points, degree)?;
    let rhs = DVector::from_column_slice(values);
    let coeffs = d.svd.solve(&rhs, 0.0).ok()?;
    Some(LocalPolynomial {
        center: d.center,
        half_width: d.half_width,
        degree,
        indices: d.indices,
        coeffs: coeffs.as_slice().to_vec(),
    })
}

/// Weights `w` with `Σ w_i v_i` equal to the fitted polynomial at `x` for
/// any sample values `v`. The fit is linear in the data, so one set of
/// weights serves every time level on a fixed neighborhood.
pub fn value_weights(points: &[Vec<f64>], x: &[f64], degree: usize) -> Option<Vec<f64>> {
    let d = Design::new(points, degree)?;
    let phi = DVector::from_vec(basis_row(&d.indices, degree, &d.center, &d.half_width, x));
    let u = d.svd.u.as_ref()?;
    let v_t = d.svd.v_t.as_ref()?;
    // w = U Σ⁻¹ Vᵀ φ
    let mut z = v_t * phi;
    for (zi, s) in z.iter_mut().zip(d.svd.singular_values.iter()) {
        *zi /= s;
    }
    Some((u * z).as_slice().to_vec())
}

/// Value, gradient and diagonal second derivatives at one point.
#[derive(Debug, Clone)]
pub struct LocalJet {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub second: Vec<f64>,
}

impl LocalPolynomial {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.jet(x).value
    }

    pub fn jet(&self, x: &[f64]) -> LocalJet {
        let dim = self.center.len();
        let axes: Vec<_> = (0..dim)
            .map(|k| {
                let s = (x[k] - self.center[k]) / self.half_width[k];
                let mut l = legendre_with_derivatives(self.degree, s);
                let jac = 1.0 / self.half_width[k];
                for e in 0..=self.degree {
                    l.dp[e] *= jac;
                    l.d2p[e] *= jac * jac;
                }
                l
            })
            .collect();
        let mut value = 0.0;
        let mut gradient = vec![0.0; dim];
        let mut second = vec![0.0; dim];
        for (idx, &c) in self.indices.iter().zip(&self.coeffs) {
            value += c * (0..dim).map(|k| axes[k].p[idx[k]]).product::<f64>();
            for l in 0..dim {
                let mut g = axes[l].dp[idx[l]];
                let mut h = axes[l].d2p[idx[l]];
                for k in (0..dim).filter(|&k| k != l) {
                    g *= axes[k].p[idx[k]];
                    h *= axes[k].p[idx[k]];
                }
                gradient[l] += c * g;
                second[l] += c * h;
            }
        }
        LocalJet {
            value,
            gradient,
            second,
        }
    }
}

/// Second-order finite difference for `du/dt` at the middle of three equally
/// spaced samples, or one-sided at either end.
pub fn second_order_difference(samples: [f64; 3], h: f64, position: StencilPosition) -> f64 {
    let [a, b, c] = samples;
    match position {
        StencilPosition::Central => (c - a) / (2.0 * h),
        StencilPosition::Forward => (-3.0 * a + 4.0 * b - c) / (2.0 * h),
        StencilPosition::Backward => (a - 4.0 * b + 3.0 * c) / (2.0 * h),
    }
}

/// Where the evaluation point sits in a three-point stencil.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StencilPosition {
    /// Samples at `t−h, t, t+h`.
    Central,
    /// Samples at `t, t+h, t+2h`.
    Forward,
    /// Samples at `t−2h, t−h, t`.
    Backward,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_polynomials_in_one_dimension() {
        let pts: Vec<Vec<f64>> = (0..40).map(|i| vec![0.3 + 0.01 * i as f64]).collect();
        let f = |x: f64| 2.0 - x + 3.0 * x.powi(4) - 0.5 * x.powi(7);
        let vals: Vec<f64> = pts.iter().map(|p| f(p[0])).collect();
        let fit = fit_local_polynomial(&pts, &vals, 10).unwrap();
        let jet = fit.jet(&[0.5]);
        assert!((jet.value - f(0.5)).abs() < 1e-10);
        let df = -1.0 + 12.0 * 0.5f64.powi(3) - 3.5 * 0.5f64.powi(6);
        assert!((jet.gradient[0] - df).abs() < 1e-8);
        let d2f = 36.0 * 0.25 - 21.0 * 0.5f64.powi(5);
        assert!((jet.second[0] - d2f).abs() < 1e-6);
    }

    #[test]
    fn quadratic_time_series_derivative() {
        let ts: Vec<Vec<f64>> = (0..300).map(|i| vec![0.35 + 0.001 * i as f64]).collect();
        let vals: Vec<f64> = ts.iter().map(|t| t[0] * t[0]).collect();
        let fit = fit_local_polynomial(&ts, &vals, 10).unwrap();
        assert!((fit.jet(&[0.5]).gradient[0] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn reproduces_bivariate_polynomials() {
        let mut pts = Vec::new();
        for i in 0..20 {
            for j in 0..20 {
                pts.push(vec![0.8 + 0.01 * i as f64, 0.4 + 0.01 * j as f64]);
            }
        }
        let vals: Vec<f64> = pts.iter().map(|p| p[0] * p[1]).collect();
        let fit = fit_local_polynomial(&pts, &vals, 10).unwrap();
        let jet = fit.jet(&[1.0, 0.5]);
        assert!((jet.gradient[0] - 0.5).abs() < 1e-6);
        assert!((jet.gradient[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn value_weights_match_the_fit() {
        let pts: Vec<Vec<f64>> = (0..40).map(|i| vec![0.1 * i as f64, (0.37 * i as f64).sin()]).collect();
        let vals: Vec<f64> = (0..40).map(|i| (0.05 * i as f64).cos() + 0.01 * (i % 7) as f64).collect();
        let x = [1.3, 0.2];
        let fit = fit_local_polynomial(&pts, &vals, 3).unwrap().value(&x);
        let w = value_weights(&pts, &x, 3).unwrap();
        let via: f64 = w.iter().zip(&vals).map(|(a, b)| a * b).sum();
        assert!((fit - via).abs() < 1e-10, "{fit} vs {via}");
    }

    #[test]
    fn too_few_samples_is_rejected() {
        let pts: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64]).collect();
        assert!(fit_local_polynomial(&pts, &[0.0; 5], 10).is_none());
        let pts: Vec<Vec<f64>> = (0..20).map(|_| vec![1.0]).collect();
        assert!(fit_local_polynomial(&pts, &[0.0; 20], 2).is_none());
    }

    #[test]
    fn finite_differences() {
        let h: f64 = 1e-3;
        let d = second_order_difference([(-h).sin(), 0.0, h.sin()], h, StencilPosition::Central);
        assert!((d - 1.0).abs() < 1e-6);
        let d = second_order_difference([0.0, h.sin(), (2.0 * h).sin()], h, StencilPosition::Forward);
        assert!((d - 1.0).abs() < 1e-6);
        let d = second_order_difference([1.0, 1.0, 1.0], h, StencilPosition::Backward);
        assert_eq!(d, 0.0);
    }
}
