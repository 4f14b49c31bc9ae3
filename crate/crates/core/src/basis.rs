//! Orthonormal Legendre bases on axis-aligned boxes.
//!
//! Every basis function is a product of one-dimensional Legendre polynomials,
//! mapped affinely from `[-1, 1]` to the box side and scaled to unit `L²(D)`
//! norm. Values, gradients and Laplacians are produced by the three-term
//! recurrence and its first two derivatives, which stays accurate well past
//! degree 60.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack used when deciding whether a point lies in the closed box.
const CONTAINS_TOL: f64 = 1e-10;

/// Axis-aligned box `[lower, upper]` in one or two dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::InvalidDomain(format!(
                "lower has {} entries, upper has {}",
                lower.len(),
                upper.len()
            )));
        }
        if !(1..=2).contains(&lower.len()) {
            return Err(Error::InvalidDomain(format!(
                "dimension {} not supported (1 or 2)",
                lower.len()
            )));
        }
        for (i, (&a, &b)) in lower.iter().zip(&upper).enumerate() {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::InvalidDomain(format!(
                    "axis {i}: lower {a} must be finite and below upper {b}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn interval(a: f64, b: f64) -> Result<Self> {
        Self::new(vec![a], vec![b])
    }

    /// The square `[a, b]²`.
    pub fn square(a: f64, b: f64) -> Result<Self> {
        Self::new(vec![a, a], vec![b, b])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, axis: usize) -> f64 {
        self.upper[axis] - self.lower[axis]
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|k| self.width(k)).product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && (0..self.dim()).all(|k| {
                let slack = CONTAINS_TOL * self.width(k).max(1.0);
                x[k] >= self.lower[k] - slack && x[k] <= self.upper[k] + slack
            })
    }

    /// Maps `x` on axis `k` to the reference coordinate in `[-1, 1]`.
    pub fn to_reference(&self, k: usize, x: f64) -> f64 {
        (2.0 * x - self.lower[k] - self.upper[k]) / self.width(k)
    }

    /// Maps a reference coordinate on axis `k` back to the box.
    pub fn from_reference(&self, k: usize, s: f64) -> f64 {
        0.5 * (self.lower[k] + self.upper[k]) + 0.5 * self.width(k) * s
    }

    pub(crate) fn check(&self, x: &[f64]) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::OutsideDomain { point: x.to_vec() })
        }
    }
}

/// Which multi-indices make up a multivariate basis of degree `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    /// `|k|₁ ≤ n`.
    #[default]
    TotalDegree,
    /// `max k ≤ n`.
    Tensor,
}

/// Values and first two derivatives of `P_0 … P_n` at one reference point.
#[derive(Debug, Clone)]
pub(crate) struct Legendre1d {
    pub p: Vec<f64>,
    pub dp: Vec<f64>,
    pub d2p: Vec<f64>,
}

/// Legendre polynomials and their first two derivatives by the three-term
/// recurrence `(k+1) P_{k+1} = (2k+1) s P_k − k P_{k−1}` differentiated
/// termwise.
pub(crate) fn legendre_with_derivatives(n: usize, s: f64) -> Legendre1d {
    let mut p = vec![0.0; n + 1];
    let mut dp = vec![0.0; n + 1];
    let mut d2p = vec![0.0; n + 1];
    p[0] = 1.0;
    if n >= 1 {
        p[1] = s;
        dp[1] = 1.0;
    }
    for k in 1..n {
        let kf = k as f64;
        let a = 2.0 * kf + 1.0;
        let inv = 1.0 / (kf + 1.0);
        p[k + 1] = (a * s * p[k] - kf * p[k - 1]) * inv;
        dp[k + 1] = (a * (p[k] + s * dp[k]) - kf * dp[k - 1]) * inv;
        d2p[k + 1] = (a * (2.0 * dp[k] + s * d2p[k]) - kf * d2p[k - 1]) * inv;
    }
    Legendre1d { p, dp, d2p }
}

/// Values of `P_0 … P_n` only.
pub(crate) fn legendre_values(n: usize, s: f64) -> Vec<f64> {
    let mut p = vec![0.0; n + 1];
    p[0] = 1.0;
    if n >= 1 {
        p[1] = s;
    }
    for k in 1..n {
        let kf = k as f64;
        p[k + 1] = ((2.0 * kf + 1.0) * s * p[k] - kf * p[k - 1]) / (kf + 1.0);
    }
    p
}

/// Everything the assembly needs about the basis at one point.
#[derive(Debug, Clone)]
pub struct BasisPoint {
    pub values: Vec<f64>,
    /// `grads[i][l] = ∂φ_i/∂x_l`.
    pub grads: Vec<Vec<f64>>,
    pub laplacians: Vec<f64>,
}

/// Orthonormal tensor-Legendre basis on a box.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSet {
    domain: BoxDomain,
    degree: usize,
    truncation: Truncation,
    indices: Vec<Vec<usize>>,
    /// Per-axis scale `sqrt((2k+1)/2) * sqrt(2/width)` for `k = 0..=degree`.
    norms: Vec<Vec<f64>>,
}

/// Builds the basis with graded lexicographic enumeration: by total degree,
/// then by descending exponent on the first axis.
pub fn build_basis(domain: &BoxDomain, degree: usize, truncation: Truncation) -> BasisSet {
    BasisSet::new(domain.clone(), degree, truncation)
}

impl BasisSet {
    pub fn new(domain: BoxDomain, degree: usize, truncation: Truncation) -> Self {
        let indices = multi_indices(domain.dim(), degree, truncation);
        let norms = axis_norms(&domain, degree);
        Self {
            domain,
            degree,
            truncation,
            indices,
            norms,
        }
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn truncation(&self) -> Truncation {
        self.truncation
    }

    pub fn indices(&self) -> &[Vec<usize>] {
        &self.indices
    }

    /// Basis dimension `N`.
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.domain.check(x)?;
        Ok(self.values_unchecked(x))
    }

    /// `N × d` matrix of partial derivatives, row `i` is `∇φ_i`.
    pub fn eval_grad(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.domain.check(x)?;
        Ok(self.eval_all_unchecked(x).grads)
    }

    pub fn eval_laplacian(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.domain.check(x)?;
        Ok(self.eval_all_unchecked(x).laplacians)
    }

    pub fn eval_all(&self, x: &[f64]) -> Result<BasisPoint> {
        self.domain.check(x)?;
        Ok(self.eval_all_unchecked(x))
    }

    /// Evaluates `Σ coeffs_i φ_i(x)`.
    pub fn combine(&self, coeffs: &[f64], x: &[f64]) -> Result<f64> {
        if coeffs.len() != self.len() {
            return Err(Error::Dimension(format!(
                "{} coefficients for a basis of size {}",
                coeffs.len(),
                self.len()
            )));
        }
        let v = self.eval(x)?;
        Ok(v.iter().zip(coeffs).map(|(a, b)| a * b).sum())
    }

    pub(crate) fn values_unchecked(&self, x: &[f64]) -> Vec<f64> {
        let per_axis: Vec<Vec<f64>> = (0..self.dim())
            .map(|k| {
                let s = self.domain.to_reference(k, x[k]);
                let mut p = legendre_values(self.degree, s);
                for (v, n) in p.iter_mut().zip(&self.norms[k]) {
                    *v *= n;
                }
                p
            })
            .collect();
        self.indices
            .iter()
            .map(|idx| idx.iter().enumerate().map(|(k, &e)| per_axis[k][e]).product())
            .collect()
    }

    pub(crate) fn eval_all_unchecked(&self, x: &[f64]) -> BasisPoint {
        let d = self.dim();
        let per_axis: Vec<Legendre1d> = (0..d)
            .map(|k| {
                let s = self.domain.to_reference(k, x[k]);
                let jac = 2.0 / self.domain.width(k);
                let mut l = legendre_with_derivatives(self.degree, s);
                for e in 0..=self.degree {
                    let n = self.norms[k][e];
                    l.p[e] *= n;
                    l.dp[e] *= n * jac;
                    l.d2p[e] *= n * jac * jac;
                }
                l
            })
            .collect();

        let n = self.len();
        let mut values = Vec::with_capacity(n);
        let mut grads = Vec::with_capacity(n);
        let mut laplacians = Vec::with_capacity(n);
        for idx in &self.indices {
            let value: f64 = (0..d).map(|k| per_axis[k].p[idx[k]]).product();
            let mut grad = vec![0.0; d];
            let mut lap = 0.0;
            for l in 0..d {
                let mut g = per_axis[l].dp[idx[l]];
                let mut h = per_axis[l].d2p[idx[l]];
                for k in (0..d).filter(|&k| k != l) {
                    g *= per_axis[k].p[idx[k]];
                    h *= per_axis[k].p[idx[k]];
                }
                grad[l] = g;
                lap += h;
            }
            values.push(value);
            grads.push(grad);
            laplacians.push(lap);
        }
        BasisPoint {
            values,
            grads,
            laplacians,
        }
    }
}

fn axis_norms(domain: &BoxDomain, degree: usize) -> Vec<Vec<f64>> {
    (0..domain.dim())
        .map(|k| {
            let scale = (2.0 / domain.width(k)).sqrt();
            (0..=degree)
                .map(|e| ((2 * e + 1) as f64 / 2.0).sqrt() * scale)
                .collect()
        })
        .collect()
}

fn multi_indices(dim: usize, degree: usize, truncation: Truncation) -> Vec<Vec<usize>> {
    match dim {
        1 => (0..=degree).map(|e| vec![e]).collect(),
        _ => {
            let max_total = match truncation {
                Truncation::TotalDegree => degree,
                Truncation::Tensor => 2 * degree,
            };
            let mut out = Vec::new();
            for total in 0..=max_total {
                for first in (0..=total.min(degree)).rev() {
                    let second = total - first;
                    if second <= degree {
                        out.push(vec![first, second]);
                    }
                }
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::gauss_interior;
    use approx::assert_abs_diff_eq;

    #[test]
    fn constant_members_on_intervals() {
        let b = build_basis(&BoxDomain::interval(-1.0, 1.0).unwrap(), 0, Truncation::TotalDegree);
        assert_eq!(b.len(), 1);
        assert_abs_diff_eq!(b.eval(&[0.3]).unwrap()[0], 1.0 / 2f64.sqrt(), epsilon = 1e-15);

        let b = build_basis(&BoxDomain::interval(-4.0, 4.0).unwrap(), 0, Truncation::TotalDegree);
        assert_abs_diff_eq!(b.eval(&[2.0]).unwrap()[0], 1.0 / 8f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn endpoint_values_equal_norm_factors() {
        let b = build_basis(&BoxDomain::interval(-1.0, 1.0).unwrap(), 2, Truncation::TotalDegree);
        let v = b.eval(&[1.0]).unwrap();
        assert_abs_diff_eq!(v[0], 0.5f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(v[1], 1.5f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(v[2], 2.5f64.sqrt(), epsilon = 1e-15);

        let v = b.eval(&[0.0]).unwrap();
        assert_abs_diff_eq!(v[1], 0.0);
    }

    #[test]
    fn tensor_product_value() {
        let d = BoxDomain::square(-1.0, 1.0).unwrap();
        let b = build_basis(&d, 1, Truncation::Tensor);
        assert_eq!(b.len(), 4);
        assert_eq!(b.indices()[3], vec![1, 1]);
        let v = b.eval(&[1.0, 1.0]).unwrap();
        assert_abs_diff_eq!(v[3], 1.5, epsilon = 1e-14);
    }

    #[test]
    fn graded_lex_order() {
        let d = BoxDomain::square(0.0, 1.0).unwrap();
        let b = build_basis(&d, 2, Truncation::TotalDegree);
        let expect: Vec<Vec<usize>> = vec![
            vec![0, 0],
            vec![1, 0],
            vec![0, 1],
            vec![2, 0],
            vec![1, 1],
            vec![0, 2],
        ];
        assert_eq!(b.indices(), &expect[..]);
        assert_eq!(build_basis(&d, 8, Truncation::TotalDegree).len(), 45);
        assert_eq!(build_basis(&d, 3, Truncation::Tensor).len(), 16);
    }

    #[test]
    fn derivatives_of_low_degree_members() {
        let b = build_basis(&BoxDomain::interval(-1.0, 1.0).unwrap(), 2, Truncation::TotalDegree);
        for x in [-1.0, -0.3, 0.0, 0.8, 1.0] {
            let g = b.eval_grad(&[x]).unwrap();
            assert_abs_diff_eq!(g[0][0], 0.0);
            assert_abs_diff_eq!(g[1][0], 1.5f64.sqrt(), epsilon = 1e-14);
            let lap = b.eval_laplacian(&[x]).unwrap();
            assert_abs_diff_eq!(lap[0], 0.0);
            assert_abs_diff_eq!(lap[1], 0.0);
            assert_abs_diff_eq!(lap[2], 3.0 * 2.5f64.sqrt(), epsilon = 1e-13);
        }
        let b = build_basis(&BoxDomain::interval(0.0, 1.0).unwrap(), 2, Truncation::TotalDegree);
        assert_abs_diff_eq!(b.eval_grad(&[0.5]).unwrap()[2][0], 0.0, epsilon = 1e-13);
    }

    #[test]
    fn outside_point_is_rejected() {
        let b = build_basis(&BoxDomain::interval(-1.0, 1.0).unwrap(), 3, Truncation::TotalDegree);
        assert!(matches!(b.eval(&[1.5]), Err(Error::OutsideDomain { .. })));
        assert!(b.eval(&[1.0]).is_ok());
    }

    #[test]
    fn degenerate_domain_is_rejected() {
        assert!(BoxDomain::interval(1.0, 1.0).is_err());
        assert!(BoxDomain::new(vec![0.0, 0.0], vec![1.0]).is_err());
        assert!(BoxDomain::new(vec![0.0; 3], vec![1.0; 3]).is_err());
    }

    fn gram_error(b: &BasisSet, rule_points: usize) -> f64 {
        let rule = gauss_interior(b.domain(), rule_points);
        let n = b.len();
        let mut g = vec![vec![0.0; n]; n];
        for (x, w) in rule.points().iter().zip(rule.weights()) {
            let v = b.eval(x).unwrap();
            for i in 0..n {
                for j in 0..n {
                    g[i][j] += w * v[i] * v[j];
                }
            }
        }
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[i][j] - target).abs());
            }
        }
        worst
    }

    #[test]
    fn orthonormal_in_one_and_two_dimensions() {
        let b = build_basis(&BoxDomain::interval(-4.0, 4.0).unwrap(), 60, Truncation::TotalDegree);
        assert!(gram_error(&b, 61) < 1e-10);
        let b = build_basis(&BoxDomain::new(vec![-1.0, 0.0], vec![1.0, 3.0]).unwrap(), 8, Truncation::TotalDegree);
        assert!(gram_error(&b, 9) < 1e-10);
        let b = build_basis(&BoxDomain::square(-1.0, 1.0).unwrap(), 4, Truncation::Tensor);
        assert!(gram_error(&b, 5) < 1e-10);
    }

    #[test]
    fn tensor_laplacian_matches_finite_differences() {
        let d = BoxDomain::square(-1.0, 1.0).unwrap();
        let b = build_basis(&d, 2, Truncation::TotalDegree);
        let i20 = b.indices().iter().position(|k| k == &vec![2, 0]).unwrap();
        let x = [0.3, -0.45];
        let h = 1e-4;
        let f = |p: [f64; 2]| b.eval(&p).unwrap()[i20];
        let fd = (f([x[0] + h, x[1]]) - 2.0 * f(x) + f([x[0] - h, x[1]])) / (h * h)
            + (f([x[0], x[1] + h]) - 2.0 * f(x) + f([x[0], x[1] - h])) / (h * h);
        let lap = b.eval_laplacian(&x).unwrap()[i20];
        assert!((lap - fd).abs() < 1e-6, "{lap} vs {fd}");
        // P_2'' = 3 times the constant factor of the other axis.
        assert_abs_diff_eq!(lap, 3.0 * 2.5f64.sqrt() * 0.5f64.sqrt(), epsilon = 1e-13);
    }
}
