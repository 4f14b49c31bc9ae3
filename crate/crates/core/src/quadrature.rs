//! Gauss–Legendre rules on boxes and on box boundaries.
//!
//! The interior rule doubles as the observation point set: snapshots are
//! sampled at its nodes and every volume integral reuses them.

use serde::{Deserialize, Serialize};

use crate::basis::BoxDomain;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`,
/// nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "a Gauss rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi's initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let l = legendre_with_derivatives_first(n, x);
            dp = l.1;
            let step = l.0 / l.1;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let l = legendre_with_derivatives_first(n, x);
        if l.1 != 0.0 {
            dp = l.1;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivatives_first(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    // P_n'(x) = n (x P_n − P_{n−1}) / (x² − 1)
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// A positive-weight rule on the interior of a box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
    exactness_degree: usize,
    points_per_dim: usize,
}

impl QuadratureRule {
    pub fn new(points: Vec<Vec<f64>>, weights: Vec<f64>, exactness_degree: usize, points_per_dim: usize) -> Self {
        Self {
            points,
            weights,
            exactness_degree,
            points_per_dim,
        }
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Per-dimension polynomial degree integrated exactly.
    pub fn exactness_degree(&self) -> usize {
        self.exactness_degree
    }

    pub fn points_per_dim(&self) -> usize {
        self.points_per_dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(x))
            .sum()
    }
}

/// Tensor-product Gauss–Legendre rule mapped to `domain`. Points are ordered
/// with the first axis varying fastest.
pub fn gauss_interior(domain: &BoxDomain, points_per_dim: usize) -> QuadratureRule {
    let (s, w) = gauss_legendre(points_per_dim);
    let axes: Vec<(Vec<f64>, Vec<f64>)> = (0..domain.dim())
        .map(|k| {
            let half = 0.5 * domain.width(k);
            (
                s.iter().map(|&si| domain.from_reference(k, si)).collect(),
                w.iter().map(|&wi| wi * half).collect(),
            )
        })
        .collect();
    let (points, weights) = match domain.dim() {
        1 => (
            axes[0].0.iter().map(|&x| vec![x]).collect(),
            axes[0].1.clone(),
        ),
        _ => {
            let mut pts = Vec::with_capacity(points_per_dim * points_per_dim);
            let mut wts = Vec::with_capacity(points_per_dim * points_per_dim);
            for (y, wy) in axes[1].0.iter().zip(&axes[1].1) {
                for (x, wx) in axes[0].0.iter().zip(&axes[0].1) {
                    pts.push(vec![*x, *y]);
                    wts.push(wx * wy);
                }
            }
            (pts, wts)
        }
    };
    QuadratureRule::new(points, weights, 2 * points_per_dim - 1, points_per_dim)
}

/// One flat side of the box with its outward unit normal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Face {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub normal: Vec<f64>,
}

/// Quadrature on `∂D`, one Gauss rule per face.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryRule {
    faces: Vec<Face>,
}

impl BoundaryRule {
    pub fn new(faces: Vec<Face>) -> Self {
        Self { faces }
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    /// Total number of boundary points over all faces.
    pub fn len(&self) -> usize {
        self.faces.iter().map(|f| f.points.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flattened `(point, weight, normal)` triples, face by face.
    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64, &[f64])> {
        self.faces.iter().flat_map(|f| {
            f.points
                .iter()
                .zip(&f.weights)
                .map(move |(p, &w)| (p.as_slice(), w, f.normal.as_slice()))
        })
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        self.iter().map(|(p, _, _)| p.to_vec()).collect()
    }

    pub fn integrate(&self, f: impl Fn(&[f64], &[f64]) -> f64) -> f64 {
        self.iter().map(|(x, w, n)| w * f(x, n)).sum()
    }
}

/// Gauss rules on every face of the box. In 1D the boundary is the two
/// endpoints with unit weight and normals `∓1`, and `points_per_edge` is
/// ignored. In 2D the faces are ordered left, right, bottom, top.
pub fn gauss_boundary(domain: &BoxDomain, points_per_edge: usize) -> BoundaryRule {
    let lo = domain.lower();
    let hi = domain.upper();
    if domain.dim() == 1 {
        return BoundaryRule::new(vec![
            Face {
                points: vec![vec![lo[0]]],
                weights: vec![1.0],
                normal: vec![-1.0],
            },
            Face {
                points: vec![vec![hi[0]]],
                weights: vec![1.0],
                normal: vec![1.0],
            },
        ]);
    }
    let (s, w) = gauss_legendre(points_per_edge);
    let along = |k: usize| -> (Vec<f64>, Vec<f64>) {
        let half = 0.5 * domain.width(k);
        (
            s.iter().map(|&si| domain.from_reference(k, si)).collect(),
            w.iter().map(|&wi| wi * half).collect(),
        )
    };
    let (ys, wy) = along(1);
    let (xs, wx) = along(0);
    let vertical = |x: f64, nx: f64| Face {
        points: ys.iter().map(|&y| vec![x, y]).collect(),
        weights: wy.clone(),
        normal: vec![nx, 0.0],
    };
    let horizontal = |y: f64, ny: f64| Face {
        points: xs.iter().map(|&x| vec![x, y]).collect(),
        weights: wx.clone(),
        normal: vec![0.0, ny],
    };
    BoundaryRule::new(vec![
        vertical(lo[0], -1.0),
        vertical(hi[0], 1.0),
        horizontal(lo[1], -1.0),
        horizontal(hi[1], 1.0),
    ])
}
