//! Chebyshev and Fourier collocation grids: nodes, differentiation matrices
//! and interpolation weights.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::basis::BoxDomain;

/// One axis of a collocation grid.
#[derive(Debug, Clone)]
pub enum SpectralAxis {
    /// Chebyshev–Gauss–Lobatto nodes in ascending order, endpoints included.
    Chebyshev {
        nodes: Vec<f64>,
        bary: Vec<f64>,
        diff: DMatrix<f64>,
    },
    /// Equispaced periodic nodes `a + j·h`, `j = 0..n`, right endpoint excluded.
    Fourier {
        lower: f64,
        period: f64,
        nodes: Vec<f64>,
        diff: DMatrix<f64>,
    },
}

impl SpectralAxis {
    /// `n` Chebyshev points on `[a, b]`.
    pub fn chebyshev(a: f64, b: f64, n: usize) -> Self {
        assert!(n >= 2);
        let m = n - 1;
        let nodes: Vec<f64> = (0..n)
            .map(|j| {
                let s = -(PI * j as f64 / m as f64).cos();
                0.5 * (a + b) + 0.5 * (b - a) * s
            })
            .collect();
        let bary: Vec<f64> = (0..n)
            .map(|j| {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                if j == 0 || j == m {
                    0.5 * sign
                } else {
                    sign
                }
            })
            .collect();
        let mut diff = DMatrix::zeros(n, n);
        for i in 0..n {
            let mut row_sum = 0.0;
            for j in 0..n {
                if i != j {
                    let v = (bary[j] / bary[i]) / (nodes[i] - nodes[j]);
                    diff[(i, j)] = v;
                    row_sum += v;
                }
            }
            diff[(i, i)] = -row_sum;
        }
        SpectralAxis::Chebyshev { nodes, bary, diff }
    }

    /// `n` (even) equispaced points on the period `[a, b)`.
    pub fn fourier(a: f64, b: f64, n: usize) -> Self {
        assert!(n >= 2 && n % 2 == 0, "Fourier grids need an even point count");
        let period = b - a;
        let h = period / n as f64;
        let nodes: Vec<f64> = (0..n).map(|j| a + h * j as f64).collect();
        let scale = 2.0 * PI / period;
        let hh = 2.0 * PI / n as f64;
        let mut diff = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let k = i as i64 - j as i64;
                    let sign = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                    diff[(i, j)] = scale * 0.5 * sign / (0.5 * k as f64 * hh).tan();
                }
            }
        }
        SpectralAxis::Fourier {
            lower: a,
            period,
            nodes,
            diff,
        }
    }

    pub fn nodes(&self) -> &[f64] {
        match self {
            SpectralAxis::Chebyshev { nodes, .. } | SpectralAxis::Fourier { nodes, .. } => nodes,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes().len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes().is_empty()
    }

    pub fn diff(&self) -> &DMatrix<f64> {
        match self {
            SpectralAxis::Chebyshev { diff, .. } | SpectralAxis::Fourier { diff, .. } => diff,
        }
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self, SpectralAxis::Fourier { .. })
    }

    /// Weights `ℓ_j(x)` with `u(x) = Σ ℓ_j(x) u_j` for the grid interpolant.
    pub fn interpolation_weights(&self, x: f64) -> Vec<f64> {
        let n = self.len();
        match self {
            SpectralAxis::Chebyshev { nodes, bary, .. } => {
                if let Some(j) = nodes.iter().position(|&xj| xj == x) {
                    let mut w = vec![0.0; n];
                    w[j] = 1.0;
                    return w;
                }
                let mut w: Vec<f64> = nodes
                    .iter()
                    .zip(bary)
                    .map(|(&xj, &bj)| bj / (x - xj))
                    .collect();
                let total: f64 = w.iter().sum();
                for v in &mut w {
                    *v /= total;
                }
                w
            }
            SpectralAxis::Fourier {
                lower,
                period,
                nodes,
                ..
            } => {
                let nf = n as f64;
                let theta0 = 2.0 * PI * (x - lower) / period;
                let halves: Vec<f64> = (0..nodes.len())
                    .map(|j| 0.5 * (theta0 - 2.0 * PI * j as f64 / nf))
                    .collect();
                let mut w = vec![0.0; n];
                if let Some(j) = halves.iter().position(|h| h.sin().abs() < 1e-14) {
                    w[j] = 1.0;
                    return w;
                }
                // Periodic sinc for even n: sin(nθ/2) / (n tan(θ/2)).
                for (wj, half) in w.iter_mut().zip(&halves) {
                    *wj = (nf * half).sin() / (nf * half.tan());
                }
                w
            }
        }
    }
}

/// Tensor-product collocation grid with the first axis varying fastest.
#[derive(Debug, Clone)]
pub struct SpectralGrid {
    axes: Vec<SpectralAxis>,
}

impl SpectralGrid {
    pub fn new(axes: Vec<SpectralAxis>) -> Self {
        assert!(!axes.is_empty() && axes.len() <= 2);
        Self { axes }
    }

    pub fn chebyshev(domain: &BoxDomain, n: usize) -> Self {
        Self::new(
            (0..domain.dim())
                .map(|k| SpectralAxis::chebyshev(domain.lower()[k], domain.upper()[k], n))
                .collect(),
        )
    }

    pub fn fourier(domain: &BoxDomain, n: usize) -> Self {
        Self::new(
            (0..domain.dim())
                .map(|k| SpectralAxis::fourier(domain.lower()[k], domain.upper()[k], n))
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[SpectralAxis] {
        &self.axes
    }

    /// Total number of grid nodes.
    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, multi: &[usize]) -> usize {
        match multi.len() {
            1 => multi[0],
            _ => multi[0] + self.axes[0].len() * multi[1],
        }
    }

    pub fn multi_index(&self, flat: usize) -> Vec<usize> {
        match self.dim() {
            1 => vec![flat],
            _ => {
                let nx = self.axes[0].len();
                vec![flat % nx, flat / nx]
            }
        }
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .enumerate()
            .map(|(k, &i)| self.axes[k].nodes()[i])
            .collect()
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Nodes on the edge of a non-periodic axis.
    pub fn is_boundary(&self, flat: usize) -> bool {
        self.multi_index(flat)
            .iter()
            .zip(&self.axes)
            .any(|(&i, a)| !a.is_periodic() && (i == 0 || i + 1 == a.len()))
    }

    /// Applies the axis differentiation matrix along `axis`.
    pub fn differentiate(&self, values: &[f64], axis: usize) -> Vec<f64> {
        let mut out = vec![0.0; values.len()];
        self.for_each_line(axis, |line| {
            let d = self.axes[axis].diff();
            for (a, &ia) in line.iter().enumerate() {
                let mut s = 0.0;
                for (b, &ib) in line.iter().enumerate() {
                    s += d[(a, b)] * values[ib];
                }
                out[ia] = s;
            }
        });
        out
    }

    /// Calls `f` with the flat indices of every grid line along `axis`.
    pub fn for_each_line(&self, axis: usize, mut f: impl FnMut(&[usize])) {
        match self.dim() {
            1 => {
                let line: Vec<usize> = (0..self.len()).collect();
                f(&line);
            }
            _ => {
                let nx = self.axes[0].len();
                let ny = self.axes[1].len();
                if axis == 0 {
                    for j in 0..ny {
                        let line: Vec<usize> = (0..nx).map(|i| i + nx * j).collect();
                        f(&line);
                    }
                } else {
                    for i in 0..nx {
                        let line: Vec<usize> = (0..ny).map(|j| i + nx * j).collect();
                        f(&line);
                    }
                }
            }
        }
    }

    /// Interpolation weights for a point, one vector per axis.
    pub fn weights_at(&self, x: &[f64]) -> PointWeights {
        PointWeights(
            self.axes
                .iter()
                .zip(x)
                .map(|(a, &xi)| a.interpolation_weights(xi))
                .collect(),
        )
    }

    /// Evaluates the grid interpolant of `values` with precomputed weights.
    pub fn interpolate(&self, values: &[f64], w: &PointWeights) -> f64 {
        match self.dim() {
            1 => w.0[0].iter().zip(values).map(|(a, b)| a * b).sum(),
            _ => {
                let nx = self.axes[0].len();
                let (wx, wy) = (&w.0[0], &w.0[1]);
                let mut total = 0.0;
                for (j, &wyj) in wy.iter().enumerate() {
                    if wyj == 0.0 {
                        continue;
                    }
                    let row = &values[nx * j..nx * (j + 1)];
                    let s: f64 = wx.iter().zip(row).map(|(a, b)| a * b).sum();
                    total += wyj * s;
                }
                total
            }
        }
    }
}

/// Per-axis interpolation weights of one query point.
#[derive(Debug, Clone)]
pub struct PointWeights(pub Vec<Vec<f64>>);
