use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::basis::{BoxDomain, Truncation};
use crate::error::Result;
use crate::forward::{constant_field, field, BoundaryCondition, CoefficientFields, FluxSpec, ScalarField, SpatialScheme};
use crate::recovery::Unknowns;

/// 1D advection `u_t = −(α u)_x` with `α = ᾱ(1 + δ sin ωx)` and a Gaussian
/// initial state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Advection1d {
    pub domain: [f64; 2],
    pub alpha_bar: f64,
    pub delta: f64,
    pub omega: f64,
    pub mu: f64,
    pub sigma2: f64,
}

impl Default for Advection1d {
    fn default() -> Self {
        Self {
            domain: [-4.0, 4.0],
            alpha_bar: 0.3,
            delta: 0.2,
            omega: PI,
            mu: 0.0,
            sigma2: 0.3,
        }
    }
}

/// 1D diffusion `u_t = (κ u_x)_x` with
/// `κ = κ̄(2 + δ cos ωx + 2δ sin(ωx/2) + δ² eˣ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Diffusion1d {
    pub domain: [f64; 2],
    pub kappa_bar: f64,
    pub delta: f64,
    pub omega: f64,
    pub mu: f64,
    pub sigma2: f64,
}

impl Default for Diffusion1d {
    fn default() -> Self {
        Self {
            domain: [-3.0, 3.0],
            kappa_bar: 0.3,
            delta: 0.1,
            omega: 4.0 * PI,
            mu: 0.0,
            sigma2: 0.2,
        }
    }
}

/// Periodic 1D advection–diffusion with
/// `α = ᾱ(1 + δ sin ωx + 2δ cos(ωx/2))`, `κ = κ̄(1 + δ cos ωx)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdvDiff1d {
    pub domain: [f64; 2],
    pub alpha_bar: f64,
    pub kappa_bar: f64,
    pub delta: f64,
    pub omega: f64,
}

impl Default for AdvDiff1d {
    fn default() -> Self {
        Self {
            domain: [-1.0, 1.0],
            alpha_bar: 1.0,
            kappa_bar: 0.5,
            delta: 0.2,
            omega: 10.0 * PI,
        }
    }
}

/// Viscous Burgers `u_t = −(α u²/2)_x + (κ u_x)_x` with constant `α = ᾱ`
/// and `κ = κ̄(1 + δ cos ωx)`, started from `−sin πx`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Burgers1d {
    pub domain: [f64; 2],
    pub alpha_bar: f64,
    pub kappa_bar: f64,
    pub delta: f64,
    pub omega: f64,
}

impl Default for Burgers1d {
    fn default() -> Self {
        Self {
            domain: [-1.0, 1.0],
            alpha_bar: 1.0,
            kappa_bar: 0.1,
            delta: 0.2,
            omega: 3.0 * PI,
        }
    }
}

/// 2D advection–diffusion on a square with a rotating velocity
/// `α = (ᾱ_x y(1 + δ_α sin ωx), −ᾱ_y x(1 + δ_α sin ωy))` and
/// `κ = κ̄(3 + δ_κ sin ωx + δ_κ cos ωy)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdvDiff2d {
    /// Bounds of the square, shared by both axes.
    pub domain: [f64; 2],
    pub alpha_bar_x: f64,
    pub alpha_bar_y: f64,
    pub delta_alpha: f64,
    pub kappa_bar: f64,
    pub delta_kappa: f64,
    pub omega: f64,
    pub mu: [f64; 2],
    pub sigma2: [f64; 2],
}

impl Default for AdvDiff2d {
    fn default() -> Self {
        Self {
            domain: [-1.0, 1.0],
            alpha_bar_x: 1.0,
            alpha_bar_y: 1.0,
            delta_alpha: 0.1,
            kappa_bar: 0.02,
            delta_kappa: 1.0,
            omega: PI,
            mu: [-0.5, -0.5],
            sigma2: [0.2, 0.2],
        }
    }
}

/// The benchmark problems with their true coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ProblemSpec {
    #[serde(rename = "advection_1d")]
    Advection1d(Advection1d),
    #[serde(rename = "diffusion_1d")]
    Diffusion1d(Diffusion1d),
    #[serde(rename = "advdiff_1d")]
    Advdiff1d(AdvDiff1d),
    #[serde(rename = "burgers_1d")]
    Burgers1d(Burgers1d),
    #[serde(rename = "advdiff_2d")]
    Advdiff2d(AdvDiff2d),
}

/// Solver, sampling and recovery settings used when a config leaves them
/// out.
#[derive(Debug, Clone, PartialEq)]
pub struct Defaults {
    pub scheme: SpatialScheme,
    pub bc: BoundaryCondition,
    pub n_coll: usize,
    pub dt: f64,
    pub t_final: f64,
    pub n_master: usize,
    pub interior_points: usize,
    pub boundary_points: usize,
    pub degrees: Vec<usize>,
    pub test_degree: usize,
    pub unknowns: Unknowns,
    pub truncation: Truncation,
}

fn gaussian(mu: f64, sigma2: f64) -> impl Fn(f64) -> f64 + Send + Sync + Copy {
    move |x| (-(x - mu).powi(2) / (2.0 * sigma2)).exp() / (2.0 * PI * sigma2).sqrt()
}

impl ProblemSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ProblemSpec::Advection1d(_) => "advection_1d",
            ProblemSpec::Diffusion1d(_) => "diffusion_1d",
            ProblemSpec::Advdiff1d(_) => "advdiff_1d",
            ProblemSpec::Burgers1d(_) => "burgers_1d",
            ProblemSpec::Advdiff2d(_) => "advdiff_2d",
        }
    }

    pub fn domain(&self) -> Result<BoxDomain> {
        match self {
            ProblemSpec::Advection1d(p) => BoxDomain::interval(p.domain[0], p.domain[1]),
            ProblemSpec::Diffusion1d(p) => BoxDomain::interval(p.domain[0], p.domain[1]),
            ProblemSpec::Advdiff1d(p) => BoxDomain::interval(p.domain[0], p.domain[1]),
            ProblemSpec::Burgers1d(p) => BoxDomain::interval(p.domain[0], p.domain[1]),
            ProblemSpec::Advdiff2d(p) => BoxDomain::square(p.domain[0], p.domain[1]),
        }
    }

    pub fn coefficients(&self) -> CoefficientFields {
        match *self {
            ProblemSpec::Advection1d(Advection1d {
                alpha_bar: a,
                delta: d,
                omega: w,
                ..
            }) => CoefficientFields {
                alpha: vec![field(move |x| a * (1.0 + d * (w * x[0]).sin()))],
                kappa: constant_field(0.0),
                flux: FluxSpec::Linear,
            },
            ProblemSpec::Diffusion1d(Diffusion1d {
                kappa_bar: k,
                delta: d,
                omega: w,
                ..
            }) => CoefficientFields {
                alpha: vec![constant_field(0.0)],
                kappa: field(move |x| {
                    let x = x[0];
                    k * (2.0 + d * (w * x).cos() + 2.0 * d * (0.5 * w * x).sin() + d * d * x.exp())
                }),
                flux: FluxSpec::Linear,
            },
            ProblemSpec::Advdiff1d(AdvDiff1d {
                alpha_bar: a,
                kappa_bar: k,
                delta: d,
                omega: w,
                ..
            }) => CoefficientFields {
                alpha: vec![field(move |x| {
                    a * (1.0 + d * (w * x[0]).sin() + 2.0 * d * (0.5 * w * x[0]).cos())
                })],
                kappa: field(move |x| k * (1.0 + d * (w * x[0]).cos())),
                flux: FluxSpec::Linear,
            },
            ProblemSpec::Burgers1d(Burgers1d {
                alpha_bar: a,
                kappa_bar: k,
                delta: d,
                omega: w,
                ..
            }) => CoefficientFields {
                alpha: vec![constant_field(a)],
                kappa: field(move |x| k * (1.0 + d * (w * x[0]).cos())),
                flux: FluxSpec::Burgers,
            },
            ProblemSpec::Advdiff2d(AdvDiff2d {
                alpha_bar_x: ax,
                alpha_bar_y: ay,
                delta_alpha: da,
                kappa_bar: k,
                delta_kappa: dk,
                omega: w,
                ..
            }) => CoefficientFields {
                alpha: vec![
                    field(move |x| ax * x[1] * (1.0 + da * (w * x[0]).sin())),
                    field(move |x| -ay * x[0] * (1.0 + da * (w * x[1]).sin())),
                ],
                kappa: field(move |x| k * (3.0 + dk * (w * x[0]).sin() + dk * (w * x[1]).cos())),
                flux: FluxSpec::Linear,
            },
        }
    }

    pub fn initial_condition(&self) -> ScalarField {
        match *self {
            ProblemSpec::Advection1d(Advection1d { mu, sigma2, .. })
            | ProblemSpec::Diffusion1d(Diffusion1d { mu, sigma2, .. }) => {
                let g = gaussian(mu, sigma2);
                field(move |x| g(x[0]))
            }
            ProblemSpec::Advdiff1d(_) => field(|x| {
                let x = x[0];
                (PI * x).sin() - 2.0 * (-100.0 * (x - 0.5).powi(2)).exp() + (-100.0 * (x + 0.5).powi(2)).exp()
            }),
            ProblemSpec::Burgers1d(_) => field(|x| -(PI * x[0]).sin()),
            ProblemSpec::Advdiff2d(AdvDiff2d { mu, sigma2, .. }) => {
                let (gx, gy) = (gaussian(mu[0], sigma2[0]), gaussian(mu[1], sigma2[1]));
                field(move |x| gx(x[0]) * gy(x[1]))
            }
        }
    }

    pub fn defaults(&self) -> Defaults {
        let cheb = (SpatialScheme::Chebyshev, BoundaryCondition::Dirichlet);
        let (scheme, bc, n_coll, dt, t_final) = match self {
            ProblemSpec::Advection1d(_) => (cheb.0, cheb.1, 100, 1e-4, 1.0),
            ProblemSpec::Diffusion1d(_) => (cheb.0, cheb.1, 150, 1e-4, 0.3),
            ProblemSpec::Advdiff1d(_) => (SpatialScheme::Fourier, BoundaryCondition::Periodic, 200, 1e-5, 1.0),
            ProblemSpec::Burgers1d(_) => (cheb.0, cheb.1, 128, 1e-5, 0.2),
            ProblemSpec::Advdiff2d(_) => (cheb.0, cheb.1, 40, 1e-3, 4.0),
        };
        let (n_master, interior_points, boundary_points) = match self {
            ProblemSpec::Advection1d(_) | ProblemSpec::Diffusion1d(_) => (50, 50, 1),
            ProblemSpec::Advdiff1d(_) => (50, 200, 1),
            ProblemSpec::Burgers1d(_) => (50, 100, 1),
            ProblemSpec::Advdiff2d(_) => (200, 80, 80),
        };
        let (degrees, test_degree, unknowns) = match self {
            ProblemSpec::Advection1d(_) => ((1..=8).map(|k| 4 * k).collect(), 50, Unknowns::Alpha),
            ProblemSpec::Diffusion1d(_) => ((1..=8).map(|k| 4 * k).collect(), 50, Unknowns::Kappa),
            ProblemSpec::Advdiff1d(_) => (vec![60], 60, Unknowns::Both),
            ProblemSpec::Burgers1d(_) => (vec![40], 40, Unknowns::Both),
            ProblemSpec::Advdiff2d(_) => (vec![8], 8, Unknowns::Both),
        };
        Defaults {
            scheme,
            bc,
            n_coll,
            dt,
            t_final,
            n_master,
            interior_points,
            boundary_points,
            degrees,
            test_degree,
            unknowns,
            truncation: Truncation::TotalDegree,
        }
    }
}
