//! Spectral forward solve of a heat equation against its exact solution.

use std::f64::consts::PI;

use coefid::forward::{self, constant_field, field, BoundaryCondition, SpatialScheme, StorePlan};
use coefid::{BoxDomain, CoefficientFields, FluxSpec, SolverConfig};

fn main() -> coefid::Result<()> {
    let kappa = 0.1;
    let coeffs = CoefficientFields {
        alpha: vec![constant_field(0.0)],
        kappa: constant_field(kappa),
        flux: FluxSpec::Linear,
    };
    for (scheme, bc) in [
        (SpatialScheme::Fourier, BoundaryCondition::Periodic),
        (SpatialScheme::Chebyshev, BoundaryCondition::Dirichlet),
    ] {
        for dt in [0.1, 0.05, 0.025] {
            let cfg = SolverConfig {
                domain: BoxDomain::interval(-1.0, 1.0)?,
                scheme,
                bc,
                n_coll: 32,
                dt,
                t_final: 2.0,
                initial_condition: field(|x| (PI * x[0]).sin()),
                store: StorePlan::Steps(vec![0, (2.0 / dt).round() as usize]),
            };
            let traj = forward::solve(&cfg, &coeffs)?;
            let last = traj.len() - 1;
            let decay = (-kappa * PI * PI * 2.0).exp();
            let err = traj
                .grid()
                .points()
                .iter()
                .zip(traj.level_values(last))
                .map(|(p, v)| (v - decay * (PI * p[0]).sin()).abs())
                .fold(0.0, f64::max);
            println!("{scheme:?} dt={dt}: max error {err:.3e}");
        }
    }
    Ok(())
}
