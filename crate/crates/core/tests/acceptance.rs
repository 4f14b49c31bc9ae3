//! Acceptance suite. Prints one `PASS`/`FAIL` line per criterion and exits
//! non-zero if any fails. Pass substrings as arguments to run a subset.

mod common;

use std::f64::consts::PI;
use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use coefid::data::localfit::{fit_local_polynomial, second_order_difference, StencilPosition};
use coefid::diagnostics::{role_matrix, sample_matrix, separability_scan, Role, Tolerance, Verdict};
use coefid::experiment::{self, DegreeResult, ExperimentConfig, SweepParameter};
use coefid::forward::{self, constant_field, field, BoundaryCondition, SpatialScheme, StorePlan};
use coefid::recovery::{
    assemble_collocation, assemble_galerkin, recover, solve_least_squares, GalerkinAssembler, LeastSquaresSystem,
    Method, RecoveryOptions, Unknowns,
};
use coefid::{
    build_basis, gauss_boundary, gauss_interior, BasisSet, BoxDomain, CoefficientFields, Error, FluxSpec,
    SolverConfig, Truncation,
};

use common::{config_path, flat, manufactured, smooth_1d, smooth_2d, Field};

const ORTHONORMALITY_TOL: f64 = 1e-10;
const QUADRATURE_TOL: f64 = 1e-12;
const DIVERGENCE_TOL: f64 = 1e-10;
const LOCAL_FIT_TOL: f64 = 1e-8;
const HEAT_TOL: f64 = 1e-4;
const CN_RATIO: (f64, f64) = (3.4, 4.6);
const WEAK_FORM_TOL: f64 = 1e-8;
const QR_TOL: f64 = 1e-10;
const QR_COND_LIMIT: f64 = 1e10;
const DESK_DECAY: f64 = 10.0;
const PERIODIC_TOL: f64 = 1e-6;
const BURGERS_TOL: f64 = 1e-3;
const FILTER_GAIN: f64 = 5.0;
const NON_UNIQUE_RATIO: f64 = 1e-8;
const SEPARABILITY_TOL: f64 = 1e-10;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn load(name: &str) -> ExperimentConfig {
    ExperimentConfig::load(&config_path(name)).expect("bundled config parses")
}

fn alpha_err(r: &DegreeResult) -> f64 {
    r.errors().map_or(f64::INFINITY, |e| e.alpha[0])
}

fn kappa_err(r: &DegreeResult) -> f64 {
    r.errors().and_then(|e| e.kappa).unwrap_or(f64::INFINITY)
}

// --- unit suites ---------------------------------------------------------

fn gram_error(b: &BasisSet) -> f64 {
    let rule = gauss_interior(b.domain(), b.degree() + 2);
    let n = b.len();
    let mut g = DMatrix::<f64>::zeros(n, n);
    for (x, w) in rule.points().iter().zip(rule.weights()) {
        let v = DVector::from_vec(b.eval(x).unwrap());
        g += &v * v.transpose() * *w;
    }
    (g - DMatrix::identity(n, n)).amax()
}

fn quadrature_error() -> f64 {
    let mut worst: f64 = 0.0;
    for n in [1, 5, 20, 50] {
        let (a, b) = (-4.0, 4.0);
        let rule = gauss_interior(&BoxDomain::interval(a, b).unwrap(), n);
        for k in 0..2 * n {
            let exact = (b.powi(k as i32 + 1) - a.powi(k as i32 + 1)) / (k + 1) as f64;
            let got = rule.integrate(|x| (x[0] / b).powi(k as i32) * b.powi(k as i32));
            let scale = exact.abs().max(b.powi(k as i32 + 1));
            worst = worst.max((got - exact).abs() / scale);
        }
    }
    let d = BoxDomain::new(vec![-1.0, 0.0], vec![1.0, 2.0]).unwrap();
    let rule = gauss_interior(&d, 6);
    for i in 0..12 {
        for j in 0..12 {
            let ex = (1.0 - (-1.0f64).powi(i + 1)) / (i + 1) as f64;
            let ey = 2.0f64.powi(j + 1) / (j + 1) as f64;
            let got = rule.integrate(|x| x[0].powi(i) * x[1].powi(j));
            worst = worst.max((got - ex * ey).abs() / ey.max(1.0));
        }
    }
    worst
}

/// `∫ ∂_l φ_i = ∮ φ_i n_l` for every basis member and axis.
fn divergence_error() -> f64 {
    let mut worst: f64 = 0.0;
    let domains = [
        BoxDomain::interval(-4.0, 4.0).unwrap(),
        BoxDomain::new(vec![-1.0, 0.0], vec![1.0, 3.0]).unwrap(),
    ];
    for d in &domains {
        let degree = if d.dim() == 1 { 20 } else { 8 };
        let b = build_basis(d, degree, Truncation::TotalDegree);
        let rule = gauss_interior(d, degree + 1);
        let edge = gauss_boundary(d, degree + 1);
        for l in 0..d.dim() {
            let mut lhs = vec![0.0; b.len()];
            for (x, w) in rule.points().iter().zip(rule.weights()) {
                for (i, g) in b.eval_grad(x).unwrap().iter().enumerate() {
                    lhs[i] += w * g[l];
                }
            }
            let mut rhs = vec![0.0; b.len()];
            for (x, w, n) in edge.iter() {
                for (i, v) in b.eval(x).unwrap().iter().enumerate() {
                    rhs[i] += w * v * n[l];
                }
            }
            for (a, c) in lhs.iter().zip(&rhs) {
                worst = worst.max((a - c).abs());
            }
        }
    }
    worst
}

fn local_fit_error() -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    // Cubic in 1D and 2D, fitted with degree 3 from scattered points.
    let p1 = |x: f64| 1.0 - 2.0 * x + 0.5 * x * x + 0.25 * x * x * x;
    let pts: Vec<Vec<f64>> = (0..40).map(|_| vec![rng.random_range(-1.0..1.0)]).collect();
    let vals: Vec<f64> = pts.iter().map(|p| p1(p[0])).collect();
    let fit = fit_local_polynomial(&pts, &vals, 3).unwrap();
    for x in [-0.7, 0.0, 0.3] {
        let j = fit.jet(&[x]);
        worst = worst
            .max((j.value - p1(x)).abs())
            .max((j.gradient[0] - (-2.0 + x + 0.75 * x * x)).abs())
            .max((j.second[0] - (1.0 + 1.5 * x)).abs());
    }
    let p2 = |x: f64, y: f64| 0.3 + x * y - y * y * y + 2.0 * x * x * y;
    let pts: Vec<Vec<f64>> = (0..120)
        .map(|_| vec![rng.random_range(0.0..2.0), rng.random_range(-1.0..1.0)])
        .collect();
    let vals: Vec<f64> = pts.iter().map(|p| p2(p[0], p[1])).collect();
    let fit = fit_local_polynomial(&pts, &vals, 3).unwrap();
    for (x, y) in [(0.5, 0.2), (1.5, -0.5)] {
        let j = fit.jet(&[x, y]);
        worst = worst
            .max((j.value - p2(x, y)).abs())
            .max((j.gradient[0] - (y + 4.0 * x * y)).abs())
            .max((j.gradient[1] - (x - 3.0 * y * y + 2.0 * x * x)).abs())
            .max((j.second[0] - 4.0 * y).abs())
            .max((j.second[1] + 6.0 * y).abs());
    }
    // Three-point time stencils are exact on quadratics.
    let q = |t: f64| 2.0 - t + 3.0 * t * t;
    let dq = |t: f64| -1.0 + 6.0 * t;
    let h = 0.01;
    let s = [q(0.0), q(h), q(2.0 * h)];
    worst = worst
        .max((second_order_difference(s, h, StencilPosition::Forward) - dq(0.0)).abs())
        .max((second_order_difference(s, h, StencilPosition::Central) - dq(h)).abs())
        .max((second_order_difference(s, h, StencilPosition::Backward) - dq(2.0 * h)).abs());
    worst
}

fn unit_suites() -> Outcome {
    let ortho = gram_error(&build_basis(&BoxDomain::interval(-4.0, 4.0).unwrap(), 20, Truncation::TotalDegree)).max(
        gram_error(&build_basis(
            &BoxDomain::new(vec![-1.0, 0.0], vec![1.0, 3.0]).unwrap(),
            8,
            Truncation::TotalDegree,
        )),
    );
    let quad = quadrature_error();
    let div = divergence_error();
    let fit = local_fit_error();
    check(
        ortho <= ORTHONORMALITY_TOL && quad <= QUADRATURE_TOL && div <= DIVERGENCE_TOL && fit <= LOCAL_FIT_TOL,
        format!("gram {ortho:.1e}, quadrature {quad:.1e}, divergence {div:.1e}, local fit {fit:.1e}"),
    )
}

// --- forward solver ------------------------------------------------------

fn heat_error(n: usize, dt: f64, t: f64) -> f64 {
    let cfg = SolverConfig {
        domain: BoxDomain::interval(-1.0, 1.0).unwrap(),
        scheme: SpatialScheme::Fourier,
        bc: BoundaryCondition::Periodic,
        n_coll: n,
        dt,
        t_final: t,
        initial_condition: field(|x| (PI * x[0]).sin()),
        store: StorePlan::Steps(vec![0, (t / dt).round() as usize]),
    };
    let coeffs = CoefficientFields {
        alpha: vec![constant_field(0.0)],
        kappa: constant_field(0.1),
        flux: FluxSpec::Linear,
    };
    let traj = forward::solve(&cfg, &coeffs).unwrap();
    let last = traj.len() - 1;
    let decay = (-0.1 * PI * PI * t).exp();
    traj.grid()
        .points()
        .iter()
        .zip(traj.level_values(last))
        .map(|(p, v)| (v - decay * (PI * p[0]).sin()).abs())
        .fold(0.0, f64::max)
}

fn solver_verification() -> Outcome {
    let err = heat_error(64, 1e-3, 0.1);
    let ratio = heat_error(32, 0.1, 2.0) / heat_error(32, 0.05, 2.0);
    check(
        err < HEAT_TOL && (CN_RATIO.0..=CN_RATIO.1).contains(&ratio),
        format!("heat error {err:.2e}, dt-halving ratio {ratio:.3}"),
    )
}

// --- weak form -----------------------------------------------------------

/// `∫ L(u; α_N, κ_N) ψ_j` by quadrature of the strong form on a finer rule.
fn strong_form_moments(
    f: Field,
    t: f64,
    trial: &BasisSet,
    test: &BasisSet,
    flux: FluxSpec,
    c: &[f64],
) -> DVector<f64> {
    let dim = trial.dim();
    let n = trial.len();
    let rule = gauss_interior(trial.domain(), 80);
    let mut out = DVector::zeros(test.len());
    for (x, w) in rule.points().iter().zip(rule.weights()) {
        let jet = f(t, x);
        let bp = trial.eval_all(x).unwrap();
        let combine = |off: usize, v: &dyn Fn(usize) -> f64| (0..n).map(|i| c[off + i] * v(i)).sum::<f64>();
        let mut l = jet.u_t;
        for a in 0..dim {
            let alpha = combine(a * n, &|i| bp.values[i]);
            let dalpha = combine(a * n, &|i| bp.grads[i][a]);
            l += dalpha * flux.value(jet.u) + alpha * flux.derivative(jet.u) * jet.grad[a];
        }
        let off = dim * n;
        let kappa = combine(off, &|i| bp.values[i]);
        let lap: f64 = jet.hess.iter().sum();
        let mut grad_dot = 0.0;
        for a in 0..dim {
            grad_dot += combine(off, &|i| bp.grads[i][a]) * jet.grad[a];
        }
        l -= grad_dot + kappa * lap;
        let psi = test.eval(x).unwrap();
        for j in 0..psi.len() {
            out[j] += w * l * psi[j];
        }
    }
    out
}

fn weak_form_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let times = [0.0, 0.4, 0.9];
    let cases: [(BoxDomain, Field, usize, usize, usize); 2] = [
        (BoxDomain::interval(-1.0, 2.0).unwrap(), smooth_1d, 6, 8, 40),
        (BoxDomain::new(vec![-1.0, 0.0], vec![1.0, 2.0]).unwrap(), smooth_2d, 4, 5, 30),
    ];
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for (domain, f, trial_deg, test_deg, q) in &cases {
        let (s, d) = manufactured(domain, *q, *q, &times, *f);
        let trial = build_basis(domain, *trial_deg, Truncation::TotalDegree);
        let test = build_basis(domain, *test_deg, Truncation::TotalDegree);
        for flux in [FluxSpec::Linear, FluxSpec::Burgers] {
            let asm = GalerkinAssembler::new(&s, &d, &trial, &test, flux).unwrap();
            let blocks: Vec<_> = (0..times.len()).map(|m| asm.blocks(m)).collect();
            for _ in 0..20 {
                let p = (domain.dim() + 1) * trial.len();
                let c: Vec<f64> = (0..p).map(|_| rng.random_range(-1.0..1.0)).collect();
                for (m, blk) in blocks.iter().enumerate() {
                    let e = blk.stacked(Unknowns::Both);
                    let weak = &blk.load - e * DVector::from_column_slice(&c);
                    let strong = strong_form_moments(*f, times[m], &trial, &test, flux, &c);
                    let scale = strong.amax().max(1.0);
                    worst = worst.max((weak - strong).amax() / scale);
                }
                checked += 1;
            }
        }
    }
    check(
        worst <= WEAK_FORM_TOL,
        format!("{checked} random coefficient sets, worst deviation {worst:.2e}"),
    )
}

// --- least-squares oracle ------------------------------------------------

fn qr_solve(sys: &LeastSquaresSystem) -> DVector<f64> {
    let (a, b) = sys.stacked();
    let qr = a.qr();
    let y = qr.q().tr_mul(&b);
    qr.r().solve_upper_triangular(&y).expect("full column rank")
}

fn galerkin_vs_qr() -> Outcome {
    let times = [0.0, 0.25, 0.5, 0.75, 1.0];
    let mut systems = Vec::new();
    let d1 = BoxDomain::interval(-1.0, 2.0).unwrap();
    let (s, d) = manufactured(&d1, 40, 1, &times, smooth_1d);
    let test = build_basis(&d1, 12, Truncation::TotalDegree);
    for deg in [2, 4, 6, 8] {
        let trial = build_basis(&d1, deg, Truncation::TotalDegree);
        for flux in [FluxSpec::Linear, FluxSpec::Burgers] {
            for u in [Unknowns::Alpha, Unknowns::Kappa, Unknowns::Both] {
                systems.push(assemble_galerkin(&s, &d, &trial, &test, flux, u).unwrap());
                systems.push(assemble_collocation(&s, &d, &trial, flux, u).unwrap());
            }
        }
    }
    let d2 = BoxDomain::new(vec![-1.0, 0.0], vec![1.0, 2.0]).unwrap();
    let (s, d) = manufactured(&d2, 20, 20, &times, smooth_2d);
    let test = build_basis(&d2, 6, Truncation::TotalDegree);
    for deg in [1, 2, 3] {
        let trial = build_basis(&d2, deg, Truncation::TotalDegree);
        systems.push(assemble_galerkin(&s, &d, &trial, &test, FluxSpec::Linear, Unknowns::Both).unwrap());
        systems.push(assemble_collocation(&s, &d, &trial, FluxSpec::Burgers, Unknowns::Both).unwrap());
    }
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for sys in &systems {
        let ev = sys.spectrum();
        let cond = ev.last().unwrap() / ev[0];
        if !(ev[0] > 0.0 && cond < QR_COND_LIMIT) {
            continue;
        }
        let (c, _) = solve_least_squares(sys, 0.0).unwrap();
        let oracle = qr_solve(sys);
        let rel = (DVector::from_vec(c) - &oracle).norm() / oracle.norm();
        worst = worst.max(rel);
        checked += 1;
    }
    check(
        checked > 0 && worst <= QR_TOL,
        format!("{checked} of {} systems below the condition limit, worst relative gap {worst:.2e}", systems.len()),
    )
}

// --- experiments ---------------------------------------------------------

fn desk_scale_advection() -> Outcome {
    let cfg = load("example1_noiseless.toml");
    let report = experiment::run(&cfg, None).map_err(|e| e.to_string())?;
    let errs: Vec<(usize, f64)> = report.results.iter().map(|r| (r.degree, alpha_err(r))).collect();
    let monotone = errs.windows(2).all(|w| w[1].1 < w[0].1);
    let at = |n: usize| errs.iter().find(|e| e.0 == n).map_or(f64::NAN, |e| e.1);
    let decay = at(4) / at(12);
    let listed: Vec<String> = errs.iter().map(|(n, e)| format!("n={n} {e:.2e}")).collect();
    check(
        monotone && decay >= DESK_DECAY,
        format!("{}; n=4/n=12 = {decay:.1}", listed.join(", ")),
    )
}

fn both_fields(config: &str, tol: f64) -> Outcome {
    let cfg = load(config);
    let report = experiment::run(&cfg, None).map_err(|e| e.to_string())?;
    let r = &report.results[0];
    let (a, k) = (alpha_err(r), kappa_err(r));
    check(
        a <= tol && k <= tol,
        format!("n={}: alpha {a:.2e}, kappa {k:.2e}", r.degree),
    )
}

fn filter_gain() -> Outcome {
    let mut cfg = load("example1_noisy.toml");
    cfg.recovery.degrees = Some(vec![20]);
    cfg.sweep.epsilons = vec![1e-3];
    let (_, rows) = experiment::sweep(&cfg, SweepParameter::Noise, rayon::current_num_threads())
        .map_err(|e| e.to_string())?;
    let pick = |filtered: bool| {
        rows.iter()
            .find(|r| r.filtered == filtered)
            .map_or(f64::INFINITY, |r| alpha_err(&r.result))
    };
    let (f, u) = (pick(true), pick(false));
    check(
        f <= u / FILTER_GAIN,
        format!("n=20, eps=1e-3: filtered {f:.3e}, unfiltered {u:.3e}, gain {:.1}", u / f),
    )
}

fn method_comparison() -> Outcome {
    let mut cfg = load("example2_noisy.toml");
    cfg.recovery.degrees = Some(vec![20]);
    cfg.filter.enabled = true;
    let (_, rows) = experiment::sweep(&cfg, SweepParameter::Method, rayon::current_num_threads())
        .map_err(|e| e.to_string())?;
    let pick = |m: Method| {
        rows.iter()
            .find(|r| r.result.method == m)
            .map_or(f64::INFINITY, |r| kappa_err(&r.result))
    };
    let (g, c) = (pick(Method::Galerkin), pick(Method::Collocation));
    check(
        g < c,
        format!("n=20, eps=1e-4: galerkin {g:.4e}, collocation {c:.4e}"),
    )
}

fn uniqueness_negative() -> Outcome {
    let domain = BoxDomain::interval(-1.0, 1.0).unwrap();
    let times: Vec<f64> = (0..20).map(|k| 0.05 * k as f64).collect();
    let (s, d) = manufactured(&domain, 40, 1, &times, flat);
    let opts = RecoveryOptions {
        test_degree: 12,
        unknowns: Unknowns::Both,
        ..RecoveryOptions::default()
    };
    let ratio = match recover(&s, &d, 6, FluxSpec::Linear, &opts) {
        Err(Error::NonUniqueSolution { ratio, .. }) => ratio,
        Err(e) => return Err(format!("unexpected error: {e}")),
        Ok(_) => return Err("solve succeeded on x-independent data".into()),
    };
    let g = role_matrix(Role::Advection, &s, Some(&d), FluxSpec::Linear).map_err(|e| e.to_string())?;
    let scan = separability_scan(&g, Role::Advection, Tolerance::Fixed(SEPARABILITY_TOL)).map_err(|e| e.to_string())?;
    check(
        ratio < NON_UNIQUE_RATIO && scan.global() == Verdict::Separable,
        format!(
            "eigenvalue ratio {ratio:.2e}, full window {} (sigma2/sigma1 {:.1e})",
            scan.global().name(),
            scan.windows[0].ratio2
        ),
    )
}

fn separability_classes() -> Outcome {
    let times: Vec<f64> = (0..24).map(|k| k as f64 / 23.0).collect();
    let points: Vec<Vec<f64>> = (0..40).map(|k| vec![-1.0 + 2.0 * k as f64 / 39.0]).collect();
    let cases: [(&str, fn(f64, &[f64]) -> f64, Verdict); 3] = [
        ("exp(-t) sin x", |t, x| (-t).exp() * x[0].sin(), Verdict::Separable),
        ("sin(t + x)", |t, x| (t + x[0]).sin(), Verdict::WeaklySeparable),
        ("exp(-(x - t)^2)", |t, x| (-(x[0] - t).powi(2)).exp(), Verdict::NonSeparable),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, f, want) in cases {
        let g = sample_matrix(&times, &points, f);
        let r = separability_scan(&g, Role::State, Tolerance::Fixed(SEPARABILITY_TOL)).map_err(|e| e.to_string())?;
        let w = &r.windows[0];
        ok &= r.global() == want;
        parts.push(format!(
            "{name}: {} ({:.1e}, {:.1e})",
            r.global().name(),
            w.ratio2,
            w.ratio3
        ));
    }
    check(ok, parts.join("; "))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("unit_suites", unit_suites),
        ("solver_verification", solver_verification),
        ("weak_form_identity", weak_form_identity),
        ("least_squares_oracle", galerkin_vs_qr),
        ("advection_desk_scale", desk_scale_advection),
        ("periodic_advection_diffusion", || both_fields("example3_periodic.toml", PERIODIC_TOL)),
        ("burgers", || both_fields("example4_burgers.toml", BURGERS_TOL)),
        ("noise_filter_gain", filter_gain),
        ("galerkin_beats_collocation", method_comparison),
        ("uniqueness_negative", uniqueness_negative),
        ("separability_classes", separability_classes),
    ];
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, f) in criteria {
        if !filters.is_empty() && !filters.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        let clock = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = clock.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {name} [{secs:.1}s] {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name} [{secs:.1}s] {detail}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
