//! Orthonormal Legendre bases and Gauss rules on a box.

use coefid::{build_basis, gauss_boundary, gauss_interior, BoxDomain, Truncation};

fn main() -> coefid::Result<()> {
    let d = BoxDomain::new(vec![-1.0, 0.0], vec![1.0, 3.0])?;
    let basis = build_basis(&d, 6, Truncation::TotalDegree);
    let rule = gauss_interior(&d, 7);
    println!("{} members of total degree <= 6 on {:?} x {:?}", basis.len(), d.lower(), d.upper());

    // Gram matrix on the product rule.
    let vals: Vec<Vec<f64>> = rule.points().iter().map(|x| basis.eval(x)).collect::<Result<_, _>>()?;
    let mut worst: f64 = 0.0;
    for i in 0..basis.len() {
        for j in 0..basis.len() {
            let g: f64 = vals.iter().zip(rule.weights()).map(|(v, w)| w * v[i] * v[j]).sum();
            worst = worst.max((g - if i == j { 1.0 } else { 0.0 }).abs());
        }
    }
    println!("max |G - I| = {worst:.2e}");

    // Gauss-Green: the integral of each derivative equals the boundary flux.
    let edges = gauss_boundary(&d, 7);
    let mut gap: f64 = 0.0;
    for k in 0..basis.len() {
        for axis in 0..2 {
            let lhs: f64 = rule
                .points()
                .iter()
                .zip(rule.weights())
                .map(|(x, w)| w * basis.eval_grad(x).unwrap()[k][axis])
                .sum();
            let rhs = edges.integrate(|x, n| basis.eval(x).unwrap()[k] * n[axis]);
            gap = gap.max((lhs - rhs).abs());
        }
    }
    println!("max |interior - boundary| = {gap:.2e}");
    Ok(())
}
