//! The gradient matrix `(diag pi - pi pi^T) diag gamma`, its spectral norm and
//! the closed-form bound, plus the recursion's partial derivatives at a point.
//!
//! Run with `cargo run --example jacobian_norm`.

use ssm_colorings::bp::{self, ColorDistribution};
use ssm_colorings::jacobian;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cases = [
        (vec![0.25, 0.25, 0.25, 0.25], vec![1.0, 1.0, 1.0, 1.0]),
        (vec![0.6, 0.3, 0.1], vec![1.0, 0.5, 0.0]),
        (
            vec![0.4, 0.4, 0.1, 0.1],
            vec![0.5f64.sqrt(), 0.5f64.sqrt(), 1.0, 0.0],
        ),
    ];
    for (pi, gamma) in cases {
        let bundle = jacobian::build_matrix(&ColorDistribution::new(pi.clone())?, &gamma)?;
        println!(
            "pi = {pi:?}, gamma_hat = {gamma:?}\n  ||M||_2 = {:.12} via {:?}, bound = {:.12}",
            bundle.spectral_norm, bundle.method, bundle.closed_form_bound
        );
    }

    let a = vec![
        ColorDistribution::new(vec![0.5, 0.25, 0.25])?,
        ColorDistribution::uniform(3),
    ];
    let b = vec![
        ColorDistribution::new(vec![0.2, 0.4, 0.4])?,
        ColorDistribution::point_mass(3, 2),
    ];
    let point = bp::interpolation_point(0.5, &a, &b)?;
    let jac = bp::bp_jacobian_for(&point, &[0])?;
    println!("pi_hat(0.5) = {:?}", point.pi_hat.probs());
    for c in 0..3 {
        let row: Vec<f64> = (0..3).map(|j| jac.get(c, 0, j).unwrap()).collect();
        println!("  d f_{c} / d x_0 = {row:?}");
    }
    Ok(())
}
