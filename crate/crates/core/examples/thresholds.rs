//! Threshold ratios and the chain of contraction constants.
//!
//! Run with `cargo run --example thresholds`.

use ssm_colorings::jacobian::marginal_lower_bound_exact;
use ssm_colorings::thresholds;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for digits in [2, 4, 8] {
        println!(
            "alpha' to {digits} digits: {:.*}",
            digits as usize,
            thresholds::solve_alpha_prime(digits)?
        );
    }
    println!("alpha' root: {:.12}", thresholds::alpha_prime_root()?);
    println!("alpha*: {:.12}", thresholds::solve_alpha_star());

    for r in [1.59, 1.8, 2.0, 3.0] {
        let p = thresholds::pipeline(r)?;
        println!(
            "r = {r}: C = {:.6}, K' = {:.6}, U' = {:.6}, U = {:.6}, zeta(6) = {:.6}",
            p.c,
            p.k_prime,
            p.u_prime,
            p.u,
            p.zeta(6)
        );
    }
    println!("L(5, 2) = {}", marginal_lower_bound_exact(5, 2)?);
    Ok(())
}
