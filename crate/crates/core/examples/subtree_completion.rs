//! Completing an irregular tree with unconditioned subtrees leaves the root gap unchanged.
//!
//! Run with `cargo run --example subtree_completion`.

use ssm_colorings::experiments::subtree_completion_check;
use ssm_colorings::oracle::DEFAULT_STATE_BUDGET;
use ssm_colorings::tree::{Boundary, BoundaryPair, TreeShape};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let shape = TreeShape::new(5, 3, 4)?
        .with_pruned(["1", "0.2", "2.0.1", "2.2.2.0"].map(|s| s.parse().unwrap()))?;
    let eta: Boundary = [("0.0.0.1".parse()?, 0), ("2.1.1".parse()?, 3)]
        .into_iter()
        .collect();
    let eta_prime: Boundary = [("0.0.0.1".parse()?, 2), ("2.1.1".parse()?, 3)]
        .into_iter()
        .collect();
    let pair = BoundaryPair::new(shape, eta, eta_prime)?;
    let check = subtree_completion_check(&pair, DEFAULT_STATE_BUDGET)?;
    println!(
        "pruned tree:    ||pi - pi'|| = {:.15}",
        check.pruned_distance
    );
    println!(
        "completed tree: ||pi - pi'|| = {:.15}",
        check.completed_distance
    );
    println!(
        "identical rational marginals: {}",
        check.marginals_identical
    );
    Ok(())
}
