//! Root marginals from belief propagation, on a free tree and under a boundary.
//!
//! Run with `cargo run --example bp_marginal`.

use ssm_colorings::bp;
use ssm_colorings::tree::{Boundary, TreeInstance, TreeShape};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let free = TreeInstance::free(TreeShape::new(4, 2, 5)?);
    println!("free tree, q = 4: {:?}", bp::root_marginal(&free)?.probs());

    // both leaves frozen to color 0 exclude it at the root
    let leaves: Boundary = [("0".parse()?, 0), ("1".parse()?, 0)].into_iter().collect();
    let inst = TreeInstance::new(TreeShape::new(3, 2, 1)?, leaves)?;
    println!(
        "two frozen leaves, q = 3: {:?}",
        bp::root_marginal(&inst)?.probs()
    );

    let deep: Boundary = [
        ("0.0.0".parse()?, 1),
        ("0.0.1".parse()?, 2),
        ("1.1".parse()?, 1),
    ]
    .into_iter()
    .collect();
    let inst = TreeInstance::new(TreeShape::new(3, 2, 3)?, deep)?;
    println!(
        "deeper boundary, q = 3: {:?}",
        bp::root_marginal(&inst)?.probs()
    );
    for (i, child) in bp::child_marginals(&inst)?.iter().enumerate() {
        println!("  child {i}: {:?}", child.probs());
    }
    Ok(())
}
