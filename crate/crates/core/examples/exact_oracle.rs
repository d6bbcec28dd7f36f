//! Exact coloring counts and rational marginals, checked against belief propagation.
//!
//! Run with `cargo run --example exact_oracle`.

use ssm_colorings::bp;
use ssm_colorings::experiments::{random_extendible_instance, trial_rng};
use ssm_colorings::oracle::{self, DEFAULT_STATE_BUDGET};
use ssm_colorings::tree::TreeShape;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let shape = TreeShape::new(4, 2, 3)?;
    let mut rng = trial_rng(1, 0);
    let mut worst: f64 = 0.0;
    for k in 0..5 {
        let inst = random_extendible_instance(&shape, 0.3, &mut rng, DEFAULT_STATE_BUDGET)?;
        let exact = oracle::exact_marginal(&inst, DEFAULT_STATE_BUDGET)?;
        let fractions: Vec<String> = (0..exact.q()).map(|c| exact.prob(c).to_string()).collect();
        let delta = bp::root_marginal(&inst)?.max_abs_diff(&exact.to_f64());
        worst = worst.max(delta);
        println!(
            "instance {k}: {} frozen, {} extensions, marginal [{}], |bp - exact| = {delta:e}",
            inst.boundary().len(),
            exact.denominator(),
            fractions.join(", ")
        );
    }
    println!("worst disagreement: {worst:e}");
    Ok(())
}
