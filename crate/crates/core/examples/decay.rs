//! Decay of the root gap with the depth of the disagreements, with a
//! log-linear fit and the reference profile `zeta`.
//!
//! Run with `cargo run --release --example decay`.

use ssm_colorings::experiments::{decay_sweep, DecayConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for extra_root_child in [false, true] {
        let config = DecayConfig {
            extra_root_child,
            ..DecayConfig::new(14, 2, 6, 40, 0)
        };
        let curve = decay_sweep(&config)?;
        println!(
            "root with {} children",
            if extra_root_child { 3 } else { 2 }
        );
        for level in &curve.levels {
            println!(
                "  level {}: max gap {:.3e}, zeta {:.3e}",
                level.level,
                level.max_gap,
                level.zeta.unwrap_or(f64::NAN)
            );
        }
        if let Some(fit) = curve.fit {
            println!("  slope {:.4}, R^2 {:.5}", fit.slope, fit.r_squared);
        }
    }
    Ok(())
}
