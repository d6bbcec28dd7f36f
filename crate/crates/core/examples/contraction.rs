//! One-level contraction trials: root gap against the largest child gap, with
//! the aggregation certificate per pair.
//!
//! Run with `cargo run --release --example contraction`.

use ssm_colorings::experiments::{run_contraction, smallest_contracting_q, ContractionConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for (q, d) in [(6, 2), (9, 2), (14, 2)] {
        let mut config = ContractionConfig::new(q, d, 4, 30, 0);
        config.t_grid = 201;
        let report = run_contraction(&config)?;
        let s = &report.summary;
        println!(
            "q = {q}, d = {d}: max ratio {:.5}, median {:.5}, certificates hold: {}, max oracle delta {:e}",
            s.max_ratio.unwrap_or(f64::NAN),
            s.median_ratio.unwrap_or(f64::NAN),
            s.all_certificates_hold,
            s.max_oracle_delta.unwrap_or(0.0)
        );
        let worst = report
            .rows
            .iter()
            .filter(|r| r.ratio.is_some())
            .max_by(|a, b| a.ratio.partial_cmp(&b.ratio).unwrap())
            .unwrap();
        println!(
            "  worst trial {} ({}, depth {}): root gap {:e}, child gap {:e}, K = {:.5}",
            worst.trial,
            worst.style.unwrap(),
            worst.depth,
            worst.root_gap,
            worst.max_child_gap,
            worst.k_grid.unwrap_or(f64::NAN)
        );
    }
    for d in [1, 2, 3] {
        let q = smallest_contracting_q(d, 4, d + 2..=2 * d + 10, 15, 0)?;
        println!("d = {d}: smallest q with every ratio below one: {q:?}");
    }
    Ok(())
}
