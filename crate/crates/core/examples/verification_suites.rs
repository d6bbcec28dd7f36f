//! The randomized verification suites at small sizes.
//!
//! Run with `cargo run --release --example verification_suites`.

use ssm_colorings::experiments::regression_corpus;
use ssm_colorings::verify;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for row in verify::norm_suite(&[2, 3, 5, 8], 2_000, 0)? {
        println!(
            "norm bound q = {}: {} violations, worst excess {:e}",
            row.q, row.violations, row.worst_excess
        );
    }
    let fd = verify::jacobian_fd_suite(50, 0)?;
    println!("finite differences: worst {:e}", fd.worst);
    let oracle = verify::oracle_equivalence_suite(200, 0)?;
    println!("oracle equivalence: worst {:e}", oracle.worst);
    let corpus = regression_corpus()?;
    let lower = verify::lower_bound_suite(&corpus)?;
    println!(
        "lower bound: {} checked, smallest available marginal {:.5}",
        lower.checked, lower.worst
    );
    let cert = verify::certificate_suite(&corpus, 201)?;
    println!(
        "certificate: {} checked, {} failures",
        cert.checked, cert.failures
    );
    Ok(())
}
