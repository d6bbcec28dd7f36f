//! Reading and writing instance files (1-based colors on disk).
//!
//! Run with `cargo run --example instance_files`.

use ssm_colorings::experiments::{generate_boundary_pair, trial_rng, PairRequest, PairStyle};
use ssm_colorings::instance_file::InstanceFile;
use ssm_colorings::oracle::DEFAULT_STATE_BUDGET;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let text = r#"{"q": 3, "d": 2, "h": 1, "eta": [{"v": "0", "c": 1}, {"v": "1", "c": 1}]}"#;
    let inst = InstanceFile::parse(text)?.instance()?;
    let (v, c) = inst.boundary().iter().next().unwrap();
    println!("vertex {v} has in-memory color {c}");

    let request = PairRequest {
        q: 5,
        d: 2,
        h: 3,
        depth: 3,
        style: PairStyle::AdversarialLeaves,
        extra_root_child: false,
    };
    let pair = generate_boundary_pair(&request, &mut trial_rng(0, 0), DEFAULT_STATE_BUDGET)?;
    let json = InstanceFile::from_pair(&pair).to_json();
    println!("{json}");
    assert_eq!(InstanceFile::parse(&json)?.pair()?, pair);
    Ok(())
}
