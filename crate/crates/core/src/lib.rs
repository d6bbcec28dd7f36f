//! Strong spatial mixing machinery for proper q-colorings of d-ary trees:
//! a belief-propagation engine, an exact counting oracle, Jacobian and
//! spectral-norm bounds, threshold constants and seeded experiments.
//!
//! Colors are 0-based in memory and 1-based in files and command output.

pub mod bp;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod instance_file;
pub mod jacobian;
pub mod oracle;
pub mod thresholds;
pub mod tree;
pub mod verify;

pub use error::{Error, Result};
