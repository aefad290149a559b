//! Test support: reference blocks and designs, random generators and
//! brute-force oracles. Enabled by the `testkit` feature.

pub mod blocks;
pub mod designs;
#[cfg(feature = "testkit")]
pub mod gen;
pub mod oracle;
