pub mod bcd;
pub mod harness;
pub mod linalg;
pub mod rank_one;
pub mod reductions;
pub mod rng;
pub mod signgraph;
pub mod tvpi;
