pub mod ablate;
pub mod bench;
pub mod eval;
pub mod segment;
pub mod synth;
