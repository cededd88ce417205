pub mod ablate;
pub mod eval;
pub mod synth;
pub mod train;
