pub mod eval;
pub mod gradcheck;
pub mod gtgen;
pub mod infer;
pub mod rectify;
pub mod render;
pub mod synth;
