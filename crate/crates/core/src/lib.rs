pub mod circuit;
pub mod compiler;
pub mod crystal;
pub mod egnn;
pub mod fpn;
pub mod synth;
