//! Exact compilers between arithmetic formulas, circuits and matrix words.

pub mod circuit;
pub mod families;
pub mod matrixword;
pub mod par;
pub mod poly;
pub mod random;
pub mod transforms;
pub mod verify;
