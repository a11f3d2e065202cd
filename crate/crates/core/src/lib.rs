//! Code watermarking toolkit: hide and recover bit strings in source-code
//! variable names. A graph-attention encoder summarizes each variable's
//! AST context; an L-bit chunk of the message selects an attention head whose
//! features drive a name decoder, and a classifier recovers the chunk from
//! the renamed code.

pub mod attacks;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod graph;
pub mod lang;
pub mod model;
pub mod nn;
pub mod teacher;
pub mod vocab;

pub use error::{Error, Result};
