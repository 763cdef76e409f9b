//! Divide-and-conquer parallelization of nested loops.
//!
//! A loop nest written in a small imperative language is made memoryless,
//! summarized, lifted with auxiliary accumulators when needed, and given a
//! synthesized parallel join. Every step is checked against a reference
//! interpreter on bounded input samples.

pub mod corpus;
pub mod expr;
pub mod frontend;
pub mod interp;
pub mod lifting;
pub mod pipeline;
pub mod symbolic;
pub mod synthesis;
pub mod value;
