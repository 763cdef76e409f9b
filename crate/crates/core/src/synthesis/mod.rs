//! Join synthesis: sketches, grammar enumeration and the CEGIS driver.

pub mod cegis;
pub mod grammar;
pub mod join;
pub mod sketch;

pub use cegis::{
    empty_variants, layers, synthesize, EmptyChoice, Problem, Report, Rights, Solution, SynthConfig, SynthError,
};
pub use join::{base_name, left_name, right_name, CompiledJoin, JoinDef, JoinDoc, Param, Side};
pub use sketch::{memoryless, parallel, Hole, HoleKind, Origin, Sketch, SketchError, SketchKind};
