//! Input language: parsing, conversion to equation systems and the
//! functional form used by the rest of the pipeline.

pub mod ast;
pub mod equations;
pub mod functional;
pub mod parser;
pub mod shape;

pub use ast::{Decl, LValue, Pos, Program, Role, Stmt, Type};
pub use equations::{to_equations, ConvertError, Equation, EquationSystem};
pub use functional::{to_functional, FrontendError, FuncForm, LoopNest};
pub use parser::{parse, parse_block, parse_expr, parse_type, ParseError};
pub use shape::{analyze, SeqInput, ShapeError, ShapeSpec};
