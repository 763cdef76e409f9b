//! Auxiliary accumulators.
//!
//! A state variable whose unfolding over a few elements is in normal form, but
//! whose leaves need input-only parts that no existing variable provides, is
//! lifted: each such part `u_k` is matched against `u_{k-1} ⊞ w_k` where `w_k`
//! is an existing variable or a row-local field, and the matched recursion is
//! added to the loop as a new state variable.

mod discover;
mod insert;
mod lift;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frontend::LoopNest;
use crate::interp::EvalError;
use crate::symbolic::{Step, SymError};

pub use discover::{discover_recursion, extract_required_info, Atom, Discovery, Family, Template};
pub use insert::{aux_name, identity_of, insert_aux};
pub use lift::{
    check_aux_values, check_projection, homomorphism_lift, memoryless_lift, trivial_memoryless_lift, LiftConfig,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Scalar accumulator folded over the elements.
    Fold,
    /// Cell-wise combination with a sequence of the same length.
    Zip,
    /// The whole consumed prefix, kept verbatim.
    Prefix,
}

/// Loop level whose iterations update the accumulator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Level {
    Outer,
    Inner,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AuxShape {
    Scalar,
    /// One cell per cell of the named sequence variable.
    Cells(String),
    Input,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AuxSource {
    /// An existing state variable, read after its own update.
    State(String),
    /// A variable recomputed by every row, read at the end of the row.
    Field(String),
    Rows,
}

/// An auxiliary accumulator as added to the loop.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuxDef {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: String,
    pub shape: AuxShape,
    pub init: String,
    pub scheme: Scheme,
    pub op: String,
    pub source: AuxSource,
    pub level: Level,
    /// The variable whose lifting needed it.
    pub target: String,
    /// The update statement, as inserted.
    pub update: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LiftKind {
    Nontrivial,
    TrivialMemoryless,
    Failed,
}

/// A recorded input-only part and the accumulator meant to hold it after `k`
/// elements.
#[derive(Clone, Debug)]
pub struct Evidence {
    pub aux: String,
    pub k: usize,
    pub cell: Option<usize>,
    pub u: crate::symbolic::Sym,
}

#[derive(Clone, Debug)]
pub struct NormTrace {
    pub label: String,
    pub steps: Vec<Step>,
    pub result: String,
    pub cost: String,
}

#[derive(Clone, Debug)]
pub struct LiftResult {
    pub aux: Vec<AuxDef>,
    pub lifted: LoopNest,
    pub kind: LiftKind,
    pub evidence: Vec<Evidence>,
    pub explain: Vec<String>,
    pub traces: Vec<NormTrace>,
}

impl LiftResult {
    pub fn explain_text(&self) -> String {
        let mut s = String::new();
        for l in &self.explain {
            s.push_str(l);
            s.push('\n');
        }
        s
    }

    pub fn trace_text(&self) -> String {
        let mut s = String::new();
        for t in &self.traces {
            s.push_str(&format!("# {}\n", t.label));
            for st in &t.steps {
                s.push_str(&format!("{st}\n"));
            }
            s.push_str(&format!("=> {} {}\n", t.cost, t.result));
        }
        s
    }
}

#[derive(Debug, Clone, Error)]
pub enum LiftError {
    #[error("`{var}` has no normal form: {reason}")]
    NotNormal { var: String, reason: String },
    #[error("no recursion scheme produces `{0}`")]
    NoRecursion(String),
    #[error("`{0}` is not assigned in an inner loop")]
    NoInnerLoop(String),
    #[error("every required part is already computed; lifting adds nothing")]
    NothingToAdd,
    #[error("cannot place accumulator: {0}")]
    Insert(String),
    #[error(transparent)]
    Sym(#[from] SymError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("lifted loop disagrees with the original on sample {0}")]
    Projection(usize),
}
