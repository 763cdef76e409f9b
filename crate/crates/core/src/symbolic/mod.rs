//! Symbolic unfolding, normal forms and cost-guided normalization.

pub mod normal;
pub mod normalize;
pub mod rules;
pub mod sym;
pub mod unfold;

use thiserror::Error;

pub use normal::{
    classify, classify_under, constant_leaf, is_constant_normal, spine_cost, Cost, Leaf, NormalFormReport, NormalKind,
};
pub use normalize::{equivalent, normalize, phase1_cost, NormConfig, Normalized, Step};
pub use rules::{check_rule, Rule, RULES};
pub use sym::{Purity, Sym};
pub use unfold::{symbolic_state, unfold_join, unfold_loop, Exec, Reader, SymVal, NODE_BUDGET};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SymError {
    #[error("unfolding exceeded the node budget ({0} nodes)")]
    Explosion(usize),
    #[error("`{0}` must be a concrete integer during unfolding")]
    NotConcrete(String),
    #[error("`{0}` is unbound during unfolding")]
    Unbound(String),
    #[error("shape error during unfolding: {0}")]
    Shape(String),
    #[error("unfolding reached open hole ??{0}")]
    Hole(usize),
    #[error("rewrite budget exhausted; best so far: {best}")]
    Budget { best: Sym },
    #[error("no normal form found; best so far: {best}")]
    NoNormalForm { best: Sym },
}
