//! The benchmark loops shipped with the crate and the outcome expected for each.

use serde::Serialize;

use crate::pipeline::PlanKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Category {
    #[serde(rename = "2D/2D")]
    Matrix,
    #[serde(rename = "3D/3D")]
    Cube,
    /// Nested loop over two one-dimensional inputs.
    #[serde(rename = "2D-loop/1D-input")]
    Pairs,
}

impl std::fmt::Display for Category {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Category::Matrix => "2D/2D",
            Category::Cube => "3D/3D",
            Category::Pairs => "2D-loop/1D-input",
        })
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CorpusEntry {
    pub name: &'static str,
    #[serde(skip)]
    pub source: &'static str,
    /// Any of these kinds is a match.
    pub kinds: &'static [PlanKind],
    /// Auxiliary accumulators in the plan; `None` when the entry is a
    /// negative one and the count is not meaningful.
    pub aux: Option<usize>,
    pub category: Category,
    pub smoke: bool,
}

impl CorpusEntry {
    pub fn matches(&self, kind: PlanKind, aux: usize) -> bool {
        self.kinds.contains(&kind) && self.aux.is_none_or(|a| a == aux)
    }
}

macro_rules! entry {
    ($name:literal, $kinds:expr, $aux:expr, $cat:ident, $smoke:literal) => {
        CorpusEntry {
            name: $name,
            source: include_str!(concat!("../corpus/", $name, ".dsl")),
            kinds: $kinds,
            aux: $aux,
            category: Category::$cat,
            smoke: $smoke,
        }
    };
}

const FULL: &[PlanKind] = &[PlanKind::FullDc];
const MAP: &[PlanKind] = &[PlanKind::MapOnly];
const FAILED: &[PlanKind] = &[PlanKind::Failed];
const NOT_FULL: &[PlanKind] = &[PlanKind::Failed, PlanKind::MapOnly];

pub const CORPUS: &[CorpusEntry] = &[
    entry!("sum", FULL, Some(0), Matrix, true),
    entry!("sorted", FULL, Some(1), Matrix, false),
    entry!("min_max", FULL, Some(0), Matrix, true),
    entry!("max_top_strip", FULL, Some(0), Matrix, false),
    entry!("max_bottom_strip", FULL, Some(1), Matrix, true),
    entry!("max_left_strip", FULL, Some(0), Matrix, true),
    entry!("mtls", FULL, Some(1), Matrix, true),
    entry!("bp", MAP, Some(1), Matrix, true),
    entry!("max_top_box", FULL, Some(0), Cube, false),
    entry!("mbbs", FULL, Some(1), Cube, true),
    entry!("max_left_box", FULL, Some(0), Cube, false),
    entry!("mode", FULL, Some(0), Pairs, false),
    entry!("max_dist", FULL, Some(0), Pairs, false),
    entry!("balanced_substr", FULL, Some(0), Pairs, false),
    entry!("lcs", FAILED, None, Pairs, true),
    entry!("max_top_subarray", NOT_FULL, None, Matrix, false),
];

pub fn entry(name: &str) -> Option<&'static CorpusEntry> {
    CORPUS.iter().find(|e| e.name == name)
}

pub fn smoke() -> impl Iterator<Item = &'static CorpusEntry> {
    CORPUS.iter().filter(|e| e.smoke)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::LoopNest;

    #[test]
    fn every_fixture_parses() {
        for e in CORPUS {
            LoopNest::from_source(e.source).unwrap_or_else(|err| panic!("{}: {err}", e.name));
        }
    }

    #[test]
    fn categories_follow_the_input_rank() {
        for e in CORPUS {
            let nest = LoopNest::from_source(e.source).unwrap();
            let rank = nest.inputs.iter().map(|d| d.ty.rank()).max().unwrap();
            let want = match e.category {
                Category::Matrix => (2, 2),
                Category::Cube => (3, 3),
                Category::Pairs => (2, 1),
            };
            assert_eq!((nest.depth(), rank), want, "{}", e.name);
        }
    }
}
