//! Causal-tree summaries of medical case reports.
//!
//! A case is written as an indentation-based forest: one node per line, a
//! child indented one level under its parent. Each line carries a head
//! entity plus intra-node modifiers spelled with operator symbols:
//!
//! | relation  | symbol | head of the relation      |
//! |-----------|--------|---------------------------|
//! | located   | `@`    | operand before the symbol |
//! | polarity  | `/`    | operand before the symbol |
//! | tested    | `=`    | operand after the symbol  |
//! | featured  | `＊`    | operand after the symbol  |
//!
//! A leading `H:` marks a node as medical history or treatment.
//!
//! The crate parses and serializes that format ([`format`]), flattens a
//! forest into depth-annotated relation triplets ([`triplet`]), aligns
//! predicted triplets to gold triplets under thesaurus normalization and an
//! edit-distance threshold ([`matching`]), and turns alignments into
//! unweighted and depth-weighted precision/recall/F1 plus correlation
//! against manual scores ([`metrics`]).
//!
//! The crate is `no_std` and only needs `alloc`.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod format;
pub mod matching;
pub mod metrics;
pub mod model;
pub mod triplet;

pub use format::{
    parse_forest, parse_node_line, serialize_forest, serialize_node_line, validate, DiagnosticCode,
    IndentStyle, ParseDiagnostic, ParseOptions, SerializeOptions, Severity,
};
pub use matching::{
    align, edit_distance, entity_match, normalize, triplet_match, AlignedPair, Alignment,
    EntityMatch, InvalidThreshold, MatchConfig, Thesaurus, ThesaurusError, ThesaurusWarning,
    ThresholdRule, TripletMatch,
};
pub use metrics::{
    aggregate, join_manual, pair_cases, pearson, score_case, score_corpus, spearman, sweep,
    triplet_weight, CaseEvaluation, CasePair, CaseScore, CorpusScore, CorrelationError,
    CorrelationKind, InvalidManualScore, InvalidWeightConstant, MacroScore, ManualScore,
    ScoreError, SweepCell, SweepError, SweepGrid, SweepTable, WeightMethod, WeightScheme,
};
pub use model::{CausalForest, Entity, EntityError, ModelError, Modifier, Node, Relation};
pub use triplet::{
    decompose, forest_stats, root_triplets, StatsReport, Triplet, TripletHead, TripletSet,
    ROOT_TOKEN,
};
