//! Flattening a forest into depth-annotated relation triplets.
//!
//! A dummy `[root]` entity at depth 0 parents every top-level node, and each
//! node's head entity sits one deeper than its parent. A `parent_of` triplet
//! takes the depth of its parent entity; an intra-node triplet takes the
//! depth of the node's head entity, nested modifiers included.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::model::{CausalForest, Entity, Modifier, Node, Relation};

pub const ROOT_TOKEN: &str = "[root]";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TripletHead {
    Root,
    Entity(Entity),
}

impl TripletHead {
    pub fn as_str(&self) -> &str {
        match self {
            TripletHead::Root => ROOT_TOKEN,
            TripletHead::Entity(e) => e.as_str(),
        }
    }

    pub fn is_root(&self) -> bool {
        matches!(self, TripletHead::Root)
    }
}

impl fmt::Display for TripletHead {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[cfg(feature = "serde")]
impl serde::Serialize for TripletHead {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Triplet {
    pub head: TripletHead,
    pub relation: Relation,
    pub tail: Entity,
    pub depth: u32,
    /// History flag of the node that owns the head side.
    pub head_history: bool,
    /// History flag of the child node, for `parent_of`; false otherwise.
    pub tail_history: bool,
    /// Index of the emitting node in depth-first pre-order.
    pub source_node: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct TripletSet {
    pub case_id: String,
    pub triplets: Vec<Triplet>,
}

impl TripletSet {
    pub fn empty(case_id: impl Into<String>) -> Self {
        TripletSet {
            case_id: case_id.into(),
            triplets: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.triplets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triplets.is_empty()
    }
}

pub fn decompose(forest: &CausalForest) -> TripletSet {
    let mut out = Vec::with_capacity(forest.node_count() + forest.modifier_count());
    let mut next_index = 0;
    for root in &forest.roots {
        emit_node(
            root,
            &TripletHead::Root,
            false,
            0,
            &mut next_index,
            &mut out,
        );
    }
    TripletSet {
        case_id: forest.case_id.clone(),
        triplets: out,
    }
}

fn emit_node(
    node: &Node,
    parent: &TripletHead,
    parent_history: bool,
    parent_depth: u32,
    next_index: &mut usize,
    out: &mut Vec<Triplet>,
) {
    let index = *next_index;
    *next_index += 1;
    let depth = parent_depth + 1;
    out.push(Triplet {
        head: parent.clone(),
        relation: Relation::ParentOf,
        tail: node.head.clone(),
        depth: parent_depth,
        head_history: parent_history,
        tail_history: node.history,
        source_node: index,
    });
    for m in &node.modifiers {
        emit_modifier(&node.head, m, node.history, depth, index, out);
    }
    let head = TripletHead::Entity(node.head.clone());
    for child in &node.children {
        emit_node(child, &head, node.history, depth, next_index, out);
    }
}

fn emit_modifier(
    head: &Entity,
    m: &Modifier,
    history: bool,
    depth: u32,
    index: usize,
    out: &mut Vec<Triplet>,
) {
    out.push(Triplet {
        head: TripletHead::Entity(head.clone()),
        relation: m.relation,
        tail: m.value.clone(),
        depth,
        head_history: history,
        tail_history: false,
        source_node: index,
    });
    for nested in &m.nested {
        emit_modifier(&m.value, nested, history, depth, index, out);
    }
}

/// The `[root]`-headed triplets only, i.e. the top-level diagnoses.
pub fn root_triplets(set: &TripletSet) -> TripletSet {
    TripletSet {
        case_id: set.case_id.clone(),
        triplets: set
            .triplets
            .iter()
            .filter(|t| t.head.is_root())
            .cloned()
            .collect(),
    }
}

/// Corpus totals. `triplets` counts the `[root]` triplets too;
/// `triplets_without_root` leaves them out.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct StatsReport {
    pub cases: usize,
    pub nodes: usize,
    pub roots: usize,
    pub triplets: usize,
    pub triplets_without_root: usize,
    pub by_relation: BTreeMap<Relation, usize>,
    pub depth_histogram: BTreeMap<u32, usize>,
}

impl StatsReport {
    pub fn relation_count(&self, relation: Relation) -> usize {
        self.by_relation.get(&relation).copied().unwrap_or(0)
    }
}

pub fn forest_stats<'a>(corpus: impl IntoIterator<Item = &'a CausalForest>) -> StatsReport {
    let mut report = StatsReport::default();
    for relation in Relation::ALL {
        report.by_relation.insert(relation, 0);
    }
    for forest in corpus {
        report.cases += 1;
        report.nodes += forest.node_count();
        report.roots += forest.roots.len();
        for t in decompose(forest).triplets {
            report.triplets += 1;
            if !t.head.is_root() {
                report.triplets_without_root += 1;
            }
            *report.by_relation.entry(t.relation).or_default() += 1;
            *report.depth_histogram.entry(t.depth).or_default() += 1;
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::{parse_forest, ParseOptions};
    use alloc::vec;

    pub(crate) const EXAMPLE_CASE: &str = "急性心筋梗塞\n  胸痛\n  完全閉塞 @ 冠動脈\n  心エコー = 僧帽弁逆流\n    SpO2 / 低値\n    泡沫状 ＊ 痰";

    fn forest(text: &str) -> CausalForest {
        parse_forest(text, &ParseOptions::default()).unwrap()
    }

    fn summary(set: &TripletSet) -> Vec<(String, Relation, String, u32)> {
        set.triplets
            .iter()
            .map(|t| {
                (
                    t.head.as_str().into(),
                    t.relation,
                    t.tail.as_str().into(),
                    t.depth,
                )
            })
            .collect()
    }

    fn row(h: &str, r: Relation, t: &str, d: u32) -> (String, Relation, String, u32) {
        (h.into(), r, t.into(), d)
    }

    #[test]
    fn example_case_decomposes_into_ten_triplets() {
        use Relation::*;
        let set = decompose(&forest(EXAMPLE_CASE));
        assert_eq!(
            summary(&set),
            vec![
                row("[root]", ParentOf, "急性心筋梗塞", 0),
                row("急性心筋梗塞", ParentOf, "胸痛", 1),
                row("急性心筋梗塞", ParentOf, "完全閉塞", 1),
                row("完全閉塞", Located, "冠動脈", 2),
                row("急性心筋梗塞", ParentOf, "僧帽弁逆流", 1),
                row("僧帽弁逆流", Tested, "心エコー", 2),
                row("僧帽弁逆流", ParentOf, "SpO2", 2),
                row("SpO2", Polarity, "低値", 3),
                row("僧帽弁逆流", ParentOf, "痰", 2),
                row("痰", Featured, "泡沫状", 3),
            ]
        );
        let sources: Vec<usize> = set.triplets.iter().map(|t| t.source_node).collect();
        assert_eq!(sources, [0, 1, 2, 2, 3, 3, 4, 4, 5, 5]);
    }

    #[test]
    fn single_node_and_multi_root() {
        use Relation::*;
        assert_eq!(
            summary(&decompose(&forest("X"))),
            vec![row("[root]", ParentOf, "X", 0)]
        );
        assert_eq!(
            summary(&decompose(&forest("A\nB"))),
            vec![
                row("[root]", ParentOf, "A", 0),
                row("[root]", ParentOf, "B", 0)
            ]
        );
    }

    #[test]
    fn nested_features_share_the_node_depth() {
        use Relation::*;
        let set = decompose(&forest("脳梗塞\n  MRI = DWI高信号 @ 右 ＊ 大脳半球"));
        assert_eq!(
            summary(&set)[1..],
            [
                row("脳梗塞", ParentOf, "DWI高信号", 1),
                row("DWI高信号", Tested, "MRI", 2),
                row("DWI高信号", Located, "大脳半球", 2),
                row("大脳半球", Featured, "右", 2),
            ]
        );
    }

    #[test]
    fn history_flags_follow_the_node() {
        let set = decompose(&forest("H:肝硬変\n  H:ステロイド / 有効"));
        let flags: Vec<(bool, bool)> = set
            .triplets
            .iter()
            .map(|t| (t.head_history, t.tail_history))
            .collect();
        assert_eq!(flags, [(false, true), (true, true), (true, false)]);
    }

    #[test]
    fn root_filter() {
        let set = decompose(&forest(EXAMPLE_CASE));
        let roots = root_triplets(&set);
        assert_eq!(
            summary(&roots),
            vec![row("[root]", Relation::ParentOf, "急性心筋梗塞", 0)]
        );
        assert_eq!(root_triplets(&decompose(&forest("A\nB"))).len(), 2);
    }

    #[test]
    fn stats_of_example_case() {
        let report = forest_stats([&forest(EXAMPLE_CASE)]);
        assert_eq!(report.cases, 1);
        assert_eq!(report.triplets, 10);
        assert_eq!(report.triplets_without_root, 9);
        assert_eq!(report.roots, 1);
        assert_eq!(report.nodes, 6);
        assert_eq!(report.relation_count(Relation::ParentOf), 6);
        for r in [
            Relation::Located,
            Relation::Polarity,
            Relation::Tested,
            Relation::Featured,
        ] {
            assert_eq!(report.relation_count(r), 1);
        }
        assert_eq!(
            report.depth_histogram.into_iter().collect::<Vec<_>>(),
            [(0, 1), (1, 3), (2, 4), (3, 2)]
        );
    }

    #[test]
    fn stats_of_empty_corpus() {
        let report = forest_stats(core::iter::empty());
        assert_eq!(report.cases, 0);
        assert_eq!(report.triplets, 0);
        assert!(report.by_relation.values().all(|&n| n == 0));
        assert!(report.depth_histogram.is_empty());
    }
}
