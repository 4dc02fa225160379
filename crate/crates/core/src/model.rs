//! In-memory causal-tree model.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

/// Symbols that act as operators in the line grammar and therefore cannot
/// appear inside an entity surface. `*` is accepted as an alias of `＊`.
pub const RESERVED_SYMBOLS: [char; 5] = ['@', '/', '=', '＊', '*'];

/// Line prefix marking a history or treatment node.
pub const HISTORY_PREFIX: &str = "H:";

/// Relation types a triplet can carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Relation {
    ParentOf,
    Located,
    Polarity,
    Tested,
    Featured,
}

impl Relation {
    pub const ALL: [Relation; 5] = [
        Relation::ParentOf,
        Relation::Located,
        Relation::Polarity,
        Relation::Tested,
        Relation::Featured,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Relation::ParentOf => "parent_of",
            Relation::Located => "located",
            Relation::Polarity => "polarity",
            Relation::Tested => "tested",
            Relation::Featured => "featured",
        }
    }

    /// Canonical operator symbol for intra-node relations.
    pub fn symbol(self) -> Option<char> {
        match self {
            Relation::ParentOf => None,
            Relation::Located => Some('@'),
            Relation::Polarity => Some('/'),
            Relation::Tested => Some('='),
            Relation::Featured => Some('＊'),
        }
    }

    pub fn is_modifier(self) -> bool {
        self != Relation::ParentOf
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl core::str::FromStr for Relation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Relation::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| alloc::format!("unknown relation `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EntityError {
    #[error("entity is empty")]
    Empty,
    #[error("entity `{0}` has leading or trailing whitespace")]
    Untrimmed(String),
    #[error("entity `{surface}` contains reserved symbol `{symbol}`")]
    ReservedSymbol { surface: String, symbol: char },
    #[error("entity `{0}` contains a control character")]
    ControlCharacter(String),
    #[error("entity `{0}` starts with the history prefix")]
    HistoryPrefix(String),
    #[error("`[root]` is reserved for the dummy root entity")]
    RootToken,
}

/// A medical entity surface: trimmed, non-empty, free of operator symbols.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct Entity(String);

impl Entity {
    pub fn new(surface: impl Into<String>) -> Result<Self, EntityError> {
        let surface = surface.into();
        if surface.is_empty() {
            return Err(EntityError::Empty);
        }
        if surface.trim() != surface {
            return Err(EntityError::Untrimmed(surface));
        }
        if let Some(symbol) = surface.chars().find(|c| RESERVED_SYMBOLS.contains(c)) {
            return Err(EntityError::ReservedSymbol { surface, symbol });
        }
        if surface.chars().any(char::is_control) {
            return Err(EntityError::ControlCharacter(surface));
        }
        if surface.starts_with(HISTORY_PREFIX) {
            return Err(EntityError::HistoryPrefix(surface));
        }
        if surface == crate::triplet::ROOT_TOKEN {
            return Err(EntityError::RootToken);
        }
        Ok(Entity(surface))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }
}

impl fmt::Display for Entity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for Entity {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl TryFrom<&str> for Entity {
    type Error = EntityError;

    fn try_from(value: &str) -> Result<Self, Self::Error> {
        Entity::new(value)
    }
}

/// An intra-node modifier. `nested` holds featured modifiers of `value`
/// itself, as in `@ 右 ＊ 大脳半球`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Modifier {
    pub relation: Relation,
    pub value: Entity,
    pub nested: Vec<Modifier>,
}

impl Modifier {
    pub fn new(relation: Relation, value: Entity) -> Self {
        Modifier {
            relation,
            value,
            nested: Vec::new(),
        }
    }

    pub fn located(value: Entity) -> Self {
        Modifier::new(Relation::Located, value)
    }

    pub fn polarity(value: Entity) -> Self {
        Modifier::new(Relation::Polarity, value)
    }

    pub fn tested(value: Entity) -> Self {
        Modifier::new(Relation::Tested, value)
    }

    pub fn featured(value: Entity) -> Self {
        Modifier::new(Relation::Featured, value)
    }

    pub fn with_features(mut self, features: impl IntoIterator<Item = Entity>) -> Self {
        self.nested
            .extend(features.into_iter().map(Modifier::featured));
        self
    }

    /// Number of modifiers in this subtree, counting `self`.
    pub fn count(&self) -> usize {
        1 + self.nested.iter().map(Modifier::count).sum::<usize>()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("`parent_of` is not an intra-node modifier")]
    ParentOfModifier,
    #[error("node `{0}` has more than one tested modifier")]
    MultipleTests(String),
    #[error("{relation} modifier `{value}` cannot carry nested modifiers")]
    NestedNotAllowed { relation: Relation, value: String },
    #[error("nested modifier `{0}` under another modifier must be featured")]
    NestedNotFeatured(String),
    #[error("modifiers of node `{0}` are not in canonical order (tested, featured, then located/polarity)")]
    ModifierOrder(String),
    #[error("forest has no roots")]
    NoRoots,
}

/// One line of a causal tree.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Node {
    pub head: Entity,
    pub history: bool,
    pub modifiers: Vec<Modifier>,
    pub children: Vec<Node>,
}

impl Node {
    pub fn new(head: Entity) -> Self {
        Node {
            head,
            history: false,
            modifiers: Vec::new(),
            children: Vec::new(),
        }
    }

    pub fn with_history(mut self, history: bool) -> Self {
        self.history = history;
        self
    }

    pub fn with_modifier(mut self, modifier: Modifier) -> Self {
        self.modifiers.push(modifier);
        self
    }

    pub fn with_child(mut self, child: Node) -> Self {
        self.children.push(child);
        self
    }

    pub fn tested(&self) -> Option<&Modifier> {
        self.modifiers
            .iter()
            .find(|m| m.relation == Relation::Tested)
    }

    /// Number of nodes in this subtree, counting `self`.
    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(Node::node_count).sum::<usize>()
    }

    /// Number of modifiers in this subtree, nested ones included.
    pub fn modifier_count(&self) -> usize {
        self.modifiers.iter().map(Modifier::count).sum::<usize>()
            + self
                .children
                .iter()
                .map(Node::modifier_count)
                .sum::<usize>()
    }

    /// Checks the invariants the line grammar can express, so that every
    /// valid node serializes to a line that parses back to the same node.
    ///
    /// Modifier order is canonical: at most one tested modifier first, then
    /// featured modifiers of the head, then located/polarity in any order.
    pub fn validate(&self) -> Result<(), ModelError> {
        let mut stage = 0u8;
        let mut tests = 0;
        for m in &self.modifiers {
            let rank = match m.relation {
                Relation::ParentOf => return Err(ModelError::ParentOfModifier),
                Relation::Tested => {
                    tests += 1;
                    0
                }
                Relation::Featured => 1,
                Relation::Located | Relation::Polarity => 2,
            };
            if rank < stage {
                return Err(ModelError::ModifierOrder(self.head.to_string()));
            }
            stage = rank;
            validate_nested(m)?;
        }
        if tests > 1 {
            return Err(ModelError::MultipleTests(self.head.to_string()));
        }
        self.children.iter().try_for_each(Node::validate)
    }
}

fn validate_nested(m: &Modifier) -> Result<(), ModelError> {
    if m.nested.is_empty() {
        return Ok(());
    }
    if matches!(m.relation, Relation::Polarity | Relation::Featured) {
        return Err(ModelError::NestedNotAllowed {
            relation: m.relation,
            value: m.value.to_string(),
        });
    }
    for n in &m.nested {
        if n.relation != Relation::Featured {
            return Err(ModelError::NestedNotFeatured(n.value.to_string()));
        }
        validate_nested(n)?;
    }
    Ok(())
}

/// All trees of one case, in source order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct CausalForest {
    pub case_id: String,
    pub roots: Vec<Node>,
}

impl CausalForest {
    pub fn new(case_id: impl Into<String>, roots: Vec<Node>) -> Result<Self, ModelError> {
        let forest = CausalForest {
            case_id: case_id.into(),
            roots,
        };
        forest.validate()?;
        Ok(forest)
    }

    pub fn with_case_id(mut self, case_id: impl Into<String>) -> Self {
        self.case_id = case_id.into();
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.roots.is_empty() {
            return Err(ModelError::NoRoots);
        }
        self.roots.iter().try_for_each(Node::validate)
    }

    pub fn node_count(&self) -> usize {
        self.roots.iter().map(Node::node_count).sum()
    }

    pub fn modifier_count(&self) -> usize {
        self.roots.iter().map(Node::modifier_count).sum()
    }

    /// Nodes in depth-first pre-order together with their depth (roots are 1).
    pub fn nodes(&self) -> Vec<(usize, &Node)> {
        let mut out = Vec::with_capacity(self.node_count());
        let mut stack: Vec<(usize, &Node)> = self.roots.iter().rev().map(|n| (1, n)).collect();
        while let Some((depth, node)) = stack.pop() {
            out.push((depth, node));
            stack.extend(node.children.iter().rev().map(|c| (depth + 1, c)));
        }
        out
    }
}
