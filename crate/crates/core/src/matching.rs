//! Entity normalization and predicted-to-gold triplet alignment.
//!
//! Entities are first mapped through Unicode compatibility normalization
//! (optional) and a thesaurus of representative forms. Two normalized
//! entities match when `edit_distance(pred, gold) / len(gold)` is below the
//! configured threshold, with lengths and distances counted in Unicode
//! scalar values. Polarity values must match exactly.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use unicode_normalization::UnicodeNormalization;

use crate::model::{Entity, Relation};
use crate::triplet::{Triplet, TripletHead, TripletSet};

/// Whether a ratio equal to the threshold counts as a match.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ThresholdRule {
    /// `ratio < threshold`
    #[default]
    Strict,
    /// `ratio <= threshold`
    Inclusive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct MatchConfig {
    pub threshold: f64,
    pub threshold_rule: ThresholdRule,
    pub polarity_exact: bool,
    pub unicode_normalize: bool,
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig {
            threshold: 0.5,
            threshold_rule: ThresholdRule::Strict,
            polarity_exact: true,
            unicode_normalize: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("match threshold must lie in (0, 1], got {0}")]
pub struct InvalidThreshold(pub f64);

impl MatchConfig {
    pub fn with_threshold(threshold: f64) -> Result<Self, InvalidThreshold> {
        if !(threshold > 0.0 && threshold <= 1.0) {
            return Err(InvalidThreshold(threshold));
        }
        Ok(MatchConfig {
            threshold,
            ..MatchConfig::default()
        })
    }

    fn accepts(&self, ratio: f64) -> bool {
        match self.threshold_rule {
            ThresholdRule::Strict => ratio < self.threshold,
            ThresholdRule::Inclusive => ratio <= self.threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ThesaurusError {
    #[error("thesaurus entries form a cycle through `{0}`")]
    Cycle(String),
    #[error("thesaurus entry has an empty surface or representative")]
    EmptyEntry,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ThesaurusWarning {
    /// A surface was listed more than once; the last entry wins.
    DuplicateSurface {
        surface: String,
        dropped: String,
        kept: String,
    },
}

/// Many-to-one map from surface forms to representative forms. Unknown
/// surfaces map to themselves, and every representative is a fixed point.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Thesaurus {
    map: BTreeMap<String, String>,
}

impl Thesaurus {
    pub fn empty() -> Self {
        Thesaurus::default()
    }

    /// Builds a thesaurus from `(surface, representative)` pairs. Chains
    /// (`a -> b`, `b -> c`) are resolved so that `a -> c`. With
    /// `unicode_normalize`, both columns are compatibility-normalized first so
    /// lookups agree with [`normalize`].
    pub fn build<S, R>(
        pairs: impl IntoIterator<Item = (S, R)>,
        unicode_normalize: bool,
    ) -> Result<(Self, Vec<ThesaurusWarning>), ThesaurusError>
    where
        S: AsRef<str>,
        R: AsRef<str>,
    {
        let prep = |s: &str| -> String {
            let s = s.trim();
            if unicode_normalize {
                s.nfkc().collect()
            } else {
                s.to_string()
            }
        };
        let mut warnings = Vec::new();
        let mut raw: BTreeMap<String, String> = BTreeMap::new();
        for (surface, rep) in pairs {
            let surface = prep(surface.as_ref());
            let rep = prep(rep.as_ref());
            if surface.is_empty() || rep.is_empty() {
                return Err(ThesaurusError::EmptyEntry);
            }
            if let Some(previous) = raw.insert(surface.clone(), rep.clone()) {
                if previous != rep {
                    warnings.push(ThesaurusWarning::DuplicateSurface {
                        surface,
                        dropped: previous,
                        kept: rep,
                    });
                }
            }
        }

        let mut map = BTreeMap::new();
        for surface in raw.keys() {
            let mut seen = BTreeSet::new();
            let mut current = surface.as_str();
            while let Some(next) = raw.get(current) {
                if next == current {
                    break;
                }
                if !seen.insert(current) {
                    return Err(ThesaurusError::Cycle(surface.clone()));
                }
                current = next;
            }
            if current != surface {
                map.insert(surface.clone(), current.to_string());
            }
        }
        Ok((Thesaurus { map }, warnings))
    }

    pub fn lookup<'a>(&'a self, surface: &'a str) -> &'a str {
        self.map.get(surface).map_or(surface, String::as_str)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Canonical comparison form of an entity surface.
pub fn normalize(surface: &str, thesaurus: &Thesaurus, cfg: &MatchConfig) -> String {
    if cfg.unicode_normalize {
        let nfkc: String = surface.nfkc().collect();
        thesaurus.lookup(&nfkc).to_string()
    } else {
        thesaurus.lookup(surface).to_string()
    }
}

/// Levenshtein distance over Unicode scalar values.
pub fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    char_distance(&a, &b)
}

fn char_distance(a: &[char], b: &[char]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = alloc::vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let substitute = prev[j] + usize::from(ca != cb);
            cur[j + 1] = substitute.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        core::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntityMatch {
    pub matched: bool,
    /// Edit distance divided by the gold length, both normalized.
    pub ratio: f64,
}

pub fn entity_match(
    pred: &Entity,
    gold: &Entity,
    thesaurus: &Thesaurus,
    cfg: &MatchConfig,
    is_polarity_value: bool,
) -> EntityMatch {
    let p = Prepared::entity(pred.as_str(), thesaurus, cfg);
    let g = Prepared::entity(gold.as_str(), thesaurus, cfg);
    compare(&p, &g, cfg, is_polarity_value && cfg.polarity_exact, false)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripletMatch {
    pub matched: bool,
    /// Head ratio plus tail ratio; infinite when relation or history differ.
    pub cost: f64,
}

/// Relation and history flags must agree, and both entities must match.
/// Depth is not compared.
pub fn triplet_match(
    pred: &Triplet,
    gold: &Triplet,
    thesaurus: &Thesaurus,
    cfg: &MatchConfig,
) -> TripletMatch {
    let p = PreparedTriplet::new(pred, thesaurus, cfg);
    let g = PreparedTriplet::new(gold, thesaurus, cfg);
    match match_prepared(&p, &g, cfg) {
        Some(cost) => TripletMatch {
            matched: true,
            cost,
        },
        None => TripletMatch {
            matched: false,
            cost: f64::INFINITY,
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct AlignedPair {
    pub pred: usize,
    pub gold: usize,
    pub cost: f64,
}

/// One-to-one pairing of predicted and gold triplets.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Alignment {
    /// Sorted by predicted index.
    pub pairs: Vec<AlignedPair>,
    pub unmatched_pred: Vec<usize>,
    pub unmatched_gold: Vec<usize>,
}

impl Alignment {
    pub fn matched_count(&self) -> usize {
        self.pairs.len()
    }
}

/// Greedy one-to-one alignment: every matching pair is ranked by cost, then
/// predicted index, then gold index, and accepted when both ends are free.
pub fn align(
    pred: &TripletSet,
    gold: &TripletSet,
    thesaurus: &Thesaurus,
    cfg: &MatchConfig,
) -> Alignment {
    let p: Vec<PreparedTriplet> = pred
        .triplets
        .iter()
        .map(|t| PreparedTriplet::new(t, thesaurus, cfg))
        .collect();
    let g: Vec<PreparedTriplet> = gold
        .triplets
        .iter()
        .map(|t| PreparedTriplet::new(t, thesaurus, cfg))
        .collect();

    let mut candidates = Vec::new();
    for (i, pt) in p.iter().enumerate() {
        for (j, gt) in g.iter().enumerate() {
            if let Some(cost) = match_prepared(pt, gt, cfg) {
                candidates.push(AlignedPair {
                    pred: i,
                    gold: j,
                    cost,
                });
            }
        }
    }
    candidates.sort_by(|a, b| {
        a.cost
            .total_cmp(&b.cost)
            .then(a.pred.cmp(&b.pred))
            .then(a.gold.cmp(&b.gold))
    });

    let mut pred_used = alloc::vec![false; p.len()];
    let mut gold_used = alloc::vec![false; g.len()];
    let mut pairs = Vec::new();
    for c in candidates {
        if !pred_used[c.pred] && !gold_used[c.gold] {
            pred_used[c.pred] = true;
            gold_used[c.gold] = true;
            pairs.push(c);
        }
    }
    pairs.sort_by_key(|pair| pair.pred);
    Alignment {
        pairs,
        unmatched_pred: unused(&pred_used),
        unmatched_gold: unused(&gold_used),
    }
}

fn unused(used: &[bool]) -> Vec<usize> {
    used.iter()
        .enumerate()
        .filter(|(_, &u)| !u)
        .map(|(i, _)| i)
        .collect()
}

/// Normalized characters of one side of a triplet; `None` is `[root]`.
struct Prepared(Option<Vec<char>>);

impl Prepared {
    fn entity(surface: &str, thesaurus: &Thesaurus, cfg: &MatchConfig) -> Self {
        Prepared(Some(normalize(surface, thesaurus, cfg).chars().collect()))
    }

    fn head(head: &TripletHead, thesaurus: &Thesaurus, cfg: &MatchConfig) -> Self {
        match head {
            TripletHead::Root => Prepared(None),
            TripletHead::Entity(e) => Prepared::entity(e.as_str(), thesaurus, cfg),
        }
    }
}

struct PreparedTriplet {
    head: Prepared,
    tail: Prepared,
    relation: Relation,
    head_history: bool,
    tail_history: bool,
}

impl PreparedTriplet {
    fn new(t: &Triplet, thesaurus: &Thesaurus, cfg: &MatchConfig) -> Self {
        PreparedTriplet {
            head: Prepared::head(&t.head, thesaurus, cfg),
            tail: Prepared::entity(t.tail.as_str(), thesaurus, cfg),
            relation: t.relation,
            head_history: t.head_history,
            tail_history: t.tail_history,
        }
    }
}

fn match_prepared(p: &PreparedTriplet, g: &PreparedTriplet, cfg: &MatchConfig) -> Option<f64> {
    if p.relation != g.relation
        || p.head_history != g.head_history
        || p.tail_history != g.tail_history
    {
        return None;
    }
    let head = compare(&p.head, &g.head, cfg, false, true);
    if !head.matched {
        return None;
    }
    let exact_tail = cfg.polarity_exact && p.relation == Relation::Polarity;
    let tail = compare(&p.tail, &g.tail, cfg, exact_tail, true);
    tail.matched.then_some(head.ratio + tail.ratio)
}

/// With `prune`, the ratio of a rejected pair may be a lower bound rather
/// than the exact value.
fn compare(p: &Prepared, g: &Prepared, cfg: &MatchConfig, exact: bool, prune: bool) -> EntityMatch {
    let (p, g) = match (&p.0, &g.0) {
        (None, None) => {
            return EntityMatch {
                matched: true,
                ratio: 0.0,
            }
        }
        (Some(p), Some(g)) => (p, g),
        _ => {
            return EntityMatch {
                matched: false,
                ratio: f64::INFINITY,
            }
        }
    };
    if p == g {
        return EntityMatch {
            matched: true,
            ratio: 0.0,
        };
    }
    if g.is_empty() {
        return EntityMatch {
            matched: false,
            ratio: f64::INFINITY,
        };
    }
    let gold_len = g.len() as f64;
    if prune {
        let lower = p.len().abs_diff(g.len()) as f64 / gold_len;
        if exact || !cfg.accepts(lower) {
            return EntityMatch {
                matched: false,
                ratio: lower,
            };
        }
    }
    let ratio = char_distance(p, g) as f64 / gold_len;
    EntityMatch {
        matched: !exact && cfg.accepts(ratio),
        ratio,
    }
}
