//! Unweighted and depth-weighted precision/recall/F1, correlation against
//! manual scores, and the weighting sweep.
//!
//! Each triplet gets a weight from its depth `d` and relation:
//!
//! * reciprocal: `x / (1 + C·d)`, with `x = 1` for `parent_of` and `1/2` otherwise
//! * exponential: `x / C^d`, with `x = 1` for `parent_of` and `1/C` otherwise
//!
//! Weighted precision divides the weight of matched predicted triplets by
//! the weight of all predicted triplets; recall does the same on the gold
//! side with gold weights. Matching itself never looks at weights.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::matching::{align, Alignment, MatchConfig, Thesaurus};
use crate::model::Relation;
use crate::triplet::{root_triplets, Triplet, TripletSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum WeightMethod {
    None,
    Reciprocal,
    Exponential,
}

impl WeightMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            WeightMethod::None => "none",
            WeightMethod::Reciprocal => "reciprocal",
            WeightMethod::Exponential => "exponential",
        }
    }
}

impl fmt::Display for WeightMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl core::str::FromStr for WeightMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(WeightMethod::None),
            "reciprocal" => Ok(WeightMethod::Reciprocal),
            "exponential" => Ok(WeightMethod::Exponential),
            _ => Err(alloc::format!(
                "unknown weighting method `{s}` (expected none, reciprocal or exponential)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct WeightScheme {
    pub method: WeightMethod,
    pub c: f64,
}

impl Default for WeightScheme {
    fn default() -> Self {
        WeightScheme {
            method: WeightMethod::Reciprocal,
            c: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("weighting constant C must be a positive finite number, got {0}")]
pub struct InvalidWeightConstant(pub f64);

impl WeightScheme {
    pub fn new(method: WeightMethod, c: f64) -> Result<Self, InvalidWeightConstant> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(InvalidWeightConstant(c));
        }
        Ok(WeightScheme { method, c })
    }

    pub const UNWEIGHTED: WeightScheme = WeightScheme {
        method: WeightMethod::None,
        c: 1.0,
    };
}

pub fn triplet_weight(t: &Triplet, scheme: &WeightScheme) -> f64 {
    relation_weight(t.relation, t.depth, scheme)
}

fn relation_weight(relation: Relation, depth: u32, scheme: &WeightScheme) -> f64 {
    let parent_of = relation == Relation::ParentOf;
    let d = f64::from(depth);
    let c = scheme.c;
    match scheme.method {
        WeightMethod::None => 1.0,
        WeightMethod::Reciprocal => {
            let x = if parent_of { 1.0 } else { 0.5 };
            x / (1.0 + c * d)
        }
        WeightMethod::Exponential => {
            let x = if parent_of { 1.0 } else { 1.0 / c };
            x / libm::pow(c, d)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct CaseScore {
    pub case_id: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub matched_weight_pred: f64,
    pub total_weight_pred: f64,
    pub matched_weight_gold: f64,
    pub total_weight_gold: f64,
    pub matched_count: usize,
    pub pred_count: usize,
    pub gold_count: usize,
    /// Precision denominator was zero, so precision was set to 0.
    pub empty_pred: bool,
    /// Recall denominator was zero, so recall was set to 0.
    pub empty_gold: bool,
}

impl CaseScore {
    fn from_sums(
        case_id: String,
        matched_weight_pred: f64,
        total_weight_pred: f64,
        matched_weight_gold: f64,
        total_weight_gold: f64,
        counts: (usize, usize, usize),
    ) -> Self {
        let ratio = |num: f64, den: f64| if den > 0.0 { num / den } else { 0.0 };
        let precision = ratio(matched_weight_pred, total_weight_pred);
        let recall = ratio(matched_weight_gold, total_weight_gold);
        CaseScore {
            case_id,
            precision,
            recall,
            f1: f1(precision, recall),
            matched_weight_pred,
            total_weight_pred,
            matched_weight_gold,
            total_weight_gold,
            matched_count: counts.0,
            pred_count: counts.1,
            gold_count: counts.2,
            empty_pred: total_weight_pred <= 0.0,
            empty_gold: total_weight_gold <= 0.0,
        }
    }
}

fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScoreError {
    #[error("alignment does not fit case `{case_id}`: {reason}")]
    AlignmentMismatch {
        case_id: String,
        reason: &'static str,
    },
    #[error("duplicate case ids in the {side} corpus: {}", .ids.join(", "))]
    DuplicateCase {
        side: &'static str,
        ids: Vec<String>,
    },
    #[error("predictions without a gold case: {}", .0.join(", "))]
    OrphanPrediction(Vec<String>),
}

pub fn score_case(
    pred: &TripletSet,
    gold: &TripletSet,
    alignment: &Alignment,
    scheme: &WeightScheme,
) -> Result<CaseScore, ScoreError> {
    check_alignment(pred, gold, alignment)?;
    let mut pred_matched = alloc::vec![false; pred.len()];
    let mut gold_matched = alloc::vec![false; gold.len()];
    for pair in &alignment.pairs {
        pred_matched[pair.pred] = true;
        gold_matched[pair.gold] = true;
    }
    let (mp, tp) = weight_sums(&pred.triplets, &pred_matched, scheme);
    let (mg, tg) = weight_sums(&gold.triplets, &gold_matched, scheme);
    Ok(CaseScore::from_sums(
        gold.case_id.clone(),
        mp,
        tp,
        mg,
        tg,
        (alignment.pairs.len(), pred.len(), gold.len()),
    ))
}

fn weight_sums(triplets: &[Triplet], matched: &[bool], scheme: &WeightScheme) -> (f64, f64) {
    let mut hit = 0.0;
    let mut total = 0.0;
    for (t, &m) in triplets.iter().zip(matched) {
        let w = triplet_weight(t, scheme);
        total += w;
        if m {
            hit += w;
        }
    }
    (hit, total)
}

fn check_alignment(pred: &TripletSet, gold: &TripletSet, a: &Alignment) -> Result<(), ScoreError> {
    let fail = |reason| {
        Err(ScoreError::AlignmentMismatch {
            case_id: gold.case_id.clone(),
            reason,
        })
    };
    let mut pred_seen = alloc::vec![false; pred.len()];
    let mut gold_seen = alloc::vec![false; gold.len()];
    let pred_indices = a
        .pairs
        .iter()
        .map(|p| p.pred)
        .chain(a.unmatched_pred.iter().copied());
    for i in pred_indices {
        match pred_seen.get_mut(i) {
            None => return fail("predicted index out of range"),
            Some(true) => return fail("predicted index used twice"),
            Some(seen) => *seen = true,
        }
    }
    let gold_indices = a
        .pairs
        .iter()
        .map(|p| p.gold)
        .chain(a.unmatched_gold.iter().copied());
    for i in gold_indices {
        match gold_seen.get_mut(i) {
            None => return fail("gold index out of range"),
            Some(true) => return fail("gold index used twice"),
            Some(seen) => *seen = true,
        }
    }
    if pred_seen.contains(&false) || gold_seen.contains(&false) {
        return fail("alignment does not cover every triplet");
    }
    Ok(())
}

/// A gold case and its prediction, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct CasePair {
    pub case_id: String,
    pub gold: TripletSet,
    pub pred: Option<TripletSet>,
}

/// Pairs predictions with gold cases by id, sorted by id. Gold cases with no
/// prediction get `pred: None`.
pub fn pair_cases(
    gold: Vec<TripletSet>,
    pred: Vec<TripletSet>,
) -> Result<Vec<CasePair>, ScoreError> {
    let gold = index_unique(gold, "gold")?;
    let mut pred = index_unique(pred, "predicted")?;
    let orphans: Vec<String> = pred
        .keys()
        .filter(|id| !gold.contains_key(*id))
        .cloned()
        .collect();
    if !orphans.is_empty() {
        return Err(ScoreError::OrphanPrediction(orphans));
    }
    Ok(gold
        .into_iter()
        .map(|(case_id, gold)| CasePair {
            pred: pred.remove(&case_id),
            case_id,
            gold,
        })
        .collect())
}

fn index_unique(
    sets: Vec<TripletSet>,
    side: &'static str,
) -> Result<BTreeMap<String, TripletSet>, ScoreError> {
    let mut out = BTreeMap::new();
    let mut dups = BTreeSet::new();
    for set in sets {
        let id = set.case_id.clone();
        if out.insert(id.clone(), set).is_some() {
            dups.insert(id);
        }
    }
    if dups.is_empty() {
        Ok(out)
    } else {
        Err(ScoreError::DuplicateCase {
            side,
            ids: dups.into_iter().collect(),
        })
    }
}

/// The aligned form of one case, reusable across weighting schemes.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseEvaluation {
    pub case_id: String,
    pub missing_prediction: bool,
    pub pred: TripletSet,
    pub gold: TripletSet,
    pub alignment: Alignment,
}

impl CaseEvaluation {
    /// With `root_only`, both sides are reduced to their `[root]` triplets
    /// before alignment.
    pub fn new(pair: &CasePair, thesaurus: &Thesaurus, cfg: &MatchConfig, root_only: bool) -> Self {
        let pred = pair
            .pred
            .clone()
            .unwrap_or_else(|| TripletSet::empty(pair.case_id.clone()));
        let (pred, gold) = if root_only {
            (root_triplets(&pred), root_triplets(&pair.gold))
        } else {
            (pred, pair.gold.clone())
        };
        let alignment = align(&pred, &gold, thesaurus, cfg);
        CaseEvaluation {
            case_id: pair.case_id.clone(),
            missing_prediction: pair.pred.is_none(),
            pred,
            gold,
            alignment,
        }
    }

    pub fn score(&self, scheme: &WeightScheme) -> CaseScore {
        let mut score = score_case(&self.pred, &self.gold, &self.alignment, scheme)
            .expect("alignment was computed from these sets");
        score.case_id.clone_from(&self.case_id);
        score
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct MacroScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct CorpusScore {
    /// Sums of numerators and denominators over all cases, then divided.
    pub micro: CaseScore,
    /// Unweighted mean of per-case precision, recall and F1.
    #[cfg_attr(feature = "serde", serde(rename = "macro"))]
    pub macro_: MacroScore,
    pub per_case: Vec<CaseScore>,
}

/// Reduces per-case scores in case-id order.
pub fn aggregate(mut per_case: Vec<CaseScore>) -> CorpusScore {
    per_case.sort_by(|a, b| a.case_id.cmp(&b.case_id));
    let (mut mp, mut tp, mut mg, mut tg) = (0.0, 0.0, 0.0, 0.0);
    let (mut matched, mut npred, mut ngold) = (0, 0, 0);
    let mut macro_ = MacroScore::default();
    for s in &per_case {
        mp += s.matched_weight_pred;
        tp += s.total_weight_pred;
        mg += s.matched_weight_gold;
        tg += s.total_weight_gold;
        matched += s.matched_count;
        npred += s.pred_count;
        ngold += s.gold_count;
        macro_.precision += s.precision;
        macro_.recall += s.recall;
        macro_.f1 += s.f1;
    }
    if !per_case.is_empty() {
        let n = per_case.len() as f64;
        macro_.precision /= n;
        macro_.recall /= n;
        macro_.f1 /= n;
    }
    CorpusScore {
        micro: CaseScore::from_sums("micro".into(), mp, tp, mg, tg, (matched, npred, ngold)),
        macro_,
        per_case,
    }
}

pub fn score_corpus(
    gold: Vec<TripletSet>,
    pred: Vec<TripletSet>,
    thesaurus: &Thesaurus,
    cfg: &MatchConfig,
    scheme: &WeightScheme,
    root_only: bool,
) -> Result<CorpusScore, ScoreError> {
    let pairs = pair_cases(gold, pred)?;
    let scores = pairs
        .iter()
        .map(|pair| CaseEvaluation::new(pair, thesaurus, cfg, root_only).score(scheme))
        .collect();
    Ok(aggregate(scores))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum CorrelationError {
    #[error("vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least two points, got {0}")]
    TooFewPoints(usize),
    #[error("the {0} vector is constant, so correlation is undefined")]
    ConstantInput(&'static str),
    #[error("input contains a non-finite value")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum CorrelationKind {
    #[default]
    Pearson,
    Spearman,
}

impl CorrelationKind {
    pub fn compute(self, xs: &[f64], ys: &[f64]) -> Result<f64, CorrelationError> {
        match self {
            CorrelationKind::Pearson => pearson(xs, ys),
            CorrelationKind::Spearman => spearman(xs, ys),
        }
    }
}

/// Sample Pearson correlation coefficient.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, CorrelationError> {
    if xs.len() != ys.len() {
        return Err(CorrelationError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return Err(CorrelationError::TooFewPoints(xs.len()));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(CorrelationError::NonFinite);
    }
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - mean_x;
        let dy = y - mean_y;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(CorrelationError::ConstantInput("first"));
    }
    if syy == 0.0 {
        return Err(CorrelationError::ConstantInput("second"));
    }
    Ok((sxy / libm::sqrt(sxx * syy)).clamp(-1.0, 1.0))
}

/// Pearson correlation of average ranks (ties share their mean rank).
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64, CorrelationError> {
    if xs.len() != ys.len() {
        return Err(CorrelationError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(CorrelationError::NonFinite);
    }
    pearson(&ranks(xs), &ranks(ys))
}

fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = alloc::vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1..=j+1 share their mean
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ManualScore {
    pub case_id: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("manual score {score} for `{case_id}` is outside [0, 100]")]
pub struct InvalidManualScore {
    pub case_id: String,
    pub score: f64,
}

impl ManualScore {
    pub fn new(case_id: impl Into<String>, score: f64) -> Result<Self, InvalidManualScore> {
        let case_id = case_id.into();
        if !(0.0..=100.0).contains(&score) {
            return Err(InvalidManualScore { case_id, score });
        }
        Ok(ManualScore { case_id, score })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SweepError {
    #[error("cases without a manual score: {}", .0.join(", "))]
    MissingManual(Vec<String>),
    #[error("manual scores without a case: {}", .0.join(", "))]
    UnmatchedManual(Vec<String>),
    #[error("duplicate manual scores for: {}", .0.join(", "))]
    DuplicateManual(Vec<String>),
    #[error(transparent)]
    Correlation(#[from] CorrelationError),
    #[error(transparent)]
    Weight(#[from] InvalidWeightConstant),
}

/// Manual scores ordered like `case_ids`. Both sides must cover the same ids.
pub fn join_manual<'a>(
    case_ids: impl IntoIterator<Item = &'a str>,
    manual: &[ManualScore],
) -> Result<Vec<f64>, SweepError> {
    let mut by_id: BTreeMap<&str, f64> = BTreeMap::new();
    let mut dups = BTreeSet::new();
    for m in manual {
        if by_id.insert(m.case_id.as_str(), m.score).is_some() {
            dups.insert(m.case_id.clone());
        }
    }
    if !dups.is_empty() {
        return Err(SweepError::DuplicateManual(dups.into_iter().collect()));
    }
    let mut missing = Vec::new();
    let mut out = Vec::new();
    let mut used = BTreeSet::new();
    for id in case_ids {
        match by_id.get(id) {
            Some(&score) => {
                out.push(score);
                used.insert(id);
            }
            None => missing.push(String::from(id)),
        }
    }
    if !missing.is_empty() {
        return Err(SweepError::MissingManual(missing));
    }
    let unmatched: Vec<String> = by_id
        .keys()
        .filter(|id| !used.contains(*id))
        .map(|id| String::from(*id))
        .collect();
    if !unmatched.is_empty() {
        return Err(SweepError::UnmatchedManual(unmatched));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub methods: Vec<WeightMethod>,
    pub cs: Vec<f64>,
    pub correlation: CorrelationKind,
}

impl Default for SweepGrid {
    fn default() -> Self {
        SweepGrid {
            methods: alloc::vec![WeightMethod::Reciprocal, WeightMethod::Exponential],
            cs: alloc::vec![0.5, 1.0, 2.0, 4.0, 8.0],
            correlation: CorrelationKind::Pearson,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SweepCell {
    pub method: WeightMethod,
    /// `None` for the unweighted baseline.
    pub c: Option<f64>,
    /// `None` when the per-case F1 vector is constant.
    pub correlation: Option<f64>,
    pub macro_f1: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SweepTable {
    pub correlation: CorrelationKind,
    /// Sorted by correlation, highest first; undefined correlations last.
    pub cells: Vec<SweepCell>,
}

impl SweepTable {
    pub fn best(&self) -> Option<&SweepCell> {
        self.cells.first().filter(|c| c.correlation.is_some())
    }
}

/// Correlates per-case F1 with manual scores for the unweighted baseline and
/// every `(method, C)` in the grid. Alignments are reused across cells.
pub fn sweep(
    cases: &[CaseEvaluation],
    manual: &[ManualScore],
    grid: &SweepGrid,
) -> Result<SweepTable, SweepError> {
    let human = join_manual(cases.iter().map(|c| c.case_id.as_str()), manual)?;
    let mut schemes = alloc::vec![WeightScheme::UNWEIGHTED];
    for &method in grid.methods.iter().filter(|m| **m != WeightMethod::None) {
        for &c in &grid.cs {
            schemes.push(WeightScheme::new(method, c)?);
        }
    }
    let mut cells = Vec::with_capacity(schemes.len());
    for scheme in &schemes {
        let f1s: Vec<f64> = cases.iter().map(|c| c.score(scheme).f1).collect();
        let correlation = match grid.correlation.compute(&f1s, &human) {
            Ok(r) => Some(r),
            Err(CorrelationError::ConstantInput("first")) => None,
            Err(err) => return Err(err.into()),
        };
        let macro_f1 = if f1s.is_empty() {
            0.0
        } else {
            f1s.iter().sum::<f64>() / f1s.len() as f64
        };
        cells.push(SweepCell {
            method: scheme.method,
            c: (scheme.method != WeightMethod::None).then_some(scheme.c),
            correlation,
            macro_f1,
        });
    }
    cells.sort_by(|a, b| match (a.correlation, b.correlation) {
        (Some(x), Some(y)) => y.total_cmp(&x),
        (Some(_), None) => core::cmp::Ordering::Less,
        (None, Some(_)) => core::cmp::Ordering::Greater,
        (None, None) => core::cmp::Ordering::Equal,
    });
    Ok(SweepTable {
        correlation: grid.correlation,
        cells,
    })
}
