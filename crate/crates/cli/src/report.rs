//! Score, stats, correlation and sweep reports.
//!
//! Every report echoes the effective [`RunConfig`] so the numbers in it can
//! be reproduced from the report alone. The worker count is deliberately
//! not part of the echo: it never changes a number, and leaving it out keeps
//! reports byte-identical across parallelism settings.

use std::fmt::Write as _;

use causal_tree_core::{
    CaseEvaluation, CaseScore, CorpusScore, MacroScore, MatchConfig, Relation, StatsReport,
    SweepTable, ThresholdRule, WeightMethod, WeightScheme,
};
use serde::{Deserialize, Serialize};

pub const SCORE_SCHEMA: &str = "causal-tree-score/1";
pub const STATS_SCHEMA: &str = "causal-tree-stats/1";
pub const CORRELATION_SCHEMA: &str = "causal-tree-correlation/1";
pub const SWEEP_SCHEMA: &str = "causal-tree-sweep/1";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub threshold: f64,
    pub threshold_rule: ThresholdRule,
    pub polarity_exact: bool,
    pub unicode_normalize: bool,
    pub method: WeightMethod,
    pub c: f64,
    pub root_only: bool,
    pub thesaurus: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let m = MatchConfig::default();
        let w = WeightScheme::default();
        RunConfig {
            threshold: m.threshold,
            threshold_rule: m.threshold_rule,
            polarity_exact: m.polarity_exact,
            unicode_normalize: m.unicode_normalize,
            method: w.method,
            c: w.c,
            root_only: false,
            thesaurus: None,
        }
    }
}

impl RunConfig {
    pub fn match_config(&self) -> MatchConfig {
        MatchConfig {
            threshold: self.threshold,
            threshold_rule: self.threshold_rule,
            polarity_exact: self.polarity_exact,
            unicode_normalize: self.unicode_normalize,
        }
    }

    pub fn scheme(&self) -> WeightScheme {
        WeightScheme {
            method: self.method,
            c: self.c,
        }
    }

    fn text_header(&self, out: &mut String) {
        let rule = match self.threshold_rule {
            ThresholdRule::Strict => "<",
            ThresholdRule::Inclusive => "<=",
        };
        let _ = writeln!(
            out,
            "# config: match ratio {rule} {}, polarity_exact={}, unicode_normalize={}, weighting={} C={}, root_only={}, thesaurus={}",
            self.threshold,
            self.polarity_exact,
            self.unicode_normalize,
            self.method,
            self.c,
            self.root_only,
            self.thesaurus.as_deref().unwrap_or("-"),
        );
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub micro: CaseScore,
    #[serde(rename = "macro")]
    pub macro_: MacroScore,
}

impl From<&CorpusScore> for Aggregate {
    fn from(s: &CorpusScore) -> Self {
        Aggregate {
            micro: s.micro.clone(),
            macro_: s.macro_,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseReport {
    pub case_id: String,
    pub missing_prediction: bool,
    pub unparsable_prediction: bool,
    pub weighted: CaseScore,
    pub unweighted: CaseScore,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreReport {
    pub schema: &'static str,
    pub config: RunConfig,
    pub cases: usize,
    pub missing_predictions: usize,
    pub unparsable_predictions: usize,
    pub weighted: Aggregate,
    pub unweighted: Aggregate,
    pub per_case: Vec<CaseReport>,
}

impl ScoreReport {
    /// `evaluations` must be sorted by case id; `unparsable` lists predicted
    /// cases that were scored as empty because they failed to parse.
    pub fn new(config: RunConfig, evaluations: &[CaseEvaluation], unparsable: &[String]) -> Self {
        let weighted_scheme = config.scheme();
        let mut weighted = Vec::with_capacity(evaluations.len());
        let mut unweighted = Vec::with_capacity(evaluations.len());
        let mut per_case = Vec::with_capacity(evaluations.len());
        for eval in evaluations {
            let w = eval.score(&weighted_scheme);
            let u = eval.score(&WeightScheme::UNWEIGHTED);
            let unparsable_prediction = unparsable.binary_search(&eval.case_id).is_ok();
            per_case.push(CaseReport {
                case_id: eval.case_id.clone(),
                missing_prediction: eval.missing_prediction && !unparsable_prediction,
                unparsable_prediction,
                weighted: w.clone(),
                unweighted: u.clone(),
            });
            weighted.push(w);
            unweighted.push(u);
        }
        let weighted = causal_tree_core::aggregate(weighted);
        let unweighted = causal_tree_core::aggregate(unweighted);
        ScoreReport {
            schema: SCORE_SCHEMA,
            config,
            cases: per_case.len(),
            missing_predictions: per_case.iter().filter(|c| c.missing_prediction).count(),
            unparsable_predictions: per_case.iter().filter(|c| c.unparsable_prediction).count(),
            weighted: Aggregate::from(&weighted),
            unweighted: Aggregate::from(&unweighted),
            per_case,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        self.config.text_header(&mut out);
        let _ = writeln!(
            out,
            "# cases: {} (missing predictions: {}, unparsable predictions: {})",
            self.cases, self.missing_predictions, self.unparsable_predictions
        );
        let _ = writeln!(
            out,
            "{:<30} {:>9} {:>9} {:>9}",
            "score", "precision", "recall", "f1"
        );
        let weighted = format!("w/ weight ({})", self.config.method);
        for (label, agg) in [
            (weighted.as_str(), &self.weighted),
            ("w/o weight", &self.unweighted),
        ] {
            let m = &agg.micro;
            let _ = writeln!(
                out,
                "{:<30} {:>9.4} {:>9.4} {:>9.4}",
                format!("{label} micro"),
                m.precision,
                m.recall,
                m.f1
            );
            let a = &agg.macro_;
            let _ = writeln!(
                out,
                "{:<30} {:>9.4} {:>9.4} {:>9.4}",
                format!("{label} macro"),
                a.precision,
                a.recall,
                a.f1
            );
        }
        out
    }
}

/// Just enough of a score report to read per-case weighted F1 back in.
#[derive(Debug, Deserialize)]
pub struct PriorReport {
    pub per_case: Vec<PriorCase>,
}

#[derive(Debug, Deserialize)]
pub struct PriorCase {
    pub case_id: String,
    pub weighted: PriorScore,
}

#[derive(Debug, Deserialize)]
pub struct PriorScore {
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsOutput {
    pub schema: &'static str,
    #[serde(flatten)]
    pub stats: StatsReport,
}

impl StatsOutput {
    pub fn new(stats: StatsReport) -> Self {
        StatsOutput {
            schema: STATS_SCHEMA,
            stats,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("stats serialize");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let s = &self.stats;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:>8} {:>8} {:>10} {:>10} {:>14}",
            "Cases", "Nodes", "Root node", "Triplets", "w/o [root]"
        );
        let _ = writeln!(
            out,
            "{:>8} {:>8} {:>10} {:>10} {:>14}",
            s.cases, s.nodes, s.roots, s.triplets, s.triplets_without_root
        );
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<10} {:>10}", "relation", "triplets");
        for r in Relation::ALL {
            let _ = writeln!(out, "{:<10} {:>10}", r.as_str(), s.relation_count(r));
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<10} {:>10}", "depth", "triplets");
        for (depth, n) in &s.depth_histogram {
            let _ = writeln!(out, "{:<10} {:>10}", depth, n);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationReport {
    pub schema: &'static str,
    /// `None` when the correlation was computed from a prior score report.
    pub config: Option<RunConfig>,
    pub cases: usize,
    pub pearson: f64,
    pub spearman: Option<f64>,
}

impl CorrelationReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        match &self.config {
            Some(config) => config.text_header(&mut out),
            None => out.push_str("# config: per-case F1 read from a score report\n"),
        }
        let _ = writeln!(out, "cases\t{}", self.cases);
        let _ = writeln!(out, "pearson\t{:.6}", self.pearson);
        if let Some(rho) = self.spearman {
            let _ = writeln!(out, "spearman\t{rho:.6}");
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub schema: &'static str,
    pub config: RunConfig,
    pub cases: usize,
    pub table: SweepTable,
}

impl SweepReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        self.config.text_header(&mut out);
        let kind = match self.table.correlation {
            causal_tree_core::CorrelationKind::Pearson => "pearson",
            causal_tree_core::CorrelationKind::Spearman => "spearman",
        };
        let _ = writeln!(out, "# cases: {}", self.cases);
        let _ = writeln!(
            out,
            "{:<12} {:>6} {:>12} {:>10}",
            "method", "C", kind, "macro_f1"
        );
        for cell in &self.table.cells {
            let c = cell.c.map_or_else(|| "-".to_string(), |c| c.to_string());
            let r = cell
                .correlation
                .map_or_else(|| "undefined".to_string(), |r| format!("{r:.6}"));
            let _ = writeln!(
                out,
                "{:<12} {:>6} {:>12} {:>10.4}",
                cell.method.as_str(),
                c,
                r,
                cell.macro_f1
            );
        }
        out
    }
}
