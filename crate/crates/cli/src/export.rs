//! Triplet exports and the alignment dump.

use std::io::{self, BufRead, Write};

use causal_tree_core::{CaseEvaluation, Triplet, TripletSet};
use serde::{Deserialize, Serialize};

pub const TRIPLET_TSV_HEADER: &str =
    "case_id\thead\trelation\ttail\tdepth\thead_history\ttail_history";

/// One exported triplet. Field order matches the TSV columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripletRecord {
    pub case_id: String,
    pub head: String,
    pub relation: String,
    pub tail: String,
    pub depth: u32,
    pub head_history: bool,
    pub tail_history: bool,
    pub source_node: usize,
}

impl TripletRecord {
    pub fn new(case_id: &str, t: &Triplet) -> Self {
        TripletRecord {
            case_id: case_id.to_string(),
            head: t.head.as_str().to_string(),
            relation: t.relation.as_str().to_string(),
            tail: t.tail.as_str().to_string(),
            depth: t.depth,
            head_history: t.head_history,
            tail_history: t.tail_history,
            source_node: t.source_node,
        }
    }
}

pub fn write_triplet_tsv_header(out: &mut dyn Write) -> io::Result<()> {
    writeln!(out, "{TRIPLET_TSV_HEADER}")
}

pub fn write_triplet_tsv(out: &mut dyn Write, set: &TripletSet) -> io::Result<()> {
    for t in &set.triplets {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            set.case_id, t.head, t.relation, t.tail, t.depth, t.head_history, t.tail_history
        )?;
    }
    Ok(())
}

pub fn write_triplet_records(out: &mut dyn Write, set: &TripletSet) -> io::Result<()> {
    for t in &set.triplets {
        serde_json::to_writer(&mut *out, &TripletRecord::new(&set.case_id, t))?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_triplet_records(input: impl BufRead) -> io::Result<Vec<TripletRecord>> {
    let mut out = Vec::new();
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}

pub const ALIGNMENT_TSV_HEADER: &str =
    "case_id\tstatus\tpred_index\tgold_index\tcost\tpred_triplet\tgold_triplet";

fn describe(t: &Triplet) -> String {
    format!("({}, {}, {}, d{})", t.head, t.relation, t.tail, t.depth)
}

/// Rows are `matched` pairs, then `unmatched_pred`, then `unmatched_gold`;
/// absent fields are `-`.
pub fn write_alignment(out: &mut dyn Write, case: &CaseEvaluation) -> io::Result<()> {
    let id = &case.case_id;
    for pair in &case.alignment.pairs {
        writeln!(
            out,
            "{id}\tmatched\t{}\t{}\t{}\t{}\t{}",
            pair.pred,
            pair.gold,
            pair.cost,
            describe(&case.pred.triplets[pair.pred]),
            describe(&case.gold.triplets[pair.gold])
        )?;
    }
    for &i in &case.alignment.unmatched_pred {
        writeln!(
            out,
            "{id}\tunmatched_pred\t{i}\t-\t-\t{}\t-",
            describe(&case.pred.triplets[i])
        )?;
    }
    for &j in &case.alignment.unmatched_gold {
        writeln!(
            out,
            "{id}\tunmatched_gold\t-\t{j}\t-\t-\t{}",
            describe(&case.gold.triplets[j])
        )?;
    }
    Ok(())
}
