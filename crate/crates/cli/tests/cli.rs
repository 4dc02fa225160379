mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use causal_tree::export::read_triplet_records;
use common::{shallow_preference_corpus, synthetic_case, write_dir};
use rand::rngs::StdRng;
use rand::SeedableRng;
use serde_json::Value;
use tempfile::TempDir;

const EXAMPLE_TREE: &str = "急性心筋梗塞\n  胸痛\n  完全閉塞 @ 冠動脈\n  心エコー = 僧帽弁逆流\n    SpO2 / 低値\n    泡沫状 ＊ 痰";

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_causal-tree"))
        .args(args)
        .env_remove("CAUSAL_TREE_THESAURUS")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn cases(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
    pairs
        .iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn json(o: &Output) -> Value {
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn validate_exit_codes() {
    let dir = TempDir::new().unwrap();
    let ok = dir.path().join("ok");
    write_dir(&ok, &cases(&[("c1", EXAMPLE_TREE)]));
    let o = run(&["validate", p(&ok)]);
    assert_eq!(o.status.code(), Some(0));

    let bad = dir.path().join("bad");
    write_dir(&bad, &cases(&[("c1", "A\n    B")]));
    let o = run(&["validate", p(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.contains("c1: line 2: error[IndentJump]"), "{text}");

    let o = run(&["validate", p(&dir.path().join("missing"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
}

#[test]
fn validate_reports_warnings_without_failing() {
    let dir = TempDir::new().unwrap();
    write_dir(dir.path(), &cases(&[("c1", "泡沫状 * 痰")]));
    let o = run(&["validate", p(dir.path())]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("warning[NonCanonicalSymbol]"));
}

#[test]
fn decompose_tsv_and_records() {
    let dir = TempDir::new().unwrap();
    let corpus = dir.path().join("gold");
    write_dir(&corpus, &cases(&[("c1", EXAMPLE_TREE)]));
    let o = run(&["decompose", p(&corpus)]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 11);
    assert_eq!(lines[0], causal_tree::export::TRIPLET_TSV_HEADER);
    assert_eq!(
        lines[1],
        "c1\t[root]\tparent_of\t急性心筋梗塞\t0\tfalse\tfalse"
    );
    assert_eq!(
        lines[6],
        "c1\t僧帽弁逆流\ttested\t心エコー\t2\tfalse\tfalse"
    );

    let out = dir.path().join("t.jsonl");
    let o = run(&[
        "decompose",
        p(&corpus),
        "--format",
        "records",
        "-o",
        p(&out),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let records = read_triplet_records(fs::read(&out).unwrap().as_slice()).unwrap();
    assert_eq!(records.len(), 10);
    assert_eq!(records[9].relation, "featured");
    assert_eq!(records[9].head, "痰");
    assert_eq!(records[9].tail, "泡沫状");
    assert_eq!(records[9].depth, 3);
}

#[test]
fn decompose_history_flags() {
    let dir = TempDir::new().unwrap();
    write_dir(
        dir.path(),
        &cases(&[(
            "h",
            "肝硬変\n  H:アルコール性肝線維症\n  H:ステロイド / 有効",
        )]),
    );
    let text = stdout(&run(&["decompose", p(dir.path())]));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[2],
        "h\t肝硬変\tparent_of\tアルコール性肝線維症\t1\tfalse\ttrue"
    );
    assert_eq!(lines[4], "h\tステロイド\tpolarity\t有効\t2\ttrue\tfalse");
}

#[test]
fn decompose_empty_corpus_is_header_only() {
    let dir = TempDir::new().unwrap();
    let o = run(&["decompose", p(dir.path())]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        stdout(&o),
        format!("{}\n", causal_tree::export::TRIPLET_TSV_HEADER)
    );
}

#[test]
fn decompose_skips_broken_cases() {
    let dir = TempDir::new().unwrap();
    write_dir(dir.path(), &cases(&[("a", "A\n    B"), ("b", "B")]));
    let o = run(&["decompose", p(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout(&o).lines().count(), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("a: line 2"));
}

#[test]
fn score_identical_corpora_is_perfect() {
    let dir = TempDir::new().unwrap();
    let gold = dir.path().join("gold");
    write_dir(
        &gold,
        &cases(&[("c1", EXAMPLE_TREE), ("c2", "肺炎\n  発熱 / 高値")]),
    );
    for method in ["none", "reciprocal", "exponential"] {
        let v = json(&run(&[
            "score",
            "--gold",
            p(&gold),
            "--pred",
            p(&gold),
            "--method",
            method,
            "--format",
            "records",
        ]));
        for scheme in ["weighted", "unweighted"] {
            for agg in ["micro", "macro"] {
                for key in ["precision", "recall", "f1"] {
                    assert_eq!(
                        v[scheme][agg][key].as_f64(),
                        Some(1.0),
                        "{method} {scheme} {agg} {key}"
                    );
                }
            }
        }
    }
}

#[test]
fn score_partial_instance() {
    let dir = TempDir::new().unwrap();
    let gold = dir.path().join("gold");
    let pred = dir.path().join("pred");
    write_dir(&gold, &cases(&[("c1", "A\n  B\n  C\n  D")]));
    write_dir(&pred, &cases(&[("c1", "A\n  B\n  X")]));
    let v = json(&run(&[
        "score",
        "--gold",
        p(&gold),
        "--pred",
        p(&pred),
        "--method",
        "none",
        "--format",
        "records",
    ]));
    let m = &v["weighted"]["micro"];
    assert_eq!(m["matched_count"], 2);
    assert_eq!(m["pred_count"], 3);
    assert_eq!(m["gold_count"], 4);
    assert!((m["precision"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-12);
    assert!((m["recall"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!((m["f1"].as_f64().unwrap() - 4.0 / 7.0).abs() < 1e-12);
}

#[test]
fn score_missing_prediction_and_dump() {
    let dir = TempDir::new().unwrap();
    let gold = dir.path().join("gold");
    let pred = dir.path().join("pred");
    write_dir(&gold, &cases(&[("c1", "A\n  B"), ("c2", "C")]));
    write_dir(&pred, &cases(&[("c1", "A\n  Z")]));
    let dump = dir.path().join("align.tsv");
    let report = dir.path().join("report.json");
    let o = run(&[
        "score",
        "--gold",
        p(&gold),
        "--pred",
        p(&pred),
        "--dump-alignment",
        p(&dump),
        "--report",
        p(&report),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("missing predictions: 1"));
    let v: Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["missing_predictions"], 1);
    assert_eq!(v["per_case"][1]["case_id"], "c2");
    assert_eq!(v["per_case"][1]["weighted"]["recall"], 0.0);
    let dump = fs::read_to_string(&dump).unwrap();
    let rows: Vec<&str> = dump.lines().collect();
    assert_eq!(rows[0], causal_tree::export::ALIGNMENT_TSV_HEADER);
    assert!(rows[1].starts_with("c1\tmatched\t0\t0\t0\t"));
    assert!(rows
        .iter()
        .any(|r| r.starts_with("c1\tunmatched_pred\t1\t-")));
    assert!(rows
        .iter()
        .any(|r| r.starts_with("c2\tunmatched_gold\t-\t0")));
}

#[test]
fn score_orphan_prediction_is_data_error() {
    let dir = TempDir::new().unwrap();
    let gold = dir.path().join("gold");
    let pred = dir.path().join("pred");
    write_dir(&gold, &cases(&[("c1", "A")]));
    write_dir(&pred, &cases(&[("c1", "A"), ("zz", "B")]));
    let o = run(&["score", "--gold", p(&gold), "--pred", p(&pred)]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn score_unparsable_prediction_counts_as_empty() {
    let dir = TempDir::new().unwrap();
    let gold = dir.path().join("gold");
    let pred = dir.path().join("pred");
    write_dir(&gold, &cases(&[("c1", "A\n  B")]));
    write_dir(&pred, &cases(&[("c1", "A\n      B")]));
    let v = json(&run(&[
        "score",
        "--gold",
        p(&gold),
        "--pred",
        p(&pred),
        "--format",
        "records",
    ]));
    assert_eq!(v["unparsable_predictions"], 1);
    assert_eq!(v["per_case"][0]["unparsable_prediction"], true);
    assert_eq!(v["weighted"]["micro"]["f1"], 0.0);
}

#[test]
fn score_root_only() {
    let dir = TempDir::new().unwrap();
    let gold = dir.path().join("gold");
    let pred = dir.path().join("pred");
    write_dir(&gold, &cases(&[("c1", "A\n  B\nC")]));
    write_dir(&pred, &cases(&[("c1", "A\n  X\nC")]));
    let v = json(&run(&[
        "score",
        "--gold",
        p(&gold),
        "--pred",
        p(&pred),
        "--root-only",
        "--format",
        "records",
    ]));
    assert_eq!(v["config"]["root_only"], true);
    assert_eq!(v["unweighted"]["micro"]["gold_count"], 2);
    assert_eq!(v["unweighted"]["micro"]["f1"], 1.0);
}

#[test]
fn score_thesaurus_from_environment() {
    let dir = TempDir::new().unwrap();
    let gold = dir.path().join("gold");
    let pred = dir.path().join("pred");
    write_dir(&gold, &cases(&[("c1", "心筋梗塞")]));
    write_dir(&pred, &cases(&[("c1", "MI")]));
    let thesaurus = dir.path().join("thesaurus.tsv");
    fs::write(&thesaurus, "# surface\trepresentative\nMI\t心筋梗塞\n").unwrap();
    let args = [
        "score",
        "--gold",
        p(&gold),
        "--pred",
        p(&pred),
        "--format",
        "records",
    ];

    let v = json(&run(&args));
    assert_eq!(v["unweighted"]["micro"]["f1"], 0.0);

    let o = Command::new(env!("CARGO_BIN_EXE_causal-tree"))
        .args(args)
        .env("CAUSAL_TREE_THESAURUS", &thesaurus)
        .output()
        .unwrap();
    let v = json(&o);
    assert_eq!(v["unweighted"]["micro"]["f1"], 1.0);
    assert_eq!(v["config"]["thesaurus"], p(&thesaurus));
}

#[test]
fn score_rejects_bad_threshold() {
    let dir = TempDir::new().unwrap();
    write_dir(dir.path(), &cases(&[("c1", "A")]));
    let o = run(&[
        "score",
        "--gold",
        p(dir.path()),
        "--pred",
        p(dir.path()),
        "--threshold",
        "1.5",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn score_is_deterministic_across_jobs() {
    let dir = TempDir::new().unwrap();
    let gold = dir.path().join("gold");
    let pred = dir.path().join("pred");
    let mut rng = StdRng::seed_from_u64(11);
    let mut g = Vec::new();
    let mut q = Vec::new();
    for i in 0..60 {
        let (a, b) = synthetic_case(&mut rng, 20);
        g.push((format!("case{i:03}"), a));
        q.push((format!("case{i:03}"), b));
    }
    write_dir(&gold, &g);
    write_dir(&pred, &q);
    let base = [
        "score",
        "--gold",
        p(&gold),
        "--pred",
        p(&pred),
        "--format",
        "records",
    ];
    let one = run(&[&base[..], &["--jobs", "1"]].concat());
    let four = run(&[&base[..], &["--jobs", "4"]].concat());
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn stats_counts() {
    let dir = TempDir::new().unwrap();
    write_dir(dir.path(), &cases(&[("c1", EXAMPLE_TREE), ("c2", "A\nB")]));
    let v = json(&run(&["stats", p(dir.path()), "--format", "records"]));
    assert_eq!(v["cases"], 2);
    assert_eq!(v["nodes"], 8);
    assert_eq!(v["roots"], 3);
    assert_eq!(v["triplets"], 12);
    assert_eq!(v["triplets_without_root"], 9);
    let text = stdout(&run(&["stats", p(dir.path())]));
    assert!(text.contains("Root node"));
}

fn write_manual(path: &Path, rows: &[(String, f64)]) {
    let mut s = String::from("case_id\tscore\n");
    for (id, score) in rows {
        s.push_str(&format!("{id}\t{score}\n"));
    }
    fs::write(path, s).unwrap();
}

fn brute_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (sx, sy): (f64, f64) = (x.iter().sum(), y.iter().sum());
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|b| b * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

#[test]
fn correlate_against_scaled_f1_is_one() {
    let dir = TempDir::new().unwrap();
    let gold = dir.path().join("gold");
    let pred = dir.path().join("pred");
    let mut rng = StdRng::seed_from_u64(5);
    let mut g = Vec::new();
    let mut q = Vec::new();
    for i in 0..12 {
        let (a, b) = synthetic_case(&mut rng, 16);
        g.push((format!("k{i:02}"), a));
        q.push((format!("k{i:02}"), b));
    }
    write_dir(&gold, &g);
    write_dir(&pred, &q);
    let report = dir.path().join("report.json");
    let o = run(&[
        "score",
        "--gold",
        p(&gold),
        "--pred",
        p(&pred),
        "--report",
        p(&report),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    let f1: Vec<(String, f64)> = v["per_case"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| {
            (
                c["case_id"].as_str().unwrap().to_string(),
                c["weighted"]["f1"].as_f64().unwrap(),
            )
        })
        .collect();

    let manual = dir.path().join("manual.tsv");
    write_manual(
        &manual,
        &f1.iter()
            .map(|(id, x)| (id.clone(), 100.0 * x))
            .collect::<Vec<_>>(),
    );
    let r = json(&run(&[
        "correlate",
        "--scores",
        p(&report),
        "--manual",
        p(&manual),
        "--format",
        "records",
    ]));
    assert!((r["pearson"].as_f64().unwrap() - 1.0).abs() < 1e-9);

    // a manual score unrelated to F1, checked against a brute-force formula
    let human: Vec<f64> = (0..f1.len())
        .map(|i| ((i * 37) % 11) as f64 * 9.0)
        .collect();
    write_manual(
        &manual,
        &f1.iter()
            .zip(&human)
            .map(|((id, _), h)| (id.clone(), *h))
            .collect::<Vec<_>>(),
    );
    let r = json(&run(&[
        "correlate",
        "--gold",
        p(&gold),
        "--pred",
        p(&pred),
        "--manual",
        p(&manual),
        "--spearman",
        "--format",
        "records",
    ]));
    let xs: Vec<f64> = f1.iter().map(|(_, x)| *x).collect();
    assert!((r["pearson"].as_f64().unwrap() - brute_pearson(&xs, &human)).abs() < 1e-9);
    assert!(r["spearman"].as_f64().is_some());
    assert_eq!(r["config"]["method"], "reciprocal");
}

#[test]
fn correlate_constant_inputs_are_named() {
    let dir = TempDir::new().unwrap();
    let gold = dir.path().join("gold");
    write_dir(&gold, &cases(&[("a", "A"), ("b", "B"), ("c", "C")]));
    let manual = dir.path().join("manual.tsv");
    write_manual(
        &manual,
        &[("a".into(), 10.0), ("b".into(), 20.0), ("c".into(), 30.0)],
    );
    let o = run(&[
        "correlate",
        "--gold",
        p(&gold),
        "--pred",
        p(&gold),
        "--manual",
        p(&manual),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("per-case F1 scores are constant"));

    let pred = dir.path().join("pred");
    write_dir(&pred, &cases(&[("a", "A"), ("b", "X")]));
    write_manual(
        &manual,
        &[("a".into(), 50.0), ("b".into(), 50.0), ("c".into(), 50.0)],
    );
    let o = run(&[
        "correlate",
        "--gold",
        p(&gold),
        "--pred",
        p(&pred),
        "--manual",
        p(&manual),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("manual scores are constant"));
}

#[test]
fn correlate_rejects_unmatched_manual_ids() {
    let dir = TempDir::new().unwrap();
    let gold = dir.path().join("gold");
    write_dir(&gold, &cases(&[("a", "A"), ("b", "B")]));
    let manual = dir.path().join("manual.tsv");
    write_manual(&manual, &[("a".into(), 10.0)]);
    let o = run(&[
        "correlate",
        "--gold",
        p(&gold),
        "--pred",
        p(&gold),
        "--manual",
        p(&manual),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sweep_prefers_weighting_when_manual_ignores_deep_errors() {
    let dir = TempDir::new().unwrap();
    let gold = dir.path().join("gold");
    let pred = dir.path().join("pred");
    let corpus = shallow_preference_corpus();
    write_dir(
        &gold,
        &corpus
            .iter()
            .map(|c| (c.0.clone(), c.1.clone()))
            .collect::<Vec<_>>(),
    );
    write_dir(
        &pred,
        &corpus
            .iter()
            .map(|c| (c.0.clone(), c.2.clone()))
            .collect::<Vec<_>>(),
    );
    let manual = dir.path().join("manual.tsv");
    write_manual(
        &manual,
        &corpus
            .iter()
            .map(|c| (c.0.clone(), c.3))
            .collect::<Vec<_>>(),
    );

    let v = json(&run(&[
        "sweep",
        "--gold",
        p(&gold),
        "--pred",
        p(&pred),
        "--manual",
        p(&manual),
        "--format",
        "records",
    ]));
    let cells = v["table"]["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 11);
    let best = &cells[0];
    assert_ne!(best["method"], "none");
    let none = cells.iter().find(|c| c["method"] == "none").unwrap();
    assert!(best["correlation"].as_f64().unwrap() > none["correlation"].as_f64().unwrap());
    let rs: Vec<f64> = cells
        .iter()
        .map(|c| c["correlation"].as_f64().unwrap())
        .collect();
    assert!(rs.windows(2).all(|w| w[0] >= w[1]));

    let text = stdout(&run(&[
        "sweep",
        "--gold",
        p(&gold),
        "--pred",
        p(&pred),
        "--manual",
        p(&manual),
    ]));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 12);
}

#[test]
fn jsonl_corpus_input() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("gold.jsonl");
    let rows = [
        serde_json::json!({"id": "b", "tree": "肺炎\n  発熱"}),
        serde_json::json!({"id": "a", "tree": EXAMPLE_TREE, "report": "..."}),
    ];
    let text: String = rows.iter().map(|r| format!("{r}\n")).collect();
    fs::write(&path, text).unwrap();
    let o = run(&["decompose", p(&path)]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let ids: Vec<&str> = out
        .lines()
        .skip(1)
        .map(|l| l.split('\t').next().unwrap())
        .collect();
    assert_eq!(ids.iter().filter(|i| **i == "a").count(), 10);
    assert_eq!(ids.iter().filter(|i| **i == "b").count(), 2);
    assert_eq!(ids[0], "a");
}
