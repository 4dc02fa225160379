//! Subcommand arguments and implementations. Each command writes its report
//! to `out`, notes and diagnostics to `err`, and returns the exit status.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use causal_tree_core::{
    decompose, forest_stats, join_manual, pair_cases, pearson, spearman, sweep, validate,
    CaseEvaluation, CorrelationError, CorrelationKind, MatchConfig, ParseOptions, Severity,
    SweepError, SweepGrid, Thesaurus, ThresholdRule, TripletSet, WeightMethod, WeightScheme,
};
use clap::{Args, ValueEnum};
use rayon::prelude::*;

use crate::corpus::{load_corpus, parse_corpus};
use crate::error::CliError;
use crate::export;
use crate::report::{
    CorrelationReport, PriorReport, RunConfig, ScoreReport, StatsOutput, SweepReport,
    CORRELATION_SCHEMA, SWEEP_SCHEMA,
};
use crate::tables::{load_manual_scores, load_thesaurus};

pub const THESAURUS_ENV: &str = "CAUSAL_TREE_THESAURUS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum OutputFormat {
    #[default]
    Text,
    Records,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum TripletFormat {
    #[default]
    Tsv,
    Records,
}

#[derive(Debug, Clone, Args)]
pub struct CorpusArg {
    /// Directory of `*.tree` files or a JSON Lines file of {id, tree} records
    pub corpus: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct MatchArgs {
    /// Edit-distance ratio below which two entities match
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    /// Accept ratios equal to the threshold
    #[arg(long)]
    pub inclusive_threshold: bool,
    /// Allow fuzzy matches on polarity values
    #[arg(long)]
    pub fuzzy_polarity: bool,
    /// Skip Unicode compatibility normalization before thesaurus lookup
    #[arg(long)]
    pub no_unicode_normalize: bool,
    /// Thesaurus TSV (surface<TAB>representative)
    #[arg(long, env = THESAURUS_ENV)]
    pub thesaurus: Option<PathBuf>,
    /// Worker threads; 0 uses every core
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
}

impl Default for MatchArgs {
    fn default() -> Self {
        MatchArgs {
            threshold: 0.5,
            inclusive_threshold: false,
            fuzzy_polarity: false,
            no_unicode_normalize: false,
            thesaurus: None,
            jobs: 0,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct WeightArgs {
    /// Triplet weighting: none, reciprocal (x/(1+Cd)) or exponential (x/C^d)
    #[arg(long, default_value = "reciprocal")]
    pub method: WeightMethod,
    /// Weighting constant C
    #[arg(long = "C", default_value_t = 2.0)]
    pub c: f64,
    /// Score only the [root] triplets (top-level diagnoses)
    #[arg(long)]
    pub root_only: bool,
}

impl Default for WeightArgs {
    fn default() -> Self {
        WeightArgs {
            method: WeightMethod::Reciprocal,
            c: 2.0,
            root_only: false,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub corpus: CorpusArg,
}

#[derive(Debug, Clone, Args)]
pub struct DecomposeArgs {
    #[command(flatten)]
    pub corpus: CorpusArg,
    #[arg(long, value_enum, default_value_t)]
    pub format: TripletFormat,
    /// Write to a file instead of stdout
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long)]
    pub pred: PathBuf,
    #[command(flatten)]
    pub matching: MatchArgs,
    #[command(flatten)]
    pub weights: WeightArgs,
    #[arg(long, value_enum, default_value_t)]
    pub format: OutputFormat,
    /// Also write the full per-case JSON report here
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Write matched and unmatched triplets per case as TSV
    #[arg(long)]
    pub dump_alignment: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub corpus: CorpusArg,
    #[arg(long, value_enum, default_value_t)]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Args)]
pub struct CorrelateArgs {
    /// Manual scores TSV (case_id<TAB>score in [0, 100])
    #[arg(long)]
    pub manual: PathBuf,
    /// Read per-case weighted F1 from a previous `score --report` file
    #[arg(long, conflicts_with_all = ["gold", "pred"])]
    pub scores: Option<PathBuf>,
    #[arg(long, requires = "pred")]
    pub gold: Option<PathBuf>,
    #[arg(long, requires = "gold")]
    pub pred: Option<PathBuf>,
    /// Also report Spearman rank correlation
    #[arg(long)]
    pub spearman: bool,
    #[command(flatten)]
    pub matching: MatchArgs,
    #[command(flatten)]
    pub weights: WeightArgs,
    #[arg(long, value_enum, default_value_t)]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub manual: PathBuf,
    /// Weighting methods to sweep; the unweighted baseline is always included
    #[arg(long, value_delimiter = ',', default_value = "reciprocal,exponential")]
    pub methods: Vec<WeightMethod>,
    /// Values of C to sweep
    #[arg(long = "C-grid", value_delimiter = ',', default_value = "0.5,1,2,4,8")]
    pub c_grid: Vec<f64>,
    /// Rank by Spearman instead of Pearson correlation
    #[arg(long)]
    pub spearman: bool,
    /// Score only the [root] triplets
    #[arg(long)]
    pub root_only: bool,
    #[command(flatten)]
    pub matching: MatchArgs,
    #[arg(long, value_enum, default_value_t)]
    pub format: OutputFormat,
}

/// Effective configuration plus the loaded thesaurus.
pub struct Setup {
    pub config: RunConfig,
    pub thesaurus: Thesaurus,
    pub jobs: usize,
}

impl Setup {
    pub fn new(
        matching: &MatchArgs,
        weights: &WeightArgs,
        err: &mut dyn Write,
    ) -> Result<Self, CliError> {
        let base = MatchConfig::with_threshold(matching.threshold)
            .map_err(|e| CliError::data(e.to_string()))?;
        WeightScheme::new(weights.method, weights.c).map_err(|e| CliError::data(e.to_string()))?;
        let unicode_normalize = !matching.no_unicode_normalize;
        let thesaurus = match &matching.thesaurus {
            Some(path) => {
                let (thesaurus, warnings) = load_thesaurus(path, unicode_normalize)?;
                for w in warnings {
                    writeln!(err, "warning: {w}")?;
                }
                thesaurus
            }
            None => Thesaurus::empty(),
        };
        let config = RunConfig {
            threshold: base.threshold,
            threshold_rule: if matching.inclusive_threshold {
                ThresholdRule::Inclusive
            } else {
                ThresholdRule::Strict
            },
            polarity_exact: !matching.fuzzy_polarity,
            unicode_normalize,
            method: weights.method,
            c: weights.c,
            root_only: weights.root_only,
            thesaurus: matching.thesaurus.as_ref().map(|p| p.display().to_string()),
        };
        Ok(Setup {
            config,
            thesaurus,
            jobs: matching.jobs,
        })
    }
}

fn output_sink(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    match path {
        Some(path) => {
            let file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
            Ok(Box::new(io::BufWriter::new(file)))
        }
        None => Ok(Box::new(io::stdout().lock())),
    }
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

pub fn cmd_validate(
    args: &ValidateArgs,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<u8, CliError> {
    let cases = load_corpus(&args.corpus.corpus)?;
    let options = ParseOptions::default();
    let (mut errors, mut warnings) = (0, 0);
    for case in &cases {
        for d in validate(&case.tree, &options) {
            match d.severity {
                Severity::Error => errors += 1,
                Severity::Warning => warnings += 1,
            }
            writeln!(out, "{}: {d}", case.id)?;
        }
    }
    writeln!(
        err,
        "{} cases, {errors} errors, {warnings} warnings",
        cases.len()
    )?;
    Ok(u8::from(errors > 0))
}

pub fn cmd_decompose(
    args: &DecomposeArgs,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<u8, CliError> {
    let cases = load_corpus(&args.corpus.corpus)?;
    let (forests, failures) = parse_corpus(&cases, &ParseOptions::default());
    for f in &failures {
        write!(err, "{}", f.render())?;
        writeln!(err, "{}: skipped", f.case_id)?;
    }
    let mut file_sink;
    let sink: &mut dyn Write = match &args.output {
        Some(path) => {
            file_sink = output_sink(Some(path))?;
            &mut *file_sink
        }
        None => out,
    };
    if args.format == TripletFormat::Tsv {
        export::write_triplet_tsv_header(sink)?;
    }
    for forest in &forests {
        let set = decompose(forest);
        match args.format {
            TripletFormat::Tsv => export::write_triplet_tsv(sink, &set)?,
            TripletFormat::Records => export::write_triplet_records(sink, &set)?,
        }
    }
    sink.flush()?;
    Ok(u8::from(!failures.is_empty()))
}

pub fn cmd_stats(
    args: &StatsArgs,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<u8, CliError> {
    let cases = load_corpus(&args.corpus.corpus)?;
    let (forests, failures) = parse_corpus(&cases, &ParseOptions::default());
    for f in &failures {
        write!(err, "{}", f.render())?;
    }
    if !failures.is_empty() {
        return Ok(1);
    }
    let report = StatsOutput::new(forest_stats(&forests));
    match args.format {
        OutputFormat::Text => out.write_all(report.to_text().as_bytes())?,
        OutputFormat::Records => out.write_all(report.to_json().as_bytes())?,
    }
    Ok(0)
}

/// Aligned cases sorted by id, plus the ids of predictions that failed to
/// parse and were scored as empty.
pub struct Evaluated {
    pub cases: Vec<CaseEvaluation>,
    pub unparsable: Vec<String>,
}

/// Loads and aligns a gold/prediction corpus pair. Gold parse failures are
/// fatal; prediction parse failures are reported and scored as empty.
pub fn evaluate_corpora(
    gold: &Path,
    pred: &Path,
    setup: &Setup,
    err: &mut dyn Write,
) -> Result<Evaluated, CliError> {
    let options = ParseOptions::default();
    let gold_cases = load_corpus(gold)?;
    let pred_cases = load_corpus(pred)?;
    let (gold_forests, gold_failures) = parse_corpus(&gold_cases, &options);
    if !gold_failures.is_empty() {
        let listing: String = gold_failures.iter().map(|f| f.render()).collect();
        return Err(CliError::data(format!(
            "gold corpus does not parse:\n{}",
            listing.trim_end()
        )));
    }
    let (pred_forests, pred_failures) = parse_corpus(&pred_cases, &options);
    for f in &pred_failures {
        write!(err, "{}", f.render())?;
        writeln!(
            err,
            "{}: prediction does not parse; scored as empty",
            f.case_id
        )?;
    }
    let gold_sets: Vec<TripletSet> = gold_forests.iter().map(decompose).collect();
    let mut pred_sets: Vec<TripletSet> = pred_forests.iter().map(decompose).collect();
    let mut unparsable: Vec<String> = pred_failures.into_iter().map(|f| f.case_id).collect();
    unparsable.sort();
    // Keep unparsable predictions visible to pairing so that orphans are
    // still caught; they are scored as empty sets.
    pred_sets.extend(unparsable.iter().map(|id| TripletSet::empty(id.clone())));

    let pairs = pair_cases(gold_sets, pred_sets).map_err(|e| CliError::data(e.to_string()))?;
    let cfg = setup.config.match_config();
    let root_only = setup.config.root_only;
    let thesaurus = &setup.thesaurus;
    let run = || -> Vec<CaseEvaluation> {
        pairs
            .par_iter()
            .map(|pair| {
                let mut eval = CaseEvaluation::new(pair, thesaurus, &cfg, root_only);
                if unparsable.binary_search(&pair.case_id).is_ok() {
                    eval.missing_prediction = true;
                }
                eval
            })
            .collect()
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(setup.jobs)
        .build()
        .map_err(|e| CliError::data(format!("cannot start worker pool: {e}")))?;
    let cases = pool.install(run);
    Ok(Evaluated { cases, unparsable })
}

pub fn cmd_score(
    args: &ScoreArgs,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<u8, CliError> {
    let setup = Setup::new(&args.matching, &args.weights, err)?;
    let evaluated = evaluate_corpora(&args.gold, &args.pred, &setup, err)?;
    let report = ScoreReport::new(
        setup.config.clone(),
        &evaluated.cases,
        &evaluated.unparsable,
    );
    match args.format {
        OutputFormat::Text => out.write_all(report.to_text().as_bytes())?,
        OutputFormat::Records => out.write_all(report.to_json().as_bytes())?,
    }
    if let Some(path) = &args.report {
        write_file(path, report.to_json().as_bytes())?;
    }
    if let Some(path) = &args.dump_alignment {
        let mut buf = Vec::new();
        writeln!(buf, "{}", export::ALIGNMENT_TSV_HEADER)?;
        for case in &evaluated.cases {
            export::write_alignment(&mut buf, case)?;
        }
        write_file(path, &buf)?;
    }
    Ok(0)
}

fn correlation_error(e: CorrelationError) -> CliError {
    match e {
        CorrelationError::ConstantInput("first") => {
            CliError::data("correlation undefined: per-case F1 scores are constant")
        }
        CorrelationError::ConstantInput(_) => {
            CliError::data("correlation undefined: manual scores are constant")
        }
        other => CliError::data(format!("correlation undefined: {other}")),
    }
}

fn sweep_error(e: SweepError) -> CliError {
    match e {
        SweepError::Correlation(c) => correlation_error(c),
        other => CliError::data(other.to_string()),
    }
}

pub fn cmd_correlate(
    args: &CorrelateArgs,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<u8, CliError> {
    let manual = load_manual_scores(&args.manual)?;
    let (config, ids, f1s) = match (&args.scores, &args.gold, &args.pred) {
        (Some(path), _, _) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let prior: PriorReport = serde_json::from_str(&text)
                .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
            let (ids, f1s) = prior
                .per_case
                .into_iter()
                .map(|c| (c.case_id, c.weighted.f1))
                .unzip();
            (None, ids, f1s)
        }
        (None, Some(gold), Some(pred)) => {
            let setup = Setup::new(&args.matching, &args.weights, err)?;
            let evaluated = evaluate_corpora(gold, pred, &setup, err)?;
            let scheme = setup.config.scheme();
            let (ids, f1s): (Vec<String>, Vec<f64>) = evaluated
                .cases
                .iter()
                .map(|c| (c.case_id.clone(), c.score(&scheme).f1))
                .unzip();
            (Some(setup.config), ids, f1s)
        }
        _ => {
            return Err(CliError::data(
                "give either --scores or both --gold and --pred",
            ))
        }
    };
    let human = join_manual(ids.iter().map(String::as_str), &manual).map_err(sweep_error)?;
    let r = pearson(&f1s, &human).map_err(correlation_error)?;
    let rho = if args.spearman {
        Some(spearman(&f1s, &human).map_err(correlation_error)?)
    } else {
        None
    };
    let report = CorrelationReport {
        schema: CORRELATION_SCHEMA,
        config,
        cases: ids.len(),
        pearson: r,
        spearman: rho,
    };
    match args.format {
        OutputFormat::Text => out.write_all(report.to_text().as_bytes())?,
        OutputFormat::Records => out.write_all(report.to_json().as_bytes())?,
    }
    Ok(0)
}

pub fn cmd_sweep(
    args: &SweepArgs,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<u8, CliError> {
    let weights = WeightArgs {
        root_only: args.root_only,
        ..WeightArgs::default()
    };
    let setup = Setup::new(&args.matching, &weights, err)?;
    let manual = load_manual_scores(&args.manual)?;
    let evaluated = evaluate_corpora(&args.gold, &args.pred, &setup, err)?;
    let grid = SweepGrid {
        methods: args.methods.clone(),
        cs: args.c_grid.clone(),
        correlation: if args.spearman {
            CorrelationKind::Spearman
        } else {
            CorrelationKind::Pearson
        },
    };
    let table = sweep(&evaluated.cases, &manual, &grid).map_err(sweep_error)?;
    let report = SweepReport {
        schema: SWEEP_SCHEMA,
        config: setup.config,
        cases: evaluated.cases.len(),
        table,
    };
    match args.format {
        OutputFormat::Text => out.write_all(report.to_text().as_bytes())?,
        OutputFormat::Records => out.write_all(report.to_json().as_bytes())?,
    }
    Ok(0)
}
