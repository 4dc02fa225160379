//! Two-column TSV inputs: the thesaurus and manual scores.

use std::fs;
use std::path::Path;

use causal_tree_core::{ManualScore, Thesaurus, ThesaurusWarning};

use crate::error::CliError;

fn read_utf8(path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    String::from_utf8(bytes)
        .map_err(|_| CliError::data(format!("{}: not valid UTF-8", path.display())))
}

/// Non-comment, non-blank lines split on the first tab, with 1-based line
/// numbers.
fn rows<'a>(
    text: &'a str,
    path: &'a Path,
) -> impl Iterator<Item = Result<(usize, &'a str, &'a str), CliError>> + 'a {
    text.lines().enumerate().filter_map(move |(i, line)| {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() || line.starts_with('#') {
            return None;
        }
        Some(match line.split_once('\t') {
            Some((a, b)) if !b.contains('\t') => Ok((i + 1, a, b)),
            _ => Err(CliError::data(format!(
                "{}:{}: expected two tab-separated columns",
                path.display(),
                i + 1
            ))),
        })
    })
}

/// Loads `surface<TAB>representative` lines. Duplicate surfaces keep the
/// last entry and are returned as warnings.
pub fn load_thesaurus(
    path: &Path,
    unicode_normalize: bool,
) -> Result<(Thesaurus, Vec<String>), CliError> {
    let text = read_utf8(path)?;
    let pairs = rows(&text, path)
        .map(|row| row.map(|(_, a, b)| (a, b)))
        .collect::<Result<Vec<_>, _>>()?;
    let (thesaurus, warnings) = Thesaurus::build(pairs, unicode_normalize)
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    let warnings = warnings
        .into_iter()
        .map(|w| match w {
            ThesaurusWarning::DuplicateSurface {
                surface,
                dropped,
                kept,
            } => format!(
                "{}: duplicate surface `{surface}`: `{kept}` replaces `{dropped}`",
                path.display()
            ),
        })
        .collect();
    Ok((thesaurus, warnings))
}

/// Loads `case_id<TAB>score` lines with scores in [0, 100]. A first row whose
/// score column is not a number is taken as a header.
pub fn load_manual_scores(path: &Path) -> Result<Vec<ManualScore>, CliError> {
    let text = read_utf8(path)?;
    let mut out = Vec::new();
    for (n, row) in rows(&text, path).enumerate() {
        let (line, id, score) = row?;
        let value: f64 = match score.trim().parse() {
            Ok(v) => v,
            Err(_) if n == 0 => continue,
            Err(_) => {
                return Err(CliError::data(format!(
                    "{}:{line}: score `{score}` is not a number",
                    path.display()
                )))
            }
        };
        let manual = ManualScore::new(id.trim(), value)
            .map_err(|e| CliError::data(format!("{}:{line}: {e}", path.display())))?;
        out.push(manual);
    }
    Ok(out)
}
