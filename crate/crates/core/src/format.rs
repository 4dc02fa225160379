//! The indentation-based text form of a causal forest.
//!
//! One non-blank line per node; a line indented one level deeper than the
//! nearest preceding line at the level above is its child. Inside a line:
//!
//! ```text
//! line   := ["H:"] [group "="] group (("@" | "/") group)*
//! group  := entity ("＊" entity)*
//! ```
//!
//! `=` splits the line at most once; `@` and `/` attach the following group
//! to the head group from left to right; `＊` binds tightest and is
//! right-headed, so in `右 ＊ 大脳半球` the head is `大脳半球` and `右` is a
//! featured modifier of it.
//!
//! Indentation is two spaces per level by default. One tab per level is
//! also accepted, but tabs and spaces cannot be mixed in one document.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::model::{CausalForest, Entity, Modifier, Node, Relation, HISTORY_PREFIX};

const ASCII_STAR: char = '*';
const FULLWIDTH_STAR: char = '＊';

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum DiagnosticCode {
    EmptyDocument,
    IndentJump,
    MixedIndent,
    UnevenIndent,
    EmptyOperand,
    MultipleTests,
    NestedPolarity,
    InvalidEntity,
    TrailingWhitespace,
    NonCanonicalSymbol,
    NonCanonicalSpacing,
    NonCanonicalIndent,
}

impl DiagnosticCode {
    pub fn severity(self) -> Severity {
        use DiagnosticCode::*;
        match self {
            TrailingWhitespace | NonCanonicalSymbol | NonCanonicalSpacing | NonCanonicalIndent => {
                Severity::Warning
            }
            _ => Severity::Error,
        }
    }

    pub fn as_str(self) -> &'static str {
        use DiagnosticCode::*;
        match self {
            EmptyDocument => "EmptyDocument",
            IndentJump => "IndentJump",
            MixedIndent => "MixedIndent",
            UnevenIndent => "UnevenIndent",
            EmptyOperand => "EmptyOperand",
            MultipleTests => "MultipleTests",
            NestedPolarity => "NestedPolarity",
            InvalidEntity => "InvalidEntity",
            TrailingWhitespace => "TrailingWhitespace",
            NonCanonicalSymbol => "NonCanonicalSymbol",
            NonCanonicalSpacing => "NonCanonicalSpacing",
            NonCanonicalIndent => "NonCanonicalIndent",
        }
    }
}

impl fmt::Display for DiagnosticCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ParseDiagnostic {
    /// 1-based.
    pub line_number: usize,
    pub severity: Severity,
    pub code: DiagnosticCode,
    pub message: String,
}

impl ParseDiagnostic {
    fn new(line_number: usize, code: DiagnosticCode, message: impl Into<String>) -> Self {
        ParseDiagnostic {
            line_number,
            severity: code.severity(),
            code,
            message: message.into(),
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(
            f,
            "line {}: {sev}[{}]: {}",
            self.line_number, self.code, self.message
        )
    }
}

/// Which indentation characters a document may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum IndentStyle {
    /// Spaces or tabs, decided by the first indented line.
    #[default]
    Auto,
    Spaces,
    Tabs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParseOptions {
    pub style: IndentStyle,
    /// Spaces per level when indenting with spaces.
    pub indent_width: usize,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            style: IndentStyle::Auto,
            indent_width: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SerializeOptions {
    pub tabs: bool,
    pub indent_width: usize,
}

impl Default for SerializeOptions {
    fn default() -> Self {
        SerializeOptions {
            tabs: false,
            indent_width: 2,
        }
    }
}

/// Parses a whole document. Warnings are dropped; use [`validate`] to see
/// them. The returned forest has an empty `case_id`.
pub fn parse_forest(
    text: &str,
    options: &ParseOptions,
) -> Result<CausalForest, Vec<ParseDiagnostic>> {
    let (forest, diagnostics) = analyze(text, options);
    match forest {
        Some(forest) => Ok(forest),
        None => Err(diagnostics
            .into_iter()
            .filter(ParseDiagnostic::is_error)
            .collect()),
    }
}

/// Every error and warning in `text`, in line order. Empty iff the document
/// parses and is already in canonical form.
pub fn validate(text: &str, options: &ParseOptions) -> Vec<ParseDiagnostic> {
    analyze(text, options).1
}

/// Parses one node line whose indentation has already been stripped.
/// Diagnostics report line 1.
pub fn parse_node_line(line: &str) -> Result<Node, ParseDiagnostic> {
    parse_line(line)
        .map(|parsed| parsed.node)
        .map_err(|(code, message)| ParseDiagnostic::new(1, code, message))
}

pub fn serialize_forest(forest: &CausalForest, options: &SerializeOptions) -> String {
    let unit = if options.tabs {
        String::from("\t")
    } else {
        " ".repeat(options.indent_width)
    };
    let mut lines = Vec::with_capacity(forest.node_count());
    for (depth, node) in forest.nodes() {
        let mut line = unit.repeat(depth - 1);
        line.push_str(&serialize_node_line(node));
        lines.push(line);
    }
    lines.join("\n")
}

/// The canonical single-line form of a node, without indentation or children.
pub fn serialize_node_line(node: &Node) -> String {
    let mut out = String::new();
    if node.history {
        out.push_str(HISTORY_PREFIX);
    }
    if let Some(test) = node.tested() {
        write_group(&mut out, &test.value, &test.nested);
        out.push_str(" = ");
    }
    let head_features: Vec<Modifier> = node
        .modifiers
        .iter()
        .filter(|m| m.relation == Relation::Featured)
        .cloned()
        .collect();
    write_group(&mut out, &node.head, &head_features);
    for m in &node.modifiers {
        let op = match m.relation {
            Relation::Located => " @ ",
            Relation::Polarity => " / ",
            _ => continue,
        };
        out.push_str(op);
        write_group(&mut out, &m.value, &m.nested);
    }
    out
}

fn write_group(out: &mut String, head: &Entity, features: &[Modifier]) {
    for f in features {
        out.push_str(f.value.as_str());
        out.push(' ');
        out.push(FULLWIDTH_STAR);
        out.push(' ');
    }
    out.push_str(head.as_str());
}

struct ParsedLine {
    node: Node,
    ascii_star: bool,
}

type LineError = (DiagnosticCode, String);

fn parse_line(line: &str) -> Result<ParsedLine, LineError> {
    let mut rest = line.trim();
    let mut history = false;
    if let Some(stripped) = rest.strip_prefix(HISTORY_PREFIX) {
        history = true;
        rest = stripped;
        if rest.trim().is_empty() {
            return Err((
                DiagnosticCode::EmptyOperand,
                "`H:` prefix is not followed by a node".to_string(),
            ));
        }
    }
    let ascii_star = rest.contains(ASCII_STAR);
    let owned;
    if ascii_star {
        owned = rest.replace(ASCII_STAR, "＊");
        rest = &owned;
    }

    let mut parts = rest.split('=');
    let first = parts.next().unwrap_or_default();
    let (test, body) = match (parts.next(), parts.next()) {
        (None, _) => (None, first),
        (Some(body), None) => (Some(first), body),
        (Some(_), Some(_)) => {
            return Err((
                DiagnosticCode::MultipleTests,
                format!("more than one `=` in `{}`", line.trim()),
            ))
        }
    };

    let mut modifiers = Vec::new();
    if let Some(test) = test {
        let (value, features) = parse_group(test, "=")?;
        modifiers.push(Modifier::tested(value).with_features(features));
    }

    let mut segments = split_attachments(body);
    let (_, head_text) = segments.remove(0);
    let (head, head_features) = parse_group(head_text, "@` or `/")?;
    modifiers.extend(head_features.into_iter().map(Modifier::featured));
    for (op, text) in segments {
        let (value, features) = parse_group(text, if op == '@' { "@" } else { "/" })?;
        let modifier = if op == '@' {
            Modifier::located(value)
        } else {
            if !features.is_empty() {
                return Err((
                    DiagnosticCode::NestedPolarity,
                    format!(
                        "polarity value `{}` cannot carry `＊` features",
                        text.trim()
                    ),
                ));
            }
            Modifier::polarity(value)
        };
        modifiers.push(modifier.with_features(features));
    }

    Ok(ParsedLine {
        node: Node {
            head,
            history,
            modifiers,
            children: Vec::new(),
        },
        ascii_star,
    })
}

/// Splits `body` on `@` and `/`; the first segment has no operator.
fn split_attachments(body: &str) -> Vec<(char, &str)> {
    let mut out = Vec::new();
    let mut op = '\0';
    let mut start = 0;
    for (i, c) in body.char_indices() {
        if c == '@' || c == '/' {
            out.push((op, &body[start..i]));
            op = c;
            start = i + c.len_utf8();
        }
    }
    out.push((op, &body[start..]));
    out
}

/// A `＊` chain: the last entity is the head, the others feature it.
fn parse_group(text: &str, around: &str) -> Result<(Entity, Vec<Entity>), LineError> {
    let mut entities = Vec::new();
    for part in text.split(FULLWIDTH_STAR) {
        let part = part.trim();
        if part.is_empty() {
            let op = if text.contains(FULLWIDTH_STAR) {
                "＊"
            } else {
                around
            };
            return Err((
                DiagnosticCode::EmptyOperand,
                format!("missing operand around `{op}`"),
            ));
        }
        let entity =
            Entity::new(part).map_err(|err| (DiagnosticCode::InvalidEntity, err.to_string()))?;
        entities.push(entity);
    }
    let head = entities.pop().expect("split yields at least one part");
    Ok((head, entities))
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum IndentChar {
    Space,
    Tab,
}

fn analyze(text: &str, options: &ParseOptions) -> (Option<CausalForest>, Vec<ParseDiagnostic>) {
    let mut diags = Vec::new();
    let mut indent_char = match options.style {
        IndentStyle::Auto => None,
        IndentStyle::Spaces => Some(IndentChar::Space),
        IndentStyle::Tabs => Some(IndentChar::Tab),
    };
    let width = options.indent_width.max(1);
    let mut placed: Vec<(usize, Node)> = Vec::new();
    let mut prev_level: Option<usize> = None;
    let mut failed = false;
    let mut warned_tabs = false;

    for (idx, raw) in text.split('\n').enumerate() {
        let line_no = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            if !line.is_empty() {
                diags.push(ParseDiagnostic::new(
                    line_no,
                    DiagnosticCode::TrailingWhitespace,
                    "blank line contains whitespace",
                ));
            }
            continue;
        }
        let content = line.trim_start_matches([' ', '\t']);
        let indent = &line[..line.len() - content.len()];

        if content.trim_end() != content {
            diags.push(ParseDiagnostic::new(
                line_no,
                DiagnosticCode::TrailingWhitespace,
                "trailing whitespace",
            ));
        }

        let level = match indent_level(indent, &mut indent_char, width) {
            Ok(level) => level,
            Err((code, message)) => {
                diags.push(ParseDiagnostic::new(line_no, code, message));
                failed = true;
                continue;
            }
        };
        if indent.contains('\t') && !warned_tabs {
            warned_tabs = true;
            diags.push(ParseDiagnostic::new(
                line_no,
                DiagnosticCode::NonCanonicalIndent,
                "tab indentation; canonical form indents with two spaces",
            ));
        }

        let max_level = prev_level.map_or(0, |p| p + 1);
        if level > max_level {
            diags.push(ParseDiagnostic::new(
                line_no,
                DiagnosticCode::IndentJump,
                format!("indentation level {level} where at most {max_level} is allowed"),
            ));
            failed = true;
            continue;
        }
        prev_level = Some(level);

        match parse_line(content) {
            Ok(parsed) => {
                let canonical = serialize_node_line(&parsed.node);
                let written = content.trim_end();
                if parsed.ascii_star {
                    diags.push(ParseDiagnostic::new(
                        line_no,
                        DiagnosticCode::NonCanonicalSymbol,
                        "half-width `*` used for `＊`",
                    ));
                }
                let respelled = written.replace(ASCII_STAR, "＊");
                if respelled != canonical {
                    diags.push(ParseDiagnostic::new(
                        line_no,
                        DiagnosticCode::NonCanonicalSpacing,
                        format!("canonical spelling is `{canonical}`"),
                    ));
                }
                placed.push((level, parsed.node));
            }
            Err((code, message)) => {
                diags.push(ParseDiagnostic::new(line_no, code, message));
                failed = true;
            }
        }
    }

    if prev_level.is_none() && !failed {
        diags.push(ParseDiagnostic::new(
            1,
            DiagnosticCode::EmptyDocument,
            "document has no node lines",
        ));
        failed = true;
    }
    diags.sort_by_key(|d| d.line_number);

    if failed {
        return (None, diags);
    }
    let forest = CausalForest {
        case_id: String::new(),
        roots: assemble(placed),
    };
    (Some(forest), diags)
}

fn indent_level(
    indent: &str,
    indent_char: &mut Option<IndentChar>,
    width: usize,
) -> Result<usize, LineError> {
    if indent.is_empty() {
        return Ok(0);
    }
    let has_tab = indent.contains('\t');
    let has_space = indent.contains(' ');
    if has_tab && has_space {
        return Err((
            DiagnosticCode::MixedIndent,
            "tabs and spaces mixed in one indentation".to_string(),
        ));
    }
    let this = if has_tab {
        IndentChar::Tab
    } else {
        IndentChar::Space
    };
    match indent_char {
        None => *indent_char = Some(this),
        Some(expected) if *expected != this => {
            return Err((
                DiagnosticCode::MixedIndent,
                "document mixes tab and space indentation".to_string(),
            ))
        }
        Some(_) => {}
    }
    match this {
        IndentChar::Tab => Ok(indent.len()),
        IndentChar::Space if indent.len().is_multiple_of(width) => Ok(indent.len() / width),
        IndentChar::Space => Err((
            DiagnosticCode::UnevenIndent,
            format!("{} spaces is not a multiple of {width}", indent.len()),
        )),
    }
}

/// Builds the forest from `(level, node)` pairs where each level is at most
/// one deeper than the previous.
fn assemble(placed: Vec<(usize, Node)>) -> Vec<Node> {
    fn close(stack: &mut Vec<Node>, roots: &mut Vec<Node>) {
        let node = stack.pop().expect("close on non-empty stack");
        match stack.last_mut() {
            Some(parent) => parent.children.push(node),
            None => roots.push(node),
        }
    }
    let mut roots = Vec::new();
    let mut stack: Vec<Node> = Vec::new();
    for (level, node) in placed {
        while stack.len() > level {
            close(&mut stack, &mut roots);
        }
        stack.push(node);
    }
    while !stack.is_empty() {
        close(&mut stack, &mut roots);
    }
    roots
}
