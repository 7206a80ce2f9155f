//! Line-oriented text format for pipeline models.
//!
//! ```text
//! # 60-segment pipeline
//! pipeline "case-study"
//! series {
//!   group 30 a exponential rate=0.0025
//!   group 20 b exponential rate=0.0023
//!   group 10 c exponential rate=0.015
//!   parallel {
//!     segment bypass_1 exponential rate=1e-3
//!     segment bypass_2 exponential rate=1e-3
//!   }
//! }
//! ```
//!
//! One statement per line; `#` starts a comment outside quoted strings.
//! `group N prefix ...` expands to `N` segments named `prefix_1..prefix_N`.
//! The `pipeline` declaration comes first and is followed by exactly one
//! top-level block.

use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write as _};

use crate::model::{
    is_identifier, validate_model, Block, FailureModel, IssueKind, NodePath, RbdModel, Segment,
    MAX_DEPTH, MAX_LEAVES,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParseErrorCode {
    Syntax,
    UnknownKeyword,
    UnknownDistribution,
    InvalidNumber,
    NonPositiveRate,
    BadName,
    DuplicateName,
    NoPipeline,
    DuplicatePipeline,
    EmptyPipeline,
    MultipleRoots,
    UnbalancedBrace,
    EmptyGroup,
    TooDeep,
    TooManySegments,
}

impl ParseErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ParseErrorCode::Syntax => "syntax",
            ParseErrorCode::UnknownKeyword => "unknown-keyword",
            ParseErrorCode::UnknownDistribution => "unknown-distribution",
            ParseErrorCode::InvalidNumber => "invalid-number",
            ParseErrorCode::NonPositiveRate => "nonpositive-rate",
            ParseErrorCode::BadName => "bad-name",
            ParseErrorCode::DuplicateName => "duplicate-name",
            ParseErrorCode::NoPipeline => "no-pipeline",
            ParseErrorCode::DuplicatePipeline => "duplicate-pipeline",
            ParseErrorCode::EmptyPipeline => "empty-pipeline",
            ParseErrorCode::MultipleRoots => "multiple-roots",
            ParseErrorCode::UnbalancedBrace => "unbalanced-brace",
            ParseErrorCode::EmptyGroup => "empty-group",
            ParseErrorCode::TooDeep => "too-deep",
            ParseErrorCode::TooManySegments => "too-many-segments",
        }
    }
}

/// A located parse diagnostic. Lines and columns are 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub code: ParseErrorCode,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}: error[{}]: {}",
            self.line,
            self.column,
            self.code.as_str(),
            self.message
        )
    }
}

impl std::error::Error for ParseError {}

/// A parsed, validated model together with where it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecDocument {
    pub model: RbdModel,
    pub source_path: Option<String>,
    /// Source line of every node in the model tree.
    pub line_map: BTreeMap<NodePath, usize>,
}

impl SpecDocument {
    pub fn from_model(model: RbdModel) -> Self {
        SpecDocument {
            model,
            source_path: None,
            line_map: BTreeMap::new(),
        }
    }

    pub fn with_source_path(mut self, path: impl Into<String>) -> Self {
        self.source_path = Some(path.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Str(String),
    Open,
    Close,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    column: usize,
}

fn tokenize(line: &str, line_no: usize) -> Result<Vec<Token>, ParseError> {
    let mut tokens = Vec::new();
    let mut chars = line.chars().enumerate().peekable();
    while let Some(&(i, c)) = chars.peek() {
        let column = i + 1;
        match c {
            '#' => break,
            c if c.is_whitespace() => {
                chars.next();
            }
            '{' | '}' => {
                chars.next();
                let tok = if c == '{' { Tok::Open } else { Tok::Close };
                tokens.push(Token { tok, column });
            }
            '"' => {
                chars.next();
                let mut s = String::new();
                let mut closed = false;
                while let Some((j, c)) = chars.next() {
                    match c {
                        '"' => {
                            closed = true;
                            break;
                        }
                        '\\' => {
                            let esc = match chars.next() {
                                Some((_, '"')) => '"',
                                Some((_, '\\')) => '\\',
                                Some((_, 'n')) => '\n',
                                Some((_, 'r')) => '\r',
                                Some((_, 't')) => '\t',
                                other => {
                                    let col = other.map_or(j + 2, |(k, _)| k + 1);
                                    return Err(error(
                                        line_no,
                                        col,
                                        ParseErrorCode::Syntax,
                                        "unknown escape in string",
                                    ));
                                }
                            };
                            s.push(esc);
                        }
                        c => s.push(c),
                    }
                }
                if !closed {
                    return Err(error(line_no, column, ParseErrorCode::Syntax, "unterminated string"));
                }
                tokens.push(Token {
                    tok: Tok::Str(s),
                    column,
                });
            }
            _ => {
                let mut word = String::new();
                while let Some(&(_, c)) = chars.peek() {
                    if c.is_whitespace() || matches!(c, '{' | '}' | '"' | '#') {
                        break;
                    }
                    word.push(c);
                    chars.next();
                }
                tokens.push(Token {
                    tok: Tok::Word(word),
                    column,
                });
            }
        }
    }
    Ok(tokens)
}

fn error(line: usize, column: usize, code: ParseErrorCode, message: impl Into<String>) -> ParseError {
    ParseError {
        line,
        column,
        code,
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum GroupKind {
    Series,
    Parallel,
}

struct Frame {
    kind: GroupKind,
    line: usize,
    column: usize,
    path: NodePath,
    children: Vec<Block>,
    /// Contents are dropped: the group itself was rejected.
    discard: bool,
    /// Statements seen directly inside this group, accepted or not.
    statements: usize,
}

#[derive(Default)]
struct Parser {
    errors: Vec<ParseError>,
    pipeline: Option<(String, usize)>,
    frames: Vec<Frame>,
    roots: Vec<(Block, usize, usize)>,
    names: HashMap<String, usize>,
    leaves: usize,
    line_map: BTreeMap<NodePath, usize>,
    too_many_reported: bool,
}

impl Parser {
    fn err(&mut self, line: usize, column: usize, code: ParseErrorCode, message: impl Into<String>) {
        self.errors.push(error(line, column, code, message));
    }

    /// Path the next block added at the current position will get.
    fn next_path(&self) -> NodePath {
        match self.frames.last() {
            Some(frame) => frame.path.child(frame.children.len()),
            None => NodePath::root(),
        }
    }

    fn depth_of_next(&self) -> usize {
        self.frames.len() + 1
    }

    fn discarding(&self) -> bool {
        self.frames.last().is_some_and(|f| f.discard)
    }

    fn push_block(&mut self, block: Block, line: usize, column: usize) {
        if self.discarding() {
            return;
        }
        let path = self.next_path();
        self.line_map.insert(path, line);
        match self.frames.last_mut() {
            Some(frame) => frame.children.push(block),
            None => self.roots.push((block, line, column)),
        }
    }

    fn statement(&mut self, tokens: &[Token], line: usize) {
        let first = &tokens[0];
        let keyword = match &first.tok {
            Tok::Word(w) => w.as_str(),
            Tok::Close => return self.close(tokens, line),
            Tok::Open => {
                return self.err(line, first.column, ParseErrorCode::Syntax, "unexpected `{`");
            }
            Tok::Str(_) => {
                return self.err(line, first.column, ParseErrorCode::Syntax, "unexpected string");
            }
        };
        if keyword == "pipeline" {
            return self.pipeline(tokens, line);
        }
        if let Some(frame) = self.frames.last_mut() {
            frame.statements += 1;
        }
        if self.pipeline.is_none() {
            return self.err(
                line,
                first.column,
                ParseErrorCode::NoPipeline,
                "expected `pipeline \"<name>\"` before any block",
            );
        }
        match keyword {
            "series" => self.open(tokens, line, GroupKind::Series),
            "parallel" => self.open(tokens, line, GroupKind::Parallel),
            "segment" => self.segment(tokens, line),
            "group" => self.group(tokens, line),
            other => {
                let msg = format!("unknown keyword `{other}`");
                self.err(line, first.column, ParseErrorCode::UnknownKeyword, msg)
            }
        }
    }

    fn pipeline(&mut self, tokens: &[Token], line: usize) {
        if let Some((_, first_line)) = &self.pipeline {
            let msg = format!("pipeline already declared on line {first_line}");
            return self.err(line, tokens[0].column, ParseErrorCode::DuplicatePipeline, msg);
        }
        // a malformed declaration still counts as one
        self.pipeline = Some((String::new(), line));
        match tokens {
            [_, Token { tok: Tok::Str(name), .. }] => {
                self.pipeline = Some((name.clone(), line));
            }
            [_, t, ..] if !matches!(t.tok, Tok::Str(_)) => {
                self.err(line, t.column, ParseErrorCode::Syntax, "pipeline name must be a quoted string")
            }
            [_, _, extra, ..] => {
                self.err(line, extra.column, ParseErrorCode::Syntax, "unexpected token after pipeline name")
            }
            _ => self.err(line, tokens[0].column, ParseErrorCode::Syntax, "expected `pipeline \"<name>\"`"),
        }
    }

    fn open(&mut self, tokens: &[Token], line: usize, kind: GroupKind) {
        let column = tokens[0].column;
        match tokens {
            [_, Token { tok: Tok::Open, .. }] => {}
            [_, Token { tok: Tok::Open, .. }, extra, ..] => {
                return self.err(line, extra.column, ParseErrorCode::Syntax, "`{` must end the line");
            }
            [_, other, ..] => {
                return self.err(line, other.column, ParseErrorCode::Syntax, "expected `{`");
            }
            _ => return self.err(line, column, ParseErrorCode::Syntax, "expected `{` on the same line"),
        }
        let mut discard = self.discarding();
        if !discard && self.depth_of_next() > MAX_DEPTH {
            self.err(line, column, ParseErrorCode::TooDeep, format!("nesting deeper than {MAX_DEPTH}"));
            discard = true;
        }
        if !discard && self.frames.is_empty() && !self.roots.is_empty() {
            self.err(line, column, ParseErrorCode::MultipleRoots, "pipeline must have a single top-level block");
            discard = true;
        }
        let path = self.next_path();
        self.frames.push(Frame {
            kind,
            line,
            column,
            path,
            children: Vec::new(),
            discard,
            statements: 0,
        });
    }

    fn close(&mut self, tokens: &[Token], line: usize) {
        if let Some(extra) = tokens.get(1) {
            self.err(line, extra.column, ParseErrorCode::Syntax, "`}` must stand alone on its line");
        }
        let Some(frame) = self.frames.pop() else {
            return self.err(line, tokens[0].column, ParseErrorCode::UnbalancedBrace, "unmatched `}`");
        };
        if frame.discard {
            return;
        }
        if frame.children.is_empty() {
            if frame.statements > 0 {
                // children were rejected and already reported
                return;
            }
            return self.err(frame.line, frame.column, ParseErrorCode::EmptyGroup, "group has no children");
        }
        let block = match frame.kind {
            GroupKind::Series => Block::Series(frame.children),
            GroupKind::Parallel => Block::Parallel(frame.children),
        };
        self.push_block(block, frame.line, frame.column);
    }

    fn leaf_allowed(&mut self, line: usize, column: usize, count: usize) -> bool {
        if !self.discarding() && self.frames.is_empty() && (!self.roots.is_empty() || count > 1) {
            self.err(line, column, ParseErrorCode::MultipleRoots, "pipeline must have a single top-level block; wrap segments in `series { }`");
            return false;
        }
        if self.depth_of_next() > MAX_DEPTH {
            if !self.discarding() {
                self.err(line, column, ParseErrorCode::TooDeep, format!("nesting deeper than {MAX_DEPTH}"));
            }
            return false;
        }
        if self.leaves.saturating_add(count) > MAX_LEAVES {
            if !self.too_many_reported {
                self.too_many_reported = true;
                self.err(line, column, ParseErrorCode::TooManySegments, format!("more than {MAX_LEAVES} segments"));
            }
            return false;
        }
        true
    }

    /// Parses `exponential rate=<float>`.
    fn failure_model(&mut self, tokens: &[Token], line: usize, anchor: usize) -> Option<FailureModel> {
        let (dist, param) = match tokens {
            [d, p] => (d, p),
            [_, _, extra, ..] => {
                self.err(line, extra.column, ParseErrorCode::Syntax, "unexpected token after rate");
                return None;
            }
            _ => {
                self.err(line, anchor, ParseErrorCode::Syntax, "expected `exponential rate=<float>`");
                return None;
            }
        };
        match &dist.tok {
            Tok::Word(w) if w == "exponential" => {}
            Tok::Word(w) => {
                let msg = format!("unknown distribution `{w}`");
                self.err(line, dist.column, ParseErrorCode::UnknownDistribution, msg);
                return None;
            }
            _ => {
                self.err(line, dist.column, ParseErrorCode::Syntax, "expected a distribution name");
                return None;
            }
        }
        let Tok::Word(w) = &param.tok else {
            self.err(line, param.column, ParseErrorCode::Syntax, "expected `rate=<float>`");
            return None;
        };
        let Some(text) = w.strip_prefix("rate=") else {
            self.err(line, param.column, ParseErrorCode::Syntax, "expected `rate=<float>`");
            return None;
        };
        let value_col = param.column + "rate=".len();
        let rate = match parse_decimal(text) {
            Some(r) => r,
            None => {
                let msg = format!("`{text}` is not a decimal number");
                self.err(line, value_col, ParseErrorCode::InvalidNumber, msg);
                return None;
            }
        };
        if !rate.is_finite() {
            self.err(line, value_col, ParseErrorCode::InvalidNumber, "rate must be finite");
            return None;
        }
        if rate <= 0.0 {
            self.err(line, value_col, ParseErrorCode::NonPositiveRate, "rate must be > 0");
            return None;
        }
        Some(FailureModel::Exponential { rate })
    }

    fn check_name(&mut self, name: &str, line: usize, column: usize) -> bool {
        if !is_identifier(name) {
            let msg = format!("`{name}` is not a valid segment name");
            self.err(line, column, ParseErrorCode::BadName, msg);
            return false;
        }
        if let Some(prev) = self.names.get(name) {
            let msg = format!("duplicate segment name `{name}` (first declared on line {prev})");
            self.err(line, column, ParseErrorCode::DuplicateName, msg);
            return false;
        }
        true
    }

    fn segment(&mut self, tokens: &[Token], line: usize) {
        let column = tokens[0].column;
        let Some(name_tok) = tokens.get(1) else {
            return self.err(line, column, ParseErrorCode::Syntax, "expected a segment name");
        };
        let Tok::Word(name) = &name_tok.tok else {
            return self.err(line, name_tok.column, ParseErrorCode::Syntax, "expected a segment name");
        };
        let name = name.clone();
        let model = self.failure_model(&tokens[2..], line, name_tok.column + name.len());
        let name_ok = self.check_name(&name, line, name_tok.column);
        let (Some(model), true) = (model, name_ok) else { return };
        if !self.leaf_allowed(line, column, 1) {
            return;
        }
        self.names.insert(name.clone(), line);
        self.leaves += 1;
        self.push_block(Block::Leaf(Segment::new(name, model)), line, column);
    }

    fn group(&mut self, tokens: &[Token], line: usize) {
        let column = tokens[0].column;
        let (count_tok, prefix_tok) = match tokens {
            [_, c, p, ..] => (c, p),
            _ => return self.err(line, column, ParseErrorCode::Syntax, "expected `group <count> <prefix> exponential rate=<float>`"),
        };
        let count = match &count_tok.tok {
            Tok::Word(w) => match w.parse::<usize>() {
                Ok(n) if n >= 1 => n,
                _ => {
                    let msg = format!("group count `{w}` must be a positive integer");
                    return self.err(line, count_tok.column, ParseErrorCode::InvalidNumber, msg);
                }
            },
            _ => return self.err(line, count_tok.column, ParseErrorCode::Syntax, "expected a group count"),
        };
        let Tok::Word(prefix) = &prefix_tok.tok else {
            return self.err(line, prefix_tok.column, ParseErrorCode::Syntax, "expected a name prefix");
        };
        let prefix = prefix.clone();
        let model = self.failure_model(&tokens[3..], line, prefix_tok.column + prefix.len());
        if !is_identifier(&prefix) {
            let msg = format!("`{prefix}` is not a valid name prefix");
            return self.err(line, prefix_tok.column, ParseErrorCode::BadName, msg);
        }
        let Some(model) = model else { return };
        if !self.leaf_allowed(line, column, count) {
            return;
        }
        let mut segments = Vec::with_capacity(count);
        for i in 1..=count {
            let name = format!("{prefix}_{i}");
            if !self.check_name(&name, line, prefix_tok.column) {
                return;
            }
            self.names.insert(name.clone(), line);
            segments.push(Segment::new(name, model));
        }
        self.leaves += count;
        for seg in segments {
            self.push_block(Block::Leaf(seg), line, column);
        }
    }

    fn finish(mut self, last_line: usize) -> Result<SpecDocument, Vec<ParseError>> {
        while let Some(frame) = self.frames.pop() {
            if !frame.discard {
                self.err(frame.line, frame.column, ParseErrorCode::UnbalancedBrace, "`{` is never closed");
            }
        }
        let Some((name, pipeline_line)) = self.pipeline.take() else {
            if self.errors.is_empty() {
                self.err(last_line.max(1), 1, ParseErrorCode::NoPipeline, "no pipeline declared");
            }
            return Err(self.errors);
        };
        if self.roots.is_empty() && self.errors.is_empty() {
            self.err(pipeline_line, 1, ParseErrorCode::EmptyPipeline, "pipeline declares no blocks");
        }
        if !self.errors.is_empty() {
            self.errors.sort_by_key(|e| (e.line, e.column));
            return Err(self.errors);
        }
        let (root, _, _) = self.roots.pop().expect("one root");
        let issues = validate_model(&root);
        if !issues.is_empty() {
            return Err(issues
                .into_iter()
                .map(|issue| {
                    let line = self.line_map.get(&issue.path).copied().unwrap_or(pipeline_line);
                    let code = match issue.kind {
                        IssueKind::NonPositiveRate(_) => ParseErrorCode::NonPositiveRate,
                        IssueKind::NonFiniteRate(_) => ParseErrorCode::InvalidNumber,
                        IssueKind::EmptyName | IssueKind::BadName(_) => ParseErrorCode::BadName,
                        IssueKind::DuplicateName(_) => ParseErrorCode::DuplicateName,
                        IssueKind::EmptyGroup => ParseErrorCode::EmptyGroup,
                        IssueKind::TooDeep => ParseErrorCode::TooDeep,
                        IssueKind::TooManyLeaves(_) => ParseErrorCode::TooManySegments,
                    };
                    error(line, 1, code, issue.kind.to_string())
                })
                .collect());
        }
        let model = RbdModel::new(name, root).expect("validated above");
        Ok(SpecDocument {
            model,
            source_path: None,
            line_map: self.line_map,
        })
    }
}

/// Decimal float with optional sign, fraction and exponent. Rejects the
/// `inf`/`nan` spellings that `f64::from_str` also accepts.
fn parse_decimal(text: &str) -> Option<f64> {
    let valid = !text.is_empty()
        && text
            .chars()
            .all(|c| c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E' | '+' | '-'))
        && text.chars().any(|c| c.is_ascii_digit());
    if !valid {
        return None;
    }
    text.parse().ok()
}

/// Parses spec text into a validated document, or every diagnostic found.
pub fn parse_spec(text: &str) -> Result<SpecDocument, Vec<ParseError>> {
    let mut parser = Parser::default();
    let mut last_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        match tokenize(raw, line) {
            Ok(tokens) if tokens.is_empty() => {}
            Ok(tokens) => parser.statement(&tokens, line),
            Err(e) => parser.errors.push(e),
        }
    }
    parser.finish(last_line)
}

fn quote(name: &str) -> String {
    let mut out = String::with_capacity(name.len() + 2);
    out.push('"');
    for c in name.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Canonical, shortest round-trip spelling of a rate.
pub fn format_rate(rate: f64) -> String {
    format!("{rate:?}")
}

fn print_block(out: &mut String, block: &Block, indent: usize) {
    let pad = "  ".repeat(indent);
    match block {
        Block::Leaf(seg) => {
            let _ = writeln!(
                out,
                "{pad}segment {} {} rate={}",
                seg.name,
                seg.model.kind_name(),
                format_rate(seg.model.rate())
            );
        }
        Block::Series(children) | Block::Parallel(children) => {
            let kw = if matches!(block, Block::Series(_)) { "series" } else { "parallel" };
            let _ = writeln!(out, "{pad}{kw} {{");
            for child in children {
                print_block(out, child, indent + 1);
            }
            let _ = writeln!(out, "{pad}}}");
        }
    }
}

/// Canonical text for a document: one `segment` line per leaf, two-space
/// indentation per nesting level.
pub fn print_spec(doc: &SpecDocument) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "pipeline {}", quote(doc.model.name()));
    print_block(&mut out, doc.model.root(), 0);
    out
}
