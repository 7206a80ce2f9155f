//! Domain types for reliability block diagrams.
//!
//! A model is a tree of [`Block`]s: series and parallel groups over leaf
//! [`Segment`]s, each carrying its own failure-time law. Raw trees can be
//! built freely; [`RbdModel::new`] is the only way to obtain a validated
//! model, and every evaluation entry point takes the validated form.

use std::collections::HashSet;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

/// Deepest nesting accepted for a model tree. The root counts as depth 1.
pub const MAX_DEPTH: usize = 32;
/// Largest number of leaf segments accepted in one model.
pub const MAX_LEAVES: usize = 100_000;

/// Failure-time law of a single component.
#[derive(Debug, Clone, Copy, PartialEq)]
#[non_exhaustive]
pub enum FailureModel {
    /// `F(t) = 1 - exp(-rate * t)` for `t >= 0`.
    Exponential { rate: f64 },
}

impl FailureModel {
    pub fn exponential(rate: f64) -> Result<Self> {
        let model = FailureModel::Exponential { rate };
        model.check()?;
        Ok(model)
    }

    pub fn rate(&self) -> f64 {
        match *self {
            FailureModel::Exponential { rate } => rate,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            FailureModel::Exponential { .. } => "exponential",
        }
    }

    /// Rejects non-finite and non-positive rates.
    pub fn check(&self) -> Result<()> {
        let rate = self.rate();
        if rate.is_finite() && rate > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidRate(rate))
        }
    }
}

/// A named pipeline segment.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub name: String,
    pub model: FailureModel,
}

impl Segment {
    pub fn new(name: impl Into<String>, model: FailureModel) -> Self {
        Segment {
            name: name.into(),
            model,
        }
    }

    pub fn exponential(name: impl Into<String>, rate: f64) -> Self {
        Segment::new(name, FailureModel::Exponential { rate })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Block {
    Series(Vec<Block>),
    Parallel(Vec<Block>),
    Leaf(Segment),
}

impl Block {
    pub fn leaf(name: impl Into<String>, rate: f64) -> Self {
        Block::Leaf(Segment::exponential(name, rate))
    }

    pub fn series_of(segments: impl IntoIterator<Item = Segment>) -> Self {
        Block::Series(segments.into_iter().map(Block::Leaf).collect())
    }

    /// Leaf segments in depth-first, left-to-right order.
    pub fn leaves(&self) -> Vec<&Segment> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(block) = stack.pop() {
            match block {
                Block::Leaf(seg) => out.push(seg),
                Block::Series(children) | Block::Parallel(children) => {
                    stack.extend(children.iter().rev())
                }
            }
        }
        out
    }
}

/// Position of a node in a model tree, as child indices from the root.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize)]
pub struct NodePath(pub Vec<usize>);

impl NodePath {
    pub fn root() -> Self {
        NodePath(Vec::new())
    }

    pub fn child(&self, index: usize) -> Self {
        let mut path = self.0.clone();
        path.push(index);
        NodePath(path)
    }

    pub fn depth(&self) -> usize {
        self.0.len() + 1
    }
}

impl fmt::Display for NodePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("root")?;
        for i in &self.0 {
            write!(f, "/{i}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum IssueKind {
    NonPositiveRate(f64),
    NonFiniteRate(f64),
    EmptyName,
    BadName(String),
    DuplicateName(String),
    EmptyGroup,
    TooDeep,
    TooManyLeaves(usize),
}

impl fmt::Display for IssueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IssueKind::NonPositiveRate(r) => write!(f, "rate must be > 0, got {r}"),
            IssueKind::NonFiniteRate(r) => write!(f, "rate must be finite, got {r}"),
            IssueKind::EmptyName => f.write_str("segment name is empty"),
            IssueKind::BadName(n) => write!(f, "segment name {n:?} is not an identifier"),
            IssueKind::DuplicateName(n) => write!(f, "duplicate segment name {n:?}"),
            IssueKind::EmptyGroup => f.write_str("series/parallel group has no children"),
            IssueKind::TooDeep => write!(f, "nesting deeper than {MAX_DEPTH}"),
            IssueKind::TooManyLeaves(n) => {
                write!(f, "{n} segments exceed the limit of {MAX_LEAVES}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationIssue {
    pub path: NodePath,
    pub kind: IssueKind,
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.kind)
    }
}

/// Characters allowed in segment names, so that names survive a trip
/// through the spec text format.
pub fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

/// Checks every structural and numeric invariant of a model tree.
///
/// Returns one issue per violation, each located by its [`NodePath`].
/// Subtrees nested deeper than [`MAX_DEPTH`] are reported once and not
/// descended into.
pub fn validate_model(root: &Block) -> Vec<ValidationIssue> {
    let mut walker = Validator::default();
    walker.visit(root, NodePath::root());
    if walker.leaves > MAX_LEAVES {
        walker.issues.push(ValidationIssue {
            path: NodePath::root(),
            kind: IssueKind::TooManyLeaves(walker.leaves),
        });
    }
    walker.issues
}

/// Validates `children` as if they were the members of one group at the
/// root: names must be unique across all of them.
pub(crate) fn validate_group(children: &[Block]) -> Vec<ValidationIssue> {
    let mut walker = Validator::default();
    if children.is_empty() {
        walker.report(&NodePath::root(), IssueKind::EmptyGroup);
    }
    for (i, child) in children.iter().enumerate() {
        walker.visit(child, NodePath::root().child(i));
    }
    if walker.leaves > MAX_LEAVES {
        walker.issues.push(ValidationIssue {
            path: NodePath::root(),
            kind: IssueKind::TooManyLeaves(walker.leaves),
        });
    }
    walker.issues
}

#[derive(Default)]
struct Validator<'a> {
    issues: Vec<ValidationIssue>,
    names: HashSet<&'a str>,
    leaves: usize,
}

impl<'a> Validator<'a> {
    fn report(&mut self, path: &NodePath, kind: IssueKind) {
        self.issues.push(ValidationIssue {
            path: path.clone(),
            kind,
        });
    }

    fn visit(&mut self, block: &'a Block, path: NodePath) {
        if path.depth() > MAX_DEPTH {
            self.report(&path, IssueKind::TooDeep);
            return;
        }
        match block {
            Block::Leaf(seg) => {
                self.leaves += 1;
                let rate = seg.model.rate();
                if !rate.is_finite() {
                    self.report(&path, IssueKind::NonFiniteRate(rate));
                } else if rate <= 0.0 {
                    self.report(&path, IssueKind::NonPositiveRate(rate));
                }
                if seg.name.is_empty() {
                    self.report(&path, IssueKind::EmptyName);
                } else if !is_identifier(&seg.name) {
                    self.report(&path, IssueKind::BadName(seg.name.clone()));
                } else if !self.names.insert(&seg.name) {
                    self.report(&path, IssueKind::DuplicateName(seg.name.clone()));
                }
            }
            Block::Series(children) | Block::Parallel(children) => {
                if children.is_empty() {
                    self.report(&path, IssueKind::EmptyGroup);
                }
                for (i, child) in children.iter().enumerate() {
                    self.visit(child, path.child(i));
                }
            }
        }
    }
}

/// A validated reliability block diagram.
#[derive(Debug, Clone, PartialEq)]
pub struct RbdModel {
    name: String,
    root: Block,
}

impl RbdModel {
    pub fn new(name: impl Into<String>, root: Block) -> Result<Self> {
        let issues = validate_model(&root);
        if !issues.is_empty() {
            return Err(Error::InvalidModel(issues));
        }
        Ok(RbdModel {
            name: name.into(),
            root,
        })
    }

    /// Series model over the given segments.
    pub fn series(name: impl Into<String>, segments: Vec<Segment>) -> Result<Self> {
        RbdModel::new(name, Block::series_of(segments))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn root(&self) -> &Block {
        &self.root
    }

    pub fn leaves(&self) -> Vec<&Segment> {
        self.root.leaves()
    }
}

/// A point in time, finite and non-negative.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct TimeValue(f64);

impl TimeValue {
    pub const ZERO: TimeValue = TimeValue(0.0);

    pub fn new(t: f64) -> Result<Self> {
        if t.is_finite() && t >= 0.0 {
            // normalise -0.0
            Ok(TimeValue(t + 0.0))
        } else {
            Err(Error::InvalidTime(t))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// A probability of survival, in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct ReliabilityValue(f64);

impl ReliabilityValue {
    pub const ONE: ReliabilityValue = ReliabilityValue(1.0);

    pub fn new(r: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&r) {
            Ok(ReliabilityValue(r))
        } else {
            Err(Error::InvalidReliability(r))
        }
    }

    /// Clamps rounding spill-over into `[0, 1]`; NaN maps to 0.
    pub(crate) fn saturating(r: f64) -> Self {
        if r.is_nan() {
            ReliabilityValue(0.0)
        } else {
            ReliabilityValue(r.clamp(0.0, 1.0))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveSource {
    ClosedForm,
    MonteCarlo,
}

/// Reliability sampled over a time grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReliabilityCurve {
    times: Vec<TimeValue>,
    values: Vec<ReliabilityValue>,
    source: CurveSource,
}

impl ReliabilityCurve {
    /// Rejects mismatched lengths, a grid that is not strictly increasing,
    /// and closed-form curves that ever increase.
    pub fn new(
        times: Vec<TimeValue>,
        values: Vec<ReliabilityValue>,
        source: CurveSource,
    ) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::Usage(format!(
                "curve has {} times but {} values",
                times.len(),
                values.len()
            )));
        }
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Usage("curve times must be strictly increasing".into()));
        }
        if source == CurveSource::ClosedForm && values.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::Usage(
                "closed-form curve must be non-increasing".into(),
            ));
        }
        Ok(ReliabilityCurve {
            times,
            values,
            source,
        })
    }

    pub fn times(&self) -> &[TimeValue] {
        &self.times
    }

    pub fn values(&self) -> &[ReliabilityValue] {
        &self.values
    }

    pub fn source(&self) -> CurveSource {
        self.source
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times
            .iter()
            .zip(&self.values)
            .map(|(t, r)| (t.get(), r.get()))
    }
}
