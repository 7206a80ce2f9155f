use std::fmt;
use std::path::Path;

use rbd_core::check::{run_checks, CheckConfig, CheckReport};
use rbd_core::dsl::{parse_spec, ParseError, SpecDocument};
use rbd_core::eval::{evaluate, reliability_curve, uniform_grid};
use rbd_core::montecarlo::estimate_system_reliability;
use rbd_core::{McConfig, TimeValue};
use serde::Serialize;

use crate::Format;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug)]
pub enum CliError {
    Io { path: String, source: std::io::Error },
    Spec { path: String, errors: Vec<ParseError> },
    Usage(String),
    /// Carries the report that was produced.
    PropertyFailure(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Spec { .. } | CliError::Usage(_) => 2,
            CliError::PropertyFailure(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io { path, source } => write!(f, "rbd: cannot read {path}: {source}"),
            CliError::Spec { path, errors } => {
                for (i, e) in errors.iter().enumerate() {
                    if i > 0 {
                        writeln!(f)?;
                    }
                    write!(f, "{path}:{e}")?;
                }
                Ok(())
            }
            CliError::Usage(msg) => write!(f, "rbd: {msg}"),
            CliError::PropertyFailure(_) => f.write_str("rbd: property check failed"),
        }
    }
}

impl From<rbd_core::Error> for CliError {
    fn from(e: rbd_core::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

fn load(path: &Path) -> Result<SpecDocument, CliError> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: shown.clone(),
        source,
    })?;
    parse_spec(&text)
        .map(|doc| doc.with_source_path(shown.clone()))
        .map_err(|errors| CliError::Spec {
            path: shown,
            errors,
        })
}

fn json_line<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string(value).map_err(|e| CliError::Usage(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn csv_row(t: f64, r: f64) -> String {
    format!("{t},{r:?}\n")
}

#[derive(Serialize)]
struct EvalReport<'a> {
    schema: u32,
    model: &'a str,
    t: f64,
    reliability: f64,
}

pub fn eval(spec: &Path, time: f64, format: Format) -> Result<String, CliError> {
    let doc = load(spec)?;
    let t = TimeValue::new(time)?;
    let r = evaluate(&doc.model, t).get();
    match format {
        Format::Json => json_line(&EvalReport {
            schema: SCHEMA_VERSION,
            model: doc.model.name(),
            t: time,
            reliability: r,
        }),
        Format::Csv => Ok(format!("t,reliability\n{}", csv_row(time, r))),
    }
}

#[derive(Serialize)]
struct CurvePoint {
    t: f64,
    reliability: f64,
}

#[derive(Serialize)]
struct CurveReport<'a> {
    schema: u32,
    model: &'a str,
    source: rbd_core::CurveSource,
    points: Vec<CurvePoint>,
}

pub fn curve(spec: &Path, t_max: f64, steps: usize, format: Format) -> Result<String, CliError> {
    let doc = load(spec)?;
    let curve = reliability_curve(&doc.model, TimeValue::new(t_max)?, steps)?;
    match format {
        Format::Csv => {
            let mut out = String::from("t,reliability\n");
            for (t, r) in curve.points() {
                out.push_str(&csv_row(t, r));
            }
            Ok(out)
        }
        Format::Json => json_line(&CurveReport {
            schema: SCHEMA_VERSION,
            model: doc.model.name(),
            source: curve.source(),
            points: curve
                .points()
                .map(|(t, reliability)| CurvePoint { t, reliability })
                .collect(),
        }),
    }
}

#[derive(Serialize)]
struct SimulateReport<'a> {
    schema: u32,
    model: &'a str,
    t: f64,
    seed: u64,
    samples: u64,
    chunk_size: u64,
    p_hat: f64,
    std_err: f64,
    closed_form: f64,
    abs_diff: f64,
    /// `abs_diff / std_err`; null when undefined.
    z_score: Option<f64>,
}

pub fn simulate(
    spec: &Path,
    time: f64,
    samples: u64,
    seed: u64,
    chunk_size: u64,
) -> Result<String, CliError> {
    let doc = load(spec)?;
    let t = TimeValue::new(time)?;
    let cfg = McConfig::with_chunk_size(seed, samples, chunk_size)?;
    let est = estimate_system_reliability(&doc.model, t, &cfg)?;
    let exact = evaluate(&doc.model, t).get();
    let z = est.z_score(exact);
    json_line(&SimulateReport {
        schema: SCHEMA_VERSION,
        model: doc.model.name(),
        t: time,
        seed,
        samples,
        chunk_size,
        p_hat: est.p_hat,
        std_err: est.std_err,
        closed_form: exact,
        abs_diff: (est.p_hat - exact).abs(),
        z_score: z.is_finite().then_some(z),
    })
}

#[derive(Serialize)]
struct CheckOutput<'a> {
    schema: u32,
    model: &'a str,
    passed: bool,
    t_max: f64,
    steps: usize,
    epsilon: f64,
    seed: u64,
    samples: u64,
    #[serde(flatten)]
    report: &'a CheckReport,
}

pub fn check(
    spec: &Path,
    t_max: f64,
    steps: usize,
    samples: u64,
    seed: u64,
    epsilon: f64,
) -> Result<String, CliError> {
    let doc = load(spec)?;
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(CliError::Usage(format!("--epsilon must lie in (0, 1), got {epsilon}")));
    }
    let cfg = CheckConfig {
        grid: uniform_grid(TimeValue::new(t_max)?, steps)?,
        epsilon,
        mc: McConfig::new(seed, samples)?,
        independence_events: 8,
    };
    let report = run_checks(&doc.model, &cfg)?;
    let out = json_line(&CheckOutput {
        schema: SCHEMA_VERSION,
        model: doc.model.name(),
        passed: report.passed(),
        t_max,
        steps,
        epsilon,
        seed,
        samples,
        report: &report,
    })?;
    if report.passed() {
        Ok(out)
    } else {
        Err(CliError::PropertyFailure(out))
    }
}
