//! Closed-form evaluation of block diagrams.
//!
//! All products are accumulated as sums of log-reliabilities in input
//! order. A parallel group combines its children's log-unreliabilities
//! `ln(1 - R)` the same way, so neither long series nor deep redundancy
//! underflows before the final `exp`.

use rayon::prelude::*;

use crate::distributions::{log_reliability, reliability};
use crate::error::{Error, Result};
use crate::model::{
    validate_group, Block, CurveSource, FailureModel, RbdModel, ReliabilityCurve,
    ReliabilityValue, Segment, TimeValue,
};

/// `ln(1 - exp(x))` for `x <= 0`.
fn ln_one_minus_exp(x: f64) -> f64 {
    if x > -std::f64::consts::LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

fn check_segments(segments: &[Segment]) -> Result<()> {
    if segments.is_empty() {
        return Err(Error::Empty("segment list"));
    }
    segments.iter().try_for_each(|s| s.model.check())
}

/// Product of segment reliabilities, computed as `exp(sum of ln R_i)`.
pub fn series_reliability(segments: &[Segment], t: TimeValue) -> Result<ReliabilityValue> {
    check_segments(segments)?;
    let mut log_r = 0.0;
    for seg in segments {
        log_r += log_reliability(&seg.model, t)?;
    }
    Ok(ReliabilityValue::saturating(log_r.exp()))
}

/// Left fold of the per-segment reliabilities, multiplied directly.
///
/// Independent of the log-space route used by [`series_reliability`]; the
/// two are compared by the property checks. Underflows for very long or
/// very unreliable series.
pub fn series_reliability_direct(segments: &[Segment], t: TimeValue) -> Result<ReliabilityValue> {
    check_segments(segments)?;
    let mut product = 1.0;
    for seg in segments {
        product *= reliability(&seg.model, t)?.get();
    }
    Ok(ReliabilityValue::saturating(product))
}

/// Reliability of the least reliable segment, an upper bound on the
/// series reliability.
pub fn series_min_bound(segments: &[Segment], t: TimeValue) -> Result<ReliabilityValue> {
    check_segments(segments)?;
    let mut min = 1.0f64;
    for seg in segments {
        min = min.min(reliability(&seg.model, t)?.get());
    }
    Ok(ReliabilityValue::saturating(min))
}

/// `exp(-(sum of rates) * t)`: a series of exponential segments.
pub fn pipeline_reliability_closed_form(rates: &[f64], t: TimeValue) -> Result<ReliabilityValue> {
    if rates.is_empty() {
        return Err(Error::Empty("rate list"));
    }
    let mut total = 0.0;
    for &rate in rates {
        FailureModel::exponential(rate)?;
        total += rate;
    }
    Ok(ReliabilityValue::saturating((-total * t.get()).exp()))
}

/// `1 - prod(1 - R_i)` over independent blocks.
pub fn parallel_reliability(blocks: &[Block], t: TimeValue) -> Result<ReliabilityValue> {
    if blocks.is_empty() {
        return Err(Error::Empty("block list"));
    }
    let issues = validate_group(blocks);
    if !issues.is_empty() {
        return Err(Error::InvalidModel(issues));
    }
    Ok(ReliabilityValue::saturating(parallel_log_reliability(blocks, t).exp()))
}

fn parallel_log_reliability(blocks: &[Block], t: TimeValue) -> f64 {
    let log_q: f64 = blocks
        .iter()
        .map(|b| ln_one_minus_exp(block_log_reliability(b, t)))
        .sum();
    ln_one_minus_exp(log_q)
}

/// `ln R(t)` of a block already known to be valid.
pub(crate) fn block_log_reliability(block: &Block, t: TimeValue) -> f64 {
    match block {
        Block::Leaf(seg) => -seg.model.rate() * t.get(),
        Block::Series(children) => children.iter().map(|c| block_log_reliability(c, t)).sum(),
        Block::Parallel(children) => parallel_log_reliability(children, t),
    }
}

/// System reliability at `t`.
pub fn evaluate(model: &RbdModel, t: TimeValue) -> ReliabilityValue {
    ReliabilityValue::saturating(block_log_reliability(model.root(), t).exp())
}

/// Uniform time grid `{0, t_max/steps, ..., t_max}`.
pub fn uniform_grid(t_max: TimeValue, steps: usize) -> Result<Vec<TimeValue>> {
    if steps == 0 {
        return Err(Error::Usage("steps must be >= 1".into()));
    }
    if t_max.get() <= 0.0 {
        return Err(Error::Usage("t_max must be > 0".into()));
    }
    let grid: Vec<_> = (0..=steps)
        .map(|i| {
            if i == steps {
                t_max
            } else {
                TimeValue::new(t_max.get() * i as f64 / steps as f64).expect("finite grid point")
            }
        })
        .collect();
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Usage(format!(
            "t_max {} is too small for {steps} distinct steps",
            t_max.get()
        )));
    }
    Ok(grid)
}

/// Closed-form reliability over a uniform grid. Grid points are evaluated
/// in parallel.
pub fn reliability_curve(
    model: &RbdModel,
    t_max: TimeValue,
    steps: usize,
) -> Result<ReliabilityCurve> {
    let times = uniform_grid(t_max, steps)?;
    let values = times.par_iter().map(|&t| evaluate(model, t)).collect();
    ReliabilityCurve::new(times, values, CurveSource::ClosedForm)
}
