//! Full property suite for one model: the reliability axioms, the series
//! product rule and its min bound, the exponential closed form, agreement
//! with the Monte Carlo oracle, and sampled mutual independence.

use serde::Serialize;

use crate::distributions::check_reliability_axioms;
use crate::error::{Error, Result};
use crate::eval::{
    block_log_reliability, evaluate, pipeline_reliability_closed_form, series_min_bound, series_reliability,
    series_reliability_direct,
};
use crate::model::{Block, RbdModel, Segment, TimeValue};
use crate::montecarlo::{
    check_mutual_independence, estimate_at_times, sample_indicators, IndependenceReport, McConfig,
    MIN_INDEPENDENCE_SAMPLES,
};

/// Relative tolerance for algebraic identities between two evaluation routes.
pub const IDENTITY_RTOL: f64 = 1e-12;
/// Acceptance band for Monte Carlo agreement, in standard errors.
pub const ORACLE_SIGMAS: f64 = 4.0;
/// Acceptance band for the independence sweep, in standard errors.
pub const INDEPENDENCE_SIGMAS: f64 = 5.0;
/// Monte Carlo points are compared only when both the expected survivor
/// and failure counts reach this value.
pub const MIN_EXPECTED_COUNT: f64 = 25.0;

#[derive(Debug, Clone)]
pub struct CheckConfig {
    /// Ascending, starting at 0.
    pub grid: Vec<TimeValue>,
    pub epsilon: f64,
    pub mc: McConfig,
    /// Most segments used as events in the independence sweep.
    pub independence_events: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyResult {
    pub name: &'static str,
    pub passed: bool,
    pub checked: usize,
    pub failures: Vec<String>,
}

impl PropertyResult {
    fn new(name: &'static str) -> Self {
        PropertyResult {
            name,
            passed: true,
            checked: 0,
            failures: Vec::new(),
        }
    }

    fn record(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.fail(describe());
        }
    }

    fn fail(&mut self, message: String) {
        self.passed = false;
        if self.failures.len() < 20 {
            self.failures.push(message);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OraclePoint {
    pub t: f64,
    pub closed_form: f64,
    pub p_hat: f64,
    pub std_err: f64,
    pub z: f64,
    /// False when the expected counts are too small for a normal band.
    pub compared: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub properties: Vec<PropertyResult>,
    pub oracle: Vec<OraclePoint>,
    pub independence: Option<IndependenceReport>,
    /// Names of the segments used as independence events.
    pub independence_segments: Vec<String>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.properties.iter().all(|p| p.passed)
    }
}

fn rel_diff(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// Evenly spaced picks of at most `k` items, always including the first.
fn spread<T: Clone>(items: &[T], k: usize) -> Vec<T> {
    if items.len() <= k {
        return items.to_vec();
    }
    (0..k).map(|i| items[i * items.len() / k].clone()).collect()
}

pub fn run_checks(model: &RbdModel, cfg: &CheckConfig) -> Result<CheckReport> {
    let grid = &cfg.grid;
    if grid.is_empty() || grid[0].get() != 0.0 || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Usage("check grid must start at 0 and increase strictly".into()));
    }
    cfg.mc.check()?;
    let segments: Vec<Segment> = model.leaves().into_iter().cloned().collect();
    let rates: Vec<f64> = segments.iter().map(|s| s.model.rate()).collect();

    let mut max_rel = PropertyResult::new("max_reliability_at_zero");
    let mut monotone = PropertyResult::new("reliability_non_increasing");
    let mut decays = PropertyResult::new("reliability_tends_to_zero");
    let mut product = PropertyResult::new("series_product_rule");
    let mut min_bound = PropertyResult::new("series_min_bound");
    let mut closed_form = PropertyResult::new("pipeline_closed_form");
    let mut oracle_prop = PropertyResult::new("monte_carlo_agreement");
    let mut indep_prop = PropertyResult::new("mutual_independence");

    let r0 = evaluate(model, TimeValue::ZERO).get();
    max_rel.record(r0 == 1.0, || format!("system R(0) = {r0}"));
    let values: Vec<f64> = grid.iter().map(|&t| evaluate(model, t).get()).collect();
    for (w, ts) in values.windows(2).zip(grid.windows(2)) {
        monotone.record(w[1] <= w[0], || {
            format!("system R({}) = {} > R({}) = {}", ts[1].get(), w[1], ts[0].get(), w[0])
        });
    }

    for seg in &segments {
        let threshold = (1.0 / cfg.epsilon).ln() / seg.model.rate();
        let mut seg_grid = grid.clone();
        for probe in [2.0 * threshold, 10.0 * threshold] {
            if let Ok(t) = TimeValue::new(probe) {
                seg_grid.push(t);
            }
        }
        seg_grid.sort_by(|a, b| a.get().total_cmp(&b.get()));
        seg_grid.dedup();
        let axioms = check_reliability_axioms(&seg.model, &seg_grid, cfg.epsilon)?;
        max_rel.record(axioms.max_at_zero, || format!("segment {}: {:?}", seg.name, axioms.failures));
        monotone.record(axioms.monotone, || format!("segment {}: {:?}", seg.name, axioms.failures));
        decays.checked += axioms.decay_points_checked;
        if !axioms.decays {
            decays.fail(format!("segment {}: {:?}", seg.name, axioms.failures));
        }
    }

    let series_children: Option<&Vec<Block>> = match model.root() {
        Block::Series(children) => Some(children),
        _ => None,
    };
    for &t in grid {
        let log_space = series_reliability(&segments, t)?.get();
        let direct = series_reliability_direct(&segments, t)?.get();
        if log_space > 1e-290 {
            let d = rel_diff(log_space, direct);
            product.record(d <= IDENTITY_RTOL, || {
                format!("t={}: log-space {log_space} vs direct {direct} (rel {d:e})", t.get())
            });
        }
        let bound = series_min_bound(&segments, t)?.get();
        min_bound.record(log_space <= bound, || {
            format!("t={}: series {log_space} > min {bound}", t.get())
        });
        let cf = pipeline_reliability_closed_form(&rates, t)?.get();
        if cf > 1e-290 {
            let d = rel_diff(cf, log_space);
            closed_form.record(d <= IDENTITY_RTOL, || {
                format!("t={}: closed form {cf} vs series {log_space} (rel {d:e})", t.get())
            });
        }
        if let Some(children) = series_children {
            // the tree evaluation of a series root must obey the same rules
            let whole = evaluate(model, t).get();
            let weakest = children
                .iter()
                .map(|c| block_log_reliability(c, t).exp())
                .fold(1.0f64, f64::min);
            min_bound.record(whole <= weakest, || {
                format!("t={}: system {whole} > weakest block {weakest}", t.get())
            });
            if children.iter().all(|c| matches!(c, Block::Leaf(_))) && whole > 1e-290 {
                let d = rel_diff(whole, direct);
                product.record(d <= IDENTITY_RTOL, || {
                    format!("t={}: tree {whole} vs direct {direct} (rel {d:e})", t.get())
                });
            }
        }
    }

    let estimates = estimate_at_times(model, grid, &cfg.mc)?;
    let n = cfg.mc.samples as f64;
    let mut oracle = Vec::with_capacity(grid.len());
    for ((&t, est), &exact) in grid.iter().zip(&estimates).zip(&values) {
        let z = est.z_score(exact);
        let point = if exact == 1.0 {
            // no failures are possible, so the estimate must be exact
            oracle_prop.record(est.p_hat == 1.0, || format!("t={}: p_hat {} != 1", t.get(), est.p_hat));
            true
        } else if n * exact >= MIN_EXPECTED_COUNT && n * (1.0 - exact) >= MIN_EXPECTED_COUNT {
            oracle_prop.record(z <= ORACLE_SIGMAS, || {
                format!("t={}: p_hat {} vs {exact}, z = {z:.2}", t.get(), est.p_hat)
            });
            true
        } else {
            false
        };
        oracle.push(OraclePoint {
            t: t.get(),
            closed_form: exact,
            p_hat: est.p_hat,
            std_err: est.std_err,
            z,
            compared: point,
        });
    }

    let events = spread(&segments, cfg.independence_events.min(20));
    let independence_segments: Vec<String> = events.iter().map(|s| s.name.clone()).collect();
    let independence = if events.len() >= 2 {
        let t = grid[grid.len() / 2];
        let samples = cfg.mc.samples.max(MIN_INDEPENDENCE_SAMPLES as u64);
        let icfg = McConfig::with_chunk_size(cfg.mc.seed ^ 0x5eed_1d1d, samples, cfg.mc.chunk_size)?;
        let matrix = sample_indicators(&events, t, &icfg)?;
        let report = check_mutual_independence(&matrix, INDEPENDENCE_SIGMAS)?;
        indep_prop.checked = report.subsets_checked;
        if !report.passed() {
            indep_prop.passed = false;
            indep_prop.failures = report
                .failures
                .iter()
                .take(20)
                .map(|f| format!("events {:?}: joint {} vs product {} (z = {:.2})", f.events, f.joint, f.product, f.z))
                .collect();
        }
        Some(report)
    } else {
        None
    };

    Ok(CheckReport {
        properties: vec![
            max_rel, monotone, decays, product, min_bound, closed_form, oracle_prop, indep_prop,
        ],
        oracle,
        independence,
        independence_segments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::uniform_grid;

    fn case_study() -> RbdModel {
        let mut segs = Vec::new();
        for (prefix, n, rate) in [("a", 30, 0.0025), ("b", 20, 0.0023), ("c", 10, 0.015)] {
            for i in 1..=n {
                segs.push(Segment::exponential(format!("{prefix}_{i}"), rate));
            }
        }
        RbdModel::series("case-study", segs).unwrap()
    }

    #[test]
    fn case_study_passes_everything() {
        let cfg = CheckConfig {
            grid: uniform_grid(TimeValue::new(50.0).unwrap(), 50).unwrap(),
            epsilon: 1e-6,
            mc: McConfig::new(0, 100_000).unwrap(),
            independence_events: 8,
        };
        let report = run_checks(&case_study(), &cfg).unwrap();
        for p in &report.properties {
            assert!(p.passed, "{}: {:?}", p.name, p.failures);
            assert!(p.checked > 0, "{} checked nothing", p.name);
        }
        assert_eq!(report.independence_segments.len(), 8);
        assert_eq!(report.independence.as_ref().unwrap().subsets_checked, 247);
    }

    #[test]
    fn parallel_root_skips_tree_series_checks() {
        let model = RbdModel::new(
            "p",
            Block::Parallel(vec![Block::leaf("a", 1.0), Block::leaf("b", 0.5)]),
        )
        .unwrap();
        let cfg = CheckConfig {
            grid: uniform_grid(TimeValue::new(3.0).unwrap(), 6).unwrap(),
            epsilon: 1e-3,
            mc: McConfig::new(1, 20_000).unwrap(),
            independence_events: 8,
        };
        let report = run_checks(&model, &cfg).unwrap();
        assert!(report.passed(), "{report:?}");
    }

    #[test]
    fn spread_picks_evenly() {
        assert_eq!(spread(&[1, 2, 3], 8), vec![1, 2, 3]);
        assert_eq!(spread(&(0..60).collect::<Vec<_>>(), 4), vec![0, 15, 30, 45]);
    }

    #[test]
    fn rejects_bad_grid() {
        let cfg = CheckConfig {
            grid: vec![TimeValue::new(1.0).unwrap()],
            epsilon: 1e-3,
            mc: McConfig::new(1, 100).unwrap(),
            independence_events: 2,
        };
        assert!(run_checks(&case_study(), &cfg).is_err());
    }
}
