//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rbd_core::distributions::check_reliability_axioms;
use rbd_core::dsl::{parse_spec, print_spec, SpecDocument};
use rbd_core::eval::{
    evaluate, pipeline_reliability_closed_form, reliability_curve, series_min_bound,
    series_reliability, series_reliability_direct,
};
use rbd_core::fuzz::{log_uniform, mutate_text, random_model, random_segments, random_text, FuzzShape};
use rbd_core::montecarlo::{check_mutual_independence, estimate_at_times, sample_indicators, IndicatorMatrix};
use rbd_core::{FailureModel, McConfig, RbdModel, Segment, TimeValue};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn t(x: f64) -> TimeValue {
    TimeValue::new(x).unwrap()
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn rel_err(actual: f64, expected: f64) -> f64 {
    if actual == expected {
        0.0
    } else {
        (actual - expected).abs() / expected.abs()
    }
}

/// `exp(-x)` from the positive-term Taylor series with compensated summation,
/// independent of the platform exponential.
fn exp_neg_series(x: f64) -> f64 {
    assert!((0.0..700.0).contains(&x));
    let mut halvings = 0;
    let mut y = x;
    while y > 0.5 {
        y /= 2.0;
        halvings += 1;
    }
    let (mut term, mut sum, mut comp) = (1.0f64, 1.0f64, 0.0f64);
    for k in 1..60 {
        term *= y / k as f64;
        let v = term - comp;
        let s = sum + v;
        comp = (s - sum) - v;
        sum = s;
        if term < 1e-40 {
            break;
        }
    }
    for _ in 0..halvings {
        sum *= sum;
    }
    1.0 / sum
}

fn rbd_bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_rbd"));
    c.env_remove("RBD_THREADS");
    c
}

fn case_study_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../specs/case_study.rbd")
}

fn case_study_reproduction() -> Outcome {
    let spec = case_study_path();
    let mut worst = 0.0f64;
    for time in [0.0, 1.0, 10.0, 50.0] {
        let out = rbd_bin()
            .args(["eval", "--spec", spec.to_str().unwrap(), "--time", &time.to_string()])
            .output()
            .unwrap();
        if !out.status.success() {
            return outcome(false, format!("eval exited with {:?}", out.status.code()));
        }
        let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        let r = v["reliability"].as_f64().unwrap();
        let exponent = (30.0 * 0.0025 + 20.0 * 0.0023 + 10.0 * 0.015) * time;
        worst = worst.max(rel_err(r, exp_neg_series(exponent)));
    }
    outcome(worst <= 1e-12, format!("max rel err {worst:.2e} (tol 1e-12)"))
}

fn max_at_zero() -> Outcome {
    let mut r = rng(1);
    let shape = FuzzShape::default();
    let bad = (0..1000)
        .filter(|_| evaluate(&random_model(&mut r, &shape), TimeValue::ZERO).get() != 1.0)
        .count();
    outcome(bad == 0, format!("{bad}/1000 models with R(0) != 1"))
}

fn non_increasing() -> Outcome {
    let mut r = rng(2);
    let shape = FuzzShape::default();
    let mut bad = 0;
    for _ in 0..1000 {
        let model = random_model(&mut r, &shape);
        let t_max = log_uniform(&mut r, 0.1, 1e4);
        // 99 steps give a 100-point grid
        let curve = reliability_curve(&model, t(t_max), 99).unwrap();
        if curve.values().windows(2).any(|w| w[1] > w[0]) {
            bad += 1;
        }
    }
    outcome(bad == 0, format!("{bad}/1000 curves increase somewhere"))
}

fn decays_to_zero() -> Outcome {
    let mut r = rng(3);
    let mut points = 0;
    let mut bad = 0;
    for eps in [1e-3f64, 1e-6, 1e-9] {
        for _ in 0..1000 {
            let rate = log_uniform(&mut r, 1e-6, 1e3);
            let threshold = (1.0 / eps).ln() / rate;
            let mut grid = vec![0.0];
            let mut stretches: Vec<f64> = (0..20).map(|_| log_uniform(&mut r, 1e-12, 1e3)).collect();
            stretches.sort_by(f64::total_cmp);
            grid.extend(stretches.iter().map(|s| threshold * (1.0 + s)));
            grid.dedup();
            let grid: Vec<TimeValue> = grid.into_iter().map(t).collect();
            let model = FailureModel::exponential(rate).unwrap();
            let report = check_reliability_axioms(&model, &grid, eps).unwrap();
            points += report.decay_points_checked;
            if !report.decays {
                bad += 1;
            }
        }
    }
    outcome(bad == 0, format!("{bad}/3000 models violate R < eps; {points} points beyond threshold"))
}

fn series_routes_agree() -> Outcome {
    let mut r = rng(4);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let segs = random_segments(&mut r, 100, 1e-4, 1.0);
        let rates: Vec<f64> = segs.iter().map(|s| s.model.rate()).collect();
        let total: f64 = rates.iter().sum();
        for _ in 0..5 {
            // total exponent up to 30, where R is still above 1e-14
            let tv = t(r.random_range(0.0..=30.0) / total);
            let log_space = series_reliability(&segs, tv).unwrap().get();
            let direct = series_reliability_direct(&segs, tv).unwrap().get();
            let closed = pipeline_reliability_closed_form(&rates, tv).unwrap().get();
            worst = worst.max(rel_err(direct, log_space)).max(rel_err(closed, log_space));
        }
    }
    outcome(worst <= 1e-12, format!("max rel disagreement {worst:.2e} (tol 1e-12)"))
}

fn min_bound() -> Outcome {
    let mut r = rng(5);
    let mut pairs = 0;
    let mut bad = 0;
    for _ in 0..1000 {
        let segs = random_segments(&mut r, 200, 1e-6, 10.0);
        for _ in 0..10 {
            let tv = t(log_uniform(&mut r, 1e-6, 1e5));
            pairs += 1;
            if series_reliability(&segs, tv).unwrap().get() > series_min_bound(&segs, tv).unwrap().get() {
                bad += 1;
            }
        }
    }
    outcome(bad == 0, format!("{bad}/{pairs} model/time pairs exceed the weakest segment"))
}

/// Time at which the closed form equals `target`, by bisection.
fn time_for(model: &RbdModel, target: f64) -> f64 {
    let mut hi = 1.0;
    while evaluate(model, t(hi)).get() > target {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if evaluate(model, t(mid)).get() > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

fn monte_carlo_oracle() -> Outcome {
    let mut r = rng(6);
    let shape = FuzzShape::default();
    let mut within = 0;
    let mut worst = 0.0f64;
    for i in 0..20u64 {
        let model = random_model(&mut r, &shape);
        let times: Vec<TimeValue> = [0.8, 0.5, 0.2].iter().map(|&p| t(time_for(&model, p))).collect();
        let cfg = McConfig::new(1000 + i, 1_000_000).unwrap();
        let estimates = estimate_at_times(&model, &times, &cfg).unwrap();
        for (est, tv) in estimates.iter().zip(&times) {
            let z = est.z_score(evaluate(&model, *tv).get());
            worst = worst.max(z);
            if z <= 4.0 {
                within += 1;
            }
        }
    }
    outcome(within >= 58, format!("{within}/60 within 4 sigma (need 58); max z {worst:.2}"))
}

fn mutual_independence() -> Outcome {
    let segs: Vec<Segment> = [0.3, 0.7, 1.1, 0.05, 2.0]
        .iter()
        .enumerate()
        .map(|(i, &rate)| Segment::exponential(format!("s{i}"), rate))
        .collect();
    let cfg = McConfig::new(8, 1_000_000).unwrap();
    let m = sample_indicators(&segs, t(0.6), &cfg).unwrap();
    let report = check_mutual_independence(&m, 5.0).unwrap();

    // negative control: event 4 replaced by a copy of event 0
    let rows: Vec<[bool; 5]> = (0..m.samples())
        .map(|s| {
            let mut row = [false; 5];
            for (j, b) in row.iter_mut().enumerate() {
                *b = m.get(s, if j == 4 { 0 } else { j });
            }
            row
        })
        .collect();
    let control = check_mutual_independence(&IndicatorMatrix::from_rows(&rows).unwrap(), 5.0).unwrap();

    let passed = report.subsets_checked == 26 && report.passed() && !control.passed();
    outcome(
        passed,
        format!(
            "{}/{} subsets pass (max z {:.2}); duplicated-event control {} ({} subsets flagged)",
            report.subsets_checked - report.subsets_failed,
            report.subsets_checked,
            report.max_z,
            if control.passed() { "passes" } else { "fails" },
            control.subsets_failed
        ),
    )
}

fn determinism() -> Outcome {
    let spec = case_study_path();
    let args = [
        "simulate", "--spec", spec.to_str().unwrap(), "--time", "10", "--samples", "1000000",
        "--seed", "42",
    ];
    let first = rbd_bin().args(args).output().unwrap();
    let second = rbd_bin().args(args).output().unwrap();
    let single = rbd_bin().args(args).env("RBD_THREADS", "1").output().unwrap();
    let auto = rbd_bin().args(args).env("RBD_THREADS", "0").output().unwrap();
    let ok = first.status.success()
        && !first.stdout.is_empty()
        && first.stdout == second.stdout
        && first.stdout == single.stdout
        && first.stdout == auto.stdout;
    outcome(ok, format!("repeat {}, 1 thread vs auto {}",
        if first.stdout == second.stdout { "identical" } else { "differs" },
        if single.stdout == auto.stdout { "identical" } else { "differs" }))
}

fn parser_round_trip_and_fuzz() -> Outcome {
    let mut r = rng(10);
    let shape = FuzzShape {
        max_depth: 5,
        ..FuzzShape::default()
    };
    let mut mismatches = 0;
    let mut corpus = Vec::new();
    for _ in 0..1000 {
        let model = random_model(&mut r, &shape);
        let text = print_spec(&SpecDocument::from_model(model.clone()));
        match parse_spec(&text) {
            Ok(doc) if doc.model == model => {}
            _ => mismatches += 1,
        }
        corpus.push(text);
    }

    let mut crashes = 0;
    let mut unlocated = 0;
    for i in 0..10_000 {
        let input = if i % 4 == 0 {
            random_text(&mut r)
        } else {
            let base = &corpus[r.random_range(0..corpus.len())];
            mutate_text(&mut r, base)
        };
        match catch_unwind(AssertUnwindSafe(|| parse_spec(&input))) {
            Err(_) => crashes += 1,
            Ok(Err(errors)) if errors.is_empty() || errors.iter().any(|e| e.line == 0) => unlocated += 1,
            Ok(_) => {}
        }
    }
    outcome(
        mismatches == 0 && crashes == 0 && unlocated == 0,
        format!("{mismatches}/1000 round-trip mismatches; {crashes} crashes and {unlocated} errors without a line in 10000 malformed inputs"),
    )
}

fn main() {
    // Silence the default hook so a caught parser panic does not flood the log.
    std::panic::set_hook(Box::new(|_| {}));

    type Criterion = (&'static str, fn() -> Outcome, Duration);
    let criteria: [Criterion; 10] = [
        ("case study exp(-0.271 t) via cli eval", case_study_reproduction, Duration::from_secs(1)),
        ("R(0) == 1 on 1000 fuzzed models", max_at_zero, Duration::from_secs(5)),
        ("non-increasing curves on 1000 fuzzed models", non_increasing, Duration::from_secs(30)),
        ("single-segment decay below epsilon", decays_to_zero, Duration::from_secs(5)),
        ("series routes agree to 1e-12", series_routes_agree, Duration::from_secs(10)),
        ("series below weakest segment", min_bound, Duration::from_secs(5)),
        ("monte carlo within 4 sigma", monte_carlo_oracle, Duration::from_secs(120)),
        ("mutual independence at 5 sigma", mutual_independence, Duration::from_secs(30)),
        ("cli simulate is deterministic", determinism, Duration::MAX),
        ("parser round trip and malformed-input fuzz", parser_round_trip_and_fuzz, Duration::MAX),
    ];

    let mut failed = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(run).unwrap_or_else(|_| outcome(false, "panicked"));
        let elapsed = start.elapsed();
        let in_time = elapsed <= *budget;
        let passed = result.passed && in_time;
        if !passed {
            failed += 1;
        }
        let limit = if *budget == Duration::MAX {
            String::new()
        } else {
            format!(" (limit {:.0?})", budget)
        };
        println!(
            "{} {:>2} {name}: {}; {:.2?}{limit}",
            if passed { "PASS" } else { "FAIL" },
            i + 1,
            result.detail,
            elapsed,
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
