#![allow(dead_code)]

use rbd_core::{RbdModel, Segment};

pub const CASE_STUDY_SPEC: &str = "\
pipeline \"sixty-segment\"
series {
  group 30 low exponential rate=0.0025
  group 20 mid exponential rate=0.0023
  group 10 high exponential rate=0.015
}
";

/// `(count, rate)` for the three segment classes.
pub const CASE_STUDY_CLASSES: [(usize, f64); 3] = [(30, 0.0025), (20, 0.0023), (10, 0.015)];

pub fn case_study_segments() -> Vec<Segment> {
    let mut out = Vec::new();
    for (class, (count, rate)) in CASE_STUDY_CLASSES.iter().enumerate() {
        for i in 0..*count {
            out.push(Segment::exponential(format!("c{class}_{i}"), *rate));
        }
    }
    out
}

pub fn case_study_model() -> RbdModel {
    RbdModel::series("sixty-segment", case_study_segments()).unwrap()
}

/// `exp(-x)` for `x >= 0` from the Taylor series of `exp(x)`. All terms are
/// positive, so the sum carries no cancellation; it does not touch libm.
pub fn exp_neg_series(x: f64) -> f64 {
    assert!(x >= 0.0 && x < 700.0);
    // split off whole halvings so the series converges quickly
    let mut halvings = 0;
    let mut y = x;
    while y > 0.5 {
        y /= 2.0;
        halvings += 1;
    }
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    let mut comp = 0.0f64;
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

pub fn rel_err(actual: f64, expected: f64) -> f64 {
    if actual == expected {
        0.0
    } else {
        (actual - expected).abs() / expected.abs()
    }
}
