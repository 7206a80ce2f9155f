//! Closed-form failure-time laws and the characterizing reliability
//! properties: `R(0) = 1`, `R` non-increasing, and `R(t) -> 0`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{FailureModel, ReliabilityValue, TimeValue};

/// Relative guard applied to the decay threshold `ln(1/eps)/rate` before a
/// grid point is required to satisfy `R(t) < eps`. Points inside the guard
/// band sit within rounding distance of the threshold.
pub const DECAY_THRESHOLD_GUARD: f64 = 1e-12;

/// Probability that the failure time is `<= t`. Zero for negative `t`.
pub fn cdf(model: &FailureModel, t: f64) -> Result<f64> {
    model.check()?;
    if !t.is_finite() {
        return Err(Error::NonFinite(t));
    }
    match *model {
        FailureModel::Exponential { rate } => {
            if t >= 0.0 {
                Ok(-(-rate * t).exp_m1())
            } else {
                Ok(0.0)
            }
        }
    }
}

/// Probability of surviving past `t`, `1 - cdf(t)`.
pub fn reliability(model: &FailureModel, t: TimeValue) -> Result<ReliabilityValue> {
    let log_r = log_reliability(model, t)?;
    Ok(ReliabilityValue::saturating(log_r.exp()))
}

/// Natural log of [`reliability`]; `-rate * t` for the exponential law.
pub fn log_reliability(model: &FailureModel, t: TimeValue) -> Result<f64> {
    model.check()?;
    match *model {
        FailureModel::Exponential { rate } => Ok(-rate * t.get()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomReport {
    /// `R(0) == 1` exactly.
    pub max_at_zero: bool,
    /// `R` never increases between consecutive grid points.
    pub monotone: bool,
    /// `R(t) < epsilon` for every grid point past the decay threshold.
    pub decays: bool,
    /// `ln(1/epsilon) / rate`.
    pub decay_threshold: f64,
    /// Number of grid points that were past the guarded threshold.
    pub decay_points_checked: usize,
    pub failures: Vec<String>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.max_at_zero && self.monotone && self.decays
    }
}

/// Checks the three reliability properties for `model` over `grid`.
///
/// The grid must be non-empty, ascending and start at 0. `epsilon` must
/// lie in `(0, 1)`.
pub fn check_reliability_axioms(
    model: &FailureModel,
    grid: &[TimeValue],
    epsilon: f64,
) -> Result<AxiomReport> {
    model.check()?;
    check_axioms_with(model.rate(), grid, epsilon, |t| {
        reliability(model, t).map(ReliabilityValue::get)
    })
}

/// Same checks as [`check_reliability_axioms`] against an arbitrary
/// reliability function, so the checker itself can be exercised.
pub fn check_axioms_with<F>(
    rate: f64,
    grid: &[TimeValue],
    epsilon: f64,
    mut rel: F,
) -> Result<AxiomReport>
where
    F: FnMut(TimeValue) -> Result<f64>,
{
    if grid.is_empty() {
        return Err(Error::Empty("time grid"));
    }
    if grid[0].get() != 0.0 {
        return Err(Error::Usage("time grid must start at 0".into()));
    }
    if grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Usage("time grid must be sorted ascending".into()));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Usage(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    if !(rate.is_finite() && rate > 0.0) {
        return Err(Error::InvalidRate(rate));
    }

    let values = grid
        .iter()
        .map(|&t| rel(t))
        .collect::<Result<Vec<_>>>()?;
    let mut failures = Vec::new();

    let max_at_zero = values[0] == 1.0;
    if !max_at_zero {
        failures.push(format!("R(0) = {} instead of 1", values[0]));
    }

    let mut monotone = true;
    for (w, ts) in values.windows(2).zip(grid.windows(2)) {
        if w[1] > w[0] {
            monotone = false;
            failures.push(format!(
                "R({}) = {} > R({}) = {}",
                ts[1].get(),
                w[1],
                ts[0].get(),
                w[0]
            ));
        }
    }

    let decay_threshold = (1.0 / epsilon).ln() / rate;
    let guarded = decay_threshold * (1.0 + DECAY_THRESHOLD_GUARD);
    let mut decays = true;
    let mut decay_points_checked = 0;
    for (t, r) in grid.iter().zip(&values) {
        if t.get() > guarded {
            decay_points_checked += 1;
            if *r >= epsilon {
                decays = false;
                failures.push(format!(
                    "R({}) = {r} >= epsilon {epsilon} past threshold {decay_threshold}",
                    t.get()
                ));
            }
        }
    }

    Ok(AxiomReport {
        max_at_zero,
        monotone,
        decays,
        decay_threshold,
        decay_points_checked,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn exp(rate: f64) -> FailureModel {
        FailureModel::exponential(rate).unwrap()
    }

    fn t(x: f64) -> TimeValue {
        TimeValue::new(x).unwrap()
    }

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs()
    }

    // Values below were evaluated at 40 significant digits.
    #[test]
    fn cdf_examples() {
        assert_eq!(cdf(&exp(2.0), 0.0).unwrap(), 0.0);
        assert_eq!(cdf(&exp(2.0), -5.0).unwrap(), 0.0);
        let v = cdf(&exp(0.0025), 100.0).unwrap();
        assert!(rel_close(v, 0.221_199_216_928_595_13, 1e-12), "{v}");
        assert!(cdf(&exp(1.0), f64::NAN).is_err());
        assert!(cdf(&exp(1.0), f64::INFINITY).is_err());
        assert!(cdf(&FailureModel::Exponential { rate: 0.0 }, 1.0).is_err());
    }

    #[test]
    fn reliability_examples() {
        assert_eq!(reliability(&exp(1.0), t(0.0)).unwrap().get(), 1.0);
        let r = reliability(&exp(1.0), t(1.0)).unwrap().get();
        assert!(rel_close(r, 0.367_879_441_171_442_32, 1e-12));
        let r = reliability(&exp(0.271), t(10.0)).unwrap().get();
        assert!(rel_close(r, 0.066_536_806_715_016_85, 1e-12));
        assert!(reliability(&FailureModel::Exponential { rate: -1.0 }, t(1.0)).is_err());
    }

    #[test]
    fn log_reliability_examples() {
        assert_eq!(log_reliability(&exp(1.0), t(0.0)).unwrap(), 0.0);
        assert_eq!(log_reliability(&exp(2.0), t(3.0)).unwrap(), -6.0);
        assert_eq!(log_reliability(&exp(0.0025), t(100.0)).unwrap(), -0.25);
    }

    #[test]
    fn axioms_hold_for_unit_rate() {
        let grid: Vec<_> = (0..=50).map(|i| t(i as f64)).collect();
        let report = check_reliability_axioms(&exp(1.0), &grid, 1e-6).unwrap();
        assert!(report.passed(), "{:?}", report.failures);
        // ln(1e6) = 13.8..., so t = 14..=50 are checked
        assert_eq!(report.decay_points_checked, 37);
    }

    #[test]
    fn single_point_grid_is_vacuous() {
        let report = check_reliability_axioms(&exp(0.0025), &[t(0.0)], 0.5).unwrap();
        assert!(report.passed());
        assert_eq!(report.decay_points_checked, 0);
    }

    #[test]
    fn corrupted_reliability_fails_max_at_zero() {
        let grid = [t(0.0), t(1.0)];
        let report = check_axioms_with(1.0, &grid, 0.5, |x| {
            Ok(if x.get() == 0.0 { 1.1 } else { (-x.get()).exp() })
        })
        .unwrap();
        assert!(!report.max_at_zero);
        assert!(!report.passed());
    }

    #[test]
    fn corrupted_reliability_fails_monotone_and_decay() {
        let grid: Vec<_> = (0..=20).map(|i| t(i as f64)).collect();
        let report = check_axioms_with(1.0, &grid, 1e-3, |x| {
            Ok(if x.get() == 15.0 { 0.5 } else { (-x.get()).exp() })
        })
        .unwrap();
        assert!(report.max_at_zero);
        assert!(!report.monotone);
        assert!(!report.decays);
    }

    #[test]
    fn checker_rejects_bad_grids() {
        let m = exp(1.0);
        assert!(check_reliability_axioms(&m, &[], 0.1).is_err());
        assert!(check_reliability_axioms(&m, &[t(1.0)], 0.1).is_err());
        assert!(check_reliability_axioms(&m, &[t(0.0), t(2.0), t(1.0)], 0.1).is_err());
        assert!(check_reliability_axioms(&m, &[t(0.0)], 0.0).is_err());
        assert!(check_reliability_axioms(&m, &[t(0.0)], 1.0).is_err());
    }

    proptest! {
        #[test]
        fn reliability_in_unit_interval_and_matches_exp(
            rate in 1e-6f64..1e3, x in 0.0f64..1e4,
        ) {
            let r = reliability(&exp(rate), t(x)).unwrap().get();
            prop_assert!((0.0..=1.0).contains(&r));
            let direct = (-rate * x).exp();
            let ulps = (r.to_bits() as i64 - direct.to_bits() as i64).abs();
            prop_assert!(ulps <= 4);
        }

        #[test]
        fn reliability_is_one_minus_cdf(rate in 1e-4f64..10.0, x in 0.0f64..50.0) {
            let m = exp(rate);
            let r = reliability(&m, t(x)).unwrap().get();
            let c = cdf(&m, x).unwrap();
            prop_assert!((r + c - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn reliability_non_increasing(rate in 1e-6f64..1e3, a in 0.0f64..1e3, d in 0.0f64..1e3) {
            let m = exp(rate);
            let ra = reliability(&m, t(a)).unwrap().get();
            let rb = reliability(&m, t(a + d)).unwrap().get();
            prop_assert!(rb <= ra);
        }

        #[test]
        fn cdf_non_decreasing(rate in 1e-6f64..1e3, a in -1e3f64..1e3, d in 0.0f64..1e3) {
            let m = exp(rate);
            prop_assert!(cdf(&m, a + d).unwrap() >= cdf(&m, a).unwrap());
        }

        #[test]
        fn reliability_at_zero_is_one(rate in 1e-300f64..1e300) {
            prop_assert_eq!(reliability(&exp(rate), TimeValue::ZERO).unwrap().get(), 1.0);
        }

        #[test]
        fn decays_below_epsilon(
            rate in 1e-4f64..1e2,
            eps_exp in 1u32..12,
            stretch in 1e-12f64..10.0,
        ) {
            let eps = 10f64.powi(-(eps_exp as i32));
            let threshold = (1.0 / eps).ln() / rate;
            let x = threshold * (1.0 + stretch);
            prop_assert!(reliability(&exp(rate), t(x)).unwrap().get() < eps);
        }
    }
}
