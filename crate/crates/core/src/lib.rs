//! Reliability block diagram evaluation for pipelines of independently
//! failing segments.
//!
//! Models are trees of series and parallel groups over segments with
//! exponential failure times. The crate evaluates them in closed form,
//! checks the basic reliability properties numerically, and estimates the
//! same quantities with a deterministic Monte Carlo oracle.
//!
//! ```
//! use rbd_core::{dsl, eval, TimeValue};
//!
//! let doc = dsl::parse_spec(
//!     "pipeline \"demo\"\nseries {\n  group 3 s exponential rate=0.1\n}\n",
//! ).unwrap();
//! let r = eval::evaluate(&doc.model, TimeValue::new(2.0).unwrap());
//! assert!((r.get() - (-0.6f64).exp()).abs() < 1e-12);
//! ```

pub mod check;
pub mod distributions;
pub mod dsl;
pub mod error;
pub mod eval;
pub mod fuzz;
pub mod model;
pub mod montecarlo;

pub use error::{Error, Result};
pub use model::{
    validate_model, Block, CurveSource, FailureModel, NodePath, RbdModel, ReliabilityCurve,
    ReliabilityValue, Segment, TimeValue, ValidationIssue,
};
pub use montecarlo::{McConfig, McEstimate};
