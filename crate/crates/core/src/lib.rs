//! Moment-independent reliability sensitivity analysis.
//!
//! Each input marginal is perturbed by a fixed Kullback–Leibler budget δ,
//! either by exponential tilting within its family or by moving one end of
//! a bounded support. The failure probability under the perturbed law is
//! re-estimated from the original Monte Carlo sample by likelihood-ratio
//! reweighting, so the performance function is evaluated exactly once per
//! sample point no matter how many perturbations are studied.
//!
//! ```
//! use dpsa::prelude::*;
//!
//! let marginals = vec![DistributionSpec::normal(0.0, 1.0).unwrap(); 3];
//! let model = LinearLimitState::new(3.0, vec![0.1, 0.5, 1.0]).unwrap();
//! let sample = build_sample(&model, &marginals, 20_000, 7).unwrap();
//! let pf = estimate_pf(&sample);
//!
//! let tilt = solve_tau(&marginals[2], PerturbationMode::Tilt(TiltComponent::First), 0.5, Branch::Positive).unwrap();
//! let shifted = estimate_perturbed_pf(&sample, 2, &tilt).unwrap();
//! let index = sensitivity_index(&shifted, &pf, 0.95).unwrap();
//! assert!(index.s_hat > 0.0);
//! ```

pub mod distributions;
pub mod error;
pub mod estimation;
pub mod models;
pub mod numeric;
pub mod tilt;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::distributions::{DistributionSpec, Family, TiltComponent};
    pub use crate::error::{Error, Result};
    pub use crate::estimation::{
        covariance_pf_pdelta, estimate_interaction_pf, estimate_perturbed_pf, estimate_pf, index_variance,
        sensitivity_index, sweep, EvaluatedSample, FailureEstimate, IndexEstimate, PlanEntry, RecordFlags,
        SensitivityRecord,
    };
    pub use crate::models::{
        analytic_pf_linear, build_sample, build_sample_with, draw_points, ingest_sample, write_sample,
        LinearLimitState, PerformanceFunction, PerformanceModel,
    };
    pub use crate::tilt::{
        delta_max, kl_divergence, lambert_w, solve_tau, BoundarySide, Branch, ModeLiteral, PerturbationMode,
        TiltSolution,
    };
}
