//! Failure probability estimates and sensitivity indices from one sample.
//!
//! The reference estimate is plain Monte Carlo. Perturbed estimates reuse
//! the failure points of that same sample, each weighted by the likelihood
//! ratio of the perturbed to the original marginal, so no further
//! performance-function evaluations are needed.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::DistributionSpec;
use crate::error::{bail, Error, Result};
use crate::numeric::{normal, pairwise_sum};
use crate::tilt::{solve_tau, Branch, PerturbationMode, TiltSolution};

/// Records whose effective sample size falls below this are flagged.
pub const LOW_ESS_THRESHOLD: f64 = 5.0;

/// Input points with their performance-function values.
///
/// Immutable once built. Failure rows (g ≤ 0) are located at construction
/// and shared by every estimate computed from the sample.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluatedSample {
    points: Vec<f64>,
    g_values: Vec<f64>,
    marginals: Vec<DistributionSpec>,
    seed: Option<u64>,
    failures: Vec<usize>,
    warnings: Vec<String>,
}

impl EvaluatedSample {
    /// `points` is row-major, `g_values.len()` rows by `marginals.len()`
    /// columns.
    pub fn new(
        points: Vec<f64>,
        g_values: Vec<f64>,
        marginals: Vec<DistributionSpec>,
        seed: Option<u64>,
    ) -> Result<Self> {
        let n = g_values.len();
        let d = marginals.len();
        if n == 0 {
            bail!(Parameter, "a sample needs at least one point");
        }
        if d == 0 {
            bail!(Parameter, "a sample needs at least one input variable");
        }
        if points.len() != n * d {
            bail!(
                Parameter,
                "{} point coordinates do not form {n} rows of {d} columns",
                points.len()
            );
        }
        for m in &marginals {
            m.validate()?;
        }
        if let Some(k) = g_values.iter().position(|g| g.is_nan()) {
            bail!(Parameter, "performance value at row {k} is NaN");
        }
        let failures = g_values
            .iter()
            .enumerate()
            .filter(|(_, g)| **g <= 0.0)
            .map(|(k, _)| k)
            .collect();
        Ok(EvaluatedSample {
            points,
            g_values,
            marginals,
            seed,
            failures,
            warnings: Vec::new(),
        })
    }

    pub(crate) fn with_warnings(mut self, warnings: Vec<String>) -> Self {
        self.warnings = warnings;
        self
    }

    pub fn len(&self) -> usize {
        self.g_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g_values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.marginals.len()
    }

    pub fn point(&self, k: usize) -> &[f64] {
        let d = self.dim();
        &self.points[k * d..(k + 1) * d]
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn g_values(&self) -> &[f64] {
        &self.g_values
    }

    pub fn marginals(&self) -> &[DistributionSpec] {
        &self.marginals
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Rows with g ≤ 0, ascending.
    pub fn failure_indices(&self) -> &[usize] {
        &self.failures
    }

    /// Diagnostics collected while building or ingesting the sample.
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FailureEstimate {
    pub p_hat: f64,
    pub n: usize,
    pub var_hat: f64,
    /// Number of sample points with g ≤ 0.
    pub failures: usize,
    /// (Σw)²/Σw² over the failure points; equals `failures` for unit weights.
    pub ess: f64,
}

fn finish(sum_w: f64, sum_w2: f64, n: usize, failures: usize) -> FailureEstimate {
    let nf = n as f64;
    let p_hat = sum_w / nf;
    let var_hat = ((sum_w2 / nf - p_hat * p_hat) / nf).max(0.0);
    let ess = if sum_w2 > 0.0 { sum_w * sum_w / sum_w2 } else { 0.0 };
    FailureEstimate {
        p_hat,
        n,
        var_hat,
        failures,
        ess,
    }
}

/// Plain Monte Carlo: the fraction of points with g ≤ 0.
pub fn estimate_pf(sample: &EvaluatedSample) -> FailureEstimate {
    let count = sample.failures.len();
    finish(count as f64, count as f64, sample.len(), count)
}

fn check_tilt(sample: &EvaluatedSample, i: usize, tilt: &TiltSolution) -> Result<()> {
    if i >= sample.dim() {
        bail!(
            Parameter,
            "variable index {i} out of range for a {}-dimensional sample",
            sample.dim()
        );
    }
    if tilt.original != sample.marginals[i] {
        bail!(
            Parameter,
            "perturbation was solved for {} but variable {i} has marginal {}",
            tilt.original,
            sample.marginals[i]
        );
    }
    Ok(())
}

fn weighted(sample: &EvaluatedSample, weight: impl Fn(&[f64]) -> f64 + Sync) -> FailureEstimate {
    let w: Vec<f64> = sample.failures.par_iter().map(|&k| weight(sample.point(k))).collect();
    let w2: Vec<f64> = w.iter().map(|x| x * x).collect();
    finish(pairwise_sum(&w), pairwise_sum(&w2), sample.len(), sample.failures.len())
}

/// Reweighted estimate of the failure probability with marginal `i`
/// replaced by `tilt.perturbed`.
pub fn estimate_perturbed_pf(sample: &EvaluatedSample, i: usize, tilt: &TiltSolution) -> Result<FailureEstimate> {
    check_tilt(sample, i, tilt)?;
    let (p, q) = (tilt.perturbed, tilt.original);
    Ok(weighted(sample, |x| p.likelihood_ratio(&q, x[i])))
}

/// Joint perturbation of two distinct variables; the weight is the product
/// of the two marginal likelihood ratios.
pub fn estimate_interaction_pf(
    sample: &EvaluatedSample,
    i: usize,
    j: usize,
    tilt_i: &TiltSolution,
    tilt_j: &TiltSolution,
) -> Result<FailureEstimate> {
    if i == j {
        bail!(Parameter, "interaction needs two distinct variables, got {i} twice");
    }
    check_tilt(sample, i, tilt_i)?;
    check_tilt(sample, j, tilt_j)?;
    let (pi, qi) = (tilt_i.perturbed, tilt_i.original);
    let (pj, qj) = (tilt_j.perturbed, tilt_j.original);
    Ok(weighted(sample, |x| {
        pi.likelihood_ratio(&qi, x[i]) * pj.likelihood_ratio(&qj, x[j])
    }))
}

/// Sensitivity index S = p_δ/p_f − 1 with its delta-method uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexEstimate {
    pub s_hat: f64,
    pub stderr: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// The plug-in variance came out negative and was clamped to zero.
    pub variance_floored: bool,
}

fn require_pf(p_f: &FailureEstimate) -> Result<()> {
    if p_f.p_hat > 0.0 {
        Ok(())
    } else {
        Err(Error::UndefinedIndex(format!(
            "no failures among {} sample points, so the reference probability is zero",
            p_f.n
        )))
    }
}

/// Plug-in delta-method variance of Ŝ before clamping:
/// Var(p̂_δ)/p_f² − p_δ²(1 − p_f)/(N p_f³).
pub fn index_variance_unfloored(p_f: &FailureEstimate, p_delta: &FailureEstimate) -> Result<(f64, f64)> {
    require_pf(p_f)?;
    let pf = p_f.p_hat;
    let pd = p_delta.p_hat;
    let first = p_delta.var_hat / (pf * pf);
    let second = pd * pd * (1.0 - pf) / (p_f.n as f64 * pf * pf * pf);
    Ok((first - second, first.abs() + second.abs()))
}

/// Delta-method variance of Ŝ, clamped at zero.
pub fn index_variance(p_f: &FailureEstimate, p_delta: &FailureEstimate) -> Result<f64> {
    Ok(index_variance_unfloored(p_f, p_delta)?.0.max(0.0))
}

/// Plug-in Cov(p̂_f, p̂_δ) = p_δ(1 − p_f)/N.
pub fn covariance_pf_pdelta(p_f: &FailureEstimate, p_delta: &FailureEstimate) -> f64 {
    p_delta.p_hat * (1.0 - p_f.p_hat) / p_f.n as f64
}

/// Ŝ with a normal-approximation interval at the given confidence level.
pub fn sensitivity_index(p_delta: &FailureEstimate, p_f: &FailureEstimate, confidence: f64) -> Result<IndexEstimate> {
    if !(confidence > 0.0 && confidence < 1.0) {
        bail!(Parameter, "confidence level must lie in (0, 1), got {confidence}");
    }
    require_pf(p_f)?;
    let s_hat = p_delta.p_hat / p_f.p_hat - 1.0;
    let (raw, scale) = index_variance_unfloored(p_f, p_delta)?;
    // differences within rounding of zero are not worth a flag
    let variance_floored = raw < -1e-12 * scale;
    let stderr = raw.max(0.0).sqrt();
    let z = normal::quantile(1.0 - 0.5 * (1.0 - confidence));
    Ok(IndexEstimate {
        s_hat,
        stderr,
        ci_lo: s_hat - z * stderr,
        ci_hi: s_hat + z * stderr,
        variance_floored,
    })
}

/// One line of a sweep plan: a variable, a perturbation, a branch and the
/// budgets to evaluate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanEntry {
    /// Zero-based column index.
    pub variable: usize,
    pub mode: PerturbationMode,
    pub branch: Branch,
    pub deltas: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordFlags {
    pub low_ess: bool,
    pub variance_floored: bool,
    pub branch_substituted: bool,
    /// The likelihood-ratio weights have infinite variance under the
    /// original law; the estimate and its standard error are unreliable.
    pub unbounded_weight_variance: bool,
}

/// Result for one (variable, mode, branch, δ) cell.
///
/// When the perturbation has no solution the numeric fields are NaN and
/// `infeasible` holds the reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRecord {
    pub variable: usize,
    pub mode: PerturbationMode,
    pub branch: Branch,
    pub delta: f64,
    pub tau: f64,
    pub p_delta_hat: f64,
    pub s_hat: f64,
    pub stderr: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub ess: f64,
    pub flags: RecordFlags,
    pub infeasible: Option<String>,
}

impl SensitivityRecord {
    pub fn is_feasible(&self) -> bool {
        self.infeasible.is_none()
    }

    fn sort_key_cmp(&self, other: &Self) -> Ordering {
        (self.variable, self.mode, self.branch)
            .cmp(&(other.variable, other.mode, other.branch))
            .then(self.delta.total_cmp(&other.delta))
    }
}

/// Evaluates every cell of `plan` against one sample.
///
/// Records come back sorted by (variable, mode, branch, δ). Cells with no
/// admissible perturbation are kept and marked infeasible. δ = 0 is the
/// unperturbed law and gives Ŝ = 0 exactly.
pub fn sweep(sample: &EvaluatedSample, plan: &[PlanEntry], confidence: f64) -> Result<Vec<SensitivityRecord>> {
    let mut cells = Vec::new();
    for entry in plan {
        if entry.variable >= sample.dim() {
            bail!(
                Parameter,
                "plan refers to variable {} of a {}-dimensional sample",
                entry.variable,
                sample.dim()
            );
        }
        entry.mode.validate_for(&sample.marginals[entry.variable])?;
        for &delta in &entry.deltas {
            if !(delta >= 0.0 && delta.is_finite()) {
                bail!(Parameter, "perturbation sizes must be finite and >= 0, got {delta}");
            }
            cells.push((entry.variable, entry.mode, entry.branch, delta));
        }
    }
    if cells.is_empty() {
        return Ok(Vec::new());
    }
    let p_f = estimate_pf(sample);
    require_pf(&p_f)?;

    let mut records = cells
        .into_par_iter()
        .map(|(variable, mode, branch, delta)| {
            let marginal = sample.marginals[variable];
            let solved = if delta == 0.0 {
                Ok(TiltSolution::identity(&marginal, mode, branch))
            } else {
                solve_tau(&marginal, mode, delta, branch)
            };
            let tilt = match solved {
                Ok(t) => t,
                Err(Error::NoSolution(reason)) => {
                    return Ok(SensitivityRecord {
                        variable,
                        mode,
                        branch,
                        delta,
                        tau: f64::NAN,
                        p_delta_hat: f64::NAN,
                        s_hat: f64::NAN,
                        stderr: f64::NAN,
                        ci_lo: f64::NAN,
                        ci_hi: f64::NAN,
                        ess: f64::NAN,
                        flags: RecordFlags::default(),
                        infeasible: Some(reason),
                    })
                }
                Err(e) => return Err(e),
            };
            let p_delta = estimate_perturbed_pf(sample, variable, &tilt)?;
            let index = sensitivity_index(&p_delta, &p_f, confidence)?;
            Ok(SensitivityRecord {
                variable,
                mode,
                branch,
                delta,
                tau: tilt.tau,
                p_delta_hat: p_delta.p_hat,
                s_hat: index.s_hat,
                stderr: index.stderr,
                ci_lo: index.ci_lo,
                ci_hi: index.ci_hi,
                ess: p_delta.ess,
                flags: RecordFlags {
                    low_ess: p_delta.ess < LOW_ESS_THRESHOLD,
                    variance_floored: index.variance_floored,
                    branch_substituted: tilt.branch_substituted(),
                    unbounded_weight_variance: tilt.weight_second_moment()?.is_infinite(),
                },
                infeasible: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    records.sort_by(SensitivityRecord::sort_key_cmp);
    Ok(records)
}
