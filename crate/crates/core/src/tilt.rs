//! Perturbations of a marginal at a fixed Kullback–Leibler budget.
//!
//! An exponential tilt f_τ(x) = exp(τ·T(x) − ψ(τ))·f(x) has
//! KL(f_τ ‖ f) = τψ′(τ) − ψ(τ), so the tilt for budget δ is a root of
//!
//! ```text
//! G(τ) = τψ′(τ) − ψ(τ) − δ.
//! ```
//!
//! G(0) = −δ and G′(τ) = τψ″(τ), so G falls on τ < 0 and rises on τ > 0:
//! there is at most one root per sign, the `Negative` and `Positive`
//! branches. Closed forms exist for the first component of Normal and
//! LogNormal (τ = ±√(2δ)/σ) and, via Lambert W, for Exponential and
//! Poisson; everything else goes through the bracketed solver.
//!
//! Bounded-support marginals can instead have one end of the support moved
//! inward by δ (measured in the variable's own units, not nats).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::distributions::{expect, DistributionSpec, Family, TiltComponent};
use crate::error::{bail, Error, Result};
use crate::numeric::roots::brent;
pub use crate::numeric::{lambert_w, LambertBranch};

/// Sign of the perturbation: τ < 0 or τ > 0 for tilts; for boundary shifts
/// the direction the chosen bound moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Branch {
    Negative,
    Positive,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Negative => -1.0,
            Branch::Positive => 1.0,
        }
    }

    pub fn opposite(self) -> Branch {
        match self {
            Branch::Negative => Branch::Positive,
            Branch::Positive => Branch::Negative,
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::Negative => "neg",
            Branch::Positive => "pos",
        })
    }
}

impl FromStr for Branch {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "neg" => Ok(Branch::Negative),
            "pos" => Ok(Branch::Positive),
            other => bail!(Parameter, "unknown branch `{other}` (expected `neg` or `pos`)"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BoundarySide {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PerturbationMode {
    Tilt(TiltComponent),
    BoundaryShift(BoundarySide),
}

impl PerturbationMode {
    /// Checks that this mode applies to `dist`'s family.
    pub fn validate_for(&self, dist: &DistributionSpec) -> Result<()> {
        match self {
            PerturbationMode::Tilt(comp) => {
                if !dist.supports_tilt(*comp) {
                    bail!(Parameter, "{comp}-component tilt is not defined for {}", dist.family());
                }
            }
            PerturbationMode::BoundaryShift(_) => {
                if !matches!(
                    dist.family(),
                    Family::Uniform | Family::Triangular | Family::TruncatedNormal
                ) {
                    bail!(
                        Parameter,
                        "boundary shift needs a bounded-support marginal, got {}",
                        dist.family()
                    );
                }
            }
        }
        Ok(())
    }
}

/// Configuration spelling of a perturbation mode.
///
/// `tilt.mean` / `tilt.rate` / `tilt.exp` are all first-component tilts;
/// the literal also pins the family it may be used with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModeLiteral {
    Mean,
    Variance,
    Rate,
    Exp,
    BoundaryLower,
    BoundaryUpper,
}

impl ModeLiteral {
    pub const ALL: [ModeLiteral; 6] = [
        ModeLiteral::Mean,
        ModeLiteral::Variance,
        ModeLiteral::Rate,
        ModeLiteral::Exp,
        ModeLiteral::BoundaryLower,
        ModeLiteral::BoundaryUpper,
    ];

    pub fn mode(self) -> PerturbationMode {
        match self {
            ModeLiteral::Mean | ModeLiteral::Rate | ModeLiteral::Exp => PerturbationMode::Tilt(TiltComponent::First),
            ModeLiteral::Variance => PerturbationMode::Tilt(TiltComponent::Second),
            ModeLiteral::BoundaryLower => PerturbationMode::BoundaryShift(BoundarySide::Lower),
            ModeLiteral::BoundaryUpper => PerturbationMode::BoundaryShift(BoundarySide::Upper),
        }
    }

    fn families(self) -> &'static [Family] {
        match self {
            ModeLiteral::Mean => &[Family::Normal, Family::LogNormal, Family::TruncatedNormal],
            ModeLiteral::Variance => &[Family::Normal, Family::LogNormal],
            ModeLiteral::Rate => &[Family::Exponential, Family::Poisson],
            ModeLiteral::Exp => &[Family::Uniform],
            ModeLiteral::BoundaryLower | ModeLiteral::BoundaryUpper => {
                &[Family::Uniform, Family::Triangular, Family::TruncatedNormal]
            }
        }
    }

    pub fn check(self, dist: &DistributionSpec) -> Result<()> {
        if !self.families().contains(&dist.family()) {
            let allowed: Vec<String> = self.families().iter().map(|f| f.to_string()).collect();
            bail!(
                Parameter,
                "mode `{self}` does not apply to {} (allowed: {})",
                dist,
                allowed.join(", ")
            );
        }
        self.mode().validate_for(dist)
    }

    /// The literal that spells `mode` for `dist`'s family, if any.
    pub fn for_mode(mode: PerturbationMode, dist: &DistributionSpec) -> Option<ModeLiteral> {
        Self::ALL
            .into_iter()
            .find(|lit| lit.mode() == mode && lit.families().contains(&dist.family()))
    }
}

impl fmt::Display for ModeLiteral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModeLiteral::Mean => "tilt.mean",
            ModeLiteral::Variance => "tilt.variance",
            ModeLiteral::Rate => "tilt.rate",
            ModeLiteral::Exp => "tilt.exp",
            ModeLiteral::BoundaryLower => "boundary.lower",
            ModeLiteral::BoundaryUpper => "boundary.upper",
        })
    }
}

impl FromStr for ModeLiteral {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Self::ALL
            .into_iter()
            .find(|lit| lit.to_string() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown perturbation mode `{s}`")))
    }
}

/// A solved perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TiltSolution {
    pub mode: PerturbationMode,
    /// Branch that was asked for.
    pub branch: Branch,
    /// Sign of the root actually returned. Differs from `branch` only for
    /// second-component tilts whose requested side has no root.
    pub found_branch: Branch,
    /// τ for tilts; the signed displacement ±δ for boundary shifts.
    pub tau: f64,
    pub delta: f64,
    /// ψ(τ); zero for boundary shifts.
    pub psi_tau: f64,
    pub original: DistributionSpec,
    pub perturbed: DistributionSpec,
}

impl TiltSolution {
    /// The δ = 0 perturbation: τ = 0 and the original law.
    pub fn identity(dist: &DistributionSpec, mode: PerturbationMode, branch: Branch) -> Self {
        TiltSolution {
            mode,
            branch,
            found_branch: branch,
            tau: 0.0,
            delta: 0.0,
            psi_tau: 0.0,
            original: *dist,
            perturbed: *dist,
        }
    }

    pub fn branch_substituted(&self) -> bool {
        self.branch != self.found_branch
    }

    /// E[w²] under the original law, for the weight w = perturbed/original.
    ///
    /// For a tilt this is exp(ψ(2τ) − 2ψ(τ)), infinite once 2τ leaves the
    /// domain of ψ; reweighted estimates then have no finite variance.
    pub fn weight_second_moment(&self) -> Result<f64> {
        match self.mode {
            PerturbationMode::Tilt(comp) => {
                let (lo, hi) = self.original.psi_domain(comp)?;
                let twice = 2.0 * self.tau;
                if twice <= lo || twice >= hi {
                    return Ok(f64::INFINITY);
                }
                let psi2 = self.original.cumulant_psi(twice, comp)?;
                Ok((psi2 - 2.0 * self.psi_tau).exp())
            }
            PerturbationMode::BoundaryShift(_) => {
                let (p, q) = (self.perturbed, self.original);
                expect(&p, |x| p.likelihood_ratio(&q, x))
            }
        }
    }
}

/// G(τ) = τψ′(τ) − ψ(τ) − δ.
pub fn kl_gap(dist: &DistributionSpec, comp: TiltComponent, tau: f64, delta: f64) -> Result<f64> {
    let psi = dist.cumulant_psi(tau, comp)?;
    let (d1, _) = dist.psi_derivatives(tau, comp)?;
    Ok(tau * d1 - psi - delta)
}

const SOLVER_MAX_ITER: usize = 200;
const START_STEP: f64 = 1e-6;

/// Root of G on the requested side of zero by bracket expansion and
/// Brent iteration.
///
/// The bracket starts at ±1e-6 and doubles until G changes sign; near a
/// finite end of ψ's domain the steps instead halve the remaining distance.
pub fn solve_tau_numeric(dist: &DistributionSpec, comp: TiltComponent, delta: f64, branch: Branch) -> Result<f64> {
    if !(delta > 0.0 && delta.is_finite()) {
        bail!(Parameter, "KL budget must be finite and > 0, got {delta}");
    }
    let (dom_lo, dom_hi) = dist.psi_domain(comp)?;
    let sign = branch.sign();
    let limit = if sign > 0.0 { dom_hi } else { dom_lo };
    let gap = |t: f64| kl_gap(dist, comp, t, delta);

    let mut inner = 0.0;
    let mut outer = sign * START_STEP;
    let mut expansions = 0;
    loop {
        expansions += 1;
        if expansions > 4000 {
            bail!(
                NoSolution,
                "no {branch} root of tau*psi'(tau) - psi(tau) = {delta} for {dist}"
            );
        }
        if outer.abs() >= limit.abs() {
            // approach the finite domain boundary geometrically
            outer = 0.5 * (inner + limit);
            if outer == inner {
                bail!(
                    NoSolution,
                    "{branch} root for {dist} at delta={delta} lies at the edge of the domain of psi"
                );
            }
        }
        match gap(outer) {
            Ok(g) if g.is_finite() => {
                if g >= 0.0 {
                    break;
                }
                inner = outer;
                let next = 2.0 * outer;
                if next.abs() > 1e300 {
                    bail!(
                        NoSolution,
                        "no {branch} root of tau*psi'(tau) - psi(tau) = {delta} for {dist}"
                    );
                }
                outer = next;
            }
            // ψ overflowed past the root: pull back toward the last good point
            _ => {
                let next = 0.5 * (inner + outer);
                if next == inner || next == outer {
                    bail!(Numerical, "psi is not representable near tau = {outer} for {dist}");
                }
                outer = next;
            }
        }
    }
    let (a, b) = if inner < outer { (inner, outer) } else { (outer, inner) };
    let root = brent(|t| gap(t).unwrap_or(f64::NAN), a, b, 1e-15, SOLVER_MAX_ITER)?;
    Ok(root.x)
}

/// τ from the closed-form expressions, where one exists: ±√(2δ)/σ for the
/// first component of Normal/LogNormal, and the Lambert-W solutions
///
/// ```text
/// Exponential: τ = λ(W(−e^{−1−δ}) + 1) / W(−e^{−1−δ})     Negative ↔ W₀,  Positive ↔ W₋₁
/// Poisson:     τ = W(−(λ − δ)/(eλ)) + 1                   Positive ↔ W₀,  Negative ↔ W₋₁
/// ```
///
/// The Poisson negative root exists only while δ < λ.
pub fn tau_closed_form(
    dist: &DistributionSpec,
    comp: TiltComponent,
    delta: f64,
    branch: Branch,
) -> Option<Result<f64>> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Some(Err(Error::Parameter(format!(
            "KL budget must be finite and > 0, got {delta}"
        ))));
    }
    match (*dist, comp) {
        (DistributionSpec::Normal { sigma, .. } | DistributionSpec::LogNormal { sigma, .. }, TiltComponent::First) => {
            Some(Ok(branch.sign() * (2.0 * delta).sqrt() / sigma))
        }
        (DistributionSpec::Exponential { rate }, TiltComponent::First) => {
            let arg = -(-1.0 - delta).exp();
            let lb = match branch {
                Branch::Negative => LambertBranch::W0,
                Branch::Positive => LambertBranch::Wm1,
            };
            Some(lambert_w(lb, arg).map(|w| rate * (w + 1.0) / w))
        }
        (DistributionSpec::Poisson { rate }, TiltComponent::First) => {
            let arg = -(rate - delta) / (std::f64::consts::E * rate);
            let lb = match branch {
                Branch::Positive => LambertBranch::W0,
                Branch::Negative => {
                    if delta >= rate {
                        return Some(Err(Error::NoSolution(format!(
                            "Poisson negative branch requires delta < lambda (delta={delta}, lambda={rate})"
                        ))));
                    }
                    LambertBranch::Wm1
                }
            };
            Some(lambert_w(lb, arg).map(|w| w + 1.0))
        }
        _ => None,
    }
}

/// Solves the perturbation of `dist` with budget `delta` on `branch`.
pub fn solve_tau(dist: &DistributionSpec, mode: PerturbationMode, delta: f64, branch: Branch) -> Result<TiltSolution> {
    dist.validate()?;
    mode.validate_for(dist)?;
    if !(delta > 0.0 && delta.is_finite()) {
        bail!(Parameter, "perturbation size must be finite and > 0, got {delta}");
    }
    match mode {
        PerturbationMode::Tilt(comp) => solve_tilt(dist, comp, delta, branch),
        PerturbationMode::BoundaryShift(side) => shift_boundary(dist, side, delta, branch),
    }
}

fn solve_tilt(dist: &DistributionSpec, comp: TiltComponent, delta: f64, branch: Branch) -> Result<TiltSolution> {
    let mut found_branch = branch;
    let tau = match (dist.family(), tau_closed_form(dist, comp, delta, branch)) {
        (Family::Normal | Family::LogNormal, Some(closed)) => closed?,
        (_, Some(closed)) => {
            let numeric = solve_tau_numeric(dist, comp, delta, branch);
            match (closed, numeric) {
                (Ok(c), Ok(n)) => {
                    // the bracketed solver is the reference; keep whichever
                    // of the two has the smaller KL residual
                    let gc = kl_gap(dist, comp, c, delta).map(f64::abs).unwrap_or(f64::INFINITY);
                    let gn = kl_gap(dist, comp, n, delta).map(f64::abs).unwrap_or(f64::INFINITY);
                    if gc <= gn {
                        c
                    } else {
                        n
                    }
                }
                (Err(e), _) | (_, Err(e)) => return Err(e),
            }
        }
        (_, None) => match solve_tau_numeric(dist, comp, delta, branch) {
            Ok(t) => t,
            Err(Error::NoSolution(msg)) if comp == TiltComponent::Second => {
                found_branch = branch.opposite();
                solve_tau_numeric(dist, comp, delta, found_branch).map_err(|_| Error::NoSolution(msg))?
            }
            Err(e) => return Err(e),
        },
    };
    let psi_tau = dist.cumulant_psi(tau, comp)?;
    Ok(TiltSolution {
        mode: PerturbationMode::Tilt(comp),
        branch,
        found_branch,
        tau,
        delta,
        psi_tau,
        original: *dist,
        perturbed: dist.tilted(tau, comp)?,
    })
}

fn shift_boundary(dist: &DistributionSpec, side: BoundarySide, delta: f64, branch: Branch) -> Result<TiltSolution> {
    let (a, b) = dist.support();
    if delta >= b - a {
        bail!(
            NoSolution,
            "boundary shift {delta} is not smaller than the support width {}",
            b - a
        );
    }
    let tau = branch.sign() * delta;
    let (na, nb) = match (side, branch) {
        (BoundarySide::Lower, Branch::Positive) => (a + delta, b),
        (BoundarySide::Upper, Branch::Negative) => (a, b - delta),
        (BoundarySide::Lower, Branch::Negative) => {
            bail!(
                NoSolution,
                "moving the lower bound down leaves the sampled support [{a}, {b}]"
            )
        }
        (BoundarySide::Upper, Branch::Positive) => {
            bail!(
                NoSolution,
                "moving the upper bound up leaves the sampled support [{a}, {b}]"
            )
        }
    };
    let perturbed = match *dist {
        DistributionSpec::Uniform { .. } => DistributionSpec::uniform(na, nb),
        DistributionSpec::Triangular { c, .. } => DistributionSpec::triangular(na, c.clamp(na, nb), nb),
        DistributionSpec::TruncatedNormal { mu, sigma, .. } => DistributionSpec::truncated_normal(mu, sigma, na, nb),
        _ => unreachable!("validate_for admits bounded families only"),
    }
    .map_err(|e| Error::NoSolution(format!("shifted support is not a valid distribution: {e}")))?;
    Ok(TiltSolution {
        mode: PerturbationMode::BoundaryShift(side),
        branch,
        found_branch: branch,
        tau,
        delta,
        psi_tau: 0.0,
        original: *dist,
        perturbed,
    })
}

/// KL(p ‖ q) = ∫ p log(p/q), by quadrature (summation for Poisson).
pub fn kl_divergence(p: &DistributionSpec, q: &DistributionSpec) -> Result<f64> {
    p.validate()?;
    q.validate()?;
    if p.is_discrete() != q.is_discrete() {
        bail!(Domain, "cannot compare a discrete and a continuous law ({p} vs {q})");
    }
    let (plo, phi) = p.support();
    let (qlo, qhi) = q.support();
    if plo < qlo || phi > qhi {
        bail!(Domain, "support of {p} is not contained in the support of {q}");
    }
    let kl = expect(p, |x| p.log_density(x) - q.log_density(x))?;
    Ok(kl.max(0.0))
}

const DELTA_MAX_GRID: usize = 10_000;

/// Upper bound (R − r)²/(4rR) on KL(p ‖ q) when r ≤ p/q ≤ R on the support
/// of p; +∞ when the ratio is unbounded.
///
/// Written as sinh²(½·log(R/r)). Uniform pairs and the tilted uniform
/// against its base are closed-form; other bounded supports use a grid
/// of 10⁴ points. On unbounded supports the log-ratio of two members of one
/// exponential family is affine in T(x), so it is bounded only if constant.
pub fn delta_max(p: &DistributionSpec, q: &DistributionSpec) -> Result<f64> {
    p.validate()?;
    q.validate()?;
    if p == q {
        return Ok(0.0);
    }
    let (plo, phi) = p.support();
    let (qlo, qhi) = q.support();
    if plo < qlo || phi > qhi || p.is_discrete() != q.is_discrete() {
        return Ok(f64::INFINITY);
    }
    let from_log_range = |spread: f64| (0.5 * spread).sinh().powi(2);
    match (*p, *q) {
        (DistributionSpec::Uniform { .. }, DistributionSpec::Uniform { .. }) => return Ok(0.0),
        (DistributionSpec::TiltedUniform { a, b, tau }, DistributionSpec::Uniform { a: qa, b: qb })
            if a == qa && b == qb =>
        {
            return Ok(from_log_range(tau.abs() * (b - a)));
        }
        _ => {}
    }
    let grid: Vec<f64> = if p.has_bounded_support() {
        (0..DELTA_MAX_GRID)
            .map(|k| plo + (phi - plo) * k as f64 / (DELTA_MAX_GRID - 1) as f64)
            .collect()
    } else {
        bulk_grid(p)
    };
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for x in grid {
        let lp = p.log_density(x);
        let lq = q.log_density(x);
        if !lp.is_finite() {
            continue;
        }
        if !lq.is_finite() {
            return Ok(f64::INFINITY);
        }
        lo = lo.min(lp - lq);
        hi = hi.max(lp - lq);
    }
    if !lo.is_finite() || !hi.is_finite() {
        return Ok(f64::INFINITY);
    }
    let spread = hi - lo;
    if p.has_bounded_support() {
        Ok(from_log_range(spread))
    } else if spread <= 1e-12 * (1.0 + lo.abs().max(hi.abs())) {
        Ok(0.0)
    } else {
        Ok(f64::INFINITY)
    }
}

fn bulk_grid(p: &DistributionSpec) -> Vec<f64> {
    let n = DELTA_MAX_GRID;
    let lin = |lo: f64, hi: f64| -> Vec<f64> { (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect() };
    match *p {
        DistributionSpec::Normal { mu, sigma } => lin(mu - 10.0 * sigma, mu + 10.0 * sigma),
        DistributionSpec::LogNormal { mu, sigma } => lin(mu - 10.0 * sigma, mu + 10.0 * sigma)
            .into_iter()
            .map(f64::exp)
            .collect(),
        DistributionSpec::Exponential { rate } => lin(0.0, 30.0 / rate),
        DistributionSpec::Poisson { rate } => {
            let top = (rate + 10.0 * rate.sqrt() + 10.0).ceil() as usize;
            (0..=top).map(|k| k as f64).collect()
        }
        _ => Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> DistributionSpec {
        s.parse().unwrap()
    }

    const MEAN: PerturbationMode = PerturbationMode::Tilt(TiltComponent::First);

    #[test]
    fn normal_mean_tilt_example() {
        let sol = solve_tau(&d("normal(0,1)"), MEAN, 0.5, Branch::Positive).unwrap();
        assert_eq!(sol.tau, 1.0);
        assert_eq!(sol.perturbed, d("normal(1,1)"));
        assert!((sol.psi_tau - 0.5).abs() < 1e-15);
    }

    #[test]
    fn boundary_shift_examples() {
        let u = d("uniform(-1,1)");
        let up = PerturbationMode::BoundaryShift(BoundarySide::Upper);
        let lo = PerturbationMode::BoundaryShift(BoundarySide::Lower);
        let sol = solve_tau(&u, up, 0.5, Branch::Negative).unwrap();
        assert_eq!(sol.perturbed, d("uniform(-1,0.5)"));
        assert_eq!(sol.tau, -0.5);
        assert_eq!(sol.psi_tau, 0.0);
        let sol = solve_tau(&u, lo, 0.5, Branch::Positive).unwrap();
        assert_eq!(sol.perturbed, d("uniform(-0.5,1)"));
        assert!(matches!(
            solve_tau(&u, up, 0.5, Branch::Positive),
            Err(Error::NoSolution(_))
        ));
        assert!(matches!(
            solve_tau(&u, lo, 2.0, Branch::Positive),
            Err(Error::NoSolution(_))
        ));

        let tn = d("truncnormal(0,1,-1,1)");
        let sol = solve_tau(&tn, lo, 0.3, Branch::Positive).unwrap();
        assert_eq!(sol.perturbed, d("truncnormal(0,1,-0.7,1)"));
        let tri = d("triangular(0,0.9,1)");
        let sol = solve_tau(&tri, up, 0.5, Branch::Negative).unwrap();
        assert_eq!(sol.perturbed, d("triangular(0,0.5,0.5)"));
    }

    #[test]
    fn invalid_requests() {
        assert!(matches!(
            solve_tau(&d("normal(0,1)"), MEAN, 0.0, Branch::Positive),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            solve_tau(&d("normal(0,1)"), MEAN, -1.0, Branch::Positive),
            Err(Error::Parameter(_))
        ));
        let var = PerturbationMode::Tilt(TiltComponent::Second);
        assert!(solve_tau(&d("exponential(1)"), var, 0.1, Branch::Positive).is_err());
        let shift = PerturbationMode::BoundaryShift(BoundarySide::Lower);
        assert!(solve_tau(&d("normal(0,1)"), shift, 0.1, Branch::Positive).is_err());
        assert!(solve_tau(&d("triangular(0,0.5,1)"), MEAN, 0.1, Branch::Positive).is_err());
    }

    #[test]
    fn poisson_negative_branch_needs_delta_below_rate() {
        let p = d("poisson(2)");
        assert!(matches!(
            solve_tau(&p, MEAN, 2.5, Branch::Negative),
            Err(Error::NoSolution(_))
        ));
        assert!(matches!(
            solve_tau_numeric(&p, TiltComponent::First, 2.5, Branch::Negative),
            Err(Error::NoSolution(_))
        ));
        let sol = solve_tau(&p, MEAN, 2.5, Branch::Positive).unwrap();
        assert!(sol.tau > 1.0);
    }

    #[test]
    fn lambert_branches_map_to_signs() {
        let e = d("exponential(2)");
        let neg = tau_closed_form(&e, TiltComponent::First, 0.3, Branch::Negative)
            .unwrap()
            .unwrap();
        let pos = tau_closed_form(&e, TiltComponent::First, 0.3, Branch::Positive)
            .unwrap()
            .unwrap();
        assert!(neg < 0.0 && pos > 0.0 && pos < 2.0);
        let p = d("poisson(2)");
        let neg = tau_closed_form(&p, TiltComponent::First, 0.3, Branch::Negative)
            .unwrap()
            .unwrap();
        let pos = tau_closed_form(&p, TiltComponent::First, 0.3, Branch::Positive)
            .unwrap()
            .unwrap();
        assert!(neg < 0.0 && pos > 0.0);
    }

    #[test]
    fn second_component_has_roots_on_both_sides() {
        let var = PerturbationMode::Tilt(TiltComponent::Second);
        for dist in [d("normal(0,1)"), d("normal(2,0.5)"), d("lognormal(0.3,1.2)")] {
            for branch in [Branch::Negative, Branch::Positive] {
                let sol = solve_tau(&dist, var, 0.4, branch).unwrap();
                assert!(!sol.branch_substituted());
                assert_eq!(sol.tau.signum(), branch.sign());
                let g = kl_gap(&dist, TiltComponent::Second, sol.tau, 0.4).unwrap();
                assert!(g.abs() < 1e-10, "{dist} {branch}: {g}");
            }
        }
    }

    #[test]
    fn kl_examples() {
        assert_eq!(kl_divergence(&d("normal(0,1)"), &d("normal(0,1)")).unwrap(), 0.0);
        let kl = kl_divergence(&d("normal(1,1)"), &d("normal(0,1)")).unwrap();
        assert!((kl - 0.5).abs() < 1e-12, "{kl}");
        assert!(kl_divergence(&d("uniform(-1,1)"), &d("uniform(0,1)")).is_err());
        assert!(kl_divergence(&d("poisson(1)"), &d("exponential(1)")).is_err());
        // shrunk uniform: log(2/1.5)
        let kl = kl_divergence(&d("uniform(-1,0.5)"), &d("uniform(-1,1)")).unwrap();
        assert!((kl - (4.0f64 / 3.0).ln()).abs() < 1e-14);
    }

    #[test]
    fn delta_max_examples() {
        assert_eq!(delta_max(&d("normal(0,1)"), &d("normal(0,1)")).unwrap(), 0.0);
        assert_eq!(delta_max(&d("uniform(0,1)"), &d("uniform(0,2)")).unwrap(), 0.0);
        assert_eq!(delta_max(&d("normal(1,1)"), &d("normal(0,1)")).unwrap(), f64::INFINITY);
        assert_eq!(delta_max(&d("poisson(2)"), &d("poisson(3)")).unwrap(), f64::INFINITY);
        assert_eq!(
            delta_max(&d("uniform(-2,1)"), &d("uniform(-1,1)")).unwrap(),
            f64::INFINITY
        );

        // tilted uniform τ* = 1 on [-1, 1]: ratio endpoints are r and R below
        let t = 1.0f64;
        let z = t.exp() - (-t).exp();
        let r = 2.0 * t * (-t).exp() / z;
        let big_r = 2.0 * t * t.exp() / z;
        let want = (big_r - r).powi(2) / (4.0 * r * big_r);
        let got = delta_max(&d("tiltuniform(-1,1,1)"), &d("uniform(-1,1)")).unwrap();
        assert!((got - want).abs() < 1e-14, "{got} vs {want}");
    }

    #[test]
    fn delta_max_grid_agrees_with_closed_form() {
        // the generic grid route, reached through a triangular pair
        let p = d("triangular(0,0.5,1)");
        let q = d("triangular(0,0.4,1)");
        let got = delta_max(&p, &q).unwrap();
        assert!(got.is_finite() && got > 0.0);
        let kl = kl_divergence(&p, &q).unwrap();
        assert!(kl <= got);
    }

    #[test]
    fn weight_second_moments() {
        // N(0,1) → N(0, v) by the second component: finite iff v < 2
        let n = d("normal(0,1)");
        let var = PerturbationMode::Tilt(TiltComponent::Second);
        let small = solve_tau(&n, var, 0.1, Branch::Positive).unwrap();
        let DistributionSpec::Normal { sigma, .. } = small.perturbed else {
            panic!()
        };
        let v = sigma * sigma;
        let want = 1.0 / (v * (2.0 - v)).sqrt();
        assert!((small.weight_second_moment().unwrap() - want).abs() < 1e-12);
        let big = solve_tau(&n, var, 0.5, Branch::Positive).unwrap();
        assert_eq!(big.weight_second_moment().unwrap(), f64::INFINITY);
        // mean shift by 1: E[w²] = e
        let shift = solve_tau(&n, MEAN, 0.5, Branch::Positive).unwrap();
        assert!((shift.weight_second_moment().unwrap() - 1f64.exp()).abs() < 1e-14);
        let u = d("uniform(-1,1)");
        let cut = solve_tau(
            &u,
            PerturbationMode::BoundaryShift(BoundarySide::Upper),
            0.5,
            Branch::Negative,
        )
        .unwrap();
        assert!((cut.weight_second_moment().unwrap() - 4.0 / 3.0).abs() < 1e-12);
        assert_eq!(
            TiltSolution::identity(&n, MEAN, Branch::Positive)
                .weight_second_moment()
                .unwrap(),
            1.0
        );
    }

    #[test]
    fn mode_literals() {
        for lit in ModeLiteral::ALL {
            assert_eq!(lit.to_string().parse::<ModeLiteral>().unwrap(), lit);
        }
        assert!(ModeLiteral::Variance.check(&d("exponential(1)")).is_err());
        assert!(ModeLiteral::Mean.check(&d("normal(0,1)")).is_ok());
        assert!(ModeLiteral::Rate.check(&d("normal(0,1)")).is_err());
        assert_eq!(ModeLiteral::for_mode(MEAN, &d("poisson(1)")), Some(ModeLiteral::Rate));
        assert!("tilt.foo".parse::<ModeLiteral>().is_err());
        assert_eq!("neg".parse::<Branch>().unwrap(), Branch::Negative);
        assert!("up".parse::<Branch>().is_err());
    }
}
