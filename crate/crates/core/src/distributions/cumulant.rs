//! Exponential tilting: sufficient statistics, the cumulant function
//! ψ(τ) = log E[exp(τ·T(X))] and its first two derivatives, and the
//! closed-form family of the tilted density.
//!
//! | family            | T₁ / T₂          | ψ(τ)                                  | domain        |
//! |-------------------|------------------|---------------------------------------|---------------|
//! | Normal, LogNormal | x, x² (log x, …) | μτ + τ²σ²/2 ; μ²τ/s − ½ log s         | ℝ ; s = 1 − 2τσ² > 0 |
//! | Exponential       | x                | log(λ / (λ − τ))                      | τ < λ         |
//! | Poisson           | x                | λ(eᵗ − 1)                             | ℝ             |
//! | Uniform           | x                | log((e^{τb} − e^{τa}) / (τ(b − a)))   | ℝ             |
//! | TruncatedNormal   | x                | μτ + τ²σ²/2 + log Z(μ + τσ²) − log Z(μ) | ℝ           |
//!
//! The second-component cumulant is derived directly from
//! ∫ exp(τt²) φ((t − μ)/σ)/σ dt; it is validated against quadrature in the
//! tests. The tilted law is N(μ/s, σ²/s).

use std::fmt;

use serde::{Deserialize, Serialize};

use super::{truncated_moments, DistributionSpec};
use crate::error::{bail, Result};
use crate::numeric::normal;

/// Which sufficient-statistic component a tilt acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TiltComponent {
    /// T₁(x) = x, or log x for LogNormal.
    First,
    /// T₂(x) = x², or (log x)² for LogNormal.
    Second,
}

impl fmt::Display for TiltComponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TiltComponent::First => "first",
            TiltComponent::Second => "second",
        })
    }
}

/// K(u) = log((eᵘ − 1)/u), the uniform cumulant on a unit-width interval
/// anchored at 0. Series below |u| = 0.1, log-space tails elsewhere.
pub(crate) fn log_expm1_ratio(u: f64) -> f64 {
    if u.abs() < 0.1 {
        let u2 = u * u;
        return u / 2.0
            + u2 * (1.0 / 24.0
                + u2 * (-1.0 / 2880.0 + u2 * (1.0 / 181_440.0 + u2 * (-1.0 / 9_676_800.0 + u2 / 479_001_600.0))));
    }
    if u > 0.0 {
        u + (-(-u).exp_m1()).ln() - u.ln()
    } else {
        (-u.exp_m1()).ln() - (-u).ln()
    }
}

/// K′(u) = 1/(1 − e⁻ᵘ) − 1/u.
pub(crate) fn log_expm1_ratio_d1(u: f64) -> f64 {
    if u.abs() < 0.1 {
        let u2 = u * u;
        return 0.5
            + u * (1.0 / 12.0
                + u2 * (-1.0 / 720.0 + u2 * (1.0 / 30_240.0 + u2 * (-1.0 / 1_209_600.0 + u2 / 47_900_160.0))));
    }
    1.0 / (-(-u).exp_m1()) - 1.0 / u
}

/// K″(u) = 1/u² − 1/(4 sinh²(u/2)).
pub(crate) fn log_expm1_ratio_d2(u: f64) -> f64 {
    if u.abs() < 0.1 {
        let u2 = u * u;
        return 1.0 / 12.0 + u2 * (-1.0 / 240.0 + u2 * (1.0 / 6048.0 + u2 * (-1.0 / 172_800.0 + u2 / 5_322_240.0)));
    }
    let sh = (0.5 * u).sinh();
    1.0 / (u * u) - 1.0 / (4.0 * sh * sh)
}

fn truncated_log_mass(mu: f64, sigma: f64, a: f64, b: f64) -> f64 {
    normal::ln_interval_mass((a - mu) / sigma, (b - mu) / sigma)
}

impl DistributionSpec {
    /// True for the families that admit an exponential tilt on `comp`.
    pub fn supports_tilt(&self, comp: TiltComponent) -> bool {
        match comp {
            TiltComponent::First => matches!(
                self,
                Self::Normal { .. }
                    | Self::LogNormal { .. }
                    | Self::Exponential { .. }
                    | Self::Poisson { .. }
                    | Self::Uniform { .. }
                    | Self::TruncatedNormal { .. }
            ),
            TiltComponent::Second => matches!(self, Self::Normal { .. } | Self::LogNormal { .. }),
        }
    }

    fn require_tilt(&self, comp: TiltComponent) -> Result<()> {
        if !self.supports_tilt(comp) {
            bail!(
                Domain,
                "{} has no {comp} sufficient-statistic component to tilt",
                self.family()
            );
        }
        Ok(())
    }

    /// Value of the sufficient-statistic component `comp` at `x`.
    pub fn sufficient_statistic(&self, x: f64, comp: TiltComponent) -> Result<f64> {
        self.require_tilt(comp)?;
        let t = match self {
            Self::LogNormal { .. } => {
                if x <= 0.0 {
                    bail!(Domain, "log-normal statistic needs x > 0, got {x}");
                }
                x.ln()
            }
            _ => x,
        };
        Ok(match comp {
            TiltComponent::First => t,
            TiltComponent::Second => t * t,
        })
    }

    /// Open interval of τ on which ψ is finite.
    pub fn psi_domain(&self, comp: TiltComponent) -> Result<(f64, f64)> {
        self.require_tilt(comp)?;
        Ok(match (*self, comp) {
            (Self::Normal { sigma, .. } | Self::LogNormal { sigma, .. }, TiltComponent::Second) => {
                (f64::NEG_INFINITY, 0.5 / (sigma * sigma))
            }
            (Self::Exponential { rate }, _) => (f64::NEG_INFINITY, rate),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        })
    }

    fn check_tau(&self, tau: f64, comp: TiltComponent) -> Result<()> {
        let (lo, hi) = self.psi_domain(comp)?;
        if !tau.is_finite() || tau <= lo || tau >= hi {
            let constraint = match (self, comp) {
                (Self::Exponential { .. }, _) => "tau < lambda".to_string(),
                (_, TiltComponent::Second) => "1 - 2*tau*sigma^2 > 0".to_string(),
                _ => "tau finite".to_string(),
            };
            bail!(
                Domain,
                "tau = {tau} outside the domain of psi for {}: requires {constraint}",
                self.family()
            );
        }
        Ok(())
    }

    /// ψ(τ) for the `comp` tilt.
    pub fn cumulant_psi(&self, tau: f64, comp: TiltComponent) -> Result<f64> {
        self.check_tau(tau, comp)?;
        if tau == 0.0 {
            return Ok(0.0);
        }
        let psi = match (*self, comp) {
            (Self::Normal { mu, sigma } | Self::LogNormal { mu, sigma }, TiltComponent::First) => {
                mu * tau + 0.5 * tau * tau * sigma * sigma
            }
            (Self::Normal { mu, sigma } | Self::LogNormal { mu, sigma }, TiltComponent::Second) => {
                let s = 1.0 - 2.0 * tau * sigma * sigma;
                mu * mu * tau / s - 0.5 * s.ln()
            }
            (Self::Exponential { rate }, _) => -(-tau / rate).ln_1p(),
            (Self::Poisson { rate }, _) => rate * tau.exp_m1(),
            (Self::Uniform { a, b }, _) => tau * a + log_expm1_ratio(tau * (b - a)),
            (Self::TruncatedNormal { mu, sigma, a, b }, _) => {
                let shifted = mu + tau * sigma * sigma;
                mu * tau + 0.5 * tau * tau * sigma * sigma + truncated_log_mass(shifted, sigma, a, b)
                    - truncated_log_mass(mu, sigma, a, b)
            }
            _ => unreachable!("require_tilt filtered other families"),
        };
        if !psi.is_finite() {
            bail!(Numerical, "psi({tau}) is not representable for {}", self.family());
        }
        Ok(psi)
    }

    /// (ψ′(τ), ψ″(τ)): mean and variance of T under the tilted law.
    pub fn psi_derivatives(&self, tau: f64, comp: TiltComponent) -> Result<(f64, f64)> {
        self.check_tau(tau, comp)?;
        Ok(match (*self, comp) {
            (Self::Normal { mu, sigma } | Self::LogNormal { mu, sigma }, TiltComponent::First) => {
                (mu + tau * sigma * sigma, sigma * sigma)
            }
            (Self::Normal { mu, sigma } | Self::LogNormal { mu, sigma }, TiltComponent::Second) => {
                let s2 = sigma * sigma;
                let s = 1.0 - 2.0 * tau * s2;
                let m2 = mu * mu;
                (
                    m2 / (s * s) + s2 / s,
                    4.0 * s2 * m2 / (s * s * s) + 2.0 * s2 * s2 / (s * s),
                )
            }
            (Self::Exponential { rate }, _) => {
                let d = rate - tau;
                (1.0 / d, 1.0 / (d * d))
            }
            (Self::Poisson { rate }, _) => {
                let m = rate * tau.exp();
                (m, m)
            }
            (Self::Uniform { a, b }, _) => {
                let w = b - a;
                let u = tau * w;
                (a + w * log_expm1_ratio_d1(u), w * w * log_expm1_ratio_d2(u))
            }
            (Self::TruncatedNormal { mu, sigma, a, b }, _) => truncated_moments(mu + tau * sigma * sigma, sigma, a, b),
            _ => unreachable!("require_tilt filtered other families"),
        })
    }

    /// The density exp(τ·T(x) − ψ(τ))·f(x), expressed in its own family.
    pub fn tilted(&self, tau: f64, comp: TiltComponent) -> Result<DistributionSpec> {
        self.check_tau(tau, comp)?;
        match (*self, comp) {
            (Self::Normal { mu, sigma }, TiltComponent::First) => Self::normal(mu + tau * sigma * sigma, sigma),
            (Self::LogNormal { mu, sigma }, TiltComponent::First) => Self::lognormal(mu + tau * sigma * sigma, sigma),
            (Self::Normal { mu, sigma }, TiltComponent::Second) => {
                let s = 1.0 - 2.0 * tau * sigma * sigma;
                Self::normal(mu / s, sigma / s.sqrt())
            }
            (Self::LogNormal { mu, sigma }, TiltComponent::Second) => {
                let s = 1.0 - 2.0 * tau * sigma * sigma;
                Self::lognormal(mu / s, sigma / s.sqrt())
            }
            (Self::Exponential { rate }, _) => Self::exponential(rate - tau),
            (Self::Poisson { rate }, _) => Self::poisson(rate * tau.exp()),
            (Self::Uniform { a, b }, _) => Self::tilted_uniform(a, b, tau),
            (Self::TruncatedNormal { mu, sigma, a, b }, _) => {
                Self::truncated_normal(mu + tau * sigma * sigma, sigma, a, b)
            }
            _ => unreachable!("require_tilt filtered other families"),
        }
    }
}
