//! Marginal input distributions.
//!
//! A [`DistributionSpec`] is a validated parameter set for one of the
//! supported families. Densities, moments and support live here; the
//! exponential-tilting machinery (sufficient statistics and the cumulant
//! function ψ) is in [`cumulant`], random variate generation in [`sampling`]
//! and the textual literal syntax in [`literal`].

pub mod cumulant;
pub mod expectation;
pub mod literal;
pub mod sampling;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};
use crate::numeric::normal;

pub use cumulant::TiltComponent;
pub use expectation::expect;
pub use sampling::sample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    Normal,
    LogNormal,
    Exponential,
    Poisson,
    Uniform,
    Triangular,
    TruncatedNormal,
    TiltedUniform,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Family::Normal => "normal",
            Family::LogNormal => "lognormal",
            Family::Exponential => "exponential",
            Family::Poisson => "poisson",
            Family::Uniform => "uniform",
            Family::Triangular => "triangular",
            Family::TruncatedNormal => "truncnormal",
            Family::TiltedUniform => "tiltuniform",
        };
        f.write_str(name)
    }
}

/// A marginal distribution with its parameters.
///
/// Build through the checked constructors (or [`str::parse`]) so that the
/// parameter invariants hold; [`DistributionSpec::validate`] re-checks a
/// value assembled by hand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DistributionSpec {
    Normal {
        mu: f64,
        sigma: f64,
    },
    /// log X ~ N(mu, sigma²).
    LogNormal {
        mu: f64,
        sigma: f64,
    },
    Exponential {
        rate: f64,
    },
    Poisson {
        rate: f64,
    },
    Uniform {
        a: f64,
        b: f64,
    },
    /// Lower bound `a`, mode `c`, upper bound `b`.
    Triangular {
        a: f64,
        c: f64,
        b: f64,
    },
    /// N(mu, sigma²) restricted to [a, b] and renormalised.
    TruncatedNormal {
        mu: f64,
        sigma: f64,
        a: f64,
        b: f64,
    },
    /// Density ∝ exp(tau·x) on [a, b]: the exponential tilt of U[a, b].
    TiltedUniform {
        a: f64,
        b: f64,
        tau: f64,
    },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        bail!(Parameter, "{name} must be finite and > 0, got {v}");
    }
    Ok(())
}

fn finite(name: &str, v: f64) -> Result<()> {
    if !v.is_finite() {
        bail!(Parameter, "{name} must be finite, got {v}");
    }
    Ok(())
}

fn ordered(a: f64, b: f64) -> Result<()> {
    finite("lower bound", a)?;
    finite("upper bound", b)?;
    if b <= a {
        bail!(Parameter, "bounds must satisfy a < b, got a={a}, b={b}");
    }
    Ok(())
}

impl DistributionSpec {
    pub fn normal(mu: f64, sigma: f64) -> Result<Self> {
        Self::Normal { mu, sigma }.validated()
    }

    pub fn lognormal(mu: f64, sigma: f64) -> Result<Self> {
        Self::LogNormal { mu, sigma }.validated()
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        Self::Exponential { rate }.validated()
    }

    pub fn poisson(rate: f64) -> Result<Self> {
        Self::Poisson { rate }.validated()
    }

    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        Self::Uniform { a, b }.validated()
    }

    pub fn triangular(a: f64, c: f64, b: f64) -> Result<Self> {
        Self::Triangular { a, c, b }.validated()
    }

    pub fn truncated_normal(mu: f64, sigma: f64, a: f64, b: f64) -> Result<Self> {
        Self::TruncatedNormal { mu, sigma, a, b }.validated()
    }

    pub fn tilted_uniform(a: f64, b: f64, tau: f64) -> Result<Self> {
        Self::TiltedUniform { a, b, tau }.validated()
    }

    fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Normal { mu, sigma } | Self::LogNormal { mu, sigma } => {
                finite("mu", mu)?;
                positive("sigma", sigma)
            }
            Self::Exponential { rate } | Self::Poisson { rate } => positive("rate", rate),
            Self::Uniform { a, b } => ordered(a, b),
            Self::Triangular { a, c, b } => {
                ordered(a, b)?;
                finite("mode", c)?;
                if !(a <= c && c <= b) {
                    bail!(Parameter, "triangular mode {c} must lie in [{a}, {b}]");
                }
                Ok(())
            }
            Self::TruncatedNormal { mu, sigma, a, b } => {
                finite("mu", mu)?;
                positive("sigma", sigma)?;
                ordered(a, b)?;
                if !normal::ln_interval_mass((a - mu) / sigma, (b - mu) / sigma).is_finite() {
                    bail!(
                        Parameter,
                        "truncation [{a}, {b}] carries no mass under N({mu}, {sigma}²)"
                    );
                }
                Ok(())
            }
            Self::TiltedUniform { a, b, tau } => {
                ordered(a, b)?;
                finite("tau", tau)
            }
        }
    }

    pub fn family(&self) -> Family {
        match self {
            Self::Normal { .. } => Family::Normal,
            Self::LogNormal { .. } => Family::LogNormal,
            Self::Exponential { .. } => Family::Exponential,
            Self::Poisson { .. } => Family::Poisson,
            Self::Uniform { .. } => Family::Uniform,
            Self::Triangular { .. } => Family::Triangular,
            Self::TruncatedNormal { .. } => Family::TruncatedNormal,
            Self::TiltedUniform { .. } => Family::TiltedUniform,
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, Self::Poisson { .. })
    }

    /// Closed support `[lo, hi]`; infinite ends are ±∞.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            Self::Normal { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Self::LogNormal { .. } | Self::Exponential { .. } | Self::Poisson { .. } => (0.0, f64::INFINITY),
            Self::Uniform { a, b }
            | Self::Triangular { a, b, .. }
            | Self::TruncatedNormal { a, b, .. }
            | Self::TiltedUniform { a, b, .. } => (a, b),
        }
    }

    pub fn has_bounded_support(&self) -> bool {
        let (lo, hi) = self.support();
        lo.is_finite() && hi.is_finite()
    }

    /// Natural log of the density (probability mass for Poisson) at `x`;
    /// −∞ outside the support.
    pub fn log_density(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        match *self {
            Self::Normal { mu, sigma } => normal::ln_pdf((x - mu) / sigma) - sigma.ln(),
            Self::LogNormal { mu, sigma } => {
                if x <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                let lx = x.ln();
                normal::ln_pdf((lx - mu) / sigma) - sigma.ln() - lx
            }
            Self::Exponential { rate } => {
                if x < 0.0 {
                    f64::NEG_INFINITY
                } else {
                    rate.ln() - rate * x
                }
            }
            Self::Poisson { rate } => {
                if x < 0.0 || x.fract() != 0.0 {
                    f64::NEG_INFINITY
                } else {
                    x * rate.ln() - rate - libm::lgamma(x + 1.0)
                }
            }
            Self::Uniform { a, b } => {
                if x < a || x > b {
                    f64::NEG_INFINITY
                } else {
                    -(b - a).ln()
                }
            }
            Self::Triangular { a, c, b } => {
                if x < a || x > b {
                    return f64::NEG_INFINITY;
                }
                let w = b - a;
                let d = if x < c {
                    2.0 * (x - a) / (w * (c - a))
                } else if x > c {
                    2.0 * (b - x) / (w * (b - c))
                } else {
                    2.0 / w
                };
                d.ln()
            }
            Self::TruncatedNormal { mu, sigma, a, b } => {
                if x < a || x > b {
                    return f64::NEG_INFINITY;
                }
                let ln_mass = normal::ln_interval_mass((a - mu) / sigma, (b - mu) / sigma);
                normal::ln_pdf((x - mu) / sigma) - sigma.ln() - ln_mass
            }
            Self::TiltedUniform { a, b, tau } => {
                if x < a || x > b {
                    return f64::NEG_INFINITY;
                }
                let w = b - a;
                tau * (x - a) - w.ln() - cumulant::log_expm1_ratio(tau * w)
            }
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        self.log_density(x).exp()
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Self::Normal { mu, .. } => mu,
            Self::LogNormal { mu, sigma } => (mu + 0.5 * sigma * sigma).exp(),
            Self::Exponential { rate } => 1.0 / rate,
            Self::Poisson { rate } => rate,
            Self::Uniform { a, b } => 0.5 * (a + b),
            Self::Triangular { a, c, b } => (a + b + c) / 3.0,
            Self::TruncatedNormal { mu, sigma, a, b } => truncated_moments(mu, sigma, a, b).0,
            Self::TiltedUniform { a, b, tau } => {
                let w = b - a;
                a + w * cumulant::log_expm1_ratio_d1(tau * w)
            }
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Self::Normal { sigma, .. } => sigma * sigma,
            Self::LogNormal { mu, sigma } => {
                let s2 = sigma * sigma;
                s2.exp_m1() * (2.0 * mu + s2).exp()
            }
            Self::Exponential { rate } => 1.0 / (rate * rate),
            Self::Poisson { rate } => rate,
            Self::Uniform { a, b } => (b - a) * (b - a) / 12.0,
            Self::Triangular { a, c, b } => (a * a + b * b + c * c - a * b - a * c - b * c) / 18.0,
            Self::TruncatedNormal { mu, sigma, a, b } => truncated_moments(mu, sigma, a, b).1,
            Self::TiltedUniform { a, b, tau } => {
                let w = b - a;
                w * w * cumulant::log_expm1_ratio_d2(tau * w)
            }
        }
    }

    /// Likelihood ratio `self(x) / other(x)`.
    ///
    /// Evaluated in log space; ratios below e⁻⁷⁰⁰ are flushed to zero, and
    /// points outside `self`'s support give zero. Two uniforms have a
    /// constant ratio on the common support, returned as the exact width
    /// quotient.
    pub fn likelihood_ratio(&self, other: &DistributionSpec, x: f64) -> f64 {
        if let (Self::Uniform { a: pa, b: pb }, Self::Uniform { a: qa, b: qb }) = (self, other) {
            if x < *pa || x > *pb || x < *qa || x > *qb {
                return 0.0;
            }
            return (qb - qa) / (pb - pa);
        }
        let lp = self.log_density(x);
        if lp == f64::NEG_INFINITY {
            return 0.0;
        }
        let lq = other.log_density(x);
        if lq == f64::NEG_INFINITY {
            // unreachable for points drawn from `other`
            return 0.0;
        }
        let lr = lp - lq;
        if lr < -700.0 {
            0.0
        } else {
            lr.exp()
        }
    }
}

/// Mean and variance of N(mu, sigma²) truncated to [a, b].
pub(crate) fn truncated_moments(mu: f64, sigma: f64, a: f64, b: f64) -> (f64, f64) {
    let (r, s) = normal::truncated_ratios((a - mu) / sigma, (b - mu) / sigma);
    (mu + sigma * r, (sigma * sigma * (1.0 + s - r * r)).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn log_density_examples() {
        let n = DistributionSpec::normal(0.0, 1.0).unwrap();
        assert!((n.log_density(0.0) + 0.5 * (2.0 * PI).ln()).abs() < 1e-15);
        let u = DistributionSpec::uniform(-1.0, 1.0).unwrap();
        assert_eq!(u.log_density(0.0), 0.5f64.ln());
        assert_eq!(u.log_density(1.5), f64::NEG_INFINITY);
        let e = DistributionSpec::exponential(2.0).unwrap();
        assert!((e.log_density(1.0) - (2f64.ln() - 2.0)).abs() < 1e-15);
        assert_eq!(e.log_density(-0.1), f64::NEG_INFINITY);
        let p = DistributionSpec::poisson(3.0).unwrap();
        assert!((p.log_density(2.0) - (9.0 * (-3f64).exp() / 2.0).ln()).abs() < 1e-14);
        assert_eq!(p.log_density(1.5), f64::NEG_INFINITY);
        assert_eq!(p.log_density(-1.0), f64::NEG_INFINITY);
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(DistributionSpec::normal(0.0, 0.0).is_err());
        assert!(DistributionSpec::normal(f64::NAN, 1.0).is_err());
        assert!(DistributionSpec::exponential(-1.0).is_err());
        assert!(DistributionSpec::poisson(0.0).is_err());
        assert!(DistributionSpec::uniform(1.0, 1.0).is_err());
        assert!(DistributionSpec::triangular(0.0, 2.0, 1.0).is_err());
        assert!(DistributionSpec::triangular(0.0, 0.0, 1.0).is_ok());
        assert!(DistributionSpec::truncated_normal(0.0, 1.0, 1.0, -1.0).is_err());
        assert!(DistributionSpec::truncated_normal(0.0, 1.0, 50.0, 60.0).is_ok());
        assert!(DistributionSpec::truncated_normal(0.0, 1.0, 1e200, 2e200).is_err());
    }

    #[test]
    fn uniform_ratio_is_exact_width_quotient() {
        let p = DistributionSpec::uniform(-1.0, 0.5).unwrap();
        let q = DistributionSpec::uniform(-1.0, 1.0).unwrap();
        assert_eq!(p.likelihood_ratio(&q, 0.2), 4.0 / 3.0);
        assert_eq!(p.likelihood_ratio(&q, 0.7), 0.0);
    }

    #[test]
    fn truncated_moments_symmetric_case() {
        let (m, v) = truncated_moments(0.0, 1.0, -1.0, 1.0);
        assert!(m.abs() < 1e-16);
        // 1 − 2φ(1)/(Φ(1) − Φ(−1))
        assert!((v - 0.291_125_094_772_793_2).abs() < 1e-14, "{v}");
    }

    #[test]
    fn tilted_uniform_at_zero_is_uniform() {
        let t = DistributionSpec::tilted_uniform(-1.0, 1.0, 0.0).unwrap();
        assert!((t.log_density(0.3) - 0.5f64.ln()).abs() < 1e-15);
        assert!(t.mean().abs() < 1e-15);
        assert!((t.variance() - 1.0 / 3.0).abs() < 1e-15);
    }
}
