//! Random variate generation.
//!
//! Inverse-CDF for Uniform, Exponential, Triangular, TruncatedNormal and
//! TiltedUniform; ziggurat normals (via `rand_distr`) for Normal and
//! LogNormal; Poisson by sequential inversion for λ ≤ 30 and Hörmann's
//! PTRS transformed rejection above. Every draw is a pure function of the
//! generator state, so a seeded stream reproduces bit-identical output.

use rand::distr::Open01;
use rand::Rng;
use rand_distr::StandardNormal;

use super::DistributionSpec;
use crate::error::{bail, Result};
use crate::numeric::normal;

const POISSON_INVERSION_LIMIT: f64 = 30.0;

/// Draws `n` independent values from `dist`.
pub fn sample<R: Rng + ?Sized>(dist: &DistributionSpec, rng: &mut R, n: usize) -> Result<Vec<f64>> {
    dist.validate()?;
    if n == 0 {
        bail!(Parameter, "sample size must be at least 1");
    }
    Ok((0..n).map(|_| draw(dist, rng)).collect())
}

/// One draw from `dist`; assumes `dist` is valid.
pub fn draw<R: Rng + ?Sized>(dist: &DistributionSpec, rng: &mut R) -> f64 {
    match *dist {
        DistributionSpec::Normal { mu, sigma } => {
            let z: f64 = rng.sample(StandardNormal);
            mu + sigma * z
        }
        DistributionSpec::LogNormal { mu, sigma } => {
            let z: f64 = rng.sample(StandardNormal);
            (mu + sigma * z).exp()
        }
        DistributionSpec::Exponential { rate } => {
            let u: f64 = rng.sample(Open01);
            -(-u).ln_1p() / rate
        }
        DistributionSpec::Poisson { rate } => {
            if rate <= POISSON_INVERSION_LIMIT {
                poisson_inversion(rate, rng)
            } else {
                poisson_ptrs(rate, rng)
            }
        }
        DistributionSpec::Uniform { a, b } => {
            let u: f64 = rng.sample(Open01);
            a + (b - a) * u
        }
        DistributionSpec::Triangular { a, c, b } => {
            let u: f64 = rng.sample(Open01);
            let w = b - a;
            let split = (c - a) / w;
            if u < split {
                a + (u * w * (c - a)).sqrt()
            } else {
                b - ((1.0 - u) * w * (b - c)).sqrt()
            }
        }
        DistributionSpec::TruncatedNormal { mu, sigma, a, b } => {
            let alpha = (a - mu) / sigma;
            let beta = (b - mu) / sigma;
            if alpha >= FAR_TAIL {
                return (mu + sigma * far_tail(alpha, beta, rng)).clamp(a, b);
            }
            if beta <= -FAR_TAIL {
                return (mu - sigma * far_tail(-beta, -alpha, rng)).clamp(a, b);
            }
            let u: f64 = rng.sample(Open01);
            let z = if alpha >= 0.0 {
                // upper tail: invert the survival function
                let q = normal::sf(alpha) - u * normal::interval_mass(alpha, beta);
                -normal::quantile(q)
            } else {
                let p = normal::cdf(alpha) + u * normal::interval_mass(alpha, beta);
                normal::quantile(p)
            };
            (mu + sigma * z).clamp(a, b)
        }
        DistributionSpec::TiltedUniform { a, b, tau } => {
            let u: f64 = rng.sample(Open01);
            let w = b - a;
            let t = tau * w;
            let x = if t.abs() < 1e-12 {
                a + w * u
            } else if tau > 0.0 {
                b + (u + (1.0 - u) * (-t).exp()).ln() / tau
            } else {
                a + (u * t.exp_m1()).ln_1p() / tau
            };
            x.clamp(a, b)
        }
    }
}

// beyond this many standard deviations inversion runs out of precision
const FAR_TAIL: f64 = 30.0;

/// Standard normal restricted to [lo, hi] with lo ≥ FAR_TAIL: truncated
/// exponential proposal with rate lo, accepted with probability
/// exp(−(z − lo)²/2).
fn far_tail<R: Rng + ?Sized>(lo: f64, hi: f64, rng: &mut R) -> f64 {
    let span = (-lo * (hi - lo)).exp_m1();
    loop {
        let u: f64 = rng.sample(Open01);
        let v: f64 = rng.sample(Open01);
        let z = lo - (u * span).ln_1p() / lo;
        let e = z - lo;
        if v.ln() <= -0.5 * e * e {
            return z.min(hi);
        }
    }
}

fn poisson_inversion<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.sample(Open01);
    let mut k = 0u64;
    let mut p = (-rate).exp();
    let mut cdf = p;
    // the cap guards against u landing in the rounding gap at 1 − cdf
    while u > cdf && k < 1000 {
        k += 1;
        p *= rate / k as f64;
        cdf += p;
    }
    k as f64
}

/// Hörmann (1993), "The transformed rejection method for generating
/// Poisson random variables".
fn poisson_ptrs<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> f64 {
    let slam = rate.sqrt();
    let loglam = rate.ln();
    let b = 0.931 + 2.53 * slam;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let vr = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u = rng.sample::<f64, _>(Open01) - 0.5;
        let v: f64 = rng.sample(Open01);
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + rate + 0.43).floor();
        if us >= 0.07 && v <= vr {
            return k;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let lhs = v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln();
        let rhs = -rate + k * loglam - libm::lgamma(k + 1.0);
        if lhs <= rhs {
            return k;
        }
    }
}
