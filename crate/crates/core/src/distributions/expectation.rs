//! E[h(X)] by adaptive quadrature (or direct summation for Poisson), with
//! breakpoints placed on the natural scale of each family.

use super::DistributionSpec;
use crate::error::Result;
use crate::numeric::{integrate, pairwise_sum};

const NORMAL_GRID: [f64; 13] = [
    -40.0, -20.0, -10.0, -6.0, -3.0, -1.0, 0.0, 1.0, 3.0, 6.0, 10.0, 20.0, 40.0,
];

/// ∫ h(x) f(x) dμ(x) over the support of `dist`.
pub fn expect<H>(dist: &DistributionSpec, mut h: H) -> Result<f64>
where
    H: FnMut(f64) -> f64,
{
    dist.validate()?;
    match *dist {
        DistributionSpec::Poisson { rate } => {
            let upper = (rate + 40.0 * rate.sqrt() + 40.0).ceil() as u64;
            let terms: Vec<f64> = (0..=upper)
                .map(|k| {
                    let x = k as f64;
                    let w = dist.density(x);
                    if w == 0.0 {
                        0.0
                    } else {
                        h(x) * w
                    }
                })
                .collect();
            Ok(pairwise_sum(&terms))
        }
        DistributionSpec::LogNormal { mu, sigma } => {
            // substitute x = e^y so the integrand is a normal bump in y
            let pts: Vec<f64> = NORMAL_GRID.iter().map(|k| mu + k * sigma).collect();
            integrate(
                |y| {
                    let x = y.exp();
                    let lw = dist.log_density(x) + y;
                    if lw < -745.0 {
                        0.0
                    } else {
                        h(x) * lw.exp()
                    }
                },
                &pts,
            )
        }
        _ => {
            let pts = breakpoints(dist);
            integrate(
                |x| {
                    let lw = dist.log_density(x);
                    if lw < -745.0 {
                        0.0
                    } else {
                        h(x) * lw.exp()
                    }
                },
                &pts,
            )
        }
    }
}

fn breakpoints(dist: &DistributionSpec) -> Vec<f64> {
    let mut pts: Vec<f64> = match *dist {
        DistributionSpec::Normal { mu, sigma } => NORMAL_GRID.iter().map(|k| mu + k * sigma).collect(),
        DistributionSpec::Exponential { rate } => [0.0, 1.0, 3.0, 8.0, 20.0, 50.0, 120.0, 300.0, 745.0]
            .iter()
            .map(|k| k / rate)
            .collect(),
        DistributionSpec::Uniform { a, b } => vec![a, 0.5 * (a + b), b],
        DistributionSpec::Triangular { a, c, b } => vec![a, c, b],
        DistributionSpec::TruncatedNormal { mu, sigma, a, b } => {
            let mut v: Vec<f64> = NORMAL_GRID
                .iter()
                .map(|k| mu + k * sigma)
                .filter(|x| *x > a && *x < b)
                .collect();
            v.push(a);
            v.push(b);
            v
        }
        DistributionSpec::TiltedUniform { a, b, tau } => {
            let mut v = vec![a, 0.5 * (a + b), b];
            if tau != 0.0 {
                let edge = if tau > 0.0 { b } else { a };
                for k in [1.0, 4.0, 16.0, 64.0] {
                    let x = edge - k / tau;
                    if x > a && x < b {
                        v.push(x);
                    }
                }
            }
            v
        }
        DistributionSpec::Poisson { .. } | DistributionSpec::LogNormal { .. } => {
            unreachable!("handled by expect")
        }
    };
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_family_normalises() {
        let cases = [
            "normal(0,1)",
            "normal(-3,0.01)",
            "lognormal(0.3,0.8)",
            "exponential(0.5)",
            "exponential(40)",
            "poisson(0.2)",
            "poisson(3)",
            "poisson(250)",
            "uniform(-1,1)",
            "triangular(0,0.2,1)",
            "triangular(0,0,2)",
            "truncnormal(0,1,-1,1)",
            "truncnormal(2,0.5,-1,1)",
            "tiltuniform(-1,1,1)",
            "tiltuniform(0,1,-300)",
        ];
        for text in cases {
            let d: DistributionSpec = text.parse().unwrap();
            let total = expect(&d, |_| 1.0).unwrap();
            assert!((total - 1.0).abs() < 1e-8, "{text}: {total}");
        }
    }

    #[test]
    fn moments_match_closed_forms() {
        for text in [
            "normal(1,2)",
            "lognormal(0,0.5)",
            "exponential(3)",
            "poisson(7)",
            "uniform(2,5)",
            "triangular(-1,0,3)",
            "truncnormal(0.5,1,-1,1)",
            "tiltuniform(-1,1,-2)",
        ] {
            let d: DistributionSpec = text.parse().unwrap();
            let m = expect(&d, |x| x).unwrap();
            let v = expect(&d, |x| (x - m) * (x - m)).unwrap();
            assert!((m - d.mean()).abs() < 1e-9 * d.mean().abs().max(1.0), "{text}: {m}");
            assert!((v - d.variance()).abs() < 1e-8 * d.variance(), "{text}: {v}");
        }
    }
}
