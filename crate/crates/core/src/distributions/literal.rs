//! Textual distribution literals: `normal(mu,sigma)`, `lognormal(mu,sigma)`,
//! `exponential(lambda)`, `poisson(lambda)`, `uniform(a,b)`,
//! `triangular(a,c,b)`, `truncnormal(mu,sigma,a,b)`, and
//! `tiltuniform(a,b,tau)` for the tilted uniform.

use std::fmt;
use std::str::FromStr;

use super::DistributionSpec;
use crate::error::{bail, Error, Result};

impl FromStr for DistributionSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, rest) = match s.split_once('(') {
            Some(parts) => parts,
            None => bail!(Parameter, "distribution literal `{s}` is missing `(`"),
        };
        let Some(args) = rest.trim_end().strip_suffix(')') else {
            bail!(Parameter, "distribution literal `{s}` is missing `)`");
        };
        let args: Vec<f64> = if args.trim().is_empty() {
            Vec::new()
        } else {
            args.split(',')
                .map(|a| {
                    a.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Parameter(format!("`{}` in `{s}` is not a number", a.trim())))
                })
                .collect::<Result<_>>()?
        };
        let name = name.trim().to_ascii_lowercase();
        let expect = |n: usize| -> Result<()> {
            if args.len() != n {
                bail!(
                    Parameter,
                    "`{name}` takes {n} parameter(s), got {} in `{s}`",
                    args.len()
                );
            }
            Ok(())
        };
        match name.as_str() {
            "normal" => {
                expect(2)?;
                Self::normal(args[0], args[1])
            }
            "lognormal" => {
                expect(2)?;
                Self::lognormal(args[0], args[1])
            }
            "exponential" => {
                expect(1)?;
                Self::exponential(args[0])
            }
            "poisson" => {
                expect(1)?;
                Self::poisson(args[0])
            }
            "uniform" => {
                expect(2)?;
                Self::uniform(args[0], args[1])
            }
            "triangular" => {
                expect(3)?;
                Self::triangular(args[0], args[1], args[2])
            }
            "truncnormal" => {
                expect(4)?;
                Self::truncated_normal(args[0], args[1], args[2], args[3])
            }
            "tiltuniform" => {
                expect(3)?;
                Self::tilted_uniform(args[0], args[1], args[2])
            }
            other => bail!(Parameter, "unknown distribution family `{other}`"),
        }
    }
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::Normal { mu, sigma } => write!(f, "normal({mu},{sigma})"),
            Self::LogNormal { mu, sigma } => write!(f, "lognormal({mu},{sigma})"),
            Self::Exponential { rate } => write!(f, "exponential({rate})"),
            Self::Poisson { rate } => write!(f, "poisson({rate})"),
            Self::Uniform { a, b } => write!(f, "uniform({a},{b})"),
            Self::Triangular { a, c, b } => write!(f, "triangular({a},{c},{b})"),
            Self::TruncatedNormal { mu, sigma, a, b } => write!(f, "truncnormal({mu},{sigma},{a},{b})"),
            Self::TiltedUniform { a, b, tau } => write!(f, "tiltuniform({a},{b},{tau})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_every_family() {
        let cases = [
            ("normal(0,1)", DistributionSpec::Normal { mu: 0.0, sigma: 1.0 }),
            (
                " lognormal( 0.5 , 2 ) ",
                DistributionSpec::LogNormal { mu: 0.5, sigma: 2.0 },
            ),
            ("exponential(2)", DistributionSpec::Exponential { rate: 2.0 }),
            ("poisson(3.5)", DistributionSpec::Poisson { rate: 3.5 }),
            ("uniform(-1,1)", DistributionSpec::Uniform { a: -1.0, b: 1.0 }),
            (
                "triangular(0,0.25,1)",
                DistributionSpec::Triangular {
                    a: 0.0,
                    c: 0.25,
                    b: 1.0,
                },
            ),
            (
                "truncnormal(0,1,-1,1e0)",
                DistributionSpec::TruncatedNormal {
                    mu: 0.0,
                    sigma: 1.0,
                    a: -1.0,
                    b: 1.0,
                },
            ),
            (
                "tiltuniform(-1,1,0.5)",
                DistributionSpec::TiltedUniform {
                    a: -1.0,
                    b: 1.0,
                    tau: 0.5,
                },
            ),
        ];
        for (text, want) in cases {
            assert_eq!(text.parse::<DistributionSpec>().unwrap(), want, "{text}");
        }
    }

    #[test]
    fn rejects_malformed() {
        for bad in [
            "normal(0)",
            "normal 0,1",
            "normal(0,1",
            "gamma(1,1)",
            "normal(a,1)",
            "normal(0,-1)",
            "uniform(1,0)",
        ] {
            assert!(bad.parse::<DistributionSpec>().is_err(), "{bad}");
        }
    }

    proptest! {
        #[test]
        fn display_round_trips(mu in -1e6f64..1e6, sigma in 1e-6f64..1e6, lo in -1e3f64..0.0, w in 1e-3f64..1e3) {
            for d in [
                DistributionSpec::Normal { mu, sigma },
                DistributionSpec::Uniform { a: lo, b: lo + w },
                DistributionSpec::TruncatedNormal { mu: lo, sigma, a: lo - w, b: lo + w },
            ] {
                prop_assert_eq!(d.to_string().parse::<DistributionSpec>().unwrap(), d);
            }
        }
    }
}
