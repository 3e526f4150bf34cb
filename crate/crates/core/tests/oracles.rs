//! Independent checks of the cumulant functions and the KL-budget solver.

use dpsa::distributions::expect;
use dpsa::prelude::*;
use dpsa::tilt::{kl_gap, solve_tau_numeric, tau_closed_form, LambertBranch};
use proptest::prelude::*;

fn d(s: &str) -> DistributionSpec {
    s.parse().unwrap()
}

use TiltComponent::{First, Second};

fn psi_cases() -> Vec<(DistributionSpec, TiltComponent, Vec<f64>)> {
    vec![
        (d("normal(0.3,1.2)"), First, vec![-1.0, -0.2, 0.5, 1.5]),
        (d("normal(0.3,1.2)"), Second, vec![-2.0, -0.3, 0.1, 0.3]),
        (d("normal(-2,0.5)"), Second, vec![-1.0, 0.5, 1.5]),
        (d("lognormal(0.2,0.5)"), First, vec![-2.0, 0.5, 2.0]),
        (d("lognormal(0.2,0.5)"), Second, vec![-1.0, 0.5, 1.5]),
        (d("exponential(2)"), First, vec![-3.0, -0.5, 1.0, 1.9]),
        (d("poisson(3)"), First, vec![-2.0, -0.5, 0.5, 1.0]),
        (d("uniform(-1,2)"), First, vec![-5.0, -1e-7, 0.05, 1.0, 10.0]),
        (d("truncnormal(0,1,-1,1)"), First, vec![-3.0, -0.5, 0.7, 4.0]),
        (d("truncnormal(1,2,0,3)"), First, vec![-1.0, 0.4, 2.0]),
    ]
}

fn psi_by_quadrature(dist: &DistributionSpec, comp: TiltComponent, tau: f64) -> f64 {
    expect(dist, |x| (tau * dist.sufficient_statistic(x, comp).unwrap()).exp())
        .unwrap()
        .ln()
}

#[test]
fn psi_matches_quadrature() {
    for (dist, comp, taus) in psi_cases() {
        for tau in taus {
            let closed = dist.cumulant_psi(tau, comp).unwrap();
            let quad = psi_by_quadrature(&dist, comp, tau);
            assert!(
                (closed - quad).abs() < 1e-7,
                "{dist} {comp} tau={tau}: {closed} vs {quad}"
            );
        }
    }
}

#[test]
fn psi_derivatives_match_finite_differences() {
    let h = 1e-5;
    for (dist, comp, taus) in psi_cases() {
        for tau in taus {
            let (d1, d2) = dist.psi_derivatives(tau, comp).unwrap();
            let fd1 =
                (dist.cumulant_psi(tau + h, comp).unwrap() - dist.cumulant_psi(tau - h, comp).unwrap()) / (2.0 * h);
            let fd2 = (dist.psi_derivatives(tau + h, comp).unwrap().0 - dist.psi_derivatives(tau - h, comp).unwrap().0)
                / (2.0 * h);
            assert!(
                (d1 - fd1).abs() <= 1e-5 * d1.abs().max(1.0),
                "{dist} {comp} tau={tau}: psi' {d1} vs {fd1}"
            );
            assert!(
                (d2 - fd2).abs() <= 1e-5 * d2.abs().max(1.0),
                "{dist} {comp} tau={tau}: psi'' {d2} vs {fd2}"
            );
        }
    }
}

#[test]
fn psi_identities_at_zero() {
    for (dist, comp, _) in psi_cases() {
        assert_eq!(dist.cumulant_psi(0.0, comp).unwrap(), 0.0, "{dist}");
        let (d1, d2) = dist.psi_derivatives(0.0, comp).unwrap();
        let m = expect(&dist, |x| dist.sufficient_statistic(x, comp).unwrap()).unwrap();
        let v = expect(&dist, |x| (dist.sufficient_statistic(x, comp).unwrap() - m).powi(2)).unwrap();
        assert!((d1 - m).abs() < 1e-10 * m.abs().max(1.0), "{dist} {comp}: {d1} vs {m}");
        assert!((d2 - v).abs() < 1e-10 * v.max(1.0), "{dist} {comp}: {d2} vs {v}");
        if comp == First {
            assert!((d1 - dist_stat_mean(&dist)).abs() < 1e-10 * d1.abs().max(1.0));
        }
    }
}

// mean of T₁: log-scale location for the lognormal, the mean otherwise
fn dist_stat_mean(dist: &DistributionSpec) -> f64 {
    match *dist {
        DistributionSpec::LogNormal { mu, .. } => mu,
        _ => dist.mean(),
    }
}

/// Every implemented tilt: (distribution, component).
fn tilt_cases() -> Vec<(DistributionSpec, TiltComponent)> {
    vec![
        (d("normal(0,1)"), First),
        (d("normal(1.5,0.3)"), First),
        (d("normal(0,1)"), Second),
        (d("normal(2,0.7)"), Second),
        (d("lognormal(0,1)"), First),
        (d("lognormal(0.5,0.4)"), Second),
        (d("exponential(0.5)"), First),
        (d("exponential(2)"), First),
        (d("poisson(1)"), First),
        (d("poisson(5)"), First),
        (d("uniform(-1,1)"), First),
        (d("uniform(0,3)"), First),
        (d("truncnormal(0,1,-1,1)"), First),
        (d("truncnormal(0.5,2,-1,4)"), First),
    ]
}

#[test]
fn kl_of_every_tilt_equals_budget() {
    for (dist, comp) in tilt_cases() {
        for delta in [0.1, 0.5] {
            for branch in [Branch::Negative, Branch::Positive] {
                let sol = match solve_tau(&dist, PerturbationMode::Tilt(comp), delta, branch) {
                    Ok(s) => s,
                    // the only admissible gap: Poisson's negative root needs δ < λ
                    Err(Error::NoSolution(_)) => {
                        assert!(matches!(dist, DistributionSpec::Poisson { rate } if delta >= rate));
                        continue;
                    }
                    Err(e) => panic!("{dist} {comp} {branch} {delta}: {e}"),
                };
                let g = kl_gap(&dist, comp, sol.tau, delta).unwrap();
                assert!(g.abs() < 1e-10, "{dist} {comp} {branch} {delta}: residual {g}");
                assert_eq!(sol.tau.signum(), branch.sign(), "{dist} {comp} {branch}");
                let kl = kl_divergence(&sol.perturbed, &dist).unwrap();
                assert!((kl - delta).abs() < 1e-6, "{dist} {comp} {branch} {delta}: KL {kl}");
            }
        }
    }
}

#[test]
fn tilts_stay_in_family() {
    for (dist, comp) in tilt_cases() {
        let sol = solve_tau(&dist, PerturbationMode::Tilt(comp), 0.2, Branch::Positive).unwrap();
        let want = match dist.family() {
            Family::Uniform => Family::TiltedUniform,
            f => f,
        };
        assert_eq!(sol.perturbed.family(), want, "{dist}");
    }
}

#[test]
fn tiny_budget_gives_tiny_tilt() {
    for (dist, comp) in tilt_cases() {
        for branch in [Branch::Negative, Branch::Positive] {
            let sol = solve_tau(&dist, PerturbationMode::Tilt(comp), 1e-8, branch).unwrap();
            assert!(sol.tau.abs() < 1e-3, "{dist} {comp} {branch}: {}", sol.tau);
        }
    }
}

#[test]
fn normal_closed_form_matches_solver() {
    for sigma in [0.3, 1.0, 4.0] {
        let dist = DistributionSpec::normal(-1.0, sigma).unwrap();
        for delta in [0.01, 0.1, 0.5, 1.0] {
            for branch in [Branch::Negative, Branch::Positive] {
                let closed = tau_closed_form(&dist, First, delta, branch).unwrap().unwrap();
                let numeric = solve_tau_numeric(&dist, First, delta, branch).unwrap();
                assert!(
                    (closed - numeric).abs() < 1e-10,
                    "sigma={sigma} delta={delta}: {closed} vs {numeric}"
                );
            }
        }
    }
}

/// Plain bisection on G, written against the textbook cumulants so it shares
/// nothing with the library's solver.
fn bisect_root(g: impl Fn(f64) -> f64, sign: f64, limit: f64) -> Option<f64> {
    let mut lo = 0.0;
    let mut hi = sign * 1e-3;
    while g(hi) < 0.0 {
        lo = hi;
        hi = if (2.0 * hi).abs() < limit {
            2.0 * hi
        } else {
            0.5 * (hi + sign * limit)
        };
        if hi.abs() > 1e3 || hi == lo {
            return None;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

#[test]
fn lambert_formulas_match_bisection() {
    let deltas = [0.01, 0.05, 0.1, 0.3, 0.5, 1.0, 2.0, 4.0];
    for lambda in [0.5, 1.0, 2.0] {
        let dist = DistributionSpec::exponential(lambda).unwrap();
        let g = |t: f64, delta: f64| t / (lambda - t) - (lambda / (lambda - t)).ln() - delta;
        for delta in deltas {
            for branch in [Branch::Negative, Branch::Positive] {
                let want = bisect_root(
                    |t| g(t, delta),
                    branch.sign(),
                    if branch == Branch::Positive {
                        lambda
                    } else {
                        f64::INFINITY
                    },
                )
                .unwrap();
                let lw = tau_closed_form(&dist, First, delta, branch).unwrap().unwrap();
                let solved = solve_tau(&dist, PerturbationMode::Tilt(First), delta, branch)
                    .unwrap()
                    .tau;
                assert!(
                    (lw - want).abs() < 1e-9 * want.abs().max(1.0),
                    "exp({lambda}) {delta} {branch}: {lw} vs {want}"
                );
                assert!((solved - want).abs() < 1e-9 * want.abs().max(1.0));
            }
        }
    }
    for lambda in [1.0, 2.0, 5.0] {
        let dist = DistributionSpec::poisson(lambda).unwrap();
        let g = |t: f64, delta: f64| t * lambda * t.exp() - lambda * t.exp_m1() - delta;
        for delta in deltas {
            for branch in [Branch::Negative, Branch::Positive] {
                // G(τ) → λ − δ as τ → −∞, so the negative root needs δ < λ;
                // at δ = λ the limit is 0 and bisection would chase rounding
                let want = if branch == Branch::Negative && delta >= lambda {
                    None
                } else {
                    bisect_root(|t| g(t, delta), branch.sign(), f64::INFINITY)
                };
                let lw = tau_closed_form(&dist, First, delta, branch).unwrap();
                match want {
                    Some(want) => {
                        let lw = lw.unwrap();
                        assert!(
                            (lw - want).abs() < 1e-9 * want.abs().max(1.0),
                            "poisson({lambda}) {delta} {branch}: {lw} vs {want}"
                        );
                    }
                    None => {
                        assert!(branch == Branch::Negative && delta >= lambda);
                        assert!(matches!(lw, Err(Error::NoSolution(_))));
                    }
                }
            }
        }
    }
}

#[test]
fn lambert_special_values() {
    assert_eq!(lambert_w(LambertBranch::W0, 0.0).unwrap(), 0.0);
    assert!((lambert_w(LambertBranch::W0, std::f64::consts::E).unwrap() - 1.0).abs() < 1e-15);
    let bp = -(-1.0f64).exp();
    assert!((lambert_w(LambertBranch::Wm1, bp).unwrap() + 1.0).abs() < 1e-7);
    assert!((lambert_w(LambertBranch::W0, bp).unwrap() + 1.0).abs() < 1e-7);
}

#[test]
fn delta_max_grid_extremes_match_closed_form() {
    for tau in [-2.0, 0.3, 1.0, 5.0] {
        let p = DistributionSpec::tilted_uniform(-1.0, 1.0, tau).unwrap();
        let q = d("uniform(-1,1)");
        let (mut r, mut big_r) = (f64::INFINITY, 0.0f64);
        for k in 0..10_000 {
            let x = -1.0 + 2.0 * k as f64 / 9_999.0;
            let ratio = p.density(x) / q.density(x);
            r = r.min(ratio);
            big_r = big_r.max(ratio);
        }
        let grid = (big_r - r).powi(2) / (4.0 * r * big_r);
        let got = delta_max(&p, &q).unwrap();
        assert!((got - grid).abs() < 1e-9 * grid.max(1.0), "tau={tau}: {got} vs {grid}");
        let kl = kl_divergence(&p, &q).unwrap();
        assert!(kl <= got + 1e-12);
    }
}

#[test]
fn second_component_solution_is_standard_tilt() {
    // tilting x² of N(μ, σ²) by τ gives N(μ/s, σ²/s) with s = 1 − 2τσ²
    let dist = d("normal(1.2,0.8)");
    for branch in [Branch::Negative, Branch::Positive] {
        let sol = solve_tau(&dist, PerturbationMode::Tilt(Second), 0.3, branch).unwrap();
        let s = 1.0 - 2.0 * sol.tau * 0.64;
        let DistributionSpec::Normal { mu, sigma } = sol.perturbed else {
            panic!()
        };
        assert!((mu - 1.2 / s).abs() < 1e-12);
        assert!((sigma * sigma - 0.64 / s).abs() < 1e-12);
    }
}

fn tilt_strategy() -> impl Strategy<Value = (DistributionSpec, TiltComponent)> {
    prop_oneof![
        (-5.0f64..5.0, 0.1f64..5.0).prop_map(|(m, s)| (DistributionSpec::normal(m, s).unwrap(), First)),
        (-5.0f64..5.0, 0.1f64..5.0).prop_map(|(m, s)| (DistributionSpec::normal(m, s).unwrap(), Second)),
        (-1.0f64..1.0, 0.1f64..2.0).prop_map(|(m, s)| (DistributionSpec::lognormal(m, s).unwrap(), Second)),
        (0.1f64..10.0).prop_map(|l| (DistributionSpec::exponential(l).unwrap(), First)),
        (0.5f64..20.0).prop_map(|l| (DistributionSpec::poisson(l).unwrap(), First)),
        (-3.0f64..3.0, 0.1f64..5.0).prop_map(|(a, w)| (DistributionSpec::uniform(a, a + w).unwrap(), First)),
        (-1.0f64..1.0, 0.2f64..3.0)
            .prop_map(|(m, s)| (DistributionSpec::truncated_normal(m, s, -1.0, 1.5).unwrap(), First)),
    ]
}

fn branch_strategy() -> impl Strategy<Value = Branch> {
    prop_oneof![Just(Branch::Negative), Just(Branch::Positive)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn solutions_satisfy_the_budget((dist, comp) in tilt_strategy(), branch in branch_strategy(), delta in 1e-3f64..2.0) {
        match solve_tau(&dist, PerturbationMode::Tilt(comp), delta, branch) {
            Ok(sol) => {
                let g = kl_gap(&dist, comp, sol.tau, delta).unwrap();
                prop_assert!(g.abs() < 1e-10, "{} {} {}: residual {}", dist, branch, delta, g);
                prop_assert_eq!(sol.tau.signum(), branch.sign());
                sol.perturbed.validate().unwrap();
            }
            Err(Error::NoSolution(_)) => {
                let poisson_gap = matches!(dist, DistributionSpec::Poisson { rate } if delta >= rate && branch == Branch::Negative);
                prop_assert!(poisson_gap, "{} {} {}", dist, branch, delta);
            }
            Err(e) => prop_assert!(false, "{}: {}", dist, e),
        }
    }

    #[test]
    fn tau_grows_with_budget((dist, comp) in tilt_strategy(), branch in branch_strategy(), d1 in 1e-3f64..1.0, step in 1e-3f64..1.0) {
        let mode = PerturbationMode::Tilt(comp);
        if let (Ok(a), Ok(b)) = (solve_tau(&dist, mode, d1, branch), solve_tau(&dist, mode, d1 + step, branch)) {
            prop_assert!(b.tau.abs() > a.tau.abs());
        }
    }

    #[test]
    fn psi_is_convex((dist, comp) in tilt_strategy(), frac in -0.95f64..0.95) {
        let (lo, hi) = dist.psi_domain(comp).unwrap();
        let tau = if frac >= 0.0 { frac * hi.min(20.0) } else { -frac * lo.max(-20.0) };
        let (_, d2) = dist.psi_derivatives(tau, comp).unwrap();
        prop_assert!(d2 > 0.0, "{} tau={}: {}", dist, tau, d2);
    }

    #[test]
    fn lambert_residuals(t in 0.0f64..1.0, big in -300.0f64..300.0) {
        let bp = -(-1.0f64).exp();
        let x = bp * (1.0 - t);
        if x < 0.0 {
            for branch in [LambertBranch::W0, LambertBranch::Wm1] {
                let w = lambert_w(branch, x).unwrap();
                prop_assert!((w * w.exp() - x).abs() < 1e-12);
            }
        }
        let x = 10f64.powf(big / 10.0);
        let w = lambert_w(LambertBranch::W0, x).unwrap();
        prop_assert!((w * w.exp() - x).abs() < 1e-12 * x.max(1.0));
    }

    #[test]
    fn kl_is_nonnegative_and_bounded(tau in -5.0f64..5.0) {
        let p = DistributionSpec::tilted_uniform(0.0, 2.0, tau).unwrap();
        let q = DistributionSpec::uniform(0.0, 2.0).unwrap();
        let kl = kl_divergence(&p, &q).unwrap();
        prop_assert!(kl >= 0.0);
        prop_assert!(kl <= delta_max(&p, &q).unwrap() + 1e-12);
    }
}
