//! The built-in acceptance suite behind `dpsa verify`.
//!
//! Each criterion returns a verdict with a one-line detail. Elapsed times are
//! kept apart from the verdict text so that two runs print the same report.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use dpsa::numeric::normal;
use dpsa::numeric::LambertBranch;
use dpsa::prelude::*;
use dpsa::tilt::{solve_tau_numeric, tau_closed_form};
use rayon::prelude::*;

use crate::run::run;

/// 1 − Φ(3/√1.26), computed at 30 digits with an arbitrary-precision library.
pub const REFERENCE_PF: f64 = 3.763_157_583_228_943e-3;

#[derive(Debug, Clone, Copy)]
pub struct Scale {
    pub fast: bool,
}

impl Scale {
    fn n(&self, full: usize) -> usize {
        if self.fast {
            full / 10
        } else {
            full
        }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub budget: Duration,
}

impl Outcome {
    pub fn line(&self) -> String {
        format!(
            "[{}] {:>2}. {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.detail
        )
    }

    pub fn timing(&self) -> String {
        let over = if self.elapsed > self.budget { " OVER BUDGET" } else { "" };
        format!(
            "{:>2}. {:.2} s (budget {} s){over}",
            self.id,
            self.elapsed.as_secs_f64(),
            self.budget.as_secs()
        )
    }
}

type Verdict = Result<(bool, String)>;

pub struct Criterion {
    pub id: u8,
    pub title: &'static str,
    pub budget_s: u64,
    check: fn(Scale) -> Verdict,
}

pub const CRITERIA: [Criterion; 10] = [
    Criterion {
        id: 1,
        title: "reference probability",
        budget_s: 10,
        check: reference_probability,
    },
    Criterion {
        id: 2,
        title: "closed-form tilts and Lambert W",
        budget_s: 1,
        check: closed_forms,
    },
    Criterion {
        id: 3,
        title: "KL budget exactness",
        budget_s: 5,
        check: kl_exactness,
    },
    Criterion {
        id: 4,
        title: "reweighting oracle",
        budget_s: 30,
        check: reweighting_oracle,
    },
    Criterion {
        id: 5,
        title: "ranking of the linear example",
        budget_s: 60,
        check: ranking,
    },
    Criterion {
        id: 6,
        title: "covariance of the two estimators",
        budget_s: 120,
        check: covariance,
    },
    Criterion {
        id: 7,
        title: "delta-method variance and normality",
        budget_s: 300,
        check: delta_method,
    },
    Criterion {
        id: 8,
        title: "boundary shift semantics",
        budget_s: 10,
        check: boundary_shift,
    },
    Criterion {
        id: 9,
        title: "economy of evaluations",
        budget_s: 10,
        check: economy,
    },
    Criterion {
        id: 10,
        title: "determinism across thread counts",
        budget_s: 30,
        check: determinism,
    },
];

pub fn run_criterion(c: &Criterion, scale: Scale) -> Outcome {
    let start = Instant::now();
    let (passed, detail) = match (c.check)(scale) {
        Ok(v) => v,
        Err(e) => (false, format!("error: {e}")),
    };
    Outcome {
        id: c.id,
        title: c.title,
        passed,
        detail,
        elapsed: start.elapsed(),
        budget: Duration::from_secs(c.budget_s),
    }
}

/// Runs every criterion in order, calling `each` as soon as one finishes.
pub fn run_all(scale: Scale, mut each: impl FnMut(&Outcome)) -> Vec<Outcome> {
    CRITERIA
        .iter()
        .map(|c| {
            let o = run_criterion(c, scale);
            each(&o);
            o
        })
        .collect()
}

fn normal01() -> DistributionSpec {
    DistributionSpec::normal(0.0, 1.0).expect("valid")
}

fn linear_example() -> (LinearLimitState, Vec<DistributionSpec>) {
    let model = LinearLimitState::new(3.0, vec![0.1, 0.5, 1.0]).expect("valid");
    (model, vec![normal01(); 3])
}

fn round_sig(v: f64, digits: usize) -> f64 {
    format!("{:.*e}", digits - 1, v).parse().expect("formatted float")
}

fn reference_probability(scale: Scale) -> Verdict {
    let (model, m) = linear_example();
    let p = analytic_pf_linear(&model, &m)?;
    let rel = (p - REFERENCE_PF).abs() / REFERENCE_PF;
    let n = scale.n(1_000_000);
    let est = estimate_pf(&build_sample(&model, &m, n, 1)?);
    let tol = 3.0 * (p * (1.0 - p) / n as f64).sqrt();
    let diff = (est.p_hat - p).abs();
    let ok =
        rel < 1e-12 && round_sig(p, 3) == round_sig(REFERENCE_PF, 3) && (3.7e-3..3.8e-3).contains(&p) && diff <= tol;
    Ok((
        ok,
        format!(
            "closed form {:.3e} (rel. err {rel:.1e}, 3.7e-3 to 2 figures truncated); estimate {:.4e} at N={n}, |diff| {diff:.2e} vs 3 sd {tol:.2e}",
            p,
            est.p_hat
        ),
    ))
}

fn closed_forms(_: Scale) -> Verdict {
    let mut failures = Vec::new();
    let mut checked = 0;

    for (mu, sigma) in [(0.0, 1.0), (1.5, 0.5), (-2.0, 2.0)] {
        let d = DistributionSpec::normal(mu, sigma)?;
        for delta in [0.01f64, 0.1, 0.5, 1.0] {
            for branch in [Branch::Negative, Branch::Positive] {
                let expected = branch.sign() * (2.0 * delta).sqrt() / sigma;
                let numeric = solve_tau_numeric(&d, TiltComponent::First, delta, branch)?;
                checked += 1;
                if (numeric - expected).abs() > 1e-10 {
                    failures.push(format!("{d} delta={delta} {branch}: {numeric} vs {expected}"));
                }
            }
        }
    }

    let deltas = [0.01, 0.05, 0.1, 0.3, 0.7, 1.5, 3.0];
    let mut lambert_cases = Vec::new();
    for rate in [0.5, 1.0, 2.0] {
        lambert_cases.push(DistributionSpec::exponential(rate)?);
    }
    for rate in [1.0, 2.0, 5.0] {
        lambert_cases.push(DistributionSpec::poisson(rate)?);
    }
    let mut infeasible = 0;
    for d in &lambert_cases {
        for delta in deltas {
            for branch in [Branch::Negative, Branch::Positive] {
                let closed = tau_closed_form(d, TiltComponent::First, delta, branch)
                    .ok_or_else(|| Error::Unsupported(format!("no closed form for {d}")))?;
                let numeric = solve_tau_numeric(d, TiltComponent::First, delta, branch);
                checked += 1;
                match (closed, numeric) {
                    (Ok(c), Ok(n)) => {
                        if (c - n).abs() > 1e-9 * n.abs().max(1.0) {
                            failures.push(format!("{d} delta={delta} {branch}: Lambert {c} vs root {n}"));
                        }
                    }
                    (Err(Error::NoSolution(_)), Err(Error::NoSolution(_))) => infeasible += 1,
                    (c, n) => failures.push(format!("{d} delta={delta} {branch}: Lambert {c:?} vs root {n:?}")),
                }
            }
        }
    }

    // identity checks on both real branches
    let e_inv = (-1.0f64).exp();
    for k in 1..2000 {
        let x = -e_inv + (k as f64 / 2000.0) * e_inv;
        for branch in [LambertBranch::W0, LambertBranch::Wm1] {
            let w = lambert_w(branch, x)?;
            let on_branch = match branch {
                LambertBranch::W0 => w >= -1.0,
                LambertBranch::Wm1 => w <= -1.0,
            };
            checked += 1;
            if !on_branch || (w * w.exp() - x).abs() > 1e-12 {
                failures.push(format!("W({x}) = {w} on {branch:?}"));
            }
        }
    }
    for k in 0..400 {
        let x = 10f64.powf(-6.0 + k as f64 * 0.03);
        let w = lambert_w(LambertBranch::W0, x)?;
        checked += 1;
        if (w * w.exp() - x).abs() > 1e-13 * x.max(1.0) {
            failures.push(format!("W0({x}) = {w}"));
        }
    }
    // the real domain ends exactly at -1/e
    for branch in [LambertBranch::W0, LambertBranch::Wm1] {
        checked += 2;
        if (lambert_w(branch, -e_inv)? + 1.0).abs() > 1e-7 {
            failures.push(format!("{branch:?} at the branch point"));
        }
        for below in [-e_inv * (1.0 + 1e-9), -e_inv - 1e-4, -0.5] {
            if lambert_w(branch, below).is_ok() {
                failures.push(format!("{branch:?} accepted {below} below -1/e"));
            }
        }
    }
    checked += 1;
    if (lambert_w(LambertBranch::W0, std::f64::consts::E)? - 1.0).abs() > 1e-15 {
        failures.push("W0(e) != 1".into());
    }

    let ok = failures.is_empty();
    let detail = if ok {
        format!("{checked} checks agree ({infeasible} cells infeasible on both sides)")
    } else {
        format!(
            "{} of {checked} checks disagree, first: {}",
            failures.len(),
            failures[0]
        )
    };
    Ok((ok, detail))
}

fn tilt_cases() -> Result<Vec<(DistributionSpec, TiltComponent)>> {
    use TiltComponent::{First, Second};
    let lit = [
        ("normal(0,1)", First),
        ("normal(1.5,0.3)", First),
        ("normal(0,1)", Second),
        ("normal(2,0.7)", Second),
        ("lognormal(0,1)", First),
        ("lognormal(0.5,0.4)", First),
        ("lognormal(0,1)", Second),
        ("lognormal(0.5,0.4)", Second),
        ("exponential(0.5)", First),
        ("exponential(2)", First),
        ("poisson(1)", First),
        ("poisson(5)", First),
        ("uniform(-1,1)", First),
        ("uniform(0,3)", First),
        ("truncnormal(0,1,-1,1)", First),
        ("truncnormal(0.5,2,-1,4)", First),
    ];
    lit.iter()
        .map(|(s, c)| Ok((s.parse::<DistributionSpec>()?, *c)))
        .collect()
}

fn kl_exactness(_: Scale) -> Verdict {
    let mut worst = 0.0f64;
    let mut worst_at = String::new();
    let mut count = 0;
    for (dist, comp) in tilt_cases()? {
        for delta in [0.1, 0.5] {
            for branch in [Branch::Negative, Branch::Positive] {
                let sol = solve_tau(&dist, PerturbationMode::Tilt(comp), delta, branch)?;
                let kl = kl_divergence(&sol.perturbed, &dist)?;
                count += 1;
                let err = (kl - delta).abs();
                if err > worst {
                    worst = err;
                    worst_at = format!("{dist} {comp:?} {branch} delta={delta}");
                }
            }
        }
    }
    Ok((
        worst <= 1e-6,
        format!("{count} tilts, worst |KL - delta| = {worst:.1e} ({worst_at})"),
    ))
}

fn reweighting_oracle(scale: Scale) -> Verdict {
    let (model, m) = linear_example();
    let n = scale.n(100_000);
    let sample = build_sample(&model, &m, n, 2)?;
    let mut worst = 0.0f64;
    let mut cells = 0;
    for i in 0..3 {
        for branch in [Branch::Negative, Branch::Positive] {
            let sol = solve_tau(&m[i], ModeLiteral::Mean.mode(), 0.5, branch)?;
            let rew = estimate_perturbed_pf(&sample, i, &sol)?;
            let mut shifted = m.clone();
            shifted[i] = sol.perturbed;
            let exact = analytic_pf_linear(&model, &shifted)?;
            let direct = estimate_pf(&build_sample(
                &model,
                &shifted,
                n,
                1_000 + 2 * i as u64 + (branch == Branch::Positive) as u64,
            )?);
            let z_exact = (rew.p_hat - exact).abs() / rew.var_hat.sqrt();
            let z_direct = (rew.p_hat - direct.p_hat).abs() / (rew.var_hat + direct.var_hat).sqrt();
            worst = worst.max(z_exact).max(z_direct);
            cells += 1;
        }
    }
    Ok((
        worst <= 3.0,
        format!("{cells} cells at N={n}, largest discrepancy {worst:.2} combined standard errors"),
    ))
}

fn ranking(scale: Scale) -> Verdict {
    let (model, m) = linear_example();
    let n = scale.n(1_000_000);
    let sample = build_sample(&model, &m, n, 3)?;
    let deltas: Vec<f64> = (1..=10).map(|k| k as f64 / 10.0).collect();
    let mut plan = Vec::new();
    for variable in 0..3 {
        for lit in [ModeLiteral::Mean, ModeLiteral::Variance] {
            for branch in [Branch::Negative, Branch::Positive] {
                plan.push(PlanEntry {
                    variable,
                    mode: lit.mode(),
                    branch,
                    deltas: deltas.clone(),
                });
            }
        }
    }
    let records = sweep(&sample, &plan, 0.95)?;
    let mut s: BTreeMap<(PerturbationMode, Branch, u64), [f64; 3]> = BTreeMap::new();
    for r in &records {
        s.entry((r.mode, r.branch, r.delta.to_bits())).or_insert([f64::NAN; 3])[r.variable] = r.s_hat.abs();
    }
    let mut bad = Vec::new();
    for ((mode, branch, bits), [a1, a2, a3]) in &s {
        let delta = f64::from_bits(*bits);
        let ok = if *mode == ModeLiteral::Mean.mode() {
            a3 > a2 && a2 > a1
        } else {
            a3 > a2 && a3 > a1 && a1 < a2
        };
        if !ok {
            bad.push(format!(
                "{mode:?} {branch} delta={delta}: |S| = {a1:.3}, {a2:.3}, {a3:.3}"
            ));
        }
    }
    let detail = if bad.is_empty() {
        format!("ordering holds at all {} grid points (N={n})", s.len())
    } else {
        format!(
            "{} of {} grid points out of order, first: {}",
            bad.len(),
            s.len(),
            bad[0]
        )
    };
    Ok((bad.is_empty(), detail))
}

struct Trials {
    pf: Vec<FailureEstimate>,
    pd: Vec<FailureEstimate>,
}

fn trials(n: usize, seeds: std::ops::Range<u64>, tilt: &TiltSolution) -> Result<Trials> {
    let (model, m) = linear_example();
    let pairs: Vec<(FailureEstimate, FailureEstimate)> = seeds
        .into_par_iter()
        .map(|seed| {
            let sample = build_sample(&model, &m, n, seed)?;
            Ok((estimate_pf(&sample), estimate_perturbed_pf(&sample, 2, tilt)?))
        })
        .collect::<Result<_>>()?;
    let (pf, pd) = pairs.into_iter().unzip();
    Ok(Trials { pf, pd })
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn sample_cov(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (a.len() - 1) as f64
}

/// Exact p_f and p_δ for x3 mean-tilted by δ = 0.5 upwards, with the tilt.
fn x3_truth() -> Result<(f64, f64, TiltSolution)> {
    let (model, m) = linear_example();
    let tilt = solve_tau(&m[2], ModeLiteral::Mean.mode(), 0.5, Branch::Positive)?;
    let mut shifted = m.clone();
    shifted[2] = tilt.perturbed;
    Ok((
        analytic_pf_linear(&model, &m)?,
        analytic_pf_linear(&model, &shifted)?,
        tilt,
    ))
}

fn covariance(scale: Scale) -> Verdict {
    let n = scale.n(10_000);
    let (pf, pd, tilt) = x3_truth()?;
    let t = trials(n, 0..200, &tilt)?;
    let a: Vec<f64> = t.pf.iter().map(|e| e.p_hat).collect();
    let b: Vec<f64> = t.pd.iter().map(|e| e.p_hat).collect();
    let emp = sample_cov(&a, &b);
    let formula = pd * (1.0 - pf) / n as f64;
    let rel = emp / formula - 1.0;
    Ok((
        rel.abs() <= 0.3,
        format!(
            "200 seeds at N={n}: empirical {emp:.4e} vs formula {formula:.4e} ({:+.1}%)",
            100.0 * rel
        ),
    ))
}

/// Anderson–Darling A*² for normality with mean and variance estimated.
pub fn anderson_darling(values: &[f64]) -> f64 {
    let n = values.len();
    let nf = n as f64;
    let mu = mean(values);
    let sd = sample_cov(values, values).sqrt();
    let mut z: Vec<f64> = values.iter().map(|v| (v - mu) / sd).collect();
    z.sort_by(f64::total_cmp);
    let s: f64 = (0..n)
        .map(|i| {
            let lo = normal::cdf(z[i]).ln();
            let hi = normal::sf(z[n - 1 - i]).ln();
            (2 * i + 1) as f64 * (lo + hi)
        })
        .sum();
    let a2 = -nf - s / nf;
    a2 * (1.0 + 0.75 / nf + 2.25 / (nf * nf))
}

/// Case-3 critical value at the 1% level.
pub const AD_CRITICAL_1PCT: f64 = 1.035;

fn delta_method(scale: Scale) -> Verdict {
    let n = scale.n(10_000);
    let nf = n as f64;
    let (pf, pd, tilt) = x3_truth()?;

    // E[w² 1{fail}] = E[w²]·P(fail) under the tilt at 2τ
    let (model, m) = linear_example();
    let mut doubled = m.clone();
    doubled[2] = m[2].tilted(2.0 * tilt.tau, TiltComponent::First)?;
    let second = tilt.weight_second_moment()? * analytic_pf_linear(&model, &doubled)?;
    let var_pd = (second - pd * pd) / nf;
    let formula = var_pd / (pf * pf) - pd * pd * (1.0 - pf) / (nf * pf * pf * pf);

    let t = trials(n, 0..200, &tilt)?;
    let mut s = Vec::new();
    let mut plug = Vec::new();
    for (f, d) in t.pf.iter().zip(&t.pd) {
        if f.failures > 0 {
            s.push(d.p_hat / f.p_hat - 1.0);
            plug.push(index_variance(f, d)?);
        }
    }
    let emp = sample_cov(&s, &s);
    let plug_mean = mean(&plug);
    let rel = emp / formula - 1.0;
    let rel_plug = emp / plug_mean - 1.0;

    let n_ad = scale.n(100_000);
    let t = trials(n_ad, 10_000..10_500, &tilt)?;
    let s_ad: Vec<f64> =
        t.pf.iter()
            .zip(&t.pd)
            .filter(|(f, _)| f.failures > 0)
            .map(|(f, d)| d.p_hat / f.p_hat - 1.0)
            .collect();
    let a2 = anderson_darling(&s_ad);

    let ok = rel.abs() <= 0.3 && rel_plug.abs() <= 0.3 && a2 < AD_CRITICAL_1PCT;
    Ok((
        ok,
        format!(
            "{} seeds at N={n}: Var(S) {emp:.3} vs formula {formula:.3} ({:+.1}%) and mean plug-in {plug_mean:.3} ({:+.1}%); \
             A*2 = {a2:.3} over {} seeds at N={n_ad} (critical {AD_CRITICAL_1PCT})",
            s.len(),
            100.0 * rel,
            100.0 * rel_plug,
            s_ad.len()
        ),
    ))
}

/// P(u + z ≥ c) for u ~ U(a, b), z ~ N(0, 1).
fn uniform_plus_normal_tail(a: f64, b: f64, c: f64) -> f64 {
    let h = |t: f64| t * normal::cdf(t) + normal::pdf(t);
    (h(b - c) - h(a - c)) / (b - a)
}

fn boundary_shift(scale: Scale) -> Verdict {
    let u = DistributionSpec::uniform(-1.0, 1.0)?;
    let upper = solve_tau(&u, ModeLiteral::BoundaryUpper.mode(), 0.5, Branch::Negative)?;
    let lower = solve_tau(&u, ModeLiteral::BoundaryLower.mode(), 0.5, Branch::Positive)?;
    let exact_law = upper.perturbed == DistributionSpec::uniform(-1.0, 0.5)?
        && lower.perturbed == DistributionSpec::uniform(-0.5, 1.0)?;

    let c = 2.5;
    let model = LinearLimitState::new(c, vec![1.0, 1.0])?;
    let m = vec![u, normal01()];
    let n = scale.n(200_000);
    let sample = build_sample(&model, &m, n, 4)?;

    let mut exact_weights = true;
    for &k in sample.failure_indices() {
        let x = sample.point(k)[0];
        let w = upper.perturbed.likelihood_ratio(&u, x);
        let want = if x <= 0.5 { 4.0 / 3.0 } else { 0.0 };
        exact_weights &= w == want;
    }

    let mut worst = 0.0f64;
    for (sol, (a, b)) in [(&upper, (-1.0, 0.5)), (&lower, (-0.5, 1.0))] {
        let est = estimate_perturbed_pf(&sample, 0, sol)?;
        let exact = uniform_plus_normal_tail(a, b, c);
        worst = worst.max((est.p_hat - exact).abs() / est.var_hat.sqrt());
    }
    let ok = exact_law && exact_weights && worst <= 3.0;
    Ok((
        ok,
        format!(
            "shifted laws exact: {exact_law}; failure-point weights exactly 4/3 or 0: {exact_weights}; \
             estimates within {worst:.2} standard errors of closed form (N={n})"
        ),
    ))
}

struct Counting {
    inner: LinearLimitState,
    calls: AtomicUsize,
}

impl PerformanceFunction for Counting {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.evaluate(x)
    }
}

fn economy(scale: Scale) -> Verdict {
    let (inner, m) = linear_example();
    let f = Counting {
        inner,
        calls: AtomicUsize::new(0),
    };
    let n = scale.n(100_000);
    let sample = build_sample(&f, &m, n, 5)?;
    let after_build = f.calls.load(Ordering::Relaxed);

    let deltas: Vec<f64> = (0..=20).map(|k| k as f64 * 0.05).collect();
    let mut plan = Vec::new();
    for variable in 0..3 {
        for lit in [ModeLiteral::Mean, ModeLiteral::Variance] {
            for branch in [Branch::Negative, Branch::Positive] {
                plan.push(PlanEntry {
                    variable,
                    mode: lit.mode(),
                    branch,
                    deltas: deltas.clone(),
                });
            }
        }
    }
    let records = sweep(&sample, &plan, 0.95)?;
    let mut pairs = 0;
    for i in 0..3 {
        for j in (i + 1)..3 {
            for branch in [Branch::Negative, Branch::Positive] {
                let ti = solve_tau(&m[i], ModeLiteral::Mean.mode(), 0.5, branch)?;
                let tj = solve_tau(&m[j], ModeLiteral::Mean.mode(), 0.5, branch)?;
                estimate_interaction_pf(&sample, i, j, &ti, &tj)?;
                pairs += 1;
            }
        }
    }
    let total = f.calls.load(Ordering::Relaxed);
    Ok((
        after_build == n && total == n,
        format!(
            "{total} evaluations for N={n} after {} sweep cells and {pairs} interaction estimates",
            records.len()
        ),
    ))
}

const DETERMINISM_CONFIG: &str = r#"
marginals = ["normal(0,1)", "normal(0,1)", "normal(0,1)"]

[model]
kind = "linear"
intercept = 3.0
coefficients = [0.1, 0.5, 1.0]

[sample]
n = N_POINTS
seed = 11

[[plan]]
variables = "all"
mode = "tilt.mean"
branches = ["neg", "pos"]
deltas = { start = 0.0, stop = 1.0, steps = 11 }

[[plan]]
variables = [1, 3]
mode = "tilt.variance"
branches = ["neg", "pos"]
deltas = [0.05, 0.1, 0.5]

[output]
path = "table.FORMAT"
format = "FORMAT"
series_dir = "series"
"#;

fn files_under(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d)? {
            let p = entry?.path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().is_some_and(|n| n != "run.toml") {
                out.push(p.strip_prefix(dir).expect("under dir").to_path_buf());
            }
        }
    }
    out.sort();
    Ok(out)
}

fn determinism(scale: Scale) -> Verdict {
    let n = scale.n(100_000);
    let nanos = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_nanos())
        .unwrap_or(0);
    let root = std::env::temp_dir().join(format!("dpsa-verify-{}-{nanos}", std::process::id()));
    let result = (|| -> Result<(bool, String)> {
        let mut compared = 0;
        let mut mismatch = None;
        for format in ["csv", "json"] {
            let text = DETERMINISM_CONFIG
                .replace("N_POINTS", &n.to_string())
                .replace("FORMAT", format);
            let mut reference: Option<(PathBuf, Vec<PathBuf>)> = None;
            for threads in [1, 8] {
                for rep in 0..2 {
                    let dir = root.join(format!("{format}-t{threads}-r{rep}"));
                    fs::create_dir_all(&dir)?;
                    let cfg = dir.join("run.toml");
                    fs::write(&cfg, &text)?;
                    run(&cfg, None, threads).map_err(|e| Error::Numerical(e.to_string()))?;
                    let files = files_under(&dir)?;
                    match &reference {
                        None => reference = Some((dir, files)),
                        Some((ref_dir, ref_files)) => {
                            if &files != ref_files {
                                mismatch.get_or_insert(format!("{format}: file sets differ at {threads} threads"));
                            }
                            for f in ref_files {
                                compared += 1;
                                if fs::read(ref_dir.join(f))? != fs::read(dir.join(f)).unwrap_or_default() {
                                    mismatch.get_or_insert(format!("{} differs at {threads} threads", f.display()));
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(match mismatch {
            None => (
                true,
                format!("4 runs per format (1 and 8 threads, twice each), {compared} file comparisons byte-identical"),
            ),
            Some(m) => (false, m),
        })
    })();
    let _ = fs::remove_dir_all(&root);
    result
}
