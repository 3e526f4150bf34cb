//! Performance functions and sample construction.
//!
//! A sample is drawn column by column: column j uses a ChaCha20 generator
//! seeded with the run seed on stream j, so every column is reproducible on
//! its own and the result does not depend on thread count.
//!
//! Sample files are comma-separated text with a header `x1,...,xd,g`, one
//! point per line. LF and CRLF are accepted on input; output uses LF and
//! shortest round-trip scientific notation, so write-then-ingest restores
//! every value bit for bit.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::distributions::{sampling, DistributionSpec, Family};
use crate::error::{bail, Error, Result};
use crate::estimation::EvaluatedSample;
use crate::numeric::{normal, pairwise_sum};

/// A scalar limit state; the system fails where g ≤ 0.
pub trait PerformanceFunction: Sync {
    fn dim(&self) -> usize;
    fn evaluate(&self, x: &[f64]) -> Result<f64>;
}

/// g(x) = intercept − Σ cᵢxᵢ.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearLimitState {
    intercept: f64,
    coefficients: Vec<f64>,
}

impl LinearLimitState {
    pub fn new(intercept: f64, coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.is_empty() {
            bail!(Parameter, "a linear limit state needs at least one coefficient");
        }
        if !intercept.is_finite() || coefficients.iter().any(|c| !c.is_finite()) {
            bail!(Parameter, "linear limit state parameters must be finite");
        }
        if coefficients.iter().all(|&c| c == 0.0) {
            bail!(Parameter, "at least one coefficient must be nonzero");
        }
        Ok(LinearLimitState {
            intercept,
            coefficients,
        })
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }
}

impl PerformanceFunction for LinearLimitState {
    fn dim(&self) -> usize {
        self.coefficients.len()
    }

    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.coefficients.len() {
            bail!(
                Parameter,
                "point has {} coordinates, model expects {}",
                x.len(),
                self.coefficients.len()
            );
        }
        let dot: f64 = self.coefficients.iter().zip(x).map(|(c, v)| c * v).sum();
        Ok(self.intercept - dot)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PerformanceModel {
    LinearGaussian(LinearLimitState),
    /// Precomputed values only; cannot be evaluated at new points.
    Tabulated(EvaluatedSample),
}

impl PerformanceFunction for PerformanceModel {
    fn dim(&self) -> usize {
        match self {
            PerformanceModel::LinearGaussian(m) => m.dim(),
            PerformanceModel::Tabulated(s) => s.dim(),
        }
    }

    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        match self {
            PerformanceModel::LinearGaussian(m) => m.evaluate(x),
            PerformanceModel::Tabulated(_) => {
                bail!(
                    Unsupported,
                    "a tabulated model carries stored values only and cannot be evaluated"
                )
            }
        }
    }
}

/// Exact P(g ≤ 0) for a linear limit state with normal inputs:
/// g ~ N(m, s²) with m = intercept − Σcᵢμᵢ, s² = Σcᵢ²σᵢ², so p = Φ(−m/s).
pub fn analytic_pf_linear(model: &LinearLimitState, marginals: &[DistributionSpec]) -> Result<f64> {
    if marginals.len() != model.dim() {
        bail!(
            Parameter,
            "{} marginals for a {}-dimensional model",
            marginals.len(),
            model.dim()
        );
    }
    let mut mean_terms = Vec::with_capacity(marginals.len());
    let mut var_terms = Vec::with_capacity(marginals.len());
    for (c, m) in model.coefficients.iter().zip(marginals) {
        match *m {
            DistributionSpec::Normal { mu, sigma } => {
                mean_terms.push(c * mu);
                var_terms.push(c * c * sigma * sigma);
            }
            other => bail!(
                Unsupported,
                "closed-form probability needs normal marginals, got {other}"
            ),
        }
    }
    let m = model.intercept - pairwise_sum(&mean_terms);
    let s = pairwise_sum(&var_terms).sqrt();
    Ok(normal::cdf(-m / s))
}

/// Draws `n` joint points (row-major) from independent `marginals`.
pub fn draw_points(marginals: &[DistributionSpec], n: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        bail!(Parameter, "sample size must be at least 1");
    }
    if marginals.is_empty() {
        bail!(Parameter, "at least one marginal is required");
    }
    for m in marginals {
        m.validate()?;
    }
    let columns: Vec<Vec<f64>> = marginals
        .par_iter()
        .enumerate()
        .map(|(j, m)| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(j as u64);
            sampling::sample(m, &mut rng, n)
        })
        .collect::<Result<_>>()?;
    let d = marginals.len();
    let mut points = vec![0.0; n * d];
    for (j, col) in columns.iter().enumerate() {
        for (k, v) in col.iter().enumerate() {
            points[k * d + j] = *v;
        }
    }
    Ok(points)
}

/// Evaluates `model` at given row-major `points`.
pub fn build_sample_with<F: PerformanceFunction + ?Sized>(
    model: &F,
    marginals: &[DistributionSpec],
    points: Vec<f64>,
    seed: Option<u64>,
) -> Result<EvaluatedSample> {
    let d = marginals.len();
    if model.dim() != d {
        bail!(
            Parameter,
            "model takes {} inputs but {d} marginals were given",
            model.dim()
        );
    }
    if d == 0 || !points.len().is_multiple_of(d) {
        bail!(Parameter, "{} coordinates do not form rows of {d}", points.len());
    }
    let g_values: Vec<f64> = points
        .par_chunks(d)
        .map(|x| {
            let g = model.evaluate(x)?;
            if g.is_nan() {
                bail!(Numerical, "performance function returned NaN at {x:?}");
            }
            Ok(g)
        })
        .collect::<Result<_>>()?;
    EvaluatedSample::new(points, g_values, marginals.to_vec(), seed)
}

/// Draws `n` points with `seed` and evaluates `model` at each of them.
pub fn build_sample<F: PerformanceFunction + ?Sized>(
    model: &F,
    marginals: &[DistributionSpec],
    n: usize,
    seed: u64,
) -> Result<EvaluatedSample> {
    if model.dim() != marginals.len() {
        bail!(
            Parameter,
            "model takes {} inputs but {} marginals were given",
            model.dim(),
            marginals.len()
        );
    }
    let points = draw_points(marginals, n, seed)?;
    build_sample_with(model, marginals, points, Some(seed))
}

fn header(d: usize) -> Vec<String> {
    (1..=d).map(|j| format!("x{j}")).chain(["g".to_string()]).collect()
}

/// Writes a sample in the text format read by [`ingest_sample`].
pub fn write_sample(sample: &EvaluatedSample, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{}", header(sample.dim()).join(","))?;
    for (k, g) in sample.g_values().iter().enumerate() {
        for v in sample.point(k) {
            write!(out, "{v:e},")?;
        }
        writeln!(out, "{g:e}")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads an externally produced sample drawn from `marginals`.
///
/// Rows are numbered from 1 after the header. Values outside a marginal's
/// support, and column means more than six standard errors from the
/// declared mean, are reported as warnings on the sample.
pub fn ingest_sample(path: &Path, marginals: &[DistributionSpec]) -> Result<EvaluatedSample> {
    let d = marginals.len();
    if d == 0 {
        bail!(Parameter, "at least one marginal is required");
    }
    for m in marginals {
        m.validate()?;
    }
    let file = File::open(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(file);
    let ingest_err = |row: usize, message: String| Error::Ingest { row, message };
    let csv_err = |row: usize, e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Ingest {
            row,
            message: format!("{other:?}"),
        },
    };

    let mut records = reader.records();
    let head = match records.next() {
        Some(r) => r.map_err(|e| csv_err(0, e))?,
        None => return Err(ingest_err(0, "file is empty".into())),
    };
    let got: Vec<&str> = head.iter().map(str::trim).collect();
    let want = header(d);
    if got != want {
        return Err(ingest_err(
            0,
            format!("header `{}` does not match `{}`", got.join(","), want.join(",")),
        ));
    }

    let mut points = Vec::new();
    let mut g_values = Vec::new();
    for (idx, rec) in records.enumerate() {
        let row = idx + 1;
        let rec = rec.map_err(|e| csv_err(row, e))?;
        if rec.len() == 1 && rec[0].trim().is_empty() {
            continue;
        }
        if rec.len() != d + 1 {
            return Err(ingest_err(
                row,
                format!("expected {} fields, found {}", d + 1, rec.len()),
            ));
        }
        for (col, field) in rec.iter().enumerate() {
            let name = &want[col];
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| ingest_err(row, format!("column {name}: `{}` is not a number", field.trim())))?;
            if !v.is_finite() {
                return Err(ingest_err(row, format!("column {name}: value {v} is not finite")));
            }
            if col < d {
                points.push(v);
            } else {
                g_values.push(v);
            }
        }
    }
    if g_values.is_empty() {
        return Err(ingest_err(0, "no data rows".into()));
    }
    let warnings = sanity_warnings(&points, g_values.len(), marginals);
    Ok(EvaluatedSample::new(points, g_values, marginals.to_vec(), None)?.with_warnings(warnings))
}

fn sanity_warnings(points: &[f64], n: usize, marginals: &[DistributionSpec]) -> Vec<String> {
    let d = marginals.len();
    let mut warnings = Vec::new();
    for (j, m) in marginals.iter().enumerate() {
        let col: Vec<f64> = (0..n).map(|k| points[k * d + j]).collect();
        let (lo, hi) = m.support();
        let outside = col
            .iter()
            .filter(|&&v| v < lo || v > hi || (m.family() == Family::Poisson && v.fract() != 0.0))
            .count();
        if outside > 0 {
            warnings.push(format!("x{}: {outside} value(s) outside the support of {m}", j + 1));
        }
        let mean = pairwise_sum(&col) / n as f64;
        let se = (m.variance() / n as f64).sqrt();
        if (mean - m.mean()).abs() > 6.0 * se {
            warnings.push(format!(
                "x{}: sample mean {mean} is more than 6 standard errors from the mean {} of {m}",
                j + 1,
                m.mean()
            ));
        }
    }
    warnings
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimation::estimate_pf;

    fn paper_model() -> (LinearLimitState, Vec<DistributionSpec>) {
        (
            LinearLimitState::new(3.0, vec![0.1, 0.5, 1.0]).unwrap(),
            vec![DistributionSpec::normal(0.0, 1.0).unwrap(); 3],
        )
    }

    #[test]
    fn evaluate_examples() {
        let (m, _) = paper_model();
        assert_eq!(m.evaluate(&[0.0, 0.0, 0.0]).unwrap(), 3.0);
        assert_eq!(m.evaluate(&[0.0, 0.0, 3.0]).unwrap(), 0.0);
        assert_eq!(m.evaluate(&[10.0, 0.0, 0.0]).unwrap(), 2.0);
        assert!(m.evaluate(&[1.0]).is_err());
        assert!(LinearLimitState::new(1.0, vec![0.0, 0.0]).is_err());
        assert!(LinearLimitState::new(1.0, vec![]).is_err());
    }

    #[test]
    fn analytic_examples() {
        let (m, marg) = paper_model();
        let p = analytic_pf_linear(&m, &marg).unwrap();
        assert!((p - 3.763_157_583_228_943e-3).abs() < 1e-17);
        let one = LinearLimitState::new(0.0, vec![1.0]).unwrap();
        assert_eq!(analytic_pf_linear(&one, &marg[..1]).unwrap(), 0.5);
        let mut shifted = marg.clone();
        shifted[2] = DistributionSpec::normal(1.0, 1.0).unwrap();
        let p = analytic_pf_linear(&m, &shifted).unwrap();
        assert!((p - normal::cdf(-2.0 / 1.26f64.sqrt())).abs() < 1e-17);
        assert!((p - 0.0374).abs() < 1e-3);
        let bad = vec![DistributionSpec::uniform(0.0, 1.0).unwrap(); 3];
        assert!(matches!(analytic_pf_linear(&m, &bad), Err(Error::Unsupported(_))));
    }

    #[test]
    fn tabulated_cannot_be_evaluated() {
        let (m, marg) = paper_model();
        let s = build_sample(&m, &marg, 10, 1).unwrap();
        let tab = PerformanceModel::Tabulated(s);
        assert!(matches!(tab.evaluate(&[0.0; 3]), Err(Error::Unsupported(_))));
        assert!(build_sample(&tab, &marg, 10, 1).is_err());
    }

    #[test]
    fn sampling_is_seeded_and_sized() {
        let (m, marg) = paper_model();
        assert!(build_sample(&m, &marg, 0, 1).is_err());
        let a = build_sample(&m, &marg, 1000, 11).unwrap();
        let b = build_sample(&m, &marg, 1000, 11).unwrap();
        let c = build_sample(&m, &marg, 1000, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.g_values(), c.g_values());
        assert_eq!(a.seed(), Some(11));
        // columns come from distinct streams
        assert_ne!(a.point(0)[0], a.point(0)[1]);
    }

    #[test]
    fn round_trip_is_exact() {
        let (m, marg) = paper_model();
        let s = build_sample(&m, &marg, 500, 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        write_sample(&s, &path).unwrap();
        let back = ingest_sample(&path, &marg).unwrap();
        assert_eq!(back.points(), s.points());
        assert_eq!(back.g_values(), s.g_values());
        assert_eq!(back.seed(), None);
        assert_eq!(estimate_pf(&back), estimate_pf(&s));
    }

    fn write_text(text: &str) -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("in.csv");
        File::create(&path).unwrap().write_all(text.as_bytes()).unwrap();
        (dir, path)
    }

    #[test]
    fn ingest_structure_and_errors() {
        let marg = vec![DistributionSpec::normal(0.0, 1.0).unwrap(); 3];
        let (_d, p) = write_text("x1,x2,x3,g\r\n0,0,0,1\r\n1e-1,2,3,-1\r\n0.5,0.5,0.5,2\r\n-1,-1,-1,3\r\n");
        let s = ingest_sample(&p, &marg).unwrap();
        assert_eq!(s.len(), 4);
        assert_eq!(s.failure_indices(), &[1]);

        let mut text = String::from("x1,x2,x3,g\n");
        for _ in 0..16 {
            text.push_str("0,0,0,1\n");
        }
        text.push_str("0,0,0,abc\n");
        let (_d, p) = write_text(&text);
        match ingest_sample(&p, &marg) {
            Err(Error::Ingest { row, .. }) => assert_eq!(row, 17),
            other => panic!("{other:?}"),
        }
        let (_d, p) = write_text("x1,x2,x3,g\n0,0,1\n");
        assert!(matches!(ingest_sample(&p, &marg), Err(Error::Ingest { row: 1, .. })));
        let (_d, p) = write_text("x1,x2,x3,g\n0,inf,0,1\n");
        assert!(matches!(ingest_sample(&p, &marg), Err(Error::Ingest { row: 1, .. })));
        let (_d, p) = write_text("a,b,c,g\n0,0,0,1\n");
        assert!(matches!(ingest_sample(&p, &marg), Err(Error::Ingest { row: 0, .. })));
        let (_d, p) = write_text("x1,x2,x3,g\n");
        assert!(ingest_sample(&p, &marg).is_err());
    }

    #[test]
    fn ingest_warns_on_implausible_marginals() {
        let marg = vec![DistributionSpec::normal(0.0, 1.0).unwrap()];
        let mut text = String::from("x1,g\n");
        for _ in 0..100 {
            text.push_str("5,1\n");
        }
        let (_d, p) = write_text(&text);
        let s = ingest_sample(&p, &marg).unwrap();
        assert_eq!(s.warnings().len(), 1);
    }
}
