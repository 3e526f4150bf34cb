//! Run configuration: TOML on disk, validated into a [`RunPlan`].
//!
//! ```toml
//! marginals = ["normal(0,1)", "normal(0,1)", "normal(0,1)"]
//!
//! [model]
//! kind = "linear"
//! intercept = 3.0
//! coefficients = [0.1, 0.5, 1.0]
//!
//! [sample]
//! n = 1000000
//! seed = 42
//!
//! [[plan]]
//! variables = "all"
//! mode = "tilt.mean"
//! branches = ["neg", "pos"]
//! deltas = { start = 0.1, stop = 1.0, steps = 10 }
//!
//! [output]
//! path = "results.csv"
//! ```
//!
//! Variables are numbered from 1. Relative paths are resolved against the
//! directory holding the config file.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use dpsa::prelude::*;
use serde::Deserialize;
use std::result::Result;

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub marginals: Vec<String>,
    pub sample: Option<SampleConfig>,
    #[serde(default)]
    pub plan: Vec<PlanConfig>,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelConfig {
    Linear { intercept: f64, coefficients: Vec<f64> },
    Tabulated { path: PathBuf },
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleConfig {
    pub n: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum VariableSelection {
    Named(String),
    List(Vec<usize>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum DeltaGrid {
    List(Vec<f64>),
    Range { start: f64, stop: f64, steps: usize },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanConfig {
    pub variables: VariableSelection,
    pub mode: String,
    pub branches: Vec<String>,
    pub deltas: DeltaGrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

fn default_format() -> OutputFormat {
    OutputFormat::Csv
}

fn default_confidence() -> f64 {
    0.95
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub path: PathBuf,
    #[serde(default = "default_format")]
    pub format: OutputFormat,
    #[serde(default = "default_confidence")]
    pub confidence: f64,
    /// Directory for one (delta, s_hat, ci_lo, ci_hi) file per curve.
    pub series_dir: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub enum SampleSource {
    Linear {
        model: LinearLimitState,
        n: usize,
        seed: u64,
    },
    Tabulated {
        path: PathBuf,
    },
}

/// A fully checked configuration with paths resolved.
#[derive(Debug, Clone)]
pub struct RunPlan {
    pub source: SampleSource,
    pub marginals: Vec<DistributionSpec>,
    pub plan: Vec<PlanEntry>,
    pub output: PathBuf,
    pub format: OutputFormat,
    pub confidence: f64,
    pub series_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(vec![e.to_string()]))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Checks everything that can be checked before sampling and reports
    /// every violation at once.
    pub fn validate(&self, base_dir: &Path) -> Result<RunPlan, CliError> {
        let mut errors = Vec::new();

        let mut marginals = Vec::new();
        for (k, lit) in self.marginals.iter().enumerate() {
            match lit.parse::<DistributionSpec>() {
                Ok(d) => marginals.push(Some(d)),
                Err(e) => {
                    errors.push(format!("marginals[{}] `{lit}`: {e}", k + 1));
                    marginals.push(None);
                }
            }
        }
        let d = self.marginals.len();
        if d == 0 {
            errors.push("at least one marginal is required".into());
        }

        let source = match (&self.model, self.sample) {
            (
                ModelConfig::Linear {
                    intercept,
                    coefficients,
                },
                sample,
            ) => {
                if coefficients.len() != d {
                    errors.push(format!(
                        "model has {} coefficients but {d} marginals are declared",
                        coefficients.len()
                    ));
                }
                let model = LinearLimitState::new(*intercept, coefficients.clone())
                    .map_err(|e| errors.push(format!("model: {e}")))
                    .ok();
                match sample {
                    None => {
                        errors.push("a [sample] section with n and seed is required for a linear model".into());
                        None
                    }
                    Some(s) => {
                        if s.n == 0 {
                            errors.push("sample.n must be at least 1".into());
                        }
                        model.map(|model| SampleSource::Linear {
                            model,
                            n: s.n,
                            seed: s.seed,
                        })
                    }
                }
            }
            (ModelConfig::Tabulated { path }, sample) => {
                if sample.is_some() {
                    errors.push("[sample] does not apply to a tabulated model; its points come from the file".into());
                }
                Some(SampleSource::Tabulated {
                    path: base_dir.join(path),
                })
            }
        };

        let mut plan = Vec::new();
        let mut seen = BTreeSet::new();
        for (k, entry) in self.plan.iter().enumerate() {
            let at = format!("plan[{}]", k + 1);
            let variables: Vec<usize> = match &entry.variables {
                VariableSelection::Named(s) if s == "all" => (1..=d).collect(),
                VariableSelection::Named(s) => {
                    errors.push(format!(
                        "{at}: variables must be \"all\" or a list of indices, got \"{s}\""
                    ));
                    Vec::new()
                }
                VariableSelection::List(v) => {
                    if v.is_empty() {
                        errors.push(format!("{at}: empty variable list"));
                    }
                    v.clone()
                }
            };
            let mode = match entry.mode.parse::<ModeLiteral>() {
                Ok(m) => Some(m),
                Err(e) => {
                    errors.push(format!("{at}: {e}"));
                    None
                }
            };
            if entry.branches.is_empty() {
                errors.push(format!("{at}: no branches given"));
            }
            let branches: Vec<Branch> = entry
                .branches
                .iter()
                .filter_map(|b| b.parse().map_err(|e| errors.push(format!("{at}: {e}"))).ok())
                .collect();
            let deltas = match expand_grid(&entry.deltas) {
                Ok(v) => v,
                Err(e) => {
                    errors.push(format!("{at}: {e}"));
                    Vec::new()
                }
            };
            for &v in &variables {
                if v == 0 || v > d {
                    errors.push(format!("{at}: variable {v} is out of range 1..={d}"));
                    continue;
                }
                let (Some(mode), Some(dist)) = (mode, marginals[v - 1]) else {
                    continue;
                };
                if let Err(e) = mode.check(&dist) {
                    errors.push(format!("{at}: variable x{v}: {e}"));
                    continue;
                }
                for &branch in &branches {
                    for &delta in &deltas {
                        if !seen.insert((v, mode, branch, delta.to_bits())) {
                            errors.push(format!("{at}: cell (x{v}, {mode}, {branch}, {delta}) is listed twice"));
                        }
                    }
                    plan.push(PlanEntry {
                        variable: v - 1,
                        mode: mode.mode(),
                        branch,
                        deltas: deltas.clone(),
                    });
                }
            }
        }

        let c = self.output.confidence;
        if !(c > 0.0 && c < 1.0) {
            errors.push(format!("output.confidence must lie in (0, 1), got {c}"));
        }

        if !errors.is_empty() {
            return Err(CliError::Config(errors));
        }
        Ok(RunPlan {
            source: source.expect("validated"),
            marginals: marginals.into_iter().map(|m| m.expect("validated")).collect(),
            plan,
            output: base_dir.join(&self.output.path),
            format: self.output.format,
            confidence: c,
            series_dir: self.output.series_dir.as_ref().map(|p| base_dir.join(p)),
        })
    }
}

/// Grid points, `steps` of them from `start` to `stop` inclusive, rounded to
/// 12 decimals so that 0.1..1.0 prints as 0.1, 0.2, ...
pub fn expand_grid(grid: &DeltaGrid) -> Result<Vec<f64>, String> {
    let values = match *grid {
        DeltaGrid::List(ref v) => {
            if v.is_empty() {
                return Err("empty delta list".into());
            }
            v.clone()
        }
        DeltaGrid::Range { start, stop, steps } => {
            if steps == 0 {
                return Err("delta grid needs at least one step".into());
            }
            if stop < start {
                return Err(format!("delta grid runs backwards ({start} to {stop})"));
            }
            if steps == 1 {
                vec![start]
            } else {
                (0..steps)
                    .map(|k| {
                        let v = start + (stop - start) * k as f64 / (steps - 1) as f64;
                        (v * 1e12).round() / 1e12
                    })
                    .collect()
            }
        }
    };
    if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(format!("perturbation sizes must be finite and >= 0, got {bad}"));
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    const LINEAR: &str = r#"
marginals = ["normal(0,1)", "normal(0,1)", "normal(0,1)"]

[model]
kind = "linear"
intercept = 3.0
coefficients = [0.1, 0.5, 1.0]

[sample]
n = 1000
seed = 1

[[plan]]
variables = "all"
mode = "tilt.mean"
branches = ["neg", "pos"]
deltas = { start = 0.1, stop = 1.0, steps = 10 }

[output]
path = "out.csv"
"#;

    #[test]
    fn linear_config_expands_to_sixty_cells() {
        let plan = RunConfig::from_toml(LINEAR)
            .unwrap()
            .validate(Path::new("/tmp"))
            .unwrap();
        let cells: usize = plan.plan.iter().map(|e| e.deltas.len()).sum();
        assert_eq!(cells, 60);
        assert_eq!(plan.plan[0].deltas[2], 0.3);
        assert_eq!(plan.output, Path::new("/tmp/out.csv"));
        assert_eq!(plan.confidence, 0.95);
    }

    #[test]
    fn every_violation_is_reported() {
        let text = r#"
marginals = ["exponential(1)", "gamma(1)", "normal(0,1)"]

[model]
kind = "linear"
intercept = 3.0
coefficients = [0.1, 0.5]

[sample]
n = 0
seed = 1

[[plan]]
variables = [1, 4]
mode = "tilt.variance"
branches = ["neg", "up"]
deltas = [0.1, -1.0]

[output]
path = "out.csv"
confidence = 1.5
"#;
        let Err(CliError::Config(errors)) = RunConfig::from_toml(text).unwrap().validate(Path::new(".")) else {
            panic!("expected config errors");
        };
        let all = errors.join("\n");
        for needle in [
            "gamma",
            "2 coefficients",
            "sample.n",
            "variable 4",
            "x1",
            "`up`",
            "-1",
            "confidence",
        ] {
            assert!(all.contains(needle), "missing `{needle}` in:\n{all}");
        }
    }

    #[test]
    fn variance_tilt_on_exponential_is_rejected() {
        let text = LINEAR
            .replace(
                "\"normal(0,1)\", \"normal(0,1)\", \"normal(0,1)\"",
                "\"normal(0,1)\", \"exponential(1)\", \"normal(0,1)\"",
            )
            .replace("tilt.mean", "tilt.variance");
        let Err(CliError::Config(errors)) = RunConfig::from_toml(&text).unwrap().validate(Path::new(".")) else {
            panic!("expected config errors");
        };
        assert_eq!(errors.len(), 1, "{errors:?}");
        assert!(errors[0].contains("x2"));
    }

    #[test]
    fn grids() {
        assert_eq!(
            expand_grid(&DeltaGrid::Range {
                start: 0.0,
                stop: 1.0,
                steps: 11
            })
            .unwrap()[7],
            0.7
        );
        assert_eq!(
            expand_grid(&DeltaGrid::Range {
                start: 0.5,
                stop: 0.5,
                steps: 1
            })
            .unwrap(),
            vec![0.5]
        );
        assert!(expand_grid(&DeltaGrid::Range {
            start: 1.0,
            stop: 0.0,
            steps: 3
        })
        .is_err());
        assert!(expand_grid(&DeltaGrid::List(vec![])).is_err());
    }

    #[test]
    fn tabulated_rejects_sample_section() {
        let text = r#"
marginals = ["normal(0,1)"]
[model]
kind = "tabulated"
path = "s.csv"
[sample]
n = 10
seed = 1
[output]
path = "o.csv"
"#;
        assert!(RunConfig::from_toml(text).unwrap().validate(Path::new(".")).is_err());
        assert!(RunConfig::from_toml("marginals = [").is_err());
    }
}
