//! Result tables, series files and the console summary.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use dpsa::prelude::*;
use serde::Serialize;
use std::result::Result;

use crate::config::OutputFormat;
use crate::error::CliError;

pub const COLUMNS: [&str; 12] = [
    "variable", "mode", "branch", "delta", "tau", "p_delta", "s_hat", "stderr", "ci_lo", "ci_hi", "ess", "flags",
];

/// Shortest round-trip text; scientific notation outside [1e-4, 1e15).
pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        return String::new();
    }
    let a = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn flag_names(rec: &SensitivityRecord) -> Vec<&'static str> {
    let f = rec.flags;
    let mut out = Vec::new();
    if rec.infeasible.is_some() {
        out.push("infeasible");
    }
    if f.low_ess {
        out.push("low_ess");
    }
    if f.variance_floored {
        out.push("variance_floored");
    }
    if f.branch_substituted {
        out.push("branch_substituted");
    }
    if f.unbounded_weight_variance {
        out.push("unbounded_weight_variance");
    }
    out
}

fn mode_name(rec: &SensitivityRecord, marginals: &[DistributionSpec]) -> String {
    ModeLiteral::for_mode(rec.mode, &marginals[rec.variable])
        .map(|m| m.to_string())
        .unwrap_or_else(|| format!("{:?}", rec.mode))
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

#[derive(Debug, Serialize)]
struct JsonRow<'a> {
    variable: String,
    mode: String,
    branch: String,
    delta: f64,
    tau: Option<f64>,
    p_delta: Option<f64>,
    s_hat: Option<f64>,
    stderr: Option<f64>,
    ci_lo: Option<f64>,
    ci_hi: Option<f64>,
    ess: Option<f64>,
    flags: Vec<&'static str>,
    infeasible: Option<&'a str>,
}

#[derive(Debug, Serialize)]
struct JsonTable<'a> {
    p_f: f64,
    p_f_stderr: f64,
    n: usize,
    failures: usize,
    seed: Option<u64>,
    confidence: f64,
    records: Vec<JsonRow<'a>>,
}

/// Renders the table; rows keep the order of `records`.
pub fn render_table(
    records: &[SensitivityRecord],
    marginals: &[DistributionSpec],
    p_f: &FailureEstimate,
    seed: Option<u64>,
    confidence: f64,
    format: OutputFormat,
) -> String {
    match format {
        OutputFormat::Csv => {
            let mut s = COLUMNS.join(",");
            s.push('\n');
            for r in records {
                let fields = [
                    format!("x{}", r.variable + 1),
                    mode_name(r, marginals),
                    r.branch.to_string(),
                    fmt_num(r.delta),
                    fmt_num(r.tau),
                    fmt_num(r.p_delta_hat),
                    fmt_num(r.s_hat),
                    fmt_num(r.stderr),
                    fmt_num(r.ci_lo),
                    fmt_num(r.ci_hi),
                    fmt_num(r.ess),
                    flag_names(r).join(";"),
                ];
                s.push_str(&fields.join(","));
                s.push('\n');
            }
            s
        }
        OutputFormat::Json => {
            let table = JsonTable {
                p_f: p_f.p_hat,
                p_f_stderr: p_f.var_hat.sqrt(),
                n: p_f.n,
                failures: p_f.failures,
                seed,
                confidence,
                records: records
                    .iter()
                    .map(|r| JsonRow {
                        variable: format!("x{}", r.variable + 1),
                        mode: mode_name(r, marginals),
                        branch: r.branch.to_string(),
                        delta: r.delta,
                        tau: finite(r.tau),
                        p_delta: finite(r.p_delta_hat),
                        s_hat: finite(r.s_hat),
                        stderr: finite(r.stderr),
                        ci_lo: finite(r.ci_lo),
                        ci_hi: finite(r.ci_hi),
                        ess: finite(r.ess),
                        flags: flag_names(r),
                        infeasible: r.infeasible.as_deref(),
                    })
                    .collect(),
            };
            let mut s = serde_json::to_string_pretty(&table).expect("table serializes");
            s.push('\n');
            s
        }
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    }
    let mut f = fs::File::create(path).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    f.write_all(contents.as_bytes())
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

/// One `delta,s_hat,ci_lo,ci_hi` file per (variable, mode, branch) curve,
/// named like `x3_tilt.mean_pos.csv`. Infeasible cells are left out.
pub fn write_series(
    dir: &Path,
    records: &[SensitivityRecord],
    marginals: &[DistributionSpec],
) -> Result<Vec<PathBuf>, CliError> {
    let mut curves: BTreeMap<String, String> = BTreeMap::new();
    for r in records {
        let name = format!("x{}_{}_{}.csv", r.variable + 1, mode_name(r, marginals), r.branch);
        let body = curves
            .entry(name)
            .or_insert_with(|| "delta,s_hat,ci_lo,ci_hi\n".to_string());
        if r.is_feasible() {
            body.push_str(&format!(
                "{},{},{},{}\n",
                fmt_num(r.delta),
                fmt_num(r.s_hat),
                fmt_num(r.ci_lo),
                fmt_num(r.ci_hi)
            ));
        }
    }
    let mut written = Vec::new();
    for (name, body) in curves {
        let path = dir.join(name);
        write_file(&path, &body)?;
        written.push(path);
    }
    Ok(written)
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub p_f: FailureEstimate,
    pub records: usize,
    pub infeasible: usize,
    /// (1-based variable, max |Ŝ| over its feasible records)
    pub max_abs_s: Vec<(usize, f64)>,
    /// 1-based variables, most influential first.
    pub ranking: Vec<usize>,
    pub warnings: Vec<String>,
    pub outputs: Vec<PathBuf>,
}

impl RunSummary {
    pub fn new(
        p_f: FailureEstimate,
        records: &[SensitivityRecord],
        warnings: Vec<String>,
        outputs: Vec<PathBuf>,
    ) -> Self {
        let mut best: BTreeMap<usize, f64> = BTreeMap::new();
        for r in records.iter().filter(|r| r.is_feasible() && r.s_hat.is_finite()) {
            let e = best.entry(r.variable + 1).or_insert(0.0);
            *e = e.max(r.s_hat.abs());
        }
        let max_abs_s: Vec<(usize, f64)> = best.into_iter().collect();
        let mut order = max_abs_s.clone();
        order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        RunSummary {
            p_f,
            records: records.len(),
            infeasible: records.iter().filter(|r| !r.is_feasible()).count(),
            max_abs_s,
            ranking: order.into_iter().map(|(v, _)| v).collect(),
            warnings,
            outputs,
        }
    }
}

impl fmt::Display for RunSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        writeln!(
            f,
            "p_f = {:.6e} (stderr {:.2e}), N = {}, failures = {}",
            self.p_f.p_hat,
            self.p_f.var_hat.sqrt(),
            self.p_f.n,
            self.p_f.failures
        )?;
        writeln!(f, "records: {} ({} infeasible)", self.records, self.infeasible)?;
        for (v, s) in &self.max_abs_s {
            writeln!(f, "  x{v}: max |S| = {s:.4}")?;
        }
        let ranking: Vec<String> = self.ranking.iter().map(|v| format!("x{v}")).collect();
        writeln!(f, "ranking: {}", ranking.join(" > "))?;
        for p in &self.outputs {
            writeln!(f, "wrote {}", p.display())?;
        }
        Ok(())
    }
}
