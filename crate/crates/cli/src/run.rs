use std::path::{Path, PathBuf};

use dpsa::prelude::*;
use std::result::Result;

use crate::config::{RunConfig, RunPlan, SampleSource};
use crate::error::CliError;
use crate::report::{render_table, write_file, write_series, RunSummary};

/// Runs `f` on a pool of `threads` workers; 0 keeps rayon's default pool.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    if threads == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Numerical(format!("cannot start {threads} worker threads: {e}")))?;
    Ok(pool.install(f))
}

pub fn load_sample(plan: &RunPlan) -> Result<EvaluatedSample, CliError> {
    match &plan.source {
        SampleSource::Linear { model, n, seed } => Ok(build_sample(model, &plan.marginals, *n, *seed)?),
        SampleSource::Tabulated { path } => Ok(ingest_sample(path, &plan.marginals)?),
    }
}

/// Samples, sweeps and writes every output named by `plan`.
pub fn execute(plan: &RunPlan) -> Result<RunSummary, CliError> {
    let sample = load_sample(plan)?;
    let p_f = estimate_pf(&sample);
    if p_f.failures == 0 {
        return Err(CliError::Numerical(format!(
            "no failures among {} sample points; sensitivity indices are undefined",
            p_f.n
        )));
    }
    let records = sweep(&sample, &plan.plan, plan.confidence)?;
    let table = render_table(
        &records,
        &plan.marginals,
        &p_f,
        sample.seed(),
        plan.confidence,
        plan.format,
    );
    write_file(&plan.output, &table)?;
    let mut outputs = vec![plan.output.clone()];
    if let Some(dir) = &plan.series_dir {
        outputs.extend(write_series(dir, &records, &plan.marginals)?);
    }
    Ok(RunSummary::new(p_f, &records, sample.warnings().to_vec(), outputs))
}

/// Loads, validates and executes a config file. `output` replaces the
/// table path from the file.
pub fn run(config: &Path, output: Option<PathBuf>, threads: usize) -> Result<RunSummary, CliError> {
    let cfg = RunConfig::load(config)?;
    let base = config.parent().unwrap_or(Path::new("."));
    let mut plan = cfg.validate(base)?;
    if let Some(out) = output {
        plan.output = out;
    }
    with_threads(threads, || execute(&plan))?
}
