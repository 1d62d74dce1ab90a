use crate::solve::{execute, load_model, MethodId, RunManifest, RunReport};
use anyhow::{bail, Context, Result};
use serde::Serialize;
use std::io::Write;

#[derive(Debug, Serialize)]
pub struct SummaryRow {
    pub model: String,
    pub method: &'static str,
    pub seed: u64,
    pub status: &'static str,
    pub objective: Option<f64>,
    pub iterations: usize,
    pub mean_iteration_ms: f64,
    pub cpu_ms: f64,
    pub sampler_ms: f64,
    pub agrees: bool,
}

/// Runs every (model, method, seed) cell. Rows come back sorted by model,
/// method and seed; `agrees` compares each objective with the first
/// successful one on the same model. Returns the rows and the number of
/// disagreements.
pub fn compare(base: &RunManifest, models: &[std::path::PathBuf], methods: &[MethodId], seeds: &[u64]) -> Result<(Vec<SummaryRow>, usize)> {
    if methods.is_empty() {
        bail!("at least one method is required");
    }
    if models.is_empty() || seeds.is_empty() {
        bail!("at least one model and one seed are required");
    }
    let mut models = models.to_vec();
    models.sort();
    let mut methods = methods.to_vec();
    methods.sort();
    methods.dedup();
    let mut seeds = seeds.to_vec();
    seeds.sort();
    seeds.dedup();

    let mut rows = vec![];
    let mut disagreements = 0;
    for path in &models {
        let p = load_model(path).with_context(|| format!("model {}", path.display()))?;
        let mut reference: Option<f64> = None;
        for &method in &methods {
            for &seed in &seeds {
                let m = RunManifest {
                    model: path.clone(),
                    method,
                    seed,
                    r: if method == MethodId::Bd2 { base.r } else { 1 },
                    ..base.clone()
                };
                let out = execute(&m, &p);
                let RunReport { status, objective, iterations, .. } = out.report;
                let agrees = match (objective, reference) {
                    (Some(v), Some(r)) => (v - r).abs() <= base.eps,
                    (Some(v), None) => {
                        reference = Some(v);
                        true
                    }
                    (None, _) => false,
                };
                if !agrees {
                    disagreements += 1;
                    log::error!(
                        "DISAGREEMENT on {}: {} seed {seed} gave {objective:?} ({status}), reference {reference:?}",
                        path.display(),
                        method.name()
                    );
                }
                rows.push(SummaryRow {
                    model: path.display().to_string(),
                    method: method.name(),
                    seed,
                    status,
                    objective,
                    iterations,
                    mean_iteration_ms: out.timings.mean_iteration_ms,
                    cpu_ms: out.timings.master_ms + out.timings.subproblem_ms,
                    sampler_ms: out.timings.sampler_ms,
                    agrees,
                });
            }
        }
    }
    Ok((rows, disagreements))
}

pub fn write_csv(rows: &[SummaryRow], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
