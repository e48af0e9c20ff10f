//! Benchmark harness: run a refiner over a dataset directory and emit a
//! foreground/background metric report.
//!
//! Per-sample work is independent and may fan out across workers; rows are
//! reduced in sample-id order so the report bytes do not depend on the
//! worker count. Neural-metric columns are emitted as "n/a" placeholders so
//! report schemas line up with the full metric table without pretending to
//! compute them.

use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backend::{build_refiner, BackendConfig, IdentityRefiner, OracleRefiner, Refiner};
use crate::degrade::{load_stored_sample, StoredSample};
use crate::error::{Error, Result};
use crate::eval::{evaluate_sample, RegionSplit};
use crate::pipeline::{refine_image, PipelineConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub id: String,
    pub mse: f64,
    pub ssim: f64,
    pub mse_bg: f64,
    pub ssim_bg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub id: String,
    pub error: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub samples: usize,
    pub failures: usize,
}

/// Aggregate row mirroring the full metric table; columns this artifact
/// cannot compute hold "n/a".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mse: f64,
    pub lpips: String,
    pub vgg: String,
    pub dino: String,
    pub clip: String,
    pub ssim: f64,
    pub mse_bg: f64,
    pub lpips_bg: String,
    pub ssim_bg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub backend_id: String,
    pub config: PipelineConfig,
    pub counts: Counts,
    pub aggregate: Aggregate,
    pub per_sample: Vec<SampleRow>,
    pub failures: Vec<Failure>,
}

impl MetricReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// One CSV header plus one aggregate row for this backend.
pub fn aggregate_csv(report: &MetricReport) -> String {
    let a = &report.aggregate;
    format!(
        "backend,samples,mse,lpips,vgg,dino,clip,ssim,mse_bg,lpips_bg,ssim_bg\n{},{},{:.6},{},{},{},{},{:.6},{:.6},{},{:.6}\n",
        report.backend_id,
        report.counts.samples,
        a.mse,
        a.lpips,
        a.vgg,
        a.dino,
        a.clip,
        a.ssim,
        a.mse_bg,
        a.lpips_bg,
        a.ssim_bg
    )
}

fn backend_for_sample(
    config: &BackendConfig,
    shared: &Option<Arc<dyn Refiner>>,
    sample: &StoredSample,
) -> Result<Arc<dyn Refiner>> {
    match config {
        BackendConfig::Oracle { .. } => Ok(Arc::new(OracleRefiner::new(sample.gt.clone()))),
        _ => Ok(shared.clone().expect("non-oracle backends are prebuilt")),
    }
}

fn backend_label(config: &BackendConfig, shared: &Option<Arc<dyn Refiner>>) -> String {
    match config {
        BackendConfig::Oracle { .. } => "oracle".into(),
        _ => shared
            .as_ref()
            .map(|b| b.backend_id())
            .unwrap_or_else(|| "unknown".into()),
    }
}

/// Run `focus -> refine -> paste back -> evaluate` over every sample under
/// `dataset_dir`. Per-sample failures land in the report instead of aborting
/// the run.
pub fn run_benchmark(
    dataset_dir: &Path,
    config: &PipelineConfig,
    workers: usize,
) -> Result<MetricReport> {
    let dirs = crate::degrade::dataset::list_dataset_dirs(dataset_dir)?;

    // identity / external clients are shared; oracles are built per sample
    let shared: Option<Arc<dyn Refiner>> = match &config.backend {
        BackendConfig::Oracle { .. } => None,
        BackendConfig::Identity => Some(Arc::new(IdentityRefiner)),
        external => Some(build_refiner(external)?),
    };

    let run_one = |dir: &std::path::PathBuf| -> std::result::Result<SampleRow, Failure> {
        let id = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| dir.display().to_string());
        let to_failure = |e: Error| Failure { id: id.clone(), error: e.to_string() };
        let sample = load_stored_sample(dir).map_err(to_failure)?;
        let refiner = backend_for_sample(&config.backend, &shared, &sample).map_err(to_failure)?;
        let outcome = refine_image(
            &sample.input,
            &sample.mask,
            sample.reference.as_ref(),
            &sample.meta.instruction,
            config,
            refiner.as_ref(),
        )
        .map_err(to_failure)?;
        let split = RegionSplit::new(
            sample.meta.fg_box,
            sample.input.height(),
            sample.input.width(),
        )
        .map_err(to_failure)?;
        let metrics =
            evaluate_sample(&outcome.output, &sample.gt, &sample.input, &split).map_err(to_failure)?;
        Ok(SampleRow {
            id,
            mse: metrics.mse,
            ssim: metrics.ssim,
            mse_bg: metrics.mse_bg,
            ssim_bg: metrics.ssim_bg,
        })
    };

    let results: Vec<std::result::Result<SampleRow, Failure>> = if workers <= 1 {
        dirs.iter().map(run_one).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        pool.install(|| dirs.par_iter().map(run_one).collect())
    };

    let mut per_sample = Vec::new();
    let mut failures = Vec::new();
    for result in results {
        match result {
            Ok(row) => per_sample.push(row),
            Err(failure) => failures.push(failure),
        }
    }
    if per_sample.is_empty() {
        return Err(Error::NoSamples(dataset_dir.to_path_buf()));
    }

    let n = per_sample.len() as f64;
    let mean = |f: fn(&SampleRow) -> f64| per_sample.iter().map(f).sum::<f64>() / n;
    let aggregate = Aggregate {
        mse: mean(|r| r.mse),
        lpips: "n/a".into(),
        vgg: "n/a".into(),
        dino: "n/a".into(),
        clip: "n/a".into(),
        ssim: mean(|r| r.ssim),
        mse_bg: mean(|r| r.mse_bg),
        lpips_bg: "n/a".into(),
        ssim_bg: mean(|r| r.ssim_bg),
    };

    Ok(MetricReport {
        backend_id: backend_label(&config.backend, &shared),
        config: config.clone(),
        counts: Counts {
            samples: per_sample.len(),
            failures: failures.len(),
        },
        aggregate,
        per_sample,
        failures,
    })
}
