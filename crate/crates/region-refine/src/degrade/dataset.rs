//! On-disk dataset layout and deterministic batch generation.
//!
//! Source directory: one subdirectory per sample holding `gt.png` and
//! `object_mask.png`, optionally `ref.png` and `instruction.txt`.
//!
//! Emitted dataset: one subdirectory per sample holding `input.png`,
//! `gt.png`, `mask.png`, optional `ref.png`, and `meta.json` with the
//! instruction, the foreground box annotation, and full provenance. The
//! benchmark harness consumes exactly this layout.
//!
//! Each sample's RNG stream is derived from `(global_seed, sample_index)`
//! via splitmix64, so parallel and serial runs emit byte-identical trees.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::degrade::{
    assemble_sample, validate_sample, DegradedSample, InpainterConfig, Provenance, ScribbleParams,
    ValidatorConfig, Verdict,
};
use crate::error::{Error, Result};
use crate::focus::{bbox_from_mask, expand_box, BBox};
use crate::raster::{BinaryMask, RasterImage};

/// Margin around the scribble bbox folded into the foreground annotation so
/// it covers the paste-back blend support with slack.
const FG_BOX_MARGIN: usize = 16;

/// splitmix64: the documented, portable seed derivation used everywhere a
/// per-sample stream is split off a global seed.
pub fn derive_seed(global_seed: u64, index: u64) -> u64 {
    let mut z = global_seed
        .wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DegradeConfig {
    pub scribble: ScribbleParams,
    pub inpainter: InpainterConfig,
    pub validator: ValidatorConfig,
    /// Degraded variants emitted per source sample, each with its own
    /// derived seed.
    pub variants: usize,
}

impl Default for DegradeConfig {
    fn default() -> Self {
        Self {
            scribble: ScribbleParams::default(),
            inpainter: InpainterConfig::default(),
            validator: ValidatorConfig::default(),
            variants: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub instruction: String,
    /// Foreground annotation: the object bbox united with the expanded
    /// scribble bbox, so the whole blend support counts as foreground.
    pub fg_box: BBox,
    pub provenance: Provenance,
}

/// A sample as read back from a dataset directory.
#[derive(Debug, Clone)]
pub struct StoredSample {
    pub id: String,
    pub input: RasterImage,
    pub gt: RasterImage,
    pub mask: BinaryMask,
    pub reference: Option<RasterImage>,
    pub meta: SampleMeta,
}

pub fn load_stored_sample(dir: &Path) -> Result<StoredSample> {
    let id = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.display().to_string());
    let input = RasterImage::read_png(dir.join("input.png"))?;
    let gt = RasterImage::read_png(dir.join("gt.png"))?;
    let mask = BinaryMask::read_png(dir.join("mask.png"))?;
    let ref_path = dir.join("ref.png");
    let reference = if ref_path.exists() {
        Some(RasterImage::read_png(ref_path)?)
    } else {
        None
    };
    let meta_path = dir.join("meta.json");
    let meta_text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let meta: SampleMeta = serde_json::from_str(&meta_text)
        .map_err(|e| Error::Config(format!("{}: {e}", meta_path.display())))?;
    Ok(StoredSample {
        id,
        input,
        gt,
        mask,
        reference,
        meta,
    })
}

fn write_sample(dir: &Path, sample: &DegradedSample, fg_box: BBox) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    sample.input.write_png(dir.join("input.png"))?;
    sample.gt.write_png(dir.join("gt.png"))?;
    sample.mask.write_png(dir.join("mask.png"))?;
    if let Some(reference) = &sample.reference {
        reference.write_png(dir.join("ref.png"))?;
    }
    let meta = SampleMeta {
        instruction: sample.instruction.clone(),
        fg_box,
        provenance: sample.provenance.clone(),
    };
    let meta_path = dir.join("meta.json");
    let text = serde_json::to_string_pretty(&meta).expect("meta serializes");
    fs::write(&meta_path, text + "\n").map_err(|e| Error::io(&meta_path, e))
}

/// The foreground annotation for a generated sample.
fn fg_annotation(object_mask: &BinaryMask, scribble: &BinaryMask) -> Result<BBox> {
    let canvas_h = object_mask.height();
    let canvas_w = object_mask.width();
    let obj = bbox_from_mask(object_mask)?;
    let scr = expand_box(&bbox_from_mask(scribble)?, FG_BOX_MARGIN, canvas_h, canvas_w);
    Ok(obj.union(&scr))
}

#[derive(Debug, Clone, Default)]
pub struct GenerateSummary {
    pub written: usize,
    /// Source samples that could not be processed, with reasons.
    pub skipped: Vec<(String, String)>,
    /// Samples the validator refused, with reasons.
    pub rejected: Vec<(String, String)>,
}

struct SourceEntry {
    id: String,
    dir: PathBuf,
}

fn list_sample_dirs(root: &Path) -> Result<Vec<SourceEntry>> {
    let mut entries = Vec::new();
    let read = fs::read_dir(root).map_err(|e| Error::io(root, e))?;
    for entry in read {
        let entry = entry.map_err(|e| Error::io(root, e))?;
        let path = entry.path();
        if path.is_dir() {
            entries.push(SourceEntry {
                id: entry.file_name().to_string_lossy().into_owned(),
                dir: path,
            });
        }
    }
    entries.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(entries)
}

/// Enumerate the sample subdirectories of a dataset, sorted by id.
pub fn list_dataset_dirs(root: &Path) -> Result<Vec<PathBuf>> {
    let entries = list_sample_dirs(root)?;
    if entries.is_empty() {
        return Err(Error::NoSamples(root.to_path_buf()));
    }
    Ok(entries.into_iter().map(|e| e.dir).collect())
}

enum JobOutcome {
    Written,
    Skipped(String, String),
    Rejected(String, String),
}

/// Degrade every source sample into `out_dir`, fanning out across `workers`
/// threads. Per-sample failures are recorded, not fatal.
pub fn generate_dataset(
    gt_dir: &Path,
    out_dir: &Path,
    config: &DegradeConfig,
    global_seed: u64,
    workers: usize,
) -> Result<GenerateSummary> {
    if config.variants == 0 {
        return Err(Error::InvalidParameter("variants must be >= 1".into()));
    }
    let sources = list_sample_dirs(gt_dir)?;
    if sources.is_empty() {
        return Err(Error::NoSamples(gt_dir.to_path_buf()));
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    struct Job {
        out_id: String,
        src_dir: PathBuf,
        seed: u64,
    }
    let mut jobs = Vec::new();
    for (src_index, source) in sources.iter().enumerate() {
        for variant in 0..config.variants {
            let out_id = if config.variants == 1 {
                source.id.clone()
            } else {
                format!("{}-v{:02}", source.id, variant)
            };
            let index = (src_index * config.variants + variant) as u64;
            jobs.push(Job {
                out_id,
                src_dir: source.dir.clone(),
                seed: derive_seed(global_seed, index),
            });
        }
    }

    let run_job = |job: &Job| -> JobOutcome {
        let gt_path = job.src_dir.join("gt.png");
        let mask_path = job.src_dir.join("object_mask.png");
        if !mask_path.exists() {
            return JobOutcome::Skipped(job.out_id.clone(), "missing object_mask.png".into());
        }
        let result = (|| -> Result<Option<String>> {
            let gt = RasterImage::read_png(&gt_path)?;
            let object_mask = BinaryMask::read_png(&mask_path)?;
            let ref_path = job.src_dir.join("ref.png");
            let reference = if ref_path.exists() {
                Some(RasterImage::read_png(&ref_path)?)
            } else {
                None
            };
            let instruction_path = job.src_dir.join("instruction.txt");
            let instruction = if instruction_path.exists() {
                fs::read_to_string(&instruction_path)
                    .map_err(|e| Error::io(&instruction_path, e))?
                    .trim()
                    .to_string()
            } else {
                "Refine the masked region.".to_string()
            };
            let params = ScribbleParams {
                seed: job.seed,
                ..config.scribble.clone()
            };
            let sample = assemble_sample(
                &gt,
                &object_mask,
                reference.as_ref(),
                &instruction,
                &params,
                &config.inpainter,
            )?;
            if let Verdict::Reject(reason) = validate_sample(&sample, &config.validator)? {
                return Ok(Some(reason));
            }
            let fg_box = fg_annotation(&object_mask, &sample.mask)?;
            write_sample(&out_dir.join(&job.out_id), &sample, fg_box)?;
            Ok(None)
        })();
        match result {
            Ok(None) => JobOutcome::Written,
            Ok(Some(reason)) => JobOutcome::Rejected(job.out_id.clone(), reason),
            Err(e) => JobOutcome::Skipped(job.out_id.clone(), e.to_string()),
        }
    };

    let outcomes: Vec<JobOutcome> = if workers <= 1 {
        jobs.iter().map(run_job).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        pool.install(|| jobs.par_iter().map(run_job).collect())
    };

    let mut summary = GenerateSummary::default();
    for outcome in outcomes {
        match outcome {
            JobOutcome::Written => summary.written += 1,
            JobOutcome::Skipped(id, why) => summary.skipped.push((id, why)),
            JobOutcome::Rejected(id, why) => summary.rejected.push((id, why)),
        }
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::RasterImage;

    fn write_source(root: &Path, id: &str, with_mask: bool) {
        let dir = root.join(id);
        fs::create_dir_all(&dir).unwrap();
        let gt = RasterImage::from_fn(96, 96, 3, |y, x, c| {
            (((x * 2 + y * 3 + c * 40) % 256) as f32) / 255.0
        })
        .unwrap();
        gt.write_png(dir.join("gt.png")).unwrap();
        if with_mask {
            let mask = BinaryMask::from_fn(96, 96, |y, x| {
                let dy = y as f64 - 48.0;
                let dx = x as f64 - 48.0;
                dy * dy + dx * dx <= 20.0 * 20.0
            });
            mask.write_png(dir.join("object_mask.png")).unwrap();
        }
    }

    #[test]
    fn derive_seed_spreads_indices() {
        let a = derive_seed(1, 0);
        let b = derive_seed(1, 1);
        let c = derive_seed(2, 0);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, derive_seed(1, 0));
    }

    #[test]
    fn generate_writes_layout_and_round_trips() {
        let tmp = tempfile::tempdir().unwrap();
        let src = tmp.path().join("src");
        let out = tmp.path().join("out");
        write_source(&src, "a", true);
        write_source(&src, "b", true);
        let summary =
            generate_dataset(&src, &out, &DegradeConfig::default(), 7, 1).unwrap();
        assert_eq!(summary.written, 2);
        assert!(summary.skipped.is_empty());

        let sample = load_stored_sample(&out.join("a")).unwrap();
        assert_eq!(sample.id, "a");
        assert_eq!(sample.meta.provenance.inpainter_id, "builtin");
        assert!(sample.meta.fg_box.x2 < 96);
        // input differs from gt only inside the foreground annotation
        for y in 0..96 {
            for x in 0..96 {
                if !sample.meta.fg_box.contains_point(x, y) {
                    for c in 0..3 {
                        assert_eq!(sample.input.get(y, x, c), sample.gt.get(y, x, c));
                    }
                }
            }
        }
    }

    #[test]
    fn missing_mask_is_skipped_with_reason() {
        let tmp = tempfile::tempdir().unwrap();
        let src = tmp.path().join("src");
        let out = tmp.path().join("out");
        write_source(&src, "good", true);
        write_source(&src, "bad", false);
        let summary = generate_dataset(&src, &out, &DegradeConfig::default(), 7, 1).unwrap();
        assert_eq!(summary.written, 1);
        assert_eq!(summary.skipped.len(), 1);
        assert_eq!(summary.skipped[0].0, "bad");
        assert!(summary.skipped[0].1.contains("object_mask"));
    }

    #[test]
    fn parallel_and_serial_trees_match() {
        let tmp = tempfile::tempdir().unwrap();
        let src = tmp.path().join("src");
        write_source(&src, "a", true);
        write_source(&src, "b", true);
        write_source(&src, "c", true);
        let cfg = DegradeConfig { variants: 2, ..Default::default() };
        let out1 = tmp.path().join("serial");
        let out8 = tmp.path().join("parallel");
        generate_dataset(&src, &out1, &cfg, 3, 1).unwrap();
        generate_dataset(&src, &out8, &cfg, 3, 8).unwrap();
        let tree = |root: &Path| {
            let mut files: Vec<(String, Vec<u8>)> = walk(root)
                .into_iter()
                .map(|p| {
                    (
                        p.strip_prefix(root).unwrap().display().to_string(),
                        fs::read(&p).unwrap(),
                    )
                })
                .collect();
            files.sort();
            files
        };
        assert_eq!(tree(&out1), tree(&out8));
    }

    fn walk(root: &Path) -> Vec<PathBuf> {
        let mut out = Vec::new();
        let mut stack = vec![root.to_path_buf()];
        while let Some(dir) = stack.pop() {
            for entry in fs::read_dir(&dir).unwrap() {
                let path = entry.unwrap().path();
                if path.is_dir() {
                    stack.push(path);
                } else {
                    out.push(path);
                }
            }
        }
        out
    }
}
