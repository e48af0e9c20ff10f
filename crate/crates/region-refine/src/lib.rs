//! Region-specific image refinement with strict background preservation.
//!
//! The pipeline localizes a user-specified region, crops it with a margin,
//! reallocates a fixed pixel budget to the crop, hands the focused view to a
//! pluggable refiner backend, and pastes the result back through a blended
//! mask — every pixel outside the blend support keeps its original bits.
//!
//! The crate also ships the training-side boundary-weighted flow-matching
//! loss, a seeded scribble-degradation pipeline for building synthetic
//! refinement datasets, and a benchmark harness that reports
//! foreground/background-split MSE and SSIM.
//!
//! Start with the runnable examples, one per capability:
//!
//! ```bash
//! cargo run --release --example focus_and_paste
//! cargo run --release --example scribbles
//! cargo run --release --example degrade_dataset
//! cargo run --release --example benchmark
//! cargo run --release --example boundary_loss
//! cargo run --release --example mock_backend
//! ```
//!
//! A thin `region-refine` binary exposes the same capabilities as the
//! `refine`, `degrade`, `eval`, and `band` subcommands.

pub mod backend;
pub mod boundary;
pub mod degrade;
pub mod error;
pub mod eval;
pub mod focus;
pub mod pasteback;
pub mod pipeline;
pub mod raster;

pub use error::{BackendError, Error, Result};
pub use pipeline::{refine_image, PipelineConfig, RefineOutcome};
