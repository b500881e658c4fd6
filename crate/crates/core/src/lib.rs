//! Synthetic 2D shape benchmark for primitive visual measurement, plus the
//! matching-based metrics used to score model outputs against it.
//!
//! The pipeline is: [`genset`] samples constrained [`scene::SceneConfig`]s,
//! [`render`] rasterizes them, [`textio`] turns them into Sentence or Tuple
//! targets and parses predictions back, [`assign`] aligns predicted shapes
//! with ground truth, and [`metrics`] scores the aligned pairs.
//! [`lossmask`] builds numeric-token loss weights for fine-tuning pipelines.

pub mod assign;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod evaluate;
pub mod genset;
pub mod lossmask;
pub mod metrics;
pub mod render;
pub mod scene;
pub mod textio;

pub use error::{Error, Result};
