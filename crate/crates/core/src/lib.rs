//! Contamination detection in X-ray images of apparel items.
//!
//! The detector runs in two stages. A multi-threshold filter binarizes
//! each image at a ladder of gray thresholds, keeps white objects whose
//! area, aspect ratio and solidity fall inside calibrated confidence
//! intervals, prunes clustered artefacts by density and checks shape
//! stability one threshold step up; the survivors are candidate
//! contaminations. A small convolutional network, trained from scratch
//! on 120x120 crops, then separates true contaminations from false
//! alarms. The crate also ships a seeded synthetic scene generator, the
//! evaluation/search harness, and end-to-end pipeline orchestration.

pub mod cnn;
pub mod error;
pub mod eval;
pub mod imaging;
pub mod mtfilter;
pub mod pipeline;
pub mod seeds;
pub mod synth;

pub use error::{Error, Result};
