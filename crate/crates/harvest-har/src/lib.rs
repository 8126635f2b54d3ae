//! Detection of fruit-picker bag-emptying events from wearable sensor data.
//!
//! A wearable sensor on a picker's bag strap logs 3-axis acceleration at
//! 50 Hz and the RSSI to a bin-mounted radio node at 1 Hz. Emptying a full
//! picker bag into a harvesting bin leaves a signature in both streams:
//! the gait changes under load on the walk to the bin, the RSSI rises with
//! proximity, the bag lift spikes the accelerometer, and the shake/empty
//! phase keeps the signal level high until the picker walks back.
//!
//! This crate provides the full pipeline:
//!
//! ```text
//! synth::generate          synthetic labelled recordings (the field data
//!                          this pipeline was designed for is private)
//!   -> preprocess::fuse    bandpass, [0,1] scaling, 4-stream fusion
//!   -> labeling::learn_labels
//!                          semi-supervised event-duration refinement
//!                          (2-means clustering + set-theoretic filtering)
//!   -> models              ensemble (Gaussian NB + MLP) and a recurrent
//!                          convolutional network, trained with ADAM and
//!                          hand-written reverse-mode gradients
//!   -> eval::run_cv        6-fold contiguous cross-validation, confusion
//!                          metrics, per-window prediction traces
//!   -> report              SVG prediction overlays and box-whisker plots
//! ```
//!
//! Everything is deterministic given a seed; see [`rng`] for the generator.
//! The `harvest-har` binary wires the stages into subcommands operating on
//! the canonical CSV formats defined in [`data`].

pub mod config;
pub mod data;
pub mod error;
pub mod eval;
pub mod features;
pub mod labeling;
pub mod models;
pub mod preprocess;
pub mod report;
pub mod rng;
pub mod synth;

pub use error::{Error, Result};
