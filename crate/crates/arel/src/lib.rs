//! File formats and the command-line driver for `arel-core`.
//!
//! * [`dataset`]: one album per line, tab separated.
//! * [`vocab_file`]: id-ordered token lists.
//! * [`checkpoint`]: both models as a key/value config, manifests and raw
//!   little-endian `f64` blobs.
//! * [`reports`]: CSV writers for metric, histogram and reward reports,
//!   and the training log sink.
//! * [`cli`]: the `arel` subcommands.

pub mod checkpoint;
pub mod cli;
pub mod dataset;
pub mod reports;
pub mod vocab_file;
