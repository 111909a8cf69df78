//! Adversarial reward learning for conditional sequence generation.
//!
//! A policy model turns a stream of five feature vectors into a five-sentence
//! story; a convolutional reward model learns an implicit reward from
//! reference stories through a Boltzmann min-max game against the policy.
//! Everything here is allocation-only (`alloc`) so the crate builds without
//! `std`; file formats, the CLI and wall-clock timing live in the `arel`
//! companion crate.
//!
//! Module map:
//!
//! * [`numerics`]: arrays, parameter stores, a reverse-mode tape, the
//!   recurrent/convolutional kernels, Adam and a finite-difference checker.
//! * [`policy`]: vocabulary, album/story types and the story generator.
//! * [`reward`]: the per-sentence reward model.
//! * [`objectives`]: Boltzmann objectives, gradient estimators and the
//!   training loops (AREL, XE with scheduled sampling, GAN and metric RL).
//! * [`metrics`]: BLEU, ROUGE-L, CIDEr, METEOR-lite, histograms and the
//!   metric attack.
//! * [`harness`]: synthetic corpora, vocab building, reward reports and
//!   corpus ratios.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod error;
pub mod harness;
pub mod metrics;
pub mod numerics;
pub mod objectives;
pub mod policy;
pub mod reward;

pub use error::{Error, Result};
