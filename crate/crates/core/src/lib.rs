//! Classify Android apps from what is recoverable inside the package:
//! smali method names, `strings.xml` values and text found in images.
//!
//! The pipeline runs in stages, each with its own on-disk artifact:
//!
//! 1. [`extract`] scans decompiled app directories into raw token lists.
//! 2. [`textstats`] measures obfuscation, encryption-likeness and
//!    non-English content on the raw tokens.
//! 3. [`preprocess`] normalizes, stems and prunes the tokens and drops
//!    uninteresting apps.
//! 4. [`topicmodel`] fits LDA by collapsed Gibbs sampling.
//! 5. [`classify`] turns topic mixtures into categories, similarity
//!    scores and anomaly candidates.
//!
//! [`pipeline`] wires the stages to the file formats in [`dataset`].

pub mod classify;
pub mod config;
pub mod dataset;
mod error;
pub mod extract;
pub mod pipeline;
pub mod preprocess;
pub mod textstats;
pub mod topicmodel;

pub use error::{Error, Result};
