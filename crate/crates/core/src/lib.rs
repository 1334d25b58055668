//! Segmentation of cell nuclei in 3D fluorescence volumes.
//!
//! The pipeline binarizes a volume slab by slab ([`binarize`]), extracts the
//! 6-connected foreground components ([`voxel`]), and recursively splits each
//! component with balanced graph bipartitions ([`partition`]) until a fuzzy
//! volume/sphericity nucleus model ([`nucmodel`]) is satisfied ([`splitter`]).
//! A seeded scene generator ([`synthgen`]) and error counts against ground
//! truth ([`evaluate`]) support testing.

pub mod binarize;
pub mod cli;
pub mod error;
pub mod evaluate;
pub mod geometry;
pub mod graphbuild;
pub mod histmodel;
pub mod nucmodel;
pub mod partition;
pub mod splitter;
pub mod synthgen;
pub mod voxel;

pub use error::{Error, Result};
