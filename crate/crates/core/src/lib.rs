//! Masked eigenface + Isomap clustering for binary facial classification
//! (glasses occlusion, smile), with network measures that rank the most
//! informative training faces.
//!
//! Stages, in pipeline order:
//!
//! * [`dataset`] / [`image`]: ORL-layout PGM corpus, annotations, resizing.
//! * [`patching`]: automatic eye/mouth bands from high-pass region moments.
//! * [`eigenface`]: mean face, Gram-matrix eigenfaces, per-face signatures.
//! * [`manifold`]: k-NN graph, geodesics, 2-D classical MDS.
//! * [`classify`]: farthest-pair seeds, nearest-seed labels, SEN/SPEC/ACC/AUC.
//! * [`netmetrics`]: betweenness, eigencentrality, repeated max-flow/min-cut.
//! * [`pipeline`] and [`commands`]: end-to-end runs, sweeps, artifacts, timing.

pub mod classify;
pub mod commands;
pub mod dataset;
pub mod eigenface;
pub mod error;
pub mod export;
pub mod image;
pub mod linalg;
pub mod manifold;
pub mod netmetrics;
pub mod patching;
pub mod pipeline;
pub mod synth;

pub use error::{Error, Result};
