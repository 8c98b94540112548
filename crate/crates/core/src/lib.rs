//! Desk-scale radiomics robustness laboratory.
//!
//! The crate rebuilds a full radiomics pipeline on a procedurally generated
//! sixteen-fruit phantom:
//!
//! * [`phantom`] generates volumes under five MRI-like sequence profiles,
//!   with repositioning and 90° rotation;
//! * [`segmentation`] derives full, partial, rotated and inter-observer
//!   segmentation variants from the ground-truth mask;
//! * [`radiomics`] extracts 107 standardized shape, intensity and texture
//!   features;
//! * [`learner`] is a from-scratch gradient-boosted tree classifier with
//!   stratified grid-search cross-validation;
//! * [`evalcal`] holds F1 / accuracy / ECE metrics and temperature scaling;
//! * [`scenarios`] assembles the inter-observer, cross-protocol and compound
//!   distribution-shift experiments and produces robustness reports;
//! * [`pipeline`] wires everything behind a declarative JSON [`config`].
//!
//! Runnable walkthroughs for each capability live in `examples/`.

pub mod config;
pub mod error;
pub mod evalcal;
pub mod learner;
pub mod phantom;
pub mod pipeline;
pub mod radiomics;
pub mod rng;
pub mod scenarios;
pub mod segmentation;
pub mod volio;
pub mod volume;

pub use error::{Error, Result};
