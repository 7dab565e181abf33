//! Molecular representations of parametrized quantum circuits.
//!
//! The crate maps layered Rz/CNOT gate grids onto annotated molecules and
//! back, derives molecular descriptors (Gershgorin radii of Coulomb
//! matrices, PCA-reduced path fingerprints), scores circuits as quantum
//! kernels for binary SVM classification, and provides the statistics used
//! to study how descriptors predict kernel performance.
//!
//! Module map:
//! - [`circuit`]: gate grids, random sampling, validation, depth extension.
//! - [`chemmap`]: the circuit-molecule mapping and its inverse.
//! - [`molecule`]: hydrogen saturation, 2D layout, Coulomb matrices,
//!   Gershgorin radii.
//! - [`fingerprint`]: hashed bonded-path fingerprints and PCA.
//! - [`simulator`]: statevector feature map, ansatz evolution, kernels.
//! - [`svm`]: SMO dual solver, balanced accuracy, performance labels.
//! - [`bayesopt`]: Gaussian-process parameter search.
//! - [`datasets`]: classification problems, scaling, splitting.
//! - [`stats`]: KDE with bootstrap bands, quadrants, enrichment.

pub mod bayesopt;
pub mod chemmap;
pub mod circuit;
pub mod datasets;
pub mod error;
pub mod fingerprint;
pub mod molecule;
pub mod rng;
pub mod simulator;
pub mod stats;
pub mod svm;

pub use error::{Error, Result};
