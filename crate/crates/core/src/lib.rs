//! Random walks on the augmented rooted tree of the d-dimensional Sierpinski
//! gasket.
//!
//! The graph has the words over `{0, ..., d}` as vertices, vertical edges
//! between a word and its ancestor, and horizontal edges between same-level
//! words whose cells intersect. This crate builds that graph lazily, runs
//! the simple random walk on it with reproducible counter-based randomness,
//! computes exit laws and killed Green functions in exact rational
//! arithmetic, folds walks onto the `0X` subtree through the reflection
//! coupling, and verifies that the hitting distribution from the root is
//! the uniform self-similar measure (exactly at finite level, statistically
//! in the limit).
//!
//! Modules follow the pipeline:
//!
//! - [`symbolic`]: words, parity, neighbor sets, exact barycentric geometry
//! - [`geometry`]: the edge structure and the lazy neighbor oracle
//! - [`symmetry`]: the permutation action of the gasket's symmetry group
//! - [`walk`]: seeded simulation and level-hitting estimators
//! - [`coupling`]: the reflection principle and the folded walk
//! - [`exact`]: rational exit laws, first-step systems, Green functions
//! - [`measures`]: cell-level measures and the identity verifiers

pub mod coupling;
pub mod error;
pub mod exact;
pub mod geometry;
pub mod measures;
pub mod symbolic;
pub mod symmetry;
pub mod walk;

pub use error::GasketError;
pub use symbolic::{GasketConfig, Word};
