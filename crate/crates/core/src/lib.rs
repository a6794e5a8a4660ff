//! Cross-silo column matching.
//!
//! Each data silo is a set of tables whose intra-silo column matches are
//! already known. The library turns that knowledge into a link-prediction
//! model that scores column pairs *across* silos:
//!
//! 1. [`profiling`] summarizes every column as a 987-dimensional numeric
//!    profile (global statistics plus per-character aggregates).
//! 2. [`graph`] represents each silo as an undirected relatedness graph
//!    whose connected components are semantic domains.
//! 3. [`sampling`] draws negative (cross-component) training edges under
//!    three strategies, NS1/NS2/NS3.
//! 4. [`neural`] is a from-scratch float64 GraphSAGE encoder (max-pool
//!    aggregation) plus an MLP pair scorer with exact analytic gradients,
//!    optimized by [`adam`].
//! 5. [`training`] orchestrates full-batch and incremental training;
//!    [`federation`] applies a trained model across silos and evaluates
//!    predictions against ground truth.
//! 6. [`fabrication`] generates deterministic synthetic multi-silo
//!    benchmarks with domain-equivalence ground truth.
//!
//! Hot loops are data-parallel via rayon when the `parallel` feature
//! (default) is enabled; disabling it yields a dependency-free sequential
//! build. Both paths are bit-identical: parallelism is only ever applied
//! across independent output slots, never across a floating-point
//! reduction. See [`exec`].

pub mod adam;
pub mod error;
pub mod exec;
pub mod fabrication;
pub mod federation;
pub mod graph;
pub mod io;
pub mod neural;
pub mod profiling;
pub mod rng;
pub mod sampling;
pub mod silo;
pub mod tensor;
pub mod training;

pub use error::Error;

/// Convenience result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
