//! Identification of the lowest-order stable LTI system that is compatible
//! with fragmented, quantized and noise-corrupted output measurements.
//!
//! The unknown system is written over a finite dictionary of candidate poles
//! ([`pole_grid`]). Its zero-state and zero-input coefficients are bounded
//! group-wise by a cap vector `d`, and the caps are sparsified with an
//! `lp` quasi-norm (`0 < p < 1`) or the `l1` norm as a convex baseline.
//! The resulting problem is solved with a three-block ADMM
//! ([`admm_solver`]) whose blocks are an exact epigraph projection
//! ([`epigraph_prox`]) and a Euclidean projection onto the convex set of
//! data-consistent parameters ([`feasible_set`]).

pub mod admm_solver;
pub mod analysis;
pub mod dataset;
pub mod epigraph_prox;
pub mod error;
pub mod export;
pub mod feasible_set;
pub mod lti_sim;
pub mod pole_grid;
pub mod quantizer;
pub mod rng;

pub use admm_solver::{solve, solve_l1, IdentificationResult, SolverConfig, SolverState};
pub use dataset::{Chunk, ChunkedDataset, GroundTruth};
pub use epigraph_prox::PExponent;
pub use error::{Error, Result};
pub use feasible_set::FeasibleSet;
pub use lti_sim::GriddedSystem;
pub use pole_grid::{GridConfig, PoleGrid};
pub use quantizer::QuantizerSpec;
