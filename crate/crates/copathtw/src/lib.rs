//! Exact solvers for the weighted Co-Path Set and Co-Path Packing
//! problems, parameterized by the width of a tree (or path) decomposition.
//!
//! Co-Path Set asks for a maximum-weight edge set whose induced subgraph
//! is a collection of paths; Co-Path Packing asks the same of a vertex
//! set. Both dynamic programs label bag vertices with their degree in the
//! partial solution and summarize path connectivity as a matching over the
//! degree-0/1 bag vertices. Per-state entry lists are kept single
//! exponential by replacing them with weighted representative families in
//! the graphic matroid of a complete graph, computed deterministically by
//! GF(2) elimination of wedge vectors.
//!
//! The crate ships PACE-format graph and decomposition I/O, elimination
//! heuristics for when no decomposition is supplied, and brute-force
//! oracles for validating everything at desk scale. With the default
//! `parallel` feature, per-state work inside each decomposition node runs
//! on rayon; disabling the feature gives a dependency-free sequential
//! build with identical output.

pub mod decomposition;
pub mod dp;
mod exec;
pub mod graph;
pub mod matroid;
pub mod oracle;

mod copath_packing;
mod copath_set;

pub use copath_packing::{decide_packing, solve_packing, PackingSolution};
pub use copath_set::{decide_set, solve_set, SetSolution};
pub use dp::{Matching, SolveError, SolveOptions, SolveStats};
