//! Approximate fixed points of uniformly continuous self-maps of the
//! standard n-simplex, and of compact convex sets in (semi)normed spaces
//! via a finite-net embedding.
//!
//! The pipeline: subdivide the simplex edgewise ([`simplex`]), label grid
//! vertices from the map under test ([`labeling`]), locate a fully labeled
//! cell either exhaustively or by a door-to-door walk on the dual graph
//! ([`sperner`]), extract the label-0 vertex with a certified residual and
//! refine ([`solver`]). [`embedding`] carries the construction over to
//! convex subsets of finite-dimensional spaces through an affine net map.

pub mod embedding;
pub mod error;
pub mod labeling;
pub mod simplex;
pub mod solver;
pub mod sperner;

pub use error::Error;
pub use labeling::{Labeling, Provenance};
pub use simplex::{BarycentricPoint, GridCell, PerturbedGrid, SimplexGrid};
pub use solver::{FixedPointResult, SelfMap, SolveConfig, SolveStatus};

pub type Result<T> = std::result::Result<T, Error>;
