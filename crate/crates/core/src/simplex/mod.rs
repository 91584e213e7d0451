//! The standard n-simplex, its edgewise subdivision at resolution m, and
//! the perturbed ("modified") variant in which near-fixed vertices are
//! nudged inside their carrier face.

mod grid;
mod kuhn;
mod perturb;
mod point;

pub use grid::{subdivide, GridCell, SimplexGrid};
pub use kuhn::{
    attach_to_door, cell_contains, cell_to_door, enumerate_cells, enumerate_lattice,
    lattice_coords, locate, permutations, CellKey, KuhnCell, LatticePoint, PivotOutcome,
};
pub use perturb::{default_rho, perturb_grid, sample_in_carrier, PerturbedGrid};
pub use point::{BarycentricPoint, TAU_SUM};

/// ℓ1 diameter of a subdivision cell at resolution `m` in dimension `n`.
///
/// A cell edge moves one unit of mass between two coordinates (ℓ1 length
/// 2/m); a chain of moves with k maximal runs of consecutive coordinates
/// has ℓ1 length 2k/m, maximized by an alternating pattern.
pub fn grid_mesh(n: u32, m: u32) -> f64 {
    2.0 * ((n + 1) / 2) as f64 / m as f64
}

/// ℓ1 diameter of the standard n-simplex (distance between two corners).
pub const SIMPLEX_DIAMETER: f64 = 2.0;
