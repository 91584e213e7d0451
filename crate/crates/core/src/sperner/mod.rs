//! Fully labeled cells and the parity certificate: exhaustive enumeration,
//! the dual-graph view of the subdivision, the door-to-door walk, and the
//! handshaking-lemma checker.

pub mod engine;

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::Error;
use crate::labeling::{validate_labeling, Labeling};
use crate::simplex::SimplexGrid;

pub use engine::{find_fully_labeled, SearchOutcome};

/// Σd(v) = 2e and an even number of odd degrees.
pub fn handshake_check(degrees: &[u64], edge_count: u64) -> bool {
    let sum: u64 = degrees.iter().sum();
    let odd = degrees.iter().filter(|&&d| d % 2 == 1).count();
    sum == 2 * edge_count && odd % 2 == 0
}

fn ensure_admissible(grid: &SimplexGrid, labeling: &Labeling) -> Result<(), Error> {
    let (ok, violations) = validate_labeling(grid, labeling)?;
    if !ok {
        return Err(Error::InadmissibleLabeling(violations));
    }
    Ok(())
}

fn cell_label_mask(grid: &SimplexGrid, labeling: &Labeling, cell_id: usize) -> u32 {
    grid.cells()[cell_id]
        .vertex_ids
        .iter()
        .fold(0u32, |mask, &v| mask | 1 << labeling.label(v))
}

/// All fully labeled cells, ascending cell id. The parity certificate:
/// the length is odd for every admissible labeling.
pub fn find_fully_labeled_exhaustive(
    grid: &SimplexGrid,
    labeling: &Labeling,
) -> Result<Vec<usize>, Error> {
    ensure_admissible(grid, labeling)?;
    let n = grid.dimension();
    let full = (1u32 << (n + 1)) - 1;
    let mut out: Vec<usize> = (0..grid.cell_count())
        .into_par_iter()
        .filter(|&cid| cell_label_mask(grid, labeling, cid) == full)
        .collect();
    out.sort_unstable();
    Ok(out)
}

/// Dual graph of a labeled grid: one node per cell plus an outside node
/// attached through the {0..n-1}-labeled facets on the face opposite
/// corner n.
#[derive(Debug, Clone)]
pub struct DualGraph {
    /// Cell nodes are 0..cell_count; the outside node is `cell_count`.
    pub cell_count: usize,
    pub edges: Vec<(usize, usize)>,
}

impl DualGraph {
    pub fn outside(&self) -> usize {
        self.cell_count
    }

    pub fn degrees(&self) -> Vec<u64> {
        let mut deg = vec![0u64; self.cell_count + 1];
        for &(a, b) in &self.edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        deg
    }

    /// DOT text for inspection; the outside node is called `out`.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("graph dual {\n");
        for &(a, b) in &self.edges {
            let name = |x: usize| {
                if x == self.cell_count {
                    "out".to_string()
                } else {
                    format!("c{x}")
                }
            };
            s.push_str(&format!("  {} -- {};\n", name(a), name(b)));
        }
        s.push('}');
        s
    }
}

pub fn build_dual_graph(grid: &SimplexGrid, labeling: &Labeling) -> Result<DualGraph, Error> {
    ensure_admissible(grid, labeling)?;
    let n = grid.dimension() as usize;
    let door_mask = (1u32 << n) - 1; // labels 0..n-1
    // facet (sorted vertex ids) -> incident cells
    let mut incidence: HashMap<Vec<usize>, Vec<usize>> = HashMap::new();
    for cid in 0..grid.cell_count() {
        for mut facet in grid.cell_facets(cid)? {
            let mask = facet
                .iter()
                .fold(0u32, |m, &v| m | 1 << labeling.label(v));
            if mask != door_mask {
                continue;
            }
            facet.sort_unstable();
            incidence.entry(facet).or_default().push(cid);
        }
    }
    let mut keys: Vec<_> = incidence.keys().cloned().collect();
    keys.sort();
    let mut edges = Vec::new();
    for facet in keys {
        let cells = &incidence[&facet];
        match cells.len() {
            2 => edges.push((cells[0].min(cells[1]), cells[0].max(cells[1]))),
            1 => {
                // boundary facet: door to the outside only on the face
                // opposite corner n (admissible labels forbid elsewhere)
                let on_bottom = facet.iter().all(|&v| grid.vertices()[v][n] == 0);
                if on_bottom {
                    edges.push((cells[0], grid.cell_count()));
                }
            }
            _ => {
                return Err(Error::InternalConsistency(format!(
                    "facet shared by {} cells",
                    cells.len()
                )))
            }
        }
    }
    Ok(DualGraph {
        cell_count: grid.cell_count(),
        edges,
    })
}

/// Walk the door path from the corner to a fully labeled cell and return
/// its id. Terminates for every admissible labeling.
pub fn find_fully_labeled_path(grid: &SimplexGrid, labeling: &Labeling) -> Result<usize, Error> {
    ensure_admissible(grid, labeling)?;
    let n = grid.dimension() as u8;
    let m = grid.resolution() as i64;
    let mut oracle = |v: &crate::simplex::LatticePoint| -> Result<u8, Error> {
        grid.vertex_id(v)
            .map(|id| labeling.label(id))
            .ok_or_else(|| Error::InternalConsistency(format!("unknown lattice point {v:?}")))
    };
    match find_fully_labeled(n, m, &mut oracle)? {
        SearchOutcome::Found(cell) => grid
            .cells()
            .iter()
            .position(|c| c.kuhn == cell)
            .ok_or_else(|| Error::InternalConsistency("walk returned unknown cell".into())),
        SearchOutcome::Stuck(reason) => Err(Error::InternalConsistency(format!(
            "door path stuck ({reason}); impossible for an admissible labeling"
        ))),
    }
}
