//! Variable-dimension door path to a fully labeled cell.
//!
//! Levels mirror the inductive structure of the parity proof. A "door" at
//! level d is a facet carrying the labels 0..d-1; interior doors join two
//! adjacent d-cells of the face F_d = {coords beyond d are zero}, and
//! doors on the bottom face F_{d-1} are themselves fully labeled
//! (d-1)-cells, joined upward to the d-cell they attach to. In the
//! combined graph over all levels every node has degree at most two: a
//! partially labeled d-cell has exactly two door facets, and a fully
//! labeled d-cell (d < n) has exactly one door facet plus its one upward
//! attachment. The corner 0-cell (degree one, upward only) and the fully
//! labeled n-cells (degree one, one door) are the only endpoints, so the
//! path that starts at the corner must terminate at a fully labeled
//! n-cell — no enumeration, restarts, or bookkeeping of spent doors.
//!
//! The search is label-driven only: labels come from an oracle callback,
//! so the same engine serves explicit labelings and lazily evaluated maps
//! at resolutions where the grid cannot be materialized.

use crate::simplex::{attach_to_door, cell_to_door, KuhnCell, LatticePoint, PivotOutcome};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SearchOutcome {
    Found(KuhnCell),
    /// The path hit a configuration no admissible labeling can produce
    /// (missing twin label, or a door facet off the bottom face). Signals
    /// an inadmissible labeling or an oracle inconsistency.
    Stuck(&'static str),
}

/// Walk the door path from the level-0 corner to a fully labeled n-cell.
///
/// The oracle maps a lattice point to its label; its error type
/// short-circuits the search (used by lazy callers to report evaluation
/// failures or early fixed-point hits).
pub fn find_fully_labeled<S>(
    n: u8,
    m: i64,
    oracle: &mut impl FnMut(&LatticePoint) -> Result<u8, S>,
) -> Result<SearchOutcome, S> {
    let ambient = n as usize + 1;
    let mut base: LatticePoint = vec![0; ambient];
    base[0] = m;
    let mut cell = KuhnCell { base, perm: vec![] };
    let mut d: u8 = 0;

    if oracle(&cell.base)? != 0 {
        return Ok(SearchOutcome::Stuck("corner 0 not labeled 0"));
    }

    // Entering a level-d cell we know all labels except the vertex behind
    // `pending`: either the vertex added by an upward attachment, or the
    // replacement vertex of a pivot. `descended` marks arrival from above,
    // where the cell is known fully labeled and the next move drops its
    // d-labeled vertex instead of ascending back.
    let mut pending: usize = 0; // unused at d = 0
    let mut descended = false;

    loop {
        let verts = cell.vertices();
        let mut labels = Vec::with_capacity(verts.len());
        let mut mask: u32 = 0;
        for v in &verts {
            let l = oracle(v)?;
            labels.push(l);
            mask |= 1 << l;
        }
        let full = (1u32 << (d as u32 + 1)) - 1;

        let drop_index = if mask == full && !descended {
            if d == n {
                return Ok(SearchOutcome::Found(cell));
            }
            // terminal of this level: ascend through the upward edge
            d += 1;
            cell = attach_to_door(&cell, d);
            pending = d as usize;
            continue;
        } else if mask == full {
            // arrived from above: leave through the unique level-d door,
            // the facet omitting the d-labeled vertex
            descended = false;
            labels
                .iter()
                .position(|&l| l == d)
                .expect("full label set contains d")
        } else {
            // ordinary walk step: leave through the twin of the entry
            // vertex's duplicated label
            let dup = labels[pending];
            match (0..labels.len()).find(|&j| j != pending && labels[j] == dup) {
                Some(twin) => twin,
                None => return Ok(SearchOutcome::Stuck("no twin for the duplicate label")),
            }
        };

        match cell.pivot(drop_index) {
            PivotOutcome::Interior {
                cell: next,
                new_vertex,
            } => {
                cell = next;
                pending = new_vertex;
            }
            PivotOutcome::Boundary => {
                // a door facet on the boundary lies on the bottom face:
                // descend into the fully labeled (d-1)-cell it is
                match cell_to_door(&cell) {
                    Some(door) if drop_index == d as usize && d >= 2 => {
                        cell = door;
                        d -= 1;
                        descended = true;
                    }
                    _ => return Ok(SearchOutcome::Stuck("door facet off the bottom face")),
                }
            }
        }
    }
}
