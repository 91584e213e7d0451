//! Edgewise (Kuhn/Freudenthal-style) cells of the barycentric lattice.
//!
//! A lattice point is a vector of n+1 integer numerators summing to m
//! (denominator m implied). The elementary move `k` (1 ≤ k ≤ n) shifts one
//! unit of mass from coordinate k-1 to coordinate k. A cell is a base
//! lattice point plus a permutation of the moves 1..=d; its d+1 vertices
//! are the prefixes of the move chain. Cells of the face {coords > d are
//! zero} use moves 1..=d only, so the same machinery walks every face.

use crate::simplex::point::BarycentricPoint;

pub type LatticePoint = Vec<i64>;

/// A subdivision cell identified by its move chain.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct KuhnCell {
    pub base: LatticePoint,
    /// Permutation of 1..=d where d is the cell's dimension.
    pub perm: Vec<u8>,
}

/// Hashable identity of a cell (base + perm).
pub type CellKey = KuhnCell;

pub enum PivotOutcome {
    /// Adjacent cell across the facet, plus the index of the replacement
    /// vertex within the new cell's vertex order.
    Interior { cell: KuhnCell, new_vertex: usize },
    /// The facet lies on the boundary of the (sub)simplex.
    Boundary,
}

fn apply_move(p: &mut LatticePoint, k: u8) {
    p[k as usize - 1] -= 1;
    p[k as usize] += 1;
}

fn undo_move(p: &mut LatticePoint, k: u8) {
    p[k as usize - 1] += 1;
    p[k as usize] -= 1;
}

impl KuhnCell {
    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    /// Vertices in chain order: w_0 = base, w_i = w_{i-1} + move perm[i-1].
    pub fn vertices(&self) -> Vec<LatticePoint> {
        let mut out = Vec::with_capacity(self.perm.len() + 1);
        let mut cur = self.base.clone();
        out.push(cur.clone());
        for &k in &self.perm {
            apply_move(&mut cur, k);
            out.push(cur.clone());
        }
        out
    }

    /// A cell is valid when every vertex stays in the nonnegative orthant.
    /// Only coordinates decremented by some move can go negative.
    pub fn is_valid(&self) -> bool {
        let mut cur = self.base.clone();
        if cur.iter().any(|&c| c < 0) {
            return false;
        }
        for &k in &self.perm {
            apply_move(&mut cur, k);
            if cur[k as usize - 1] < 0 {
                return false;
            }
        }
        true
    }

    /// Facets in drop order: facet i omits vertex w_i.
    pub fn facets(&self) -> Vec<Vec<LatticePoint>> {
        let verts = self.vertices();
        (0..verts.len())
            .map(|i| {
                verts
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, v)| v.clone())
                    .collect()
            })
            .collect()
    }

    /// Cross the facet omitting vertex `drop`. Standard Freudenthal pivots:
    /// dropping w_0 advances the base along the first move and rotates the
    /// permutation left; dropping w_d retreats the base and rotates right;
    /// dropping an interior vertex swaps the two adjacent moves.
    pub fn pivot(&self, drop: usize) -> PivotOutcome {
        let d = self.dim();
        debug_assert!(drop <= d);
        let cell = if drop == 0 {
            let mut base = self.base.clone();
            apply_move(&mut base, self.perm[0]);
            let mut perm = self.perm[1..].to_vec();
            perm.push(self.perm[0]);
            KuhnCell { base, perm }
        } else if drop == d {
            let mut base = self.base.clone();
            undo_move(&mut base, self.perm[d - 1]);
            let mut perm = Vec::with_capacity(d);
            perm.push(self.perm[d - 1]);
            perm.extend_from_slice(&self.perm[..d - 1]);
            KuhnCell { base, perm }
        } else {
            let mut perm = self.perm.clone();
            perm.swap(drop - 1, drop);
            KuhnCell {
                base: self.base.clone(),
                perm,
            }
        };
        if !cell.is_valid() {
            return PivotOutcome::Boundary;
        }
        let new_vertex = match drop {
            0 => d,
            x if x == d => 0,
            x => x,
        };
        PivotOutcome::Interior { cell, new_vertex }
    }
}

/// Attach the unique d-cell of face F_d sitting on a (d-1)-cell of the
/// bottom face F_{d-1}: append move d to the chain. The entry facet is the
/// one omitting the last vertex.
pub fn attach_to_door(door: &KuhnCell, d: u8) -> KuhnCell {
    let mut perm = door.perm.clone();
    perm.push(d);
    KuhnCell {
        base: door.base.clone(),
        perm,
    }
}

/// Inverse of [`attach_to_door`], for a cell whose chain ends with move d.
pub fn cell_to_door(cell: &KuhnCell) -> Option<KuhnCell> {
    let d = cell.dim() as u8;
    if cell.perm.last() == Some(&d) && cell.base[d as usize] == 0 {
        Some(KuhnCell {
            base: cell.base.clone(),
            perm: cell.perm[..cell.dim() - 1].to_vec(),
        })
    } else {
        None
    }
}

/// All lattice points of F_d (coordinates beyond d zero) with numerators
/// summing to m, in lexicographic order. `ambient` is n+1.
pub fn enumerate_lattice(ambient: usize, d: usize, m: i64) -> Vec<LatticePoint> {
    let mut out = Vec::new();
    let mut cur = vec![0i64; ambient];
    fn rec(cur: &mut LatticePoint, idx: usize, d: usize, left: i64, out: &mut Vec<LatticePoint>) {
        if idx == d {
            cur[idx] = left;
            out.push(cur.clone());
            cur[idx] = 0;
            return;
        }
        for v in 0..=left {
            cur[idx] = v;
            rec(cur, idx + 1, d, left - v, out);
        }
        cur[idx] = 0;
    }
    rec(&mut cur, 0, d, m, &mut out);
    out
}

/// Permutations of 1..=d in lexicographic order.
pub fn permutations(d: u8) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut items: Vec<u8> = (1..=d).collect();
    fn rec(items: &mut Vec<u8>, prefix: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if items.is_empty() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..items.len() {
            let x = items.remove(i);
            prefix.push(x);
            rec(items, prefix, out);
            prefix.pop();
            items.insert(i, x);
        }
    }
    rec(&mut items, &mut Vec::new(), &mut out);
    out
}

/// All valid d-cells of face F_d at resolution m, deterministic order
/// (base lexicographic, then permutation lexicographic).
pub fn enumerate_cells(ambient: usize, d: u8, m: i64) -> Vec<KuhnCell> {
    let perms = permutations(d);
    let mut out = Vec::new();
    for base in enumerate_lattice(ambient, d as usize, m) {
        for perm in &perms {
            let cell = KuhnCell {
                base: base.clone(),
                perm: perm.clone(),
            };
            if cell.is_valid() {
                out.push(cell);
            }
        }
    }
    out
}

/// Exact coordinates of a lattice point as a barycentric point.
pub fn lattice_coords(p: &LatticePoint, m: i64) -> BarycentricPoint {
    BarycentricPoint::new(p.iter().map(|&a| a as f64 / m as f64).collect())
        .expect("lattice point is always a valid barycentric point")
}

/// Locate the cell containing a point of the simplex at resolution m.
///
/// Works in the chart y_i = m·(p_i + ... + p_n), i = 1..n, where cells are
/// the Kuhn simplices of the unit cube grid: integer part picks the cube,
/// descending fractional parts pick the permutation.
pub fn locate(p: &BarycentricPoint, m: i64) -> KuhnCell {
    let c = p.coords();
    let n = p.dim();
    // y[i-1] holds y_i
    let mut y = vec![0.0f64; n];
    let mut suffix = 0.0;
    for i in (1..=n).rev() {
        suffix += c[i];
        y[i - 1] = (m as f64) * suffix;
    }
    let mut z = vec![0i64; n];
    let mut frac = vec![0.0f64; n];
    for i in 0..n {
        let mut zi = y[i].floor() as i64;
        // keep the chart inside [0, m] and leave room for the unit chain
        zi = zi.clamp(0, m - 1).min(if i == 0 { m - 1 } else { z[i - 1] });
        z[i] = zi.max(0);
        frac[i] = y[i] - z[i] as f64;
    }
    // enforce z_1 >= z_2 >= ... >= z_n required of a cell inside the simplex
    for i in 1..n {
        if z[i] > z[i - 1] {
            z[i] = z[i - 1];
            frac[i] = y[i] - z[i] as f64;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| frac[b].partial_cmp(&frac[a]).unwrap().then(a.cmp(&b)));
    let perm: Vec<u8> = order.iter().map(|&i| (i + 1) as u8).collect();
    // base numerators from the integer chart
    let mut base = vec![0i64; n + 1];
    base[0] = m - z[0];
    for i in 1..n {
        base[i] = z[i - 1] - z[i];
    }
    base[n] = z[n - 1];
    KuhnCell { base, perm }
}

/// Whether `p` lies in `cell` (up to `tol` in the y-chart).
pub fn cell_contains(cell: &KuhnCell, p: &BarycentricPoint, m: i64, tol: f64) -> bool {
    let c = p.coords();
    let n = p.dim();
    let mut y = vec![0.0f64; n];
    let mut suffix = 0.0;
    for i in (1..=n).rev() {
        suffix += c[i];
        y[i - 1] = (m as f64) * suffix;
    }
    // integer chart of the cell base
    let mut z = vec![0i64; n];
    let mut acc = 0i64;
    for i in (1..=n).rev() {
        acc += cell.base[i];
        z[i - 1] = acc;
    }
    let frac: Vec<f64> = (0..n).map(|i| y[i] - z[i] as f64).collect();
    if frac.iter().any(|&f| f < -tol || f > 1.0 + tol) {
        return false;
    }
    let mut prev = 1.0 + tol;
    for &k in &cell.perm {
        let f = frac[k as usize - 1];
        if f > prev + tol {
            return false;
        }
        prev = f;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_enumeration_counts() {
        // #{a in N^{n+1} : sum = m} = C(m+n, n)
        assert_eq!(enumerate_lattice(3, 2, 2).len(), 6);
        assert_eq!(enumerate_lattice(3, 2, 3).len(), 10);
        assert_eq!(enumerate_lattice(4, 3, 2).len(), 10);
        // face restriction: F_1 inside ambient 3 coords
        let pts = enumerate_lattice(3, 1, 4);
        assert_eq!(pts.len(), 5);
        assert!(pts.iter().all(|p| p[2] == 0));
    }

    #[test]
    fn permutation_order_is_lexicographic() {
        assert_eq!(
            permutations(3),
            vec![
                vec![1, 2, 3],
                vec![1, 3, 2],
                vec![2, 1, 3],
                vec![2, 3, 1],
                vec![3, 1, 2],
                vec![3, 2, 1]
            ]
        );
    }

    #[test]
    fn cell_counts_are_m_to_the_d() {
        for d in 1..=3u8 {
            for m in 1..=4i64 {
                let cells = enumerate_cells(d as usize + 1, d, m);
                assert_eq!(cells.len() as i64, m.pow(d as u32), "d={d} m={m}");
            }
        }
    }

    #[test]
    fn pivot_shares_facet() {
        let cell = KuhnCell {
            base: vec![1, 1, 0],
            perm: vec![1, 2],
        };
        assert!(cell.is_valid());
        for drop in 0..=2 {
            if let PivotOutcome::Interior { cell: other, new_vertex } = cell.pivot(drop) {
                let mut a: Vec<_> = cell
                    .vertices()
                    .into_iter()
                    .enumerate()
                    .filter(|&(i, _)| i != drop)
                    .map(|(_, v)| v)
                    .collect();
                let mut b: Vec<_> = other
                    .vertices()
                    .into_iter()
                    .enumerate()
                    .filter(|&(i, _)| i != new_vertex)
                    .map(|(_, v)| v)
                    .collect();
                a.sort();
                b.sort();
                assert_eq!(a, b, "shared facet mismatch dropping {drop}");
            }
        }
    }

    #[test]
    fn pivot_is_involutive() {
        let cell = KuhnCell {
            base: vec![2, 1, 1, 0],
            perm: vec![2, 1, 3],
        };
        assert!(cell.is_valid());
        for drop in 0..=3 {
            if let PivotOutcome::Interior { cell: other, new_vertex } = cell.pivot(drop) {
                match other.pivot(new_vertex) {
                    PivotOutcome::Interior { cell: back, new_vertex: nv } => {
                        assert_eq!(back, cell);
                        assert_eq!(nv, drop);
                    }
                    PivotOutcome::Boundary => panic!("pivot not involutive"),
                }
            }
        }
    }

    #[test]
    fn door_attachment_round_trips() {
        let door = KuhnCell {
            base: vec![2, 1, 0],
            perm: vec![1],
        };
        let cell = attach_to_door(&door, 2);
        assert!(cell.is_valid());
        assert_eq!(cell_to_door(&cell), Some(door));
    }

    #[test]
    fn locate_agrees_with_containment() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for n in 1..=3usize {
            for m in [1i64, 2, 4] {
                for _ in 0..200 {
                    // random interior point via exponentials
                    let mut c: Vec<f64> = (0..=n).map(|_| -f64::ln(rng.gen::<f64>())).collect();
                    let s: f64 = c.iter().sum();
                    c.iter_mut().for_each(|x| *x /= s);
                    let p = BarycentricPoint::new(c).unwrap();
                    let cell = locate(&p, m);
                    assert!(cell.is_valid(), "located invalid cell for {p:?}");
                    assert!(cell_contains(&cell, &p, m, 1e-9));
                }
            }
        }
    }
}
