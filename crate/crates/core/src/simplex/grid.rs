use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::simplex::kuhn::{
    self, enumerate_cells, enumerate_lattice, KuhnCell, LatticePoint,
};
use crate::simplex::point::BarycentricPoint;
use crate::simplex::grid_mesh;

/// A subdivision cell of an explicit grid: vertex ids in chain order plus
/// the underlying lattice cell (which carries facet adjacency).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridCell {
    pub vertex_ids: Vec<usize>,
    pub kuhn: KuhnCell,
}

/// The edgewise subdivision of the standard n-simplex at resolution m,
/// fully materialized. Vertices are lattice points (integer numerators
/// over m) in lexicographic order; cells in deterministic enumeration
/// order. Immutable once built.
#[derive(Debug, Clone)]
pub struct SimplexGrid {
    n: u32,
    m: u32,
    vertices: Vec<LatticePoint>,
    vertex_index: HashMap<LatticePoint, usize>,
    cells: Vec<GridCell>,
}

/// Divide the n-simplex edgewise at resolution m.
pub fn subdivide(n: u32, m: u32) -> Result<SimplexGrid, Error> {
    if n == 0 {
        return Err(Error::TrivialDimension);
    }
    if m == 0 {
        return Err(Error::Spec("resolution m must be positive".into()));
    }
    let ambient = n as usize + 1;
    let vertices = enumerate_lattice(ambient, n as usize, m as i64);
    let vertex_index: HashMap<LatticePoint, usize> = vertices
        .iter()
        .enumerate()
        .map(|(i, v)| (v.clone(), i))
        .collect();
    let cells: Vec<GridCell> = enumerate_cells(ambient, n as u8, m as i64)
        .into_iter()
        .map(|kuhn| GridCell {
            vertex_ids: kuhn.vertices().iter().map(|v| vertex_index[v]).collect(),
            kuhn,
        })
        .collect();
    let expected = (m as u64).pow(n);
    if cells.len() as u64 != expected {
        return Err(Error::InternalConsistency(format!(
            "subdivision produced {} cells, expected m^n = {}",
            cells.len(),
            expected
        )));
    }
    Ok(SimplexGrid {
        n,
        m,
        vertices,
        vertex_index,
        cells,
    })
}

impl SimplexGrid {
    pub fn dimension(&self) -> u32 {
        self.n
    }

    pub fn resolution(&self) -> u32 {
        self.m
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn cells(&self) -> &[GridCell] {
        &self.cells
    }

    pub fn vertices(&self) -> &[LatticePoint] {
        &self.vertices
    }

    pub fn vertex_id(&self, p: &LatticePoint) -> Option<usize> {
        self.vertex_index.get(p).copied()
    }

    /// Exact lattice coordinates of a vertex.
    pub fn vertex_coords(&self, id: usize) -> Result<BarycentricPoint, Error> {
        self.vertices
            .get(id)
            .map(|p| kuhn::lattice_coords(p, self.m as i64))
            .ok_or(Error::Index {
                index: id,
                limit: self.vertices.len(),
            })
    }

    pub fn cell(&self, id: usize) -> Result<&GridCell, Error> {
        self.cells.get(id).ok_or(Error::Index {
            index: id,
            limit: self.cells.len(),
        })
    }

    /// The n+1 facets of a cell; facet i omits the cell's i-th vertex.
    pub fn cell_facets(&self, cell_id: usize) -> Result<Vec<Vec<usize>>, Error> {
        let cell = self.cell(cell_id)?;
        Ok((0..cell.vertex_ids.len())
            .map(|i| {
                cell.vertex_ids
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, &v)| v)
                    .collect()
            })
            .collect())
    }

    /// Max ℓ1 distance between two vertices of any cell.
    pub fn mesh(&self) -> f64 {
        grid_mesh(self.n, self.m)
    }

    /// Id of the cell containing `p` (point location in the lattice chart).
    pub fn locate(&self, p: &BarycentricPoint) -> Option<usize> {
        let kc = kuhn::locate(p, self.m as i64);
        self.cells.iter().position(|c| c.kuhn == kc)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(GridDoc {
            n: self.n,
            m: self.m,
            vertices: self.vertices.clone(),
            cells: self.cells.iter().map(|c| c.vertex_ids.clone()).collect(),
        })
        .expect("grid document serializes")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self, Error> {
        let doc: GridDoc = serde_json::from_value(value.clone())?;
        let grid = subdivide(doc.n, doc.m)?;
        if grid.vertices != doc.vertices
            || grid
                .cells
                .iter()
                .map(|c| &c.vertex_ids)
                .ne(doc.cells.iter())
        {
            return Err(Error::Spec(
                "grid document does not match canonical subdivision".into(),
            ));
        }
        Ok(grid)
    }
}

#[derive(Serialize, Deserialize)]
struct GridDoc {
    n: u32,
    m: u32,
    vertices: Vec<LatticePoint>,
    cells: Vec<Vec<usize>>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simplex::kuhn::cell_contains;

    #[test]
    fn rejects_trivial_dimension() {
        assert!(matches!(subdivide(0, 3), Err(Error::TrivialDimension)));
    }

    #[test]
    fn cell_counts() {
        assert_eq!(subdivide(2, 4).unwrap().cell_count(), 16);
        assert_eq!(subdivide(1, 5).unwrap().cell_count(), 5);
        assert_eq!(subdivide(3, 2).unwrap().cell_count(), 8);
    }

    #[test]
    fn vertex_coords_examples() {
        let grid = subdivide(2, 2).unwrap();
        // 6 lattice points for n=2, m=2 (brute-force count of {a+b+c=2})
        assert_eq!(grid.vertex_count(), 6);
        let corner = grid.vertex_id(&vec![2, 0, 0]).unwrap();
        assert_eq!(grid.vertex_coords(corner).unwrap().coords(), &[1.0, 0.0, 0.0]);
        let mid = grid.vertex_id(&vec![1, 1, 0]).unwrap();
        assert_eq!(grid.vertex_coords(mid).unwrap().coords(), &[0.5, 0.5, 0.0]);
        assert!(grid.vertex_coords(99).is_err());
    }

    #[test]
    fn facet_incidence_scan() {
        // brute-force facet -> cell incidence on n=2, m=2
        let grid = subdivide(2, 2).unwrap();
        let mut incidence: HashMap<Vec<usize>, usize> = HashMap::new();
        for cid in 0..grid.cell_count() {
            for mut facet in grid.cell_facets(cid).unwrap() {
                facet.sort_unstable();
                *incidence.entry(facet).or_default() += 1;
            }
        }
        for (facet, count) in &incidence {
            assert!(
                (1..=2).contains(count),
                "facet {facet:?} shared by {count} cells"
            );
            // boundary facets have both vertices on a common zero-coordinate face
            let on_boundary = (0..3).any(|i| {
                facet
                    .iter()
                    .all(|&v| grid.vertices()[v][i] == 0)
            });
            assert_eq!(*count == 1, on_boundary, "facet {facet:?}");
        }
    }

    #[test]
    fn two_d_cell_facets_are_pairs() {
        let grid = subdivide(2, 1).unwrap();
        let facets = grid.cell_facets(0).unwrap();
        assert_eq!(facets.len(), 3);
        for f in facets {
            assert_eq!(f.len(), 2);
        }
    }

    #[test]
    fn volume_additivity() {
        // sum of |det| in the affine chart (drop coordinate 0) over cells
        // equals the chart volume of the whole simplex, n! * 1/n! = 1.
        for (n, m) in [(1u32, 5u32), (2, 3), (3, 2), (4, 2)] {
            let grid = subdivide(n, m).unwrap();
            let total: f64 = grid
                .cells()
                .iter()
                .map(|c| {
                    let verts: Vec<Vec<f64>> = c
                        .vertex_ids
                        .iter()
                        .map(|&v| grid.vertex_coords(v).unwrap().coords()[1..].to_vec())
                        .collect();
                    let d = n as usize;
                    let mut mat = vec![vec![0.0; d]; d];
                    for i in 0..d {
                        for j in 0..d {
                            mat[i][j] = verts[i + 1][j] - verts[0][j];
                        }
                    }
                    determinant(&mut mat).abs()
                })
                .sum();
            assert!((total - 1.0).abs() < 1e-9, "n={n} m={m} total={total}");
        }
    }

    fn determinant(mat: &mut [Vec<f64>]) -> f64 {
        let d = mat.len();
        let mut det = 1.0;
        for col in 0..d {
            let pivot = (col..d)
                .max_by(|&a, &b| mat[a][col].abs().partial_cmp(&mat[b][col].abs()).unwrap())
                .unwrap();
            if mat[pivot][col] == 0.0 {
                return 0.0;
            }
            if pivot != col {
                mat.swap(pivot, col);
                det = -det;
            }
            det *= mat[col][col];
            for row in col + 1..d {
                let f = mat[row][col] / mat[col][col];
                for k in col..d {
                    mat[row][k] -= f * mat[col][k];
                }
            }
        }
        det
    }

    #[test]
    fn point_location_unique() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for (n, m) in [(2u32, 3u32), (3, 2)] {
            let grid = subdivide(n, m).unwrap();
            for _ in 0..2000 {
                let mut c: Vec<f64> = (0..=n).map(|_| -f64::ln(rng.gen::<f64>())).collect();
                let s: f64 = c.iter().sum();
                c.iter_mut().for_each(|x| *x /= s);
                let p = BarycentricPoint::new(c).unwrap();
                let containing = grid
                    .cells()
                    .iter()
                    .filter(|cell| cell_contains(&cell.kuhn, &p, m as i64, 0.0))
                    .count();
                assert_eq!(containing, 1, "point {p:?} in {containing} cells");
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let grid = subdivide(2, 3).unwrap();
        let doc = grid.to_json();
        let back = SimplexGrid::from_json(&doc).unwrap();
        assert_eq!(back.cell_count(), grid.cell_count());
        assert_eq!(back.vertices(), grid.vertices());
    }
}
