use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::simplex::grid::SimplexGrid;
use crate::simplex::point::BarycentricPoint;
use crate::solver::SelfMap;

/// The "modified partition": a grid whose near-fixed vertices have been
/// displaced inside their carrier face so the labeling rule applies at
/// every vertex. Combinatorics (cells, facets) are those of the base grid.
#[derive(Debug, Clone)]
pub struct PerturbedGrid {
    pub base: SimplexGrid,
    /// Only vertices that actually moved appear here.
    pub displaced: HashMap<usize, BarycentricPoint>,
    pub radius: f64,
    pub seed: u64,
}

impl PerturbedGrid {
    /// Effective coordinates of a vertex (displaced if moved).
    pub fn coords(&self, id: usize) -> Result<BarycentricPoint, Error> {
        match self.displaced.get(&id) {
            Some(p) => Ok(p.clone()),
            None => self.base.vertex_coords(id),
        }
    }
}

/// Default displacement radius at resolution m, strictly below the
/// combinatorics-preserving bound 1/(2m).
pub fn default_rho(m: u32) -> f64 {
    1.0 / (4.0 * m as f64)
}

/// Draw one candidate displacement of `v` inside its carrier face (the
/// face with the same zero-coordinate set), within ℓ1 radius `rho`.
/// Returns `None` for corners, which have nowhere to go.
pub fn sample_in_carrier(
    v: &BarycentricPoint,
    rho: f64,
    rng: &mut impl Rng,
) -> Option<BarycentricPoint> {
    let support: Vec<usize> = v
        .coords()
        .iter()
        .enumerate()
        .filter(|&(_, &c)| c > 0.0)
        .map(|(i, _)| i)
        .collect();
    if support.len() < 2 {
        return None;
    }
    let mut delta = vec![0.0; v.coords().len()];
    let mut mean = 0.0;
    for &i in &support {
        let d: f64 = rng.gen_range(-1.0..1.0);
        delta[i] = d;
        mean += d;
    }
    mean /= support.len() as f64;
    for &i in &support {
        delta[i] -= mean;
    }
    let norm: f64 = delta.iter().map(|d| d.abs()).sum();
    if norm < 1e-15 {
        return None;
    }
    let scale = rng.gen_range(0.1..1.0) * rho / norm;
    for d in &mut delta {
        *d *= scale;
    }
    // shrink toward v if a coordinate would leave the simplex
    let mut t = 1.0f64;
    for &i in &support {
        if delta[i] < 0.0 {
            t = t.min(0.9 * v.coords()[i] / (-delta[i]));
        }
    }
    let coords: Vec<f64> = v
        .coords()
        .iter()
        .zip(&delta)
        .map(|(c, d)| c + t.min(1.0) * d)
        .collect();
    BarycentricPoint::new_clamped(coords, 1e-9).ok()
}

fn vertex_rng(seed: u64, id: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (id as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Displace every vertex whose residual under `f` is at or below `tau_fix`
/// to a nearby carrier-face point whose residual exceeds it. Vertices that
/// already move under `f` stay in place.
pub fn perturb_grid(
    grid: &SimplexGrid,
    f: &SelfMap,
    rho: f64,
    tau_fix: f64,
    max_attempts: u32,
    seed: u64,
) -> Result<PerturbedGrid, Error> {
    let m = grid.resolution();
    let bound = 1.0 / (2.0 * m as f64);
    if rho >= bound || rho <= 0.0 {
        return Err(Error::InvalidRadius {
            radius: rho,
            bound,
            m,
        });
    }
    let mut displaced = HashMap::new();
    for id in 0..grid.vertex_count() {
        let v = grid.vertex_coords(id)?;
        if f.residual(&v) > tau_fix {
            continue;
        }
        let mut rng = vertex_rng(seed, id);
        let mut found = None;
        for _ in 0..max_attempts {
            if let Some(candidate) = sample_in_carrier(&v, rho, &mut rng) {
                if f.residual(&candidate) > tau_fix {
                    found = Some(candidate);
                    break;
                }
            } else {
                break; // corner: no candidates exist
            }
        }
        match found {
            Some(p) => {
                displaced.insert(id, p);
            }
            None => {
                return Err(Error::NonConstancyViolation {
                    vertex: v.coords().to_vec(),
                    threshold: tau_fix,
                    attempts: max_attempts,
                })
            }
        }
    }
    Ok(PerturbedGrid {
        base: grid.clone(),
        displaced,
        radius: rho,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simplex::grid::subdivide;
    use crate::solver::selfmap;

    #[test]
    fn no_perturbation_when_nothing_is_fixed() {
        let grid = subdivide(2, 2).unwrap();
        let f = selfmap::cyclic_shift(2);
        let pg = perturb_grid(&grid, &f, default_rho(2), 1e-6, 50, 7).unwrap();
        assert!(pg.displaced.is_empty());
    }

    #[test]
    fn identity_map_reports_violation() {
        let grid = subdivide(2, 2).unwrap();
        let f = selfmap::identity(2);
        let err = perturb_grid(&grid, &f, default_rho(2), 1e-6, 50, 7).unwrap_err();
        assert!(matches!(err, Error::NonConstancyViolation { .. }));
    }

    #[test]
    fn only_the_fixed_vertex_moves() {
        // f fixes exactly the barycenter; m=3 has a lattice vertex there
        let grid = subdivide(2, 3).unwrap();
        let b = BarycentricPoint::barycenter(2);
        let f = selfmap::affine_contraction(b.clone(), 0.5);
        let rho = default_rho(3);
        let pg = perturb_grid(&grid, &f, rho, 1e-9, 50, 7).unwrap();
        let bary_id = grid.vertex_id(&vec![1, 1, 1]).unwrap();
        assert_eq!(pg.displaced.len(), 1);
        let moved = &pg.displaced[&bary_id];
        assert!(moved.l1_distance(&b) <= rho + 1e-12);
        assert!(f.residual(moved) > 1e-9);
    }

    #[test]
    fn displacement_stays_in_carrier_face() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let edge_vertex = BarycentricPoint::new(vec![0.25, 0.75, 0.0]).unwrap();
        for _ in 0..100 {
            let p = sample_in_carrier(&edge_vertex, 0.05, &mut rng).unwrap();
            assert_eq!(p.coords()[2], 0.0, "left carrier face: {p:?}");
            assert!(p.l1_distance(&edge_vertex) <= 0.05 + 1e-12);
        }
        assert!(sample_in_carrier(&BarycentricPoint::corner(2, 1), 0.05, &mut rng).is_none());
    }

    #[test]
    fn rejects_oversized_radius() {
        let grid = subdivide(2, 4).unwrap();
        let f = selfmap::cyclic_shift(2);
        assert!(matches!(
            perturb_grid(&grid, &f, 0.2, 1e-9, 10, 0),
            Err(Error::InvalidRadius { .. })
        ));
    }

    #[test]
    fn perturbation_preserves_combinatorics() {
        // jiggle every displaceable vertex and check cells stay affinely
        // independent with disjoint interiors (sampled)
        let grid = subdivide(2, 3).unwrap();
        let rho = default_rho(3);
        let mut displaced = HashMap::new();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for id in 0..grid.vertex_count() {
            let v = grid.vertex_coords(id).unwrap();
            if let Some(p) = sample_in_carrier(&v, rho, &mut rng) {
                displaced.insert(id, p);
            }
        }
        let pg = PerturbedGrid {
            base: grid.clone(),
            displaced,
            radius: rho,
            seed: 42,
        };
        // affine independence: 2x2 determinant in the chart dropping coord 0
        for cell in grid.cells() {
            let pts: Vec<BarycentricPoint> = cell
                .vertex_ids
                .iter()
                .map(|&id| pg.coords(id).unwrap())
                .collect();
            let det = (pts[1].coords()[1] - pts[0].coords()[1])
                * (pts[2].coords()[2] - pts[0].coords()[2])
                - (pts[1].coords()[2] - pts[0].coords()[2])
                    * (pts[2].coords()[1] - pts[0].coords()[1]);
            assert!(det.abs() > 1e-9, "degenerate perturbed cell");
        }
        // disjoint interiors: each sampled point lies in exactly one
        // perturbed cell (barycentric solve per cell)
        let mut hits_per_point = Vec::new();
        for _ in 0..300 {
            let mut c: Vec<f64> = (0..3).map(|_| -f64::ln(rng.gen::<f64>())).collect();
            let s: f64 = c.iter().sum();
            c.iter_mut().for_each(|x| *x /= s);
            let p = BarycentricPoint::new(c).unwrap();
            let mut hits = 0;
            for cell in grid.cells() {
                let pts: Vec<BarycentricPoint> = cell
                    .vertex_ids
                    .iter()
                    .map(|&id| pg.coords(id).unwrap())
                    .collect();
                if barycentric_weights_nonneg(&pts, &p, -1e-10) {
                    hits += 1;
                }
            }
            hits_per_point.push(hits);
        }
        assert!(hits_per_point.iter().all(|&h| h == 1));
    }

    /// Solve for weights w with Σw=1, Σ w_i pts_i = p; true iff all ≥ tol.
    fn barycentric_weights_nonneg(pts: &[BarycentricPoint], p: &BarycentricPoint, tol: f64) -> bool {
        // 3x3 system over coords (rows: coord1, coord2, sum)
        let a = [
            [pts[0].coords()[1], pts[1].coords()[1], pts[2].coords()[1]],
            [pts[0].coords()[2], pts[1].coords()[2], pts[2].coords()[2]],
            [1.0, 1.0, 1.0],
        ];
        let rhs = [p.coords()[1], p.coords()[2], 1.0];
        match solve3(a, rhs) {
            Some(w) => w.iter().all(|&x| x > tol),
            None => false,
        }
    }

    fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
        let det = |m: &[[f64; 3]; 3]| {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        };
        let d = det(&a);
        if d.abs() < 1e-14 {
            return None;
        }
        let mut out = [0.0; 3];
        for col in 0..3 {
            let mut m = a;
            for row in 0..3 {
                m[row][col] = b[row];
            }
            out[col] = det(&m) / d;
        }
        Some(out)
    }
}
