//! Sperner labelings: the admissibility rules and the function-induced
//! labeling ("label v with k when v_k exceeds f_k(v)").

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, RuleViolation};
use crate::simplex::{BarycentricPoint, PerturbedGrid, SimplexGrid};
use crate::solver::SelfMap;

/// Strictness margin for coordinate comparisons v_k > f_k.
pub const TAU_CMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    RuleBased,
    FunctionInduced,
}

/// Total assignment of labels 0..=n to grid vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labeling {
    pub labels: Vec<u8>,
    pub provenance: Provenance,
}

impl Labeling {
    pub fn label(&self, vertex: usize) -> u8 {
        self.labels[vertex]
    }

    pub fn to_json(&self) -> serde_json::Value {
        let map: BTreeMap<String, u8> = self
            .labels
            .iter()
            .enumerate()
            .map(|(i, &l)| (i.to_string(), l))
            .collect();
        serde_json::json!({ "provenance": self.provenance, "labels": map })
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self, Error> {
        #[derive(Deserialize)]
        struct Doc {
            provenance: Provenance,
            labels: BTreeMap<String, u8>,
        }
        let doc: Doc = serde_json::from_value(value.clone())?;
        let mut labels = vec![0u8; doc.labels.len()];
        for (k, v) in doc.labels {
            let idx: usize = k
                .parse()
                .map_err(|_| Error::Spec(format!("bad vertex id `{k}`")))?;
            if idx >= labels.len() {
                return Err(Error::Spec(format!("vertex id {idx} out of range")));
            }
            labels[idx] = v;
        }
        Ok(Self {
            labels,
            provenance: doc.provenance,
        })
    }
}

/// Either a label for a vertex or the news that the vertex is already an
/// approximate fixed point (a success for the caller, not an error).
#[derive(Debug, Clone, PartialEq)]
pub enum LabelOrFixed {
    Label(u8),
    ApproximateFixedPoint { point: BarycentricPoint, residual: f64 },
}

/// Label a vertex from its image: the smallest k with v_k > f_k strictly
/// (beyond [`TAU_CMP`]) — such a k always exists when the residual is above
/// `tau_fix`, because both points sum to 1.
pub fn sperner_label(v: &BarycentricPoint, fv: &BarycentricPoint, tau_fix: f64) -> LabelOrFixed {
    let residual = v.l1_distance(fv);
    if residual <= tau_fix {
        return LabelOrFixed::ApproximateFixedPoint {
            point: v.clone(),
            residual,
        };
    }
    for (k, (&vk, &fk)) in v.coords().iter().zip(fv.coords()).enumerate() {
        if vk > fk + TAU_CMP {
            return LabelOrFixed::Label(k as u8);
        }
    }
    // residual > tau_fix guarantees max(v_k - f_k) >= residual/(2(n+1));
    // falling through means tau_fix was set below comparison noise. Take
    // the argmax as the honest answer.
    let k = v
        .coords()
        .iter()
        .zip(fv.coords())
        .enumerate()
        .max_by(|a, b| (a.1 .0 - a.1 .1).partial_cmp(&(b.1 .0 - b.1 .1)).unwrap())
        .map(|(k, _)| k as u8)
        .unwrap();
    LabelOrFixed::Label(k)
}

/// Result of labeling a whole grid.
#[derive(Debug, Clone)]
pub enum GridLabeling {
    Labeled(Labeling),
    /// A vertex whose residual is at or below `tau_fix`.
    EarlyFixedPoint {
        vertex: usize,
        point: BarycentricPoint,
        residual: f64,
    },
}

fn vertex_positions<'a>(
    grid: &'a SimplexGrid,
    perturbed: Option<&'a PerturbedGrid>,
) -> impl Fn(usize) -> Result<BarycentricPoint, Error> + Sync + 'a {
    move |id| match perturbed {
        Some(pg) => pg.coords(id),
        None => grid.vertex_coords(id),
    }
}

fn label_vertices(
    grid: &SimplexGrid,
    perturbed: Option<&PerturbedGrid>,
    f: &SelfMap,
    tau_fix: f64,
) -> Result<GridLabeling, Error> {
    let coords = vertex_positions(grid, perturbed);
    let evaluated: Vec<Result<(usize, LabelOrFixed), Error>> = (0..grid.vertex_count())
        .into_par_iter()
        .map(|id| {
            let v = coords(id)?;
            let fv = f.checked_eval(&v)?;
            Ok((id, sperner_label(&v, &fv, tau_fix)))
        })
        .collect();
    let mut labels = vec![0u8; grid.vertex_count()];
    for item in evaluated {
        let (id, outcome) = item?;
        match outcome {
            LabelOrFixed::Label(k) => labels[id] = k,
            LabelOrFixed::ApproximateFixedPoint { point, residual } => {
                return Ok(GridLabeling::EarlyFixedPoint {
                    vertex: id,
                    point,
                    residual,
                })
            }
        }
    }
    Ok(GridLabeling::Labeled(Labeling {
        labels,
        provenance: Provenance::FunctionInduced,
    }))
}

/// Label every vertex of a grid from the map `f`, or exit early with a
/// vertex that is already an approximate fixed point.
pub fn label_grid(grid: &SimplexGrid, f: &SelfMap, tau_fix: f64) -> Result<GridLabeling, Error> {
    label_vertices(grid, None, f, tau_fix)
}

/// Same over a perturbed grid: labels are computed at displaced positions.
pub fn label_perturbed_grid(
    pg: &PerturbedGrid,
    f: &SelfMap,
    tau_fix: f64,
) -> Result<GridLabeling, Error> {
    label_vertices(&pg.base, Some(pg), f, tau_fix)
}

/// Check the admissibility rules. Returns `(admissible, violations)`.
pub fn validate_labeling(
    grid: &SimplexGrid,
    labeling: &Labeling,
) -> Result<(bool, Vec<RuleViolation>), Error> {
    if labeling.labels.len() != grid.vertex_count() {
        return Err(Error::IncompleteLabeling {
            missing: grid.vertex_count().saturating_sub(labeling.labels.len()),
            total: grid.vertex_count(),
        });
    }
    let n = grid.dimension() as u8;
    let mut violations = Vec::new();
    for (id, lattice) in grid.vertices().iter().enumerate() {
        let label = labeling.labels[id];
        if label > n {
            violations.push(RuleViolation {
                vertex: id,
                rule: "range",
                detail: format!("label {label} outside 0..={n}"),
            });
            continue;
        }
        let support: Vec<usize> = lattice
            .iter()
            .enumerate()
            .filter(|&(_, &a)| a > 0)
            .map(|(i, _)| i)
            .collect();
        if support.len() == 1 {
            // corner k must carry label k
            if label as usize != support[0] {
                violations.push(RuleViolation {
                    vertex: id,
                    rule: "corner",
                    detail: format!("corner {} labeled {label}", support[0]),
                });
            }
        } else if lattice[label as usize] == 0 {
            violations.push(RuleViolation {
                vertex: id,
                rule: "face",
                detail: format!("vertex with coordinate {label} = 0 labeled {label}"),
            });
        }
    }
    Ok((violations.is_empty(), violations))
}

/// A uniformly random admissible labeling (each vertex draws uniformly
/// from its allowed label set {k : v_k > 0}).
pub fn random_admissible(grid: &SimplexGrid, seed: u64) -> Labeling {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels = grid
        .vertices()
        .iter()
        .map(|lattice| {
            let allowed: Vec<u8> = lattice
                .iter()
                .enumerate()
                .filter(|&(_, &a)| a > 0)
                .map(|(i, _)| i as u8)
                .collect();
            allowed[rng.gen_range(0..allowed.len())]
        })
        .collect();
    Labeling {
        labels,
        provenance: Provenance::RuleBased,
    }
}

/// Iterate over every admissible labeling of a grid (odometer over the
/// per-vertex allowed sets). Only sensible for small grids.
pub fn enumerate_admissible(grid: &SimplexGrid) -> impl Iterator<Item = Labeling> + '_ {
    let allowed: Vec<Vec<u8>> = grid
        .vertices()
        .iter()
        .map(|lattice| {
            lattice
                .iter()
                .enumerate()
                .filter(|&(_, &a)| a > 0)
                .map(|(i, _)| i as u8)
                .collect()
        })
        .collect();
    let mut counters = vec![0usize; allowed.len()];
    let mut done = false;
    std::iter::from_fn(move || {
        if done {
            return None;
        }
        let labels: Vec<u8> = counters
            .iter()
            .zip(&allowed)
            .map(|(&c, opts)| opts[c])
            .collect();
        // advance odometer
        let mut i = 0;
        loop {
            if i == counters.len() {
                done = true;
                break;
            }
            counters[i] += 1;
            if counters[i] < allowed[i].len() {
                break;
            }
            counters[i] = 0;
            i += 1;
        }
        Some(Labeling {
            labels,
            provenance: Provenance::RuleBased,
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simplex::subdivide;
    use crate::solver::selfmap;

    fn p(coords: &[f64]) -> BarycentricPoint {
        BarycentricPoint::new(coords.to_vec()).unwrap()
    }

    #[test]
    fn sperner_label_examples() {
        assert_eq!(
            sperner_label(&p(&[1.0, 0.0, 0.0]), &p(&[0.6, 0.3, 0.1]), 1e-9),
            LabelOrFixed::Label(0)
        );
        assert_eq!(
            sperner_label(&p(&[0.0, 0.5, 0.5]), &p(&[0.2, 0.5, 0.3]), 1e-9),
            LabelOrFixed::Label(2)
        );
        assert_eq!(
            sperner_label(&p(&[0.4, 0.3, 0.3]), &p(&[0.1, 0.45, 0.45]), 1e-9),
            LabelOrFixed::Label(0)
        );
    }

    #[test]
    fn sperner_label_near_fixed_signals_success() {
        let v = p(&[0.4, 0.3, 0.3]);
        match sperner_label(&v, &v, 1e-9) {
            LabelOrFixed::ApproximateFixedPoint { residual, .. } => assert_eq!(residual, 0.0),
            other => panic!("expected fixed-point signal, got {other:?}"),
        }
    }

    #[test]
    fn label_grid_cyclic_shift_is_admissible() {
        let grid = subdivide(2, 2).unwrap();
        let f = selfmap::cyclic_shift(2);
        match label_grid(&grid, &f, 1e-9).unwrap() {
            GridLabeling::Labeled(l) => {
                let (ok, v) = validate_labeling(&grid, &l).unwrap();
                assert!(ok, "violations: {v:?}");
                // corners carry their own label
                for k in 0..3usize {
                    let mut corner = vec![0i64; 3];
                    corner[k] = 2;
                    let id = grid.vertex_id(&corner).unwrap();
                    assert_eq!(l.label(id) as usize, k);
                }
            }
            other => panic!("expected labeling, got {other:?}"),
        }
    }

    #[test]
    fn label_grid_early_exit_on_corner_fixed_point() {
        let grid = subdivide(2, 2).unwrap();
        let f = selfmap::constant(BarycentricPoint::corner(2, 0));
        match label_grid(&grid, &f, 1e-9).unwrap() {
            GridLabeling::EarlyFixedPoint { point, residual, .. } => {
                assert_eq!(point.coords(), &[1.0, 0.0, 0.0]);
                assert_eq!(residual, 0.0);
            }
            other => panic!("expected early exit, got {other:?}"),
        }
    }

    #[test]
    fn validate_flags_rule_violations() {
        let grid = subdivide(2, 2).unwrap();
        let f = selfmap::cyclic_shift(2);
        let GridLabeling::Labeled(mut l) = label_grid(&grid, &f, 1e-9).unwrap() else {
            panic!()
        };
        // break rule (1): corner 0 gets label 1
        let corner0 = grid.vertex_id(&vec![2, 0, 0]).unwrap();
        let saved = l.labels[corner0];
        l.labels[corner0] = 1;
        let (ok, violations) = validate_labeling(&grid, &l).unwrap();
        assert!(!ok);
        assert_eq!(violations[0].rule, "corner");
        l.labels[corner0] = saved;
        // break rule (2)/(3): edge vertex with v_2 = 0 gets label 2
        let edge = grid.vertex_id(&vec![1, 1, 0]).unwrap();
        l.labels[edge] = 2;
        let (ok, violations) = validate_labeling(&grid, &l).unwrap();
        assert!(!ok);
        assert_eq!(violations[0].rule, "face");
    }

    #[test]
    fn validate_rejects_partial_labeling() {
        let grid = subdivide(2, 2).unwrap();
        let l = Labeling {
            labels: vec![0; 3],
            provenance: Provenance::RuleBased,
        };
        assert!(matches!(
            validate_labeling(&grid, &l),
            Err(Error::IncompleteLabeling { .. })
        ));
    }

    #[test]
    fn function_induced_labelings_are_admissible() {
        // randomized stochastic-matrix maps across small dimensions
        use rand::{Rng, SeedableRng};
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for n in 1..=3u32 {
            let grid = subdivide(n, 3).unwrap();
            for _ in 0..34 {
                let k = n as usize + 1;
                let cols: Vec<Vec<f64>> = (0..k)
                    .map(|_| {
                        let mut c: Vec<f64> = (0..k).map(|_| rng.gen_range(0.01..1.0)).collect();
                        let s: f64 = c.iter().sum();
                        c.iter_mut().for_each(|x| *x /= s);
                        c
                    })
                    .collect();
                let f = selfmap::stochastic_matrix(cols);
                match label_grid(&grid, &f, 1e-12).unwrap() {
                    GridLabeling::Labeled(l) => {
                        let (ok, v) = validate_labeling(&grid, &l).unwrap();
                        assert!(ok, "violations: {v:?}");
                    }
                    GridLabeling::EarlyFixedPoint { .. } => {
                        // a lattice vertex happened to be (near) fixed; fine
                    }
                }
            }
        }
    }

    #[test]
    fn determinism_and_json_round_trip() {
        // m = 4: the barycenter (the shift's fixed point) is not a lattice
        // vertex, so labeling completes without an early exit
        let grid = subdivide(2, 4).unwrap();
        let f = selfmap::cyclic_shift(2);
        let GridLabeling::Labeled(a) = label_grid(&grid, &f, 1e-9).unwrap() else {
            panic!()
        };
        let GridLabeling::Labeled(b) = label_grid(&grid, &f, 1e-9).unwrap() else {
            panic!()
        };
        assert_eq!(a, b);
        let back = Labeling::from_json(&a.to_json()).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn admissible_enumeration_count() {
        // n=2, m=2: 3 corners fixed, 3 edge midpoints with 2 choices
        let grid = subdivide(2, 2).unwrap();
        let all: Vec<_> = enumerate_admissible(&grid).collect();
        assert_eq!(all.len(), 8);
        for l in &all {
            let (ok, _) = validate_labeling(&grid, l).unwrap();
            assert!(ok);
        }
    }

    #[test]
    fn random_admissible_is_admissible() {
        let grid = subdivide(3, 3).unwrap();
        for seed in 0..20 {
            let l = random_admissible(&grid, seed);
            let (ok, v) = validate_labeling(&grid, &l).unwrap();
            assert!(ok, "seed {seed}: {v:?}");
        }
    }
}
