//! The fixed-point engine: pick a resolution from the modulus of
//! continuity, label lazily, walk to a fully labeled cell, extract an
//! ε-approximate fixed point, and refine geometrically. Also houses the
//! local-non-constancy diagnostic and an empirical modulus estimator.

pub mod selfmap;

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Error;
use crate::labeling::{sperner_label, LabelOrFixed, Labeling};
use crate::simplex::{
    self, lattice_coords, sample_in_carrier, BarycentricPoint, LatticePoint, SimplexGrid,
    SIMPLEX_DIAMETER,
};
use crate::sperner::{find_fully_labeled, SearchOutcome};

pub use selfmap::SelfMap;

/// Numeric slack permitted on the per-coordinate extraction bounds.
const BOUND_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Serialize)]
pub struct SolveConfig {
    /// Hard cap on the subdivision resolution m.
    pub max_resolution: u64,
    /// Probe samples drawn near a near-fixed vertex before declaring a
    /// non-constancy violation.
    pub probe_attempts: u32,
    /// A probe point "moves" when its residual exceeds this.
    pub tau_nc: f64,
    pub seed: u64,
    /// Worker pool size; `None` leaves the global default alone.
    pub workers: Option<usize>,
    /// Reuse the previous refinement level's approximant as the next
    /// level's starting cell. Off by default: each level restarts.
    pub warm_start: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            max_resolution: 100_000_000,
            probe_attempts: 64,
            tau_nc: 1e-9,
            seed: 0,
            workers: None,
            warm_start: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    EarlyVertexHit,
    NonConstancyViolation,
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceEntry {
    pub epsilon: f64,
    pub point: Vec<f64>,
    pub residual: f64,
    pub resolution: u64,
}

#[derive(Debug, Clone)]
pub struct FixedPointResult {
    pub point: BarycentricPoint,
    /// |f(point) − point|₁, recomputed at construction.
    pub residual: f64,
    pub mesh_resolution: u64,
    pub trace: Vec<TraceEntry>,
    pub status: SolveStatus,
}

impl FixedPointResult {
    pub fn to_json(&self, config: &SolveConfig) -> serde_json::Value {
        serde_json::json!({
            "point": self.point.coords(),
            "residual": self.residual,
            "mesh_resolution": self.mesh_resolution,
            "status": self.status,
            "trace": self.trace,
            "config": config,
        })
    }
}

/// Smallest m whose grid mesh is below min(δ(ε′), ε′) with
/// ε′ = ε/(2n(n+1)), the margin under which every coordinate bound of the
/// extraction argument goes through.
pub fn required_resolution(f: &SelfMap, n: u32, eps: f64) -> Result<u64, Error> {
    if eps <= 0.0 {
        return Err(Error::Spec("ε must be positive".into()));
    }
    let nf = n as f64;
    let eps_prime = eps / (2.0 * nf * (nf + 1.0));
    let delta = f
        .modulus(eps_prime)
        .ok_or_else(|| Error::ModulusRequired(f.name.clone()))?;
    let bound = delta.min(eps_prime);
    if !(bound > 0.0) {
        return Err(Error::Spec(format!(
            "modulus of `{}` returned a nonpositive mesh bound {bound}",
            f.name
        )));
    }
    // any pair of simplex points satisfies a diameter-or-more bound
    if bound >= SIMPLEX_DIAMETER {
        return Ok(1);
    }
    // mesh(m) = c/m with c = 2·⌈n/2⌉; smallest m with c/m < bound
    let c = 2.0 * n.div_ceil(2) as f64;
    Ok(((c / bound).floor() as u64 + 1).max(1))
}

fn check_extraction_bounds(
    v0: &BarycentricPoint,
    fv0: &BarycentricPoint,
    n: u32,
    eps: f64,
) -> Result<f64, Error> {
    let nf = n as f64;
    let coord0_bound = eps / (nf + 1.0);
    let lower = eps / (nf * (nf + 1.0));
    let upper = (nf - 1.0) * eps / (nf * (nf + 1.0));
    let mut l1 = 0.0;
    for (k, (&vk, &fk)) in v0.coords().iter().zip(fv0.coords()).enumerate() {
        let dev = vk - fk;
        l1 += dev.abs();
        let (lo, hi) = if k == 0 {
            (-coord0_bound, coord0_bound)
        } else {
            (-lower, upper)
        };
        if dev <= lo - BOUND_SLACK || dev >= hi + BOUND_SLACK {
            return Err(Error::MeshInsufficiency {
                coord: k,
                bound: if dev < 0.0 { lo } else { hi },
                actual: dev,
            });
        }
    }
    if l1 >= eps {
        return Err(Error::MeshInsufficiency {
            coord: v0.coords().len(),
            bound: eps,
            actual: l1,
        });
    }
    Ok(l1)
}

/// The label-0 vertex of a fully labeled cell, with the per-coordinate
/// deviation bounds asserted numerically. Errors signal that the grid is
/// too coarse for ε (i.e. the supplied modulus was wrong).
pub fn extract_approximation(
    grid: &SimplexGrid,
    labeling: &Labeling,
    f: &SelfMap,
    cell_id: usize,
    eps: f64,
) -> Result<BarycentricPoint, Error> {
    let cell = grid.cell(cell_id)?;
    let &v0_id = cell
        .vertex_ids
        .iter()
        .find(|&&v| labeling.label(v) == 0)
        .ok_or_else(|| Error::InternalConsistency("cell has no label-0 vertex".into()))?;
    let v0 = grid.vertex_coords(v0_id)?;
    let fv0 = f.checked_eval(&v0)?;
    check_extraction_bounds(&v0, &fv0, grid.dimension(), eps)?;
    Ok(v0)
}

/// Why a refinement level stopped before finding a fully labeled cell.
enum Stop {
    Hit { point: BarycentricPoint, residual: f64 },
    Violation { vertex: BarycentricPoint },
    Fail(Error),
}

enum LevelOutcome {
    Extracted(BarycentricPoint, f64),
    VertexHit(BarycentricPoint, f64),
    Violation(BarycentricPoint),
}

/// Look for evidence that the near-fixed vertex `v` is not a locally
/// unique fixed point: a distinct nearby point that the map also leaves
/// essentially in place (residual ≤ `tau_nc`). Samples the segments
/// toward each corner, `v`'s carrier face, and random interior blends,
/// all with ℓ1 step on the order of `rho`. `true` means a second
/// near-fixed point exists, i.e. local non-constancy fails at `v`.
fn probe_second_fixed(
    f: &SelfMap,
    v: &BarycentricPoint,
    rho: f64,
    tau_nc: f64,
    attempts: u32,
    rng: &mut ChaCha8Rng,
) -> Result<bool, Error> {
    let dim = v.coords().len();
    let support = v.coords().iter().filter(|&&c| c > 0.0).count();
    let blend = |u: &BarycentricPoint, rng: &mut ChaCha8Rng| -> Option<BarycentricPoint> {
        let dist = v.l1_distance(u);
        if dist < 1e-12 {
            return None;
        }
        let t = rng.gen_range(0.25..0.5) * rho / dist.max(rho);
        Some(v.lerp(u, t))
    };
    for i in 0..attempts as usize {
        let q = if i < dim {
            // sweep the edge directions first: a fixed face through a
            // corner is only visible along the corner's incident edges
            match blend(&BarycentricPoint::corner(dim - 1, i), rng) {
                Some(q) => q,
                None => continue,
            }
        } else if support >= 2 && i % 2 == 0 {
            match sample_in_carrier(v, rho, rng) {
                Some(q) => q,
                None => continue,
            }
        } else {
            // blend toward a random interior point
            let mut c: Vec<f64> = (0..dim).map(|_| -f64::ln(rng.gen::<f64>())).collect();
            let s: f64 = c.iter().sum();
            c.iter_mut().for_each(|x| *x /= s);
            let u = BarycentricPoint::new(c)
                .map_err(|e| Error::InternalConsistency(format!("probe sample: {e}")))?;
            match blend(&u, rng) {
                Some(q) => q,
                None => continue,
            }
        };
        // the witness must be genuinely distinct from v
        if v.l1_distance(&q) < 0.05 * rho {
            continue;
        }
        if f.checked_eval(&q)?.l1_distance(&q) <= tau_nc {
            return Ok(true);
        }
    }
    Ok(false)
}

/// One refinement level at resolution m: lazy labeling oracle feeding the
/// door-to-door search, with the near-fixed-vertex probe short-circuit.
fn run_level(
    f: &SelfMap,
    n: u32,
    m: u64,
    eps: f64,
    config: &SolveConfig,
    seed: u64,
    prev: Option<&BarycentricPoint>,
) -> Result<LevelOutcome, Error> {
    let tau_fix = eps / 4.0;
    let rho = simplex::default_rho(m.min(u32::MAX as u64) as u32);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut memo: HashMap<LatticePoint, u8> = HashMap::new();
    let mut eval_count: u64 = 0;
    let mut oracle = |p: &LatticePoint| -> Result<u8, Stop> {
        if let Some(&l) = memo.get(p) {
            return Ok(l);
        }
        eval_count += 1;
        let v = lattice_coords(p, m as i64);
        let fv = f.checked_eval(&v).map_err(Stop::Fail)?;
        match sperner_label(&v, &fv, tau_fix) {
            LabelOrFixed::Label(l) => {
                memo.insert(p.clone(), l);
                Ok(l)
            }
            LabelOrFixed::ApproximateFixedPoint { point, residual } => {
                match probe_second_fixed(
                    f,
                    &point,
                    rho,
                    config.tau_nc,
                    config.probe_attempts,
                    &mut rng,
                ) {
                    Ok(true) => Err(Stop::Violation { vertex: point }),
                    Ok(false) => Err(Stop::Hit { point, residual }),
                    Err(e) => Err(Stop::Fail(e)),
                }
            }
        }
    };

    // warm start: if the previous approximant's cell is already fully
    // labeled at this resolution, skip the walk
    let mut found: Option<crate::simplex::KuhnCell> = None;
    if config.warm_start {
        if let Some(p) = prev {
            let cell = simplex::locate(p, m as i64);
            if cell.is_valid() {
                let mut mask: u32 = 0;
                for v in cell.vertices() {
                    match oracle(&v) {
                        Ok(l) => mask |= 1 << l,
                        Err(Stop::Hit { point, residual }) => {
                            return Ok(LevelOutcome::VertexHit(point, residual))
                        }
                        Err(Stop::Violation { vertex }) => {
                            return Ok(LevelOutcome::Violation(vertex))
                        }
                        Err(Stop::Fail(e)) => return Err(e),
                    }
                }
                if mask == (1u32 << (n + 1)) - 1 {
                    found = Some(cell);
                }
            }
        }
    }

    let cell = match found {
        Some(c) => c,
        None => match find_fully_labeled(n as u8, m as i64, &mut oracle) {
            Ok(SearchOutcome::Found(c)) => c,
            Ok(SearchOutcome::Stuck(reason)) => {
                return Err(Error::InternalConsistency(format!(
                    "door path stuck ({reason}) before a fully labeled cell was found"
                )))
            }
            Err(Stop::Hit { point, residual }) => {
                return Ok(LevelOutcome::VertexHit(point, residual))
            }
            Err(Stop::Violation { vertex }) => return Ok(LevelOutcome::Violation(vertex)),
            Err(Stop::Fail(e)) => return Err(e),
        },
    };

    let v0_lattice = cell
        .vertices()
        .into_iter()
        .find(|p| memo.get(p) == Some(&0))
        .ok_or_else(|| Error::InternalConsistency("cell has no label-0 vertex".into()))?;
    let v0 = lattice_coords(&v0_lattice, m as i64);
    let fv0 = f.checked_eval(&v0)?;
    let residual = check_extraction_bounds(&v0, &fv0, n, eps)?;
    Ok(LevelOutcome::Extracted(v0, residual))
}

/// Compute an ε-approximate fixed point of `f` on the n-simplex by
/// geometric refinement: ε_k halves from the simplex diameter down to
/// `eps_target`, each level re-solved at the resolution its ε demands.
pub fn solve(
    f: &SelfMap,
    n: u32,
    eps_target: f64,
    config: &SolveConfig,
) -> Result<FixedPointResult, Error> {
    if eps_target <= 0.0 {
        return Err(Error::Spec("ε_target must be positive".into()));
    }
    if n == 0 {
        // the 0-simplex is a single point; any self-map fixes it
        let point = BarycentricPoint::corner(0, 0);
        let residual = f.checked_eval(&point)?.l1_distance(&point);
        return Ok(FixedPointResult {
            trace: vec![TraceEntry {
                epsilon: eps_target,
                point: point.coords().to_vec(),
                residual,
                resolution: 1,
            }],
            point,
            residual,
            mesh_resolution: 1,
            status: SolveStatus::Converged,
        });
    }

    let mut schedule = Vec::new();
    let mut e = SIMPLEX_DIAMETER;
    while e > eps_target {
        schedule.push(e);
        e /= 2.0;
    }
    schedule.push(eps_target);

    let mut trace: Vec<TraceEntry> = Vec::new();
    let mut prev: Option<BarycentricPoint> = None;
    let mut last: Option<(BarycentricPoint, f64, u64, bool)> = None;
    for (k, &eps_k) in schedule.iter().enumerate() {
        let m = required_resolution(f, n, eps_k)?;
        if m > config.max_resolution {
            return Err(Error::ResolutionExceeded {
                needed: m,
                cap: config.max_resolution,
            });
        }
        let seed = config
            .seed
            .wrapping_add((k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let warm = if config.warm_start { prev.as_ref() } else { None };
        let (point, residual, extracted) = match run_level(f, n, m, eps_k, config, seed, warm)? {
            LevelOutcome::Extracted(p, r) => (p, r, true),
            LevelOutcome::VertexHit(p, r) => (p, r, false),
            LevelOutcome::Violation(vertex) => {
                let residual = f.residual(&vertex);
                return Ok(FixedPointResult {
                    point: vertex.clone(),
                    residual,
                    mesh_resolution: m,
                    trace,
                    status: SolveStatus::NonConstancyViolation,
                });
            }
        };
        if residual >= eps_k {
            return Err(Error::InternalConsistency(format!(
                "level residual {residual} not below ε_k = {eps_k}"
            )));
        }
        trace.push(TraceEntry {
            epsilon: eps_k,
            point: point.coords().to_vec(),
            residual,
            resolution: m,
        });
        prev = Some(point.clone());
        last = Some((point, residual, m, extracted));
    }

    let (point, _, m, extracted) = last.expect("schedule is nonempty");
    // independent re-evaluation at report time
    let residual = f.checked_eval(&point)?.l1_distance(&point);
    if residual >= eps_target {
        return Err(Error::InternalConsistency(format!(
            "re-evaluated residual {residual} not below ε_target = {eps_target}"
        )));
    }
    Ok(FixedPointResult {
        point,
        residual,
        mesh_resolution: m,
        trace,
        status: if extracted {
            SolveStatus::Converged
        } else {
            SolveStatus::EarlyVertexHit
        },
    })
}

/// Empirical modulus of continuity: max observed ℓ1 expansion ratio over
/// sampled pairs, used as a Lipschitz estimate.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ModulusEstimate {
    /// Raw max ratio, no safety factor.
    pub lipschitz: f64,
    pub samples: usize,
}

impl ModulusEstimate {
    /// δ(ε) with a ×2 safety factor on the Lipschitz estimate, capped at
    /// the simplex diameter.
    pub fn delta(&self, eps: f64) -> f64 {
        let l = 2.0 * self.lipschitz;
        if l <= 0.0 {
            SIMPLEX_DIAMETER
        } else {
            (eps / l).min(SIMPLEX_DIAMETER)
        }
    }

    /// The map with this estimate installed as its modulus.
    pub fn attach(&self, f: &SelfMap) -> SelfMap {
        f.clone().with_lipschitz(2.0 * self.lipschitz)
    }
}

pub fn estimate_modulus(
    f: &SelfMap,
    n: u32,
    samples: usize,
    seed: u64,
) -> Result<ModulusEstimate, Error> {
    if samples < 2 {
        return Err(Error::Spec("modulus estimation needs at least 2 samples".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<BarycentricPoint> = (0..samples)
        .map(|_| random_point(n, &mut rng))
        .collect();
    let images: Vec<BarycentricPoint> = points
        .iter()
        .map(|p| f.checked_eval(p))
        .collect::<Result<_, _>>()?;
    let mut max_ratio: f64 = 0.0;
    let mut usable = 0usize;
    for i in 0..samples {
        for j in i + 1..samples {
            let d = points[i].l1_distance(&points[j]);
            if d < 1e-12 {
                continue;
            }
            usable += 1;
            max_ratio = max_ratio.max(images[i].l1_distance(&images[j]) / d);
        }
    }
    if usable == 0 {
        return Err(Error::DegenerateSampling(
            "all sampled point pairs coincide".into(),
        ));
    }
    Ok(ModulusEstimate {
        lipschitz: max_ratio,
        samples,
    })
}

fn random_point(n: u32, rng: &mut ChaCha8Rng) -> BarycentricPoint {
    let mut c: Vec<f64> = (0..=n).map(|_| -f64::ln(rng.gen::<f64>())).collect();
    let s: f64 = c.iter().sum();
    c.iter_mut().for_each(|x| *x /= s);
    BarycentricPoint::new(c).expect("normalized positives form a simplex point")
}

#[derive(Debug, Clone, Serialize)]
pub struct BallReport {
    pub center: Vec<f64>,
    pub radius: f64,
    /// Residual thresholds θ_j = ε̄·2^(−j), j = 1..
    pub thresholds: Vec<f64>,
    /// Max pairwise ℓ1 distance among sampled in-ball points with
    /// residual below θ_j; `None` when fewer than two qualify.
    pub diameters: Vec<Option<f64>>,
    pub flagged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SlncReport {
    pub eps_bar: f64,
    pub balls: Vec<BallReport>,
}

impl SlncReport {
    pub fn flagged_count(&self) -> usize {
        self.balls.iter().filter(|b| b.flagged).count()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serializes")
    }
}

/// Sampling diagnostic for local non-constancy: cover the simplex with
/// `net_count` balls, and inside each ball watch whether the diameter of
/// the small-residual set shrinks with the residual threshold. A ball
/// where small-residual points stay spread out holds (a sampled shadow
/// of) a continuum of fixed points — flagged as a suspected violation.
pub fn slnc_diagnostic(
    f: &SelfMap,
    n: u32,
    eps_bar: f64,
    net_count: usize,
    sequence_length: usize,
    seed: u64,
) -> Result<SlncReport, Error> {
    if eps_bar <= 0.0 {
        return Err(Error::Spec("ε̄ must be positive".into()));
    }
    if net_count == 0 || sequence_length == 0 {
        return Err(Error::Spec("net_count and sequence_length must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pool: Vec<BarycentricPoint> = (0..net_count.max(2) * 64)
        .map(|_| random_point(n, &mut rng))
        .collect();

    // greedy farthest-point centers over the pool
    let mut centers: Vec<BarycentricPoint> = vec![pool[0].clone()];
    let mut min_dist: Vec<f64> = pool.iter().map(|p| p.l1_distance(&pool[0])).collect();
    while centers.len() < net_count {
        let (far, _) = min_dist
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap();
        centers.push(pool[far].clone());
        for (p, d) in pool.iter().zip(min_dist.iter_mut()) {
            *d = d.min(p.l1_distance(&pool[far]));
        }
    }
    let radius = min_dist.iter().cloned().fold(0.0f64, f64::max).max(1e-6);
    if radius >= eps_bar {
        return Err(Error::NetResolution {
            requested: eps_bar,
            achievable: radius,
        });
    }

    let thresholds: Vec<f64> = (1..=sequence_length)
        .map(|j| eps_bar / (1u64 << j) as f64)
        .collect();
    let theta_min = *thresholds.last().unwrap();
    let per_ball = 128.max(32 * sequence_length);

    let mut balls = Vec::with_capacity(net_count);
    for center in &centers {
        let mut samples: Vec<(BarycentricPoint, f64)> = Vec::new();
        let push = |q: BarycentricPoint,
                        samples: &mut Vec<(BarycentricPoint, f64)>|
         -> Result<(), Error> {
            let r = f.checked_eval(&q)?.l1_distance(&q);
            samples.push((q, r));
            Ok(())
        };
        push(center.clone(), &mut samples)?;
        for _ in 0..per_ball {
            let u = random_point(n, &mut rng);
            let d = center.l1_distance(&u);
            let t = (rng.gen::<f64>() * radius / d.max(radius)).min(1.0);
            let q = center.lerp(&u, t);
            // face-snapped variants (several scales) catch fixed sets on
            // the boundary; the in-ball filter keeps this sound
            for shift in 1..=3u32 {
                let cut = radius / (1 << shift) as f64;
                let snapped: Vec<f64> = q
                    .coords()
                    .iter()
                    .map(|&c| if c < cut { 0.0 } else { c })
                    .collect();
                let s: f64 = snapped.iter().sum();
                if snapped.iter().any(|&c| c == 0.0) && s > 0.0 {
                    let snap =
                        BarycentricPoint::new(snapped.iter().map(|&c| c / s).collect())
                            .expect("renormalized snap is a simplex point");
                    if snap.l1_distance(center) <= radius {
                        push(snap, &mut samples)?;
                    }
                }
            }
            push(q, &mut samples)?;
        }

        let mut diameters = Vec::with_capacity(sequence_length);
        for &theta in &thresholds {
            let close: Vec<&BarycentricPoint> = samples
                .iter()
                .filter(|(_, r)| *r < theta)
                .map(|(q, _)| q)
                .collect();
            if close.len() < 2 {
                diameters.push(None);
                continue;
            }
            let mut diam: f64 = 0.0;
            for i in 0..close.len() {
                for j in i + 1..close.len() {
                    diam = diam.max(close[i].l1_distance(close[j]));
                }
            }
            diameters.push(Some(diam));
        }

        let max_diam = diameters
            .iter()
            .flatten()
            .cloned()
            .fold(0.0f64, f64::max);
        let flagged = match diameters.last().and_then(|d| *d) {
            Some(d_min) => d_min > 5.0 * theta_min && d_min >= 0.5 * max_diam,
            None => false,
        };
        balls.push(BallReport {
            center: center.coords().to_vec(),
            radius,
            thresholds: thresholds.clone(),
            diameters,
            flagged,
        });
    }

    Ok(SlncReport { eps_bar, balls })
}
