//! Bridge between a compact convex domain in a (semi)normed ambient space
//! and the barycentric simplex: ε-nets, the affine chart h and its
//! best-approximation inverse, the lifted self-map, and the ambient-side
//! solve built on top of the simplex engine.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::error::Error;
use crate::simplex::BarycentricPoint;
use crate::solver::{estimate_modulus, solve, FixedPointResult, SelfMap, SolveConfig, SolveStatus};

/// Convergence tolerance for the h⁻¹ projection.
pub const TAU_PROJ: f64 = 1e-6;
const PROJ_ITER_CAP: u32 = 5_000;
const PROJ_RIDGE: f64 = 1e-10;

// ---------------------------------------------------------------------------
// seminorms

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    L1,
    L2,
    Linf,
}

/// One evaluator of a finite seminorm family.
#[derive(Debug, Clone)]
pub enum Seminorm {
    /// |x_i| — a coordinate projection.
    Coordinate(usize),
    /// |⟨a, x⟩| — an absolute linear functional.
    Functional(Vec<f64>),
    Norm(NormKind),
}

impl Seminorm {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Seminorm::Coordinate(i) => x.get(*i).copied().unwrap_or(0.0).abs(),
            Seminorm::Functional(a) => a.iter().zip(x).map(|(ai, xi)| ai * xi).sum::<f64>().abs(),
            Seminorm::Norm(NormKind::L1) => x.iter().map(|v| v.abs()).sum(),
            Seminorm::Norm(NormKind::L2) => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
            Seminorm::Norm(NormKind::Linf) => x.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        }
    }
}

/// A finite family of seminorms with an active subset; distances are
/// measured by the aggregate Σ_{i∈F} p_i.
#[derive(Debug, Clone)]
pub struct SeminormFamily {
    evaluators: Vec<Seminorm>,
    active: Vec<usize>,
}

impl SeminormFamily {
    pub fn new(evaluators: Vec<Seminorm>) -> Self {
        let active = (0..evaluators.len()).collect();
        Self { evaluators, active }
    }

    pub fn with_active(mut self, active: Vec<usize>) -> Result<Self, Error> {
        if let Some(&bad) = active.iter().find(|&&i| i >= self.evaluators.len()) {
            return Err(Error::Index {
                index: bad,
                limit: self.evaluators.len(),
            });
        }
        self.active = active;
        Ok(self)
    }

    /// The single-norm family (the Banach / Schauder case).
    pub fn norm(kind: NormKind) -> Self {
        Self::new(vec![Seminorm::Norm(kind)])
    }

    pub fn evaluators(&self) -> &[Seminorm] {
        &self.evaluators
    }

    pub fn aggregate(&self, x: &[f64]) -> f64 {
        self.active.iter().map(|&i| self.evaluators[i].eval(x)).sum()
    }

    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        let diff: Vec<f64> = a.iter().zip(b).map(|(ai, bi)| ai - bi).collect();
        self.aggregate(&diff)
    }

    pub fn to_json(&self) -> Value {
        let evals: Vec<Value> = self
            .evaluators
            .iter()
            .map(|e| match e {
                Seminorm::Coordinate(i) => json!({"type": "coordinate", "index": i}),
                Seminorm::Functional(a) => json!({"type": "functional", "vector": a}),
                Seminorm::Norm(k) => json!({"type": "norm", "kind": match k {
                    NormKind::L1 => "l1",
                    NormKind::L2 => "l2",
                    NormKind::Linf => "linf",
                }}),
            })
            .collect();
        json!({"evaluators": evals, "active": self.active})
    }

    pub fn from_json(value: &Value) -> Result<Self, Error> {
        let list = value
            .get("evaluators")
            .or(Some(value))
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Spec("seminorm family: expected an evaluator list".into()))?;
        let mut evaluators = Vec::new();
        for item in list {
            let kind = item
                .get("type")
                .and_then(Value::as_str)
                .ok_or_else(|| Error::Spec("seminorm entry missing `type`".into()))?;
            evaluators.push(match kind {
                "coordinate" => Seminorm::Coordinate(
                    item.get("index")
                        .and_then(Value::as_u64)
                        .ok_or_else(|| Error::Spec("coordinate seminorm needs `index`".into()))?
                        as usize,
                ),
                "functional" => Seminorm::Functional(
                    serde_json::from_value(
                        item.get("vector")
                            .cloned()
                            .ok_or_else(|| Error::Spec("functional seminorm needs `vector`".into()))?,
                    )?,
                ),
                "norm" => Seminorm::Norm(match item.get("kind").and_then(Value::as_str) {
                    Some("l1") => NormKind::L1,
                    Some("l2") => NormKind::L2,
                    Some("linf") => NormKind::Linf,
                    other => {
                        return Err(Error::Spec(format!(
                            "unknown norm kind {other:?}; expected l1, l2 or linf"
                        )))
                    }
                }),
                other => return Err(Error::Spec(format!("unknown seminorm type `{other}`"))),
            });
        }
        let family = Self::new(evaluators);
        match value.get("active") {
            Some(active) => family.with_active(serde_json::from_value(active.clone())?),
            None => Ok(family),
        }
    }
}

// ---------------------------------------------------------------------------
// domains

/// A bounded convex region in finite ambient dimension.
#[derive(Debug, Clone)]
pub enum Domain {
    /// Convex hull of explicit generators.
    Hull { generators: Vec<Vec<f64>> },
    /// Euclidean ball (supported for ambient dimension ≤ 2).
    Ball { center: Vec<f64>, radius: f64 },
    /// Axis-aligned cube [center − radius, center + radius]^d.
    Box { center: Vec<f64>, radius: f64 },
}

impl Domain {
    pub fn ambient_dim(&self) -> usize {
        match self {
            Domain::Hull { generators } => generators.first().map_or(0, Vec::len),
            Domain::Ball { center, .. } | Domain::Box { center, .. } => center.len(),
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        match self {
            Domain::Hull { generators } => {
                if generators.is_empty() {
                    return Err(Error::Spec("hull domain needs at least one generator".into()));
                }
                let d = generators[0].len();
                if d == 0 || generators.iter().any(|g| g.len() != d) {
                    return Err(Error::Spec("hull generators must share a positive dimension".into()));
                }
            }
            Domain::Ball { center, radius } | Domain::Box { center, radius } => {
                if center.is_empty() || !(*radius >= 0.0) {
                    return Err(Error::Spec("center must be nonempty and radius nonnegative".into()));
                }
            }
        }
        Ok(())
    }

    /// A random point of the domain (uniform for box/ball, Dirichlet
    /// mixture of generators for hulls).
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        match self {
            Domain::Hull { generators } => {
                let mut w: Vec<f64> = generators
                    .iter()
                    .map(|_| -f64::ln(rng.gen::<f64>()))
                    .collect();
                let s: f64 = w.iter().sum();
                w.iter_mut().for_each(|x| *x /= s);
                let d = generators[0].len();
                let mut p = vec![0.0; d];
                for (g, wi) in generators.iter().zip(&w) {
                    for (pi, gi) in p.iter_mut().zip(g) {
                        *pi += wi * gi;
                    }
                }
                p
            }
            Domain::Ball { center, radius } => {
                let d = center.len();
                loop {
                    let u: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    if u.iter().map(|v| v * v).sum::<f64>() <= 1.0 {
                        return center
                            .iter()
                            .zip(&u)
                            .map(|(c, ui)| c + radius * ui)
                            .collect();
                    }
                }
            }
            Domain::Box { center, radius } => center
                .iter()
                .map(|c| c + rng.gen_range(-radius..=*radius))
                .collect(),
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Domain::Hull { generators } => {
                json!({"type": "hull", "generators": generators,
                       "ambient_dim": self.ambient_dim()})
            }
            Domain::Ball { center, radius } => {
                json!({"type": "ball", "center": center, "radius": radius,
                       "ambient_dim": self.ambient_dim()})
            }
            Domain::Box { center, radius } => {
                json!({"type": "box", "center": center, "radius": radius,
                       "ambient_dim": self.ambient_dim()})
            }
        }
    }

    pub fn from_json(value: &Value) -> Result<Self, Error> {
        let kind = value
            .get("type")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::Spec("domain missing `type`".into()))?;
        let get = |field: &str| -> Result<Value, Error> {
            value
                .get(field)
                .cloned()
                .ok_or_else(|| Error::Spec(format!("{kind} domain needs `{field}`")))
        };
        let domain = match kind {
            "hull" => Domain::Hull {
                generators: serde_json::from_value(get("generators")?)?,
            },
            "ball" => Domain::Ball {
                center: serde_json::from_value(get("center")?)?,
                radius: serde_json::from_value(get("radius")?)?,
            },
            "box" => Domain::Box {
                center: serde_json::from_value(get("center")?)?,
                radius: serde_json::from_value(get("radius")?)?,
            },
            other => return Err(Error::Spec(format!("unknown domain type `{other}`"))),
        };
        domain.validate()?;
        Ok(domain)
    }
}

// ---------------------------------------------------------------------------
// nets

/// A finite set of domain points indexing the simplex corners downstream:
/// simplex dimension = point count − 1. `epsilon` is the covering (or
/// hull-proximity) allowance the net guarantees.
#[derive(Debug, Clone)]
pub struct EpsilonNet {
    pub points: Vec<Vec<f64>>,
    pub epsilon: f64,
    pub family: SeminormFamily,
}

impl EpsilonNet {
    pub fn simplex_dim(&self) -> usize {
        self.points.len() - 1
    }

    pub fn ambient_dim(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }
}

#[derive(Debug, Clone)]
pub struct NetConfig {
    /// Domain sample pool size (the covering witness set).
    pub samples: usize,
    /// Cap on the number of net points; the simplex solve is exponential
    /// in this, so it must stay small.
    pub max_points: usize,
    pub seed: u64,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self {
            samples: 4096,
            max_points: 12,
            seed: 0,
        }
    }
}

/// Greedy farthest-point covering net: every witness sample ends within
/// `eps` of a net point in the aggregate seminorm.
pub fn build_net(
    domain: &Domain,
    family: &SeminormFamily,
    eps: f64,
    config: &NetConfig,
) -> Result<EpsilonNet, Error> {
    domain.validate()?;
    if eps <= 0.0 {
        return Err(Error::Spec("net ε must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let pool: Vec<Vec<f64>> = (0..config.samples.max(1))
        .map(|_| domain.sample(&mut rng))
        .collect();
    // seed from an extreme point (farthest from the pool centroid): the
    // greedy cover then needs fewer points than from an interior start
    let d = pool[0].len();
    let mut centroid = vec![0.0; d];
    for p in &pool {
        for (ci, pi) in centroid.iter_mut().zip(p) {
            *ci += pi / pool.len() as f64;
        }
    }
    let first = pool
        .iter()
        .enumerate()
        .max_by(|a, b| {
            family
                .distance(a.1, &centroid)
                .partial_cmp(&family.distance(b.1, &centroid))
                .unwrap()
        })
        .map(|(i, _)| i)
        .unwrap();
    let mut points = vec![pool[first].clone()];
    let mut min_dist: Vec<f64> = pool
        .iter()
        .map(|p| family.distance(p, &pool[first]))
        .collect();
    loop {
        let (far, &radius) = min_dist
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap();
        if radius <= eps {
            return Ok(EpsilonNet {
                points,
                epsilon: eps,
                family: family.clone(),
            });
        }
        if points.len() >= config.max_points {
            return Err(Error::NetSizeCap {
                cap: config.max_points,
                achieved: radius,
                requested: eps,
            });
        }
        if radius < 1e-15 {
            // pool exhausted without reaching eps: sampling can't resolve it
            return Err(Error::NetResolution {
                requested: eps,
                achievable: radius,
            });
        }
        points.push(pool[far].clone());
        for (p, d) in pool.iter().zip(min_dist.iter_mut()) {
            *d = d.min(family.distance(p, &pool[far]));
        }
    }
}

/// A net whose convex hull reproduces the domain (exactly for hulls and
/// boxes, up to the reported `epsilon` for balls). Round-trip error
/// through h/h⁻¹ is then projection noise, not a covering radius, which
/// keeps the simplex dimension small at tight ε.
pub fn spanning_net(
    domain: &Domain,
    family: &SeminormFamily,
    eps_budget: f64,
    max_points: usize,
) -> Result<EpsilonNet, Error> {
    domain.validate()?;
    let points: Vec<Vec<f64>> = match domain {
        Domain::Hull { generators } => generators.clone(),
        Domain::Box { center, radius } => {
            let d = center.len();
            if (1usize << d) > max_points.max(2) {
                return Err(Error::NetSizeCap {
                    cap: max_points,
                    achieved: f64::INFINITY,
                    requested: eps_budget,
                });
            }
            (0..1usize << d)
                .map(|bits| {
                    center
                        .iter()
                        .enumerate()
                        .map(|(i, c)| {
                            if bits >> i & 1 == 1 {
                                c + radius
                            } else {
                                c - radius
                            }
                        })
                        .collect()
                })
                .collect()
        }
        Domain::Ball { center, radius } => match center.len() {
            1 => vec![vec![center[0] - radius], vec![center[0] + radius]],
            2 => {
                // inscribed regular k-gon; hull defect is the sagitta
                let k = (3..=max_points.max(3))
                    .find(|&k| radius * (1.0 - (std::f64::consts::PI / k as f64).cos()) <= eps_budget)
                    .unwrap_or(max_points.max(3));
                (0..k)
                    .map(|i| {
                        let t = 2.0 * std::f64::consts::PI * i as f64 / k as f64;
                        vec![center[0] + radius * t.cos(), center[1] + radius * t.sin()]
                    })
                    .collect()
            }
            d => {
                return Err(Error::Spec(format!(
                    "ball domains are supported up to ambient dimension 2, got {d}"
                )))
            }
        },
    };
    let epsilon = match domain {
        Domain::Ball { radius, center } if center.len() == 2 => {
            let k = points.len();
            eps_budget.max(radius * (1.0 - (std::f64::consts::PI / k as f64).cos()))
        }
        _ => eps_budget,
    };
    if points.len() > max_points.max(points.len().min(2)) {
        return Err(Error::NetSizeCap {
            cap: max_points,
            achieved: epsilon,
            requested: eps_budget,
        });
    }
    Ok(EpsilonNet {
        points,
        epsilon,
        family: family.clone(),
    })
}

// ---------------------------------------------------------------------------
// h and h⁻¹

/// The affine chart: h(v) = Σ_j v_j·x^j.
pub fn h(net: &EpsilonNet, v: &BarycentricPoint) -> Vec<f64> {
    assert_eq!(
        v.coords().len(),
        net.points.len(),
        "barycentric dimension must match the net size"
    );
    let d = net.ambient_dim();
    let mut out = vec![0.0; d];
    for (alpha, x) in v.coords().iter().zip(&net.points) {
        for (oi, xi) in out.iter_mut().zip(x) {
            *oi += alpha * xi;
        }
    }
    out
}

/// Euclidean projection onto the probability simplex (sort-based).
fn project_simplex(y: &[f64]) -> Vec<f64> {
    let mut sorted = y.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, &yj) in sorted.iter().enumerate() {
        cum += yj;
        let t = (cum - 1.0) / (j + 1) as f64;
        if yj - t > 0.0 {
            theta = t;
        }
    }
    y.iter().map(|&yi| (yi - theta).max(0.0)).collect()
}

/// Best-approximation inverse chart: the coefficient vector minimizing
/// ‖Σ α_j x^j − x‖₂ over the simplex (tiny ridge for a minimal-norm
/// tie-break), by projected gradient descent. Falls back to the nearest
/// net point's indicator, which the net property bounds by ε.
pub fn h_inv(net: &EpsilonNet, x: &[f64]) -> Result<BarycentricPoint, Error> {
    let k = net.points.len();
    let d = net.ambient_dim();
    if x.len() != d {
        return Err(Error::Spec(format!(
            "h_inv input has dimension {}, net is {d}-dimensional",
            x.len()
        )));
    }
    // gradient Lipschitz bound: σ_max(AᵀA) ≤ trace(AᵀA)
    let trace: f64 = net
        .points
        .iter()
        .map(|p| p.iter().map(|v| v * v).sum::<f64>())
        .sum();
    let step = 1.0 / (trace + PROJ_RIDGE).max(1e-12);
    let mut alpha = vec![1.0 / k as f64; k];
    let mut obj_prev = f64::INFINITY;
    let mut iterations = 0;
    for it in 0..PROJ_ITER_CAP {
        iterations = it + 1;
        let mut r = vec![0.0; d];
        for (aj, xj) in alpha.iter().zip(&net.points) {
            for (ri, xi) in r.iter_mut().zip(xj) {
                *ri += aj * xi;
            }
        }
        for (ri, xi) in r.iter_mut().zip(x) {
            *ri -= xi;
        }
        let obj: f64 = r.iter().map(|v| v * v).sum();
        let grad: Vec<f64> = net
            .points
            .iter()
            .zip(&alpha)
            .map(|(xj, aj)| {
                xj.iter().zip(&r).map(|(xi, ri)| xi * ri).sum::<f64>() + PROJ_RIDGE * aj
            })
            .collect();
        let next = project_simplex(
            &alpha
                .iter()
                .zip(&grad)
                .map(|(a, g)| a - step * g)
                .collect::<Vec<_>>(),
        );
        let moved: f64 = next
            .iter()
            .zip(&alpha)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        alpha = next;
        if moved < 1e-12 || (obj_prev - obj).abs() < 1e-18 * obj.max(1.0) {
            break;
        }
        obj_prev = obj;
    }
    let candidate = BarycentricPoint::new_clamped(alpha, 1e-9)
        .map_err(|e| Error::InternalConsistency(format!("projected α not a simplex point: {e}")))?;
    let cand_res = net.family.distance(&h(net, &candidate), x);

    // feasible witness: indicator of the nearest net point (≤ ε by the
    // net property whenever x is within the net's reach)
    let nearest = (0..k)
        .min_by(|&a, &b| {
            net.family
                .distance(&net.points[a], x)
                .partial_cmp(&net.family.distance(&net.points[b], x))
                .unwrap()
        })
        .expect("net is nonempty");
    let witness = BarycentricPoint::corner(k - 1, nearest);
    let wit_res = net.family.distance(&net.points[nearest], x);

    let (best, best_res) = if cand_res <= wit_res {
        (candidate, cand_res)
    } else {
        (witness, wit_res)
    };
    if best_res > net.epsilon + TAU_PROJ {
        return Err(Error::ProjectionFailure {
            achieved: best_res,
            tolerance: net.epsilon + TAU_PROJ,
            iterations,
        });
    }
    Ok(best)
}

// ---------------------------------------------------------------------------
// ambient maps and the lift

type AmbientEval = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// A self-map of the ambient domain.
#[derive(Clone)]
pub struct AmbientMap {
    pub name: String,
    eval: Arc<AmbientEval>,
}

impl std::fmt::Debug for AmbientMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AmbientMap").field("name", &self.name).finish()
    }
}

impl AmbientMap {
    pub fn new(
        name: impl Into<String>,
        eval: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            eval: Arc::new(eval),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        (self.eval)(x)
    }
}

/// g(x) = (1−t)·x + t·c; Lipschitz 1−t in every norm.
pub fn ambient_contraction(center: Vec<f64>, factor: f64) -> AmbientMap {
    AmbientMap::new(format!("contraction({factor})"), move |x: &[f64]| {
        x.iter()
            .zip(&center)
            .map(|(xi, ci)| factor * xi + (1.0 - factor) * ci)
            .collect()
    })
}

/// 2-D rotation about `center` composed with scaling toward it;
/// Lipschitz = factor in ℓ2.
pub fn rotation_scaling(center: Vec<f64>, angle: f64, factor: f64) -> AmbientMap {
    AmbientMap::new(
        format!("rotation_scaling({angle}, {factor})"),
        move |x: &[f64]| {
            let (dx, dy) = (x[0] - center[0], x[1] - center[1]);
            let (c, s) = (angle.cos(), angle.sin());
            vec![
                center[0] + factor * (c * dx - s * dy),
                center[1] + factor * (s * dx + c * dy),
            ]
        },
    )
}

/// f = h⁻¹ ∘ g ∘ h on the simplex indexed by the net. A projection
/// failure inside the composition falls back to the nearest-net-point
/// indicator, so the lifted map is total; no modulus is attached (callers
/// estimate one).
pub fn lift(g: &AmbientMap, net: &EpsilonNet) -> SelfMap {
    let g = g.clone();
    let net = net.clone();
    let name = format!("lift({})", g.name);
    SelfMap::new(name, move |v: &BarycentricPoint| {
        let gx = g.eval(&h(&net, v));
        match h_inv(&net, &gx) {
            Ok(alpha) => alpha,
            Err(_) => {
                let nearest = (0..net.points.len())
                    .min_by(|&a, &b| {
                        net.family
                            .distance(&net.points[a], &gx)
                            .partial_cmp(&net.family.distance(&net.points[b], &gx))
                            .unwrap()
                    })
                    .expect("net is nonempty");
                BarycentricPoint::corner(net.points.len() - 1, nearest)
            }
        }
    })
}

// ---------------------------------------------------------------------------
// the ambient solve

#[derive(Debug, Clone)]
pub struct AmbientResult {
    pub point: Vec<f64>,
    /// aggregate(g(point) − point), recomputed at construction.
    pub residual: f64,
    pub net_epsilon: f64,
    pub net_points: usize,
    pub simplex: FixedPointResult,
}

impl AmbientResult {
    pub fn to_json(&self, config: &SolveConfig) -> Value {
        json!({
            "point": self.point,
            "residual": self.residual,
            "net_epsilon": self.net_epsilon,
            "net_points": self.net_points,
            "simplex": self.simplex.to_json(config),
        })
    }
}

/// Fixed-point solve on an ambient convex domain: build a net at
/// ε_net = ε_target/4, lift g through the chart, run the simplex solver
/// at a target shrunk by h's Lipschitz bound, and push the approximant
/// back. The ambient residual must come in below ε_target + 2·ε_net.
pub fn schauder_solve(
    domain: &Domain,
    g: &AmbientMap,
    family: &SeminormFamily,
    eps_target: f64,
    config: &SolveConfig,
) -> Result<AmbientResult, Error> {
    if eps_target <= 0.0 {
        return Err(Error::Spec("ε_target must be positive".into()));
    }
    let eps_net = eps_target / 4.0;
    let net = spanning_net(domain, family, eps_net, 16)?;
    let n = net.simplex_dim();

    if n == 0 {
        let x = net.points[0].clone();
        let residual = family.distance(&g.eval(&x), &x);
        return check_ambient(
            AmbientResult {
                point: x,
                residual,
                net_epsilon: net.epsilon,
                net_points: 1,
                simplex: trivial_result(eps_target),
            },
            eps_target,
        );
    }

    // h expands ℓ1 barycentric distance by at most half the widest
    // net-point spread
    let mut spread: f64 = 0.0;
    for i in 0..net.points.len() {
        for j in i + 1..net.points.len() {
            spread = spread.max(family.distance(&net.points[i], &net.points[j]));
        }
    }
    let lh = (spread / 2.0).max(1e-12);
    let eps_s = eps_target / (2.0 * lh.max(1.0));

    let lifted = lift(g, &net);
    let est = estimate_modulus(&lifted, n as u32, 200, config.seed ^ 0xA5A5)?;
    let lifted = est.attach(&lifted);

    let simplex = solve(&lifted, n as u32, eps_s, config)?;
    if simplex.status == SolveStatus::NonConstancyViolation {
        let x = h(&net, &simplex.point);
        let residual = family.distance(&g.eval(&x), &x);
        return Ok(AmbientResult {
            point: x,
            residual,
            net_epsilon: net.epsilon,
            net_points: net.points.len(),
            simplex,
        });
    }
    let x = h(&net, &simplex.point);
    let residual = family.distance(&g.eval(&x), &x);
    check_ambient(
        AmbientResult {
            point: x,
            residual,
            net_epsilon: net.epsilon,
            net_points: net.points.len(),
            simplex,
        },
        eps_target,
    )
}

fn check_ambient(result: AmbientResult, eps_target: f64) -> Result<AmbientResult, Error> {
    let bound = eps_target + 2.0 * result.net_epsilon;
    if result.residual >= bound {
        return Err(Error::EmbeddingDistortion {
            ambient: result.residual,
            simplex: result.simplex.residual,
            bound,
        });
    }
    Ok(result)
}

fn trivial_result(eps: f64) -> FixedPointResult {
    FixedPointResult {
        point: BarycentricPoint::corner(0, 0),
        residual: 0.0,
        mesh_resolution: 1,
        trace: vec![crate::solver::TraceEntry {
            epsilon: eps,
            point: vec![1.0],
            residual: 0.0,
            resolution: 1,
        }],
        status: SolveStatus::Converged,
    }
}
