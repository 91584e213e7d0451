use thiserror::Error;

/// Labeling rule broken by a particular vertex, reported by validation.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleViolation {
    pub vertex: usize,
    pub rule: &'static str,
    pub detail: String,
}

#[derive(Debug, Error)]
pub enum Error {
    /// The 0-simplex has no subdivision to speak of; callers handle it directly.
    #[error("trivial dimension: the 0-simplex is a single point")]
    TrivialDimension,

    #[error("invalid index {index} (limit {limit})")]
    Index { index: usize, limit: usize },

    #[error("invalid barycentric point: {0}")]
    InvalidPoint(String),

    #[error("perturbation radius {radius} exceeds bound {bound} for resolution m={m}")]
    InvalidRadius { radius: f64, bound: f64, m: u32 },

    /// No point near the named vertex moves under the map: the map appears to
    /// be locally constant (locally the identity) there.
    #[error("non-constancy violation at vertex {vertex:?}: no nearby point with residual above {threshold} in {attempts} samples")]
    NonConstancyViolation {
        vertex: Vec<f64>,
        threshold: f64,
        attempts: u32,
    },

    #[error("map range violation: image of {input:?} is {output:?} ({detail})")]
    RangeViolation {
        input: Vec<f64>,
        output: Vec<f64>,
        detail: String,
    },

    #[error("incomplete labeling: {missing} of {total} vertices unlabeled")]
    IncompleteLabeling { missing: usize, total: usize },

    #[error("inadmissible labeling: {} rule violations, first: vertex {} breaks {}", .0.len(), .0[0].vertex, .0[0].rule)]
    InadmissibleLabeling(Vec<RuleViolation>),

    #[error("modulus of continuity required but absent for map `{0}`")]
    ModulusRequired(String),

    #[error("mesh insufficiency: coordinate {coord} bound {bound} violated by {actual} (bad modulus?)")]
    MeshInsufficiency {
        coord: usize,
        bound: f64,
        actual: f64,
    },

    #[error("resolution m={needed} exceeds cap {cap}")]
    ResolutionExceeded { needed: u64, cap: u64 },

    #[error("projection failure: residual {achieved} above tolerance {tolerance} after {iterations} iterations")]
    ProjectionFailure {
        achieved: f64,
        tolerance: f64,
        iterations: u32,
    },

    #[error("requested net radius {requested} below achievable {achievable} for this sample resolution")]
    NetResolution { requested: f64, achievable: f64 },

    #[error("net size cap {cap} reached at covering radius {achieved} (requested {requested})")]
    NetSizeCap {
        cap: usize,
        achieved: f64,
        requested: f64,
    },

    #[error("embedding distortion: ambient residual {ambient} exceeds {bound} (simplex residual {simplex})")]
    EmbeddingDistortion {
        ambient: f64,
        simplex: f64,
        bound: f64,
    },

    #[error("degenerate sampling: {0}")]
    DegenerateSampling(String),

    #[error("internal consistency: {0}")]
    InternalConsistency(String),

    #[error("spec error: {0}")]
    Spec(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
