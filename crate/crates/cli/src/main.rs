//! Command-line front end: pick or define a map and domain, run the
//! solver, verify the combinatorial invariants, and emit JSON/CSV.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use sperner_fix::embedding::{
    ambient_contraction, rotation_scaling, schauder_solve, AmbientMap, Domain, NormKind,
    SeminormFamily,
};
use sperner_fix::labeling::{enumerate_admissible, random_admissible};
use sperner_fix::solver::selfmap;
use sperner_fix::solver::{estimate_modulus, solve, SolveConfig, SolveStatus};
use sperner_fix::sperner::{
    build_dual_graph, find_fully_labeled_exhaustive, find_fully_labeled_path, handshake_check,
};
use sperner_fix::Error;

// exit codes beyond success: keep them distinct and documented
const EXIT_FAILURE: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_NON_CONSTANCY: u8 = 3;
const EXIT_RESOLUTION: u8 = 4;
const EXIT_PROJECTION: u8 = 5;

#[derive(Parser)]
#[command(
    name = "sperner-fix",
    version,
    about = "Approximate fixed points of simplex self-maps via fully labeled cells"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve for an approximate fixed point; emits a JSON result.
    Solve(SolveArgs),
    /// Run parity, handshake, and path-vs-exhaustive invariant checks.
    Verify(VerifyArgs),
    /// Solve and emit the refinement trace as CSV.
    Trace(SolveArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// Built-in map name: identity, constant, constant-corner,
    /// cyclic-shift, affine-contraction, quadratic, edge-fixing.
    #[arg(long, conflicts_with = "spec")]
    map: Option<String>,
    /// Ambient problem spec file (JSON with domain, norm/family, map).
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Simplex dimension for built-in maps.
    #[arg(long, default_value_t = 2)]
    n: u32,
    /// Cap on the subdivision resolution.
    #[arg(long, default_value_t = 100_000_000)]
    m: u64,
    /// Target residual ε.
    #[arg(long, default_value_t = 1e-3)]
    eps: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker pool size (defaults to all cores).
    #[arg(long, env = "SPERNER_FIX_WORKERS")]
    workers: Option<usize>,
    /// Output path (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    m: Option<u32>,
    /// "exhaustive" (all admissible labelings) or "random".
    #[arg(long, default_value = "random")]
    mode: String,
    /// Number of random labelings in random mode.
    #[arg(long, default_value_t = 200)]
    count: u64,
    /// Instead of grid checks: this many random graphs through the
    /// handshake test.
    #[arg(long)]
    handshake_random: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, env = "SPERNER_FIX_WORKERS")]
    workers: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.cmd {
        Cmd::Solve(args) => run_solve(&args, OutputKind::Json),
        Cmd::Trace(args) => run_solve(&args, OutputKind::Csv),
        Cmd::Verify(args) => run_verify(&args),
    };
    match code {
        Ok(c) => ExitCode::from(c),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(error_exit_code(&e))
        }
    }
}

fn error_exit_code(e: &Error) -> u8 {
    match e {
        Error::ResolutionExceeded { .. } => EXIT_RESOLUTION,
        Error::ProjectionFailure { .. } | Error::EmbeddingDistortion { .. } => EXIT_PROJECTION,
        Error::NonConstancyViolation { .. } => EXIT_NON_CONSTANCY,
        Error::Spec(_) | Error::Json(_) => EXIT_USAGE,
        _ => EXIT_FAILURE,
    }
}

enum OutputKind {
    Json,
    Csv,
}

fn init_workers(workers: Option<usize>) {
    if let Some(w) = workers {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build_global();
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Error> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => println!("{text}"),
    }
    Ok(())
}

fn run_solve(args: &SolveArgs, kind: OutputKind) -> Result<u8, Error> {
    init_workers(args.workers);
    let config = SolveConfig {
        max_resolution: args.m,
        seed: args.seed,
        workers: args.workers,
        ..SolveConfig::default()
    };

    let (doc, trace_csv, status) = if let Some(spec_path) = &args.spec {
        let spec: Value = serde_json::from_str(&fs::read_to_string(spec_path)?)?;
        let (domain, family, map) = parse_ambient_spec(&spec)?;
        let result = schauder_solve(&domain, &map, &family, args.eps, &config)?;
        let csv = trace_to_csv(&result.simplex.trace);
        let status = result.simplex.status;
        (result.to_json(&config), csv, status)
    } else {
        let name = args.map.as_deref().ok_or_else(|| {
            Error::Spec("one of --map or --spec is required".into())
        })?;
        let mut f = selfmap::by_name(name, args.n as usize)?;
        if !f.has_modulus() {
            f = estimate_modulus(&f, args.n, 400, args.seed)?.attach(&f);
        }
        let result = solve(&f, args.n, args.eps, &config)?;
        let csv = trace_to_csv(&result.trace);
        let status = result.status;
        (result.to_json(&config), csv, status)
    };

    match kind {
        OutputKind::Json => emit(&args.out, &serde_json::to_string_pretty(&doc)?)?,
        OutputKind::Csv => {
            if status == SolveStatus::NonConstancyViolation {
                eprintln!("no trace: the map violates local non-constancy");
            } else {
                emit(&args.out, &trace_csv)?;
            }
        }
    }
    Ok(match status {
        SolveStatus::Converged | SolveStatus::EarlyVertexHit => 0,
        SolveStatus::NonConstancyViolation => EXIT_NON_CONSTANCY,
    })
}

fn trace_to_csv(trace: &[sperner_fix::solver::TraceEntry]) -> String {
    let dim = trace.first().map_or(0, |t| t.point.len());
    let mut out = String::from("epsilon,residual,resolution");
    for k in 0..dim {
        out.push_str(&format!(",p{k}"));
    }
    out.push('\n');
    for t in trace {
        out.push_str(&format!("{},{},{}", t.epsilon, t.residual, t.resolution));
        for p in &t.point {
            out.push_str(&format!(",{p}"));
        }
        out.push('\n');
    }
    out
}

fn parse_ambient_spec(spec: &Value) -> Result<(Domain, SeminormFamily, AmbientMap), Error> {
    let domain = Domain::from_json(
        spec.get("domain")
            .ok_or_else(|| Error::Spec("spec file missing `domain`".into()))?,
    )?;
    let family = match (spec.get("norm"), spec.get("family")) {
        (Some(norm), _) => SeminormFamily::norm(match norm.as_str() {
            Some("l1") => NormKind::L1,
            Some("l2") => NormKind::L2,
            Some("linf") => NormKind::Linf,
            other => {
                return Err(Error::Spec(format!(
                    "field `norm`: expected l1, l2 or linf, got {other:?}"
                )))
            }
        }),
        (None, Some(fam)) => SeminormFamily::from_json(fam)?,
        (None, None) => SeminormFamily::norm(NormKind::L2),
    };
    let map = spec
        .get("map")
        .ok_or_else(|| Error::Spec("spec file missing `map`".into()))?;
    let kind = map
        .get("type")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::Spec("field `map.type` is required".into()))?;
    let center: Vec<f64> = serde_json::from_value(
        map.get("center")
            .cloned()
            .ok_or_else(|| Error::Spec(format!("map `{kind}` needs `center`")))?,
    )?;
    let factor = map
        .get("factor")
        .and_then(Value::as_f64)
        .ok_or_else(|| Error::Spec(format!("map `{kind}` needs numeric `factor`")))?;
    let ambient = match kind {
        "contraction" => ambient_contraction(center, factor),
        "rotation-scaling" => {
            let angle = map
                .get("angle")
                .and_then(Value::as_f64)
                .ok_or_else(|| Error::Spec("map `rotation-scaling` needs `angle`".into()))?;
            rotation_scaling(center, angle, factor)
        }
        other => {
            return Err(Error::Spec(format!(
                "unknown map type `{other}`; expected contraction or rotation-scaling"
            )))
        }
    };
    Ok((domain, family, ambient))
}

fn run_verify(args: &VerifyArgs) -> Result<u8, Error> {
    init_workers(args.workers);

    if let Some(graphs) = args.handshake_random {
        let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
        let mut failures = 0u64;
        for _ in 0..graphs {
            let nodes = rng.gen_range(1..=50usize);
            let mut degrees = vec![0u64; nodes];
            let mut edges = 0u64;
            for a in 0..nodes {
                for b in a + 1..nodes {
                    if rng.gen_bool(0.3) {
                        degrees[a] += 1;
                        degrees[b] += 1;
                        edges += 1;
                    }
                }
            }
            if !handshake_check(&degrees, edges) {
                failures += 1;
            }
        }
        println!("handshake: {graphs} random graphs, {failures} failures");
        return Ok(if failures == 0 { 0 } else { EXIT_FAILURE });
    }

    let (n, m) = match (args.n, args.m) {
        (Some(n), Some(m)) => (n, m),
        _ => {
            return Err(Error::Spec(
                "verify needs --n and --m (or --handshake-random)".into(),
            ))
        }
    };
    let grid = sperner_fix::simplex::subdivide(n, m)?;
    let labelings: Vec<_> = match args.mode.as_str() {
        "exhaustive" => enumerate_admissible(&grid).collect(),
        "random" => (0..args.count)
            .map(|k| random_admissible(&grid, args.seed.wrapping_add(k)))
            .collect(),
        other => {
            return Err(Error::Spec(format!(
                "unknown mode `{other}`; expected exhaustive or random"
            )))
        }
    };

    let mut failures = 0u64;
    for (i, labeling) in labelings.iter().enumerate() {
        let full = find_fully_labeled_exhaustive(&grid, labeling)?;
        let path = find_fully_labeled_path(&grid, labeling)?;
        let dual = build_dual_graph(&grid, labeling)?;
        let degrees = dual.degrees();
        let parity_ok = full.len() % 2 == 1;
        let path_ok = full.contains(&path);
        let degree_ok = degrees[..dual.cell_count].iter().all(|&d| d <= 2);
        let shake_ok = handshake_check(&degrees, dual.edges.len() as u64);
        if !(parity_ok && path_ok && degree_ok && shake_ok) {
            failures += 1;
            println!(
                "labeling {i}: parity={parity_ok} path={path_ok} degrees={degree_ok} handshake={shake_ok}"
            );
        }
    }
    println!(
        "verify n={n} m={m}: {} labelings, {failures} failures",
        labelings.len()
    );
    Ok(if failures == 0 { 0 } else { EXIT_FAILURE })
}
