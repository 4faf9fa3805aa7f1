//! Batch driver: one subcommand per experiment, JSON config in, CSV and
//! JSON out, plus a `manifest.json` per run.
//!
//! Exit codes: 0 success, 1 validation failure, 2 numerical
//! non-convergence, 3 I/O, config or usage error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand::Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::acceptance::{run_acceptance, AcceptanceSettings, Preset};
use crate::cone_dynamics::{geometric_potential, local_manifold, lyapunov_exponent, Side, DEFAULT_COCYCLE_STEPS};
use crate::geometry::TorusPoint;
use crate::homotopy::homotopy_sweep;
use crate::map_core::{
    check_cone_invariance, check_nondegeneracy, smoothness_check, sweep_hyperbolicity, validate_spec, AlmostAnosovMap,
    MapError, MapSpec,
};
use crate::seed::task_rng;
use crate::stats_lab::{clt_experiment, correlation_series, fit_exponential_decay, MeasureSampler, Observable};
use crate::thermo::{
    birkhoff_histogram, equilibrium_measure, leading_eigen, mass_near_singularity, pressure_curve, srb_density,
    ThermoError, TransitionSample, UlamGrid, UlamSettings,
};
use crate::tower_stats::{
    check_arithmetic_condition, check_contraction, check_distortion, check_intermediate_bound, fit_tail_rate,
    return_time_histogram, stable_pairs, Rectangle,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_NONCONVERGENCE: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    NonConvergence(String),
    Io(String),
    Config(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::NonConvergence(_) => EXIT_NONCONVERGENCE,
            CliError::Io(_) | CliError::Config(_) => EXIT_IO,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "validation failed: {m}"),
            CliError::NonConvergence(m) => write!(f, "did not converge: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Config(m) => write!(f, "config error: {m}"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<ThermoError> for CliError {
    fn from(e: ThermoError) -> Self {
        match e {
            ThermoError::NotConverged { .. } => CliError::NonConvergence(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "almost-anosov", version, about = "Experiments on an almost Anosov map of the 2-torus")]
struct Cli {
    /// JSON config: a bare map spec or {"map": {...}, "seed": .., "out": .., "params": {..}}.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Root seed for every random stream (default: config seed, then map seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the map spec; prints violations as a JSON array.
    Validate,
    /// Pointwise certificates: hyperbolicity sweep, nondegeneracy, cones, smoothness.
    Certify(CertifyArgs),
    /// Hyperbolicity and C0 distance of the approximating Anosov maps.
    Homotopy(HomotopyArgs),
    /// Write an orbit.
    Orbit(OrbitArgs),
    /// Unstable Lyapunov exponent along one orbit.
    Lyapunov(LyapunovArgs),
    /// Local stable/unstable manifolds and the geometric potential field.
    Manifold(ManifoldArgs),
    /// First-return statistics of the default rectangle.
    Returns(ReturnsArgs),
    /// Contraction, distortion and intermediate bounds along stable pairs.
    Distortion(DistortionArgs),
    /// Pressure curve from the Ulam operator.
    Pressure(PressureArgs),
    /// SRB density and the Birkhoff histogram.
    Srb(SrbArgs),
    /// Correlation series and exponential fit.
    Correlations(CorrelationArgs),
    /// Central limit experiment.
    Clt(CltArgs),
    /// Every acceptance criterion, with stage outputs.
    All(AllArgs),
}

#[derive(Debug, Args)]
struct CertifyArgs {
    /// Sweep grid per side [512].
    #[arg(long)]
    grid: Option<usize>,
    /// Radius around the origin excluded from the sweep [1e-3].
    #[arg(long)]
    exclusion: Option<f64>,
    /// Cone half-angle in degrees [15].
    #[arg(long)]
    cone_angle: Option<f64>,
    /// Random samples for nondegeneracy, cone and smoothness checks [10000].
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Debug, Args)]
struct HomotopyArgs {
    /// Comma-separated epsilon / r0 values [1,0.5,0.2].
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    fractions: Option<Vec<f64>>,
    /// Verification grid per side [64].
    #[arg(long)]
    grid: Option<usize>,
}

#[derive(Debug, Args)]
struct OrbitArgs {
    #[arg(long, allow_hyphen_values = true)]
    x: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    y: Option<f64>,
    /// Number of steps [1000].
    #[arg(long)]
    steps: Option<usize>,
}

#[derive(Debug, Args)]
struct LyapunovArgs {
    /// Start x (random when absent).
    #[arg(long, allow_hyphen_values = true)]
    x: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    y: Option<f64>,
    /// Orbit length [1000000].
    #[arg(long)]
    steps: Option<usize>,
    /// Discarded steps [1000].
    #[arg(long)]
    burn_in: Option<usize>,
}

#[derive(Debug, Args)]
struct ManifoldArgs {
    #[arg(long, allow_hyphen_values = true)]
    x: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    y: Option<f64>,
    /// Arc length on each side [0.05].
    #[arg(long)]
    arc: Option<f64>,
    /// Vertices per manifold [201].
    #[arg(long)]
    points: Option<usize>,
    /// Potential field grid per side [64].
    #[arg(long)]
    potential_grid: Option<usize>,
    /// Potential parameter t [1].
    #[arg(long, allow_hyphen_values = true)]
    t: Option<f64>,
}

#[derive(Debug, Args)]
struct ReturnsArgs {
    /// Samples drawn in the rectangle [100000].
    #[arg(long)]
    samples: Option<usize>,
    /// Timeout [200].
    #[arg(long)]
    n_max: Option<usize>,
}

#[derive(Debug, Args)]
struct DistortionArgs {
    /// Stable pairs [1000].
    #[arg(long)]
    pairs: Option<usize>,
    /// Return compositions, at most 8 [8].
    #[arg(long)]
    compositions: Option<usize>,
    /// Timeout per return [10000].
    #[arg(long)]
    n_max: Option<usize>,
}

#[derive(Debug, Args)]
struct PressureArgs {
    /// Comma-separated, sorted t values [-0.5,0,0.5,1,1.5].
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    t: Option<Vec<f64>>,
    /// Ulam grid per side [256].
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    samples_per_cell: Option<usize>,
}

#[derive(Debug, Args)]
struct SrbArgs {
    /// Ulam grid per side [128].
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    samples_per_cell: Option<usize>,
    /// Birkhoff orbit length [10000000].
    #[arg(long)]
    orbit: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
}

#[derive(Debug, Args)]
struct MeasureArgs {
    /// srb, dirac or ulam [srb].
    #[arg(long)]
    measure: Option<String>,
    /// t of the Ulam equilibrium measure [1].
    #[arg(long, allow_hyphen_values = true)]
    t: Option<f64>,
    /// Ulam grid for `--measure ulam` [64].
    #[arg(long)]
    grid: Option<usize>,
}

#[derive(Debug, Args)]
struct CorrelationArgs {
    /// Observable: cosx[:k], cosy[:k], bump:x,y,r, dist:p, const:v [cosx].
    #[arg(long)]
    h1: Option<String>,
    #[arg(long)]
    h2: Option<String>,
    #[arg(long)]
    n_max: Option<usize>,
    /// Orbit length or ensemble size [1000000].
    #[arg(long)]
    orbit_len: Option<usize>,
    #[command(flatten)]
    measure: MeasureArgs,
}

#[derive(Debug, Args)]
struct CltArgs {
    #[arg(long)]
    observable: Option<String>,
    /// Birkhoff sum length [1000].
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[command(flatten)]
    measure: MeasureArgs,
}

#[derive(Debug, Args)]
struct AllArgs {
    /// Reduced sample sizes.
    #[arg(long)]
    quick: bool,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Certify(_) => "certify",
            Command::Homotopy(_) => "homotopy",
            Command::Orbit(_) => "orbit",
            Command::Lyapunov(_) => "lyapunov",
            Command::Manifold(_) => "manifold",
            Command::Returns(_) => "returns",
            Command::Distortion(_) => "distortion",
            Command::Pressure(_) => "pressure",
            Command::Srb(_) => "srb",
            Command::Correlations(_) => "correlations",
            Command::Clt(_) => "clt",
            Command::All(_) => "all",
        }
    }
}

/// Parsed config document.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub map: MapSpec,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    /// Defaults for per-command flags, keyed by flag name with `_` for `-`.
    pub params: BTreeMap<String, Value>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WrappedConfig {
    map: MapSpec,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    out: Option<PathBuf>,
    #[serde(default)]
    params: BTreeMap<String, Value>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        let v: Value = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if v.get("map").is_some() {
            let w: WrappedConfig = serde_json::from_value(v).map_err(|e| CliError::Config(e.to_string()))?;
            Ok(Self { map: w.map, seed: w.seed, out: w.out, params: w.params })
        } else {
            let map: MapSpec = serde_json::from_value(v).map_err(|e| CliError::Config(e.to_string()))?;
            Ok(Self { map, seed: None, out: None, params: BTreeMap::new() })
        }
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

#[derive(Debug, Serialize)]
pub struct Assertion {
    pub id: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub argv: Vec<String>,
    pub config: RunConfig,
    pub root_seed: u64,
    pub stages: Vec<(String, f64)>,
    pub outputs: Vec<String>,
    pub assertions: Vec<Assertion>,
    pub exit_code: i32,
    pub error: Option<String>,
}

struct Ctx {
    config: RunConfig,
    seed: u64,
    out: PathBuf,
    manifest: RunManifest,
}

impl Ctx {
    fn param<T: DeserializeOwned>(&self, key: &str) -> CliResult<Option<T>> {
        match self.config.params.get(key) {
            None => Ok(None),
            Some(v) => serde_json::from_value(v.clone())
                .map(Some)
                .map_err(|e| CliError::Config(format!("params.{key}: {e}"))),
        }
    }

    /// Flag, else config param, else default.
    fn pick<T: DeserializeOwned>(&self, flag: Option<T>, key: &str, default: T) -> CliResult<T> {
        match flag {
            Some(v) => Ok(v),
            None => Ok(self.param(key)?.unwrap_or(default)),
        }
    }

    fn pick_opt<T: DeserializeOwned>(&self, flag: Option<T>, key: &str) -> CliResult<Option<T>> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.param(key),
        }
    }

    fn map(&mut self) -> CliResult<AlmostAnosovMap> {
        let spec = self.config.map.clone();
        self.stage("validate", || match AlmostAnosovMap::new(spec) {
            Ok(m) => Ok(m),
            Err(MapError::InvalidSpec(v)) => {
                Err(CliError::Validation(v.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; ")))
            }
            Err(e) => Err(CliError::Validation(e.to_string())),
        })
    }

    fn stage<R>(&mut self, name: &str, f: impl FnOnce() -> R) -> R {
        let t = Instant::now();
        let r = f();
        self.manifest.stages.push((name.to_string(), t.elapsed().as_secs_f64()));
        r
    }

    fn ensure_out(&self) -> CliResult<()> {
        fs::create_dir_all(&self.out).map_err(|e| CliError::Io(format!("{}: {e}", self.out.display())))
    }

    fn csv<R: Serialize>(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = R>) -> CliResult<()> {
        self.ensure_out()?;
        let path = self.out.join(name);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(header)?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        self.manifest.outputs.push(name.to_string());
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        self.ensure_out()?;
        let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
        fs::write(self.out.join(name), text + "\n")?;
        self.manifest.outputs.push(name.to_string());
        Ok(())
    }

    fn assert(&mut self, id: &str, pass: bool, detail: String) {
        self.manifest.assertions.push(Assertion { id: id.to_string(), pass, detail });
    }

    fn start_point(&self, x: Option<f64>, y: Option<f64>, label: &str) -> CliResult<TorusPoint> {
        let x = self.pick_opt(x, "x")?;
        let y = self.pick_opt(y, "y")?;
        let mut rng = task_rng(self.seed, label, 0);
        Ok(TorusPoint::new(x.unwrap_or_else(|| rng.gen()), y.unwrap_or_else(|| rng.gen())))
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn dispatch<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_IO } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    if let Some(n) = cli.threads {
        // fails only if a global pool already exists, which is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let config = match &cli.config {
        Some(p) => match RunConfig::load(p) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("{e}");
                return e.code();
            }
        },
        None => RunConfig { map: MapSpec::default(), seed: None, out: None, params: BTreeMap::new() },
    };
    let seed = cli.seed.or(config.seed).unwrap_or(config.map.seed);
    let out = cli.out.clone().or_else(|| config.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let command = cli.command.name().to_string();
    let mut ctx = Ctx {
        seed,
        out,
        manifest: RunManifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            argv: argv.iter().map(|a| a.to_string_lossy().into_owned()).collect(),
            config: config.clone(),
            root_seed: seed,
            stages: vec![],
            outputs: vec![],
            assertions: vec![],
            exit_code: 0,
            error: None,
        },
        config,
    };
    let result = run(&cli.command, &mut ctx);
    let code = match &result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("{e}");
            ctx.manifest.error = Some(e.to_string());
            e.code()
        }
    };
    ctx.manifest.exit_code = code;
    let wrote = ctx.ensure_out().and_then(|_| {
        let text = serde_json::to_string_pretty(&ctx.manifest).map_err(|e| CliError::Io(e.to_string()))?;
        fs::write(ctx.out.join("manifest.json"), text + "\n").map_err(CliError::from)
    });
    match wrote {
        Err(e) if code == EXIT_OK => {
            eprintln!("{e}");
            e.code()
        }
        _ => code,
    }
}

fn run(cmd: &Command, ctx: &mut Ctx) -> CliResult<()> {
    match cmd {
        Command::Validate => cmd_validate(ctx),
        Command::Certify(a) => cmd_certify(ctx, a),
        Command::Homotopy(a) => cmd_homotopy(ctx, a),
        Command::Orbit(a) => cmd_orbit(ctx, a),
        Command::Lyapunov(a) => cmd_lyapunov(ctx, a),
        Command::Manifold(a) => cmd_manifold(ctx, a),
        Command::Returns(a) => cmd_returns(ctx, a),
        Command::Distortion(a) => cmd_distortion(ctx, a),
        Command::Pressure(a) => cmd_pressure(ctx, a),
        Command::Srb(a) => cmd_srb(ctx, a),
        Command::Correlations(a) => cmd_correlations(ctx, a),
        Command::Clt(a) => cmd_clt(ctx, a),
        Command::All(a) => cmd_all(ctx, a),
    }
}

fn cmd_validate(ctx: &mut Ctx) -> CliResult<()> {
    let spec = ctx.config.map.clone();
    let warnings: Vec<String> = spec.glue_warnings().iter().map(|w| w.to_string()).collect();
    let errors: Vec<String> = match validate_spec(spec) {
        Ok(_) => vec![],
        Err(v) => v.iter().map(|e| e.to_string()).collect(),
    };
    println!("{}", serde_json::to_string(&errors).expect("strings serialize"));
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    ctx.json("validation.json", &json!({ "valid": errors.is_empty(), "errors": errors, "warnings": warnings }))?;
    ctx.assert("spec", errors.is_empty(), errors.join("; "));
    if errors.is_empty() {
        Ok(())
    } else {
        Err(CliError::Validation(errors.join("; ")))
    }
}

fn cmd_certify(ctx: &mut Ctx, a: &CertifyArgs) -> CliResult<()> {
    let map = ctx.map()?;
    let grid = ctx.pick(a.grid, "grid", 512)?;
    let exclusion = ctx.pick(a.exclusion, "exclusion", 1e-3)?;
    let angle = ctx.pick(a.cone_angle, "cone_angle", 15.0)?;
    let samples = ctx.pick(a.samples, "samples", 10_000)?;
    let sweep = ctx.stage("sweep", || sweep_hyperbolicity(&map, grid, exclusion));
    let nondeg = ctx.stage("nondegeneracy", || check_nondegeneracy(&map, samples, exclusion));
    let cones = ctx.stage("cones", || check_cone_invariance(&map, angle.to_radians(), samples));
    let smooth = ctx.stage("smoothness", || smoothness_check(&map, samples.min(2_000)));
    ctx.json(
        "certify.json",
        &json!({ "sweep": sweep, "nondegeneracy": nondeg, "cones": cones, "smoothness": smooth, "all_pass": sweep.all_pass() }),
    )?;
    println!(
        "sweep {}^2: {} checked, {} failures, min det {:.3e}; cones {} violations; smoothness {}",
        grid,
        sweep.checked,
        sweep.failures,
        sweep.min_det,
        cones.violations(),
        if smooth.passes() { "ok" } else { "fail" }
    );
    ctx.assert("sweep", sweep.all_pass(), format!("{} failures of {}", sweep.failures, sweep.checked));
    ctx.assert("cones", cones.pass(), format!("{} violations", cones.violations()));
    ctx.assert("smoothness", smooth.passes(), format!("{smooth:?}"));
    ctx.assert("nondegeneracy", !nondeg.degenerate, format!("kappa_u {:.3e}, kappa_s {:.3e}", nondeg.kappa_u, nondeg.kappa_s));
    if sweep.all_pass() {
        Ok(())
    } else {
        Err(CliError::Validation(format!("{} non-hyperbolic grid points", sweep.failures)))
    }
}

fn cmd_homotopy(ctx: &mut Ctx, a: &HomotopyArgs) -> CliResult<()> {
    let map = ctx.map()?;
    let fractions = ctx.pick(a.fractions.clone(), "fractions", vec![1.0, 0.5, 0.2])?;
    let grid = ctx.pick(a.grid, "grid", 64)?;
    let rows = ctx
        .stage("homotopy", || homotopy_sweep(&map, &fractions, grid, 32, 64))
        .map_err(|e| CliError::Config(e.to_string()))?;
    ctx.csv("homotopy.csv", &["epsilon", "c0_distance", "all_hyperbolic"], rows.iter().map(|r| (r.epsilon, r.c0_distance, r.all_hyperbolic)))?;
    for r in &rows {
        println!("eps {:.3e}: c0 {:.3e}, hyperbolic {}", r.epsilon, r.c0_distance, r.all_hyperbolic);
        ctx.assert(&format!("hyperbolic eps={}", r.epsilon), r.all_hyperbolic, format!("{} points", r.checked));
    }
    Ok(())
}

fn cmd_orbit(ctx: &mut Ctx, a: &OrbitArgs) -> CliResult<()> {
    let map = ctx.map()?;
    let p0 = ctx.start_point(a.x, a.y, "orbit")?;
    let steps = ctx.pick(a.steps, "steps", 1_000)?;
    let pts = ctx.stage("orbit", || {
        let mut p = p0;
        let mut v = Vec::with_capacity(steps + 1);
        for n in 0..=steps {
            v.push((n, p.x(), p.y()));
            p = map.apply(&p);
        }
        v
    });
    ctx.csv("orbit.csv", &["n", "x", "y"], pts)
}

fn cmd_lyapunov(ctx: &mut Ctx, a: &LyapunovArgs) -> CliResult<()> {
    let map = ctx.map()?;
    let p0 = ctx.start_point(a.x, a.y, "lyapunov")?;
    let steps = ctx.pick(a.steps, "steps", 1_000_000)?;
    let burn_in = ctx.pick(a.burn_in, "burn_in", 1_000)?;
    let l = ctx
        .stage("lyapunov", || lyapunov_exponent(&map, &p0, steps, burn_in))
        .map_err(|e| CliError::NonConvergence(e.to_string()))?;
    println!("lambda_u = {l:.6}");
    ctx.json("lyapunov.json", &json!({ "x": p0.x(), "y": p0.y(), "steps": steps, "burn_in": burn_in, "lyapunov": l }))
}

fn cmd_manifold(ctx: &mut Ctx, a: &ManifoldArgs) -> CliResult<()> {
    let map = ctx.map()?;
    let p = TorusPoint::new(ctx.pick(a.x, "x", 0.5)?, ctx.pick(a.y, "y", 0.5)?);
    let arc = ctx.pick(a.arc, "arc", 0.05)?;
    let n = ctx.pick(a.points, "points", 201)?;
    let grid = ctx.pick(a.potential_grid, "potential_grid", 64)?;
    let t = ctx.pick(a.t, "t", 1.0)?;
    for (side, name) in [(Side::Stable, "manifold_stable.csv"), (Side::Unstable, "manifold_unstable.csv")] {
        let curve = ctx
            .stage(name, || local_manifold(&map, &p, side, arc, n))
            .map_err(|e| CliError::NonConvergence(e.to_string()))?;
        let pts = curve.points();
        let rows: Vec<(f64, f64, f64)> = pts.iter().zip(curve.arc_lengths()).map(|(q, s)| (q.x(), q.y(), *s)).collect();
        ctx.csv(name, &["x", "y", "value"], rows)?;
    }
    let field = ctx.stage("potential", || {
        let h = 1.0 / grid as f64;
        (0..grid * grid)
            .map(|k| {
                let q = TorusPoint::new((k % grid) as f64 * h, (k / grid) as f64 * h);
                (q.x(), q.y(), geometric_potential(&map, &q, t, DEFAULT_COCYCLE_STEPS).value)
            })
            .collect::<Vec<_>>()
    });
    ctx.csv("potential.csv", &["x", "y", "value"], field)
}

fn cmd_returns(ctx: &mut Ctx, a: &ReturnsArgs) -> CliResult<()> {
    let map = ctx.map()?;
    let samples = ctx.pick(a.samples, "samples", 100_000)?;
    let n_max = ctx.pick(a.n_max, "n_max", 200)?;
    let rect = Rectangle::default_for(&map);
    let seed = ctx.seed;
    let hist = ctx.stage("returns", || return_time_histogram(&map, &rect, samples, n_max, seed));
    ctx.csv("returns.csv", &["n", "S_n", "cumulative_fraction"], hist.rows())?;
    let fit = fit_tail_rate(&hist).ok();
    let gcd = check_arithmetic_condition(&hist);
    let summary = json!({
        "h_fit": fit.map(|f| f.h_fit),
        "r_squared": fit.map(|f| f.r_squared),
        "n_range": fit.map(|f| f.n_range),
        "gcd": gcd,
        "timeout_fraction": hist.timeout_fraction(),
        "mean_return_time": hist.mean_return_time(),
        "min_return_time": hist.min_return_time(),
        "samples": hist.samples,
        "n_max": n_max,
    });
    println!("{}", serde_json::to_string(&summary).expect("json"));
    ctx.json("returns.json", &summary)?;
    if let Some(f) = fit {
        ctx.assert("tail", f.r_squared >= 0.8 && f.h_fit < crate::acceptance::LOG_GOLDEN, format!("h {:.4}, R^2 {:.3}", f.h_fit, f.r_squared));
    }
    ctx.assert("gcd", gcd == 1, format!("gcd {gcd}"));
    Ok(())
}

fn cmd_distortion(ctx: &mut Ctx, a: &DistortionArgs) -> CliResult<()> {
    let map = ctx.map()?;
    let n_pairs = ctx.pick(a.pairs, "pairs", 1_000)?;
    let comps = ctx.pick(a.compositions, "compositions", 8)?;
    let n_max = ctx.pick(a.n_max, "n_max", crate::tower_stats::DEFAULT_N_MAX)?;
    let rect = Rectangle::default_for(&map);
    let seed = ctx.seed;
    let pairs = stable_pairs(&map, &rect, n_pairs, seed);
    let c = ctx.stage("contraction", || check_contraction(&map, &rect, &pairs, n_max));
    let d = ctx.stage("distortion", || check_distortion(&map, &rect, &pairs, comps, n_max));
    let k = ctx.stage("intermediate", || check_intermediate_bound(&map, &rect, &pairs, n_max, seed));
    let rows: Vec<(usize, f64, usize)> = d.suprema.iter().zip(&d.pairs_at).enumerate().map(|(n, (s, p))| (n, *s, *p)).collect();
    ctx.csv("distortion.csv", &["n", "supremum", "pairs"], rows)?;
    let summary = json!({
        "worst_a": c.worst_a,
        "worst_K": k.worst(),
        "contraction": c,
        "distortion": { "c": d.c, "kappa": d.kappa, "r_squared": d.r_squared, "theta_used": d.theta_used, "skipped": d.skipped },
        "intermediate": k,
    });
    println!("worst a {:.4}, kappa {:.3e}, worst K {:.3}", c.worst_a, d.kappa, k.worst());
    ctx.json("distortion.json", &summary)?;
    ctx.assert("contraction", c.pass(), format!("a {:.4}", c.worst_a));
    ctx.assert("distortion", d.pass(), format!("kappa {:.3e}", d.kappa));
    Ok(())
}

fn cmd_pressure(ctx: &mut Ctx, a: &PressureArgs) -> CliResult<()> {
    let map = ctx.map()?;
    let ts = ctx.pick(a.t.clone(), "t", vec![-0.5, 0.0, 0.5, 1.0, 1.5])?;
    let grid = ctx.pick(a.grid, "grid", 256)?;
    let spc = ctx.pick(a.samples_per_cell, "samples_per_cell", 64)?;
    let settings = UlamSettings::new(grid, spc, ctx.seed);
    let curve = ctx.stage("pressure", || pressure_curve(&map, &ts, settings))?;
    ctx.csv(
        "pressure.csv",
        &["t", "pressure", "lambda", "residual", "iterations", "grid_n"],
        curve.points.iter().map(|p| (p.t, p.pressure, p.lambda, p.residual, p.iterations, p.grid_n)),
    )?;
    let table: Vec<Value> = curve
        .points
        .iter()
        .map(|p| {
            json!({
                "t": p.t, "pressure": p.pressure, "converged": p.converged, "origin_mass": p.origin_mass,
                "branch": p.branch, "punctured_pressure": p.punctured_pressure,
                "punctured_origin_mass": p.punctured_origin_mass, "punctured_converged": p.punctured_converged,
            })
        })
        .collect();
    ctx.json("pressure.json", &json!({ "grid_n": grid, "samples_per_cell": spc, "dirac_mass": table }))?;
    for p in &curve.points {
        println!("t {:>5}: P = {:.5}, origin mass {:.4} ({:?}), residual {:.2e}", p.t, p.pressure, p.origin_mass, p.branch, p.residual);
    }
    match curve.points.iter().find(|p| !p.converged) {
        None => Ok(()),
        Some(p) => Err(CliError::NonConvergence(format!("t = {}: residual {:.3e} after {} iterations", p.t, p.residual, p.iterations))),
    }
}

fn cmd_srb(ctx: &mut Ctx, a: &SrbArgs) -> CliResult<()> {
    let map = ctx.map()?;
    let grid = ctx.pick(a.grid, "grid", 128)?;
    let spc = ctx.pick(a.samples_per_cell, "samples_per_cell", 64)?;
    let orbit = ctx.pick(a.orbit, "orbit", 10_000_000)?;
    let burn_in = ctx.pick(a.burn_in, "burn_in", 10_000)?;
    let seed = ctx.seed;
    let mu = ctx.stage("srb", || srb_density(&map, UlamSettings::new(grid, spc, seed)))?;
    let birk = ctx.stage("birkhoff", || birkhoff_histogram(&map, UlamGrid::new(grid), orbit, burn_in, seed));
    ctx.csv("srb_density.csv", &["i", "j", "weight"], mu.rows())?;
    ctx.csv("birkhoff.csv", &["i", "j", "weight"], birk.rows())?;
    let tv = mu.total_variation(&birk);
    let r1 = map.r1();
    let summary = json!({
        "grid_n": grid,
        "total_variation": tv,
        "mass_r1_ulam": mass_near_singularity(&mu, r1),
        "mass_r1_birkhoff": mass_near_singularity(&birk, r1),
        "mass_r0_ulam": mass_near_singularity(&mu, map.r0()),
        "mass_r0_birkhoff": mass_near_singularity(&birk, map.r0()),
        "orbit": orbit,
    });
    println!("{}", serde_json::to_string(&summary).expect("json"));
    ctx.json("srb.json", &summary)?;
    ctx.assert("tv", tv <= 0.1, format!("TV {tv:.4}"));
    let m = mass_near_singularity(&mu, r1);
    ctx.assert("mass_r1", m > 0.0 && m < 0.05, format!("Ulam mass in B_r1 {m:.4}"));
    Ok(())
}

fn sampler(ctx: &Ctx, map: &AlmostAnosovMap, m: &MeasureArgs) -> CliResult<MeasureSampler> {
    let which = ctx.pick(m.measure.clone(), "measure", "srb".to_string())?;
    match which.as_str() {
        "srb" => Ok(MeasureSampler::srb()),
        "dirac" => Ok(MeasureSampler::Dirac),
        "ulam" => {
            let t = ctx.pick(m.t, "t", 1.0)?;
            let grid = UlamGrid::new(ctx.pick(m.grid, "grid", 64)?);
            let sample = TransitionSample::build(map, grid, 64, ctx.seed)?;
            let eig = leading_eigen(&sample.operator(t), crate::thermo::DEFAULT_EIGEN_TOL, crate::thermo::DEFAULT_EIGEN_MAX_ITER)?;
            Ok(MeasureSampler::Ulam(equilibrium_measure(grid, &eig)))
        }
        other => Err(CliError::Config(format!("unknown measure '{other}' (srb, dirac, ulam)"))),
    }
}

fn observable(ctx: &Ctx, flag: &Option<String>, key: &str) -> CliResult<Observable> {
    let s = ctx.pick(flag.clone(), key, "cosx".to_string())?;
    Observable::parse(&s).ok_or_else(|| CliError::Config(format!("bad observable '{s}'")))
}

fn cmd_correlations(ctx: &mut Ctx, a: &CorrelationArgs) -> CliResult<()> {
    let map = ctx.map()?;
    let h1 = observable(ctx, &a.h1, "h1")?;
    let h2 = observable(ctx, &a.h2, "h2")?;
    let n_max = ctx.pick(a.n_max, "n_max", 30)?;
    let len = ctx.pick(a.orbit_len, "orbit_len", 1_000_000)?;
    let mu = sampler(ctx, &map, &a.measure)?;
    let seed = ctx.seed;
    let series = ctx.stage("correlations", || correlation_series(&map, &mu, &h1, &h2, n_max, len, seed));
    ctx.csv("correlations.csv", &["n", "C_n"], series.values.iter().copied())?;
    let fit = fit_exponential_decay(&series, (1, n_max.max(1)));
    println!("{}", serde_json::to_string(&fit).expect("json"));
    ctx.json(
        "correlations.json",
        &json!({ "fit": fit, "noise_floor": series.noise_floor, "orbit_len": len, "burn_in": series.burn_in, "seed": seed }),
    )?;
    ctx.assert("exponential_decay", fit.shows_exponential_decay(), format!("{fit:?}"));
    Ok(())
}

fn cmd_clt(ctx: &mut Ctx, a: &CltArgs) -> CliResult<()> {
    let map = ctx.map()?;
    let h = observable(ctx, &a.observable, "observable")?;
    let n = ctx.pick(a.n, "n", 1_000)?;
    let trials = ctx.pick(a.trials, "trials", 10_000)?;
    let mu = sampler(ctx, &map, &a.measure)?;
    let seed = ctx.seed;
    let r = ctx.stage("clt", || clt_experiment(&map, &mu, &h, n, trials, seed));
    ctx.csv("clt_histogram.csv", &["bin_center", "density"], r.histogram.iter().copied())?;
    let summary = json!({
        "sigma": r.sigma, "ks_distance": r.ks_distance, "n": r.n, "trials": r.trials,
        "mean": r.mean, "coboundary_candidate": r.coboundary_candidate,
    });
    println!("{}", serde_json::to_string(&summary).expect("json"));
    ctx.json("clt.json", &summary)?;
    ctx.assert("clt", r.ks_distance < 0.05 && r.sigma > 0.0, format!("sigma {:.4}, KS {:.4}", r.sigma, r.ks_distance));
    Ok(())
}

fn cmd_all(ctx: &mut Ctx, a: &AllArgs) -> CliResult<()> {
    let map = ctx.map()?;
    let preset = if a.quick { Preset::Quick } else { Preset::Full };
    let settings = AcceptanceSettings::for_preset(preset, ctx.seed);
    let run = run_acceptance(&map, &settings, |r| println!("{}", r.line()));
    for (name, secs) in &run.stage_seconds {
        ctx.manifest.stages.push((name.to_string(), *secs));
    }
    let art = &run.artifacts;
    ctx.csv(
        "homotopy.csv",
        &["epsilon", "c0_distance", "all_hyperbolic"],
        art.homotopy.iter().map(|r| (r.epsilon, r.c0_distance, r.all_hyperbolic)),
    )?;
    if let Some(h) = &art.returns {
        ctx.csv("returns.csv", &["n", "S_n", "cumulative_fraction"], h.rows())?;
    }
    if let Some(d) = &art.distortion {
        let rows: Vec<(usize, f64, usize)> = d.suprema.iter().zip(&d.pairs_at).enumerate().map(|(n, (s, p))| (n, *s, *p)).collect();
        ctx.csv("distortion.csv", &["n", "supremum", "pairs"], rows)?;
    }
    if let Some(c) = &art.pressure {
        ctx.csv(
            "pressure.csv",
            &["t", "pressure", "lambda", "residual", "iterations", "grid_n"],
            c.points.iter().map(|p| (p.t, p.pressure, p.lambda, p.residual, p.iterations, p.grid_n)),
        )?;
    }
    if let Some(mu) = &art.srb {
        ctx.csv("srb_density.csv", &["i", "j", "weight"], mu.rows())?;
    }
    if let Some(s) = &art.correlations {
        ctx.csv("correlations.csv", &["n", "C_n"], s.values.iter().copied())?;
    }
    if let Some(c) = &art.clt {
        ctx.csv("clt_histogram.csv", &["bin_center", "density"], c.histogram.iter().copied())?;
    }
    ctx.csv(
        "acceptance.csv",
        &["id", "status", "title", "detail"],
        run.results.iter().map(|r| (r.id, if r.pass { "PASS" } else { "FAIL" }, r.title, r.detail.as_str())),
    )?;
    ctx.json("acceptance.json", &json!({ "preset": preset, "settings": settings, "results": run.results }))?;
    for r in &run.results {
        ctx.assert(r.id, r.pass, r.detail.clone());
    }
    println!("{} of {} criteria pass", run.passed(), run.results.len());
    Ok(())
}
