//! Command-line driver for the `dflow` binary.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::curvature::{curvature, fd_jacobian, jacobian, relative_entry_error};
use crate::dpm::{emit_dpm, read_dpm, DpmDocument};
use crate::error::{Error, Result};
use crate::flow::{run, uniform_target, validate_target, FlowConfig, FlowKind, Termination};
use crate::metric::DecoratedMetric;
use crate::presets::Preset;
use crate::surgery::{default_max_flips, delaunay_violations, make_delaunay};
use crate::testkit::{random_zero_sum, RandomMetricSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_BUDGET: i32 = 2;

/// Relative error above which `jacobian-check` fails.
pub const JACOBIAN_TOLERANCE: f64 = 1e-5;

#[derive(Parser, Debug)]
#[command(name = "dflow", version, about = "Curvature flows for inversive-distance circle packings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check a dpm file and report triangle margins and Delaunay violations.
    Validate { file: PathBuf },
    /// Print per-vertex curvature and the Gauss-Bonnet residual.
    Curvature { file: PathBuf },
    /// Integrate a curvature flow towards a target curvature.
    Flow(FlowArgs),
    /// Write a preset mesh with a uniform decoration.
    Generate(GenerateArgs),
    /// Compare the analytic Jacobian with central finite differences.
    JacobianCheck(JacobianArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FlowName {
    Ricci,
    Calabi,
    Fractional,
    #[value(name = "p-calabi")]
    PCalabi,
}

#[derive(clap::Args, Debug)]
pub struct FlowArgs {
    pub file: PathBuf,
    #[arg(long = "flow", value_enum, default_value = "calabi")]
    pub flow: FlowName,
    /// Fractional order for `--flow fractional`.
    #[arg(long)]
    pub s: Option<f64>,
    /// Exponent for `--flow p-calabi`.
    #[arg(long)]
    pub p: Option<f64>,
    /// `uniform`, or a JSON file holding an array or a `target_curvature`
    /// field. Defaults to the document's target, else uniform.
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long, default_value_t = crate::flow::DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = crate::flow::DEFAULT_MAX_STEPS)]
    pub max_steps: usize,
    #[arg(long)]
    pub no_surgery: bool,
    /// Per-step CSV trace.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Final metric, with `u` folded into the edge lengths.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
pub struct GenerateArgs {
    /// tetrahedron, octahedron, icosahedron, torus_grid or one_vertex_torus.
    pub preset: String,
    /// Grid size for torus_grid.
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 2.0)]
    pub inversive: f64,
    /// Half-width of a random zero-sum conformal factor.
    #[arg(long, default_value_t = 0.0)]
    pub perturb: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write the uniform target curvature.
    #[arg(long)]
    pub with_target: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
pub struct JacobianArgs {
    /// Metric to check; a random metric is drawn when absent.
    pub file: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Preset for random metrics, e.g. `icosahedron` or `torus_grid(3)`.
    #[arg(long, default_value = "icosahedron")]
    pub preset: String,
    #[arg(long, default_value_t = 1e-6)]
    pub h: f64,
}

/// Parses `argv` (including the program name) and runs the command.
pub fn cli_main<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_ERROR,
            };
        }
    };
    match execute(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_ERROR
        }
    }
}

fn io(e: std::io::Error) -> Error {
    Error::Io(e.to_string())
}

fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Validate { file } => validate(&file, out),
        Command::Curvature { file } => print_curvature(&file, out),
        Command::Flow(args) => flow(args, out, err),
        Command::Generate(args) => generate(args, out),
        Command::JacobianCheck(args) => jacobian_check(args, out),
    }
}

fn validate(file: &Path, out: &mut dyn Write) -> Result<i32> {
    let dpm = read_dpm(file)?;
    let m = &dpm.metric;
    let mesh = m.mesh();
    let report = m.validate_triangles()?;
    writeln!(
        out,
        "vertices {} edges {} triangles {} euler_characteristic {}",
        mesh.num_vertices(),
        mesh.num_edges(),
        mesh.num_triangles(),
        mesh.euler_characteristic()
    )
    .map_err(io)?;
    writeln!(out, "min_relative_margin {:e}", report.min_relative()).map_err(io)?;
    let violations = delaunay_violations(m)?;
    writeln!(out, "delaunay_violations {}", violations.len()).map_err(io)?;
    for v in &violations {
        writeln!(out, "  edge {} weight {:e}", v.edge, v.weight).map_err(io)?;
    }
    writeln!(out, "valid").map_err(io)?;
    Ok(EXIT_OK)
}

fn print_curvature(file: &Path, out: &mut dyn Write) -> Result<i32> {
    let dpm = read_dpm(file)?;
    let k = curvature(&dpm.metric)?;
    for (i, ki) in k.0.iter().enumerate() {
        writeln!(out, "{i} {ki:e}").map_err(io)?;
    }
    let chi = dpm.metric.mesh().euler_characteristic();
    writeln!(out, "gauss_bonnet_residual {:e}", k.gauss_bonnet_residual(chi)).map_err(io)?;
    Ok(EXIT_OK)
}

/// Reads a target from `uniform` or a JSON file.
pub fn load_target(spec: &str, metric: &DecoratedMetric) -> Result<Vec<f64>> {
    if spec == "uniform" {
        return uniform_target(metric);
    }
    let text = std::fs::read_to_string(spec).map_err(|e| Error::Io(format!("{spec}: {e}")))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::SyntaxError {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let array = match &value {
        serde_json::Value::Array(_) => value,
        serde_json::Value::Object(o) => o
            .get("target_curvature")
            .cloned()
            .ok_or_else(|| Error::SchemaError("target file has no target_curvature".into()))?,
        _ => return Err(Error::SchemaError("target must be an array or an object".into())),
    };
    let target: Vec<f64> =
        serde_json::from_value(array).map_err(|e| Error::SchemaError(format!("target_curvature: {e}")))?;
    validate_target(metric, &target)?;
    Ok(target)
}

fn flow_kind(args: &FlowArgs) -> Result<FlowKind> {
    Ok(match args.flow {
        FlowName::Ricci => FlowKind::Ricci,
        FlowName::Calabi => FlowKind::Calabi,
        FlowName::Fractional => FlowKind::Fractional(
            args.s
                .ok_or_else(|| Error::InvalidConfig("--flow fractional needs --s".into()))?,
        ),
        FlowName::PCalabi => FlowKind::PCalabi(
            args.p
                .ok_or_else(|| Error::InvalidConfig("--flow p-calabi needs --p".into()))?,
        ),
    })
}

fn flow(args: FlowArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let dpm = read_dpm(&args.file)?;
    let metric = dpm.metric;
    let target = match (&args.target, dpm.target) {
        (Some(spec), _) => load_target(spec, &metric)?,
        (None, Some(t)) => t,
        (None, None) => uniform_target(&metric)?,
    };
    let kind = flow_kind(&args)?;
    let mut config = FlowConfig::new(kind, target);
    if let Some(h) = args.step {
        config.step = h;
    }
    config.tol = args.tol;
    config.max_steps = args.max_steps;
    config.surgery = !args.no_surgery;

    let trace = run(&metric, &config)?;
    if let Some(path) = &args.trace {
        let file = std::fs::File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        trace.write_csv(std::io::BufWriter::new(file)).map_err(io)?;
    }
    if let Some(path) = &args.out {
        let folded = trace.final_metric.folded()?;
        std::fs::write(path, emit_dpm(&folded, Some(&config.target)))
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    }
    let status = match trace.termination {
        Termination::Converged => "converged",
        Termination::Budget => "budget",
    };
    writeln!(
        out,
        "{status} flow {} steps {} t {:e} max_curv_err {:e} flips {}",
        kind,
        trace.steps(),
        trace.records.last().map_or(0.0, |r| r.t),
        trace.final_error(),
        trace.flips()
    )
    .map_err(io)?;
    Ok(match trace.termination {
        Termination::Converged => EXIT_OK,
        Termination::Budget => {
            let _ = writeln!(err, "step budget of {} exhausted", config.max_steps);
            EXIT_BUDGET
        }
    })
}

/// Builds the metric described by the generate options.
pub fn generate_metric(
    preset: Preset,
    radius: f64,
    inversive: f64,
    perturb: f64,
    seed: u64,
) -> Result<DecoratedMetric> {
    let metric = preset.uniform(radius, inversive)?;
    if perturb == 0.0 {
        return Ok(metric);
    }
    if !(perturb > 0.0) || !perturb.is_finite() {
        return Err(Error::InvalidParams(format!("perturbation must be nonnegative, got {perturb}")));
    }
    let spec = RandomMetricSpec::new(preset, seed);
    let mut rng = spec.rng();
    for _ in 0..crate::testkit::MAX_RESAMPLES {
        let u = random_zero_sum(&mut rng, metric.num_vertices(), perturb);
        if let Ok(m) = metric.clone().with_u(u) {
            return Ok(m);
        }
    }
    Err(Error::InvalidParams(format!(
        "no admissible perturbation of size {perturb} found"
    )))
}

fn generate(args: GenerateArgs, out: &mut dyn Write) -> Result<i32> {
    let preset = Preset::from_name(&args.preset, args.n)?;
    let metric = generate_metric(preset, args.radius, args.inversive, args.perturb, args.seed)?;
    let target = if args.with_target {
        Some(uniform_target(&metric)?)
    } else {
        None
    };
    let text = DpmDocument::from_metric(&metric, target.as_deref()).to_json();
    match &args.out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?,
        None => out.write_all(text.as_bytes()).map_err(io)?,
    }
    Ok(EXIT_OK)
}

fn jacobian_check(args: JacobianArgs, out: &mut dyn Write) -> Result<i32> {
    let metric = match &args.file {
        Some(path) => {
            let mut m = read_dpm(path)?.metric;
            let budget = default_max_flips(&m);
            make_delaunay(&mut m, budget)?;
            m
        }
        None => {
            let preset: Preset = args.preset.parse()?;
            let spec = RandomMetricSpec::new(preset, args.seed);
            spec.sample(&mut spec.rng())?
        }
    };
    let analytic = jacobian(&metric)?;
    let fd = fd_jacobian(&metric, args.h)?;
    let error = relative_entry_error(&analytic.matrix, &fd);
    writeln!(out, "max_relative_error {error:e}").map_err(io)?;
    Ok(if error < JACOBIAN_TOLERANCE { EXIT_OK } else { EXIT_ERROR })
}
