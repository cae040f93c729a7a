//! Command-line frontend: `align`, `register`, `score` and `synth`.
//!
//! Exit codes: 0 on success (a registration that does not converge still
//! succeeds), 1 for I/O, parse and configuration errors, 2 for ill-posed
//! input.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;

use crate::align::{solve, AlignOptions, Mode, Transform};
use crate::error::{Error, Result};
use crate::io::{format_point_set, format_weights, read_point_set, read_weights, write_atomic};
use crate::registration::{register, similarity_score, RegistrationConfig, RegistrationResult, DEFAULT_THRESHOLD_STEPS};
use crate::report::{file_digest, mode_name, ConfigEcho, RunReport, TruthFile};
use crate::stats::{PairTable, PointSet};
use crate::symmat::DEFAULT_RANK_TOL;
use crate::synth::{generate, proximity_weights, random_rotation, rng_for, SynthSpec, DEFAULT_KERNEL_SIGMA};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_ILL_POSED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "pointreg", version, about = "Weighted alignment and iterative registration of unlabeled point sets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form alignment for a single weight table.
    Align(AlignArgs),
    /// Iterative prune-and-realign registration.
    Register(RegisterArgs),
    /// Register, then print the similarity score.
    Score(RegisterArgs),
    /// Write a synthetic instance with ground truth.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WeightInit {
    Proximity,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Source point set (the set that is transformed).
    pub source: PathBuf,
    /// Template point set.
    pub target: PathBuf,
    #[arg(long, value_enum, default_value = "rigid")]
    pub mode: Mode,
    /// Weight file: dense N_U x N_V matrix or sparse `i k m` lines.
    #[arg(long, conflicts_with = "weights_init")]
    pub weights: Option<PathBuf>,
    /// Compute initial weights instead of reading them (default when no
    /// weight file is given).
    #[arg(long, value_enum)]
    pub weights_init: Option<WeightInit>,
    /// Kernel width for proximity weights, in standardized units.
    #[arg(long, default_value_t = DEFAULT_KERNEL_SIGMA)]
    pub sigma: f64,
    /// Return the raw polar factor even when it is a reflection.
    #[arg(long)]
    pub allow_reflection: bool,
    #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
    pub rank_tol: f64,
    /// Write the JSON report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AlignArgs {
    #[command(flatten)]
    pub input: InputArgs,
}

#[derive(Debug, Args)]
pub struct RegisterArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Initial residual threshold [default: half the template diameter].
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Threshold decrement [default: threshold / 40].
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Iteration cap [default: 10 * ceil(threshold / epsilon)].
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Write plot-ready CSV columns (mapped source and template points).
    #[arg(long)]
    pub columns: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RotationKind {
    Random,
    Identity,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value_t = 10)]
    pub n_points: usize,
    /// Per-axis Gaussian noise on matched template points.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Unmatched points appended to the template.
    #[arg(long, default_value_t = 0)]
    pub outliers: usize,
    /// Wrong candidate pairs added to the weight table.
    #[arg(long, default_value_t = 0)]
    pub spurious: usize,
    #[arg(long, value_enum, default_value = "random")]
    pub rotation: RotationKind,
    /// Uniform scale of the ground-truth transform.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory receiving u.txt, v.txt, weights.txt and truth.json.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    match execute(&cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) if e.is_ill_posed() => {
            eprintln!("error: ill-posed input: {e}");
            EXIT_ILL_POSED
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

pub fn execute(command: &Command) -> Result<()> {
    match command {
        Command::Align(args) => cmd_align(args),
        Command::Register(args) => cmd_register(args, "register"),
        Command::Score(args) => cmd_register(args, "score"),
        Command::Synth(args) => cmd_synth(args),
    }
}

struct Inputs {
    u: PointSet<f64>,
    v: PointSet<f64>,
    table: PairTable<f64>,
    echo: ConfigEcho,
    digests: BTreeMap<String, String>,
}

fn load_inputs(args: &InputArgs) -> Result<Inputs> {
    let u = read_point_set(&args.source)?;
    let v = read_point_set(&args.target)?;
    if u.dim() != v.dim() {
        return Err(Error::DimensionMismatch { expected: u.dim(), found: v.dim() });
    }
    if !(args.rank_tol >= 0.0 && args.rank_tol < 1.0) {
        return Err(Error::InvalidConfig(format!("rank tolerance must lie in [0, 1), got {}", args.rank_tol)));
    }
    let mut digests = BTreeMap::new();
    digests.insert("source".to_string(), file_digest(&args.source)?);
    digests.insert("target".to_string(), file_digest(&args.target)?);

    let (table, weights_init) = match &args.weights {
        Some(path) => {
            digests.insert("weights".to_string(), file_digest(path)?);
            (read_weights(path, u.len(), v.len())?, None)
        }
        None => (proximity_weights(&u, &v, args.sigma)?, Some("proximity".to_string())),
    };
    let echo = ConfigEcho {
        source: args.source.display().to_string(),
        target: args.target.display().to_string(),
        mode: mode_name(args.mode).into(),
        allow_reflection: args.allow_reflection,
        rank_tol: args.rank_tol,
        weights: args.weights.as_ref().map(|p| p.display().to_string()),
        sigma: weights_init.as_ref().map(|_| args.sigma),
        weights_init,
        threshold: None,
        epsilon: None,
        max_iterations: None,
    };
    Ok(Inputs { u, v, table, echo, digests })
}

fn emit_report(report: &RunReport, out: Option<&Path>, summary: &str) -> Result<()> {
    let json = serde_json::to_string_pretty(report)? + "\n";
    match out {
        Some(path) => {
            write_atomic(path, &json)?;
            print!("{summary}");
        }
        None => {
            std::io::stdout().write_all(json.as_bytes())?;
        }
    }
    Ok(())
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn describe_transform(t: &Transform<f64>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "rotation:");
    for row in t.rotation.rows() {
        let cells: Vec<String> = row.iter().map(|x| format!("{x:>12.8}")).collect();
        let _ = writeln!(s, "  [{}]", cells.join(" "));
    }
    let cells: Vec<String> = t.translation.iter().map(|x| format!("{x:.8}")).collect();
    let _ = writeln!(s, "translation: [{}]", cells.join(", "));
    let _ = writeln!(s, "scale: {:.10}", t.scale);
    s
}

pub fn cmd_align(args: &AlignArgs) -> Result<()> {
    let t0 = Instant::now();
    let inputs = load_inputs(&args.input)?;
    let loaded = elapsed_ms(t0);
    let options = AlignOptions { allow_reflection: args.input.allow_reflection, rank_tol: args.input.rank_tol };
    let t1 = Instant::now();
    let solution = solve(&inputs.u, &inputs.v, &inputs.table, args.input.mode, &options)?;
    let solved = elapsed_ms(t1);

    let mut report = RunReport::for_alignment(inputs.echo, &solution, &inputs.table);
    report.input_digests = inputs.digests;
    report.timings_ms.insert("load".into(), loaded);
    report.timings_ms.insert("solve".into(), solved);

    let mut summary = describe_transform(&solution.transform);
    let _ = writeln!(summary, "e_min: {:.12e}", solution.e_min);
    if solution.reflection_corrected {
        let _ = writeln!(summary, "note: det(Z) < 0, rotation corrected to det = +1");
    }
    emit_report(&report, args.input.out.as_deref(), &summary)
}

fn registration_config(args: &RegisterArgs, v: &PointSet<f64>) -> Result<RegistrationConfig<f64>> {
    let mode = args.input.mode;
    let mut config = match (args.threshold, args.epsilon) {
        (None, None) => RegistrationConfig::data_scaled(v, mode)?,
        (Some(t), None) => RegistrationConfig::new(t, t / DEFAULT_THRESHOLD_STEPS, mode)?,
        (None, Some(e)) => {
            let base = RegistrationConfig::data_scaled(v, mode)?;
            RegistrationConfig::new(base.threshold, e, mode)?
        }
        (Some(t), Some(e)) => RegistrationConfig::new(t, e, mode)?,
    };
    config.allow_reflection = args.input.allow_reflection;
    config.rank_tol = args.input.rank_tol;
    if let Some(cap) = args.max_iters {
        config.max_iterations = cap;
    }
    config.validate()?;
    Ok(config)
}

fn write_columns(path: &Path, u: &PointSet<f64>, v: &PointSet<f64>, result: &RegistrationResult<f64>) -> Result<()> {
    let dim = u.dim();
    let mut out = String::from("set,index");
    for j in 0..dim {
        let _ = write!(out, ",x{j}");
    }
    out.push('\n');
    let mut row = |label: &str, idx: usize, p: &[f64]| {
        let _ = write!(out, "{label},{idx}");
        for x in p {
            let _ = write!(out, ",{x:?}");
        }
        out.push('\n');
    };
    for (i, p) in u.points().enumerate() {
        row("source_mapped", i, &result.transform.apply(p));
    }
    for (k, p) in v.points().enumerate() {
        row("target", k, p);
    }
    write_atomic(path, &out)
}

pub fn cmd_register(args: &RegisterArgs, command: &str) -> Result<()> {
    let t0 = Instant::now();
    let mut inputs = load_inputs(&args.input)?;
    let config = registration_config(args, &inputs.v)?;
    let loaded = elapsed_ms(t0);
    inputs.echo.threshold = Some(config.threshold);
    inputs.echo.epsilon = Some(config.epsilon);
    inputs.echo.max_iterations = Some(config.max_iterations);

    let t1 = Instant::now();
    let result = register(&inputs.u, &inputs.v, &inputs.table, &config)?;
    let registered = elapsed_ms(t1);

    let mut report = RunReport::for_registration(command, inputs.echo, &result);
    report.input_digests = inputs.digests;
    report.timings_ms.insert("load".into(), loaded);
    report.timings_ms.insert("register".into(), registered);

    if let Some(path) = &args.columns {
        write_columns(path, &inputs.u, &inputs.v, &result)?;
    }

    if command == "score" {
        let score = similarity_score(&result)?;
        if !result.converged {
            eprintln!(
                "warning: converged=false ({}); score is from the last alignment",
                result.termination.as_str()
            );
        }
        if let Some(path) = &args.input.out {
            write_atomic(path, &(serde_json::to_string_pretty(&report)? + "\n"))?;
        }
        println!("{score:.12}");
        return Ok(());
    }

    let mut summary = describe_transform(&result.transform);
    let _ = writeln!(
        summary,
        "converged: {} ({}) after {} iterations, {} pairs",
        result.converged,
        result.termination.as_str(),
        result.iterations.len(),
        result.pairs.len()
    );
    let _ = writeln!(summary, "score: {:.12e}", result.score);
    emit_report(&report, args.input.out.as_deref(), &summary)
}

pub fn cmd_synth(args: &SynthArgs) -> Result<()> {
    if args.dim == 0 {
        return Err(Error::InvalidSpec("dimension must be positive".into()));
    }
    if !(args.scale > 0.0 && args.scale.is_finite()) {
        return Err(Error::InvalidSpec(format!("scale must be positive, got {}", args.scale)));
    }
    // ground truth draws from its own stream so the point stream stays fixed
    let mut truth_rng = rng_for(args.seed ^ 0x9e37_79b9_7f4a_7c15);
    let rotation = match args.rotation {
        RotationKind::Random => random_rotation(args.dim, &mut truth_rng),
        RotationKind::Identity => crate::matrix::SquareMatrix::identity(args.dim),
    };
    let translation: Vec<f64> = (0..args.dim).map(|_| truth_rng.random_range(-1.0..1.0)).collect();
    let transform = if args.scale == 1.0 {
        Transform::rigid(rotation, translation)
    } else {
        Transform::similarity(rotation, translation, args.scale)
    };
    let mut spec = SynthSpec::unit(args.dim, args.n_points, args.seed);
    spec.noise_sigma = args.noise;
    spec.outlier_count = args.outliers;
    spec.spurious_pairs = args.spurious;
    spec.transform = transform;
    let instance = generate(&spec)?;

    std::fs::create_dir_all(&args.out_dir)?;
    write_atomic(&args.out_dir.join("u.txt"), &format_point_set(&instance.u))?;
    write_atomic(&args.out_dir.join("v.txt"), &format_point_set(&instance.v))?;
    write_atomic(&args.out_dir.join("weights.txt"), &format_weights(&instance.initial_table))?;
    let truth = TruthFile {
        seed: args.seed,
        dim: args.dim,
        n_points: args.n_points,
        noise_sigma: args.noise,
        outlier_count: args.outliers,
        spurious_pairs: args.spurious,
        transform: (&instance.ground_truth).into(),
        true_pairs: instance.true_pairs.iter().map(|&(i, k)| [i, k]).collect(),
    };
    write_atomic(&args.out_dir.join("truth.json"), &(serde_json::to_string_pretty(&truth)? + "\n"))?;
    println!(
        "wrote {} source and {} template points to {}",
        instance.u.len(),
        instance.v.len(),
        args.out_dir.display()
    );
    Ok(())
}
