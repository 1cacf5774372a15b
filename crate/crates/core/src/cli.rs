//! Command-line front end: library builds, simulation, benchmarks, analyses
//! and the steering service.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::analysis::{car_objectives, car_parameter_ranges, delta2_convergence, sobol_first_order};
use crate::bench::{Lss25Problem, WittingProblem};
use crate::control::{mpc_run, MethodVariant, RunOptions, SelectionRule, SimulationLog};
use crate::error::Error;
use crate::library::{
    build_library, checksum64, load, save, BuildOptions, GridSpec, Library, LibraryManifest, NeighborStrategy,
    NodeStatus,
};
use crate::vehicle::{CoefficientForm, Track};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Failed(String),
    #[error(transparent)]
    Runtime(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 2,
            Self::Failed(_) | Self::Runtime(_) => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Runtime(e.into())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "mompc", version, about = "Multiobjective robust MPC with offline libraries and online refinement")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the robust and nominal efficient sets on every grid node.
    BuildLibrary(BuildArgs),
    /// Drive the car along a track with one or all controller variants.
    Simulate(SimulateArgs),
    /// Check the analytic benchmark problems.
    Bench(BenchArgs),
    /// First-order Sobol indices of the open-loop car objectives.
    Sensitivity(SensitivityArgs),
    /// Median Delta_2 of the stochastic search against a brute-force reference.
    Convergence(ConvergenceArgs),
    /// Summarize a library file.
    InspectLibrary(InspectArgs),
    /// Run the HTTP/WebSocket steering service.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, PartialEq)]
pub enum GridChoice {
    Coarse,
    Compact,
    Paper,
    Custom(PathBuf),
}

fn parse_grid(s: &str) -> std::result::Result<GridChoice, String> {
    match s {
        "coarse" => Ok(GridChoice::Coarse),
        "compact" => Ok(GridChoice::Compact),
        "paper" => Ok(GridChoice::Paper),
        _ => match s.strip_prefix("custom=") {
            Some(p) if !p.is_empty() => Ok(GridChoice::Custom(p.into())),
            _ => Err(format!("expected coarse, compact, paper or custom=<file>, got {s:?}")),
        },
    }
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    /// coarse (3^5), compact (675 nodes), paper (223,587 nodes) or custom=<grid.json>.
    #[arg(long, value_parser = parse_grid, default_value = "coarse")]
    pub grid: GridChoice,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Evaluations per node, for each of the robust and nominal searches.
    #[arg(long, default_value_t = 10_000)]
    pub budget: usize,
    #[arg(long, default_value_t = 100)]
    pub population: usize,
    /// Continue from the build journal next to `--out`.
    #[arg(long, conflicts_with = "dry_run")]
    pub resume: bool,
    /// Print the build plan without solving anything.
    #[arg(long)]
    pub dry_run: bool,
    /// Exit successfully even if some nodes failed or the build was stopped early.
    #[arg(long)]
    pub allow_partial: bool,
    /// Stop after this many newly solved nodes.
    #[arg(long, hide = true)]
    pub stop_after: Option<usize>,
    /// Journal path; defaults to `<out>.journal`.
    #[arg(long)]
    pub journal: Option<PathBuf>,
    #[arg(long, required_unless_present = "dry_run")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Opt,
    Sbr,
    Rpm,
    Hybrid,
    All,
}

impl MethodArg {
    fn methods(self) -> Vec<MethodVariant> {
        match self {
            Self::Opt => vec![MethodVariant::OptOffOn],
            Self::Sbr => vec![MethodVariant::SbrOffOn],
            Self::Rpm => vec![MethodVariant::SbrRpm],
            Self::Hybrid => vec![MethodVariant::Hybrid],
            Self::All => MethodVariant::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CoefficientArg {
    Textbook,
    Published,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NeighborArg {
    Corners,
    Axis,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SelectionArg {
    Chebyshev,
    WeightedSum,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value = "all")]
    pub method: MethodArg,
    /// Track CSV; defaults to the built-in synthetic test track.
    #[arg(long)]
    pub track: Option<PathBuf>,
    #[arg(long)]
    pub library: Option<PathBuf>,
    /// Objective weights, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.5")]
    pub rho: Vec<f64>,
    /// Reference point, comma separated; defaults to the ideal point.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub z: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value = "textbook")]
    pub coefficients: CoefficientArg,
    #[arg(long, default_value_t = 1000)]
    pub steps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 600)]
    pub rpm_budget: usize,
    /// Samples of the lateral offset uncertainty.
    #[arg(long, default_value_t = 21)]
    pub uncertainty_samples: usize,
    #[arg(long, value_enum, default_value = "corners")]
    pub neighbors: NeighborArg,
    #[arg(long, value_enum, default_value = "chebyshev")]
    pub selection: SelectionArg,
    /// Log CSV; with `--method all` one file per method is written as `<stem>_<method>.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl SimulateArgs {
    pub fn run_options(&self) -> RunOptions {
        RunOptions {
            rho: self.rho.clone(),
            z: self.z.clone(),
            coefficients: match self.coefficients {
                CoefficientArg::Textbook => CoefficientForm::Textbook,
                CoefficientArg::Published => CoefficientForm::Published,
            },
            seed: self.seed,
            rpm_budget: self.rpm_budget,
            uncertainty_samples: self.uncertainty_samples,
            neighbors: match self.neighbors {
                NeighborArg::Corners => NeighborStrategy::CellCorners,
                NeighborArg::Axis => NeighborStrategy::Axis,
            },
            selection: match self.selection {
                SelectionArg::Chebyshev => SelectionRule::Chebyshev,
                SelectionArg::WeightedSum => SelectionRule::WeightedSum,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BenchProblem {
    Lss25,
    Witting,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_enum)]
    pub problem: BenchProblem,
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    /// Points per axis of the brute-force decision grid.
    #[arg(long, default_value_t = 200)]
    pub grid: usize,
    /// Uncertainty samples per dimension for lss25.
    #[arg(long, default_value_t = 21)]
    pub samples: usize,
    /// Write the brute-force reference front (witting) as CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SensitivityArgs {
    #[arg(long, default_value_t = 4096)]
    pub samples: usize,
    #[arg(long, default_value_t = 200)]
    pub bootstrap: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Constant steering angle at which the open-loop objectives are evaluated.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub control: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConvergenceProblem {
    Witting,
}

#[derive(Debug, Args)]
pub struct ConvergenceArgs {
    #[arg(long, value_enum, default_value = "witting")]
    pub problem: ConvergenceProblem,
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long, default_value_t = 30)]
    pub runs: usize,
    #[arg(long, value_delimiter = ',', default_value = "500,1000,10000,100000")]
    pub budgets: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    pub population: usize,
    #[arg(long, default_value_t = 200)]
    pub reference_grid: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    pub path: PathBuf,
    /// Print the efficient set of one node as CSV.
    #[arg(long)]
    pub node: Option<usize>,
    /// With `--node`, print the nominal instead of the robust set.
    #[arg(long, requires = "node")]
    pub nominal: bool,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: String,
    /// Directory of track CSVs, served by file stem.
    #[arg(long, default_value = "tracks")]
    pub tracks: PathBuf,
    #[arg(long)]
    pub library: Option<PathBuf>,
    /// Directory for per-session event logs.
    #[arg(long)]
    pub events: Option<PathBuf>,
}

/// Checksum of an input file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputFile {
    pub path: String,
    pub checksum: String,
}

impl InputFile {
    pub fn read(path: &Path) -> CliResult<Self> {
        Ok(Self { path: path.display().to_string(), checksum: format!("{:016x}", checksum64(&fs::read(path)?)) })
    }
}

/// Resolved configuration of one command invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Arguments after the program name; rerunning them reproduces the outputs.
    pub args: Vec<String>,
    pub seed: u64,
    pub config: serde_json::Value,
    pub inputs: Vec<InputFile>,
}

impl RunManifest {
    fn new(command: &str, args: &[String], seed: u64, config: serde_json::Value, inputs: Vec<InputFile>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            args: args.to_vec(),
            seed,
            config,
            inputs,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn checksum(&self) -> String {
        format!("{:016x}", checksum64(self.to_json().as_bytes()))
    }

    pub fn path_for(out: &Path) -> PathBuf {
        let mut s = out.as_os_str().to_owned();
        s.push(".manifest.json");
        s.into()
    }

    /// Writes the manifest next to `out` and returns the header line for output files.
    fn write(&self, out: &Path) -> CliResult<String> {
        let path = Self::path_for(out);
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        fs::write(&path, self.to_json())?;
        Ok(format!("manifest {} checksum {}", path.display(), self.checksum()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        serde_json::from_str(&fs::read_to_string(path)?)
            .map_err(|e| CliError::Usage(format!("{}: not a run manifest: {e}", path.display())))
    }
}

/// Parses `args` (including the program name) and runs the command; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let recorded: Vec<String> = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    match execute(cli.command, &recorded) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Reruns the command recorded in a manifest.
pub fn rerun(manifest: &Path) -> i32 {
    match RunManifest::load(manifest) {
        Ok(m) => run(std::iter::once(m.tool).chain(m.args)),
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: Command, args: &[String]) -> CliResult<()> {
    match command {
        Command::BuildLibrary(a) => cmd_build_library(&a, args),
        Command::Simulate(a) => cmd_simulate(&a, args),
        Command::Bench(a) => cmd_bench(&a),
        Command::Sensitivity(a) => cmd_sensitivity(&a, args),
        Command::Convergence(a) => cmd_convergence(&a, args),
        Command::InspectLibrary(a) => cmd_inspect_library(&a),
        Command::Serve(a) => cmd_serve(&a),
    }
}

fn grid_spec(choice: &GridChoice) -> CliResult<(GridSpec, Vec<InputFile>)> {
    let spec = match choice {
        GridChoice::Coarse => GridSpec::coarse(),
        GridChoice::Compact => GridSpec::compact(),
        GridChoice::Paper => GridSpec::paper(),
        GridChoice::Custom(p) => {
            let spec = GridSpec::load(p).map_err(|e| CliError::Usage(format!("invalid grid spec: {e}")))?;
            return Ok((spec, vec![InputFile::read(p)?]));
        }
    };
    Ok((spec, vec![]))
}

fn to_value<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("config serializes")
}

pub fn cmd_build_library(a: &BuildArgs, args: &[String]) -> CliResult<()> {
    let (spec, inputs) = grid_spec(&a.grid)?;
    if a.budget == 0 || a.population == 0 {
        return Err(CliError::Usage("budget and population must be positive".into()));
    }
    let mut manifest = LibraryManifest::new(spec, a.budget, a.seed);
    manifest.population_size = a.population;
    let total = manifest.spec.node_count();
    if a.dry_run {
        let s = &manifest.spec;
        println!("grid nodes: {total}");
        for (name, axis) in ["d", "xi", "v_y", "r", "kappa"].iter().zip(s.axes()) {
            println!("  {name}: {} points in [{}, {}]", axis.count, axis.min, axis.max);
        }
        println!("evaluations per node: {} (robust) + {} (nominal)", a.budget, a.budget);
        println!("total evaluations: {}", 2 * a.budget as u128 * total as u128);
        return Ok(());
    }
    let out = a.out.as_ref().expect("clap enforces --out");
    let journal = a.journal.clone().unwrap_or_else(|| {
        let mut s = out.as_os_str().to_owned();
        s.push(".journal");
        s.into()
    });
    if a.resume && !journal.exists() {
        return Err(CliError::Usage(format!("nothing to resume: {} does not exist", journal.display())));
    }
    let options = BuildOptions { workers: a.workers, journal: Some(journal), resume: a.resume, stop_after: a.stop_after };
    let library = build_library(&manifest, &options)?;
    let checksum = save(&library, out)?;
    let run = RunManifest::new("build-library", args, a.seed, to_value(&manifest), inputs);
    run.write(out)?;
    let failed = library.failed_nodes();
    let infeasible = library
        .nodes
        .iter()
        .filter(|n| matches!(n.robust.status, NodeStatus::Infeasible { .. }))
        .count();
    println!(
        "wrote {} ({} of {total} nodes, {} robust-infeasible, {} failed, checksum {checksum:016x})",
        out.display(),
        library.nodes.len(),
        infeasible,
        failed.len()
    );
    if (!failed.is_empty() || !library.is_complete()) && !a.allow_partial {
        return Err(CliError::Failed(format!(
            "library incomplete: {} of {total} nodes solved, {} failed (use --allow-partial to accept)",
            library.nodes.len() - failed.len(),
            failed.len()
        )));
    }
    Ok(())
}

fn load_library(path: &Path) -> CliResult<Library> {
    let report = load(path, None)?;
    for w in &report.warnings {
        log::warn!("{}: {w}", path.display());
    }
    Ok(report.library)
}

/// One summary line per method: accumulated distance, lap time, max distance.
pub fn summary_header() -> &'static str {
    "method,accumulated_distance,lap_time,max_distance,violation_steps,steps"
}

pub fn summary_row(log: &SimulationLog) -> String {
    let m = &log.metrics;
    let lap = m.lap_time.map(|t| format!("{t:?}")).unwrap_or_else(|| "none".into());
    format!(
        "{},{:?},{lap},{:?},{},{}",
        log.method,
        m.accumulated_distance,
        m.max_distance,
        m.violation_steps,
        log.records.len()
    )
}

fn method_out(out: &Path, method: MethodVariant, many: bool) -> PathBuf {
    if !many {
        return out.to_path_buf();
    }
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = out.extension().map(|e| e.to_string_lossy().into_owned()).unwrap_or_else(|| "csv".into());
    out.with_file_name(format!("{stem}_{method}.{ext}"))
}

pub fn cmd_simulate(a: &SimulateArgs, args: &[String]) -> CliResult<()> {
    let methods = a.method.methods();
    let needs_library: Vec<String> =
        methods.iter().filter(|m| m.uses_library()).map(|m| m.to_string()).collect();
    if a.library.is_none() && !needs_library.is_empty() {
        return Err(CliError::Usage(format!(
            "method {} needs an offline library (--library); only rpm runs without one",
            needs_library.join(", ")
        )));
    }
    let options = a.run_options();
    let config = options.config().map_err(|e| CliError::Usage(e.to_string()))?;
    let mut inputs = Vec::new();
    let track = match &a.track {
        Some(p) => {
            inputs.push(InputFile::read(p)?);
            Track::load(p).map_err(|e| CliError::Usage(e.to_string()))?
        }
        None => Track::synthetic_test(),
    };
    let library = match &a.library {
        Some(p) => {
            inputs.push(InputFile::read(p)?);
            let lib = load_library(p)?;
            if lib.manifest.params != config.params {
                log::warn!("library was built for different vehicle parameters than this run");
            }
            Some(Arc::new(lib))
        }
        None => None,
    };
    let track = Arc::new(track);
    let start = track.start_state();
    let run = RunManifest::new("simulate", args, a.seed, to_value(&(&options, &config, a.steps)), inputs);
    let header = match &a.out {
        Some(out) => Some(run.write(out)?),
        None => None,
    };
    println!("{}", summary_header());
    for method in &methods {
        let lib = if method.uses_library() { library.clone() } else { None };
        let log = mpc_run(*method, track.clone(), lib, start, a.steps, config.clone())?;
        if let (Some(out), Some(header)) = (&a.out, &header) {
            let path = method_out(out, *method, methods.len() > 1);
            let comment = vec![header.clone(), format!("method {method}"), format!("summary {}", summary_row(&log))];
            fs::write(path, log.to_csv(config.grid.nodes(), config.applied, &comment))?;
        }
        for e in &log.events {
            log::debug!("{method}: {e:?}");
        }
        println!("{}", summary_row(&log));
    }
    Ok(())
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

pub fn cmd_bench(a: &BenchArgs) -> CliResult<()> {
    let mut all_ok = true;
    match a.problem {
        BenchProblem::Lss25 => {
            let archive = Lss25Problem::efficient_set(a.samples)?;
            let mut labels: Vec<&str> =
                archive.iter().filter_map(|e| Lss25Problem::label(&e.decision.values)).collect();
            labels.sort_unstable();
            let ok = labels == ["u_II", "u_IV"];
            all_ok &= ok;
            println!("{} lss25 efficient set {{{}}}", verdict(ok), labels.join(", "));
        }
        BenchProblem::Witting => {
            if a.grid < 2 {
                return Err(CliError::Usage("--grid needs at least 2 points".into()));
            }
            let reference = WittingProblem::reference_front(a.alpha, a.grid);
            println!("witting alpha={} reference: {} efficient grid points", a.alpha, reference.len());
            let lost = WittingProblem::lost_fraction(0.5, a.alpha, a.grid);
            let gained = WittingProblem::lost_fraction(a.alpha, 0.5, a.grid);
            println!(
                "  {:.1}% of the alpha=0.5 efficient set is no longer efficient; {:.1}% of this set is new",
                100.0 * lost,
                100.0 * gained
            );
            if a.alpha < 1.0 {
                let ok = lost == 0.0 && gained == 0.0;
                all_ok &= ok;
                println!("{} efficient set invariant for alpha < 1", verdict(ok));
            } else {
                let ok = lost >= 0.1;
                all_ok &= ok;
                println!("{} invariance broken for alpha >= 1 (at least 10% lost)", verdict(ok));
            }
            if let Some(out) = &a.out {
                fs::write(out, reference.to_csv())?;
            }
        }
    }
    if all_ok {
        Ok(())
    } else {
        Err(CliError::Failed("benchmark check failed".into()))
    }
}

pub fn cmd_sensitivity(a: &SensitivityArgs, args: &[String]) -> CliResult<()> {
    let ranges = car_parameter_ranges();
    let report = sobol_first_order(|y| car_objectives(y, a.control), &ranges, a.samples, a.bootstrap, a.seed)
        .map_err(|e| match e {
            Error::InvalidInput(m) => CliError::Usage(m),
            e => e.into(),
        })?;
    let mut comment = vec![
        format!("open-loop car objectives at constant steering u = {:?}", a.control),
        format!("{} base samples, {} bootstrap resamples, seed {}", a.samples, a.bootstrap, a.seed),
        "inputs uniform on the lo..hi ranges below; m and L_f at +-10% of nominal".into(),
    ];
    match &a.out {
        Some(out) => {
            let run = RunManifest::new("sensitivity", args, a.seed, to_value(&ranges), vec![]);
            comment.insert(0, run.write(out)?);
            fs::write(out, report.to_csv(&comment))?;
        }
        None => print!("{}", report.to_csv(&comment)),
    }
    println!(
        "most sensitive: J1 -> {}, J2 -> {}",
        report.dominant(0).unwrap_or("undefined"),
        report.dominant(1).unwrap_or("undefined")
    );
    Ok(())
}

pub fn cmd_convergence(a: &ConvergenceArgs, args: &[String]) -> CliResult<()> {
    let table = delta2_convergence(a.alpha, &a.budgets, a.runs, a.population, a.reference_grid, a.seed).map_err(
        |e| match e {
            Error::InvalidInput(m) => CliError::Usage(m),
            e => e.into(),
        },
    )?;
    let mut comment = vec![format!(
        "witting alpha {} runs {} population {} reference {}x{} ({} points) seed {}",
        a.alpha, a.runs, a.population, a.reference_grid, a.reference_grid, table.reference_size, a.seed
    )];
    match &a.out {
        Some(out) => {
            let config = serde_json::json!({
                "alpha": a.alpha, "runs": a.runs, "budgets": a.budgets,
                "population": a.population, "reference_grid": a.reference_grid,
            });
            let run = RunManifest::new("convergence", args, a.seed, config, vec![]);
            comment.insert(0, run.write(out)?);
            fs::write(out, table.to_csv(&comment))?;
            print!("{}", table.to_csv(&[]));
        }
        None => print!("{}", table.to_csv(&comment)),
    }
    Ok(())
}

pub fn cmd_inspect_library(a: &InspectArgs) -> CliResult<()> {
    let report = load(&a.path, None)?;
    let lib = &report.library;
    let m = &lib.manifest;
    let total = m.spec.node_count();
    let mut out = String::new();
    if let Some(index) = a.node {
        let node = lib
            .node(index)
            .ok_or_else(|| CliError::Usage(format!("node {index} is not in the library (grid has {total})")))?;
        let front = node.front(!a.nominal);
        writeln!(out, "# node {index} state {:?} status {:?}", node.state, front.status).unwrap();
        let n = front.entries.first().map_or(0, |e| e.controls.len());
        let cols: Vec<String> = (1..=n).map(|i| format!("u{i}")).collect();
        writeln!(out, "sup_j1,sup_j2,{}", cols.join(",")).unwrap();
        for e in &front.entries {
            let us: Vec<String> = e.controls.iter().map(|v| format!("{v:?}")).collect();
            writeln!(out, "{:?},{:?},{}", e.sup_point[0], e.sup_point[1], us.join(",")).unwrap();
        }
        print!("{out}");
        return Ok(());
    }
    let sizes: Vec<usize> = lib.nodes.iter().map(|n| n.robust.entries.len()).collect();
    let infeasible = lib.nodes.iter().filter(|n| matches!(n.robust.status, NodeStatus::Infeasible { .. })).count();
    writeln!(out, "file: {} (format {}, checksum {:016x})", a.path.display(), m.version, report.checksum).unwrap();
    writeln!(out, "nodes: {} of {total}", lib.nodes.len()).unwrap();
    for (name, axis) in ["d", "xi", "v_y", "r", "kappa"].iter().zip(m.spec.axes()) {
        writeln!(out, "  {name}: {} points in [{}, {}]", axis.count, axis.min, axis.max).unwrap();
    }
    writeln!(out, "budget {} population {} base seed {}", m.budget, m.population_size, m.base_seed).unwrap();
    writeln!(out, "vehicle coefficients: {:?}", m.params.form).unwrap();
    writeln!(out, "robust-infeasible nodes: {infeasible}").unwrap();
    writeln!(out, "failed nodes: {:?}", lib.failed_nodes()).unwrap();
    if !sizes.is_empty() {
        let mean = sizes.iter().sum::<usize>() as f64 / sizes.len() as f64;
        writeln!(
            out,
            "robust front size: min {} mean {mean:.1} max {}",
            sizes.iter().min().unwrap(),
            sizes.iter().max().unwrap()
        )
        .unwrap();
    }
    for w in &report.warnings {
        writeln!(out, "warning: {w}").unwrap();
    }
    print!("{out}");
    Ok(())
}

pub fn cmd_serve(a: &ServeArgs) -> CliResult<()> {
    let state = crate::service::ServiceState::from_dirs(&a.tracks, a.library.as_deref(), a.events.clone())?;
    let addr: std::net::SocketAddr =
        a.addr.parse().map_err(|e| CliError::Usage(format!("bad address {:?}: {e}", a.addr)))?;
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(crate::service::serve(addr, state))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_flag_parsing() {
        assert_eq!(parse_grid("paper"), Ok(GridChoice::Paper));
        assert_eq!(parse_grid("custom=g.json"), Ok(GridChoice::Custom("g.json".into())));
        assert!(parse_grid("custom=").is_err());
        assert!(parse_grid("fine").is_err());
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run(["mompc", "build-library", "--dry-run", "--resume"]), 2);
        assert_eq!(run(["mompc", "build-library", "--grid", "fine", "--dry-run"]), 2);
        assert_eq!(run(["mompc", "bench", "--problem", "zdt1"]), 2);
        assert_eq!(run(["mompc", "simulate", "--method", "hybrid"]), 2);
        assert_eq!(run(["mompc", "simulate", "--method", "rpm", "--rho", "0.5,0.6", "--steps", "1"]), 2);
        assert_eq!(run(["mompc", "frobnicate"]), 2);
    }

    #[test]
    fn paper_dry_run_succeeds() {
        assert_eq!(run(["mompc", "build-library", "--grid", "paper", "--dry-run"]), 0);
    }

    #[test]
    fn method_output_names() {
        let out = Path::new("runs/log.csv");
        assert_eq!(method_out(out, MethodVariant::Hybrid, true), Path::new("runs/log_hybrid.csv"));
        assert_eq!(method_out(out, MethodVariant::Hybrid, false), out);
    }
}
