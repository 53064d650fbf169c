//! Command-line front end. [`run`] returns the process exit code:
//! 0 on success, 1 on a domain error, 2 on a usage error. Output files are
//! written atomically, so a failed run never leaves a partial file.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::milp::{write_lp, BackendRegistry, MilpBackend, SolveOptions};
use crate::mld::{heuristic, prune_dead_islands, run_heuristic_pipeline, solve_mld, ForcedOffSet};
use crate::network::{parse_case, parse_matpower_subset, validate, ComponentRef, Network};
use crate::ops::{build_ops, evaluate_plan, solve_ops, OpsConfig, Pin};
use crate::pareto::{
    compare_report, scatter_csv, scatter_rows, standard_operation, standard_point, sweep, Method,
};
use crate::risk::{area_risk_total, RiskInput, RiskTable};
use crate::service::{AppState, ServiceConfig};

#[derive(Debug, Parser)]
#[command(
    name = "gridshed",
    version,
    about = "Wildfire-aware power shut-off planning"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and validate a case file.
    Validate(ValidateArgs),
    /// Compute per-component risk.
    Risk(RiskArgs),
    /// Solve the shut-off problem at one α.
    Solve(SolveArgs),
    /// Maximum load delivery with a forced-off set.
    Mld(MldArgs),
    /// Run a heuristic followed by load delivery and pruning.
    Heuristic(HeuristicArgs),
    /// Sweep α or a heuristic threshold.
    Sweep(SweepArgs),
    /// Sweep every method and write a comparison report.
    Compare(CompareArgs),
    /// Start the HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Plan,
    Csv,
    Report,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Ops,
    Transmission,
    Area,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Ops => Method::Ops,
            MethodArg::Transmission => Method::Transmission,
            MethodArg::Area => Method::Area,
        }
    }
}

#[derive(Debug, Args)]
pub struct CaseArgs {
    /// Case file: canonical JSON, or MATPOWER when the name ends in `.m`.
    #[arg(long)]
    pub case: PathBuf,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    #[command(flatten)]
    pub case: CaseArgs,
    /// Risk document.
    #[arg(long)]
    pub risk: PathBuf,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    /// Solver backend; defaults to GRIDSHED_BACKEND, then the built-in default.
    #[arg(long, env = "GRIDSHED_BACKEND")]
    pub backend: Option<String>,
    /// Relative optimality gap.
    #[arg(long, value_parser = parse_nonneg)]
    pub gap: Option<f64>,
    /// Per-solve time limit in seconds.
    #[arg(long = "time-limit", value_parser = parse_nonneg)]
    pub time_limit: Option<f64>,
    /// Reserved; every solve is deterministic.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Include wall-clock solve times in the output.
    #[arg(long)]
    pub timing: bool,
}

impl SolverArgs {
    fn options(&self) -> SolveOptions {
        self.options_from(SolveOptions::default())
    }

    /// Sweeps compare neighbouring points, so they start from tight gaps.
    fn sweep_options(&self) -> SolveOptions {
        self.options_from(SolveOptions::tight())
    }

    fn options_from(&self, mut o: SolveOptions) -> SolveOptions {
        if let Some(g) = self.gap {
            o.relative_gap = g;
        }
        o.time_limit_s = self.time_limit;
        o
    }
}

#[derive(Debug, Args)]
pub struct OutArgs {
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub case: CaseArgs,
    /// Optional risk document to check against the case.
    #[arg(long)]
    pub risk: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RiskArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_parser = parse_alpha)]
    pub alpha: f64,
    /// `kind:id:on` or `kind:id:off`; repeatable.
    #[arg(long = "pin", value_parser = parse_pin)]
    pub pins: Vec<Pin>,
    /// Also write the MILP in LP format to this file.
    #[arg(long = "lp-out")]
    pub lp_out: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct MldArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Component to keep off, as `kind:id`; repeatable.
    #[arg(long = "forced-off", value_parser = parse_component)]
    pub forced_off: Vec<ComponentRef>,
    /// Remove energized islands that serve nothing.
    #[arg(long)]
    pub prune: bool,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct HeuristicArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum)]
    pub method: MethodArg,
    #[arg(long, value_parser = parse_finite)]
    pub threshold: f64,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum)]
    pub method: MethodArg,
    /// Explicit grid values, comma separated; default grid when absent.
    #[arg(long, value_delimiter = ',', value_parser = parse_finite)]
    pub grid: Option<Vec<f64>>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Area-heuristic threshold; the default threshold grid when absent.
    #[arg(long, value_parser = parse_finite)]
    pub threshold: Option<f64>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub listen: String,
    #[arg(long, default_value_t = 2)]
    pub workers: usize,
    /// Directory receiving a copy of every stored plan.
    #[arg(long = "store-dir")]
    pub store_dir: Option<PathBuf>,
    #[arg(long, env = "GRIDSHED_BACKEND")]
    pub backend: Option<String>,
    #[arg(long, value_parser = parse_nonneg)]
    pub gap: Option<f64>,
    /// Seconds before a single solve request gives up.
    #[arg(long = "solve-timeout", default_value_t = 300)]
    pub solve_timeout: u64,
}

fn parse_finite(s: &str) -> Result<f64, String> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|e| format!("`{s}` is not a number: {e}"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

fn parse_nonneg(s: &str) -> Result<f64, String> {
    let v = parse_finite(s)?;
    if v >= 0.0 {
        Ok(v)
    } else {
        Err(format!("`{s}` must be nonnegative"))
    }
}

fn parse_alpha(s: &str) -> Result<f64, String> {
    let v = parse_finite(s)?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("alpha must lie in [0, 1], got {v}"))
    }
}

fn parse_pin(s: &str) -> Result<Pin, String> {
    s.parse()
}

fn parse_component(s: &str) -> Result<ComponentRef, String> {
    s.parse()
}

/// Writes `bytes` to a temporary file next to `path` and renames it into
/// place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

type Failure = String;

/// Reads a case file, choosing the parser by extension. MATPOWER
/// warnings go to `err`.
pub fn load_case(path: &Path, err: &mut dyn Write) -> Result<Network, Failure> {
    let text =
        std::fs::read_to_string(path).map_err(|e| format!("reading {}: {e}", path.display()))?;
    if path.extension().is_some_and(|e| e == "m") {
        let case = parse_matpower_subset(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        for w in &case.warnings {
            let _ = writeln!(err, "warning: {w}");
        }
        Ok(case.network)
    } else {
        parse_case(&text).map_err(|e| format!("{}: {e}", path.display()))
    }
}

pub fn load_risk(path: &Path, network: &Network) -> Result<RiskTable, Failure> {
    let text =
        std::fs::read_to_string(path).map_err(|e| format!("reading {}: {e}", path.display()))?;
    RiskInput::parse(&text)
        .and_then(|r| r.build_table(network))
        .map_err(|e| format!("{}: {e}", path.display()))
}

fn load_inputs(input: &InputArgs, err: &mut dyn Write) -> Result<(Network, RiskTable), Failure> {
    let network = load_case(&input.case.case, err)?;
    let risk = load_risk(&input.risk, &network)?;
    Ok((network, risk))
}

fn backend(
    registry: &BackendRegistry,
    name: Option<&str>,
) -> Result<Arc<dyn MilpBackend>, Failure> {
    registry
        .get(name.unwrap_or(BackendRegistry::default_name()))
        .map_err(|e| e.to_string())
}

fn emit(out: &OutArgs, text: &str, stdout: &mut dyn Write) -> Result<(), Failure> {
    match &out.out {
        Some(path) => write_atomic(path, text.as_bytes())
            .map_err(|e| format!("writing {}: {e}", path.display())),
        None => stdout.write_all(text.as_bytes()).map_err(|e| e.to_string()),
    }
}

fn plan_output(
    network: &Network,
    risk: &RiskTable,
    plan: &crate::ops::ShutoffPlan,
    out: &OutArgs,
    timing: bool,
    stdout: &mut dyn Write,
) -> Result<(), Failure> {
    let text = match out.format.unwrap_or(OutputFormat::Plan) {
        OutputFormat::Plan => plan.to_json(timing),
        OutputFormat::Csv => scatter_csv(&scatter_rows(network, risk, plan)),
        OutputFormat::Report => return Err("`--format report` applies to sweep and compare".into()),
    };
    emit(out, &text, stdout)
}

fn risk_document(network: &Network, risk: &RiskTable) -> String {
    let areas: Vec<serde_json::Value> = network
        .areas()
        .iter()
        .map(|a| {
            serde_json::json!({
                "area_id": a.id,
                "rho": risk.area_rho().get(&a.id).copied().unwrap_or(0.0),
                "total_risk": area_risk_total(risk, network, a.id).unwrap_or(0.0),
            })
        })
        .collect();
    let doc = serde_json::json!({
        "total_risk": risk.total(),
        "areas": areas,
        "components": risk.entries(),
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("risk document serializes");
    text.push('\n');
    text
}

fn execute(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), Failure> {
    let registry = BackendRegistry::with_defaults();
    match cli.command {
        Command::Validate(args) => {
            let network = load_case(&args.case.case, stderr)?;
            debug_assert!(validate(network.data()).is_empty());
            let mut line = format!(
                "ok: {} buses, {} lines, {} generators, {} loads, {} areas, {} MW demand",
                network.buses().len(),
                network.lines().len(),
                network.generators().len(),
                network.loads().len(),
                network.areas().len(),
                network.total_demand_mw()
            );
            if let Some(path) = &args.risk {
                let risk = load_risk(path, &network)?;
                line.push_str(&format!(", total risk {}", risk.total()));
            }
            writeln!(stdout, "{line}").map_err(|e| e.to_string())
        }
        Command::Risk(args) => {
            let (network, risk) = load_inputs(&args.input, stderr)?;
            let text = match args.out.format {
                Some(OutputFormat::Csv) => {
                    let mut t = String::from("kind,id,risk\n");
                    for e in risk.entries() {
                        t.push_str(&format!(
                            "{},{},{}\n",
                            e.component.kind, e.component.id, e.value
                        ));
                    }
                    t
                }
                _ => risk_document(&network, &risk),
            };
            emit(&args.out, &text, stdout)
        }
        Command::Solve(args) => {
            let (network, risk) = load_inputs(&args.input, stderr)?;
            let backend = backend(&registry, args.solver.backend.as_deref())?;
            let config = OpsConfig::new(args.alpha)
                .with_pins(args.pins)
                .with_options(args.solver.options());
            if let Some(path) = &args.lp_out {
                let problem = build_ops(&network, &risk, &config).map_err(|e| e.to_string())?;
                write_atomic(path, write_lp(&problem).as_bytes()).map_err(|e| e.to_string())?;
            }
            let plan =
                solve_ops(&network, &risk, &config, backend.as_ref()).map_err(|e| e.to_string())?;
            report_audit(&network, &risk, &plan, stderr);
            plan_output(
                &network,
                &risk,
                &plan,
                &args.out,
                args.solver.timing,
                stdout,
            )
        }
        Command::Mld(args) => {
            let (network, risk) = load_inputs(&args.input, stderr)?;
            let backend = backend(&registry, args.solver.backend.as_deref())?;
            let forced = ForcedOffSet::new(&network, args.forced_off).map_err(|e| e.to_string())?;
            let mut plan = solve_mld(
                &network,
                &risk,
                &forced,
                backend.as_ref(),
                &args.solver.options(),
            )
            .map_err(|e| e.to_string())?;
            if args.prune {
                plan = prune_dead_islands(&network, &risk, &plan);
            }
            plan_output(
                &network,
                &risk,
                &plan,
                &args.out,
                args.solver.timing,
                stdout,
            )
        }
        Command::Heuristic(args) => {
            let (network, risk) = load_inputs(&args.input, stderr)?;
            let backend = backend(&registry, args.solver.backend.as_deref())?;
            let kind = Method::from(args.method)
                .heuristic()
                .ok_or("`--method ops` is not a heuristic; use `solve`")?;
            let forced = heuristic(&network, &risk, kind, args.threshold);
            let _ = writeln!(stderr, "forced off: {} components", forced.len());
            let plan = run_heuristic_pipeline(
                &network,
                &risk,
                kind,
                args.threshold,
                backend.as_ref(),
                &args.solver.options(),
            )
            .map_err(|e| e.to_string())?;
            plan_output(
                &network,
                &risk,
                &plan,
                &args.out,
                args.solver.timing,
                stdout,
            )
        }
        Command::Sweep(args) => {
            let (network, risk) = load_inputs(&args.input, stderr)?;
            let backend = backend(&registry, args.solver.backend.as_deref())?;
            let result = sweep(
                &network,
                &risk,
                args.method.into(),
                args.grid.as_deref(),
                backend.as_ref(),
                &args.solver.sweep_options(),
            )
            .map_err(|e| e.to_string())?;
            if result.failures() > 0 {
                let _ = writeln!(stderr, "warning: {} sweep points failed", result.failures());
            }
            let text = match args.out.format.unwrap_or(OutputFormat::Csv) {
                OutputFormat::Csv => result.to_csv(args.solver.timing),
                OutputFormat::Report => {
                    let mut copy = result.clone();
                    if !args.solver.timing {
                        copy.points.iter_mut().for_each(|p| p.solve_time_s = None);
                    }
                    let mut t = serde_json::to_string_pretty(&copy).expect("sweep serializes");
                    t.push('\n');
                    t
                }
                OutputFormat::Plan => return Err("`--format plan` applies to single solves".into()),
            };
            emit(&args.out, &text, stdout)
        }
        Command::Compare(args) => {
            let (network, risk) = load_inputs(&args.input, stderr)?;
            let backend = backend(&registry, args.solver.backend.as_deref())?;
            let options = args.solver.sweep_options();
            let standard = standard_operation(&network, &risk, backend.as_ref(), &options)
                .map_err(|e| e.to_string())?;
            let area_grid = args.threshold.map(|t| vec![t]);
            let mut sweeps = Vec::new();
            for (method, grid) in [
                (Method::Ops, None),
                (Method::Transmission, None),
                (Method::Area, area_grid.as_deref()),
            ] {
                sweeps.push(
                    sweep(&network, &risk, method, grid, backend.as_ref(), &options)
                        .map_err(|e| e.to_string())?,
                );
            }
            let text = match args.out.format.unwrap_or(OutputFormat::Report) {
                OutputFormat::Report => compare_report(
                    &network,
                    &risk,
                    &sweeps,
                    &standard_point(standard),
                    args.solver.timing,
                )
                .to_json(),
                OutputFormat::Csv => {
                    let mut t = String::new();
                    for (i, s) in sweeps.iter().enumerate() {
                        let csv = s.to_csv(args.solver.timing);
                        t.push_str(if i == 0 {
                            &csv
                        } else {
                            csv.split_once('\n').map_or("", |(_, rows)| rows)
                        });
                    }
                    t
                }
                OutputFormat::Plan => return Err("`--format plan` applies to single solves".into()),
            };
            emit(&args.out, &text, stdout)
        }
        Command::Serve(args) => {
            let mut config = ServiceConfig {
                workers: args.workers,
                solve_timeout: Duration::from_secs(args.solve_timeout),
                store_dir: args.store_dir,
                ..ServiceConfig::default()
            };
            if let Some(b) = args.backend {
                registry.get(&b).map_err(|e| e.to_string())?;
                config.default_backend = b;
            }
            if let Some(g) = args.gap {
                config.options.relative_gap = g;
                config.sweep_options.relative_gap = g;
            }
            let state = AppState::new(config, registry);
            let runtime = tokio::runtime::Builder::new_multi_thread()
                .enable_all()
                .build()
                .map_err(|e| e.to_string())?;
            runtime.block_on(async {
                let listener = tokio::net::TcpListener::bind(&args.listen)
                    .await
                    .map_err(|e| format!("binding {}: {e}", args.listen))?;
                log::info!("listening on {}", args.listen);
                crate::service::serve(listener, state)
                    .await
                    .map_err(|e| e.to_string())
            })
        }
    }
}

fn report_audit(
    network: &Network,
    risk: &RiskTable,
    plan: &crate::ops::ShutoffPlan,
    stderr: &mut dyn Write,
) {
    if let Ok(ev) = evaluate_plan(network, risk, plan) {
        for v in &ev.violations {
            let _ = writeln!(
                stderr,
                "warning: {} {} by {}",
                v.component, v.rule, v.amount
            );
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            if code == 0 {
                let _ = stdout.write_all(rendered.as_bytes());
            } else {
                let _ = stderr.write_all(rendered.as_bytes());
            }
            return code;
        }
    };
    match execute(cli, stdout, stderr) {
        Ok(()) => 0,
        Err(message) => {
            let _ = writeln!(stderr, "error: {message}");
            1
        }
    }
}
