//! `oxc`: build, inspect, route, and verify optical cross-connect
//! fabrics.
//!
//! Exit codes: 0 on success (including "verified, no counterexamples"),
//! 1 on usage or input errors, 2 when verification finds a
//! counterexample or a loaded fabric fails validation.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use oxc_cli::doc::{ExportDocument, MetricsReport};
use oxc_cli::render::{render_dot, render_metrics, render_table, render_trace, TableFormat};
use oxc_cli::script::{endpoint_to_flat, parse_endpoint, parse_script, run_script};
use oxc_core::fabric::{
    build_classical, build_modular_with, phase1_substitute, phase2_decompose,
};
use oxc_core::metrics::{cabling_report, component_census, loss_budget, FabricKind, LossModel};
use oxc_core::model::Wavelength;
use oxc_core::routing::{verify_nonblocking, ConnectionRequest, RoutingSession, VerifyMode};
use oxc_core::shuffle::{build_modular_shuffle, build_table, check_equivalence, factorize_table};
use oxc_core::topology::{BuildOptions, FabricTopology};

#[derive(Parser)]
#[command(
    name = "oxc",
    version,
    about = "Synthesize, route, and verify WSS-based optical cross-connect fabrics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a fabric and emit it as a JSON document.
    Build(BuildArgs),
    /// Render the connectivity table of a shuffle (flat or factorized).
    Table(TableArgs),
    /// Resolve one connection and print its hop trace.
    Route(RouteArgs),
    /// Apply a batch of connection requests from a file.
    SetupScript(ScriptArgs),
    /// Check structure, connectivity equivalence, and nonblocking
    /// operation.
    Verify(VerifyArgs),
    /// Print cabling, census, and loss figures.
    Metrics(MetricsArgs),
    /// Emit the fabric as a Graphviz DOT graph.
    ExportDot(DotArgs),
    /// Load a saved document, validate it, and summarize it.
    Import(ImportArgs),
}

#[derive(Args, Clone)]
struct SizeArgs {
    /// Port count of a flat fabric.
    #[arg(long, conflicts_with_all = ["outer", "inner"])]
    ports: Option<usize>,
    /// Outer factor n of a factored fabric.
    #[arg(long, requires = "inner")]
    outer: Option<usize>,
    /// Inner factor r of a factored fabric (port count is n*r).
    #[arg(long, requires = "outer")]
    inner: Option<usize>,
    /// Wavelength channels per port.
    #[arg(long, short = 'w', default_value_t = 1)]
    wavelengths: usize,
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Eq)]
enum StageArg {
    /// Flat fabric with the full N^2 mesh.
    Classical,
    /// Mesh factorized, switches relabeled.
    Prime,
    /// Edge switches decomposed into cascades.
    DoublePrime,
    /// Cascades and sub-networks merged into OXC modules.
    Modular,
}

#[derive(Args, Clone)]
struct BuildFlags {
    /// Construction stage to emit.
    #[arg(long, value_enum)]
    stage: Option<StageArg>,
    /// Package OXC modules as opaque crossbars.
    #[arg(long)]
    seal: bool,
    /// Substitute input-side switches with passive couplers.
    #[arg(long)]
    coupler_inputs: bool,
}

/// Where a command gets its fabric: a saved document or a fresh build.
#[derive(Args, Clone)]
struct FabricSource {
    /// Read the fabric from a saved JSON document.
    #[arg(long, value_name = "FILE")]
    fabric: Option<PathBuf>,
    #[command(flatten)]
    size: SizeArgs,
    #[command(flatten)]
    flags: BuildFlags,
}

impl FabricSource {
    fn load(&self) -> Result<FabricTopology> {
        if let Some(path) = &self.fabric {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            return Ok(ExportDocument::from_json(&text)?.topology);
        }
        build_fabric(&self.size, &self.flags)
    }
}

fn build_fabric(size: &SizeArgs, flags: &BuildFlags) -> Result<FabricTopology> {
    let options = BuildOptions {
        sealed_modules: flags.seal,
        coupler_inputs: flags.coupler_inputs,
    };
    match (size.ports, size.outer, size.inner) {
        (Some(ports), None, None) => {
            let stage = flags.stage.unwrap_or(StageArg::Classical);
            if stage != StageArg::Classical {
                bail!("stage `{}` needs --outer and --inner", stage_name(stage));
            }
            if flags.seal || flags.coupler_inputs {
                bail!("--seal and --coupler-inputs apply to the modular stage only");
            }
            Ok(build_classical(ports, size.wavelengths)?)
        }
        (None, Some(outer), Some(inner)) => {
            let stage = flags.stage.unwrap_or(StageArg::Modular);
            if stage != StageArg::Modular && (flags.seal || flags.coupler_inputs) {
                bail!("--seal and --coupler-inputs apply to the modular stage only");
            }
            let ports = outer * inner;
            match stage {
                StageArg::Classical => Ok(build_classical(ports, size.wavelengths)?),
                StageArg::Prime => {
                    Ok(phase1_substitute(ports, outer, inner, size.wavelengths)?)
                }
                StageArg::DoublePrime => Ok(phase2_decompose(&phase1_substitute(
                    ports,
                    outer,
                    inner,
                    size.wavelengths,
                )?)?),
                StageArg::Modular => {
                    Ok(build_modular_with(outer, inner, size.wavelengths, options)?)
                }
            }
        }
        _ => bail!("specify a size: either --ports N or --outer n --inner r"),
    }
}

fn stage_name(stage: StageArg) -> &'static str {
    match stage {
        StageArg::Classical => "classical",
        StageArg::Prime => "prime",
        StageArg::DoublePrime => "double-prime",
        StageArg::Modular => "modular",
    }
}

#[derive(Args)]
struct BuildArgs {
    #[command(flatten)]
    size: SizeArgs,
    #[command(flatten)]
    flags: BuildFlags,
    /// Attach the connectivity table(s) to the document.
    #[arg(long)]
    include_table: bool,
    /// Attach cabling/census/loss reports to the document.
    #[arg(long)]
    include_metrics: bool,
    /// Write to a file instead of stdout.
    #[arg(long, short = 'o', value_name = "FILE")]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct TableArgs {
    #[command(flatten)]
    size: SizeArgs,
    /// Output format.
    #[arg(long, value_enum, default_value_t = TableFormatArg::Pretty)]
    format: TableFormatArg,
}

#[derive(ValueEnum, Clone, Copy)]
enum TableFormatArg {
    Pretty,
    Csv,
}

#[derive(Args)]
struct RouteArgs {
    #[command(flatten)]
    source: FabricSource,
    /// Input endpoint: flat index or (outer,inner).
    input: String,
    /// Output endpoint: flat index or (outer,inner).
    output: String,
    /// Wavelength index.
    wavelength: usize,
}

#[derive(Args)]
struct ScriptArgs {
    #[command(flatten)]
    source: FabricSource,
    /// Request file: one `input output wavelength` triple per line.
    script: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    source: FabricSource,
    /// Verification drive mode.
    #[arg(long, value_enum, default_value_t = ModeArg::Exhaustive)]
    mode: ModeArg,
    /// Scenario budget for randomized mode.
    #[arg(long, default_value_t = 1000)]
    budget: usize,
    /// Seed for randomized mode.
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

#[derive(ValueEnum, Clone, Copy)]
enum ModeArg {
    Exhaustive,
    Randomized,
}

#[derive(Args)]
struct MetricsArgs {
    /// Outer factor n.
    #[arg(long)]
    outer: usize,
    /// Inner factor r.
    #[arg(long)]
    inner: usize,
    /// Wavelength channels per port.
    #[arg(long, short = 'w', default_value_t = 1)]
    wavelengths: usize,
    /// Treat modules as sealed packages (internal fibers excluded from
    /// the cable count).
    #[arg(long)]
    seal: bool,
    /// Per-WSS insertion loss in dB.
    #[arg(long, default_value_t = 5.0)]
    wss_loss: f64,
    /// Flat fiber/connector allowance per path in dB.
    #[arg(long, default_value_t = 0.0)]
    path_loss: f64,
    /// Emit JSON instead of the human summary.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct DotArgs {
    #[command(flatten)]
    source: FabricSource,
    /// Write to a file instead of stdout.
    #[arg(long, short = 'o', value_name = "FILE")]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ImportArgs {
    /// Document to load.
    file: PathBuf,
    /// Re-emit the normalized document to a file.
    #[arg(long, short = 'o', value_name = "FILE")]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(error) => {
            let code = match error.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = error.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(error) => {
            eprintln!("error: {error:#}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Build(args) => cmd_build(args),
        Command::Table(args) => cmd_table(args),
        Command::Route(args) => cmd_route(args),
        Command::SetupScript(args) => cmd_setup_script(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Metrics(args) => cmd_metrics(args),
        Command::ExportDot(args) => cmd_export_dot(args),
        Command::Import(args) => cmd_import(args),
    }
}

/// Prints to stdout, treating a closed pipe as a normal end of output.
fn write_stdout(text: &str) -> Result<()> {
    use std::io::Write;
    let mut stdout = std::io::stdout().lock();
    match stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()) {
        Ok(()) => Ok(()),
        Err(error) if error.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        Err(error) => Err(error.into()),
    }
}

fn emit(output: Option<&PathBuf>, text: &str) -> Result<()> {
    match output {
        Some(path) => {
            fs::write(path, text).with_context(|| format!("writing {}", path.display()))?
        }
        None => write_stdout(text)?,
    }
    Ok(())
}

fn cmd_build(args: BuildArgs) -> Result<ExitCode> {
    let fabric = build_fabric(&args.size, &args.flags)?;
    let params = *fabric.params();
    let mut document = ExportDocument::new(fabric);
    if args.include_table {
        let flat = build_table(params.ports())?;
        let mut tables = vec![flat.clone()];
        if params.outer() > 1 {
            tables.push(factorize_table(&flat, params.outer(), params.inner())?);
        }
        document.tables = Some(tables);
    }
    if args.include_metrics {
        document.metrics = Some(metrics_report(
            &params,
            args.flags.seal,
            &LossModel::default(),
        )?);
    }
    emit(args.output.as_ref(), &document.to_json()?)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_table(args: TableArgs) -> Result<ExitCode> {
    let format = match args.format {
        TableFormatArg::Pretty => TableFormat::Pretty,
        TableFormatArg::Csv => TableFormat::Csv,
    };
    let table = match (args.size.ports, args.size.outer, args.size.inner) {
        (Some(ports), None, None) => build_table(ports)?,
        (None, Some(outer), Some(inner)) => {
            factorize_table(&build_table(outer * inner)?, outer, inner)?
        }
        _ => bail!("specify a size: either --ports N or --outer n --inner r"),
    };
    write_stdout(&render_table(&table, format))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_route(args: RouteArgs) -> Result<ExitCode> {
    let fabric = args.source.load()?;
    let params = fabric.params();
    let input = endpoint_to_flat(parse_endpoint(&args.input)?, params)?;
    let output = endpoint_to_flat(parse_endpoint(&args.output)?, params)?;
    let request = ConnectionRequest::new(input, output, Wavelength::new(args.wavelength));
    let session = RoutingSession::new(&fabric);
    let path = session.resolve(&request)?;
    write_stdout(&render_trace(&fabric, &path))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_setup_script(args: ScriptArgs) -> Result<ExitCode> {
    let fabric = args.source.load()?;
    let text = fs::read_to_string(&args.script)
        .with_context(|| format!("reading {}", args.script.display()))?;
    let lines = parse_script(&text, fabric.params())?;
    let (log, failures) = run_script(&fabric, &lines);
    write_stdout(&log)?;
    Ok(if failures == 0 { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn cmd_verify(args: VerifyArgs) -> Result<ExitCode> {
    let fabric = args.source.load()?;
    let params = *fabric.params();
    let mut clean = true;

    let violations = fabric.validate();
    if violations.is_empty() {
        println!("structure: ok ({} nodes, {} edges)", fabric.nodes().len(), fabric.edges().len());
    } else {
        clean = false;
        println!("structure: {} violations", violations.len());
        for violation in violations.iter().take(8) {
            println!("  - {violation}");
        }
    }

    // Connectivity equivalence of the underlying factorized shuffle,
    // when the fabric was built from factors.
    if args.source.fabric.is_none() && params.outer() > 1 {
        let network = build_modular_shuffle(params.outer(), params.inner())?;
        let outcome = check_equivalence(&network, params.outer(), params.inner());
        match outcome.witness() {
            None => println!(
                "shuffle equivalence ({}x{}): ok ({} fibers)",
                params.outer(),
                params.inner(),
                params.ports() * params.ports()
            ),
            Some(witness) => {
                clean = false;
                println!("shuffle equivalence: FAILED - {witness}");
            }
        }
    }

    // Every pair must resolve; this is the cheap whole-fabric sweep that
    // catches deleted or rewired fibers without any traffic.
    let session = RoutingSession::new(&fabric);
    let mut unresolved = 0usize;
    for input in 0..params.ports() {
        for output in 0..params.ports() {
            let request = ConnectionRequest::new(input, output, Wavelength::new(0));
            if let Err(error) = session.resolve(&request) {
                if unresolved < 4 {
                    println!("self-routing ({input} -> {output}): {error}");
                }
                unresolved += 1;
            }
        }
    }
    if unresolved == 0 {
        println!("self-routing: ok ({} pairs)", params.ports() * params.ports());
    } else {
        clean = false;
        println!("self-routing: {unresolved} unresolved pairs");
    }

    let mode = match args.mode {
        ModeArg::Exhaustive => VerifyMode::Exhaustive,
        ModeArg::Randomized => VerifyMode::Randomized { budget: args.budget, seed: args.seed },
    };
    let report = verify_nonblocking(&fabric, params.wavelengths(), mode)?;
    println!(
        "nonblocking: {} scenarios, {} setups, {} extreme cases, {} counterexamples",
        report.scenarios, report.setups, report.extreme_cases, report.failures
    );
    for counterexample in report.counterexamples.iter().take(5) {
        println!("  - {counterexample}");
    }
    if !report.passed() {
        clean = false;
    }

    if clean {
        println!("verified: no counterexamples");
        Ok(ExitCode::SUCCESS)
    } else {
        println!("verification FAILED");
        Ok(ExitCode::from(2))
    }
}

fn metrics_report(
    params: &oxc_core::model::FabricParams,
    sealed: bool,
    model: &LossModel,
) -> Result<MetricsReport> {
    Ok(MetricsReport {
        census: component_census(params),
        cabling: vec![
            cabling_report(params, FabricKind::Classical, false),
            cabling_report(params, FabricKind::Modular, sealed),
        ],
        loss: vec![
            loss_budget(FabricKind::Classical, params.outer(), params.inner(), false, model)?,
            loss_budget(FabricKind::Modular, params.outer(), params.inner(), false, model)?,
            loss_budget(FabricKind::Modular, params.outer(), params.inner(), true, model)?,
        ],
    })
}

fn cmd_metrics(args: MetricsArgs) -> Result<ExitCode> {
    let params =
        oxc_core::model::FabricParams::factored(args.outer, args.inner, args.wavelengths)?;
    let model = LossModel { wss_loss_db: args.wss_loss, extra_path_loss_db: args.path_loss };
    let report = metrics_report(&params, args.seal, &model)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        write_stdout(&render_metrics(&report))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_export_dot(args: DotArgs) -> Result<ExitCode> {
    let fabric = args.source.load()?;
    emit(args.output.as_ref(), &render_dot(&fabric))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_import(args: ImportArgs) -> Result<ExitCode> {
    let text = fs::read_to_string(&args.file)
        .with_context(|| format!("reading {}", args.file.display()))?;
    let document = ExportDocument::from_json(&text)?;
    let fabric = &document.topology;
    let params = fabric.params();
    println!(
        "loaded: {} fabric, {} ports ({} x {}), {} wavelengths, {} nodes, {} edges",
        fabric.stage(),
        params.ports(),
        params.outer(),
        params.inner(),
        params.wavelengths(),
        fabric.nodes().len(),
        fabric.edges().len(),
    );
    if let Some(path) = &args.output {
        fs::write(path, document.to_json()?)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    let violations = fabric.validate();
    if violations.is_empty() {
        println!("valid: all structural invariants hold");
        Ok(ExitCode::SUCCESS)
    } else {
        println!("INVALID: {} violations", violations.len());
        for violation in violations.iter().take(8) {
            println!("  - {violation}");
        }
        Ok(ExitCode::from(2))
    }
}
