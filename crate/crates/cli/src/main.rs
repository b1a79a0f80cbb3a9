//! `encircle`: validate, run and sweep encirclement scenarios.

mod overrides;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use encircle_core::harness::{run, trace, RunAbort, Scenario, REFERENCE_JSON};
use rayon::prelude::*;
use serde_json::Value;

const EXIT_VALIDATION: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_DIVERGED: u8 = 3;

/// Name that selects the bundled reference scenario.
const BUNDLED: &str = "paper-sim";

#[derive(Parser)]
#[command(name = "encircle", about = "Two-agent target encirclement simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a scenario and check the gain conditions.
    Validate(ScenarioArgs),
    /// Run a scenario and write trace.csv, meta.json and summary.txt.
    Run {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run one scenario per value of a scalar parameter, in parallel.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Dotted path of the parameter, e.g. `estimator.forgetting`.
        parameter: String,
        /// Values to assign; none means no runs.
        #[arg(allow_negative_numbers = true)]
        values: Vec<String>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Print the version.
    Version,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario file, or `paper-sim` for the bundled scenario.
    path: String,
    /// `path=value` assignment applied before parsing; repeatable.
    #[arg(long = "override", value_name = "PATH=VALUE")]
    overrides: Vec<String>,
    /// Replace `run.seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct OutputArgs {
    /// Output directory.
    #[arg(long, env = "ENCIRCLE_OUT", default_value = "out")]
    out: PathBuf,
    /// Run even when the gain conditions fail.
    #[arg(long)]
    force: bool,
    /// Do not print summaries.
    #[arg(long)]
    quiet: bool,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

fn io_failure(context: &Path, err: std::io::Error) -> Failure {
    Failure::new(EXIT_IO, format!("{}: {err}", context.display()))
}

fn read_document(path: &str) -> Result<Value, Failure> {
    let text = if path == BUNDLED && !Path::new(path).exists() {
        REFERENCE_JSON.to_string()
    } else {
        fs::read_to_string(path).map_err(|e| io_failure(Path::new(path), e))?
    };
    serde_json::from_str(&text)
        .map_err(|e| Failure::new(EXIT_IO, format!("{path}: parse error: {e}")))
}

fn parse_scenario(doc: Value, label: &str) -> Result<Scenario, Failure> {
    serde_json::from_value(doc)
        .map_err(|e| Failure::new(EXIT_IO, format!("{label}: schema error: {e}")))
}

fn load(args: &ScenarioArgs) -> Result<(Value, Scenario), Failure> {
    let mut doc = read_document(&args.path)?;
    for o in &args.overrides {
        overrides::apply(&mut doc, o).map_err(|e| Failure::new(EXIT_IO, e))?;
    }
    if let Some(seed) = args.seed {
        overrides::set(&mut doc, "run.seed", seed.into()).map_err(|e| Failure::new(EXIT_IO, e))?;
    }
    let scenario = parse_scenario(doc.clone(), &args.path)?;
    scenario
        .validate()
        .map_err(|e| Failure::new(EXIT_VALIDATION, format!("{}: {e}", args.path)))?;
    Ok((doc, scenario))
}

fn cmd_validate(args: &ScenarioArgs) -> Result<(), Failure> {
    let (_, scenario) = load(args)?;
    println!("schema: ok");
    let report = scenario.gain_report();
    println!("{report}");
    if report.all_passed() {
        Ok(())
    } else {
        Err(Failure::new(EXIT_VALIDATION, "gain conditions fail"))
    }
}

fn check_gains(scenario: &Scenario, force: bool) -> Result<(), Failure> {
    let report = scenario.gain_report();
    if report.all_passed() || force {
        if !report.all_passed() {
            eprintln!("warning: gain conditions fail; running unvalidated");
        }
        Ok(())
    } else {
        Err(Failure::new(
            EXIT_VALIDATION,
            format!("{report}\ngain conditions fail; use --force to run anyway"),
        ))
    }
}

fn cmd_run(args: &ScenarioArgs, output: &OutputArgs) -> Result<(), Failure> {
    let (_, scenario) = load(args)?;
    check_gains(&scenario, output.force)?;
    let out = run(&scenario).map_err(|e| Failure::new(EXIT_VALIDATION, e.to_string()))?;
    let meta = trace::write_artifacts(&output.out, &scenario, &out)
        .map_err(|e| io_failure(&output.out, e))?;
    if !output.quiet {
        print!("{}", meta.summary_text());
        println!("wrote {}", output.out.display());
    }
    match &out.abort {
        Some(a) => Err(Failure::new(EXIT_DIVERGED, a.to_string())),
        None => Ok(()),
    }
}

struct SweepRow {
    value: String,
    status: String,
    validated: bool,
    max_e_post: Option<f64>,
    sup_es_post: Option<f64>,
    min_clearance_post: Option<f64>,
}

fn sweep_one(
    doc: &Value,
    args: &ScenarioArgs,
    parameter: &str,
    value: &str,
    root: &Path,
) -> Result<SweepRow, Failure> {
    let mut doc = doc.clone();
    overrides::apply(&mut doc, &format!("{parameter}={value}"))
        .map_err(|e| Failure::new(EXIT_IO, e))?;
    let label = format!("{} with {parameter}={value}", args.path);
    let mut row = SweepRow {
        value: value.to_string(),
        status: String::new(),
        validated: false,
        max_e_post: None,
        sup_es_post: None,
        min_clearance_post: None,
    };
    let scenario = parse_scenario(doc, &label)?;
    if let Err(e) = scenario.validate() {
        row.status = format!("invalid: {e}");
        return Ok(row);
    }
    let out = run(&scenario).map_err(|e| Failure::new(EXIT_VALIDATION, e.to_string()))?;
    let dir = root.join(format!("{parameter}={value}"));
    let meta = trace::write_artifacts(&dir, &scenario, &out).map_err(|e| io_failure(&dir, e))?;
    row.validated = meta.validated;
    if let Some(s) = &meta.summary {
        row.max_e_post = Some(s.e.sup);
        row.sup_es_post = Some(s.e_s.sup);
        row.min_clearance_post = Some(s.min_agent_target_post);
    }
    row.status = match &out.abort {
        None => "ok".to_string(),
        Some(RunAbort::Diverged { k, .. }) => format!("diverged at k = {k}"),
        Some(RunAbort::Failed { k, .. }) => format!("failed at k = {k}"),
    };
    Ok(row)
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), |v| format!("{v:.6e}"))
}

fn cmd_sweep(
    args: &ScenarioArgs,
    parameter: &str,
    values: &[String],
    output: &OutputArgs,
) -> Result<(), Failure> {
    let mut doc = read_document(&args.path)?;
    for o in &args.overrides {
        overrides::apply(&mut doc, o).map_err(|e| Failure::new(EXIT_IO, e))?;
    }
    if let Some(seed) = args.seed {
        overrides::set(&mut doc, "run.seed", seed.into()).map_err(|e| Failure::new(EXIT_IO, e))?;
    }
    let pointer = format!("/{}", parameter.replace('.', "/"));
    match doc.pointer(&pointer) {
        Some(Value::Number(_) | Value::Bool(_) | Value::String(_)) => {}
        _ => {
            return Err(Failure::new(
                EXIT_IO,
                format!("sweep parameter `{parameter}` is not a scalar field of the scenario"),
            ))
        }
    }
    if values.is_empty() {
        if !output.quiet {
            println!("no values; nothing to run");
        }
        return Ok(());
    }
    let rows: Vec<SweepRow> = values
        .par_iter()
        .map(|v| sweep_one(&doc, args, parameter, v, &output.out))
        .collect::<Result<_, _>>()?;

    let mut table =
        String::from("value,status,validated,max_e_post,sup_e_s_post,min_clearance_post\n");
    for r in &rows {
        table.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.value,
            r.status,
            r.validated,
            fmt_opt(r.max_e_post),
            fmt_opt(r.sup_es_post),
            fmt_opt(r.min_clearance_post)
        ));
    }
    fs::create_dir_all(&output.out).map_err(|e| io_failure(&output.out, e))?;
    let path = output.out.join("sweep.csv");
    fs::write(&path, &table).map_err(|e| io_failure(&path, e))?;
    if !output.quiet {
        print!("{table}");
        println!("wrote {}", output.out.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Validate(args) => cmd_validate(args),
        Command::Run { scenario, output } => cmd_run(scenario, output),
        Command::Sweep {
            scenario,
            parameter,
            values,
            output,
        } => cmd_sweep(scenario, parameter, values, output),
        Command::Version => {
            println!("encircle {}", env!("CARGO_PKG_VERSION"));
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
