use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use qhm::presets::{self, PRESETS};
use qhm::run::{self, RunError};
use qhm::scenario::{self, Format, Kind, Params, Scenario, ValidateParams};
use qhm::validate;

/// Quantum heat machine scenarios: sweeps, datasets and the invariant suite.
#[derive(Parser)]
#[command(name = "qhm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Two-level machine swept over the modulation rate.
    TlsSweep(RunArgs),
    /// N-level machine enhancement over N and dipole alignment.
    Multilevel(RunArgs),
    /// Piston states, work capacity and damped evolution.
    Piston(RunArgs),
    /// Dressed-state cooler over the laser detuning.
    Cooler(RunArgs),
    /// First-cycle work in the non-Markovian regime.
    NonmarkovianWork(RunArgs),
    /// Cold-bath cooling trajectories.
    Thirdlaw(RunArgs),
    /// Run the cross-module invariant suite.
    Validate(ValidateArgs),
    /// List the built-in presets.
    Presets {
        /// Print the scenario text of one preset.
        #[arg(long, value_name = "NAME")]
        dump: Option<String>,
    },
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["scenario", "preset"]))]
struct RunArgs {
    /// Scenario file (TOML).
    #[arg(long, value_name = "FILE")]
    scenario: Option<PathBuf>,
    /// Built-in preset name (see `qhm presets`).
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct ValidateArgs {
    /// Only criteria of this module (or this criterion number).
    #[arg(long, value_name = "MODULE")]
    filter: Option<String>,
    /// Scenario file with kind = "validate".
    #[arg(long, value_name = "FILE", conflicts_with = "filter")]
    scenario: Option<PathBuf>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct OutArgs {
    /// Dataset path; the manifest goes to <PATH>.manifest.json.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Worker threads (default: available cores).
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,
}

const EXIT_RUN_ERROR: u8 = 1;
const EXIT_VALIDATION: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { ExitCode::from(EXIT_RUN_ERROR) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(EXIT_RUN_ERROR)
        }
    }
}

fn dispatch(cmd: Command) -> Result<ExitCode, RunError> {
    let (kind, args) = match cmd {
        Command::Presets { dump } => return list_presets(dump.as_deref()),
        Command::Validate(v) => return validate_cmd(v),
        Command::TlsSweep(a) => (Kind::TlsSweep, a),
        Command::Multilevel(a) => (Kind::Multilevel, a),
        Command::Piston(a) => (Kind::Piston, a),
        Command::Cooler(a) => (Kind::Cooler, a),
        Command::NonmarkovianWork(a) => (Kind::NonmarkovianWork, a),
        Command::Thirdlaw(a) => (Kind::Thirdlaw, a),
    };
    let (scenario, stem) = load(&args)?;
    if scenario.kind != kind {
        return Err(RunError::Model(format!(
            "scenario kind is \"{}\" but the command is `{}`",
            scenario.kind.as_str(),
            kind.as_str()
        )));
    }
    let out = execute_and_write(&scenario, &stem, &args.out)?;
    Ok(if out.validation_failed { ExitCode::from(EXIT_VALIDATION) } else { ExitCode::SUCCESS })
}

fn load(args: &RunArgs) -> Result<(Scenario, String), RunError> {
    if let Some(path) = &args.scenario {
        let stem = path.file_stem().map_or("qhm".into(), |s| s.to_string_lossy().into_owned());
        return Ok((scenario::parse_file(path)?, stem));
    }
    let name = args.preset.as_deref().unwrap_or_default();
    let p = presets::find(name).ok_or_else(|| {
        let names: Vec<_> = PRESETS.iter().map(|p| p.name).collect();
        RunError::Model(format!("unknown preset `{name}`; available: {}", names.join(", ")))
    })?;
    Ok((p.scenario()?, p.name.to_string()))
}

fn execute_and_write(s: &Scenario, stem: &str, o: &OutArgs) -> Result<run::RunOutput, RunError> {
    let format = o
        .format
        .or(s.output.format)
        .or_else(|| o.out.as_deref().and_then(format_from_extension))
        .unwrap_or_default();
    let path = o
        .out
        .clone()
        .or_else(|| s.output.path.clone())
        .unwrap_or_else(|| PathBuf::from(format!("{stem}.{}", format.extension())));
    let jobs = o.jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())).max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| RunError::Model(format!("thread pool: {e}")))?;
    let start = Instant::now();
    let out = pool.install(|| run::execute(s))?;
    let written = run::write_artifacts(s, &out, &path, format, jobs, start.elapsed())?;
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
    eprintln!(
        "wrote {} ({} rows) and {}",
        written.dataset.display(),
        out.dataset.rows.len(),
        written.manifest.display()
    );
    Ok(out)
}

fn format_from_extension(p: &Path) -> Option<Format> {
    match p.extension()?.to_str()? {
        "json" => Some(Format::Json),
        "csv" => Some(Format::Csv),
        _ => None,
    }
}

fn validate_cmd(v: ValidateArgs) -> Result<ExitCode, RunError> {
    let s = match &v.scenario {
        Some(path) => scenario::parse_file(path)?,
        None => {
            let text = match &v.filter {
                Some(f) => format!("kind = \"validate\"\nfrequency_unit = \"per check\"\n[validate]\nfilter = {f:?}\n"),
                None => "kind = \"validate\"\nfrequency_unit = \"per check\"\n".to_string(),
            };
            scenario::parse_scenario(&text, Path::new("."))?
        }
    };
    let filter = match &s.params {
        Params::Validate(ValidateParams { filter }) => filter.clone(),
        _ => return Err(RunError::Model(format!("scenario kind is \"{}\", expected \"validate\"", s.kind.as_str()))),
    };
    if let Some(f) = &filter {
        if !validate::CRITERIA.iter().any(|c| validate::selected(c, Some(f))) {
            return Err(RunError::Model(format!("filter `{f}` matches no criterion")));
        }
    }
    let jobs = v.out.jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())).max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| RunError::Model(format!("thread pool: {e}")))?;
    let start = Instant::now();
    let out = pool.install(|| run::execute(&s))?;
    for row in &out.dataset.rows {
        let text: Vec<String> = row
            .iter()
            .map(|c| match c {
                qhm::output::Cell::Text(t) => t.clone(),
                qhm::output::Cell::Int(i) => i.to_string(),
                other => format!("{other:?}"),
            })
            .collect();
        let known = if text[3] == "true" && text[2] == "FAIL" { " (known failure)" } else { "" };
        println!("criterion {:>2} [{}] {}{}: {}", text[0], text[1], text[2], known, text[4]);
    }
    if v.out.out.is_some() || s.output.path.is_some() {
        let format = v.out.format.or(s.output.format).unwrap_or_default();
        let path = v.out.out.clone().or_else(|| s.output.path.clone()).expect("checked above");
        let w = run::write_artifacts(&s, &out, &path, format, jobs, start.elapsed())?;
        eprintln!("wrote {} and {}", w.dataset.display(), w.manifest.display());
    }
    Ok(if out.validation_failed { ExitCode::from(EXIT_VALIDATION) } else { ExitCode::SUCCESS })
}

fn list_presets(dump: Option<&str>) -> Result<ExitCode, RunError> {
    match dump {
        Some(name) => {
            let p = presets::find(name).ok_or_else(|| RunError::Model(format!("unknown preset `{name}`")))?;
            print!("{}", p.text);
        }
        None => {
            for p in PRESETS {
                let kind = p.scenario()?.kind;
                println!("{:<16} {:<18} {}", p.name, kind.as_str(), p.description);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
