use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use displab_core::experiments::{apply_override, config_from_value, run_scenario, template_value, validate_config, ScenarioConfig, TEMPLATES};
use displab_core::export::{write_profile_csv, write_spectrum_csv};
use displab_core::operator1d::auto_decompose;
use displab_core::{assemble_operator, build_profile, Grid1D, LabError};

#[derive(Parser, Debug)]
#[command(name = "displab", version, about = "Run dispersive-estimate scenarios and emit plot-ready data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a scenario file or built-in template.
    Run(Source),
    /// Check a scenario and print its normalized form.
    Validate(Source),
    /// List built-in templates.
    List,
    /// Write sampled profiles (`x,a`) and spectra (`k,lambda`) for each configured profile.
    ExportProfile(Source),
}

#[derive(Args, Debug)]
struct Source {
    /// Path to a JSON scenario, or the name of a built-in template.
    config: String,
    /// `key.path=value`, applied after parsing and before validation.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long, env = "DISPLAB_OUTPUT_DIR", default_value = "displab-out")]
    output_dir: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
}

/// Failure with the exit code it maps to.
struct Failure {
    code: u8,
    error: LabError,
}

fn is_validation(e: &LabError) -> bool {
    match e {
        LabError::Config(_) | LabError::InvalidProfile(_) | LabError::InvalidGrid(_) | LabError::Json(_) => true,
        LabError::Stage { stage, .. } => matches!(stage.as_str(), "load" | "override" | "validate"),
        _ => false,
    }
}

impl From<LabError> for Failure {
    fn from(error: LabError) -> Self {
        Failure { code: if is_validation(&error) { 1 } else { 2 }, error }
    }
}

fn load(src: &Source) -> Result<ScenarioConfig, Failure> {
    let path = Path::new(&src.config);
    let mut doc: Value = if path.exists() {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::Io(e).in_stage("load"))?;
        serde_json::from_str(&text).map_err(|e| LabError::Config(format!("{}: {e}", path.display())).in_stage("load"))?
    } else if let Some(v) = template_value(&src.config) {
        v
    } else {
        return Err(LabError::Config(format!("`{}` is neither a file nor a template (see `displab list`)", src.config)).in_stage("load").into());
    };
    for o in &src.overrides {
        apply_override(&mut doc, o).map_err(|e| e.in_stage("override"))?;
    }
    if let Some(seed) = src.seed {
        apply_override(&mut doc, &format!("seed={seed}")).map_err(|e| e.in_stage("override"))?;
    }
    let cfg = config_from_value(doc).map_err(|e| e.in_stage("validate"))?;
    validate_config(&cfg).map_err(|e| e.in_stage("validate"))?;
    Ok(cfg)
}

fn export_profiles(cfg: &ScenarioConfig, dir: &Path) -> Result<Vec<PathBuf>, LabError> {
    std::fs::create_dir_all(dir)?;
    let grid = Grid1D::new(cfg.grid.n, cfg.grid.length)?;
    let stem = cfg.stem();
    let mut written = Vec::new();
    for (i, spec) in cfg.profiles.iter().enumerate() {
        let p = build_profile(spec)?;
        let profile_path = dir.join(format!("{stem}_profile{i}.csv"));
        write_profile_csv(&p, &grid, BufWriter::new(File::create(&profile_path)?))?;
        let spectrum = auto_decompose(&assemble_operator(&p, &grid)).map_err(|e| e.in_stage("spectrum"))?;
        let spectrum_path = dir.join(format!("{stem}_spectrum{i}.csv"));
        write_spectrum_csv(&spectrum, BufWriter::new(File::create(&spectrum_path)?))?;
        written.extend([profile_path, spectrum_path]);
    }
    Ok(written)
}

fn execute(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::List => {
            for (name, about) in TEMPLATES {
                println!("{name:<24}{about}");
            }
        }
        Command::Validate(src) => {
            let cfg = load(&src)?;
            println!("{}", serde_json::to_string_pretty(&cfg).map_err(LabError::from)?);
        }
        Command::Run(src) => {
            let cfg = load(&src)?;
            let art = run_scenario(&cfg, &src.output_dir)?;
            for p in [&art.csv, &art.summary_path, &art.manifest] {
                println!("{}", p.display());
            }
            if art.summary.get("pass") == Some(&Value::Bool(false)) {
                eprintln!("displab: {} finished with pass = false", cfg.stem());
            }
        }
        Command::ExportProfile(src) => {
            let cfg = load(&src)?;
            for p in export_profiles(&cfg, &src.output_dir)? {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
}

fn report(f: &Failure) {
    let (stage, cause) = match &f.error {
        LabError::Stage { stage, source } => (Some(stage.as_str()), source.to_string()),
        other => (None, other.to_string()),
    };
    let kind = if f.code == 1 { "validation" } else { "runtime" };
    eprintln!("{}", json!({ "error": kind, "stage": stage, "message": cause }));
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            report(&f);
            ExitCode::from(f.code)
        }
    }
}
