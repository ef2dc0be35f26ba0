use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sea_cli::config::AnalysisKind;
use sea_cli::{preset, presets, run_all, CliError, ExperimentConfig, Overrides};

#[derive(Parser)]
#[command(name = "sea", version, about = "Series-elastic actuator experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    overrides: Global,
}

#[derive(Args)]
struct Global {
    /// Integration and control step, s.
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Seed for noise injection.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Observer bandwidth, rad/s.
    #[arg(long, global = true)]
    lambda: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the analysis named in the config.
    Simulate { config: PathBuf, #[arg(long)] out: Option<PathBuf> },
    /// Chirp identification.
    Sysid { config: PathBuf, #[arg(long)] out: Option<PathBuf> },
    /// Sine-by-sine impedance measurement.
    Impedance { config: PathBuf, #[arg(long)] out: Option<PathBuf> },
    /// Z-width experiment.
    Zwidth { config: PathBuf, #[arg(long)] out: Option<PathBuf> },
    /// Observer passivity bounds report.
    Passivity { config: PathBuf, #[arg(long)] out: Option<PathBuf> },
    /// Run a built-in experiment.
    Preset {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the preset's config files instead of running them.
        #[arg(long)]
        print: bool,
    },
    /// List built-in experiments.
    Presets,
}

fn load(path: &Path, kind: Option<AnalysisKind>, ov: &Overrides) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
    let mut cfg = ExperimentConfig::parse(&text)?;
    if let Some(k) = kind {
        cfg.analysis.kind = k;
    }
    ov.apply(&mut cfg)?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let ov = Overrides { dt: cli.overrides.dt, seed: cli.overrides.seed, lambda: cli.overrides.lambda };
    let (config, kind, out) = match cli.command {
        Command::Presets => {
            for p in presets() {
                println!("{:<18} {}", p.name, p.description);
            }
            return Ok(());
        }
        Command::Preset { name, out, print } => {
            let p = preset(&name).ok_or_else(|| CliError::validation("preset", format!("unknown preset `{name}`")))?;
            let mut runs = p.runs;
            for (_, c) in runs.iter_mut() {
                ov.apply(c)?;
                if let Some(o) = &out {
                    c.run.output_dir = o.clone();
                }
            }
            if print {
                for (label, c) in &runs {
                    println!("; run {label}\n{}", c.to_ini_string());
                }
                return Ok(());
            }
            let dir = runs[0].1.run.output_dir.clone();
            let done = run_all(&runs, &dir)?;
            println!("{}: {} files in {}", p.name, done.files().count(), dir.display());
            return Ok(());
        }
        Command::Simulate { config, out } => (config, None, out),
        Command::Sysid { config, out } => (config, Some(AnalysisKind::Sysid), out),
        Command::Impedance { config, out } => (config, Some(AnalysisKind::Impedance), out),
        Command::Zwidth { config, out } => (config, Some(AnalysisKind::Zwidth), out),
        Command::Passivity { config, out } => (config, Some(AnalysisKind::Passivity), out),
    };
    let mut cfg = load(&config, kind, &ov)?;
    if let Some(o) = out {
        cfg.run.output_dir = o;
    }
    let dir = cfg.run.output_dir.clone();
    let done = run_all(&[(String::new(), cfg)], &dir)?;
    println!("{} files in {}", done.files().count(), dir.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
