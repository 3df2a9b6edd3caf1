use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use fluxsim::scenarios::config::{parse_config_str, parse_config_with, ConfigError};
use fluxsim::scenarios::{run_and_write, Config, Scenario};
use fluxsim::Error;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    Ramsey,
    Anneal,
    AnnealPhonon,
    AnnealPhononGravonon,
}

impl From<Command> for Scenario {
    fn from(c: Command) -> Self {
        match c {
            Command::Ramsey => Scenario::Ramsey,
            Command::Anneal => Scenario::Anneal,
            Command::AnnealPhonon => Scenario::AnnealPhonon,
            Command::AnnealPhononGravonon => Scenario::AnnealPhononGravonon,
        }
    }
}

/// Flux-qubit and annealer simulations.
///
/// Exit codes: 0 success, 1 I/O failure, 2 schema error, 3 numerical
/// failure, 4 missing config file, 5 physically invalid config.
#[derive(Debug, Parser)]
#[command(name = "fluxsim", version)]
struct Cli {
    #[arg(value_enum, required_unless_present = "dump_default_config")]
    scenario: Option<Command>,

    /// TOML config. Without it every key takes its default.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory [default: output.directory, itself defaulting to $FLUXSIM_OUT or `out`].
    #[arg(long)]
    out: Option<PathBuf>,

    /// `key=value` with a dotted key, e.g. `annealer.schedule.t_final=500`.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    /// `key=v1,v2,...`: one run per value, each in `<out>/<key>=<value>`.
    #[arg(long, value_name = "KEY=V1,V2")]
    sweep: Option<String>,

    /// Print the annotated default config and exit.
    #[arg(long)]
    dump_default_config: bool,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(ConfigError::Schema(_)) => 2,
        Error::Numerical(_) | Error::Fit(_) => 3,
        Error::Config(ConfigError::Missing(_)) => 4,
        Error::Config(ConfigError::Physical(_)) | Error::InvalidArgument(_) => 5,
        _ => 1,
    }
}

fn load(cli: &Cli, extra: &[String]) -> Result<Config, ConfigError> {
    let overrides: Vec<String> = cli.overrides.iter().chain(extra).cloned().collect();
    match &cli.config {
        Some(path) => parse_config_with(path, &overrides),
        None => parse_config_str("", &overrides),
    }
}

fn out_dir(cli: &Cli, config: &Config) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| PathBuf::from(&config.output.directory))
}

fn run_one(scenario: Scenario, config: &Config, dir: &Path) -> Result<(), Error> {
    run_and_write(scenario, config, dir)?;
    eprintln!("{}: wrote {}", scenario.name(), dir.display());
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Error> {
    let scenario: Scenario = cli.scenario.expect("clap enforces the scenario").into();
    let Some(sweep) = &cli.sweep else {
        let config = load(cli, &[])?;
        return run_one(scenario, &config, &out_dir(cli, &config));
    };
    let (key, values) = sweep
        .split_once('=')
        .ok_or_else(|| ConfigError::Schema(format!("--sweep expects key=v1,v2,..., got `{sweep}`")))?;
    let runs: Vec<(String, Config)> = values
        .split(',')
        .map(|v| {
            let item = format!("{}={}", key.trim(), v.trim());
            load(cli, std::slice::from_ref(&item)).map(|c| (item, c))
        })
        .collect::<Result<_, _>>()?;
    let base = &out_dir(cli, &runs[0].1);
    std::thread::scope(|s| {
        let handles: Vec<_> =
            runs.iter().map(|(item, config)| s.spawn(move || run_one(scenario, config, &base.join(item)))).collect();
        handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect::<Result<Vec<_>, _>>()
    })?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.dump_default_config {
        print!("{}", Config::default().to_annotated_toml());
        return ExitCode::SUCCESS;
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
