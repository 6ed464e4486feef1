use std::path::PathBuf;
use std::process::ExitCode;

use advnet_cli::{
    cmd_bound, cmd_capacity, cmd_table, cmd_verify, parse_kind, BoundKind, CliError,
    CommandOutput, Format, NetworkSource, RunConfig, TableConfig,
};
use advnet_core::net::Scenario;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "advnet", about = "Workbench for capacities of adversarial networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Achievable size and certified upper bound for one instance.
    Capacity(InstanceArgs),
    /// One named upper bound with its witness.
    Bound {
        /// singleton, generalized, multishot-cut, or double-cut.
        which: String,
        #[command(flatten)]
        args: InstanceArgs,
    },
    /// Mechanical verification of a builtin strategy.
    Verify(InstanceArgs),
    /// Capacity table over the whole catalog.
    Table(TableArgs),
}

#[derive(Args)]
#[group(id = "source", required = true, multiple = false)]
struct SourceArgs {
    /// Catalog network: diamond, mirrored-diamond, butterfly, family-a..family-e.
    #[arg(long, group = "source")]
    builtin: Option<String>,
    /// Instance description file (JSON).
    #[arg(long, group = "source")]
    spec: Option<PathBuf>,
}

#[derive(Args)]
struct InstanceArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Alphabet size (default 2; spec files keep their own unless set).
    #[arg(long)]
    q: Option<u8>,
    /// Transmission rounds (default 1).
    #[arg(long)]
    i: Option<usize>,
    /// Family parameter for family-a..family-e builtins.
    #[arg(long)]
    t: Option<usize>,
    /// fixed (same edges all rounds) or free (re-chosen each round).
    #[arg(long)]
    scenario: Option<String>,
    /// text, csv, or json.
    #[arg(long, default_value = "text")]
    format: String,
    /// Largest message domain a search may materialize.
    #[arg(long)]
    budget_domain: Option<u128>,
    /// Largest number of network codes an enumeration may visit.
    #[arg(long)]
    budget_codes: Option<u128>,
    /// Enumerate independent tables per round instead of one shared assignment.
    #[arg(long)]
    per_round_codes: bool,
}

#[derive(Args)]
struct TableArgs {
    /// Alphabet size.
    #[arg(long, default_value_t = 2)]
    q: u8,
    /// Transmission rounds.
    #[arg(long, default_value_t = 1)]
    i: usize,
    /// text, csv, or json.
    #[arg(long, default_value = "text")]
    format: String,
    /// Largest message domain a search may materialize.
    #[arg(long)]
    budget_domain: Option<u128>,
    /// Largest number of network codes an enumeration may visit.
    #[arg(long)]
    budget_codes: Option<u128>,
}

fn parse_scenario(name: &str) -> Result<Scenario, CliError> {
    match name {
        "fixed" => Ok(Scenario::FixedEdges),
        "free" => Ok(Scenario::FreeEdges),
        other => Err(CliError::Input(format!("unknown scenario {other:?}; expected fixed or free"))),
    }
}

fn run_config(args: &InstanceArgs) -> Result<RunConfig, CliError> {
    let source = match (&args.source.builtin, &args.source.spec) {
        (Some(name), None) => NetworkSource::Builtin(parse_kind(name, args.t)?),
        (None, Some(path)) => NetworkSource::SpecFile(path.clone()),
        _ => unreachable!("clap enforces exactly one source"),
    };
    Ok(RunConfig {
        source,
        q: args.q,
        rounds: args.i,
        scenario: args.scenario.as_deref().map(parse_scenario).transpose()?,
        format: args.format.parse()?,
        budget_domain: args.budget_domain,
        budget_codes: args.budget_codes,
        per_round_codes: args.per_round_codes,
    })
}

fn run(cli: Cli) -> Result<CommandOutput, CliError> {
    match cli.command {
        Command::Capacity(args) => cmd_capacity(&run_config(&args)?),
        Command::Bound { which, args } => {
            let kind: BoundKind = which.parse()?;
            cmd_bound(&run_config(&args)?, kind)
        }
        Command::Verify(args) => cmd_verify(&run_config(&args)?),
        Command::Table(args) => cmd_table(&TableConfig {
            q: args.q,
            rounds: args.i,
            format: args.format.parse::<Format>()?,
            budget_domain: args.budget_domain,
            budget_codes: args.budget_codes,
        }),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(output) => {
            print!("{}", output.text);
            ExitCode::from(output.exit_code as u8)
        }
        Err(err) => {
            eprintln!("{err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
