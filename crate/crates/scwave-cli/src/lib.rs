//! Command-line front end: argument parsing, dispatch, CSV and metadata output.

pub mod commands;
pub mod config;
pub mod error;
pub mod tables;

use std::ffi::OsString;
use std::path::Path;

use clap::Parser;

use crate::config::{Cli, Command, CommandKind, CommonArgs, Meta, RunConfig, SolverGridMeta};
use crate::error::{CliResult, EXIT_CONFIG, EXIT_OK};

fn dispatch(kind: CommandKind, args: CommonArgs) -> CliResult<String> {
    let dir = args.out.clone();
    std::fs::create_dir_all(&dir)?;
    let f = match kind {
        CommandKind::Thresholds => commands::thresholds,
        CommandKind::Potential => commands::potential,
        CommandKind::Run => commands::run,
        CommandKind::Velocity => commands::velocity,
        CommandKind::Ga => commands::ga,
        CommandKind::Gldpc => commands::gldpc,
        CommandKind::Cs => commands::cs,
        CommandKind::Gamma => commands::gamma,
        CommandKind::Sweep => commands::sweep,
    };
    let solver_grid = args.solver_grid()?;
    let pool = args.pool()?;
    let outcome = pool.install(|| f(&args, &dir))?;
    let cfg = RunConfig { command: kind, args };
    write_meta(&dir, &cfg, Some(solver_grid.into()), outcome.files)?;
    Ok(outcome.summary)
}

fn write_meta<C: serde::Serialize>(dir: &Path, cfg: &C, grid: Option<SolverGridMeta>, outputs: Vec<String>) -> CliResult<()> {
    config::write_meta(
        dir,
        &Meta {
            tool: "scwave",
            version: env!("CARGO_PKG_VERSION"),
            config: cfg,
            solver_grid: grid,
            density_grid: Default::default(),
            tolerances: Default::default(),
            outputs,
        },
    )
}

fn execute(cli: Cli) -> CliResult<String> {
    let (kind, args) = match cli.command {
        Command::Thresholds(a) => (CommandKind::Thresholds, a),
        Command::Potential(a) => (CommandKind::Potential, a),
        Command::Run(a) => (CommandKind::Run, a),
        Command::Velocity(a) => (CommandKind::Velocity, a),
        Command::Ga(a) => (CommandKind::Ga, a),
        Command::Gldpc(a) => (CommandKind::Gldpc, a),
        Command::Cs(a) => (CommandKind::Cs, a),
        Command::Gamma(a) => (CommandKind::Gamma, a),
        Command::Sweep(a) => (CommandKind::Sweep, a),
        Command::ReproduceTable(t) => {
            let mut b = rayon::ThreadPoolBuilder::new();
            if let Some(j) = t.jobs {
                b = b.num_threads(j.max(1));
            }
            let pool = b.build().map_err(|e| error::config(e.to_string()))?;
            let (tables, files) = pool.install(|| tables::reproduce_table(t.name, &t.out))?;
            write_meta(&t.out, &t, Some(scwave::soliton::SolverGrid::default().into()), files)?;
            let checked: Vec<bool> = tables.iter().flat_map(|t| t.rows.iter()).filter(|r| r.tolerance.is_some()).map(|r| r.passes()).collect();
            return Ok(format!(
                "table {}: {} of {} checked rows within tolerance",
                t.name.file_stem(),
                checked.iter().filter(|&&p| p).count(),
                checked.len()
            ));
        }
    };
    dispatch(kind, args)
}

/// Parses `argv`, runs the command, prints the summary and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(summary) => {
            println!("{summary}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
