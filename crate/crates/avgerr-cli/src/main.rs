//! avgerr: how wrong is a finite-time average?
//!
//! Exit codes: 0 success, 2 invalid input, 3 numerical failure.

mod args;
mod armodel;
mod cfg;
mod cmd_benchmark;
mod cmd_detect;
mod cmd_estimate;
mod cmd_generate;
mod cmd_truth;
mod fail;
mod io;
mod report;

use clap::Parser;

use args::{BenchmarkKind, Cli, Command, GenerateKind, Global, TruthKind};
use fail::CmdResult;

fn dispatch(cli: Cli) -> CmdResult<()> {
    let g = Global {
        seed: cli.seed,
        jobs: cli.jobs,
        out: cli.out,
        format: cli.format,
    };
    match cli.command {
        Command::Generate(GenerateKind::Ar(a)) => cmd_generate::run_ar(&g, &a),
        Command::Generate(GenerateKind::Ks(a)) => cmd_generate::run_ks(&g, &a),
        Command::DetectTransient(a) => cmd_detect::run(&g, &a),
        Command::Estimate(a) => cmd_estimate::run(&g, &a),
        Command::Benchmark(BenchmarkKind::Ar(a)) => cmd_benchmark::run_ar(&g, &a),
        Command::Truth(TruthKind::Ar(a)) => cmd_truth::run_ar(&g, &a),
        Command::Truth(TruthKind::Ks(a)) => cmd_truth::run_ks(&g, &a),
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("AVGERR_LOG", "warn"))
        .format_timestamp(None)
        .init();

    match dispatch(Cli::parse()) {
        Ok(()) => {}
        Err(failure) => {
            eprintln!("error: {:#}", failure.error());
            std::process::exit(failure.code());
        }
    }
}
