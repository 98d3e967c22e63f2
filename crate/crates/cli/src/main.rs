mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;
use serde_json::json;

use args::{Cli, Command};
use commands::{ConfigFile, Context};
use seqmem::Error;

fn run(cli: &Cli) -> Result<(), Error> {
    let file = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let seed = cli.seed.or(file.rng_seed).unwrap_or(0);
    let jobs = cli.jobs.or(file.jobs);
    if let Some(n) = jobs {
        if n == 0 {
            return Err(Error::OutOfRange("--jobs must be at least 1".into()));
        }
        // a second init only happens in tests; ignore it
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let ctx = Context { seed, file };
    let (out, out_is_doc) = match &cli.command {
        Command::Dc(a) => (commands::dc(a)?, true),
        Command::Patterns(a) => (commands::patterns(a)?, true),
        Command::CountPatterns(a) => (commands::count_patterns(a)?, true),
        Command::Emcm(a) => (commands::emcm(a)?, true),
        Command::BuildModel(a) => (commands::build_model(a)?, true),
        Command::OptimizeClassical(a) => (commands::optimize_classical_cmd(&ctx, a)?, true),
        Command::OptimizeQuantum(a) => (commands::optimize_quantum_cmd(&ctx, a)?, true),
        Command::GmcmSurvey(a) => (commands::gmcm_survey_cmd(&ctx, a)?, true),
        Command::Survey(a) => (commands::survey_cmd(&ctx, a, cli.out.as_deref(), jobs)?, false),
        Command::VerifyConjecture(a) => (commands::verify_cmd(a)?, true),
        Command::QuantumOtScan(a) => (commands::scan_cmd(a)?, true),
        Command::PcQ(a) => (commands::pc_cmd(&ctx, a)?, true),
    };
    let mut doc = out.doc;
    if let Some(obj) = doc.as_object_mut() {
        obj.insert("seed".into(), json!(seed));
        obj.insert("args".into(), serde_json::to_value(&cli.command)?);
    }
    let text = output::render(&doc, out.table.as_ref(), cli.format)?;
    match (&cli.out, out_is_doc) {
        (Some(path), true) => std::fs::write(path, text)?,
        _ => print!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({ "error": e.kind(), "message": e.to_string() }));
            ExitCode::from(1)
        }
    }
}
