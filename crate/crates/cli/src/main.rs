//! `bbmlab`: every experiment as a subcommand.
//!
//! Exit status: 0 when all criteria pass, 1 when one fails or a run errors,
//! 2 for an invalid config or command line.

use std::path::PathBuf;
use std::process::ExitCode;

use bbmlab::experiments::{self, ACCEPTANCE};
use bbmlab::{ensemble::with_threads, Error};
use clap::{value_parser, Arg, ArgAction, ArgMatches, Command};

fn cli() -> Command {
    let seed: &'static str = Box::leak(experiments::DEFAULT_SEED.to_string().into_boxed_str());
    let mut cmd = Command::new("bbmlab")
        .about("Branching Brownian motion experiments")
        .subcommand_required(true)
        .arg_required_else_help(true);
    for name in experiments::names() {
        let about = match experiments::find(name) {
            Some(e) => e.anchor,
            None => experiments::ACCEPTANCE_ANCHOR,
        };
        cmd = cmd.subcommand(
            Command::new(name)
                .about(about)
                .arg(Arg::new("seed").long("seed").value_parser(value_parser!(u64)).default_value(seed))
                .arg(
                    Arg::new("threads")
                        .long("threads")
                        .value_parser(value_parser!(usize))
                        .default_value("1")
                        .help("worker threads; 0 uses the global pool"),
                )
                .arg(Arg::new("out-dir").long("out-dir").value_parser(value_parser!(PathBuf)).default_value("out"))
                .arg(Arg::new("config").long("config").value_parser(value_parser!(PathBuf)).help("key = value file"))
                .arg(Arg::new("set").long("set").action(ArgAction::Append).help("override, key=value"))
                .arg(
                    Arg::new("print-config")
                        .long("print-config")
                        .action(ArgAction::SetTrue)
                        .help("print the resolved config and exit"),
                ),
        );
    }
    cmd
}

fn resolve(name: &str, m: &ArgMatches) -> bbmlab::Result<bbmlab::config::Config> {
    let mut cfg = experiments::config(name)?;
    if let Some(p) = m.get_one::<PathBuf>("config") {
        let text = std::fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
        cfg.apply_text(&text)?;
    }
    for pair in m.get_many::<String>("set").into_iter().flatten() {
        cfg.set_pair(pair)?;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let matches = match cli().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let (name, m) = matches.subcommand().expect("subcommand required");
    let cfg = match resolve(name, m) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("bbmlab {name}: {e}");
            return ExitCode::from(2);
        }
    };
    if m.get_flag("print-config") {
        print!("{}", cfg.to_text());
        return ExitCode::SUCCESS;
    }
    let seed = *m.get_one::<u64>("seed").expect("default");
    let threads = *m.get_one::<usize>("threads").expect("default");
    let out = m.get_one::<PathBuf>("out-dir").expect("default").clone();

    let report = match with_threads(threads, || experiments::run(&cfg, seed)) {
        Ok(r) => r,
        Err(e @ Error::Config(_)) => {
            eprintln!("bbmlab {name}: {e}");
            return ExitCode::from(2);
        }
        Err(e) => {
            eprintln!("bbmlab {name}: {e}");
            return ExitCode::from(1);
        }
    };
    if let Err(e) = report.write(&out) {
        eprintln!("bbmlab {name}: writing {}: {e}", out.display());
        return ExitCode::from(1);
    }
    if name != ACCEPTANCE {
        println!("{name}: {}", report.anchor);
    }
    for (k, v) in &report.metrics {
        if name != ACCEPTANCE {
            println!("  {k} = {v}");
        }
    }
    for c in &report.criteria {
        let mark = if c.passed { "PASS" } else { "FAIL" };
        println!("criterion {}: {mark} {}: {}", c.id, c.name, c.detail);
    }
    let failed: Vec<String> = report
        .criteria
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("{} ({})", c.id, c.name))
        .collect();
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        eprintln!("bbmlab {name}: failed criteria: {}", failed.join(", "));
        ExitCode::from(1)
    }
}
