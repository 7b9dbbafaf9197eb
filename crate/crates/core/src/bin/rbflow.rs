use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rbflow_core::harness::config::{join_issues, parse_config, parse_formats};
use rbflow_core::harness::run::{self, parse_range, sweep, EXIT_AUDIT_FAILED, EXIT_CONFIG, EXIT_NUMERIC, EXIT_PASS};
use rbflow_core::harness::scenarios::{self, BUILTINS};
use rbflow_core::Error;

#[derive(Parser)]
#[command(name = "rbflow", version, about = "Ricci-Bourguignon flow laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated subset of csv, json, plot.
        #[arg(long)]
        formats: Option<String>,
    },
    /// Run a builtin scenario, or all of them.
    Check { name: String },
    /// Run a configuration over a parameter range, e.g. --vary rho=0:0.2:0.05.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        vary: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn code(c: i32) -> ExitCode {
    ExitCode::from(c as u8)
}

fn load(path: &PathBuf) -> Result<rbflow_core::harness::RunConfig, i32> {
    let text = fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        EXIT_CONFIG
    })?;
    parse_config(&text).map_err(|issues| {
        eprintln!("configuration errors in {}:\n{}", path.display(), join_issues(&issues));
        EXIT_CONFIG
    })
}

fn report_error(e: &Error) -> i32 {
    eprintln!("error: {e}");
    match e {
        Error::Config(_) => EXIT_CONFIG,
        _ => EXIT_NUMERIC,
    }
}

fn cmd_run(config: PathBuf, out: PathBuf, formats: Option<String>) -> i32 {
    let mut cfg = match load(&config) {
        Ok(c) => c,
        Err(c) => return c,
    };
    if let Some(f) = formats {
        match parse_formats(&f) {
            Ok(f) => cfg.formats = f,
            Err(msg) => {
                eprintln!("error: --formats: {msg}");
                return EXIT_CONFIG;
            }
        }
    }
    cfg.output_dir = Some(out);
    let result = run::run_scenario(&cfg);
    match &result {
        Ok(o) => {
            println!("t_stop = {} ({})", o.summary.t_stop, o.summary.stop_reason);
            for v in &o.summary.verdicts {
                println!("{:<22} {}", v.audit.name(), v.verdict.label());
            }
            for f in &o.files {
                println!("wrote {}", f.display());
            }
        }
        Err(e) => {
            report_error(e);
        }
    }
    run::exit_code(&result)
}

fn cmd_check(name: String) -> i32 {
    let selected: Vec<_> = if name == "all" {
        BUILTINS.iter().collect()
    } else {
        match scenarios::find(&name) {
            Some(s) => vec![s],
            None => {
                eprintln!("error: unknown scenario '{name}'; available:");
                for s in &BUILTINS {
                    eprintln!("  {:<14} {}", s.name, s.description);
                }
                return EXIT_CONFIG;
            }
        }
    };
    let mut worst = EXIT_PASS;
    for s in selected {
        match (s.run)() {
            Ok(report) => {
                let status = if report.passed() { "PASS" } else { "FAIL" };
                println!("{status} {}: {}", s.name, s.description);
                for c in &report.checks {
                    println!("    [{}] {}: {}", if c.passed { "ok" } else { "FAIL" }, c.label, c.detail);
                }
                if !report.passed() {
                    worst = worst.max(EXIT_AUDIT_FAILED);
                }
            }
            Err(e) => {
                println!("ERROR {}: {e}", s.name);
                worst = worst.max(report_error(&e));
            }
        }
    }
    worst
}

fn cmd_sweep(config: PathBuf, vary: String, out: Option<PathBuf>) -> i32 {
    let cfg = match load(&config) {
        Ok(c) => c,
        Err(c) => return c,
    };
    let Some((key, range)) = vary.split_once('=') else {
        eprintln!("error: --vary expects key=start:stop:step");
        return EXIT_CONFIG;
    };
    let values = match parse_range(range) {
        Ok(v) => v,
        Err(e) => return report_error(&e),
    };
    let results = match sweep(&cfg, key.trim(), &values, out.as_deref()) {
        Ok(r) => r,
        Err(e) => return report_error(&e),
    };
    let mut worst = EXIT_PASS;
    for (v, res) in &results {
        let c = run::exit_code(res);
        match res {
            Ok(o) => println!("{key}={v}: exit {c}, t_stop = {} ({})", o.summary.t_stop, o.summary.stop_reason),
            Err(e) => println!("{key}={v}: exit {c}, {e}"),
        }
        worst = worst.max(c);
    }
    worst
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let c = match cli.command {
        Command::Run { config, out, formats } => cmd_run(config, out, formats),
        Command::Check { name } => cmd_check(name),
        Command::Sweep { config, vary, out } => cmd_sweep(config, vary, out),
    };
    code(c)
}
