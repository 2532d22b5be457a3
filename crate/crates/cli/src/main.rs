use clap::{Parser, ValueEnum};
use shl_core::scenarios::{run, Command, RunConfig, ScenarioError, Sense};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    Profile,
    Threshold,
    Nonexist,
    Perturb,
    Nonunique,
    Ball,
    Verify,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Profile => Command::Profile,
            Cmd::Threshold => Command::Threshold,
            Cmd::Nonexist => Command::Nonexist,
            Cmd::Perturb => Command::Perturb,
            Cmd::Nonunique => Command::Nonunique,
            Cmd::Ball => Command::Ball,
            Cmd::Verify => Command::Verify,
        }
    }
}

/// Numerical checks for singular solutions of u_t = Δu + |u|^α u.
#[derive(Debug, Parser)]
#[command(name = "shl", version)]
struct Args {
    command: Cmd,
    /// JSON run configuration
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides output_dir)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomized suites (overrides seed)
    #[arg(long)]
    seed: Option<u64>,
}

const CONFIG_ERROR: u8 = 4;

fn load(args: &Args) -> Result<RunConfig, ScenarioError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| ScenarioError::Config(format!("{}: {e}", args.config.display())))?;
    let mut cfg = RunConfig::from_json(&text)?;
    cfg.command = Some(args.command.into());
    if let Some(dir) = &args.out {
        cfg.output_dir = Some(dir.display().to_string());
    }
    if args.seed.is_some() {
        cfg.seed = args.seed;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { CONFIG_ERROR } else { 0 });
        }
    };
    let cfg = match load(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("shl: {e}");
            return ExitCode::from(CONFIG_ERROR);
        }
    };
    let command = cfg.command.unwrap_or(Command::Verify);
    let out = match run(&cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("shl: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    for c in &out.record.checks {
        let rel = match c.sense {
            Sense::AtMost => "<=",
            Sense::AtLeast => ">=",
        };
        let expected = if c.expected_failure { " (expected failure)" } else { "" };
        println!("{} {} {:e} {rel} {:e} margin {:e}{expected}", c.effective(), c.name, c.value, c.threshold, c.margin);
        if let Some(n) = &c.note {
            println!("    {n}");
        }
    }
    let dir = PathBuf::from(cfg.output_dir.clone().unwrap_or_else(|| format!("out/{command}")));
    if let Err(e) = out.write(&dir) {
        eprintln!("shl: writing {}: {e}", dir.display());
        return ExitCode::from(3);
    }
    println!("verdict {}; record {} in {}", out.record.verdict, &out.record.record_hash[..16], dir.display());
    ExitCode::from(out.exit_code() as u8)
}
