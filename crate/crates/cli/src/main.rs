use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use lanq_core::eval::{run, BranchMode, Leaf, Policy, RunError, RunOptions, RunReport, SchedulerKind, TraceMode};
use lanq_core::program::{load, LoadError};
use lanq_core::quantum::matrix_json;

const EXIT_TYPE: u8 = 1;
const EXIT_SYNTAX: u8 = 2;
const EXIT_RUNTIME_ERROR: u8 = 3;
const EXIT_DEADLOCK: u8 = 4;
const EXIT_STEP_LIMIT: u8 = 5;
const EXIT_INTERNAL: u8 = 70;

#[derive(Parser)]
#[command(name = "lanq", version, about = "Type check and run LanQ programs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse and type check a program.
    Check { file: PathBuf },
    /// Run `main` and print the outcome distribution.
    Run(RunArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    file: PathBuf,
    #[arg(long, value_enum, default_value = "round-robin")]
    policy: PolicyArg,
    #[arg(long, value_enum, default_value = "exhaustive")]
    branch: BranchArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100_000)]
    max_steps: usize,
    /// Write one JSON record per step to this file.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Print the final density matrix of each leaf.
    #[arg(long)]
    emit_rho: bool,
    /// Explore branches on one thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    RoundRobin,
    Random,
    Exhaustive,
}

#[derive(Clone, Copy, ValueEnum)]
enum BranchArg {
    Exhaustive,
    Sample,
    First,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Check { file } => check(&file),
        Cmd::Run(args) => run_cmd(&args),
    };
    match res {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INTERNAL)
        }
    }
}

fn load_file(file: &Path) -> anyhow::Result<Result<lanq_core::internal::MethodContext, u8>> {
    let src = fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
    let name = file.display().to_string();
    Ok(load(&src).map_err(|e| {
        eprintln!("{}", e.render(&name));
        match e {
            LoadError::Type(_) => EXIT_TYPE,
            LoadError::Syntax(_) | LoadError::Lower(_) => EXIT_SYNTAX,
        }
    }))
}

fn check(file: &Path) -> anyhow::Result<u8> {
    Ok(match load_file(file)? {
        Ok(_) => {
            println!("{}: ok", file.display());
            0
        }
        Err(code) => code,
    })
}

fn results_text(l: &Leaf) -> String {
    l.results.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(" | ")
}

fn print_distribution(out: &mut impl Write, leaves: &[Leaf], emit_rho: bool) -> std::io::Result<()> {
    writeln!(out, "probability  results")?;
    for l in leaves {
        let flag = if l.deadlock { "  (deadlock)" } else { "" };
        writeln!(out, "{:.6}     {}{flag}", l.probability, results_text(l))?;
        if emit_rho {
            writeln!(out, "  dims {:?}", l.gs.dims)?;
            writeln!(out, "  rho {}", matrix_json(&l.gs.rho))?;
        }
    }
    Ok(())
}

fn report(args: &RunArgs, r: &RunReport) -> std::io::Result<()> {
    let mut out = std::io::stdout().lock();
    let policy = args.policy.to_possible_value().expect("value").get_name().to_string();
    let branch = args.branch.to_possible_value().expect("value").get_name().to_string();
    writeln!(out, "program: {}", args.file.display())?;
    writeln!(out, "policy: {policy}  branch: {branch}  seed: {}", args.seed)?;
    writeln!(out, "steps: {}", r.steps)?;
    print_distribution(&mut out, &r.leaves, args.emit_rho)?;
    for (i, alt) in r.alternatives.iter().enumerate() {
        writeln!(out, "alternative {}:", i + 1)?;
        print_distribution(&mut out, alt, args.emit_rho)?;
    }
    Ok(())
}

fn run_cmd(args: &RunArgs) -> anyhow::Result<u8> {
    let ctx = match load_file(&args.file)? {
        Ok(c) => c,
        Err(code) => return Ok(code),
    };
    let opts = RunOptions {
        policy: Policy {
            scheduler: match args.policy {
                PolicyArg::RoundRobin => SchedulerKind::RoundRobin,
                PolicyArg::Random => SchedulerKind::Random,
                PolicyArg::Exhaustive => SchedulerKind::Exhaustive,
            },
            branch: match args.branch {
                BranchArg::Exhaustive => BranchMode::Exhaustive,
                BranchArg::Sample => BranchMode::Sample,
                BranchArg::First => BranchMode::First,
            },
            seed: args.seed,
        },
        max_steps: args.max_steps,
        trace: if args.trace.is_some() { TraceMode::Full } else { TraceMode::Off },
        parallel: !args.sequential && RunOptions::default().parallel,
        trace_rho: args.emit_rho,
        ..RunOptions::default()
    };
    let started = Instant::now();
    let result = run(&ctx, &opts);
    eprintln!("wall time: {:.3} s", started.elapsed().as_secs_f64());
    let r = match result {
        Ok(r) => r,
        Err(e @ RunError::StepLimitExceeded { .. }) => {
            eprintln!("{}: {e}", args.file.display());
            return Ok(EXIT_STEP_LIMIT);
        }
        Err(RunError::Start(e)) => {
            eprintln!("{}: {e}", args.file.display());
            return Ok(EXIT_TYPE);
        }
        Err(e) => {
            eprintln!("{}: {e}", args.file.display());
            return Ok(EXIT_INTERNAL);
        }
    };
    if let Some(path) = &args.trace {
        let mut f = std::io::BufWriter::new(fs::File::create(path).with_context(|| format!("creating {}", path.display()))?);
        for t in &r.trace {
            serde_json::to_writer(&mut f, t)?;
            f.write_all(b"\n")?;
        }
        f.flush()?;
    }
    report(args, &r)?;
    let all = r.leaves.iter().chain(r.alternatives.iter().flatten());
    let (mut err, mut dead) = (false, false);
    for l in all {
        err |= l.has_error();
        dead |= l.deadlock;
    }
    Ok(if err {
        EXIT_RUNTIME_ERROR
    } else if dead {
        EXIT_DEADLOCK
    } else {
        0
    })
}
