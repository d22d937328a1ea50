//! `glp`: check programs, run them on one agent or many, and compare the
//! engine against the exhaustive oracle.
//!
//! Exit codes: 0 ok, 1 syntax or usage, 2 SRSW or single-occurrence,
//! 3 deadlock, 4 trace validation, 5 oracle inconclusive, 6 oracle mismatch.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use glp_core::oracle::{check_equivalence, clause_multiset, equivalence_with, Verdict};
use glp_core::parser::srsw_report;
use glp_core::{check_so, dglp_run, parse_goal, parse_program, Outcome, Program, RunStatus, Term};
use glp_net::{run_scenario, scenarios, validate_maglp_trace, Policy, Scenario, TraceRecord};

#[derive(Parser)]
#[command(name = "glp", version, about = "Concurrent logic programs: check, run, distribute")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a program and check every clause for SRSW.
    Check { program: PathBuf },
    /// Run a goal on a single agent and print the outcome.
    Run {
        program: PathBuf,
        #[arg(long)]
        goal: String,
        #[arg(long, default_value_t = 100_000)]
        max_steps: usize,
        /// Trace file, or `-` for standard output.
        #[arg(long)]
        trace: Option<String>,
    },
    /// Run a multiagent scenario (a file, or the name of a bundled one).
    Marun {
        scenario: String,
        #[arg(long, env = "GLP_SEED")]
        seed: Option<u64>,
        #[arg(long)]
        policy: Option<Policy>,
        #[arg(long)]
        trace: Option<String>,
        /// Check the trace against the abstract semantics and audit the tables.
        #[arg(long)]
        validate: bool,
    },
    /// Compare the engine's outcome with every outcome the oracle reaches.
    Oracle {
        program: PathBuf,
        #[arg(long)]
        goal: String,
        #[arg(long, default_value_t = 16)]
        depth: usize,
        /// Drop the engine's last remaining goal before comparing.
        #[arg(long, hide = true)]
        fault: bool,
    },
}

enum Loaded {
    Program(Program),
    Exit(u8),
}

fn load_program(path: &Path) -> Result<Loaded> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let program = match parse_program(&text) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("{}:{}", path.display(), e);
            return Ok(Loaded::Exit(1));
        }
    };
    let report = srsw_report(&program);
    if !report.is_empty() {
        for v in &report {
            eprintln!("{}: {}", path.display(), v);
        }
        return Ok(Loaded::Exit(2));
    }
    Ok(Loaded::Program(program))
}

/// Goal terms, or an exit code after reporting the problem.
fn load_goal(text: &str) -> std::result::Result<Vec<Term>, u8> {
    let goals = match parse_goal(text) {
        Ok(g) => g,
        Err(e) => {
            eprintln!("goal:{}", e);
            return Err(1);
        }
    };
    let terms: Vec<Term> = goals.into_iter().map(|g| g.goal).collect();
    let violations = check_so(&terms);
    if !violations.is_empty() {
        for v in violations {
            eprintln!("goal: {}", v);
        }
        return Err(2);
    }
    Ok(terms)
}

fn write_trace(dest: &str, lines: &str) -> Result<()> {
    if dest == "-" {
        std::io::stdout().write_all(lines.as_bytes())?;
    } else {
        fs::write(dest, lines).with_context(|| format!("writing {}", dest))?;
    }
    Ok(())
}

fn print_outcome(o: &Outcome) {
    println!("{}.", o);
}

fn cmd_check(path: &Path) -> Result<u8> {
    Ok(match load_program(path)? {
        Loaded::Exit(code) => code,
        Loaded::Program(p) => {
            println!("{}: {} clauses ok", path.display(), p.clauses.len());
            0
        }
    })
}

fn cmd_run(path: &Path, goal: &str, max_steps: usize, trace: Option<&str>) -> Result<u8> {
    let program = match load_program(path)? {
        Loaded::Program(p) => p,
        Loaded::Exit(code) => return Ok(code),
    };
    let g0 = match load_goal(goal) {
        Ok(g) => g,
        Err(code) => return Ok(code),
    };
    let run = dglp_run(&g0, &program, max_steps)?;
    if let Some(dest) = trace {
        let mut lines = String::new();
        for (seq, e) in run.trace.iter().enumerate() {
            let kind = e.to_string().split(' ').next().unwrap_or_default().to_string();
            let r = TraceRecord { seq: seq as u64, agent: "-".into(), kind, detail: e.to_string(), waited: 0 };
            lines.push_str(&serde_json::to_string(&r)?);
            lines.push('\n');
        }
        write_trace(dest, &lines)?;
    }
    print_outcome(&run.outcome());
    for (v, t) in run.config.binding_report() {
        println!("{} = {}", v, t);
    }
    for g in &run.config.f {
        println!("failed: {}", g.term);
    }
    Ok(match run.status {
        RunStatus::Terminal => 0,
        RunStatus::Deadlock => {
            println!("deadlock");
            for line in run.config.deadlock_report() {
                println!("  {}", line);
            }
            3
        }
        RunStatus::StepLimit => {
            println!("step limit {} reached", max_steps);
            0
        }
    })
}

fn load_scenario(arg: &str) -> Result<Scenario> {
    let path = Path::new(arg);
    if path.is_file() {
        return Ok(Scenario::load(path)?);
    }
    if scenarios::NAMES.contains(&arg) {
        return Ok(scenarios::load(arg));
    }
    bail!("no scenario file or bundled scenario named {}", arg)
}

fn cmd_marun(arg: &str, seed: Option<u64>, policy: Option<Policy>, trace: Option<&str>, validate: bool) -> Result<u8> {
    let mut scenario = match load_scenario(arg) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{:#}", e);
            return Ok(1);
        }
    };
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    if let Some(policy) = policy {
        scenario.policy = policy;
    }
    let run = match run_scenario(&scenario) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("{}", e);
            return Ok(1);
        }
    };
    if let Some(dest) = trace {
        write_trace(dest, &run.trace.to_lines())?;
    }
    let sys = &run.system;
    println!("status: {} after {} events", run.trace.status, run.trace.entries.len());
    for (agent, bindings) in sys.binding_report() {
        for (v, t) in bindings {
            println!("{}: {} = {}", agent, v, t);
        }
    }
    print_outcome(&sys.final_outcome());
    if !validate {
        return Ok(0);
    }
    let report = validate_maglp_trace(&run.trace, &sys.program);
    let hygiene = sys.hygiene_violations();
    println!("validation: {}", report);
    for h in &hygiene {
        println!("hygiene: {}", h);
    }
    Ok(if report.is_valid() && hygiene.is_empty() { 0 } else { 4 })
}

fn cmd_oracle(path: &Path, goal: &str, depth: usize, fault: bool) -> Result<u8> {
    let program = match load_program(path)? {
        Loaded::Program(p) => p,
        Loaded::Exit(code) => return Ok(code),
    };
    let g0 = match load_goal(goal) {
        Ok(g) => g,
        Err(code) => return Ok(code),
    };
    let report = if fault {
        let run = dglp_run(&g0, &program, depth.saturating_mul(64).max(1000))?;
        let mut outcome = run.outcome();
        if outcome.body.pop().is_none() {
            outcome.body.push(Term::atom("spurious"));
        }
        equivalence_with(&outcome, clause_multiset(&run.trace), &program, &g0, depth)?
    } else {
        check_equivalence(&program, &g0, depth)?
    };
    println!("{}", report);
    Ok(match report.verdict {
        Verdict::Pass => 0,
        Verdict::Inconclusive => 5,
        Verdict::Mismatch => 6,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Check { program } => cmd_check(program),
        Command::Run { program, goal, max_steps, trace } => cmd_run(program, goal, *max_steps, trace.as_deref()),
        Command::Marun { scenario, seed, policy, trace, validate } => {
            cmd_marun(scenario, *seed, *policy, trace.as_deref(), *validate)
        }
        Command::Oracle { program, goal, depth, fault } => cmd_oracle(program, goal, *depth, *fault),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {:#}", e);
            ExitCode::from(1)
        }
    }
}
