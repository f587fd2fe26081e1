use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};

use sessionspan::bench::{self, compare, CompareError, CORPUS_ENV};
use sessionspan::check::check_program;
use sessionspan::engine::sched::Policy;
use sessionspan::engine::{run, RunConfig, Semantics, Value, DEFAULT_MAX_STEPS};
use sessionspan::ir::parser::parse;
use sessionspan::ir::printer::print;
use sessionspan::ir::Program;
use sessionspan::translate::translate_traced;

/// Exit codes.
const OK: u8 = 0;
const TYPE_ERROR: u8 = 1;
const INPUT_ERROR: u8 = 2;
const VIOLATION: u8 = 6;

#[derive(Parser)]
#[command(name = "sessionspan", version, about = "Session-typed IR: check, run, translate, compare")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Type-check a program.
    Check { file: PathBuf },
    /// Run a program and print its cost report.
    Run {
        file: PathBuf,
        /// Defaults to non-blocking for programs using asynchronous receives.
        #[arg(long, value_enum)]
        semantics: Option<SemArg>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "round-robin")]
        policy: Policy,
        #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
        max_steps: u64,
        /// Write one JSON line per step to stderr.
        #[arg(long)]
        trace: bool,
        #[arg(long)]
        json: bool,
        /// Entry argument, `name=value`.
        #[arg(long = "arg", value_parser = parse_arg)]
        args: Vec<(String, Value)>,
        /// Skip the type checker.
        #[arg(long = "unsafe")]
        unchecked: bool,
    },
    /// Translate a blocking program to non-blocking form.
    Translate {
        file: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Print the request table at each statement to stderr.
        #[arg(long)]
        dump_sigma: bool,
    },
    /// Run a program blocking and its translation non-blocking.
    Compare {
        file: PathBuf,
        /// Seeds per scheduling policy; every schedule must agree.
        #[arg(long, default_value_t = 5)]
        seeds: u64,
        #[arg(long = "arg", value_parser = parse_arg)]
        args: Vec<(String, Value)>,
        #[arg(long)]
        json: bool,
    },
    /// Compare every corpus case. Costs are engine counts, not times.
    Bench {
        #[arg(long, env = CORPUS_ENV, default_value = "corpus")]
        corpus: PathBuf,
        /// Write bench.csv or bench.json here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long, default_value_t = 2)]
        seeds: u64,
        /// Run cases on one thread.
        #[arg(long)]
        sequential: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SemArg {
    Blocking,
    Nonblocking,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

fn parse_arg(s: &str) -> Result<(String, Value), String> {
    let (k, v) = s.split_once('=').ok_or("expected name=value")?;
    let v = match v {
        "true" => Value::Bool(true),
        "false" => Value::Bool(false),
        _ => Value::Int(v.parse().map_err(|_| format!("`{v}` is not an int or bool"))?),
    };
    Ok((k.to_string(), v))
}

/// An error with the exit code it maps to.
struct Fail(u8, anyhow::Error);

impl<E: Into<anyhow::Error>> From<E> for Fail {
    fn from(e: E) -> Self {
        Fail(INPUT_ERROR, e.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.cmd) {
        Ok(code) => ExitCode::from(code),
        Err(Fail(code, e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<u8, Fail> {
    match cmd {
        Cmd::Check { file } => {
            let prog = load(&file)?;
            checked(&prog, &file)?;
            println!("{}: ok", file.display());
            Ok(OK)
        }
        Cmd::Run {
            file,
            semantics,
            seed,
            policy,
            max_steps,
            trace,
            json,
            args,
            unchecked,
        } => {
            let prog = load(&file)?;
            if !unchecked {
                checked(&prog, &file)?;
            }
            let semantics = match semantics {
                Some(SemArg::Blocking) => Semantics::Blocking,
                Some(SemArg::Nonblocking) => Semantics::NonBlocking,
                None if prog.is_blocking_form() => Semantics::Blocking,
                None => Semantics::NonBlocking,
            };
            let cfg = RunConfig {
                semantics,
                policy,
                seed,
                max_steps,
                trace,
                args: args.into_iter().collect(),
            };
            let res = run(&prog, &cfg);
            if trace {
                let mut err = std::io::stderr().lock();
                for ev in &res.trace {
                    let _ = writeln!(err, "{}", serde_json::to_string(ev)?);
                }
            }
            let r = &res.report;
            if json {
                println!("{}", r.to_json());
            } else {
                println!("outcome: {:?}", r.outcome);
                println!("span: {}", r.span);
                println!("work: {}", r.total_work);
                println!("steps: {}", r.steps);
            }
            if let Some(e) = &r.error {
                eprintln!("error: {e}");
            }
            Ok(r.outcome.exit_code() as u8)
        }
        Cmd::Translate {
            file,
            output,
            dump_sigma,
        } => {
            let prog = load(&file)?;
            checked(&prog, &file)?;
            let (out, steps) = translate_traced(&prog)?;
            if dump_sigma {
                let mut err = std::io::stderr().lock();
                for s in &steps {
                    let _ = writeln!(err, "{}:{}: {}  {} -> {}", s.proc, s.line, s.stmt, s.before, s.after);
                }
            }
            let text = print(&out);
            match output {
                Some(path) => fs::write(&path, text).with_context(|| path.display().to_string())?,
                None => print!("{text}"),
            }
            Ok(OK)
        }
        Cmd::Compare {
            file,
            seeds,
            args,
            json,
        } => {
            let prog = load(&file)?;
            checked(&prog, &file)?;
            let args: BTreeMap<String, Value> = args.into_iter().collect();
            let c = compare(&prog, &args, seeds).map_err(|e| {
                let code = match &e {
                    CompareError::Run { outcome, .. } => outcome.exit_code() as u8,
                    CompareError::Nondeterministic { .. } => VIOLATION,
                    _ => INPUT_ERROR,
                };
                Fail(code, anyhow!(e))
            })?;
            if json {
                let v = serde_json::json!({
                    "blocking": c.blocking,
                    "nonblocking": c.nonblocking,
                    "span_ratio": c.span_ratio(),
                    "work_equal": c.work_equal(),
                    "span_dominated": c.span_dominated(),
                });
                println!("{}", serde_json::to_string_pretty(&v)?);
            } else {
                println!("span: blocking {} nonblocking {}", c.blocking.span, c.nonblocking.span);
                println!("work: blocking {} nonblocking {}", c.blocking.total_work, c.nonblocking.total_work);
                println!("ratio: {:.4}", c.span_ratio());
            }
            if !c.holds() {
                eprintln!("violation: span increased or work changed");
                return Ok(VIOLATION);
            }
            Ok(OK)
        }
        Cmd::Bench {
            corpus,
            out,
            format,
            seeds,
            sequential,
        } => {
            let cases = bench::load_cases(&corpus)?;
            let report = if sequential {
                bench::sweep_seq(&corpus, &cases, seeds)
            } else {
                bench::sweep(&corpus, &cases, seeds)
            };
            let (text, name) = match format {
                Format::Csv => (report.to_csv(), "bench.csv"),
                Format::Json => (report.to_json() + "\n", "bench.json"),
            };
            match out {
                Some(dir) => {
                    fs::create_dir_all(&dir).with_context(|| dir.display().to_string())?;
                    let path = dir.join(name);
                    fs::write(&path, text).with_context(|| path.display().to_string())?;
                }
                None => print!("{text}"),
            }
            for f in &report.failures {
                let n = f.n.map(|n| format!(" n={n}")).unwrap_or_default();
                eprintln!("FAIL {}{n}: {}", f.name, f.reason);
            }
            Ok(if report.failures.is_empty() { OK } else { TYPE_ERROR })
        }
    }
}

fn load(path: &Path) -> Result<Program, Fail> {
    let src = fs::read_to_string(path).with_context(|| path.display().to_string())?;
    parse(&src).map_err(|e| Fail(INPUT_ERROR, anyhow!("{}:{e}", path.display())))
}

fn checked(prog: &Program, path: &Path) -> Result<(), Fail> {
    let diags = check_program(prog);
    if diags.is_empty() {
        return Ok(());
    }
    let file = path.display().to_string();
    for d in &diags {
        eprintln!("{}", d.render(&file));
    }
    Err(Fail(TYPE_ERROR, anyhow!("{} type error(s)", diags.len())))
}
