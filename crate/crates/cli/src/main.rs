//! Scenario-driven batch runner for the inequality toolkit.
//!
//! ```text
//! varineq run <config>       execute every job in the config
//! varineq sweep <config>     execute only the sweep jobs
//! varineq dual <config>      execute only the dual jobs
//! varineq evolve <config>    execute only the evolve jobs
//! varineq spectrum <config>  execute only the spectrum jobs
//! ```
//!
//! Flags: `--strict`, `--seed <u64>`, `--tol <float>`, `--out <dir>`.
//! `VARINEQ_THREADS` caps the worker pool. Exit codes: 0 ok,
//! 1 violation/invalid, 2 usage or parse failure.

mod config;
mod jobs;
mod report;

use std::collections::VecDeque;
use std::process::ExitCode;
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use config::{JobKind, RunConfig};
use jobs::{Globals, JobOutcome};

const USAGE: &str = "\
varineq - numerical verification of weighted variance inequalities

USAGE:
  varineq <run|sweep|dual|evolve|spectrum> <config> [OPTIONS]

OPTIONS:
  --strict        fail on paper-asserted-only violations and bad guards
  --seed <u64>    override the config seed
  --tol <float>   override the quadrature tolerance
  --out <dir>     override the output directory

ENVIRONMENT:
  VARINEQ_THREADS  caps the worker pool size

EXIT CODES:
  0 all jobs passed    1 violation or invalid job    2 usage/parse error
";

struct CliArgs {
    command: String,
    config_path: String,
    strict: Option<bool>,
    seed: Option<u64>,
    tol: Option<f64>,
    out: Option<String>,
}

fn parse_args(argv: &[String]) -> Result<CliArgs, String> {
    if argv.len() < 2 {
        return Err("missing subcommand and config path".into());
    }
    let command = argv[0].clone();
    if !["run", "sweep", "dual", "evolve", "spectrum"].contains(&command.as_str()) {
        return Err(format!("unknown subcommand '{command}'"));
    }
    let config_path = argv[1].clone();
    let mut args = CliArgs {
        command,
        config_path,
        strict: None,
        seed: None,
        tol: None,
        out: None,
    };
    let mut i = 2;
    while i < argv.len() {
        match argv[i].as_str() {
            "--strict" => args.strict = Some(true),
            "--seed" => {
                i += 1;
                let v = argv.get(i).ok_or("--seed needs a value")?;
                args.seed = Some(v.parse().map_err(|_| format!("bad seed '{v}'"))?);
            }
            "--tol" => {
                i += 1;
                let v = argv.get(i).ok_or("--tol needs a value")?;
                let t: f64 = v.parse().map_err(|_| format!("bad tol '{v}'"))?;
                if !(t > 0.0) {
                    return Err("tol must be positive".into());
                }
                args.tol = Some(t);
            }
            "--out" => {
                i += 1;
                args.out = Some(argv.get(i).ok_or("--out needs a value")?.clone());
            }
            other => return Err(format!("unknown flag '{other}'")),
        }
        i += 1;
    }
    Ok(args)
}

fn pool_size(job_count: usize) -> usize {
    let cap = std::env::var("VARINEQ_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0);
    let hw = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    cap.unwrap_or(hw).min(job_count).max(1)
}

/// Runs the selected jobs on a fixed-size worker pool. Outcomes are sorted
/// by id afterwards, so the pool size never affects the report.
fn execute(cfg: &RunConfig, kind_filter: Option<JobKind>) -> Vec<JobOutcome> {
    let globals = Globals {
        seed: cfg.seed,
        tol: cfg.tol,
        strict: cfg.strict,
    };
    let selected: Vec<&config::JobSpec> = cfg
        .jobs
        .iter()
        .filter(|j| kind_filter.map(|k| j.kind == k).unwrap_or(true))
        .collect();
    if selected.is_empty() {
        return Vec::new();
    }
    let queue: Mutex<VecDeque<&config::JobSpec>> = Mutex::new(selected.iter().copied().collect());
    let results: Mutex<Vec<JobOutcome>> = Mutex::new(Vec::with_capacity(selected.len()));
    let workers = pool_size(selected.len());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let job = {
                    let mut q = queue.lock().expect("queue lock");
                    q.pop_front()
                };
                match job {
                    Some(spec) => {
                        let outcome = jobs::run_job(spec, &globals);
                        results.lock().expect("results lock").push(outcome);
                    }
                    None => break,
                }
            });
        }
    });
    let mut out = results.into_inner().expect("results");
    out.sort_by(|a, b| a.id.cmp(&b.id));
    out
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let args = match parse_args(&argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}\n\n{USAGE}");
            return ExitCode::from(2);
        }
    };

    let text = match std::fs::read_to_string(&args.config_path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read '{}': {e}", args.config_path);
            return ExitCode::from(2);
        }
    };
    let mut cfg = match config::parse(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(t) = args.tol {
        cfg.tol = Some(t);
    }
    if let Some(o) = args.out {
        cfg.out = o;
    }
    if args.strict == Some(true) {
        cfg.strict = true;
    }

    let filter = match args.command.as_str() {
        "run" => None,
        "sweep" => Some(JobKind::Sweep),
        "dual" => Some(JobKind::Dual),
        "evolve" => Some(JobKind::Evolve),
        "spectrum" => Some(JobKind::Spectrum),
        _ => unreachable!("validated above"),
    };

    let outcomes = execute(&cfg, filter);
    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| format!("{}", d.as_secs()))
        .unwrap_or_else(|_| "0".to_string());
    let run_report = report::assemble(&cfg, &outcomes, &timestamp);
    if let Err(e) = report::validate(&run_report.json) {
        eprintln!("internal error: report failed schema validation: {e}");
        return ExitCode::from(2);
    }
    match report::write_outputs(&cfg.out, &run_report, &outcomes) {
        Ok(path) => {
            for o in &outcomes {
                let status = serde_json::to_value(o.status)
                    .ok()
                    .and_then(|v| v.as_str().map(String::from))
                    .unwrap_or_else(|| format!("{:?}", o.status));
                let note = if o.waived { " (waived)" } else { "" };
                println!("{:<40} {}{}", o.id, status, note);
            }
            println!("report: {}", path.display());
        }
        Err(e) => {
            eprintln!("error: cannot write outputs: {e}");
            return ExitCode::from(2);
        }
    }
    ExitCode::from(run_report.exit_code as u8)
}
