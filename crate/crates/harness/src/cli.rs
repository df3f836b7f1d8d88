//! Command-line front end.

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use causeval_core::llm::{AgentSpec, LlmError, ENV_API_BASE, ENV_API_KEY, ENV_MODEL};
use clap::{Args, Parser, Subcommand};

use crate::commands::{cmd_evaluate, cmd_noise, cmd_query, cmd_smoke, cmd_truth, Layout};
use crate::{HarnessError, Overrides, RunConfig};

/// Range used by `smoke` when no configuration file is given.
pub const SMOKE_RANGE: i64 = 50;

/// Exit code when `smoke` cannot find endpoint credentials.
pub const EXIT_NO_CREDENTIALS: u8 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "causeval",
    version,
    about = "Causal reasoning evaluation against Boolean causal models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Enumerate the problem domain and write the exact datasets.
    Truth(RunArgs),
    /// Ask the agent every factual and counterfactual question.
    Query(RunArgs),
    /// Compare agent datasets with the truth and write the report.
    Evaluate(RunArgs),
    /// Bootstrap densities under synthetic counterfactual noise.
    Noise(RunArgs),
    /// Small live check against a remote endpoint.
    Smoke(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    problem: Option<String>,
    /// `perfect`, `noisy:<p_f>:<p_cf>[:<seed>]` or `remote[:<model>[@<endpoint>]]`.
    #[arg(long, value_parser = parse_agent)]
    agent: Option<AgentSpec>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_agent(s: &str) -> Result<AgentSpec, String> {
    s.parse().map_err(|e: LlmError| e.to_string())
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            problem: self.problem.clone(),
            agent: self.agent.clone(),
            seed: self.seed,
            out: self.out.clone(),
        }
    }

    fn load(&self) -> Result<RunConfig, HarnessError> {
        RunConfig::load(self.config.as_deref(), &self.overrides())
    }
}

pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(64)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Truth(a) => truth(a),
        Command::Query(a) => query(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Noise(a) => noise(a),
        Command::Smoke(a) => return smoke(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn truth(args: &RunArgs) -> Result<(), HarnessError> {
    let cfg = args.load()?;
    let r = cmd_truth(&cfg)?;
    println!(
        "{}: {} instances, monotone={}, PN={} PS={} (oracle PN={} PS={})",
        r.problem, r.instances, r.monotone, r.estimate.pn, r.estimate.ps, r.oracle_pn, r.oracle_ps
    );
    println!("wrote {}", Layout::new(&cfg).truth_dir().display());
    Ok(())
}

fn query(args: &RunArgs) -> Result<(), HarnessError> {
    let cfg = args.load()?;
    match cmd_query(&cfg) {
        Ok(s) => {
            println!(
                "{}: {} instances x {} replicates from {}, {} unparseable answers",
                s.problem,
                s.instances,
                s.replicates,
                s.agent,
                s.unparseable.total()
            );
            println!("wrote {}", Layout::new(&cfg).query_dir().display());
            Ok(())
        }
        Err(e) => {
            if cfg.agent.identity().starts_with("remote") {
                eprintln!(
                    "answers received so far are in {}; rerunning resumes from there",
                    cfg.cache_path().display()
                );
            }
            Err(e)
        }
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.4}")).unwrap_or_else(|| "n/a".into())
}

fn evaluate(args: &RunArgs) -> Result<(), HarnessError> {
    let cfg = args.load()?;
    let r = cmd_evaluate(&cfg)?;
    println!("{} / {}", r.problem, r.agent);
    println!("  truth     PN={:.4} PS={:.4}", r.truth.pn, r.truth.ps);
    println!(
        "  estimate  PN={} PS={}",
        fmt_opt(r.estimate.map(|e| e.pn)),
        fmt_opt(r.estimate.map(|e| e.ps))
    );
    println!(
        "  FIR={} CIR={}",
        fmt_opt(r.fir.map(|f| f.rate)),
        fmt_opt(r.cir.map(|c| c.pooled.rate))
    );
    if let Some(c) = &r.caveat {
        println!("  note: {c}");
    }
    for n in &r.notes {
        println!("  note: {n}");
    }
    println!("wrote {}", Layout::new(&cfg).report().display());
    Ok(())
}

fn noise(args: &RunArgs) -> Result<(), HarnessError> {
    let cfg = args.load()?;
    let r = cmd_noise(&cfg)?;
    println!(
        "{}: truth PN={:.4} PS={:.4}",
        r.problem, r.truth.pn, r.truth.ps
    );
    for l in &r.levels {
        println!(
            "  flip {:<6} CIR={:.4} PN median={} PS median={}",
            l.flip_prob,
            l.cir.rate,
            fmt_opt(l.pn.map(|s| s.p50)),
            fmt_opt(l.ps.map(|s| s.p50))
        );
    }
    println!("wrote {}", Layout::new(&cfg).noise_report().display());
    Ok(())
}

fn credentials_help() {
    eprintln!(
        "smoke needs a chat-completion endpoint. Set {ENV_API_KEY}, plus {ENV_API_BASE} and \
         {ENV_MODEL} (or pass --agent remote:<model>@<endpoint>)."
    );
}

fn smoke(args: &RunArgs) -> ExitCode {
    let mut overrides = args.overrides();
    if args.config.is_none() {
        overrides.problem.get_or_insert_with(|| "div6".into());
        overrides.seed.get_or_insert(0);
    }
    if overrides.agent.is_none() {
        match "remote".parse::<AgentSpec>() {
            Ok(spec) => overrides.agent = Some(spec),
            Err(LlmError::MissingCredentials(_)) => {
                credentials_help();
                return ExitCode::from(EXIT_NO_CREDENTIALS);
            }
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::FAILURE;
            }
        }
    }
    let mut cfg = match RunConfig::load(args.config.as_deref(), &overrides) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    if args.config.is_none() {
        cfg.range_max.get_or_insert(SMOKE_RANGE);
        cfg.replicates = 1;
    }
    let outcome = match cmd_smoke(&cfg) {
        Ok(o) => o,
        Err(HarnessError::Llm(LlmError::MissingCredentials(_))) => {
            credentials_help();
            return ExitCode::from(EXIT_NO_CREDENTIALS);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    println!("{} on {}", outcome.agent, cfg.problem);
    println!("  FIR={}", fmt_opt(outcome.fir.map(|f| f.rate)));
    println!("  CIR={}", fmt_opt(outcome.cir.map(|c| c.pooled.rate)));
    println!("  PN={} PS={}", fmt_opt(outcome.pn), fmt_opt(outcome.ps));
    println!("  unparseable answers: {}", outcome.unparseable.total());
    println!("published reference on the divisibility problem: GPT-4 PN~0.984 PS~0.505;");
    println!("GPT-3.5 counterfactual error above 25%.");
    ExitCode::SUCCESS
}
