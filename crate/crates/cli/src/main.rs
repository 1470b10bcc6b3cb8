use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};

use acpstep_core::analysis::analyze;
use acpstep_core::frontend::load;
use acpstep_core::semantics::{is_answer_set, solve_all, Strategy};
use acpstep_core::{Execution, Interpretation, Limits};
use acpstep_service::replay::{diff, expected_report, replay, report, script_actions};
use acpstep_service::{ErrorCode, ServiceError, SessionStore, Settings};

#[derive(Parser)]
#[command(name = "acpstep", version, about = "Stepping debugger for abstract-constraint answer-set programs")]
struct Cli {
    /// Largest number of open atoms the solver may branch on.
    #[arg(long, global = true, env = "ACPSTEP_ATOM_CAP")]
    atom_cap: Option<usize>,
    /// Largest number of unfounded sets tracked per state.
    #[arg(long, global = true, env = "ACPSTEP_UNFOUNDED_CAP")]
    unfounded_cap: Option<usize>,
    /// Run every kernel on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and ground a program.
    Ground {
        file: PathBuf,
        /// Print the ground rules with their source statements.
        #[arg(long)]
        emit_ground: bool,
    },
    /// Print answer sets, one per line.
    Solve {
        file: PathBuf,
        #[arg(long)]
        max_models: Option<usize>,
    },
    /// Decide whether an interpretation is an answer set.
    Check {
        file: PathBuf,
        /// Comma-separated atoms, e.g. "a,b(1)".
        #[arg(long)]
        interpretation: String,
        #[arg(long, value_enum, default_value_t = CheckStrategy::Auto)]
        strategy: CheckStrategy,
    },
    /// Print the dependency analysis as JSON.
    Analyze { file: PathBuf },
    /// Replay a step script or a saved session's edge log and print every node's state.
    Replay {
        file: PathBuf,
        #[arg(long)]
        script: PathBuf,
        /// A previous replay report or saved session to compare against.
        #[arg(long)]
        expect: Option<PathBuf>,
        /// Also write the session file reached by the replay.
        #[arg(long)]
        save: Option<PathBuf>,
    },
    /// Serve the HTTP/WebSocket protocol.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CheckStrategy {
    Auto,
    ConditionO,
    Unfounded,
    Both,
}

const NEGATIVE: u8 = 1;
const USAGE: u8 = 2;
const CAP: u8 = 3;

/// An error and the exit code it maps to.
struct Failure(u8, anyhow::Error);

impl From<acpstep_core::Error> for Failure {
    fn from(e: acpstep_core::Error) -> Self {
        let code = if e.is_cap() { CAP } else { USAGE };
        Failure(code, e.into())
    }
}

impl From<ServiceError> for Failure {
    fn from(e: ServiceError) -> Self {
        let code = match e.code {
            ErrorCode::CapExhausted => CAP,
            ErrorCode::InvalidStep
            | ErrorCode::NoAnswerSet
            | ErrorCode::UnknownRule
            | ErrorCode::UnknownNode
            | ErrorCode::NotApplicable
            | ErrorCode::PreconditionViolated
            | ErrorCode::InvalidState => NEGATIVE,
            _ => USAGE,
        };
        Failure(code, e.into())
    }
}

fn usage(e: anyhow::Error) -> Failure {
    Failure(USAGE, e)
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(usage)
}

fn limits(cli: &Cli) -> Limits {
    let mut l = Limits::default();
    if let Some(n) = cli.atom_cap {
        l.atoms = n;
    }
    if let Some(n) = cli.unfounded_cap {
        l.unfounded = n;
    }
    if cli.sequential {
        l.execution = Execution::Sequential;
    }
    l
}

fn run(cli: &Cli) -> Result<u8, Failure> {
    let limits = limits(cli);
    match &cli.command {
        Command::Ground { file, emit_ground } => {
            let (sp, gr) = load(&read(file)?, &limits)?;
            for d in &gr.diagnostics {
                eprintln!("warning: {}", d.message);
            }
            if *emit_ground {
                print!("{}", gr.emit());
            } else {
                println!(
                    "{} statements, {} ground rules, {} atoms",
                    sp.len(),
                    gr.program.len(),
                    gr.program.universe().len()
                );
            }
            Ok(0)
        }
        Command::Solve { file, max_models } => {
            let (_, gr) = load(&read(file)?, &limits)?;
            let models = solve_all(&gr.program, *max_models, &limits)?;
            for m in &models {
                println!("{m}");
            }
            Ok(if models.is_empty() { NEGATIVE } else { 0 })
        }
        Command::Check {
            file,
            interpretation,
            strategy,
        } => {
            let (_, gr) = load(&read(file)?, &limits)?;
            let i = Interpretation::parse_list(interpretation)?;
            let strategy = match strategy {
                CheckStrategy::Auto => Strategy::Auto,
                CheckStrategy::ConditionO => Strategy::ConditionO,
                CheckStrategy::Unfounded => Strategy::Unfounded,
                CheckStrategy::Both => Strategy::Both,
            };
            let r = is_answer_set(&gr.program, &i, strategy, &limits)?;
            println!("{r}");
            Ok(if r.is_answer_set { 0 } else { NEGATIVE })
        }
        Command::Analyze { file } => {
            let (_, gr) = load(&read(file)?, &limits)?;
            let report = analyze(&gr.program, &limits)?;
            println!("{}", serde_json::to_string_pretty(&report).expect("reports serialize"));
            Ok(0)
        }
        Command::Replay {
            file,
            script,
            expect,
            save,
        } => {
            let actions = script_actions(&read(script)?)?;
            let session = replay(&read(file)?, Settings { limits }, &actions)?;
            let actual = report(&session)?;
            println!("{}", serde_json::to_string_pretty(&actual).expect("reports serialize"));
            if let Some(path) = save {
                std::fs::write(path, session.save_bytes())
                    .with_context(|| format!("cannot write {}", path.display()))
                    .map_err(usage)?;
            }
            if let Some(path) = expect {
                let expected = expected_report(&read(path)?)?;
                if let Some(d) = diff(&expected, &actual) {
                    return Err(Failure(NEGATIVE, anyhow!("replay differs from {}: {d}", path.display())));
                }
            }
            Ok(0)
        }
        Command::Serve { port, host } => {
            let rt = tokio::runtime::Runtime::new()
                .context("cannot start the runtime")
                .map_err(usage)?;
            rt.block_on(async {
                let listener = tokio::net::TcpListener::bind((host.as_str(), *port))
                    .await
                    .with_context(|| format!("cannot listen on {host}:{port}"))
                    .map_err(usage)?;
                let addr = listener.local_addr().map_err(|e| usage(e.into()))?;
                println!("listening on http://{addr}");
                acpstep_service::serve(listener, Arc::new(SessionStore::default()))
                    .await
                    .map_err(|e| usage(e.into()))?;
                Ok(0)
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}
