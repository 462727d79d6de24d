//! `seam` command-line tool.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};

use seam_core::costs::{eval, EvalContext, Scene};
use seam_core::fixtures::{self, MockMap, SceneKind};
use seam_core::language::Language;
use seam_core::metrics::{self, JudgmentCorpus};
use seam_core::pipeline::{self, MockClient, PipelineError, RemoteClient, RunConfig, TranslationClient};
use seam_core::retrieval::PartDatabase;
use seam_core::solver::{solve, SolveConfig};

#[derive(Parser)]
#[command(name = "seam", version, about = "Validate, evaluate and solve manipulation cost programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and type-check a program file; prints each stage in canonical form.
    Parse { file: PathBuf },
    /// Evaluate a program on a scene.
    Eval {
        #[arg(long)]
        scene: String,
        #[arg(long)]
        expr: String,
    },
    /// Solve for the gripper pose minimizing a program.
    Solve {
        #[arg(long)]
        scene: String,
        #[arg(long)]
        expr: String,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Look a part description up in a part database.
    Retrieve {
        #[arg(long)]
        db: PathBuf,
        #[arg(long)]
        desc: String,
    },
    /// Tabulate generalizability and comprehensibility per representation.
    Metrics {
        /// Profile file or directory of profile files.
        #[arg(long)]
        profiles: PathBuf,
        /// Judgment corpus.
        #[arg(long)]
        tasks: PathBuf,
        /// Write metrics.csv and metrics.svg here instead of printing CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an instruction end to end and print the task trace.
    Run {
        #[arg(long)]
        scene: String,
        #[arg(long)]
        instruction: String,
        #[arg(long, value_enum, default_value = "mock")]
        client: ClientKind,
        /// Fixture directory (or mock response file) for the mock client.
        #[arg(long, default_value = "fixtures")]
        fixtures: PathBuf,
        /// Remote translation endpoint.
        #[arg(long, env = pipeline::ENDPOINT_ENV)]
        endpoint: Option<String>,
        /// Remote request timeout, seconds.
        #[arg(long, default_value_t = 30)]
        timeout: u64,
        /// Resolve part names through this database instead of exact lookup.
        #[arg(long)]
        parts_db: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Fixture maintenance.
    Fixtures {
        #[command(subcommand)]
        command: FixturesCommand,
    },
}

#[derive(Subcommand)]
enum FixturesCommand {
    /// Write every shipped fixture under a directory.
    Regen {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ClientKind {
    Mock,
    Remote,
}

#[derive(clap::Args)]
struct SolverArgs {
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    max_iterations: Option<usize>,
}

impl SolverArgs {
    fn config(&self) -> SolveConfig {
        let d = SolveConfig::default();
        SolveConfig {
            alpha: self.alpha.unwrap_or(d.alpha),
            beta: self.beta.unwrap_or(d.beta),
            seed: self.seed.unwrap_or(d.seed),
            restarts: self.restarts.unwrap_or(d.restarts),
            max_iterations: self.max_iterations.unwrap_or(d.max_iterations),
            ..d
        }
    }
}

enum Failure {
    Validation(String),
    Solver(String),
    Other(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Other(_) => 1,
            Failure::Validation(_) => 2,
            Failure::Solver(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Validation(m) | Failure::Solver(m) | Failure::Other(m) => m,
        }
    }
}

fn other(e: impl ToString) -> Failure {
    Failure::Other(e.to_string())
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Other(format!("{}: {e}", path.display())))
}

/// A scene file, or a generated fixture written as `kind` or `kind:seed`.
fn load_scene(arg: &str) -> Result<Scene, Failure> {
    let path = Path::new(arg);
    if path.exists() {
        return Scene::from_json(&read(path)?).map_err(|e| Failure::Other(format!("{arg}: {e}")));
    }
    let (kind, seed) = match arg.split_once(':') {
        Some((k, s)) => (k, s.parse().map_err(|_| Failure::Other(format!("bad seed in `{arg}`")))?),
        None => (arg, fixtures::DEFAULT_SEED),
    };
    let kind: SceneKind = kind
        .parse()
        .map_err(|e| Failure::Other(format!("{arg}: no such file, and {e}")))?;
    Ok(fixtures::make_scene(kind, seed))
}

fn load_mock(path: &Path) -> Result<MockMap, Failure> {
    let file = if path.is_dir() { path.join("mock.json") } else { path.to_owned() };
    serde_json::from_str(&read(&file)?).map_err(|e| Failure::Other(format!("{}: {e}", file.display())))
}

fn compile(lang: &Language, source: &str) -> Result<seam_core::language::TypedExpr, Failure> {
    lang.compile(source).map_err(|e| Failure::Validation(e.to_string()))
}

fn run(cli: Cli) -> Result<(), Failure> {
    let lang = Language::default();
    match cli.command {
        Command::Parse { file } => {
            let source = read(&file)?;
            let stages = seam_core::language::parse_stages(&source).map_err(|e| Failure::Validation(e.to_string()))?;
            for stage in stages {
                let typed = lang.check(&stage).map_err(|e| Failure::Validation(e.to_string()))?;
                println!("{}\t{stage}", typed.sort);
            }
        }
        Command::Eval { scene, expr } => {
            let scene = load_scene(&scene)?;
            let typed = compile(&lang, &expr)?;
            let cost = eval(&typed, &EvalContext::new(&scene)).map_err(other)?;
            println!("{}", cost.value());
        }
        Command::Solve { scene, expr, solver } => {
            let scene = load_scene(&scene)?;
            let typed = compile(&lang, &expr)?;
            let result = solve(&typed, &scene, &solver.config()).map_err(|e| Failure::Solver(e.to_string()))?;
            println!("{}", serde_json::to_string_pretty(&result).map_err(other)?);
        }
        Command::Retrieve { db, desc } => {
            let db = PartDatabase::from_json(&read(&db)?).map_err(other)?;
            let hit = db.retrieve(&desc).map_err(other)?;
            println!("{}\t{}\t{}", hit.index, hit.matched_phrase, hit.distance);
        }
        Command::Metrics { profiles, tasks, out } => {
            let mut profiles = metrics::load_profiles(&profiles).map_err(other)?;
            let corpus = JudgmentCorpus::load(&tasks).map_err(other)?;
            corpus.attach(&mut profiles);
            let rows = metrics::rows(&profiles, corpus.task_count).map_err(other)?;
            let csv = metrics::to_csv(&rows);
            match out {
                Some(dir) => {
                    std::fs::create_dir_all(&dir).map_err(other)?;
                    std::fs::write(dir.join("metrics.csv"), &csv).map_err(other)?;
                    std::fs::write(dir.join("metrics.svg"), metrics::to_svg(&rows)).map_err(other)?;
                }
                None => print!("{csv}"),
            }
        }
        Command::Run {
            scene,
            instruction,
            client,
            fixtures,
            endpoint,
            timeout,
            parts_db,
            solver,
        } => {
            let scene = load_scene(&scene)?;
            let client: Box<dyn TranslationClient> = match client {
                ClientKind::Mock => Box::new(MockClient::new(load_mock(&fixtures)?)),
                ClientKind::Remote => {
                    let endpoint = endpoint
                        .ok_or_else(|| Failure::Other(format!("remote client needs --endpoint or {}", pipeline::ENDPOINT_ENV)))?;
                    Box::new(RemoteClient::new(endpoint, Duration::from_secs(timeout)))
                }
            };
            let parts = match parts_db {
                Some(p) => Some(PartDatabase::from_json(&read(&p)?).map_err(other)?),
                None => None,
            };
            let cfg = RunConfig {
                solve: solver.config(),
                parts,
                ..RunConfig::default()
            };
            match pipeline::run_task(&instruction, &scene, client.as_ref(), &fixtures::prompt_template(), &cfg) {
                Ok(trace) => {
                    print!("{}", trace.to_json());
                    if let Some(stage) = trace.stages.iter().find(|s| s.error.is_some()) {
                        return Err(Failure::Solver(stage.error.clone().unwrap_or_default()));
                    }
                }
                Err(PipelineError::TranslationFailed { trace }) => {
                    print!("{}", trace.to_json());
                    return Err(Failure::Validation(format!(
                        "no valid program after {} attempts",
                        trace.candidates.len()
                    )));
                }
                Err(e) => return Err(other(e)),
            }
        }
        Command::Fixtures {
            command: FixturesCommand::Regen { out },
        } => {
            for file in fixtures::regenerate(&out).map_err(other)? {
                println!("{}", out.join(file).display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
