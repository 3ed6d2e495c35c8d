use std::io::{BufRead, BufReader, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use explain_loop::eval::{feedback_stats, read_annotations, render_feedback_stats, summarize_sessions};
use explain_loop::gateway::ModelConfig;
use explain_loop::session::{parse_transcript, JsonlSink, ManualClock, SkipReason, SystemClock};
use explain_loop::task::load_corpus_auto;
use explain_loop::{
    compute_metrics, render_report, DifficultyLevel, EngineSettings, GatewayMode, ReportFormat, SessionMode,
};
use explain_loop_cli::batch::{run_batch, ScriptedRun};
use explain_loop_cli::server::{router, spawn_ticker, AppState};
use explain_loop_cli::setup::{build_engine, build_gateway, load_tasks, read_json, CliError, GatewayChoice};

#[derive(Parser)]
#[command(
    name = "explain-loop",
    version,
    about = "Explain-then-refine code generation sessions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Corpus maintenance.
    Corpus {
        #[command(subcommand)]
        command: CorpusCommand,
    },
    /// Interactive sessions on the terminal.
    Session {
        #[command(subcommand)]
        command: SessionCommand,
    },
    /// Run scripted sessions and print a metrics report.
    Batch(BatchArgs),
    /// Compute metrics from transcript files.
    Report(ReportArgs),
    /// Cassette maintenance.
    Cassette {
        #[command(subcommand)]
        command: CassetteCommand,
    },
    /// Serve the HTTP API.
    Serve(ServeArgs),
}

#[derive(Subcommand)]
enum CorpusCommand {
    /// Load and check every corpus; print one summary line each.
    Validate {
        #[arg(long = "corpus", required = true)]
        corpus: Vec<PathBuf>,
    },
}

#[derive(Subcommand)]
enum SessionCommand {
    /// Work on one task. Type feedback, `:complete`, or `:skip unclear|unsolvable`.
    Run(SessionRunArgs),
}

#[derive(Subcommand)]
enum CassetteCommand {
    /// Run scripts in record mode so every prompt they make is stored.
    Record(RecordArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Live,
    Replay,
    Record,
}

#[derive(Clone, Copy, ValueEnum)]
enum SessionModeArg {
    IntelliExplain,
    Vanilla,
}

impl From<SessionModeArg> for SessionMode {
    fn from(m: SessionModeArg) -> Self {
        match m {
            SessionModeArg::IntelliExplain => SessionMode::IntelliExplain,
            SessionModeArg::Vanilla => SessionMode::Vanilla,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Plain,
    Delimited,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Plain => ReportFormat::PlainTable,
            FormatArg::Delimited => ReportFormat::DelimitedText,
        }
    }
}

/// Options shared by everything that talks to a model. The provider
/// credential is read from the environment variable named by the model
/// config (OPENAI_API_KEY), never from a flag.
#[derive(Args, Clone)]
struct EngineArgs {
    #[arg(long = "corpus", required = true)]
    corpus: Vec<PathBuf>,
    #[arg(long)]
    cassette: Option<PathBuf>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Shorthand for `--mode replay`.
    #[arg(long, conflicts_with = "mode")]
    replay: bool,
    #[arg(long)]
    deadline_ms: Option<u64>,
    #[arg(long)]
    max_turns: Option<usize>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    endpoint: Option<String>,
}

impl EngineArgs {
    fn gateway_mode(&self, default: GatewayMode) -> GatewayMode {
        match (self.replay, self.mode) {
            (true, _) | (_, Some(ModeArg::Replay)) => GatewayMode::Replay,
            (_, Some(ModeArg::Live)) => GatewayMode::Live,
            (_, Some(ModeArg::Record)) => GatewayMode::RecordThenReplay,
            _ => default,
        }
    }

    fn settings(&self, mode: GatewayMode) -> EngineSettings {
        let mut s = EngineSettings {
            gateway_mode: mode,
            ..EngineSettings::default()
        };
        if let Some(d) = self.deadline_ms {
            s.deadline_ms = d;
        }
        if let Some(m) = self.max_turns {
            s.max_turns = m;
        }
        let mut model = ModelConfig::default();
        if let Some(name) = &self.model {
            model.model_name = name.clone();
        }
        if let Some(url) = &self.endpoint {
            model.endpoint = url.clone();
        }
        s.model = model;
        s
    }
}

#[derive(Args)]
struct SessionRunArgs {
    #[command(flatten)]
    engine: EngineArgs,
    #[arg(long)]
    task: String,
    #[arg(long, value_enum, default_value = "intelli-explain")]
    session_mode: SessionModeArg,
    /// Append the transcript here.
    #[arg(long)]
    transcript: Option<PathBuf>,
}

#[derive(Args)]
struct BatchArgs {
    #[command(flatten)]
    engine: EngineArgs,
    /// JSON array of scripted runs.
    #[arg(long)]
    runs: PathBuf,
    /// Write the transcript (JSONL) here.
    #[arg(long)]
    transcript_out: Option<PathBuf>,
    /// Write per-run results (JSON) here.
    #[arg(long)]
    results_out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "plain")]
    report_format: FormatArg,
}

#[derive(Args)]
struct RecordArgs {
    #[command(flatten)]
    batch: BatchArgs,
    /// JSON array of reply strings to record instead of calling the provider.
    #[arg(long)]
    scripted_responses: Option<PathBuf>,
    /// Re-record prompts that are already in the cassette.
    #[arg(long)]
    overwrite: bool,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long = "corpus", required = true)]
    corpus: Vec<PathBuf>,
    #[arg(long = "transcript", required = true)]
    transcripts: Vec<PathBuf>,
    /// JSONL feedback annotations to aggregate as well.
    #[arg(long)]
    annotations: Option<PathBuf>,
    #[arg(long, value_enum)]
    session_mode: Option<SessionModeArg>,
    #[arg(long, value_enum, default_value = "plain")]
    report_format: FormatArg,
}

#[derive(Args)]
struct ServeArgs {
    #[command(flatten)]
    engine: EngineArgs,
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: SocketAddr,
}

fn create_file(path: &Path) -> Result<std::fs::File, CliError> {
    std::fs::File::create(path).map_err(CliError::io(path))
}

fn corpus_validate(paths: &[PathBuf]) -> Result<(), CliError> {
    let mut out = std::io::stdout().lock();
    for p in paths {
        let (origin, tasks) = load_corpus_auto(p)?;
        let count = |l: DifficultyLevel| {
            tasks
                .iter()
                .filter(|t| t.difficulty.as_ref().is_some_and(|d| d.level == l))
                .count()
        };
        let line = serde_json::json!({
            "corpus": p.display().to_string(),
            "origin": origin,
            "tasks": tasks.len(),
            "easy": count(DifficultyLevel::Easy),
            "medium": count(DifficultyLevel::Medium),
            "hard": count(DifficultyLevel::Hard),
        });
        let _ = writeln!(out, "{line}");
    }
    Ok(())
}

fn batch(args: &BatchArgs, mode: GatewayMode, choice: GatewayChoice<'_>) -> Result<(), CliError> {
    let tasks = load_tasks(&args.engine.corpus)?;
    let runs: Vec<ScriptedRun> = read_json(&args.runs)?;
    let clock = Arc::new(ManualClock::new(0));
    let engine = build_engine(build_gateway(choice)?, clock.clone(), args.engine.settings(mode));
    let outcome = match &args.transcript_out {
        Some(path) => {
            let mut sink = JsonlSink::new(std::io::BufWriter::new(create_file(path)?));
            let outcome = run_batch(&engine, &clock, &tasks, &runs, &mut sink)?;
            sink.finish().map_err(CliError::io(path))?;
            outcome
        }
        None => run_batch(&engine, &clock, &tasks, &runs, &mut explain_loop::session::NullSink)?,
    };
    if let Some(path) = &args.results_out {
        let text = serde_json::to_string_pretty(&outcome.runs).expect("results serialize");
        std::fs::write(path, text + "\n").map_err(CliError::io(path))?;
    }
    for r in &outcome.runs {
        if let Some(e) = &r.error {
            tracing::warn!(task = %r.task_id, "run failed: {e}");
        }
    }
    print!("{}", render_report(&outcome.report, args.report_format.into()));
    Ok(())
}

fn report(args: &ReportArgs) -> Result<(), CliError> {
    let tasks = load_tasks(&args.corpus)?;
    let mut events = Vec::new();
    for p in &args.transcripts {
        let file = std::fs::File::open(p).map_err(CliError::io(p))?;
        events.extend(parse_transcript(BufReader::new(file))?);
    }
    if let Some(mode) = args.session_mode {
        let mode = SessionMode::from(mode);
        let keep: std::collections::HashSet<String> = summarize_sessions(&events)?
            .into_iter()
            .filter(|s| s.mode == mode)
            .map(|s| s.session_id)
            .collect();
        events.retain(|e| keep.contains(&e.session_id));
    }
    let format = ReportFormat::from(args.report_format);
    let metrics = compute_metrics(&events, &tasks)?;
    print!("{}", render_report(&metrics, format));
    if let Some(p) = &args.annotations {
        let file = std::fs::File::open(p).map_err(CliError::io(p))?;
        let annotations = read_annotations(BufReader::new(file))?;
        let stats = feedback_stats(&annotations, &summarize_sessions(&events)?)?;
        print!("\n{}", render_feedback_stats(&stats, format));
    }
    Ok(())
}

fn print_turn(session: &explain_loop::Session) {
    if let Some(n) = &session.notice {
        println!("! {}", n.message);
    }
    let Some(turn) = session.latest_turn() else {
        return;
    };
    println!("--- turn {} ---\n{}", turn.index, turn.code);
    if let Some(exec) = &turn.execution {
        println!("--- execution: {:?} ---", exec.status);
        if !exec.columns.is_empty() {
            println!("{}", exec.columns.join(" | "));
        }
        for row in exec.sql_rows.iter().take(20) {
            println!("{}", row.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" | "));
        }
        for case in &exec.case_results {
            println!("case {}: {}", case.index, case.detail);
        }
    }
    if !turn.explanation.is_empty() {
        println!("--- explanation ---\n{}", turn.explanation);
    } else if turn.execution.is_none() {
        println!("--- reply ---\n{}", turn.reply);
    }
}

fn session_run(args: &SessionRunArgs) -> Result<(), CliError> {
    let tasks = load_tasks(&args.engine.corpus)?;
    let task = tasks
        .into_iter()
        .find(|t| t.task_id == args.task)
        .ok_or_else(|| CliError::UnknownTask(args.task.clone()))?;
    let mode = args.engine.gateway_mode(GatewayMode::Live);
    let gateway = build_gateway(GatewayChoice {
        mode,
        cassette: args.engine.cassette.as_deref(),
        overwrite: false,
        scripted: None,
    })?;
    let engine = build_engine(gateway, Arc::new(SystemClock), args.engine.settings(mode));
    let mut sink: Box<dyn explain_loop::session::EventSink> = match &args.transcript {
        Some(p) => {
            let file = std::fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(p)
                .map_err(CliError::io(p))?;
            Box::new(JsonlSink::new(file))
        }
        None => Box::new(explain_loop::session::NullSink),
    };
    println!("{}\n", task.question);
    let mut session = engine
        .start_session(task, args.session_mode.into(), sink.as_mut())
        .map_err(|e| CliError::Usage(e.to_string()))?;
    print_turn(&session);
    let stdin = std::io::stdin();
    let mut lines = stdin.lock().lines();
    while !session.state.is_terminal() {
        print!("> ");
        let _ = std::io::stdout().flush();
        let Some(Ok(line)) = lines.next() else {
            break;
        };
        let line = line.trim();
        let result = match line {
            ":complete" => engine.complete_session(&mut session, sink.as_mut()),
            ":skip unclear" => engine.skip_session(&mut session, SkipReason::UnclearQuestion, sink.as_mut()),
            ":skip unsolvable" => engine.skip_session(&mut session, SkipReason::Unsolvable, sink.as_mut()),
            text => engine
                .submit_feedback(&mut session, text, sink.as_mut())
                .inspect(|_| print_turn(&session)),
        };
        if let Err(e) = result {
            println!("! {e}");
        }
    }
    if let Some(o) = session.outcome {
        println!("{}", serde_json::to_string(&o).expect("outcome serializes"));
    }
    Ok(())
}

fn serve(args: &ServeArgs) -> Result<(), CliError> {
    let tasks = load_tasks(&args.engine.corpus)?;
    let mode = args.engine.gateway_mode(GatewayMode::Live);
    let gateway = build_gateway(GatewayChoice {
        mode,
        cassette: args.engine.cassette.as_deref(),
        overwrite: false,
        scripted: None,
    })?;
    let engine = Arc::new(build_engine(gateway, Arc::new(SystemClock), args.engine.settings(mode)));
    let state = AppState::new(engine, tasks);
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Server(e.to_string()))?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(args.addr)
            .await
            .map_err(|e| CliError::Server(format!("cannot bind {}: {e}", args.addr)))?;
        tracing::info!(addr = %args.addr, "listening");
        spawn_ticker(state.clone(), Duration::from_secs(1));
        axum::serve(listener, router(state))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| CliError::Server(e.to_string()))
    })
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Corpus {
            command: CorpusCommand::Validate { corpus },
        } => corpus_validate(&corpus),
        Command::Session {
            command: SessionCommand::Run(args),
        } => session_run(&args),
        Command::Batch(args) => {
            let mode = args.engine.gateway_mode(GatewayMode::Replay);
            let choice = GatewayChoice {
                mode,
                cassette: args.engine.cassette.as_deref(),
                overwrite: false,
                scripted: None,
            };
            batch(&args, mode, choice)
        }
        Command::Report(args) => report(&args),
        Command::Cassette {
            command: CassetteCommand::Record(args),
        } => {
            let mode = args.batch.engine.gateway_mode(GatewayMode::RecordThenReplay);
            if mode != GatewayMode::RecordThenReplay {
                return Err(CliError::Usage("cassette record only runs in record mode".into()));
            }
            let scripted = args
                .scripted_responses
                .as_deref()
                .map(read_json::<Vec<String>>)
                .transpose()?;
            let choice = GatewayChoice {
                mode,
                cassette: args.batch.engine.cassette.as_deref(),
                overwrite: args.overwrite,
                scripted,
            };
            batch(&args.batch, mode, choice)
        }
        Command::Serve(args) => serve(&args),
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn")),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = serde_json::json!({ "error": e.code(), "message": e.to_string() });
            eprintln!("{line}");
            ExitCode::from(if matches!(e, CliError::Usage(_)) { 2 } else { 1 })
        }
    }
}
