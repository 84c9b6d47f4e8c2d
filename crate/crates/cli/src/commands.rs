use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Args;
use hybridsense::analytics::{build_report, counts_csv, segments_csv, AnalysisConfig};
use hybridsense::corpus::{default_shape, generate_corpus as build_corpus, Corpus};
use hybridsense::interaction::{run_scenario, Scenario};
use hybridsense::layout::{layout_graph, LayoutParams};
use hybridsense::sync::{read_event_log, read_pose_log, JsonlError, Server, ServerConfig, DEFAULT_POSE_LOG_HZ};
use hybridsense::GraphState;

use crate::config::{pick, CliError, CliResult, FileConfig};

fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::new("Io", format!("{}: {e}", path.display()))
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| io_error(path, e))
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| io_error(parent, e))?;
    }
    std::fs::write(path, text).map_err(|e| io_error(path, e))
}

fn runtime() -> CliResult<tokio::runtime::Runtime> {
    tokio::runtime::Runtime::new().map_err(|e| CliError::new("Runtime", e))
}

fn load_documents(path: Option<&Path>) -> CliResult<Vec<hybridsense::DocumentRecord>> {
    match path {
        Some(dir) => Corpus::load(dir).map(|c| c.documents).map_err(|e| CliError::new("BadCorpus", e)),
        None => Ok(Vec::new()),
    }
}

#[derive(Args)]
pub struct ServeArgs {
    /// Address to listen on, for example 127.0.0.1:7878.
    #[arg(long, env = "HYBRIDSENSE_LISTEN")]
    listen: Option<String>,
    /// Session joined by clients that do not name one.
    #[arg(long, env = "HYBRIDSENSE_SESSION")]
    session: Option<String>,
    /// Corpus directory written by generate-corpus.
    #[arg(long, env = "HYBRIDSENSE_CORPUS")]
    corpus: Option<PathBuf>,
    #[arg(long, env = "HYBRIDSENSE_POSE_LOG_HZ")]
    pose_log_hz: Option<f64>,
    /// Where event and pose logs are written.
    #[arg(long, env = "HYBRIDSENSE_LOG_DIR")]
    log_dir: Option<PathBuf>,
}

pub fn serve(args: ServeArgs, file: &FileConfig) -> CliResult<ExitCode> {
    let defaults = ServerConfig::default();
    let listen = pick(args.listen, file.serve.listen.clone(), defaults.listen.to_string());
    let listen: SocketAddr =
        listen.parse().map_err(|e| CliError::new("BadConfig", format!("listen address {listen:?}: {e}")))?;
    let pose_log_hz = pick(args.pose_log_hz, file.serve.pose_log_hz, DEFAULT_POSE_LOG_HZ);
    if !(pose_log_hz > 0.0 && pose_log_hz.is_finite()) {
        return Err(CliError::new("BadConfig", "pose log rate must be positive"));
    }
    let corpus = args.corpus.or(file.serve.corpus.clone());
    let config = ServerConfig {
        listen,
        default_session: pick(args.session, file.serve.session.clone(), defaults.default_session),
        documents: load_documents(corpus.as_deref())?,
        pose_log_hz,
        log_dir: args.log_dir.or(file.serve.log_dir.clone()),
    };
    runtime()?.block_on(async move {
        let server = Server::bind(config).await.map_err(|e| CliError::new("Bind", format!("{listen}: {e}")))?;
        server.open_default_session().map_err(|e| CliError::new(e.code(), &e))?;
        let addr = server.local_addr().map_err(|e| CliError::new("Bind", e))?;
        let stop = shutdown_signal()?;
        println!("listening on {addr}");
        server.run_until(stop).await.map_err(|e| CliError::new("Io", e))?;
        println!("stopped; logs flushed");
        Ok(ExitCode::SUCCESS)
    })
}

/// Registers the handlers immediately, so a signal sent right after the
/// address is printed is not lost.
#[cfg(unix)]
fn shutdown_signal() -> CliResult<impl std::future::Future<Output = ()>> {
    use tokio::signal::unix::{signal, SignalKind};
    let mut term = signal(SignalKind::terminate()).map_err(|e| CliError::new("Signal", e))?;
    let mut int = signal(SignalKind::interrupt()).map_err(|e| CliError::new("Signal", e))?;
    Ok(async move {
        tokio::select! {
            _ = term.recv() => {}
            _ = int.recv() => {}
        }
    })
}

#[cfg(not(unix))]
fn shutdown_signal() -> CliResult<impl std::future::Future<Output = ()>> {
    Ok(async {
        let _ = tokio::signal::ctrl_c().await;
    })
}

#[derive(Args)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

pub fn generate_corpus(args: GenerateArgs) -> CliResult<ExitCode> {
    let corpus = build_corpus(args.seed, &default_shape());
    corpus.write(&args.out).map_err(|e| CliError::new("Io", e))?;
    for (name, words) in &corpus.manifest.total_word_counts {
        println!("{name}: {} documents, {words} words", corpus.manifest.per_subplot_counts[name]);
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Args)]
pub struct ReplayArgs {
    /// Event log (JSONL).
    log: PathBuf,
    /// Where to write the snapshot; stdout gets only the hash.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn replay(args: ReplayArgs) -> CliResult<ExitCode> {
    let graph = hybridsense::sync::replay_log(&args.log).map_err(|e| match &e {
        JsonlError::Corrupt { last_good_seq, .. } => {
            CliError::new("CorruptLog", format!("{e}; corrupt record follows seq {last_good_seq}"))
        }
        JsonlError::Replay { source, .. } => CliError::new(source.code(), e),
        JsonlError::Io { .. } => CliError::new("Io", e),
    })?;
    if let Some(out) = &args.out {
        write(out, &graph.to_canonical_json())?;
    }
    println!("seq {} hash {}", graph.seq, graph.snapshot_hash());
    Ok(ExitCode::SUCCESS)
}

#[derive(Args)]
pub struct AnalyzeArgs {
    /// Directory holding `<session>.events.jsonl` and `<session>.poses.jsonl`.
    log_dir: PathBuf,
    /// Session to analyse; required when the directory holds several.
    #[arg(long)]
    session: Option<String>,
    #[arg(long, env = "HYBRIDSENSE_SWITCH_THRESHOLD")]
    switch_threshold: Option<u32>,
    #[arg(long, env = "HYBRIDSENSE_DWELL_MS")]
    dwell_ms: Option<u64>,
    #[arg(long, env = "HYBRIDSENSE_JITTER_FLOOR")]
    jitter_floor: Option<f64>,
    /// Where report.json, segments.csv and counts.csv go; stdout otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn find_session(dir: &Path) -> CliResult<String> {
    let entries = std::fs::read_dir(dir).map_err(|e| io_error(dir, e))?;
    let mut sessions: Vec<String> = entries
        .filter_map(|e| e.ok())
        .filter_map(|e| e.file_name().to_str().and_then(|n| n.strip_suffix(".events.jsonl")).map(str::to_owned))
        .collect();
    sessions.sort();
    match sessions.len() {
        1 => Ok(sessions.remove(0)),
        0 => Err(CliError::new("NoLog", format!("{}: no event log", dir.display()))),
        _ => Err(CliError::new("AmbiguousSession", format!("pass --session, found {}", sessions.join(", ")))),
    }
}

pub fn analyze(args: AnalyzeArgs, file: &FileConfig) -> CliResult<ExitCode> {
    let base = file.analyze.clone().unwrap_or_default();
    let config = AnalysisConfig {
        switch_threshold: pick(args.switch_threshold, None, base.switch_threshold),
        min_dwell_ms: pick(args.dwell_ms, None, base.min_dwell_ms),
        jitter_floor: pick(args.jitter_floor, None, base.jitter_floor),
        ..base
    };
    let session = match args.session {
        Some(s) => s,
        None => find_session(&args.log_dir)?,
    };
    let events_path = args.log_dir.join(format!("{session}.events.jsonl"));
    let events = read_event_log(&events_path).map_err(|e| CliError::new("BadLog", e))?;
    let poses_path = args.log_dir.join(format!("{session}.poses.jsonl"));
    let poses = if poses_path.exists() {
        read_pose_log(&poses_path).map_err(|e| CliError::new("BadLog", e))?
    } else {
        Vec::new()
    };
    let report = build_report(&events, &poses, &config).map_err(|e| CliError::new("Analytics", e))?;
    let json = report.to_canonical_json();
    match &args.out {
        Some(dir) => {
            write(&dir.join("report.json"), &(json + "\n"))?;
            write(&dir.join("segments.csv"), &segments_csv(&report.segments))?;
            write(&dir.join("counts.csv"), &counts_csv(&report.interaction_counts))?;
            println!(
                "{session}: {:?} / {:?}, {} switches, report in {}",
                report.temporal,
                report.spatial,
                report.switch_count,
                dir.display()
            );
        }
        None => println!("{json}"),
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Args)]
pub struct SimulateArgs {
    /// Scenario JSON; `framesFile` paths are relative to it.
    scenario: PathBuf,
    /// Server to drive; an embedded server is started when omitted.
    #[arg(long)]
    endpoint: Option<SocketAddr>,
    #[arg(long, default_value = "default")]
    session: String,
    /// Corpus for the embedded server.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Also write the full report as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
}

pub fn simulate(args: SimulateArgs) -> CliResult<ExitCode> {
    let mut scenario: Scenario =
        serde_json::from_str(&read(&args.scenario)?).map_err(|e| CliError::new("InvalidScenario", e))?;
    let base = args.scenario.parent().unwrap_or(Path::new("."));
    scenario.load_frame_files(base).map_err(|e| CliError::new(e.code(), &e))?;
    scenario.validate().map_err(|e| CliError::new(e.code(), &e))?;
    let documents = load_documents(args.corpus.as_deref())?;
    let report = runtime()?.block_on(async {
        let (addr, embedded) = match args.endpoint {
            Some(addr) => (addr, None),
            None => {
                let config = ServerConfig {
                    listen: SocketAddr::from(([127, 0, 0, 1], 0)),
                    default_session: args.session.clone(),
                    documents,
                    ..ServerConfig::default()
                };
                let handle = Server::spawn(config).await.map_err(|e| CliError::new("Bind", e))?;
                (handle.addr(), Some(handle))
            }
        };
        let report = run_scenario(&scenario, addr, &args.session).await.map_err(|e| CliError::new(e.code(), &e));
        if let Some(handle) = embedded {
            let _ = handle.shutdown().await;
        }
        report
    })?;
    for entry in &report.transcript {
        let outcome = match (&entry.seq, &entry.error) {
            (Some(seq), _) => format!("seq {seq}"),
            (None, Some(err)) => format!("error {err}"),
            _ => "sent".to_owned(),
        };
        println!("{:>6} ms  {:<12} {:<40} {outcome}", entry.elapsed_ms, entry.device, entry.action);
    }
    for a in &report.assertions {
        let mark = if a.passed { "ok  " } else { "FAIL" };
        println!("{mark} {}: {}", a.name, a.detail);
    }
    println!("final seq {} hash {}", report.final_seq, report.final_hash);
    if let Some(path) = &args.report {
        write(path, &serde_json::to_string_pretty(&report).expect("report serializes"))?;
    }
    if report.passed() {
        Ok(ExitCode::SUCCESS)
    } else {
        let failed: Vec<_> = report.assertions.iter().filter(|a| !a.passed).collect();
        eprintln!("{}", serde_json::json!({ "error": "ExpectationFailed", "failed": failed }));
        Ok(ExitCode::from(1))
    }
}

#[derive(Args)]
pub struct LayoutArgs {
    /// Snapshot JSON as written by replay.
    snapshot: PathBuf,
    /// Layout parameters JSON; defaults apply to missing keys.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Positions file; metrics go next to it as `<name>.metrics.json`.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn layout(args: LayoutArgs) -> CliResult<ExitCode> {
    let graph = GraphState::from_snapshot_json(&read(&args.snapshot)?).map_err(|e| CliError::new("BadSnapshot", e))?;
    let params: LayoutParams = match &args.params {
        Some(p) => serde_json::from_str(&read(p)?).map_err(|e| CliError::new("InvalidParams", e))?,
        None => LayoutParams::default(),
    };
    let result = layout_graph(&graph, &params).map_err(|e| CliError::new("InvalidParams", e))?;
    let positions = serde_json::to_string_pretty(&result.positions).expect("positions serialize");
    let metrics = serde_json::to_string_pretty(&result.metrics).expect("metrics serialize");
    match &args.out {
        Some(out) => {
            write(out, &(positions + "\n"))?;
            write(&out.with_extension("metrics.json"), &(metrics + "\n"))?;
            println!(
                "{} nodes, clutter {} -> {}",
                result.positions.len(),
                result.metrics.clutter_before,
                result.metrics.clutter_after
            );
        }
        None => println!("{}", serde_json::json!({ "positions": result.positions, "metrics": result.metrics })),
    }
    Ok(ExitCode::SUCCESS)
}
