//! Command-line front end. Every subcommand returns a [`CliError`] instead of
//! exiting so the exit code policy lives in one place.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use clap::{Parser, Subcommand};
use conceptnav_core::cache::write_cache;
use conceptnav_core::evalstats::{evalstats, VoteTable};
use conceptnav_core::gateway::{replay_trace, transcript_to_jsonl, GestureParams};
use conceptnav_core::navigation::Engine;
use conceptnav_core::weighting::{rank_videos_for_concept, RankedVideo};

use crate::api::{self, AppState};
use crate::load::{command_map, read_text, CorpusArgs, LayoutArgs, SourceArgs};

#[derive(Debug)]
pub enum CliError {
    /// Bad input or arguments; exit code 1.
    User(String),
    /// Anything else; exit code 2.
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::User(_) => 1,
            CliError::Internal(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::User(m) => write!(f, "error: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

fn internal<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Internal(e.to_string())
}

#[derive(Parser, Debug)]
#[command(
    name = "conceptnav",
    version,
    about = "Concept-based video indexing, ranking and navigation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Validate the source files and write a precomputed cache.
    Ingest {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        layout: LayoutArgs,
        /// Where to write the cache.
        #[arg(long)]
        out: PathBuf,
    },
    /// Concept similarity matrix as CSV.
    Simmatrix {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Concept/video weight table as CSV.
    Weights {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Videos ranked for one concept, as CSV `rank,video_id,weight`.
    Rank {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Concept name, exactly as in the corpus index.
        concept: String,
    },
    /// Replay a JSON-lines event trace and print the transcript.
    Replay {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        trace: PathBuf,
        /// JSON command map merged over the default bindings.
        #[arg(long)]
        command_map: Option<PathBuf>,
    },
    /// Percentage of votes per note, rounded half-up.
    Evalstats {
        /// Vote counts for notes 1 to 5.
        #[arg(num_args = 5, value_name = "COUNT", required_unless_present = "votes")]
        counts: Vec<u64>,
        /// JSON object mapping each note "1".."5" to its count.
        #[arg(long, conflicts_with = "counts")]
        votes: Option<PathBuf>,
        /// Print JSON instead of CSV.
        #[arg(long)]
        json: bool,
    },
    /// Run the HTTP session service.
    Serve {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long, default_value = "127.0.0.1:8080")]
        listen: SocketAddr,
        #[arg(long)]
        command_map: Option<PathBuf>,
        /// Idle time after which a session is dropped.
        #[arg(long, default_value_t = api::DEFAULT_SESSION_TTL.as_secs())]
        session_ttl_secs: u64,
    },
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::User(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(internal)
        }
    }
}

pub fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Ingest {
            source,
            layout,
            out,
        } => {
            let (index, ontology) = source.load()?;
            let engine = Engine::build(index, ontology, source.params()?, layout.config())
                .map_err(|e| CliError::User(e.to_string()))?;
            let cache = write_cache(&engine);
            std::fs::write(&out, &cache)
                .map_err(|e| CliError::User(format!("cannot write {}: {e}", out.display())))?;
            let index = engine.index();
            emit(
                None,
                &format!(
                    "{} contexts, {} concepts, {} videos, {} shots, {} ontology edges\ncache: {} ({} bytes)\n",
                    index.contexts().len(),
                    index.concepts().len(),
                    index.videos().len(),
                    index.shot_count(),
                    engine.ontology().edge_count(),
                    out.display(),
                    cache.len()
                ),
            )
        }
        Command::Simmatrix { corpus, out } => {
            emit(out.as_ref(), &corpus.engine()?.matrix().to_csv())
        }
        Command::Weights { corpus, out } => emit(out.as_ref(), &corpus.engine()?.table().to_csv()),
        Command::Rank { corpus, concept } => {
            let engine = corpus.engine()?;
            let id = engine
                .index()
                .concept_by_name(&concept)
                .ok_or_else(|| CliError::User(format!("unknown concept {concept:?}")))?
                .id;
            let ranking = rank_videos_for_concept(engine.table(), id)
                .map_err(|e| CliError::User(e.to_string()))?;
            emit(None, &ranking_csv(&ranking)?)
        }
        Command::Replay {
            corpus,
            trace,
            command_map: map_path,
        } => {
            let engine = corpus.engine()?;
            let map = command_map(map_path.as_deref())?;
            let mut session = engine.start_session();
            let transcript = replay_trace(
                &read_text(&trace)?,
                &engine,
                &mut session,
                &map,
                &GestureParams::default(),
            )
            .map_err(|e| CliError::User(format!("{}: {e}", trace.display())))?;
            emit(None, &transcript_to_jsonl(&transcript))
        }
        Command::Evalstats {
            counts,
            votes,
            json,
        } => {
            let table = match votes {
                Some(path) => {
                    let map: BTreeMap<u8, u64> = serde_json::from_str(&read_text(&path)?)
                        .map_err(|e| CliError::User(format!("{}: {e}", path.display())))?;
                    VoteTable::from_map(&map).map_err(|e| CliError::User(e.to_string()))?
                }
                None => {
                    let counts: [u64; 5] = counts
                        .try_into()
                        .map_err(|_| CliError::User("need 5 counts".into()))?;
                    VoteTable::new(counts)
                }
            };
            let shares = evalstats(&table).map_err(|e| CliError::User(e.to_string()))?;
            if json {
                let mut text = serde_json::to_string_pretty(&shares).map_err(internal)?;
                text.push('\n');
                emit(None, &text)
            } else {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(["note", "votes", "raw", "percent"])
                    .map_err(internal)?;
                for s in &shares {
                    let raw = *s.raw.numer() as f64 / *s.raw.denom() as f64;
                    w.write_record([
                        s.note.to_string(),
                        s.votes.to_string(),
                        format!("{raw:.4}"),
                        s.percent.to_string(),
                    ])
                    .map_err(internal)?;
                }
                emit(
                    None,
                    &String::from_utf8(w.into_inner().map_err(internal)?).map_err(internal)?,
                )
            }
        }
        Command::Serve {
            corpus,
            listen,
            command_map: map_path,
            session_ttl_secs,
        } => {
            let engine = corpus.engine()?;
            let map = command_map(map_path.as_deref())?;
            let state = Arc::new(
                AppState::new(engine, map).with_ttl(Duration::from_secs(session_ttl_secs)),
            );
            let runtime = tokio::runtime::Runtime::new().map_err(internal)?;
            runtime.block_on(async move {
                let listener = tokio::net::TcpListener::bind(listen)
                    .await
                    .map_err(|e| CliError::User(format!("cannot listen on {listen}: {e}")))?;
                let addr = listener.local_addr().map_err(internal)?;
                eprintln!("listening on http://{addr}");
                api::serve(state, listener).await.map_err(internal)
            })
        }
    }
}

/// `rank,video_id,weight` with 1-based ranks and weights in shortest
/// round-trip form.
pub fn ranking_csv(ranking: &[RankedVideo]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["rank", "video_id", "weight"])
        .map_err(internal)?;
    for (i, r) in ranking.iter().enumerate() {
        w.write_record([
            (i + 1).to_string(),
            r.video.to_string(),
            r.weight.to_string(),
        ])
        .map_err(internal)?;
    }
    String::from_utf8(w.into_inner().map_err(internal)?).map_err(internal)
}
