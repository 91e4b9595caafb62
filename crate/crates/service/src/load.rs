//! Building an [`Engine`] from source files or a cache.

use std::path::{Path, PathBuf};

use clap::Args;
use conceptnav_core::cache::read_cache;
use conceptnav_core::corpus::{
    parse_contexts_xml, parse_corpus_index, parse_ontology, CorpusIndex, Ontology,
};
use conceptnav_core::gateway::CommandMap;
use conceptnav_core::navigation::{Engine, LayoutParams, NavConfig};
use conceptnav_core::weighting::{SimilarScope, WeightParams};

use crate::cli::CliError;

#[derive(Args, Clone, Debug, Default)]
pub struct SourceArgs {
    /// Corpus index (JSON lines of concepts and videos).
    #[arg(long)]
    pub index: Option<PathBuf>,
    /// Ontology graph (JSON lines of nodes and edges).
    #[arg(long)]
    pub ontology: Option<PathBuf>,
    /// Contexts XML document.
    #[arg(long)]
    pub contexts: Option<PathBuf>,
    /// Similarity threshold for the discriminance count.
    #[arg(long, default_value_t = 0.1)]
    pub sim_threshold: f64,
    /// Count similar concepts among the video's own concepts or the whole corpus.
    #[arg(long, value_enum, default_value = "within-video")]
    pub scope: ScopeArg,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ScopeArg {
    #[default]
    WithinVideo,
    Global,
}

impl From<ScopeArg> for SimilarScope {
    fn from(s: ScopeArg) -> Self {
        match s {
            ScopeArg::WithinVideo => SimilarScope::WithinVideo,
            ScopeArg::Global => SimilarScope::Global,
        }
    }
}

#[derive(Args, Clone, Debug)]
pub struct LayoutArgs {
    #[arg(long, default_value_t = LayoutParams::default().iterations)]
    pub layout_iterations: usize,
    #[arg(long, default_value_t = LayoutParams::default().tolerance)]
    pub layout_tolerance: f64,
    #[arg(long, default_value_t = LayoutParams::default().seed)]
    pub seed: u64,
}

impl LayoutArgs {
    pub fn config(&self) -> NavConfig {
        NavConfig {
            layout: LayoutParams {
                iterations: self.layout_iterations,
                tolerance: self.layout_tolerance,
                seed: self.seed,
            },
            ..NavConfig::default()
        }
    }
}

/// Either a prebuilt cache or the three source files.
#[derive(Args, Clone, Debug)]
pub struct CorpusArgs {
    /// Cache written by `ingest`; replaces the source files.
    #[arg(long, conflicts_with_all = ["index", "ontology", "contexts"])]
    pub cache: Option<PathBuf>,
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub layout: LayoutArgs,
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::User(format!("cannot read {}: {e}", path.display())))
}

fn user<E: std::fmt::Display>(path: &Path) -> impl Fn(E) -> CliError + '_ {
    move |e| CliError::User(format!("{}: {e}", path.display()))
}

impl SourceArgs {
    fn required(&self) -> Result<(&Path, &Path, &Path), CliError> {
        match (&self.index, &self.ontology, &self.contexts) {
            (Some(i), Some(o), Some(c)) => Ok((i, o, c)),
            _ => Err(CliError::User(
                "need --cache, or all of --index, --ontology and --contexts".into(),
            )),
        }
    }

    pub fn params(&self) -> Result<WeightParams, CliError> {
        WeightParams::new(self.sim_threshold, self.scope.into())
            .map_err(|e| CliError::User(e.to_string()))
    }

    /// Parses and cross-validates the three source files.
    pub fn load(&self) -> Result<(CorpusIndex, Ontology), CliError> {
        let (index_path, onto_path, ctx_path) = self.required()?;
        let contexts = parse_contexts_xml(&read_text(ctx_path)?).map_err(user(ctx_path))?;
        let index = parse_corpus_index(&read_text(index_path)?)
            .map_err(user(index_path))?
            .with_contexts(contexts)
            .map_err(user(ctx_path))?;
        let ontology = parse_ontology(&read_text(onto_path)?, &index).map_err(user(onto_path))?;
        Ok((index, ontology))
    }
}

impl CorpusArgs {
    pub fn engine(&self) -> Result<Engine, CliError> {
        let config = self.layout.config();
        config
            .validate()
            .map_err(|e| CliError::User(e.to_string()))?;
        match &self.cache {
            Some(path) => read_cache(&read_text(path)?, config).map_err(user(path)),
            None => {
                let (index, ontology) = self.source.load()?;
                Engine::build(index, ontology, self.source.params()?, config)
                    .map_err(|e| CliError::User(e.to_string()))
            }
        }
    }
}

pub fn command_map(path: Option<&Path>) -> Result<CommandMap, CliError> {
    match path {
        Some(p) => CommandMap::from_json(&read_text(p)?).map_err(user(p)),
        None => Ok(CommandMap::default()),
    }
}
