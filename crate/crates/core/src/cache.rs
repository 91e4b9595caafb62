//! Precomputed corpus cache: the validated inputs plus the similarity
//! matrix and weight table, as a single deterministic JSON document.

use serde::{Deserialize, Serialize};

use crate::corpus::index_file::VideoRecord;
use crate::corpus::{Concept, ConceptId, Context, CorpusIndex, Ontology, Video};
use crate::error::{Error, ParseError, Result};
use crate::navigation::{Engine, NavConfig};
use crate::similarity::SimilarityMatrix;
use crate::weighting::{WeightParams, WeightTable};

pub const CACHE_FORMAT: &str = "conceptnav-cache/1";

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct CacheFile {
    format: String,
    params: WeightParams,
    concepts: Vec<Concept>,
    videos: Vec<VideoRecord>,
    contexts: Vec<Context>,
    ontology_nodes: Vec<ConceptId>,
    ontology_edges: Vec<(ConceptId, ConceptId)>,
    similarity: SimilarityMatrix,
    weights: WeightTable,
}

pub fn write_cache(engine: &Engine) -> String {
    let index = engine.index();
    let file = CacheFile {
        format: CACHE_FORMAT.to_owned(),
        params: *engine.params(),
        concepts: index.concepts().to_vec(),
        videos: index.videos().iter().map(VideoRecord::from).collect(),
        contexts: index.contexts().to_vec(),
        ontology_nodes: engine.ontology().nodes().collect(),
        ontology_edges: engine.ontology().edges().collect(),
        similarity: engine.matrix().clone(),
        weights: engine.table().clone(),
    };
    let mut out = serde_json::to_string(&file).expect("cache serializes");
    out.push('\n');
    out
}

/// Rebuilds an engine from cache text without recomputing any table.
pub fn read_cache(text: &str, config: NavConfig) -> Result<Engine> {
    let file: CacheFile = serde_json::from_str(text)
        .map_err(|e| ParseError::invalid(format!("corrupt cache: {e}")))?;
    if file.format != CACHE_FORMAT {
        return Err(Error::invalid(format!(
            "unsupported cache format {:?}",
            file.format
        )));
    }
    let videos = file
        .videos
        .into_iter()
        .map(|v| Video::from_shot_lists(v.id, v.title, v.shots))
        .collect();
    let index = CorpusIndex::new(file.concepts, videos, file.contexts)?;
    let ontology = Ontology::from_edges(file.ontology_nodes, file.ontology_edges)?;
    Engine::from_parts(
        index,
        ontology,
        file.similarity,
        file.weights,
        file.params,
        config,
    )
}
