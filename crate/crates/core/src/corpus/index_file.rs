//! JSON-lines readers and writers for the corpus index and the ontology.
//!
//! Index lines are `{"concept":{"id":14,"name":"Birds"}}` or
//! `{"video":{"id":"v1","title":"...","shots":[[14,23],[],[64]]}}`.
//! Ontology lines are `{"edge":[14,6]}` or `{"node":14}`. Blank lines are
//! ignored.

use serde::{Deserialize, Serialize};

use super::{Concept, ConceptId, CorpusIndex, Ontology, Video};
use crate::error::ParseError;

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
enum IndexLine {
    Concept(ConceptRecord),
    Video(VideoRecord),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct ConceptRecord {
    pub id: u32,
    pub name: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct VideoRecord {
    pub id: String,
    #[serde(default)]
    pub title: String,
    pub shots: Vec<Vec<u32>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
enum OntologyLine {
    Edge([u32; 2]),
    Node(u32),
}

fn json_lines<'a, T: serde::de::DeserializeOwned>(
    text: &'a str,
) -> impl Iterator<Item = Result<(usize, T), ParseError>> + 'a {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
        .map(|(n, l)| {
            serde_json::from_str(l)
                .map(|v| (n, v))
                .map_err(|e| ParseError::line(n, e.to_string()))
        })
}

pub fn parse_corpus_index(text: &str) -> Result<CorpusIndex, ParseError> {
    let mut concepts = Vec::new();
    let mut videos = Vec::new();
    for line in json_lines::<IndexLine>(text) {
        match line? {
            (_, IndexLine::Concept(c)) => concepts.push(Concept {
                id: ConceptId(c.id),
                name: c.name,
            }),
            (_, IndexLine::Video(v)) => videos.push(Video::from_shot_lists(v.id, v.title, v.shots)),
        }
    }
    CorpusIndex::new(concepts, videos, Vec::new())
}

/// Inverse of [`parse_corpus_index`]; contexts are not part of this file.
pub fn emit_corpus_index(index: &CorpusIndex) -> String {
    let mut out = String::new();
    let lines = index
        .concepts()
        .iter()
        .map(|c| {
            IndexLine::Concept(ConceptRecord {
                id: c.id.0,
                name: c.name.clone(),
            })
        })
        .chain(
            index
                .videos()
                .iter()
                .map(|v| IndexLine::Video(VideoRecord::from(v))),
        );
    for line in lines {
        out.push_str(&serde_json::to_string(&line).expect("index records serialize"));
        out.push('\n');
    }
    out
}

impl From<&Video> for VideoRecord {
    fn from(v: &Video) -> Self {
        VideoRecord {
            id: v.id.as_str().to_owned(),
            title: v.title.clone(),
            shots: v
                .shots
                .iter()
                .map(|s| s.concepts.iter().map(|c| c.0).collect())
                .collect(),
        }
    }
}

/// Reads an edge list. Every endpoint and node must be a concept of `index`.
pub fn parse_ontology(text: &str, index: &CorpusIndex) -> Result<Ontology, ParseError> {
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    for line in json_lines::<OntologyLine>(text) {
        let (n, line) = line?;
        let known = |id: u32| {
            if index.concept(ConceptId(id)).is_some() {
                Ok(ConceptId(id))
            } else {
                Err(ParseError::line(
                    n,
                    format!("concept {id} is not declared in the corpus"),
                ))
            }
        };
        match line {
            OntologyLine::Node(id) => nodes.push(known(id)?),
            OntologyLine::Edge([a, b]) => {
                if a == b {
                    return Err(ParseError::line(n, format!("self-loop on concept {a}")));
                }
                let (a, b) = (known(a)?, known(b)?);
                nodes.extend([a, b]);
                edges.push((a, b));
            }
        }
    }
    Ontology::from_edges(nodes, edges)
}

/// Inverse of [`parse_ontology`]: edges first, then nodes without edges.
pub fn emit_ontology(ontology: &Ontology) -> String {
    let mut out = String::new();
    for (a, b) in ontology.edges() {
        out.push_str(&serde_json::to_string(&OntologyLine::Edge([a.0, b.0])).unwrap());
        out.push('\n');
    }
    for n in ontology.nodes() {
        if ontology.neighbors(n).next().is_none() {
            out.push_str(&serde_json::to_string(&OntologyLine::Node(n.0)).unwrap());
            out.push('\n');
        }
    }
    out
}
