//! Domain model for a concept-indexed video corpus.
//!
//! Data is organised on three levels: contexts group concepts, concepts
//! label shots, and shots belong to videos. Everything in this module is
//! immutable once validated and can be shared freely between readers.

mod contexts_xml;
pub(crate) mod index_file;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, ParseError, Result};

pub use contexts_xml::{emit_contexts_xml, parse_contexts_xml};
pub use index_file::{emit_corpus_index, emit_ontology, parse_corpus_index, parse_ontology};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConceptId(pub u32);

impl fmt::Display for ConceptId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VideoId(String);

impl VideoId {
    pub fn new(id: impl Into<String>) -> Self {
        VideoId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for VideoId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for VideoId {
    fn from(s: &str) -> Self {
        VideoId(s.to_owned())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Concept {
    pub id: ConceptId,
    pub name: String,
}

/// Non-negative rational membership weight carried by a context entry.
///
/// Accepts `3`, `0.25` and `3/4` on input. Prints integers bare, finite
/// decimals in decimal form and everything else as `n/d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Weight(Ratio<u64>);

impl Weight {
    pub fn new(numer: u64, denom: u64) -> Option<Self> {
        (denom != 0).then(|| Weight(Ratio::new(numer, denom)))
    }

    pub fn integer(value: u64) -> Self {
        Weight(Ratio::from_integer(value))
    }

    pub fn ratio(&self) -> Ratio<u64> {
        self.0
    }

    pub fn to_f64(&self) -> f64 {
        *self.0.numer() as f64 / *self.0.denom() as f64
    }
}

impl FromStr for Weight {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || format!("invalid weight {s:?}");
        if let Some((n, d)) = s.split_once('/') {
            let n: u64 = n.trim().parse().map_err(|_| bad())?;
            let d: u64 = d.trim().parse().map_err(|_| bad())?;
            return Weight::new(n, d).ok_or_else(bad);
        }
        if let Some((int, frac)) = s.split_once('.') {
            if frac.is_empty() || frac.len() > 18 || !frac.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            let int: u64 = if int.is_empty() {
                0
            } else {
                int.parse().map_err(|_| bad())?
            };
            let denom = 10u64.pow(frac.len() as u32);
            let frac: u64 = frac.parse().map_err(|_| bad())?;
            let numer = int
                .checked_mul(denom)
                .and_then(|v| v.checked_add(frac))
                .ok_or_else(bad)?;
            return Weight::new(numer, denom).ok_or_else(bad);
        }
        s.parse::<u64>().map(Weight::integer).map_err(|_| bad())
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (n, d) = (*self.0.numer(), *self.0.denom());
        if d == 1 {
            return write!(f, "{n}");
        }
        let mut scale = 10u64;
        for digits in 1..=18usize {
            if scale.is_multiple_of(d) {
                let scaled = n as u128 * (scale / d) as u128;
                let int = scaled / scale as u128;
                let frac = scaled % scale as u128;
                let frac = format!("{frac:0digits$}");
                return write!(f, "{int}.{}", frac.trim_end_matches('0'));
            }
            scale = match scale.checked_mul(10) {
                Some(s) => s,
                None => break,
            };
        }
        write!(f, "{n}/{d}")
    }
}

impl Serialize for Weight {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Weight {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextMember {
    pub concept: ConceptId,
    pub name: String,
    pub weight: Weight,
}

/// A named grouping of concepts, the top navigation level.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Context {
    pub num: u32,
    pub name: String,
    pub members: Vec<ContextMember>,
}

impl Context {
    pub fn contains(&self, concept: ConceptId) -> bool {
        self.members.iter().any(|m| m.concept == concept)
    }

    pub fn concept_ids(&self) -> impl Iterator<Item = ConceptId> + '_ {
        self.members.iter().map(|m| m.concept)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Shot {
    pub index: usize,
    pub concepts: BTreeSet<ConceptId>,
}

/// Shot identity: owning video plus 0-based position.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ShotRef {
    pub video: VideoId,
    pub shot: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Video {
    pub id: VideoId,
    pub title: String,
    pub shots: Vec<Shot>,
}

impl Video {
    /// Builds a video from per-shot concept lists in shot order.
    pub fn from_shot_lists(
        id: impl Into<String>,
        title: impl Into<String>,
        shots: impl IntoIterator<Item = Vec<u32>>,
    ) -> Self {
        Video {
            id: VideoId::new(id),
            title: title.into(),
            shots: shots
                .into_iter()
                .enumerate()
                .map(|(index, ids)| Shot {
                    index,
                    concepts: ids.into_iter().map(ConceptId).collect(),
                })
                .collect(),
        }
    }

    pub fn shot_count(&self) -> usize {
        self.shots.len()
    }

    /// Number of shots labeled with `concept`.
    pub fn shots_with(&self, concept: ConceptId) -> usize {
        self.shots
            .iter()
            .filter(|s| s.concepts.contains(&concept))
            .count()
    }

    pub fn distinct_concepts(&self) -> BTreeSet<ConceptId> {
        self.shots
            .iter()
            .flat_map(|s| s.concepts.iter().copied())
            .collect()
    }
}

/// Undirected concept graph; distances are counted in edges.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Ontology {
    adjacency: BTreeMap<ConceptId, BTreeSet<ConceptId>>,
}

impl Ontology {
    /// Builds a graph from explicit nodes plus edges. Edge endpoints must be
    /// listed in `nodes`; duplicate and reversed edges collapse.
    pub fn from_edges(
        nodes: impl IntoIterator<Item = ConceptId>,
        edges: impl IntoIterator<Item = (ConceptId, ConceptId)>,
    ) -> Result<Self, ParseError> {
        let mut adjacency: BTreeMap<ConceptId, BTreeSet<ConceptId>> =
            nodes.into_iter().map(|n| (n, BTreeSet::new())).collect();
        for (a, b) in edges {
            if a == b {
                return Err(ParseError::invalid(format!("self-loop on concept {a}")));
            }
            for end in [a, b] {
                if !adjacency.contains_key(&end) {
                    return Err(ParseError::invalid(format!(
                        "edge {a}-{b} references undeclared concept {end}"
                    )));
                }
            }
            adjacency.entry(a).or_default().insert(b);
            adjacency.entry(b).or_default().insert(a);
        }
        Ok(Ontology { adjacency })
    }

    /// Adds isolated nodes for any of `ids` not already present.
    pub fn with_nodes(mut self, ids: impl IntoIterator<Item = ConceptId>) -> Self {
        for id in ids {
            self.adjacency.entry(id).or_default();
        }
        self
    }

    pub fn contains(&self, id: ConceptId) -> bool {
        self.adjacency.contains_key(&id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = ConceptId> + '_ {
        self.adjacency.keys().copied()
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    /// Each undirected edge once, smaller endpoint first.
    pub fn edges(&self) -> impl Iterator<Item = (ConceptId, ConceptId)> + '_ {
        self.adjacency
            .iter()
            .flat_map(|(&a, ns)| ns.iter().filter(move |&&b| a < b).map(move |&b| (a, b)))
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.values().map(BTreeSet::len).sum::<usize>() / 2
    }

    pub fn neighbors(&self, id: ConceptId) -> impl Iterator<Item = ConceptId> + '_ {
        self.adjacency.get(&id).into_iter().flatten().copied()
    }
}

/// Validated corpus: concepts, videos with their labeled shots, and contexts.
///
/// Also holds the inverted index from concept to the shots it labels.
#[derive(Clone, Debug)]
pub struct CorpusIndex {
    concepts: Vec<Concept>,
    videos: Vec<Video>,
    contexts: Vec<Context>,
    concept_pos: BTreeMap<ConceptId, usize>,
    video_pos: BTreeMap<VideoId, usize>,
    postings: BTreeMap<ConceptId, BTreeSet<ShotRef>>,
}

impl CorpusIndex {
    pub fn new(
        concepts: Vec<Concept>,
        videos: Vec<Video>,
        contexts: Vec<Context>,
    ) -> Result<Self, ParseError> {
        let mut concept_pos = BTreeMap::new();
        let mut names = BTreeSet::new();
        for (i, c) in concepts.iter().enumerate() {
            if c.id.0 == 0 {
                return Err(ParseError::invalid("concept ids must be positive"));
            }
            if c.name.is_empty() {
                return Err(ParseError::invalid(format!(
                    "concept {} has an empty name",
                    c.id
                )));
            }
            if concept_pos.insert(c.id, i).is_some() {
                return Err(ParseError::invalid(format!(
                    "duplicate concept id {}",
                    c.id
                )));
            }
            if !names.insert(c.name.as_str()) {
                return Err(ParseError::invalid(format!(
                    "duplicate concept name {:?}",
                    c.name
                )));
            }
        }

        let mut video_pos = BTreeMap::new();
        let mut postings: BTreeMap<ConceptId, BTreeSet<ShotRef>> =
            concept_pos.keys().map(|&c| (c, BTreeSet::new())).collect();
        for (i, v) in videos.iter().enumerate() {
            if v.id.as_str().is_empty() {
                return Err(ParseError::invalid("video with empty id"));
            }
            if video_pos.insert(v.id.clone(), i).is_some() {
                return Err(ParseError::invalid(format!("duplicate video id {}", v.id)));
            }
            if v.shots.is_empty() {
                return Err(ParseError::invalid(format!("video {} has no shots", v.id)));
            }
            for (pos, shot) in v.shots.iter().enumerate() {
                if shot.index != pos {
                    return Err(ParseError::invalid(format!(
                        "video {} shot {} is out of order (expected index {pos})",
                        v.id, shot.index
                    )));
                }
                for c in &shot.concepts {
                    let Some(list) = postings.get_mut(c) else {
                        return Err(ParseError::invalid(format!(
                            "unknown concept {c} in video {} shot {pos}",
                            v.id
                        )));
                    };
                    list.insert(ShotRef {
                        video: v.id.clone(),
                        shot: pos,
                    });
                }
            }
        }

        let index = CorpusIndex {
            concepts,
            videos,
            contexts: Vec::new(),
            concept_pos,
            video_pos,
            postings,
        };
        index.with_contexts(contexts)
    }

    /// Attaches contexts, checking that every member is a known concept
    /// whose name matches the corpus.
    pub fn with_contexts(mut self, contexts: Vec<Context>) -> Result<Self, ParseError> {
        let mut nums = BTreeSet::new();
        for ctx in &contexts {
            if !nums.insert(ctx.num) {
                return Err(ParseError::invalid(format!(
                    "duplicate context Num {}",
                    ctx.num
                )));
            }
            let mut seen = BTreeSet::new();
            for m in &ctx.members {
                let Some(concept) = self.concept(m.concept) else {
                    return Err(ParseError::invalid(format!(
                        "unknown concept {} in context {:?}",
                        m.concept, ctx.name
                    )));
                };
                if concept.name != m.name {
                    return Err(ParseError::invalid(format!(
                        "context {:?} names concept {} {:?} but the corpus calls it {:?}",
                        ctx.name, m.concept, m.name, concept.name
                    )));
                }
                if !seen.insert(m.concept) {
                    return Err(ParseError::invalid(format!(
                        "context {:?} lists concept {} twice",
                        ctx.name, m.concept
                    )));
                }
            }
        }
        self.contexts = contexts;
        Ok(self)
    }

    pub fn concepts(&self) -> &[Concept] {
        &self.concepts
    }

    pub fn videos(&self) -> &[Video] {
        &self.videos
    }

    pub fn contexts(&self) -> &[Context] {
        &self.contexts
    }

    pub fn concept(&self, id: ConceptId) -> Option<&Concept> {
        self.concept_pos.get(&id).map(|&i| &self.concepts[i])
    }

    pub fn concept_by_name(&self, name: &str) -> Option<&Concept> {
        self.concepts.iter().find(|c| c.name == name)
    }

    pub fn video(&self, id: &VideoId) -> Option<&Video> {
        self.video_pos.get(id).map(|&i| &self.videos[i])
    }

    pub fn context(&self, num: u32) -> Option<&Context> {
        self.contexts.iter().find(|c| c.num == num)
    }

    pub fn shot_count(&self) -> usize {
        self.videos.iter().map(Video::shot_count).sum()
    }

    /// E(c): every shot labeled with `concept`, in (video, shot) order.
    pub fn shots_indexed_by(&self, concept: ConceptId) -> Result<&BTreeSet<ShotRef>> {
        self.postings
            .get(&concept)
            .ok_or(Error::UnknownConcept(concept))
    }

    /// Number of videos with at least one shot labeled `concept`.
    pub fn video_frequency(&self, concept: ConceptId) -> Result<usize> {
        let shots = self.shots_indexed_by(concept)?;
        let mut last: Option<&VideoId> = None;
        let mut count = 0;
        for s in shots {
            if last != Some(&s.video) {
                count += 1;
                last = Some(&s.video);
            }
        }
        Ok(count)
    }
}
