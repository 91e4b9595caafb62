//! Concept-in-video weighting and the rankings built on it.
//!
//! `P(c, v) = P1 * P2` where
//!
//! * `P1 = shots of v labeled c / shots of v`
//! * `P2 = similar(c) / (distinct concepts of v * N)`, `N` being the number
//!   of videos containing `c` and `similar(c)` the number of other concepts
//!   in scope whose similarity to `c` reaches the threshold.
//!
//! Both factors are taken exactly as written: no log, no smoothing.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::{ConceptId, CorpusIndex, Video, VideoId};
use crate::error::{Error, Result};
use crate::similarity::SimilarityMatrix;

/// Which concepts count towards `similar(c)` for a given video.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SimilarScope {
    /// Concepts that occur somewhere in the same video.
    #[default]
    WithinVideo,
    /// Every concept of the corpus.
    Global,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WeightParams {
    pub sim_threshold: f64,
    pub similar_scope: SimilarScope,
}

impl Default for WeightParams {
    fn default() -> Self {
        WeightParams {
            sim_threshold: 0.1,
            similar_scope: SimilarScope::WithinVideo,
        }
    }
}

impl WeightParams {
    pub fn new(sim_threshold: f64, similar_scope: SimilarScope) -> Result<Self> {
        let params = WeightParams {
            sim_threshold,
            similar_scope,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if (0.0..=1.0).contains(&self.sim_threshold) {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "similarity threshold {} outside [0, 1]",
                self.sim_threshold
            )))
        }
    }
}

fn video<'a>(index: &'a CorpusIndex, id: &VideoId) -> Result<&'a Video> {
    index
        .video(id)
        .ok_or_else(|| Error::UnknownVideo(id.clone()))
}

fn known_concept(index: &CorpusIndex, c: ConceptId) -> Result<()> {
    index.concept(c).map(|_| ()).ok_or(Error::UnknownConcept(c))
}

/// P1: share of the video's shots labeled with the concept.
pub fn shot_frequency(index: &CorpusIndex, concept: ConceptId, video_id: &VideoId) -> Result<f64> {
    known_concept(index, concept)?;
    let v = video(index, video_id)?;
    Ok(v.shots_with(concept) as f64 / v.shot_count() as f64)
}

/// P2. Zero when the video carries no concept at all or the concept occurs
/// in no video.
pub fn concept_discriminance(
    index: &CorpusIndex,
    matrix: &SimilarityMatrix,
    params: &WeightParams,
    concept: ConceptId,
    video_id: &VideoId,
) -> Result<f64> {
    let v = video(index, video_id)?;
    let in_video = v.distinct_concepts();
    discriminance(index, matrix, params, concept, &in_video)
}

fn discriminance(
    index: &CorpusIndex,
    matrix: &SimilarityMatrix,
    params: &WeightParams,
    concept: ConceptId,
    in_video: &BTreeSet<ConceptId>,
) -> Result<f64> {
    let videos_with = index.video_frequency(concept)?;
    if in_video.is_empty() || videos_with == 0 {
        return Ok(0.0);
    }
    let similar = |other: &ConceptId| {
        *other != concept
            && matrix
                .get(concept, *other)
                .is_some_and(|s| s >= params.sim_threshold)
    };
    let similar_count = match params.similar_scope {
        SimilarScope::WithinVideo => in_video.iter().filter(|c| similar(c)).count(),
        SimilarScope::Global => matrix.concepts().iter().filter(|c| similar(c)).count(),
    };
    Ok(similar_count as f64 / (in_video.len() * videos_with) as f64)
}

/// P = P1 * P2.
pub fn concept_video_weight(
    index: &CorpusIndex,
    matrix: &SimilarityMatrix,
    params: &WeightParams,
    concept: ConceptId,
    video_id: &VideoId,
) -> Result<f64> {
    let p1 = shot_frequency(index, concept, video_id)?;
    let p2 = concept_discriminance(index, matrix, params, concept, video_id)?;
    Ok(p1 * p2)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightEntry {
    pub concept: ConceptId,
    pub video: VideoId,
    pub p1: f64,
    pub p2: f64,
    pub p: f64,
}

/// Weights for every (concept, video) pair where the concept labels at least
/// one shot of the video. Every other pair weighs 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TableRepr", into = "TableRepr")]
pub struct WeightTable {
    concepts: Vec<ConceptId>,
    videos: Vec<VideoId>,
    entries: BTreeMap<(ConceptId, VideoId), WeightEntry>,
}

#[derive(Serialize, Deserialize)]
struct TableRepr {
    concepts: Vec<ConceptId>,
    videos: Vec<VideoId>,
    entries: Vec<WeightEntry>,
}

impl TryFrom<TableRepr> for WeightTable {
    type Error = String;

    fn try_from(repr: TableRepr) -> std::result::Result<Self, String> {
        let concepts: BTreeSet<_> = repr.concepts.iter().collect();
        let videos: BTreeSet<_> = repr.videos.iter().collect();
        let mut entries = BTreeMap::new();
        for e in repr.entries {
            if !concepts.contains(&e.concept) || !videos.contains(&e.video) {
                return Err(format!(
                    "weight entry ({}, {}) outside the table",
                    e.concept, e.video
                ));
            }
            if entries.insert((e.concept, e.video.clone()), e).is_some() {
                return Err("duplicate weight entry".into());
            }
        }
        Ok(WeightTable {
            concepts: repr.concepts,
            videos: repr.videos,
            entries,
        })
    }
}

impl From<WeightTable> for TableRepr {
    fn from(t: WeightTable) -> Self {
        TableRepr {
            concepts: t.concepts,
            videos: t.videos,
            entries: t.entries.into_values().collect(),
        }
    }
}

impl WeightTable {
    pub fn build(
        index: &CorpusIndex,
        matrix: &SimilarityMatrix,
        params: &WeightParams,
    ) -> Result<Self> {
        params.validate()?;
        let mut entries = BTreeMap::new();
        for v in index.videos() {
            let in_video = v.distinct_concepts();
            let n = v.shot_count() as f64;
            for &c in &in_video {
                let p1 = v.shots_with(c) as f64 / n;
                let p2 = discriminance(index, matrix, params, c, &in_video)?;
                entries.insert(
                    (c, v.id.clone()),
                    WeightEntry {
                        concept: c,
                        video: v.id.clone(),
                        p1,
                        p2,
                        p: p1 * p2,
                    },
                );
            }
        }
        Ok(WeightTable {
            concepts: index.concepts().iter().map(|c| c.id).collect(),
            videos: index.videos().iter().map(|v| v.id.clone()).collect(),
            entries,
        })
    }

    pub fn concepts(&self) -> &[ConceptId] {
        &self.concepts
    }

    pub fn videos(&self) -> &[VideoId] {
        &self.videos
    }

    pub fn entries(&self) -> impl Iterator<Item = &WeightEntry> {
        self.entries.values()
    }

    pub fn entry(&self, concept: ConceptId, video: &VideoId) -> Option<&WeightEntry> {
        self.entries.get(&(concept, video.clone()))
    }

    /// P(concept, video); 0 for pairs without an entry.
    pub fn weight(&self, concept: ConceptId, video: &VideoId) -> f64 {
        self.entry(concept, video).map_or(0.0, |e| e.p)
    }

    pub fn has_concept(&self, concept: ConceptId) -> bool {
        self.concepts.contains(&concept)
    }

    pub fn has_video(&self, video: &VideoId) -> bool {
        self.videos.contains(video)
    }

    pub fn video_vector(&self, video: &VideoId) -> Result<VideoVector> {
        if !self.has_video(video) {
            return Err(Error::UnknownVideo(video.clone()));
        }
        let components = self
            .entries
            .values()
            .filter(|e| &e.video == video && e.p > 0.0)
            .map(|e| (e.concept, e.p))
            .collect();
        Ok(VideoVector {
            video: video.clone(),
            components,
        })
    }

    /// `concept_id,video_id,p1,p2,p`, one row per stored pair.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("concept_id,video_id,p1,p2,p\n");
        for e in self.entries.values() {
            let _ = writeln!(out, "{},{},{},{},{}", e.concept, e.video, e.p1, e.p2, e.p);
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedVideo {
    pub video: VideoId,
    pub weight: f64,
}

/// Descending weight, then ascending video id. Drops zero weights.
pub fn sort_ranking(ranking: &mut Vec<RankedVideo>) {
    ranking.retain(|r| r.weight > 0.0);
    ranking.sort_by(|a, b| {
        b.weight
            .total_cmp(&a.weight)
            .then_with(|| a.video.cmp(&b.video))
    });
}

/// Videos carrying `concept` with a positive weight, best first.
pub fn rank_videos_for_concept(
    table: &WeightTable,
    concept: ConceptId,
) -> Result<Vec<RankedVideo>> {
    if !table.has_concept(concept) {
        return Err(Error::UnknownConcept(concept));
    }
    let mut ranking: Vec<RankedVideo> = table
        .entries
        .range((concept, VideoId::new(""))..)
        .take_while(|((c, _), _)| *c == concept)
        .map(|(_, e)| RankedVideo {
            video: e.video.clone(),
            weight: e.p,
        })
        .collect();
    sort_ranking(&mut ranking);
    Ok(ranking)
}

/// Corpus-level pertinence of a concept: sum of its weights over all videos.
pub fn concept_pertinence(table: &WeightTable, concept: ConceptId) -> f64 {
    table
        .entries
        .values()
        .filter(|e| e.concept == concept)
        .map(|e| e.p)
        .sum()
}

/// Non-zero weights of one video, keyed by concept.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VideoVector {
    pub video: VideoId,
    pub components: BTreeMap<ConceptId, f64>,
}

impl VideoVector {
    fn norm(&self) -> f64 {
        self.components.values().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Cosine of two weight vectors; 0 when either is all-zero.
pub fn cosine(a: &VideoVector, b: &VideoVector) -> f64 {
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    // Summed over shared keys in ascending order, so swapping a and b gives
    // bit-identical results.
    let dot: f64 = a
        .components
        .iter()
        .filter_map(|(c, x)| b.components.get(c).map(|y| x * y))
        .sum();
    (dot / (na * nb)).clamp(0.0, 1.0)
}

pub fn video_similarity(table: &WeightTable, a: &VideoId, b: &VideoId) -> Result<f64> {
    Ok(cosine(&table.video_vector(a)?, &table.video_vector(b)?))
}
