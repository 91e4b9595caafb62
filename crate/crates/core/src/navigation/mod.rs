//! Three-level navigation: contexts, then a concept cloud, then ranked videos.
//!
//! An [`Engine`] owns the immutable corpus and its derived tables; a
//! [`Session`] is the mutable per-user state. Every operation validates
//! before it mutates, so a failed call leaves the session untouched.

mod cloud;
mod layout;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::corpus::{ConceptId, Context, CorpusIndex, Ontology, VideoId};
use crate::error::{Error, Result};
use crate::similarity::{similar_concepts, ConceptNeighborhood, SimilarityMatrix};
use crate::weighting::{
    concept_pertinence, cosine, rank_videos_for_concept, sort_ranking, RankedVideo, WeightParams,
    WeightTable,
};

pub use cloud::{tag_cloud_sizes, CloudEntry};
pub use layout::{mds_layout, stress, LayoutParams, MdsOutcome};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Level {
    Contexts,
    Concepts,
    Videos,
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::Contexts => "CONTEXTS",
            Level::Concepts => "CONCEPTS",
            Level::Videos => "VIDEOS",
        })
    }
}

/// Level plus selections; what `back` restores.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NavState {
    pub level: Level,
    pub selected_context: Option<u32>,
    pub selected_concept: Option<ConceptId>,
    /// Set when the selected concept was reached through the similar-concept
    /// panel of this concept rather than from the context itself.
    pub via_panel_of: Option<ConceptId>,
}

impl NavState {
    fn root() -> Self {
        NavState {
            level: Level::Contexts,
            selected_context: None,
            selected_concept: None,
            via_panel_of: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub state: NavState,
    pub focus: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SessionId(String);

impl SessionId {
    pub fn new(id: impl Into<String>) -> Self {
        SessionId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SessionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One user's navigation state.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Session {
    id: SessionId,
    state: NavState,
    focus: usize,
    feedback_factors: BTreeMap<VideoId, f64>,
    history: Vec<HistoryEntry>,
}

impl Session {
    pub fn id(&self) -> &SessionId {
        &self.id
    }

    pub fn state(&self) -> &NavState {
        &self.state
    }

    pub fn level(&self) -> Level {
        self.state.level
    }

    pub fn selected_context(&self) -> Option<u32> {
        self.state.selected_context
    }

    pub fn selected_concept(&self) -> Option<ConceptId> {
        self.state.selected_concept
    }

    /// Index of the focused item in the current level's item list.
    pub fn focus(&self) -> usize {
        self.focus
    }

    pub fn history(&self) -> &[HistoryEntry] {
        &self.history
    }

    /// Multiplier for `video`; 1 unless feedback changed it.
    pub fn feedback_factor(&self, video: &VideoId) -> f64 {
        self.feedback_factors.get(video).copied().unwrap_or(1.0)
    }

    pub fn feedback_factors(&self) -> &BTreeMap<VideoId, f64> {
        &self.feedback_factors
    }

    fn transition(&mut self, next: NavState) {
        if next != self.state {
            let prior = std::mem::replace(&mut self.state, next);
            self.history.push(HistoryEntry {
                state: prior,
                focus: self.focus,
            });
            self.focus = 0;
        }
    }
}

/// Something the focus cursor can rest on.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "id", rename_all = "lowercase")]
pub enum Item {
    Context(u32),
    Concept(ConceptId),
    Video(VideoId),
}

impl fmt::Display for Item {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Item::Context(n) => write!(f, "context:{n}"),
            Item::Concept(c) => write!(f, "concept:{c}"),
            Item::Video(v) => write!(f, "video:{v}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NavConfig {
    pub font_min: f64,
    pub font_max: f64,
    /// Maximum size of the similar-concept panel.
    pub neighbor_limit: Option<usize>,
    pub relevant_factor: f64,
    pub non_relevant_factor: f64,
    pub layout: LayoutParams,
}

impl Default for NavConfig {
    fn default() -> Self {
        NavConfig {
            font_min: 12.0,
            font_max: 36.0,
            neighbor_limit: Some(10),
            relevant_factor: 1.5,
            non_relevant_factor: 0.5,
            layout: LayoutParams::default(),
        }
    }
}

impl NavConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.font_min.is_finite()
            && self.font_max.is_finite()
            && self.font_min <= self.font_max)
        {
            return Err(Error::invalid("font range must satisfy min <= max"));
        }
        for f in [self.relevant_factor, self.non_relevant_factor] {
            if !(f.is_finite() && f > 0.0) {
                return Err(Error::invalid("feedback factors must be positive"));
            }
        }
        if self.layout.tolerance.is_nan() || self.layout.tolerance <= 0.0 {
            return Err(Error::invalid("layout tolerance must be positive"));
        }
        Ok(())
    }
}

/// What selecting a concept shows: ranked videos plus similar concepts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConceptView {
    pub videos: Vec<RankedVideo>,
    pub similar: ConceptNeighborhood,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapPoint {
    pub video: VideoId,
    pub x: f64,
    pub y: f64,
}

/// Positions of the ranked videos, in ranking order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layout2D {
    pub points: Vec<MapPoint>,
    pub stress: f64,
}

/// Shared, read-only corpus state plus the navigation operations.
#[derive(Debug)]
pub struct Engine {
    index: CorpusIndex,
    ontology: Ontology,
    matrix: SimilarityMatrix,
    table: WeightTable,
    params: WeightParams,
    config: NavConfig,
    pertinence: BTreeMap<ConceptId, f64>,
    next_session: AtomicU64,
}

impl Engine {
    /// Computes the similarity matrix and weight table. Corpus concepts
    /// missing from the ontology are added as isolated nodes.
    pub fn build(
        index: CorpusIndex,
        ontology: Ontology,
        params: WeightParams,
        config: NavConfig,
    ) -> Result<Self> {
        let ontology = ontology.with_nodes(index.concepts().iter().map(|c| c.id));
        let matrix = SimilarityMatrix::build(&index, &ontology);
        let table = WeightTable::build(&index, &matrix, &params)?;
        Self::from_parts(index, ontology, matrix, table, params, config)
    }

    /// Assembles an engine from precomputed tables, checking they cover the
    /// corpus.
    pub fn from_parts(
        index: CorpusIndex,
        ontology: Ontology,
        matrix: SimilarityMatrix,
        table: WeightTable,
        params: WeightParams,
        config: NavConfig,
    ) -> Result<Self> {
        params.validate()?;
        config.validate()?;
        let concepts: Vec<ConceptId> = index.concepts().iter().map(|c| c.id).collect();
        let videos: Vec<VideoId> = index.videos().iter().map(|v| v.id.clone()).collect();
        if matrix.concepts() != concepts.as_slice() {
            return Err(Error::invalid(
                "similarity matrix does not match the corpus concepts",
            ));
        }
        if table.concepts() != concepts.as_slice() || table.videos() != videos.as_slice() {
            return Err(Error::invalid("weight table does not match the corpus"));
        }
        let pertinence = concepts
            .iter()
            .map(|&c| (c, concept_pertinence(&table, c)))
            .collect();
        Ok(Engine {
            index,
            ontology,
            matrix,
            table,
            params,
            config,
            pertinence,
            next_session: AtomicU64::new(1),
        })
    }

    pub fn index(&self) -> &CorpusIndex {
        &self.index
    }

    pub fn ontology(&self) -> &Ontology {
        &self.ontology
    }

    pub fn matrix(&self) -> &SimilarityMatrix {
        &self.matrix
    }

    pub fn table(&self) -> &WeightTable {
        &self.table
    }

    pub fn params(&self) -> &WeightParams {
        &self.params
    }

    pub fn config(&self) -> &NavConfig {
        &self.config
    }

    pub fn contexts(&self) -> &[Context] {
        self.index.contexts()
    }

    pub fn pertinence(&self, concept: ConceptId) -> f64 {
        self.pertinence.get(&concept).copied().unwrap_or(0.0)
    }

    pub fn start_session(&self) -> Session {
        let n = self.next_session.fetch_add(1, Ordering::Relaxed);
        Session {
            id: SessionId(format!("s{n}")),
            state: NavState::root(),
            focus: 0,
            feedback_factors: BTreeMap::new(),
            history: Vec::new(),
        }
    }

    fn context(&self, num: u32) -> Result<&Context> {
        self.index.context(num).ok_or(Error::UnknownContext(num))
    }

    /// Cloud for one context's members, in member order.
    pub fn context_cloud(&self, num: u32) -> Result<Vec<CloudEntry>> {
        let ctx = self.context(num)?;
        if ctx.members.is_empty() {
            return Ok(Vec::new());
        }
        let pertinences: Vec<_> = ctx.concept_ids().map(|c| (c, self.pertinence(c))).collect();
        tag_cloud_sizes(&pertinences, self.config.font_min, self.config.font_max)
    }

    /// Cloud of the session's selected context.
    pub fn cloud(&self, session: &Session) -> Result<Vec<CloudEntry>> {
        match session.state.selected_context {
            Some(num) => self.context_cloud(num),
            None => Err(Error::InvalidTransition {
                action: "cloud",
                level: session.level(),
            }),
        }
    }

    pub fn select_context(&self, session: &mut Session, num: u32) -> Result<Vec<CloudEntry>> {
        if session.level() == Level::Videos {
            return Err(Error::InvalidTransition {
                action: "select-context",
                level: session.level(),
            });
        }
        let cloud = self.context_cloud(num)?;
        session.transition(NavState {
            level: Level::Concepts,
            selected_context: Some(num),
            selected_concept: None,
            via_panel_of: None,
        });
        Ok(cloud)
    }

    /// Similar-concept panel shown next to a selected concept.
    pub fn panel(&self, concept: ConceptId) -> Result<ConceptNeighborhood> {
        similar_concepts(
            &self.matrix,
            concept,
            self.params.sim_threshold,
            self.config.neighbor_limit,
        )
    }

    pub fn select_concept(&self, session: &mut Session, concept: ConceptId) -> Result<ConceptView> {
        let level = session.level();
        if level == Level::Contexts {
            return Err(Error::InvalidTransition {
                action: "select-concept",
                level,
            });
        }
        if self.index.concept(concept).is_none() {
            return Err(Error::UnknownConcept(concept));
        }
        let num = session
            .state
            .selected_context
            .expect("context set past CONTEXTS");
        let via_panel_of = if self.context(num)?.contains(concept) {
            None
        } else {
            match session.state.selected_concept {
                Some(current)
                    if level == Level::Videos && self.panel(current)?.contains(concept) =>
                {
                    Some(current)
                }
                _ => {
                    return Err(Error::ConceptNotReachable {
                        concept,
                        context: num,
                    })
                }
            }
        };
        let similar = self.panel(concept)?;
        let videos = self.adjusted_ranking(session, concept)?;
        session.transition(NavState {
            level: Level::Videos,
            selected_context: Some(num),
            selected_concept: Some(concept),
            via_panel_of,
        });
        Ok(ConceptView { videos, similar })
    }

    fn adjusted_ranking(&self, session: &Session, concept: ConceptId) -> Result<Vec<RankedVideo>> {
        let mut ranking = rank_videos_for_concept(&self.table, concept)?;
        for r in &mut ranking {
            r.weight *= session.feedback_factor(&r.video);
        }
        sort_ranking(&mut ranking);
        Ok(ranking)
    }

    fn require_videos(&self, session: &Session, action: &'static str) -> Result<ConceptId> {
        match (session.level(), session.state.selected_concept) {
            (Level::Videos, Some(c)) => Ok(c),
            (level, _) => Err(Error::InvalidTransition { action, level }),
        }
    }

    /// Current ranking with the session's feedback applied.
    pub fn ranking(&self, session: &Session) -> Result<Vec<RankedVideo>> {
        let concept = self.require_videos(session, "videos")?;
        self.adjusted_ranking(session, concept)
    }

    /// Concepts whose name contains `needle` (case-insensitive), most
    /// pertinent first.
    pub fn text_query(&self, needle: &str) -> Result<Vec<ConceptId>> {
        let needle = needle.trim().to_lowercase();
        if needle.is_empty() {
            return Err(Error::invalid("query text is empty"));
        }
        let mut hits: Vec<(ConceptId, f64)> = self
            .index
            .concepts()
            .iter()
            .filter(|c| c.name.to_lowercase().contains(&needle))
            .map(|c| (c.id, self.pertinence(c.id)))
            .collect();
        hits.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        Ok(hits.into_iter().map(|(c, _)| c).collect())
    }

    /// 2D map of the current ranking, `1 - cosine` as dissimilarity.
    pub fn video_map(&self, session: &Session) -> Result<Layout2D> {
        let ranking = self.ranking(session)?;
        if ranking.is_empty() {
            return Err(Error::invalid("no ranked videos to lay out"));
        }
        let vectors = ranking
            .iter()
            .map(|r| self.table.video_vector(&r.video))
            .collect::<Result<Vec<_>>>()?;
        let delta: Vec<Vec<f64>> = vectors
            .iter()
            .enumerate()
            .map(|(i, a)| {
                vectors
                    .iter()
                    .enumerate()
                    .map(|(j, b)| {
                        if i == j {
                            0.0
                        } else {
                            (1.0 - cosine(a, b)).max(0.0)
                        }
                    })
                    .collect()
            })
            .collect();
        let out = mds_layout(&delta, &self.config.layout)?;
        Ok(Layout2D {
            points: ranking
                .into_iter()
                .zip(out.coords)
                .map(|(r, [x, y])| MapPoint {
                    video: r.video,
                    x,
                    y,
                })
                .collect(),
            stress: out.stress,
        })
    }

    /// Multiplies per-video factors (relevant by the boost, non-relevant by
    /// the penalty) and returns the re-sorted ranking.
    pub fn apply_feedback(
        &self,
        session: &mut Session,
        relevant: &[VideoId],
        non_relevant: &[VideoId],
    ) -> Result<Vec<RankedVideo>> {
        self.require_videos(session, "feedback")?;
        let rel: BTreeSet<&VideoId> = relevant.iter().collect();
        let non: BTreeSet<&VideoId> = non_relevant.iter().collect();
        if let Some(v) = rel.intersection(&non).next() {
            return Err(Error::invalid(format!(
                "video {v} marked both relevant and non-relevant"
            )));
        }
        if let Some(v) = rel
            .iter()
            .chain(&non)
            .find(|v| self.index.video(v).is_none())
        {
            return Err(Error::UnknownVideo((*v).clone()));
        }
        for (set, factor) in [
            (rel, self.config.relevant_factor),
            (non, self.config.non_relevant_factor),
        ] {
            for v in set {
                *session.feedback_factors.entry(v.clone()).or_insert(1.0) *= factor;
            }
        }
        self.ranking(session)
    }

    pub fn back(&self, session: &mut Session) -> Result<()> {
        let prior = session.history.pop().ok_or(Error::AtRoot)?;
        session.state = prior.state;
        session.focus = prior.focus;
        Ok(())
    }

    /// Returns to the context list, recording the jump in history.
    pub fn goto_contexts(&self, session: &mut Session) {
        session.transition(NavState::root());
    }

    /// Items the focus cursor moves over at the current level. At VIDEOS
    /// this is the ranking followed by the similar-concept panel.
    pub fn items(&self, session: &Session) -> Result<Vec<Item>> {
        Ok(match session.level() {
            Level::Contexts => self
                .contexts()
                .iter()
                .map(|c| Item::Context(c.num))
                .collect(),
            Level::Concepts => {
                let num = session
                    .state
                    .selected_context
                    .expect("context set at CONCEPTS");
                self.context(num)?
                    .concept_ids()
                    .map(Item::Concept)
                    .collect()
            }
            Level::Videos => {
                let concept = session
                    .state
                    .selected_concept
                    .expect("concept set at VIDEOS");
                let mut items: Vec<Item> = self
                    .ranking(session)?
                    .into_iter()
                    .map(|r| Item::Video(r.video))
                    .collect();
                items.extend(
                    self.panel(concept)?
                        .neighbors
                        .into_iter()
                        .map(|n| Item::Concept(n.concept)),
                );
                items
            }
        })
    }

    pub fn focused_item(&self, session: &Session) -> Result<Option<Item>> {
        Ok(self.items(session)?.into_iter().nth(session.focus))
    }

    /// Moves focus by `delta`, saturating at both ends of the item list.
    pub fn move_focus(&self, session: &mut Session, delta: isize) -> Result<usize> {
        let len = self.items(session)?.len();
        let last = len.saturating_sub(1);
        session.focus = session.focus.saturating_add_signed(delta).min(last);
        Ok(session.focus)
    }

    /// Checks every session invariant, describing the first violation.
    pub fn check_session(&self, session: &Session) -> std::result::Result<(), String> {
        let s = &session.state;
        match s.level {
            Level::Contexts => {
                if s.selected_context.is_some() || s.selected_concept.is_some() {
                    return Err("selections set at CONTEXTS".into());
                }
            }
            Level::Concepts => {
                let num = s.selected_context.ok_or("CONCEPTS without a context")?;
                self.index
                    .context(num)
                    .ok_or("selected context does not exist")?;
                if s.selected_concept.is_some() {
                    return Err("concept selected at CONCEPTS".into());
                }
            }
            Level::Videos => {
                let num = s.selected_context.ok_or("VIDEOS without a context")?;
                let concept = s.selected_concept.ok_or("VIDEOS without a concept")?;
                let ctx = self
                    .index
                    .context(num)
                    .ok_or("selected context does not exist")?;
                let reachable = ctx.contains(concept)
                    || s.via_panel_of
                        .and_then(|p| self.panel(p).ok())
                        .is_some_and(|panel| panel.contains(concept));
                if !reachable {
                    return Err(format!(
                        "concept {concept} neither in context {num} nor in its panel"
                    ));
                }
            }
        }
        if session.history.last().is_some_and(|h| h.state == *s) {
            return Err("history top equals the current state".into());
        }
        if session
            .feedback_factors
            .values()
            .any(|f| !(f.is_finite() && *f > 0.0))
        {
            return Err("non-positive feedback factor".into());
        }
        let len = self.items(session).map_err(|e| e.to_string())?.len();
        if session.focus >= len.max(1) {
            return Err(format!("focus {} outside {len} items", session.focus));
        }
        Ok(())
    }
}
