//! Hands-free control: gesture traces and voice tokens become navigation
//! commands that drive a session through a focus cursor.
//!
//! Traces use normalized screen coordinates, `y` growing downwards, and
//! millisecond timestamps.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{ConceptId, VideoId};
use crate::error::{Error, ParseError, Result};
use crate::navigation::{CloudEntry, ConceptView, Engine, Item, Level, Session};
use crate::weighting::RankedVideo;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GestureKind {
    SwipeLeft,
    SwipeRight,
    SwipeUp,
    SwipeDown,
    PushSelect,
    None,
}

impl GestureKind {
    pub const BINDABLE: [GestureKind; 5] = [
        GestureKind::SwipeLeft,
        GestureKind::SwipeRight,
        GestureKind::SwipeUp,
        GestureKind::SwipeDown,
        GestureKind::PushSelect,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GestureKind::SwipeLeft => "SWIPE_LEFT",
            GestureKind::SwipeRight => "SWIPE_RIGHT",
            GestureKind::SwipeUp => "SWIPE_UP",
            GestureKind::SwipeDown => "SWIPE_DOWN",
            GestureKind::PushSelect => "PUSH_SELECT",
            GestureKind::None => "NONE",
        }
    }

    fn from_name(name: &str) -> Option<Self> {
        Self::BINDABLE
            .into_iter()
            .chain([GestureKind::None])
            .find(|g| g.name() == name)
    }
}

/// Recognition thresholds, tunable per user.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GestureParams {
    /// Minimum net displacement along the dominant axis for a swipe.
    pub min_displacement: f64,
    /// Longest duration still counted as a swipe.
    pub max_duration_ms: f64,
    /// Required ratio of dominant to minor axis displacement.
    pub axis_dominance: f64,
    /// Shortest hold counted as a push/dwell.
    pub dwell_ms: f64,
}

impl Default for GestureParams {
    fn default() -> Self {
        GestureParams {
            min_displacement: 0.25,
            max_duration_ms: 800.0,
            axis_dominance: 2.0,
            dwell_ms: 300.0,
        }
    }
}

pub fn recognize_gesture(trace: &[TracePoint], params: &GestureParams) -> Result<GestureKind> {
    let (Some(first), Some(last)) = (trace.first(), trace.last()) else {
        return Err(Error::invalid("gesture trace is empty"));
    };
    if trace
        .iter()
        .any(|p| !(p.t.is_finite() && p.x.is_finite() && p.y.is_finite()))
    {
        return Err(Error::invalid("gesture trace contains a non-finite value"));
    }
    if let Some(i) = trace.windows(2).position(|w| w[1].t <= w[0].t) {
        return Err(Error::invalid(format!(
            "gesture timestamps not strictly increasing at point {}",
            i + 1
        )));
    }

    let (dx, dy) = (last.x - first.x, last.y - first.y);
    let duration = last.t - first.t;
    let (ax, ay) = (dx.abs(), dy.abs());
    let (major, minor) = if ax >= ay { (ax, ay) } else { (ay, ax) };
    let dominant = minor == 0.0 || major / minor >= params.axis_dominance;
    if major >= params.min_displacement && duration <= params.max_duration_ms && dominant {
        return Ok(match (ax >= ay, dx > 0.0, dy > 0.0) {
            (true, true, _) => GestureKind::SwipeRight,
            (true, false, _) => GestureKind::SwipeLeft,
            (false, _, true) => GestureKind::SwipeDown,
            (false, _, false) => GestureKind::SwipeUp,
        });
    }

    let path: f64 = trace
        .windows(2)
        .map(|w| (w[1].x - w[0].x).hypot(w[1].y - w[0].y))
        .sum();
    if path < params.min_displacement / 4.0 && duration >= params.dwell_ms {
        return Ok(GestureKind::PushSelect);
    }
    Ok(GestureKind::None)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Action {
    NextItem,
    PrevItem,
    Select,
    Back,
    MarkRelevant,
    MarkNonrelevant,
    GotoContexts,
}

impl Action {
    const ALL: [Action; 7] = [
        Action::NextItem,
        Action::PrevItem,
        Action::Select,
        Action::Back,
        Action::MarkRelevant,
        Action::MarkNonrelevant,
        Action::GotoContexts,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Action::NextItem => "NEXT_ITEM",
            Action::PrevItem => "PREV_ITEM",
            Action::Select => "SELECT",
            Action::Back => "BACK",
            Action::MarkRelevant => "MARK_RELEVANT",
            Action::MarkNonrelevant => "MARK_NONRELEVANT",
            Action::GotoContexts => "GOTO_CONTEXTS",
        }
    }

    fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.name() == name)
    }

    fn needs_target(self) -> bool {
        matches!(
            self,
            Action::Select | Action::MarkRelevant | Action::MarkNonrelevant
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NavigationCommand {
    pub action: Action,
    pub argument: Option<Item>,
}

impl NavigationCommand {
    pub fn new(action: Action) -> Self {
        NavigationCommand {
            action,
            argument: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Token {
    Gesture(GestureKind),
    Voice(String),
}

impl Token {
    pub fn voice(text: &str) -> Self {
        Token::Voice(normalize_voice(text))
    }
}

fn normalize_voice(text: &str) -> String {
    text.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// Gesture and voice-token bindings. Every bindable gesture is always bound.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommandMap {
    gestures: BTreeMap<GestureKind, Action>,
    voice: BTreeMap<String, Action>,
}

impl Default for CommandMap {
    fn default() -> Self {
        let gestures = BTreeMap::from([
            (GestureKind::SwipeRight, Action::NextItem),
            (GestureKind::SwipeLeft, Action::PrevItem),
            (GestureKind::SwipeUp, Action::Back),
            (GestureKind::SwipeDown, Action::MarkRelevant),
            (GestureKind::PushSelect, Action::Select),
        ]);
        let voice = [
            ("suivant", Action::NextItem),
            ("précédent", Action::PrevItem),
            ("precedent", Action::PrevItem),
            ("retour", Action::Back),
            ("choisir", Action::Select),
            ("pertinent", Action::MarkRelevant),
            ("non pertinent", Action::MarkNonrelevant),
            ("accueil", Action::GotoContexts),
        ]
        .into_iter()
        .map(|(t, a)| (t.to_owned(), a))
        .collect();
        CommandMap { gestures, voice }
    }
}

impl CommandMap {
    /// Reads a JSON object of token name to action name and layers it over
    /// the defaults. Keys spelled like a gesture kind bind that gesture;
    /// anything else is a voice token.
    pub fn from_json(text: &str) -> Result<Self, ParseError> {
        let raw: BTreeMap<String, String> = serde_json::from_str(text)
            .map_err(|e| ParseError::invalid(format!("command map: {e}")))?;
        let mut map = CommandMap::default();
        for (token, action) in raw {
            let action = Action::from_name(&action).ok_or_else(|| {
                ParseError::invalid(format!("command map: unknown action {action:?}"))
            })?;
            match GestureKind::from_name(&token) {
                Some(GestureKind::None) => {
                    return Err(ParseError::invalid("command map: NONE cannot be bound"))
                }
                Some(g) => {
                    map.gestures.insert(g, action);
                }
                None => {
                    let key = normalize_voice(&token);
                    if key.is_empty() {
                        return Err(ParseError::invalid("command map: empty voice token"));
                    }
                    map.voice.insert(key, action);
                }
            }
        }
        Ok(map)
    }

    pub fn lookup(&self, token: &Token) -> Option<Action> {
        match token {
            Token::Gesture(g) => self.gestures.get(g).copied(),
            Token::Voice(v) => self.voice.get(&normalize_voice(v)).copied(),
        }
    }
}

/// Resolves a token to a command, filling the target of SELECT and MARK_*
/// from the focused item. `Ok(None)` means the token is not bound.
pub fn map_command(
    token: &Token,
    map: &CommandMap,
    level: Level,
    focused: Option<&Item>,
) -> Result<Option<NavigationCommand>> {
    let Some(action) = map.lookup(token) else {
        return Ok(None);
    };
    if !action.needs_target() {
        return Ok(Some(NavigationCommand::new(action)));
    }
    let Some(item) = focused else {
        return Err(Error::invalid(format!(
            "{} needs a focused item",
            action.name()
        )));
    };
    let fits = matches!(
        (action, level, item),
        (Action::Select, Level::Contexts, Item::Context(_))
            | (Action::Select, Level::Concepts, Item::Concept(_))
            | (
                Action::Select,
                Level::Videos,
                Item::Video(_) | Item::Concept(_)
            )
            | (
                Action::MarkRelevant | Action::MarkNonrelevant,
                Level::Videos,
                Item::Video(_)
            )
    );
    if !fits {
        return Err(Error::invalid(format!(
            "{} cannot target {item} at level {level}",
            action.name()
        )));
    }
    Ok(Some(NavigationCommand {
        action,
        argument: Some(item.clone()),
    }))
}

/// Result of a dispatched command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase")]
pub enum Outcome {
    Focus { index: usize, item: Option<Item> },
    Cloud { entries: Vec<CloudEntry> },
    Concept { view: ConceptView },
    Opened { video: VideoId },
    Ranking { videos: Vec<RankedVideo> },
    Moved,
}

/// Runs one command against the session through the navigation engine.
pub fn dispatch(
    engine: &Engine,
    session: &mut Session,
    command: &NavigationCommand,
) -> Result<Outcome> {
    let target = || -> Result<Item> {
        match &command.argument {
            Some(item) => Ok(item.clone()),
            None => {
                let items = engine.items(session)?;
                items
                    .get(session.focus())
                    .cloned()
                    .ok_or(Error::FocusOutOfRange {
                        focus: session.focus(),
                        len: items.len(),
                    })
            }
        }
    };
    match command.action {
        Action::NextItem | Action::PrevItem => {
            let delta = if command.action == Action::NextItem {
                1
            } else {
                -1
            };
            let index = engine.move_focus(session, delta)?;
            Ok(Outcome::Focus {
                index,
                item: engine.focused_item(session)?,
            })
        }
        Action::Select => match target()? {
            Item::Context(num) => Ok(Outcome::Cloud {
                entries: engine.select_context(session, num)?,
            }),
            Item::Concept(c) => Ok(Outcome::Concept {
                view: engine.select_concept(session, c)?,
            }),
            Item::Video(v) => {
                let ranking = engine.ranking(session)?;
                if ranking.iter().any(|r| r.video == v) {
                    Ok(Outcome::Opened { video: v })
                } else {
                    Err(Error::UnknownVideo(v))
                }
            }
        },
        Action::MarkRelevant | Action::MarkNonrelevant => {
            let Item::Video(v) = target()? else {
                return Err(Error::invalid("only videos can be marked"));
            };
            let v = [v];
            let (rel, non): (&[VideoId], &[VideoId]) = if command.action == Action::MarkRelevant {
                (&v, &[])
            } else {
                (&[], &v)
            };
            Ok(Outcome::Ranking {
                videos: engine.apply_feedback(session, rel, non)?,
            })
        }
        Action::Back => {
            engine.back(session)?;
            Ok(Outcome::Moved)
        }
        Action::GotoContexts => {
            engine.goto_contexts(session);
            Ok(Outcome::Moved)
        }
    }
}

/// One line of an event-trace file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum Event {
    Gesture(Vec<TracePoint>),
    Voice(String),
}

/// Compact view of a session used in transcripts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StateSnapshot {
    pub level: Level,
    pub selected_context: Option<u32>,
    pub selected_concept: Option<ConceptId>,
    pub focus: usize,
    pub history_depth: usize,
}

impl From<&Session> for StateSnapshot {
    fn from(s: &Session) -> Self {
        StateSnapshot {
            level: s.level(),
            selected_context: s.selected_context(),
            selected_concept: s.selected_concept(),
            focus: s.focus(),
            history_depth: s.history().len(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TranscriptEntry {
    pub line: usize,
    pub token: Option<Token>,
    pub command: Option<NavigationCommand>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcome: Option<Outcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub state: StateSnapshot,
}

/// Recognizes, maps and dispatches one event. Failures are recorded in the
/// entry rather than returned.
pub fn process_event(
    engine: &Engine,
    session: &mut Session,
    map: &CommandMap,
    params: &GestureParams,
    line: usize,
    event: &Event,
) -> TranscriptEntry {
    let mut entry = TranscriptEntry {
        line,
        token: None,
        command: None,
        outcome: None,
        error: None,
        state: StateSnapshot::from(&*session),
    };
    let result = (|| -> Result<()> {
        let token = match event {
            Event::Gesture(trace) => Token::Gesture(recognize_gesture(trace, params)?),
            Event::Voice(text) => Token::voice(text),
        };
        entry.token = Some(token.clone());
        let focused = engine.focused_item(session)?;
        entry.command = map_command(&token, map, session.level(), focused.as_ref())?;
        if let Some(cmd) = &entry.command {
            entry.outcome = Some(dispatch(engine, session, cmd)?);
        }
        Ok(())
    })();
    entry.error = result.err().map(|e| e.to_string());
    entry.state = StateSnapshot::from(&*session);
    entry
}

/// Replays JSON-lines events in order. A line that does not parse aborts
/// the replay with its line number.
pub fn replay_trace(
    text: &str,
    engine: &Engine,
    session: &mut Session,
    map: &CommandMap,
    params: &GestureParams,
) -> Result<Vec<TranscriptEntry>> {
    let mut transcript = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let raw = raw.trim();
        if raw.is_empty() {
            continue;
        }
        let event: Event =
            serde_json::from_str(raw).map_err(|e| ParseError::line(i + 1, e.to_string()))?;
        transcript.push(process_event(engine, session, map, params, i + 1, &event));
    }
    Ok(transcript)
}

pub fn replay_trace_file(
    path: &Path,
    engine: &Engine,
    session: &mut Session,
    map: &CommandMap,
    params: &GestureParams,
) -> Result<Vec<TranscriptEntry>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::invalid(format!("cannot read {}: {e}", path.display())))?;
    replay_trace(&text, engine, session, map, params)
}

/// One JSON object per line.
pub fn transcript_to_jsonl(transcript: &[TranscriptEntry]) -> String {
    let mut out = String::new();
    for e in transcript {
        out.push_str(&serde_json::to_string(e).expect("transcript serializes"));
        out.push('\n');
    }
    out
}
