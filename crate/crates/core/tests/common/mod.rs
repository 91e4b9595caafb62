//! Random corpus generators and brute-force reference computations shared by
//! the integration and acceptance tests. Nothing here calls into the
//! similarity or weighting code it is used to check.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use conceptnav_core::corpus::{parse_contexts_xml, parse_corpus_index, parse_ontology};
use conceptnav_core::corpus::{Concept, ConceptId, CorpusIndex, Ontology, Video};
use conceptnav_core::gateway::{
    replay_trace, Action, CommandMap, GestureParams, StateSnapshot, TranscriptEntry,
};
use conceptnav_core::navigation::{Engine, Level, NavConfig, Session};
use conceptnav_core::weighting::WeightParams;
use conceptnav_core::Error;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

pub fn fixture_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(rel)
}

pub fn fixture(rel: &str) -> String {
    std::fs::read_to_string(fixture_path(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

/// Plain-data corpus: concept ids, per-video per-shot concept lists, and an
/// undirected edge list over `nodes`.
#[derive(Clone, Debug)]
pub struct RawCorpus {
    pub concepts: Vec<u32>,
    pub videos: Vec<Vec<Vec<u32>>>,
    pub nodes: Vec<u32>,
    pub edges: Vec<(u32, u32)>,
}

impl RawCorpus {
    pub fn video_id(i: usize) -> String {
        format!("v{i}")
    }

    pub fn index(&self) -> CorpusIndex {
        let concepts = self
            .concepts
            .iter()
            .map(|&id| Concept {
                id: ConceptId(id),
                name: format!("concept{id}"),
            })
            .collect();
        let videos = self
            .videos
            .iter()
            .enumerate()
            .map(|(i, shots)| {
                Video::from_shot_lists(Self::video_id(i), format!("video {i}"), shots.clone())
            })
            .collect();
        CorpusIndex::new(concepts, videos, vec![]).expect("generated corpus is valid")
    }

    pub fn ontology(&self) -> Ontology {
        Ontology::from_edges(
            self.nodes.iter().map(|&n| ConceptId(n)),
            self.edges
                .iter()
                .map(|&(a, b)| (ConceptId(a), ConceptId(b))),
        )
        .expect("generated graph is valid")
    }
}

/// Up to `max_nodes` nodes: a random spanning tree, optionally thinned into a
/// forest and optionally with extra chords.
pub fn random_graph<R: Rng>(
    rng: &mut R,
    nodes: &[u32],
    drop_p: f64,
    chord_p: f64,
) -> Vec<(u32, u32)> {
    let mut order = nodes.to_vec();
    order.shuffle(rng);
    let mut edges = Vec::new();
    for i in 1..order.len() {
        let parent = order[rng.random_range(0..i)];
        if !rng.random_bool(drop_p) {
            edges.push((order[i], parent));
        }
    }
    for i in 0..order.len() {
        for j in i + 1..order.len() {
            if rng.random_bool(chord_p) {
                edges.push((order[i], order[j]));
            }
        }
    }
    edges
}

/// ≤ 10 concepts, ≤ 6 videos × 8 shots, ontology of ≤ 12 nodes (the corpus
/// concepts plus up to two extra nodes).
pub fn random_corpus<R: Rng>(rng: &mut R) -> RawCorpus {
    let mut pool: Vec<u32> = (1..=40).collect();
    pool.shuffle(rng);
    let n_concepts = rng.random_range(1..=10);
    let concepts: Vec<u32> = pool[..n_concepts].to_vec();
    let extra = rng.random_range(0..=2);
    let nodes: Vec<u32> = concepts.iter().copied().chain(100..100 + extra).collect();
    let label_p = rng.random_range(0.1..0.6);
    let videos = (0..rng.random_range(1..=6))
        .map(|_| {
            (0..rng.random_range(1..=8))
                .map(|_| {
                    concepts
                        .iter()
                        .copied()
                        .filter(|_| rng.random_bool(label_p))
                        .collect()
                })
                .collect()
        })
        .collect();
    let drop_p = if rng.random_bool(0.5) { 0.0 } else { 0.2 };
    let chord_p = if rng.random_bool(0.5) { 0.0 } else { 0.15 };
    let edges = random_graph(rng, &nodes, drop_p, chord_p);
    RawCorpus {
        concepts,
        videos,
        nodes,
        edges,
    }
}

/// All-pairs shortest paths by Floyd–Warshall; `None` = unreachable.
pub fn floyd_warshall(nodes: &[u32], edges: &[(u32, u32)]) -> Vec<Vec<Option<u32>>> {
    let n = nodes.len();
    let pos = |id: u32| nodes.iter().position(|&x| x == id).unwrap();
    let mut d = vec![vec![None; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = Some(0);
    }
    for &(a, b) in edges {
        let (i, j) = (pos(a), pos(b));
        d[i][j] = Some(1);
        d[j][i] = Some(1);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if let (Some(x), Some(y)) = (d[i][k], d[k][j]) {
                    if d[i][j].is_none_or(|cur| x + y < cur) {
                        d[i][j] = Some(x + y);
                    }
                }
            }
        }
    }
    d
}

pub fn oracle_distance(raw: &RawCorpus, a: u32, b: u32) -> Option<u32> {
    let fw = floyd_warshall(&raw.nodes, &raw.edges);
    let pos = |id: u32| raw.nodes.iter().position(|&x| x == id).unwrap();
    fw[pos(a)][pos(b)]
}

/// Dice over shot sets by scanning every shot of every video.
pub fn oracle_dice(raw: &RawCorpus, a: u32, b: u32) -> f64 {
    let (mut with_a, mut with_b, mut both) = (0usize, 0usize, 0usize);
    for shots in &raw.videos {
        for shot in shots {
            let (ha, hb) = (shot.contains(&a), shot.contains(&b));
            with_a += ha as usize;
            with_b += hb as usize;
            both += (ha && hb) as usize;
        }
    }
    if with_a + with_b == 0 {
        0.0
    } else {
        2.0 * both as f64 / (with_a + with_b) as f64
    }
}

pub struct OracleSimilarity {
    ids: Vec<u32>,
    values: Vec<Vec<f64>>,
}

impl OracleSimilarity {
    pub fn new(raw: &RawCorpus) -> Self {
        let fw = floyd_warshall(&raw.nodes, &raw.edges);
        let pos = |id: u32| raw.nodes.iter().position(|&x| x == id).unwrap();
        let values = raw
            .concepts
            .iter()
            .map(|&a| {
                raw.concepts
                    .iter()
                    .map(|&b| match fw[pos(a)][pos(b)] {
                        Some(d) => oracle_dice(raw, a, b) / (1.0 + d as f64),
                        None => 0.0,
                    })
                    .collect()
            })
            .collect();
        OracleSimilarity {
            ids: raw.concepts.clone(),
            values,
        }
    }

    pub fn get(&self, a: u32, b: u32) -> f64 {
        let i = self.ids.iter().position(|&x| x == a).unwrap();
        let j = self.ids.iter().position(|&x| x == b).unwrap();
        self.values[i][j]
    }
}

/// (p1, p2, p) straight from the definitions, with within-video or global
/// scope for the similar-concept count.
pub fn oracle_weight(
    raw: &RawCorpus,
    sim: &OracleSimilarity,
    threshold: f64,
    global: bool,
    concept: u32,
    video: usize,
) -> (f64, f64, f64) {
    let shots = &raw.videos[video];
    let n = shots.len();
    let labeled = shots.iter().filter(|s| s.contains(&concept)).count();
    let p1 = labeled as f64 / n as f64;
    let in_video: BTreeSet<u32> = shots.iter().flatten().copied().collect();
    let videos_with = raw
        .videos
        .iter()
        .filter(|v| v.iter().any(|s| s.contains(&concept)))
        .count();
    let scope: Vec<u32> = if global {
        raw.concepts.clone()
    } else {
        in_video.iter().copied().collect()
    };
    let similar = scope
        .iter()
        .filter(|&&k| k != concept && sim.get(concept, k) >= threshold)
        .count();
    let p2 = if in_video.is_empty() || videos_with == 0 {
        0.0
    } else {
        similar as f64 / (in_video.len() * videos_with) as f64
    };
    (p1, p2, p1 * p2)
}

/// Reference ranking: positive weights, descending, ties by id.
pub fn oracle_ranking(weights: &[(String, f64)]) -> Vec<(String, f64)> {
    let mut out: Vec<(String, f64)> = weights.iter().filter(|(_, w)| *w > 0.0).cloned().collect();
    // Selection sort, so the reference does not share the library's sort.
    let mut sorted = Vec::new();
    while !out.is_empty() {
        let mut best = 0;
        for i in 1..out.len() {
            let (bi, bw) = (&out[best].0, out[best].1);
            let (ci, cw) = (&out[i].0, out[i].1);
            if cw > bw || (cw == bw && ci < bi) {
                best = i;
            }
        }
        sorted.push(out.remove(best));
    }
    sorted
}

pub fn euclid(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

pub fn desk_inputs() -> (CorpusIndex, Ontology) {
    let contexts = parse_contexts_xml(&fixture("desk/contexts.xml")).unwrap();
    let index = parse_corpus_index(&fixture("desk/index.jsonl"))
        .unwrap()
        .with_contexts(contexts)
        .unwrap();
    let ontology = parse_ontology(&fixture("desk/ontology.jsonl"), &index).unwrap();
    (index, ontology)
}

pub fn desk_engine_with(config: NavConfig) -> Engine {
    let (index, ontology) = desk_inputs();
    Engine::build(index, ontology, WeightParams::default(), config).unwrap()
}

pub fn desk_engine() -> Engine {
    desk_engine_with(NavConfig::default())
}

/// Runs `len` random commands against a fresh session, checking the session
/// invariants and the history depth after every step. Returns the number of
/// state-changing navigations left to undo.
pub fn random_walk<R: Rng>(engine: &Engine, rng: &mut R, len: usize) -> Result<usize, String> {
    let mut session = engine.start_session();
    let mut depth = 0usize;
    let contexts: Vec<u32> = engine
        .contexts()
        .iter()
        .map(|c| c.num)
        .chain([99])
        .collect();
    let concepts: Vec<ConceptId> = engine
        .index()
        .concepts()
        .iter()
        .map(|c| c.id)
        .chain([ConceptId(999)])
        .collect();
    let videos: Vec<conceptnav_core::corpus::VideoId> = engine
        .index()
        .videos()
        .iter()
        .map(|v| v.id.clone())
        .collect();

    for step in 0..len {
        let before = session.clone();
        let changed = |s: &Session| s.state() != before.state();
        let outcome: Result<bool, Error> = match rng.random_range(0..9) {
            0 | 1 => {
                let num = *contexts.choose(rng).unwrap();
                engine
                    .select_context(&mut session, num)
                    .map(|_| changed(&session))
            }
            2 | 3 => {
                // Bias towards concepts that are actually on screen.
                let pick = match engine
                    .items(&session)
                    .ok()
                    .and_then(|items| items.choose(rng).cloned())
                {
                    Some(conceptnav_core::navigation::Item::Concept(c)) if rng.random_bool(0.7) => {
                        c
                    }
                    _ => *concepts.choose(rng).unwrap(),
                };
                engine
                    .select_concept(&mut session, pick)
                    .map(|_| changed(&session))
            }
            4 => engine.back(&mut session).map(|_| {
                depth = depth.wrapping_sub(1);
                false
            }),
            5 => {
                engine.goto_contexts(&mut session);
                Ok(changed(&session))
            }
            6 => {
                let mut pool = videos.clone();
                pool.shuffle(rng);
                let k = rng.random_range(0..=pool.len());
                let (rel, non) = pool[..k].split_at(rng.random_range(0..=k));
                engine.apply_feedback(&mut session, rel, non).map(|_| false)
            }
            7 => engine
                .move_focus(&mut session, if rng.random_bool(0.5) { 1 } else { -1 })
                .map(|_| false),
            _ => {
                if session.level() == Level::Videos {
                    engine.video_map(&session).map(|_| false)
                } else {
                    engine.text_query("o").map(|_| false)
                }
            }
        };
        match outcome {
            Ok(true) => depth += 1,
            Ok(false) => {}
            Err(_) => {
                if session != before {
                    return Err(format!("step {step}: failed command mutated the session"));
                }
            }
        }
        engine
            .check_session(&session)
            .map_err(|e| format!("step {step}: {e}"))?;
        if session.history().len() != depth {
            return Err(format!(
                "step {step}: history depth {} but {depth} navigations outstanding",
                session.history().len()
            ));
        }
    }

    let mut backs = 0;
    while engine.back(&mut session).is_ok() {
        backs += 1;
        engine
            .check_session(&session)
            .map_err(|e| format!("unwinding: {e}"))?;
    }
    if backs != depth {
        return Err(format!("{backs} backs available, expected {depth}"));
    }
    if session.level() != Level::Contexts {
        return Err("unwinding did not end at CONTEXTS".into());
    }
    Ok(depth)
}

/// Dissimilarities for `clusters` groups of `size` points.
pub fn clustered(clusters: usize, size: usize, within: f64, across: f64) -> Vec<Vec<f64>> {
    let n = clusters * size;
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        0.0
                    } else if i / size == j / size {
                        within
                    } else {
                        across
                    }
                })
                .collect()
        })
        .collect()
}

/// Mean within-cluster and across-cluster layout distances.
pub fn cluster_means(coords: &[[f64; 2]], size: usize) -> (f64, f64) {
    let (mut w, mut nw, mut a, mut na) = (0.0, 0, 0.0, 0);
    for i in 0..coords.len() {
        for j in i + 1..coords.len() {
            let d = euclid((coords[i][0], coords[i][1]), (coords[j][0], coords[j][1]));
            if i / size == j / size {
                w += d;
                nw += 1;
            } else {
                a += d;
                na += 1;
            }
        }
    }
    (w / nw as f64, a / na as f64)
}

#[allow(clippy::needless_range_loop)]
pub fn random_dissimilarities<R: Rng>(rng: &mut R, n: usize) -> Vec<Vec<f64>> {
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = rng.random_range(0.0..1.0);
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    d
}

/// Replays `trace` twice and mirrors every mapped command on a second
/// session using the engine's navigation calls directly.
pub fn check_gateway_equivalence(
    engine: &Engine,
    trace: &str,
    map: &CommandMap,
    params: &GestureParams,
) -> Result<Vec<TranscriptEntry>, String> {
    let run = || {
        let mut session = engine.start_session();
        replay_trace(trace, engine, &mut session, map, params)
            .map(|t| (t, session))
            .map_err(|e| e.to_string())
    };
    let (first, gateway) = run()?;
    if first != run()?.0 {
        return Err("transcripts differ between runs".into());
    }

    use conceptnav_core::navigation::Item;
    let mut shadow = engine.start_session();
    for entry in &first {
        if let Some(cmd) = &entry.command {
            let target = cmd.argument.clone();
            let before = shadow.clone();
            let direct: Result<(), Error> = match (cmd.action, target) {
                (Action::NextItem, _) => engine.move_focus(&mut shadow, 1).map(drop),
                (Action::PrevItem, _) => engine.move_focus(&mut shadow, -1).map(drop),
                (Action::Select, Some(Item::Context(n))) => {
                    engine.select_context(&mut shadow, n).map(drop)
                }
                (Action::Select, Some(Item::Concept(c))) => {
                    engine.select_concept(&mut shadow, c).map(drop)
                }
                (Action::Select, Some(Item::Video(_))) => Ok(()),
                (Action::MarkRelevant, Some(Item::Video(v))) => {
                    engine.apply_feedback(&mut shadow, &[v], &[]).map(drop)
                }
                (Action::MarkNonrelevant, Some(Item::Video(v))) => {
                    engine.apply_feedback(&mut shadow, &[], &[v]).map(drop)
                }
                (Action::Back, _) => engine.back(&mut shadow),
                (Action::GotoContexts, _) => {
                    engine.goto_contexts(&mut shadow);
                    Ok(())
                }
                (action, arg) => {
                    return Err(format!(
                        "line {}: unexpected {action:?} {arg:?}",
                        entry.line
                    ))
                }
            };
            if direct.is_ok() != entry.outcome.is_some() {
                return Err(format!(
                    "line {}: gateway and direct call disagree on success",
                    entry.line
                ));
            }
            if direct.is_err() && shadow != before {
                return Err(format!(
                    "line {}: failed direct call changed the session",
                    entry.line
                ));
            }
        }
        let snap = StateSnapshot::from(&shadow);
        if snap != entry.state {
            return Err(format!(
                "line {}: gateway state {:?} != direct {:?}",
                entry.line, entry.state, snap
            ));
        }
        engine.check_session(&shadow)?;
    }
    if shadow.history() != gateway.history()
        || shadow.feedback_factors() != gateway.feedback_factors()
    {
        return Err("final sessions differ".into());
    }
    Ok(first)
}

/// Element tree with sorted attributes, ignoring whitespace and the prolog.
#[derive(Debug, PartialEq)]
pub struct XmlShape {
    pub tag: String,
    pub attrs: Vec<(String, String)>,
    pub children: Vec<XmlShape>,
}

pub fn xml_shape(text: &str) -> XmlShape {
    fn walk(node: roxmltree::Node) -> XmlShape {
        let mut attrs: Vec<_> = node
            .attributes()
            .map(|a| (a.name().to_string(), a.value().to_string()))
            .collect();
        attrs.sort();
        XmlShape {
            tag: node.tag_name().name().to_string(),
            attrs,
            children: node
                .children()
                .filter(|c| c.is_element())
                .map(walk)
                .collect(),
        }
    }
    walk(roxmltree::Document::parse(text).unwrap().root_element())
}

/// Context list, member ids and weights of the desk contexts document, and
/// structural equality of its emitted form.
pub fn check_contexts_document() -> Result<(), String> {
    use conceptnav_core::corpus::{emit_contexts_xml, Weight};
    let text = fixture("desk/contexts.xml");
    let contexts = parse_contexts_xml(&text).map_err(|e| e.to_string())?;
    let summary: Vec<(u32, &str, usize)> = contexts
        .iter()
        .map(|c| (c.num, c.name.as_str(), c.members.len()))
        .collect();
    if summary != [(2, "Adult", 6), (3, "Airplane", 2), (6, "Animal", 5)] {
        return Err(format!("contexts {summary:?}"));
    }
    let animal = &contexts[2];
    let ids: Vec<u32> = animal.members.iter().map(|m| m.concept.0).collect();
    if ids != [14, 23, 36, 43, 64] {
        return Err(format!("Animal members {ids:?}"));
    }
    if contexts
        .iter()
        .flat_map(|c| &c.members)
        .any(|m| m.weight != Weight::integer(1))
    {
        return Err("a member weight differs from 1".into());
    }
    let emitted = emit_contexts_xml(&contexts);
    if xml_shape(&emitted) != xml_shape(&text) {
        return Err("emitted document differs structurally from the source".into());
    }
    if parse_contexts_xml(&emitted).map_err(|e| e.to_string())? != contexts {
        return Err("re-parsed contexts differ".into());
    }
    Ok(())
}

/// Stress never rises on random inputs, clusters stay separated for every
/// seed, and two points land at their target distance.
pub fn check_layout_properties() -> Result<(), String> {
    use conceptnav_core::navigation::{mds_layout, LayoutParams};
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(31);
    for run in 0..20 {
        let delta = random_dissimilarities(&mut rng, 10);
        let params = LayoutParams {
            seed: run,
            ..LayoutParams::default()
        };
        let out = mds_layout(&delta, &params).map_err(|e| e.to_string())?;
        for (i, w) in out.stress_trace.windows(2).enumerate() {
            if w[1] > w[0] {
                return Err(format!(
                    "run {run}: stress rose at iteration {}: {} -> {}",
                    i + 1,
                    w[0],
                    w[1]
                ));
            }
        }
    }
    let delta = clustered(3, 4, 0.1, 0.9);
    for seed in 0..20 {
        let out = mds_layout(
            &delta,
            &LayoutParams {
                seed,
                ..LayoutParams::default()
            },
        )
        .map_err(|e| e.to_string())?;
        let (within, across) = cluster_means(&out.coords, 4);
        if within >= across {
            return Err(format!("seed {seed}: within {within} >= across {across}"));
        }
    }
    let out = mds_layout(&[vec![0.0, 0.5], vec![0.5, 0.0]], &LayoutParams::default())
        .map_err(|e| e.to_string())?;
    let [a, b] = [out.coords[0], out.coords[1]];
    let d = euclid((a[0], a[1]), (b[0], b[1]));
    if (d - 0.5).abs() > 1e-6 {
        return Err(format!("two points at distance {d}"));
    }
    Ok(())
}

/// For every desk concept with two or more ranked videos: a boost just above
/// the weight ratio lifts the runner-up to first place, one just below does not.
pub fn check_feedback_promotion() -> Result<usize, String> {
    let base = desk_engine();
    let mut checked = 0;
    for concept in base.index().concepts() {
        let Some(ctx) = base.contexts().iter().find(|c| c.contains(concept.id)) else {
            continue;
        };
        let ranking = conceptnav_core::weighting::rank_videos_for_concept(base.table(), concept.id)
            .map_err(|e| e.to_string())?;
        if ranking.len() < 2 {
            continue;
        }
        let (top, second) = (&ranking[0], &ranking[1]);
        let threshold = top.weight / second.weight;
        for (factor, promoted) in [(threshold * 1.01, true), (threshold * 0.99, false)] {
            if factor <= 1.0 {
                continue;
            }
            let engine = desk_engine_with(NavConfig {
                relevant_factor: factor,
                ..NavConfig::default()
            });
            let mut s = engine.start_session();
            engine
                .select_context(&mut s, ctx.num)
                .map_err(|e| e.to_string())?;
            engine
                .select_concept(&mut s, concept.id)
                .map_err(|e| e.to_string())?;
            let after = engine
                .apply_feedback(&mut s, std::slice::from_ref(&second.video), &[])
                .map_err(|e| e.to_string())?;
            if (after[0].video == second.video) != promoted {
                return Err(format!(
                    "concept {}: factor {factor} (threshold {threshold}) gave top {}",
                    concept.id, after[0].video
                ));
            }
        }
        checked += 1;
    }
    if checked == 0 {
        return Err("no desk concept has two ranked videos".into());
    }
    Ok(checked)
}

/// The desk corpus read straight from its JSON lines, without the library
/// parser.
pub fn desk_raw() -> RawCorpus {
    let mut raw = RawCorpus {
        concepts: vec![],
        videos: vec![],
        nodes: vec![],
        edges: vec![],
    };
    for line in fixture("desk/index.jsonl")
        .lines()
        .filter(|l| !l.trim().is_empty())
    {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        if let Some(c) = v.get("concept") {
            raw.concepts.push(c["id"].as_u64().unwrap() as u32);
        } else {
            let shots = v["video"]["shots"]
                .as_array()
                .unwrap()
                .iter()
                .map(|s| {
                    s.as_array()
                        .unwrap()
                        .iter()
                        .map(|x| x.as_u64().unwrap() as u32)
                        .collect()
                })
                .collect();
            raw.videos.push(shots);
        }
    }
    raw.nodes = raw.concepts.clone();
    for line in fixture("desk/ontology.jsonl")
        .lines()
        .filter(|l| !l.trim().is_empty())
    {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        if let Some(e) = v.get("edge") {
            raw.edges
                .push((e[0].as_u64().unwrap() as u32, e[1].as_u64().unwrap() as u32));
        }
    }
    raw
}
