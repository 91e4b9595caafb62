//! Inter-concept similarity.
//!
//! The score multiplies two independent signals: the Dice coefficient of
//! the two concepts' shot sets in the corpus, and `1 / (1 + d)` where `d` is
//! the number of edges on a shortest undirected path between the concepts
//! in the ontology. Unreachable pairs score 0, as do concepts that label no
//! shot (including against themselves).

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::{ConceptId, CorpusIndex, Ontology, ShotRef};
use crate::error::{Error, Result};

/// Shortest-path length in edges, `None` when no path exists.
pub fn rada_distance(ontology: &Ontology, from: ConceptId, to: ConceptId) -> Result<Option<u32>> {
    for c in [from, to] {
        if !ontology.contains(c) {
            return Err(Error::UnknownNode(c));
        }
    }
    Ok(distances_from(ontology, from).get(&to).copied())
}

/// BFS distances from `source` to every reachable node (source included).
fn distances_from(ontology: &Ontology, source: ConceptId) -> BTreeMap<ConceptId, u32> {
    let mut dist = BTreeMap::from([(source, 0)]);
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        let du = dist[&u];
        for v in ontology.neighbors(u) {
            dist.entry(v).or_insert_with(|| {
                queue.push_back(v);
                du + 1
            });
        }
    }
    dist
}

fn dice(a: &BTreeSet<ShotRef>, b: &BTreeSet<ShotRef>) -> f64 {
    let total = a.len() + b.len();
    if total == 0 {
        return 0.0;
    }
    let shared = a.intersection(b).count();
    2.0 * shared as f64 / total as f64
}

fn combine(dice: f64, distance: Option<u32>) -> f64 {
    match distance {
        Some(d) => dice / (1.0 + f64::from(d)),
        None => 0.0,
    }
}

/// `2|E(a) ∩ E(b)| / (|E(a)| + |E(b)|)`, 0 when both sets are empty.
pub fn dice_overlap(index: &CorpusIndex, a: ConceptId, b: ConceptId) -> Result<f64> {
    Ok(dice(index.shots_indexed_by(a)?, index.shots_indexed_by(b)?))
}

pub fn concept_similarity(
    index: &CorpusIndex,
    ontology: &Ontology,
    a: ConceptId,
    b: ConceptId,
) -> Result<f64> {
    let overlap = dice_overlap(index, a, b)?;
    let distance = rada_distance(ontology, a, b)?;
    Ok(combine(overlap, distance))
}

/// Dense symmetric similarity matrix over every corpus concept.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixRepr", into = "MatrixRepr")]
pub struct SimilarityMatrix {
    ids: Vec<ConceptId>,
    pos: BTreeMap<ConceptId, usize>,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    concepts: Vec<ConceptId>,
    values: Vec<Vec<f64>>,
}

impl TryFrom<MatrixRepr> for SimilarityMatrix {
    type Error = String;

    fn try_from(repr: MatrixRepr) -> std::result::Result<Self, String> {
        let n = repr.concepts.len();
        if repr.values.len() != n || repr.values.iter().any(|r| r.len() != n) {
            return Err(format!("similarity matrix is not {n}x{n}"));
        }
        let pos: BTreeMap<_, _> = repr
            .concepts
            .iter()
            .enumerate()
            .map(|(i, &c)| (c, i))
            .collect();
        if pos.len() != n {
            return Err("duplicate concept in similarity matrix".into());
        }
        Ok(SimilarityMatrix {
            ids: repr.concepts,
            pos,
            values: repr.values.into_iter().flatten().collect(),
        })
    }
}

impl From<SimilarityMatrix> for MatrixRepr {
    fn from(m: SimilarityMatrix) -> Self {
        let n = m.ids.len();
        MatrixRepr {
            values: (0..n)
                .map(|i| m.values[i * n..(i + 1) * n].to_vec())
                .collect(),
            concepts: m.ids,
        }
    }
}

impl SimilarityMatrix {
    /// Computes every pair, in the corpus's concept order. Concepts missing
    /// from the ontology behave as isolated nodes.
    pub fn build(index: &CorpusIndex, ontology: &Ontology) -> Self {
        let ids: Vec<ConceptId> = index.concepts().iter().map(|c| c.id).collect();
        let n = ids.len();
        let shots: Vec<&BTreeSet<ShotRef>> = ids
            .iter()
            .map(|&c| index.shots_indexed_by(c).expect("concept from index"))
            .collect();
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            let dist = distances_from(ontology, ids[i]);
            for j in i..n {
                let v = combine(dice(shots[i], shots[j]), dist.get(&ids[j]).copied());
                values[i * n + j] = v;
                values[j * n + i] = v;
            }
        }
        let pos = ids.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        SimilarityMatrix { ids, pos, values }
    }

    pub fn concepts(&self) -> &[ConceptId] {
        &self.ids
    }

    pub fn contains(&self, c: ConceptId) -> bool {
        self.pos.contains_key(&c)
    }

    pub fn get(&self, a: ConceptId, b: ConceptId) -> Option<f64> {
        let (i, j) = (*self.pos.get(&a)?, *self.pos.get(&b)?);
        Some(self.values[i * self.ids.len() + j])
    }

    /// Row of `c` paired with concept ids, in matrix order.
    pub fn row(&self, c: ConceptId) -> Option<impl Iterator<Item = (ConceptId, f64)> + '_> {
        let i = *self.pos.get(&c)?;
        let n = self.ids.len();
        Some(
            self.ids
                .iter()
                .copied()
                .zip(self.values[i * n..(i + 1) * n].iter().copied()),
        )
    }

    /// Header row of concept ids, then one row per concept, 6 decimals.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("concept_id");
        for id in &self.ids {
            let _ = write!(out, ",{id}");
        }
        out.push('\n');
        let n = self.ids.len();
        for (i, id) in self.ids.iter().enumerate() {
            let _ = write!(out, "{id}");
            for v in &self.values[i * n..(i + 1) * n] {
                let _ = write!(out, ",{v:.6}");
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub concept: ConceptId,
    pub similarity: f64,
}

/// Concepts similar to `center`, best first, ties by ascending id.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConceptNeighborhood {
    pub center: ConceptId,
    pub neighbors: Vec<Neighbor>,
}

impl ConceptNeighborhood {
    pub fn contains(&self, c: ConceptId) -> bool {
        self.neighbors.iter().any(|n| n.concept == c)
    }
}

/// Neighbors of `center` with similarity `>= threshold`, at most `limit`
/// of them (`None` for no limit).
pub fn similar_concepts(
    matrix: &SimilarityMatrix,
    center: ConceptId,
    threshold: f64,
    limit: Option<usize>,
) -> Result<ConceptNeighborhood> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::invalid(format!(
            "threshold {threshold} outside [0, 1]"
        )));
    }
    let row = matrix.row(center).ok_or(Error::UnknownConcept(center))?;
    let mut neighbors: Vec<Neighbor> = row
        .filter(|&(c, s)| c != center && s >= threshold)
        .map(|(concept, similarity)| Neighbor {
            concept,
            similarity,
        })
        .collect();
    neighbors.sort_by(|a, b| {
        b.similarity
            .total_cmp(&a.similarity)
            .then(a.concept.cmp(&b.concept))
    });
    if let Some(k) = limit {
        neighbors.truncate(k);
    }
    Ok(ConceptNeighborhood { center, neighbors })
}
