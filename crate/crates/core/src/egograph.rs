//! Anti-edge filtered ego-graphs.
//!
//! For an ego word `w` with nearest neighbours `𝒩`, every neighbour `w_i` is
//! paired with the word closest to `w - w_i` (its anti-pair). Only
//! neighbours whose anti-pair is itself in `𝒩` become vertices, and a
//! neighbour is never connected to its anti-pair.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

use crate::vectorstore::{EmbeddingMatrix, Neighbor, VectorError, WordId};
use crate::whispers::WeightedGraph;

#[derive(Debug, Error)]
pub enum EgoError {
    #[error(transparent)]
    Vector(#[from] VectorError),
    #[error("word id {0} is out of vocabulary")]
    UnknownId(WordId),
    #[error("{ego:?} and {member:?} have identical vectors")]
    DegenerateDelta { ego: String, member: String },
    #[error("ego-graph of {0:?} has no vertices")]
    EmptyGraph(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EgoParams {
    /// Size of the ego word's neighbour list.
    pub n: usize,
    /// Size of each vertex's neighbour list when wiring edges.
    pub k: usize,
    /// How many nearest words of `w - w_i` are considered as anti-pair
    /// candidates; the first one inside `𝒩` is used.
    pub anti_depth: usize,
}

impl EgoParams {
    pub fn new(n: usize, k: usize) -> Self {
        Self {
            n,
            k,
            anti_depth: 1,
        }
    }

    fn validate(&self) -> Result<(), EgoError> {
        if self.n < 2 {
            return Err(EgoError::InvalidParams("N must be at least 2"));
        }
        if self.k < 1 {
            return Err(EgoError::InvalidParams("K must be at least 1"));
        }
        if self.anti_depth < 1 {
            return Err(EgoError::InvalidParams(
                "anti-pair depth must be at least 1",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AntiEdge {
    pub member: WordId,
    pub anti: WordId,
}

impl AntiEdge {
    pub fn touches(&self, v: WordId) -> bool {
        self.member == v || self.anti == v
    }

    /// Unordered key of the pair.
    pub fn key(&self) -> (WordId, WordId) {
        (self.member.min(self.anti), self.member.max(self.anti))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub a: WordId,
    pub b: WordId,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EgoGraph {
    pub ego: WordId,
    pub params: EgoParams,
    /// Top-N neighbours of the ego word.
    pub neighborhood: Vec<Neighbor>,
    /// Sorted ascending.
    pub vertices: Vec<WordId>,
    /// Each unordered pair once, with `a < b`, sorted.
    pub edges: Vec<Edge>,
    /// One entry per neighbour whose anti-pair is in the neighbourhood,
    /// in neighbourhood order. Repeated anti-pairs are kept.
    pub anti_edges: Vec<AntiEdge>,
}

/// Nearest words to `vector(ego) - vector(member)`, excluding both.
pub fn anti_pair_candidates(
    matrix: &EmbeddingMatrix,
    ego: WordId,
    member: WordId,
    depth: usize,
) -> Result<Vec<Neighbor>, EgoError> {
    for id in [ego, member] {
        if id >= matrix.len() {
            return Err(EgoError::UnknownId(id));
        }
    }
    let delta: Vec<f64> = matrix
        .row(ego)
        .iter()
        .zip(matrix.row(member))
        .map(|(w, wi)| w - wi)
        .collect();
    match matrix.top_k(&delta, depth, &[ego, member]) {
        Err(VectorError::ZeroQuery) => Err(EgoError::DegenerateDelta {
            ego: matrix.word(ego).to_string(),
            member: matrix.word(member).to_string(),
        }),
        other => Ok(other?),
    }
}

/// The anti-pair of `member` with respect to `ego`: the single word most
/// similar to `vector(ego) - vector(member)`.
pub fn anti_pair(
    matrix: &EmbeddingMatrix,
    ego: WordId,
    member: WordId,
) -> Result<WordId, EgoError> {
    let best = anti_pair_candidates(matrix, ego, member, 1)?;
    best.first()
        .map(|n| n.word_id)
        .ok_or(EgoError::InvalidParams(
            "vocabulary too small for an anti-pair",
        ))
}

pub fn build_ego_graph(
    matrix: &EmbeddingMatrix,
    ego: WordId,
    params: EgoParams,
) -> Result<EgoGraph, EgoError> {
    params.validate()?;
    if ego >= matrix.len() {
        return Err(EgoError::UnknownId(ego));
    }
    let neighborhood = matrix.neighbors(ego, params.n)?;
    let in_neighborhood: HashSet<WordId> = neighborhood.iter().map(|n| n.word_id).collect();

    let anti_edges: Vec<AntiEdge> = neighborhood
        .par_iter()
        .map(|n| -> Result<Option<AntiEdge>, EgoError> {
            let candidates = match anti_pair_candidates(matrix, ego, n.word_id, params.anti_depth) {
                Ok(c) => c,
                Err(EgoError::DegenerateDelta { .. }) => return Ok(None),
                Err(e) => return Err(e),
            };
            Ok(candidates
                .iter()
                .find(|c| in_neighborhood.contains(&c.word_id))
                .map(|c| AntiEdge {
                    member: n.word_id,
                    anti: c.word_id,
                }))
        })
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .flatten()
        .collect();

    let vertices: Vec<WordId> = anti_edges
        .iter()
        .flat_map(|e| [e.member, e.anti])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if vertices.is_empty() {
        return Err(EgoError::EmptyGraph(matrix.word(ego).to_string()));
    }

    let vertex_set: HashSet<WordId> = vertices.iter().copied().collect();
    let forbidden: HashSet<(WordId, WordId)> = anti_edges.iter().map(AntiEdge::key).collect();
    let lists: Vec<(WordId, Vec<Neighbor>)> = vertices
        .par_iter()
        .map(|&v| matrix.neighbors(v, params.k).map(|list| (v, list)))
        .collect::<Result<_, _>>()?;

    let mut edges: BTreeMap<(WordId, WordId), f64> = BTreeMap::new();
    for (v, list) in lists {
        for u in list {
            if !vertex_set.contains(&u.word_id) {
                continue;
            }
            let key = (v.min(u.word_id), v.max(u.word_id));
            if forbidden.contains(&key) {
                continue;
            }
            edges.entry(key).or_insert(u.score.max(0.0));
        }
    }

    Ok(EgoGraph {
        ego,
        params,
        neighborhood,
        vertices,
        edges: edges
            .into_iter()
            .map(|((a, b), weight)| Edge { a, b, weight })
            .collect(),
        anti_edges,
    })
}

impl EgoGraph {
    /// The graph re-indexed over `0..vertices.len()` for clustering;
    /// position `i` corresponds to `self.vertices[i]`.
    pub fn to_weighted(&self) -> WeightedGraph {
        let position = |w: WordId| {
            self.vertices
                .binary_search(&w)
                .expect("edge endpoint is a vertex")
        };
        let mut g = WeightedGraph::new(self.vertices.len());
        for e in &self.edges {
            g.add_edge(position(e.a), position(e.b), e.weight);
        }
        g
    }

    /// Neighbours of the ego word that did not make it into the graph.
    pub fn pruned(&self) -> usize {
        self.neighborhood.len() - self.vertices.len()
    }

    /// Graphviz rendering: solid edges weighted by similarity, anti-edges
    /// dashed red.
    pub fn to_dot(&self, matrix: &EmbeddingMatrix) -> String {
        let quote = |id: WordId| {
            format!(
                "\"{}\"",
                matrix.word(id).replace('\\', "\\\\").replace('"', "\\\"")
            )
        };
        let mut out = String::new();
        let _ = writeln!(out, "graph {} {{", quote(self.ego));
        let _ = writeln!(out, "  label={};", quote(self.ego));
        for &v in &self.vertices {
            let _ = writeln!(out, "  {};", quote(v));
        }
        for e in &self.edges {
            let _ = writeln!(
                out,
                "  {} -- {} [weight={:.4}];",
                quote(e.a),
                quote(e.b),
                e.weight
            );
        }
        let mut seen = HashSet::new();
        for e in &self.anti_edges {
            if seen.insert(e.key()) {
                let _ = writeln!(
                    out,
                    "  {} -- {} [style=dashed, color=red, constraint=false];",
                    quote(e.member),
                    quote(e.anti)
                );
            }
        }
        out.push_str("}\n");
        out
    }
}
