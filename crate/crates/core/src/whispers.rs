//! Chinese Whispers label propagation.
//!
//! Every vertex starts in its own class. Each iteration visits the vertices
//! in a seeded random order and moves each one to the class with the largest
//! summed edge weight among its neighbours. The number of clusters is not
//! fixed up front.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const DEFAULT_MAX_ITER: usize = 20;

/// Undirected graph with non-negative edge weights over vertices `0..n`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WeightedGraph {
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl WeightedGraph {
    pub fn new(n: usize) -> Self {
        Self {
            adjacency: vec![Vec::new(); n],
        }
    }

    /// Adds the undirected edge `{a, b}`. Self-loops are ignored.
    ///
    /// Panics if either endpoint is out of range or the weight is negative.
    pub fn add_edge(&mut self, a: usize, b: usize, weight: f64) {
        assert!(weight >= 0.0, "edge weights must be non-negative");
        if a == b {
            return;
        }
        self.adjacency[a].push((b, weight));
        self.adjacency[b].push((a, weight));
    }

    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    pub fn neighbors(&self, v: usize) -> &[(usize, f64)] {
        &self.adjacency[v]
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    /// Disjoint vertex sets, each sorted ascending, ordered by smallest member.
    pub clusters: Vec<Vec<usize>>,
    pub iterations_run: usize,
    pub converged: bool,
}

impl Clustering {
    /// Cluster index of every vertex.
    pub fn assignment(&self, n: usize) -> Vec<usize> {
        let mut out = vec![usize::MAX; n];
        for (c, members) in self.clusters.iter().enumerate() {
            for &v in members {
                out[v] = c;
            }
        }
        out
    }
}

/// Runs Chinese Whispers with a visit order shuffled by a ChaCha8 stream
/// seeded from `seed`.
pub fn chinese_whispers(graph: &WeightedGraph, seed: u64, max_iter: usize) -> Clustering {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..graph.len()).collect();
    chinese_whispers_ordered(graph, max_iter, |_| {
        order.shuffle(&mut rng);
        order.clone()
    })
}

/// Runs Chinese Whispers with caller-supplied visit orders: `visit_order(i)`
/// returns the permutation of `0..n` used in iteration `i`.
///
/// A vertex adopts the label with the largest positive summed weight among
/// its neighbours, ties going to the smallest label. A vertex without any
/// positive-weight neighbour keeps its label.
pub fn chinese_whispers_ordered<F>(
    graph: &WeightedGraph,
    max_iter: usize,
    mut visit_order: F,
) -> Clustering
where
    F: FnMut(usize) -> Vec<usize>,
{
    let n = graph.len();
    let mut labels: Vec<usize> = (0..n).collect();
    let mut iterations_run = 0;
    let mut converged = n == 0;
    let mut scores: BTreeMap<usize, f64> = BTreeMap::new();

    while !converged && iterations_run < max_iter {
        iterations_run += 1;
        let mut changed = false;
        for v in visit_order(iterations_run - 1) {
            scores.clear();
            for &(u, w) in graph.neighbors(v) {
                *scores.entry(labels[u]).or_insert(0.0) += w;
            }
            // BTreeMap iterates labels ascending; strict > keeps the smallest on ties
            let mut best: Option<(usize, f64)> = None;
            for (&label, &total) in &scores {
                if total > 0.0 && best.is_none_or(|(_, b)| total > b) {
                    best = Some((label, total));
                }
            }
            if let Some((label, _)) = best {
                if label != labels[v] {
                    labels[v] = label;
                    changed = true;
                }
            }
        }
        converged = !changed;
    }

    let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (v, &label) in labels.iter().enumerate() {
        classes.entry(label).or_default().push(v);
    }
    let mut clusters: Vec<Vec<usize>> = classes.into_values().collect();
    clusters.sort_by_key(|c| c[0]);
    Clustering {
        clusters,
        iterations_run,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_graph() {
        let c = chinese_whispers(&WeightedGraph::new(0), 0, 20);
        assert!(c.clusters.is_empty());
        assert!(c.converged);
    }

    #[test]
    fn single_vertex() {
        let c = chinese_whispers(&WeightedGraph::new(1), 3, 20);
        assert_eq!(c.clusters, vec![vec![0]]);
        assert!(c.converged);
    }

    #[test]
    fn edgeless_graph_keeps_singletons() {
        let c = chinese_whispers(&WeightedGraph::new(4), 1, 20);
        assert_eq!(c.clusters.len(), 4);
    }

    #[test]
    fn path_collapses_to_one_label() {
        let mut g = WeightedGraph::new(3);
        g.add_edge(0, 1, 1.0);
        g.add_edge(1, 2, 1.0);
        for seed in 0..10 {
            let c = chinese_whispers(&g, seed, 20);
            assert_eq!(c.clusters, vec![vec![0, 1, 2]], "seed {seed}");
            assert!(c.converged);
        }
    }

    #[test]
    fn path_trace_for_fixed_order() {
        // order b, a, c: b -> min(0, 2) = 0; a -> label(b) = 0; c -> label(b) = 0
        let mut g = WeightedGraph::new(3);
        g.add_edge(0, 1, 1.0);
        g.add_edge(1, 2, 1.0);
        let c = chinese_whispers_ordered(&g, 20, |_| vec![1, 0, 2]);
        assert_eq!(c.clusters, vec![vec![0, 1, 2]]);
        assert_eq!(c.iterations_run, 2);
    }

    #[test]
    fn zero_weight_edges_do_not_propagate() {
        let mut g = WeightedGraph::new(2);
        g.add_edge(0, 1, 0.0);
        let c = chinese_whispers(&g, 0, 20);
        assert_eq!(c.clusters.len(), 2);
    }

    #[test]
    fn heavier_label_wins() {
        // visiting 2 first gives it 3's label, so 0 then sees {1: 0.2, 3: 0.3}
        let mut g = WeightedGraph::new(4);
        g.add_edge(0, 1, 0.2);
        g.add_edge(0, 2, 0.15);
        g.add_edge(0, 3, 0.15);
        g.add_edge(2, 3, 1.0);
        let c = chinese_whispers_ordered(&g, 1, |_| vec![2, 0, 1, 3]);
        assert_eq!(c.assignment(4)[0], c.assignment(4)[2]);
    }
}
