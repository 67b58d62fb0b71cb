mod common;

use std::collections::{BTreeSet, HashSet};

use common::clustered_matrix;
use egvi::egograph::{build_ego_graph, EgoError, EgoGraph, EgoParams};
use egvi::evalbench::PlantedFixture;

fn check_invariants(g: &EgoGraph) {
    let vertices: BTreeSet<usize> = g.vertices.iter().copied().collect();
    let neighborhood: HashSet<usize> = g.neighborhood.iter().map(|n| n.word_id).collect();
    assert!(!vertices.contains(&g.ego));
    assert!(vertices.len() <= g.params.n);
    assert!(g.anti_edges.len() <= g.params.n);
    assert!(vertices.iter().all(|v| neighborhood.contains(v)));
    for v in &vertices {
        assert!(
            g.anti_edges.iter().any(|e| e.touches(*v)),
            "vertex {v} has no anti-edge"
        );
    }
    let forbidden: HashSet<(usize, usize)> = g.anti_edges.iter().map(|e| e.key()).collect();
    for e in &g.edges {
        assert!(e.a < e.b);
        assert!(vertices.contains(&e.a) && vertices.contains(&e.b));
        assert!(
            !forbidden.contains(&(e.a, e.b)),
            "edge {e:?} is an anti-edge"
        );
        assert!((0.0..=1.0).contains(&e.weight));
    }
    for e in &g.anti_edges {
        assert_ne!(e.member, e.anti);
        assert!(neighborhood.contains(&e.member) && neighborhood.contains(&e.anti));
    }
}

#[test]
fn fixture_anti_edges_cross_planted_clusters() {
    let f = PlantedFixture::build();
    let ego = f.matrix.id(&f.ego).unwrap();
    let g = build_ego_graph(&f.matrix, ego, EgoParams::new(30, 30)).unwrap();
    check_invariants(&g);
    assert!(!g.anti_edges.is_empty());
    for e in &g.anti_edges {
        let a = f.label(f.matrix.word(e.member)).unwrap();
        let b = f.label(f.matrix.word(e.anti)).unwrap();
        assert_ne!(a, b, "anti-edge inside cluster {a}");
    }
    // every planted cluster survives the vertex filter
    let clusters: BTreeSet<usize> = g
        .vertices
        .iter()
        .map(|&v| f.label(f.matrix.word(v)).unwrap())
        .collect();
    assert_eq!(clusters.len(), 3);
}

#[test]
fn random_ego_graphs_keep_invariants() {
    let mut built = 0;
    for seed in 0..200u64 {
        if built == 50 {
            break;
        }
        let m = clustered_matrix(seed, 4, 40, 12, 0.6);
        let ego = (seed as usize * 37) % m.len();
        let n = 10 + (seed as usize % 4) * 10;
        let k = 5 + (seed as usize % 3) * 10;
        match build_ego_graph(&m, ego, EgoParams::new(n, k)) {
            Ok(g) => {
                check_invariants(&g);
                built += 1;
            }
            Err(EgoError::EmptyGraph(_)) => {}
            Err(e) => panic!("seed {seed}: {e}"),
        }
    }
    assert_eq!(built, 50, "too many empty graphs");
}

#[test]
fn construction_is_deterministic() {
    let m = clustered_matrix(3, 5, 30, 10, 0.5);
    let a = build_ego_graph(&m, 4, EgoParams::new(40, 20)).unwrap();
    for _ in 0..5 {
        assert_eq!(build_ego_graph(&m, 4, EgoParams::new(40, 20)).unwrap(), a);
    }
}

#[test]
fn deeper_anti_pair_search_never_shrinks_the_graph() {
    let m = clustered_matrix(8, 4, 40, 12, 0.6);
    for ego in [0, 50, 100] {
        let shallow = build_ego_graph(&m, ego, EgoParams::new(20, 10))
            .map(|g| g.vertices.len())
            .unwrap_or(0);
        let deep = build_ego_graph(
            &m,
            ego,
            EgoParams {
                anti_depth: 5,
                ..EgoParams::new(20, 10)
            },
        )
        .map(|g| {
            check_invariants(&g);
            g.vertices.len()
        })
        .unwrap_or(0);
        assert!(deep >= shallow);
    }
}
