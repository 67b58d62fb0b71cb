#![allow(dead_code)]

use egvi::vectorstore::{EmbeddingMatrix, Neighbor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Reference k-NN: scores every row with a plain loop, sorts the full list.
/// Kept free of the crate's own dot/normalize helpers.
pub fn linear_scan_top_k(
    matrix: &EmbeddingMatrix,
    query: &[f64],
    k: usize,
    exclude: &[usize],
) -> Vec<Neighbor> {
    let mut qn = 0.0;
    for x in query {
        qn += x * x;
    }
    let qn = qn.sqrt();
    let mut all = Vec::new();
    for id in 0..matrix.len() {
        if exclude.contains(&id) {
            continue;
        }
        let row = matrix.row(id);
        let mut d = 0.0;
        let mut rn = 0.0;
        for i in 0..row.len() {
            d += row[i] * query[i];
            rn += row[i] * row[i];
        }
        all.push(Neighbor {
            word_id: id,
            score: d / (qn * rn.sqrt()),
        });
    }
    all.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap()
            .then(a.word_id.cmp(&b.word_id))
    });
    all.truncate(k);
    all
}

pub fn random_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()
}

pub fn random_matrix(seed: u64, words: usize, dim: usize) -> EmbeddingMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    EmbeddingMatrix::from_rows((0..words).map(|i| (format!("w{i}"), random_vector(&mut rng, dim))))
        .unwrap()
}

/// Words scattered around a few random centres, so ego-graphs have structure.
pub fn clustered_matrix(
    seed: u64,
    centres: usize,
    per_centre: usize,
    dim: usize,
    spread: f64,
) -> EmbeddingMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centres: Vec<Vec<f64>> = (0..centres).map(|_| random_vector(&mut rng, dim)).collect();
    let mut rows = Vec::new();
    for (c, centre) in centres.iter().enumerate() {
        for j in 0..per_centre {
            let v: Vec<f64> = centre
                .iter()
                .map(|x| x + spread * rng.random_range(-1.0..1.0))
                .collect();
            rows.push((format!("c{c}w{j}"), v));
        }
    }
    EmbeddingMatrix::from_rows(rows).unwrap()
}
