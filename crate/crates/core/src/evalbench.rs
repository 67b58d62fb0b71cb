//! Word-similarity evaluation, inventory statistics and synthetic fixtures.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::disambig::SenseModel;
use crate::inventory::SenseInventory;
use crate::vectorstore::{cosine, EmbeddingMatrix};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("benchmark has no pairs")]
    Empty,
    #[error("series lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("correlation needs at least two points with non-zero variance")]
    DegenerateVariance,
    #[error("inventory is empty")]
    EmptyInventory,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WordPair {
    pub first: String,
    pub second: String,
    pub gold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Benchmark {
    pub name: String,
    pub pairs: Vec<WordPair>,
}

impl Benchmark {
    /// Parses `word1\tword2\tscore` rows; blank lines and `#` comments are skipped.
    pub fn read<R: BufRead>(name: impl Into<String>, reader: R) -> Result<Self, EvalError> {
        let mut pairs = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |reason: String| EvalError::Malformed {
                line: i + 1,
                reason,
            };
            let fields: Vec<&str> = line.split('\t').collect();
            let [first, second, score] = fields[..] else {
                return Err(bad(format!(
                    "expected 3 tab-separated fields, found {}",
                    fields.len()
                )));
            };
            let gold: f64 = score
                .trim()
                .parse()
                .map_err(|_| bad(format!("invalid score {score:?}")))?;
            if !gold.is_finite() {
                return Err(bad(format!("score {score:?} is not finite")));
            }
            pairs.push(WordPair {
                first: first.to_string(),
                second: second.to_string(),
                gold,
            });
        }
        if pairs.is_empty() {
            return Err(EvalError::Empty);
        }
        Ok(Self {
            name: name.into(),
            pairs,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EvalError> {
        let path = path.as_ref();
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Self::read(name, BufReader::new(File::open(path)?))
    }
}

/// Pearson product-moment correlation.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, EvalError> {
    if xs.len() != ys.len() {
        return Err(EvalError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return Err(EvalError::DegenerateVariance);
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(EvalError::DegenerateVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// 1-based ranks, ties sharing their average rank.
fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            out[idx] = rank;
        }
        i = j + 1;
    }
    out
}

/// Spearman correlation: Pearson over average ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64, EvalError> {
    if xs.len() != ys.len() {
        return Err(EvalError::LengthMismatch(xs.len(), ys.len()));
    }
    pearson(&ranks(xs), &ranks(ys))
}

/// How word pairs are scored.
#[derive(Debug, Clone, Copy)]
pub enum Scoring<'a> {
    /// Cosine of the plain word vectors.
    Baseline,
    /// Max-sim over sense vectors.
    Senses(&'a SenseInventory),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub benchmark: String,
    pub mode: String,
    pub pearson: f64,
    pub spearman: f64,
    pub n_pairs: usize,
    pub n_pairs_used: usize,
    pub coverage: f64,
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<12} {}", "benchmark", self.benchmark)?;
        writeln!(f, "{:<12} {}", "mode", self.mode)?;
        writeln!(f, "{:<12} {:.4}", "pearson", self.pearson)?;
        writeln!(f, "{:<12} {:.4}", "spearman", self.spearman)?;
        writeln!(f, "{:<12} {}/{}", "pairs", self.n_pairs_used, self.n_pairs)?;
        write!(f, "{:<12} {:.4}", "coverage", self.coverage)
    }
}

/// Scores every pair; pairs with an unresolvable word are dropped and
/// lower the coverage instead of being scored 0.
pub fn evaluate_similarity(
    matrix: &EmbeddingMatrix,
    scoring: Scoring<'_>,
    benchmark: &Benchmark,
) -> Result<EvalReport, EvalError> {
    let scored: Vec<Option<(f64, f64)>> = benchmark
        .pairs
        .par_iter()
        .map(|p| {
            let predicted = match scoring {
                Scoring::Baseline => {
                    let a = matrix.vector(&p.first).ok()?;
                    let b = matrix.vector(&p.second).ok()?;
                    cosine(a, b).ok()?
                }
                Scoring::Senses(inventory) => SenseModel::new(matrix, inventory)
                    .relatedness(&p.first, &p.second)
                    .ok()?,
            };
            Some((p.gold, predicted))
        })
        .collect();
    let (gold, predicted): (Vec<f64>, Vec<f64>) = scored.into_iter().flatten().unzip();
    let n_pairs = benchmark.pairs.len();
    Ok(EvalReport {
        benchmark: benchmark.name.clone(),
        mode: match scoring {
            Scoring::Baseline => "baseline".into(),
            Scoring::Senses(_) => "senses".into(),
        },
        pearson: pearson(&predicted, &gold)?,
        spearman: spearman(&predicted, &gold)?,
        n_pairs,
        n_pairs_used: gold.len(),
        coverage: if n_pairs == 0 {
            0.0
        } else {
            gold.len() as f64 / n_pairs as f64
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InventoryStats {
    pub words: usize,
    pub mean: f64,
    pub median: f64,
    pub max: usize,
    /// Number of senses → number of words.
    pub histogram: BTreeMap<usize, usize>,
}

impl InventoryStats {
    pub fn from_counts(counts: impl IntoIterator<Item = usize>) -> Result<Self, EvalError> {
        let mut counts: Vec<usize> = counts.into_iter().collect();
        if counts.is_empty() {
            return Err(EvalError::EmptyInventory);
        }
        counts.sort_unstable();
        let n = counts.len();
        let median = if n % 2 == 1 {
            counts[n / 2] as f64
        } else {
            (counts[n / 2 - 1] + counts[n / 2]) as f64 / 2.0
        };
        let mut histogram = BTreeMap::new();
        for &c in &counts {
            *histogram.entry(c).or_insert(0) += 1;
        }
        Ok(Self {
            words: n,
            mean: counts.iter().sum::<usize>() as f64 / n as f64,
            median,
            max: counts[n - 1],
            histogram,
        })
    }
}

/// Sense-count statistics over every entry of the inventory.
pub fn inventory_stats(inventory: &SenseInventory) -> Result<InventoryStats, EvalError> {
    InventoryStats::from_counts(inventory.entries.values().map(Vec::len))
}

/// Statistics restricted to the entries of the given words.
pub fn inventory_stats_for<'a>(
    inventory: &SenseInventory,
    words: impl IntoIterator<Item = &'a str>,
) -> Result<InventoryStats, EvalError> {
    let mut seen = std::collections::BTreeSet::new();
    InventoryStats::from_counts(
        words
            .into_iter()
            .filter(|w| seen.insert(*w))
            .filter_map(|w| inventory.entries.get(w).map(Vec::len)),
    )
}

/// SplitMix64, used for every fixture perturbation.
#[derive(Debug, Clone)]
pub struct SplitMix64(u64);

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[-1, 1)` from the top 53 bits.
    pub fn next_signed(&mut self) -> f64 {
        let unit = (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        2.0 * unit - 1.0
    }
}

/// Synthetic embeddings with three planted senses around one ego word.
///
/// Prototypes are the first three basis vectors of a 16-dimensional space.
/// Member `j` of cluster `c` is `normalize(e_c + 0.05 * r)` where `r` holds
/// 16 consecutive draws of [`SplitMix64`] seeded with
/// [`PlantedFixture::SEED`], drawn cluster by cluster, member by member.
/// The ego word is `normalize(e_1 + e_2 + e_3)` and comes first in the
/// vocabulary, followed by the members in cluster order.
#[derive(Debug, Clone)]
pub struct PlantedFixture {
    pub matrix: EmbeddingMatrix,
    pub ego: String,
    /// `(word, cluster)` for every member, clusters numbered 1..=3.
    pub labels: Vec<(String, usize)>,
}

impl PlantedFixture {
    pub const DIM: usize = 16;
    pub const CLUSTERS: usize = 3;
    pub const MEMBERS: usize = 20;
    pub const NOISE: f64 = 0.05;
    pub const SEED: u64 = 0x5EED_F1C5;
    pub const EGO: &'static str = "hub";

    pub fn member_name(cluster: usize, index: usize) -> String {
        format!("c{cluster}m{index:02}")
    }

    pub fn build() -> Self {
        let mut rng = SplitMix64::new(Self::SEED);
        let mut rows: Vec<(String, Vec<f64>)> = Vec::new();
        let mut ego = vec![0.0; Self::DIM];
        ego[..Self::CLUSTERS].fill(1.0);
        rows.push((Self::EGO.to_string(), ego));
        let mut labels = Vec::new();
        for cluster in 1..=Self::CLUSTERS {
            for j in 0..Self::MEMBERS {
                let mut v: Vec<f64> = (0..Self::DIM)
                    .map(|_| Self::NOISE * rng.next_signed())
                    .collect();
                v[cluster - 1] += 1.0;
                let name = Self::member_name(cluster, j);
                labels.push((name.clone(), cluster));
                rows.push((name, v));
            }
        }
        let matrix = EmbeddingMatrix::from_rows(rows).expect("fixture rows are valid");
        let fixture = Self {
            matrix,
            ego: Self::EGO.to_string(),
            labels,
        };
        fixture.assert_separated();
        fixture
    }

    /// Every intra-cluster cosine exceeds every inter-cluster cosine.
    fn assert_separated(&self) {
        let mut min_intra = f64::INFINITY;
        let mut max_inter = f64::NEG_INFINITY;
        for (i, (a, ca)) in self.labels.iter().enumerate() {
            for (b, cb) in &self.labels[i + 1..] {
                let c = cosine(
                    self.matrix.vector(a).expect("member"),
                    self.matrix.vector(b).expect("member"),
                )
                .expect("non-zero");
                if ca == cb {
                    min_intra = min_intra.min(c);
                } else {
                    max_inter = max_inter.max(c);
                }
            }
        }
        assert!(
            min_intra > max_inter,
            "fixture clusters overlap: {min_intra} <= {max_inter}"
        );
    }

    pub fn label(&self, word: &str) -> Option<usize> {
        self.labels.iter().find(|(w, _)| w == word).map(|&(_, c)| c)
    }

    pub fn members_of(&self, cluster: usize) -> Vec<&str> {
        self.labels
            .iter()
            .filter(|(_, c)| *c == cluster)
            .map(|(w, _)| w.as_str())
            .collect()
    }

    /// A sentence of `len` members of `cluster` with the ego word in the middle.
    pub fn sentence(&self, cluster: usize, len: usize) -> String {
        let members = self.members_of(cluster);
        let mut words: Vec<&str> = members.iter().cycle().take(len).copied().collect();
        words.insert(len / 2, &self.ego);
        words.join(" ")
    }

    /// `count` pairs of fixture words with gold scores from a fixed stream.
    pub fn benchmark(&self, count: usize) -> Benchmark {
        let mut rng = SplitMix64::new(Self::SEED ^ 0xBE4C);
        let words = self.matrix.words();
        let pairs = (0..count)
            .map(|_| {
                let a = (rng.next_u64() % words.len() as u64) as usize;
                let b = (rng.next_u64() % words.len() as u64) as usize;
                WordPair {
                    first: words[a].clone(),
                    second: words[b].clone(),
                    gold: 5.0 + 5.0 * rng.next_signed(),
                }
            })
            .collect();
        Benchmark {
            name: "planted".into(),
            pairs,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_benchmark_rows() {
        let b = Benchmark::read("t", "# comment\na\tb\t1.5\nc\td\t9\n".as_bytes()).unwrap();
        assert_eq!(b.pairs.len(), 2);
        assert_eq!(b.pairs[1].gold, 9.0);
        assert!(matches!(
            Benchmark::read("t", "a\tb\t1\na\tb\tx\n".as_bytes()),
            Err(EvalError::Malformed { line: 2, .. })
        ));
        assert!(matches!(
            Benchmark::read("t", "a b 1\n".as_bytes()),
            Err(EvalError::Malformed { line: 1, .. })
        ));
        assert!(matches!(
            Benchmark::read("t", "# only\n".as_bytes()),
            Err(EvalError::Empty)
        ));
    }

    #[test]
    fn pearson_closed_forms() {
        let xs = [1.0, 2.0, 3.0, 4.5];
        let up: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        let down: Vec<f64> = xs.iter().map(|x| -x).collect();
        assert!((pearson(&xs, &up).unwrap() - 1.0).abs() < 1e-12);
        assert!((pearson(&xs, &down).unwrap() + 1.0).abs() < 1e-12);
        assert!((pearson(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap() - 0.5).abs() < 1e-9);
        assert!(matches!(
            pearson(&[1.0, 1.0], &[1.0, 2.0]),
            Err(EvalError::DegenerateVariance)
        ));
        assert!(matches!(
            pearson(&[1.0], &[1.0]),
            Err(EvalError::DegenerateVariance)
        ));
        assert!(matches!(
            pearson(&[1.0], &[1.0, 2.0]),
            Err(EvalError::LengthMismatch(1, 2))
        ));
    }

    #[test]
    fn spearman_uses_average_ranks() {
        assert_eq!(ranks(&[10.0, 20.0, 20.0, 5.0]), vec![2.0, 3.5, 3.5, 1.0]);
        let s = spearman(&[1.0, 2.0, 3.0], &[1.0, 100.0, 1000.0]).unwrap();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stats_of_single_word() {
        let s = InventoryStats::from_counts([3]).unwrap();
        assert_eq!((s.mean, s.median, s.max), (3.0, 3.0, 3));
        let s = InventoryStats::from_counts([1, 4, 2, 1]).unwrap();
        assert_eq!((s.mean, s.median, s.max), (2.0, 1.5, 4));
        assert_eq!(s.histogram[&1], 2);
        assert!(matches!(
            InventoryStats::from_counts([]),
            Err(EvalError::EmptyInventory)
        ));
    }

    #[test]
    fn fixture_shape() {
        let f = PlantedFixture::build();
        assert_eq!(f.matrix.len(), 61);
        assert_eq!(f.matrix.dim(), 16);
        assert_eq!(f.matrix.word(0), "hub");
        assert_eq!(f.label("c2m07"), Some(2));
        assert_eq!(f.members_of(3).len(), 20);
        let s = f.sentence(1, 6);
        assert_eq!(s.split(' ').nth(3), Some("hub"));
    }

    #[test]
    fn baseline_on_cosine_gold_is_perfect() {
        let f = PlantedFixture::build();
        let mut bench = f.benchmark(20);
        for p in &mut bench.pairs {
            p.gold = cosine(
                f.matrix.vector(&p.first).unwrap(),
                f.matrix.vector(&p.second).unwrap(),
            )
            .unwrap();
        }
        bench.pairs.push(WordPair {
            first: "hub".into(),
            second: "unknown".into(),
            gold: 3.0,
        });
        let r = evaluate_similarity(&f.matrix, Scoring::Baseline, &bench).unwrap();
        assert!((r.pearson - 1.0).abs() < 1e-12);
        assert_eq!(r.n_pairs_used, 20);
        assert!((r.coverage - 20.0 / 21.0).abs() < 1e-12);
    }
}
