//! Word embeddings: loading, normalization and exact cosine k-NN search.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap};
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

/// Row index of a word in an [`EmbeddingMatrix`].
pub type WordId = usize;

/// Default vocabulary truncation.
pub const DEFAULT_VOCAB_LIMIT: usize = 100_000;

/// Rows scored per parallel shard in [`EmbeddingMatrix::top_k`].
const SHARD_ROWS: usize = 2048;

#[derive(Debug, Error)]
pub enum VectorError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: malformed header: {reason}")]
    MalformedHeader { line: usize, reason: String },
    #[error("line {line}: expected {expected} components, found {found}")]
    ComponentCount {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: invalid number {token:?}")]
    InvalidNumber { line: usize, token: String },
    #[error("line {line}: duplicate word {word:?} (first seen on line {first_line})")]
    DuplicateWord {
        word: String,
        line: usize,
        first_line: usize,
    },
    #[error("zero-norm vector for word {0:?}")]
    ZeroVector(String),
    #[error("file declares {declared} vectors but ends after {found}")]
    Truncated { declared: usize, found: usize },
    #[error("word {0:?} is out of vocabulary")]
    OutOfVocabulary(String),
    #[error("query vector has zero norm")]
    ZeroQuery,
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("k must be at least 1")]
    InvalidK,
}

/// A scored neighbour. Lists of neighbours are sorted by descending score,
/// ties broken by ascending word id.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub word_id: WordId,
    pub score: f64,
}

impl Neighbor {
    /// Total order in which "greater" means ranked earlier.
    fn rank_cmp(&self, other: &Self) -> Ordering {
        self.score
            .total_cmp(&other.score)
            .then_with(|| other.word_id.cmp(&self.word_id))
    }
}

struct Ranked(Neighbor);

impl PartialEq for Ranked {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Ranked {}
impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.rank_cmp(&other.0)
    }
}

/// Frequency-ordered vocabulary with unit-normalized dense vectors.
///
/// Immutable after construction; safe to share across threads.
#[derive(Debug, Clone)]
pub struct EmbeddingMatrix {
    words: Vec<String>,
    dim: usize,
    data: Vec<f64>,
    index: HashMap<String, WordId>,
}

impl EmbeddingMatrix {
    /// Builds a matrix from raw rows, normalizing each one.
    pub fn from_rows<I, S>(rows: I) -> Result<Self, VectorError>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: Into<String>,
    {
        let mut words = Vec::new();
        let mut data = Vec::new();
        let mut index = HashMap::new();
        let mut dim = None;
        for (line, (word, mut row)) in rows.into_iter().enumerate() {
            let word = word.into();
            let expected = *dim.get_or_insert(row.len());
            if row.len() != expected || expected == 0 {
                return Err(VectorError::ComponentCount {
                    line: line + 1,
                    expected,
                    found: row.len(),
                });
            }
            if let Some(&first) = index.get(&word) {
                return Err(VectorError::DuplicateWord {
                    word,
                    line: line + 1,
                    first_line: first + 1,
                });
            }
            normalize(&mut row).map_err(|_| VectorError::ZeroVector(word.clone()))?;
            index.insert(word.clone(), words.len());
            words.push(word);
            data.extend_from_slice(&row);
        }
        Ok(Self {
            words,
            dim: dim.unwrap_or(0),
            data,
            index,
        })
    }

    /// Reads word2vec text format, keeping at most `limit` rows in file order.
    ///
    /// The header is `<count> <dim>`; each following line is the word and
    /// `dim` space-separated floats. Trailing spaces and CRLF are tolerated.
    pub fn read_word2vec<R: BufRead>(reader: R, limit: usize) -> Result<Self, VectorError> {
        let mut lines = reader.lines();
        let header = match lines.next() {
            Some(line) => line?,
            None => {
                return Err(VectorError::MalformedHeader {
                    line: 1,
                    reason: "empty input".into(),
                })
            }
        };
        let (declared, dim) = parse_header(&header)?;
        let wanted = declared.min(limit);

        let mut words = Vec::with_capacity(wanted);
        let mut data = Vec::with_capacity(wanted * dim);
        let mut index: HashMap<String, WordId> = HashMap::with_capacity(wanted);
        let mut row = Vec::with_capacity(dim);
        for (offset, line) in lines.enumerate() {
            if words.len() == wanted {
                break;
            }
            let lineno = offset + 2;
            let line = line?;
            let line = line.trim_end_matches(['\r', ' ']);
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split(' ');
            let word = parts.next().unwrap_or_default();
            row.clear();
            for token in parts {
                let value = token
                    .parse::<f64>()
                    .map_err(|_| VectorError::InvalidNumber {
                        line: lineno,
                        token: token.to_string(),
                    })?;
                row.push(value);
            }
            if row.len() != dim {
                return Err(VectorError::ComponentCount {
                    line: lineno,
                    expected: dim,
                    found: row.len(),
                });
            }
            if let Some(&first) = index.get(word) {
                return Err(VectorError::DuplicateWord {
                    word: word.to_string(),
                    line: lineno,
                    // ids are assigned in line order after the header
                    first_line: first + 2,
                });
            }
            normalize(&mut row).map_err(|_| VectorError::ZeroVector(word.to_string()))?;
            index.insert(word.to_string(), words.len());
            words.push(word.to_string());
            data.extend_from_slice(&row);
        }
        if words.len() < wanted {
            return Err(VectorError::Truncated {
                declared,
                found: words.len(),
            });
        }
        Ok(Self {
            words,
            dim,
            data,
            index,
        })
    }

    pub fn load(path: impl AsRef<Path>, limit: usize) -> Result<Self, VectorError> {
        let file = File::open(path)?;
        Self::read_word2vec(BufReader::new(file), limit)
    }

    /// Writes the (normalized) matrix in word2vec text format.
    pub fn write_word2vec<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{} {}", self.len(), self.dim)?;
        for (id, word) in self.words.iter().enumerate() {
            write!(out, "{word}")?;
            for x in self.row(id) {
                write!(out, " {x}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn word(&self, id: WordId) -> &str {
        &self.words[id]
    }

    /// Exact-match id lookup.
    pub fn id(&self, word: &str) -> Option<WordId> {
        self.index.get(word).copied()
    }

    /// Id lookup with a single lowercase retry on miss.
    pub fn lookup(&self, word: &str) -> Result<WordId, VectorError> {
        self.id(word)
            .or_else(|| self.id(&word.to_lowercase()))
            .ok_or_else(|| VectorError::OutOfVocabulary(word.to_string()))
    }

    pub fn row(&self, id: WordId) -> &[f64] {
        &self.data[id * self.dim..(id + 1) * self.dim]
    }

    /// Unit vector for `word`, see [`lookup`](Self::lookup).
    pub fn vector(&self, word: &str) -> Result<&[f64], VectorError> {
        self.lookup(word).map(|id| self.row(id))
    }

    /// Exact top-`k` cosine neighbours of `query` over the whole vocabulary.
    ///
    /// Returns `min(k, |V| - |exclude ∩ V|)` neighbours. Shards are scored
    /// in parallel and merged under a total order, so the result does not
    /// depend on scheduling.
    pub fn top_k(
        &self,
        query: &[f64],
        k: usize,
        exclude: &[WordId],
    ) -> Result<Vec<Neighbor>, VectorError> {
        if k == 0 {
            return Err(VectorError::InvalidK);
        }
        if query.len() != self.dim {
            return Err(VectorError::DimensionMismatch {
                expected: self.dim,
                found: query.len(),
            });
        }
        let mut unit = query.to_vec();
        normalize(&mut unit).map_err(|_| VectorError::ZeroQuery)?;

        let shards: Vec<Vec<Neighbor>> = self
            .data
            .par_chunks(SHARD_ROWS * self.dim.max(1))
            .enumerate()
            .map(|(shard, rows)| {
                let base = shard * SHARD_ROWS;
                let mut heap: BinaryHeap<Reverse<Ranked>> = BinaryHeap::with_capacity(k + 1);
                for (offset, row) in rows.chunks_exact(self.dim).enumerate() {
                    let word_id = base + offset;
                    if exclude.contains(&word_id) {
                        continue;
                    }
                    let candidate = Neighbor {
                        word_id,
                        score: dot(row, &unit).clamp(-1.0, 1.0),
                    };
                    if heap.len() < k {
                        heap.push(Reverse(Ranked(candidate)));
                    } else if let Some(Reverse(worst)) = heap.peek() {
                        if candidate.rank_cmp(&worst.0) == Ordering::Greater {
                            heap.pop();
                            heap.push(Reverse(Ranked(candidate)));
                        }
                    }
                }
                heap.into_iter().map(|Reverse(Ranked(n))| n).collect()
            })
            .collect();

        let mut merged: Vec<Neighbor> = shards.into_iter().flatten().collect();
        merged.sort_by(|a, b| b.rank_cmp(a));
        merged.truncate(k);
        Ok(merged)
    }

    /// Top-`k` neighbours of a vocabulary word, excluding the word itself.
    pub fn neighbors(&self, id: WordId, k: usize) -> Result<Vec<Neighbor>, VectorError> {
        self.top_k(self.row(id), k, &[id])
    }
}

fn parse_header(header: &str) -> Result<(usize, usize), VectorError> {
    let bad = |reason: &str| VectorError::MalformedHeader {
        line: 1,
        reason: reason.to_string(),
    };
    let mut fields = header.trim_end_matches(['\r', ' ']).split(' ');
    let count = fields
        .next()
        .and_then(|f| f.parse::<usize>().ok())
        .ok_or_else(|| bad("expected \"<count> <dim>\""))?;
    let dim = fields
        .next()
        .and_then(|f| f.parse::<usize>().ok())
        .ok_or_else(|| bad("expected \"<count> <dim>\""))?;
    if fields.next().is_some() {
        return Err(bad("trailing fields"));
    }
    if dim == 0 {
        return Err(bad("dimension must be positive"));
    }
    Ok((count, dim))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Scales `v` to unit length in place.
///
/// Vectors already within a few ulps of unit length are left untouched, so
/// normalizing twice is bitwise identical to normalizing once.
pub fn normalize(v: &mut [f64]) -> Result<(), VectorError> {
    let n = norm(v);
    if n == 0.0 || !n.is_finite() {
        return Err(VectorError::ZeroQuery);
    }
    if (n - 1.0).abs() <= 4.0 * f64::EPSILON {
        return Ok(());
    }
    v.iter_mut().for_each(|x| *x /= n);
    Ok(())
}

/// Cosine similarity, clamped to `[-1, 1]`.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64, VectorError> {
    if a.len() != b.len() {
        return Err(VectorError::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(VectorError::ZeroQuery);
    }
    Ok((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}
