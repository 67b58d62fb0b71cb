//! Sense induction, keyword labelling, sense vectors and inventory files.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::egograph::{build_ego_graph, AntiEdge, EgoError, EgoParams};
use crate::vectorstore::{dot, EmbeddingMatrix, VectorError, WordId};
use crate::whispers::{chinese_whispers, DEFAULT_MAX_ITER};

/// Characters that would break the inventory TSV layout.
const RESERVED: [char; 3] = ['\t', ',', ':'];

#[derive(Debug, Error)]
pub enum InventoryError {
    #[error(transparent)]
    Vector(#[from] VectorError),
    #[error(transparent)]
    Ego(#[from] EgoError),
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("word {0:?} contains a tab, comma or colon and cannot be stored")]
    ReservedCharacter(String),
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("missing #params header")]
    MissingParams,
    #[error("checkpoint {path} was written with different parameters")]
    CheckpointMismatch { path: PathBuf },
    #[error("invalid parameters: {0}")]
    InvalidParams(&'static str),
}

/// Knobs of the per-word induction procedure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InductionParams {
    pub n: usize,
    pub k: usize,
    /// Weight of the ego vector in sense vectors.
    pub lambda: f64,
    pub seed: u64,
    /// Clusters smaller than this are dropped.
    pub min_size: usize,
    pub max_iter: usize,
    pub anti_depth: usize,
}

impl Default for InductionParams {
    fn default() -> Self {
        Self {
            n: 200,
            k: 200,
            lambda: 0.5,
            seed: 0,
            min_size: 1,
            max_iter: DEFAULT_MAX_ITER,
            anti_depth: 1,
        }
    }
}

impl InductionParams {
    pub fn with_neighbors(n: usize, k: usize) -> Self {
        Self {
            n,
            k,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<(), InventoryError> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(InventoryError::InvalidParams("lambda must be in [0, 1]"));
        }
        if self.min_size < 1 {
            return Err(InventoryError::InvalidParams("min size must be at least 1"));
        }
        if self.max_iter < 1 {
            return Err(InventoryError::InvalidParams(
                "max iterations must be at least 1",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Member {
    pub word: String,
    /// Cosine to the ego word, rounded to 6 decimals.
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SenseCluster {
    pub sense_id: usize,
    pub keyword: String,
    /// Ordered by weight descending, then vocabulary rank.
    pub members: Vec<Member>,
}

impl SenseCluster {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Parameters echoed in the inventory header.
#[derive(Debug, Clone, PartialEq)]
pub struct InventoryHeader {
    pub language: String,
    pub n: usize,
    pub k: usize,
    pub lambda: f64,
    pub vocab_limit: usize,
    pub seed: u64,
    /// Identifies the embedding file the inventory was induced from.
    pub source: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SenseInventory {
    pub header: InventoryHeader,
    pub entries: BTreeMap<String, Vec<SenseCluster>>,
}

/// Number of anti-edge entries, with multiplicity, that touch `v`.
pub fn count_anti_edges(anti_edges: &[AntiEdge], v: WordId) -> usize {
    anti_edges.iter().filter(|e| e.touches(v)).count()
}

/// Cluster label: the member with the most anti-edges. Ties go to the
/// member closer to the ego word, then to the smaller id.
///
/// Panics on an empty cluster.
pub fn select_keyword(
    members: &[WordId],
    anti_edges: &[AntiEdge],
    matrix: &EmbeddingMatrix,
    ego: WordId,
) -> WordId {
    members
        .iter()
        .map(|&m| {
            let count = count_anti_edges(anti_edges, m);
            let closeness = dot(matrix.row(ego), matrix.row(m));
            (m, count, closeness)
        })
        .max_by(|a, b| a.1.cmp(&b.1).then(a.2.total_cmp(&b.2)).then(b.0.cmp(&a.0)))
        .map(|(m, _, _)| m)
        .expect("cluster is non-empty")
}

/// `λ·w + (1-λ)/n · Σ cos(w,u)·u` over the cluster members `u`.
/// The result is not re-normalized.
pub fn sense_vector(
    matrix: &EmbeddingMatrix,
    ego: WordId,
    cluster: &SenseCluster,
    lambda: f64,
) -> Result<Vec<f64>, VectorError> {
    let w = matrix.row(ego);
    let mut centroid = vec![0.0; matrix.dim()];
    for member in &cluster.members {
        let id = matrix
            .id(&member.word)
            .ok_or_else(|| VectorError::OutOfVocabulary(member.word.clone()))?;
        let u = matrix.row(id);
        let c = dot(w, u);
        centroid.iter_mut().zip(u).for_each(|(s, x)| *s += c * x);
    }
    let n = cluster.members.len().max(1) as f64;
    Ok(w.iter()
        .zip(&centroid)
        .map(|(wx, sx)| lambda * wx + (1.0 - lambda) * (sx / n))
        .collect())
}

fn round6(x: f64) -> f64 {
    format!("{x:.6}").parse().expect("formatted float parses")
}

fn cluster_from_ids(
    matrix: &EmbeddingMatrix,
    ego: WordId,
    keyword: WordId,
    members: &[WordId],
) -> SenseCluster {
    let mut scored: Vec<(WordId, f64)> = members
        .iter()
        .map(|&m| (m, round6(dot(matrix.row(ego), matrix.row(m)))))
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    SenseCluster {
        sense_id: 0,
        keyword: matrix.word(keyword).to_string(),
        members: scored
            .into_iter()
            .map(|(id, weight)| Member {
                word: matrix.word(id).to_string(),
                weight,
            })
            .collect(),
    }
}

/// Induces the senses of one word: ego-graph, Chinese Whispers, size
/// filter, keyword labelling. Senses are numbered by descending size, then
/// keyword id. A word whose graph is empty (or loses every cluster to the
/// size filter) gets a single sense made of its nearest neighbour.
pub fn induce_senses(
    matrix: &EmbeddingMatrix,
    ego: WordId,
    params: &InductionParams,
) -> Result<Vec<SenseCluster>, InventoryError> {
    params.validate()?;
    let ego_params = EgoParams {
        n: params.n,
        k: params.k,
        anti_depth: params.anti_depth,
    };
    let mut labelled: Vec<(usize, WordId, Vec<WordId>)> =
        match build_ego_graph(matrix, ego, ego_params) {
            Ok(graph) => {
                let clustering =
                    chinese_whispers(&graph.to_weighted(), params.seed, params.max_iter);
                clustering
                    .clusters
                    .iter()
                    .filter(|c| c.len() >= params.min_size)
                    .map(|c| {
                        let members: Vec<WordId> = c.iter().map(|&i| graph.vertices[i]).collect();
                        let keyword = select_keyword(&members, &graph.anti_edges, matrix, ego);
                        (members.len(), keyword, members)
                    })
                    .collect()
            }
            Err(EgoError::EmptyGraph(_)) => Vec::new(),
            Err(e) => return Err(e.into()),
        };

    if labelled.is_empty() {
        let nearest = matrix.neighbors(ego, 1)?;
        let top = nearest
            .first()
            .ok_or(InventoryError::InvalidParams(
                "vocabulary has a single word",
            ))?
            .word_id;
        labelled.push((1, top, vec![top]));
    }

    labelled.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    Ok(labelled
        .iter()
        .enumerate()
        .map(|(sense_id, (_, keyword, members))| SenseCluster {
            sense_id,
            ..cluster_from_ids(matrix, ego, *keyword, members)
        })
        .collect())
}

/// Per-word seed: splitmix64 finalizer applied to
/// `seed + 0x9E3779B97F4A7C15 * (word_id + 1)` (wrapping).
pub fn mix_seed(seed: u64, word_id: WordId) -> u64 {
    let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(word_id as u64 + 1));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub enum WordSelection {
    All,
    Words(Vec<String>),
}

#[derive(Debug, Clone)]
pub struct BuildOptions {
    pub language: String,
    pub source: String,
    pub vocab_limit: usize,
    /// Worker threads; `None` uses the ambient rayon pool.
    pub jobs: Option<usize>,
    pub checkpoint: Option<PathBuf>,
    /// Words per checkpoint batch.
    pub checkpoint_every: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            language: "und".into(),
            source: String::new(),
            vocab_limit: crate::vectorstore::DEFAULT_VOCAB_LIMIT,
            jobs: None,
            checkpoint: None,
            checkpoint_every: 1000,
        }
    }
}

#[derive(Debug)]
pub struct BuildReport {
    pub inventory: SenseInventory,
    /// Words that could not be processed, with the reason.
    pub failures: Vec<(String, String)>,
    /// Words restored from a checkpoint instead of being recomputed.
    pub resumed: usize,
}

fn check_word(word: &str) -> Result<(), InventoryError> {
    if word.contains(RESERVED) || word.is_empty() {
        return Err(InventoryError::ReservedCharacter(word.to_string()));
    }
    Ok(())
}

fn induce_storable(
    matrix: &EmbeddingMatrix,
    id: WordId,
    params: &InductionParams,
) -> Result<Vec<SenseCluster>, InventoryError> {
    check_word(matrix.word(id))?;
    let senses = induce_senses(matrix, id, params)?;
    for m in senses.iter().flat_map(|s| &s.members) {
        check_word(&m.word)?;
    }
    Ok(senses)
}

/// Induces senses for many words in parallel.
///
/// Each word is clustered with `mix_seed(params.seed, id)`, so results do
/// not depend on scheduling. Per-word failures are collected, not fatal.
/// With a checkpoint path, finished batches are flushed to that file and a
/// later run with the same parameters skips the words it already holds.
pub fn build_inventory(
    matrix: &EmbeddingMatrix,
    words: &WordSelection,
    params: &InductionParams,
    options: &BuildOptions,
) -> Result<BuildReport, InventoryError> {
    params.validate()?;
    match options.jobs {
        Some(jobs) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build()
                .map_err(|e| io::Error::other(e.to_string()))?;
            pool.install(|| build_inner(matrix, words, params, options))
        }
        None => build_inner(matrix, words, params, options),
    }
}

fn build_inner(
    matrix: &EmbeddingMatrix,
    words: &WordSelection,
    params: &InductionParams,
    options: &BuildOptions,
) -> Result<BuildReport, InventoryError> {
    let header = InventoryHeader {
        language: options.language.clone(),
        n: params.n,
        k: params.k,
        lambda: params.lambda,
        vocab_limit: options.vocab_limit,
        seed: params.seed,
        source: options.source.clone(),
    };
    let mut inventory = SenseInventory {
        header,
        entries: BTreeMap::new(),
    };
    let mut failures = Vec::new();

    if let Some(path) = options.checkpoint.as_deref().filter(|p| p.exists()) {
        let saved = SenseInventory::load(path)?;
        if saved.header != inventory.header {
            return Err(InventoryError::CheckpointMismatch {
                path: path.to_path_buf(),
            });
        }
        inventory.entries = saved.entries;
    }
    let resumed = inventory.entries.len();

    let mut todo: Vec<WordId> = Vec::new();
    match words {
        WordSelection::All => todo.extend(0..matrix.len()),
        WordSelection::Words(list) => {
            for w in list {
                match matrix.lookup(w) {
                    Ok(id) => todo.push(id),
                    Err(e) => failures.push((w.clone(), e.to_string())),
                }
            }
        }
    }
    todo.sort_unstable();
    todo.dedup();
    todo.retain(|&id| !inventory.entries.contains_key(matrix.word(id)));

    let started = Instant::now();
    let total = todo.len();
    let batch = options.checkpoint_every.max(1);
    for (done, chunk) in todo.chunks(batch).enumerate() {
        let results: Vec<(WordId, Result<Vec<SenseCluster>, InventoryError>)> = chunk
            .par_iter()
            .map(|&id| {
                let word_params = InductionParams {
                    seed: mix_seed(params.seed, id),
                    ..*params
                };
                (id, induce_storable(matrix, id, &word_params))
            })
            .collect();
        for (id, result) in results {
            let word = matrix.word(id).to_string();
            match result {
                Ok(senses) => {
                    inventory.entries.insert(word, senses);
                }
                Err(e) => failures.push((word, e.to_string())),
            }
        }
        if let Some(path) = &options.checkpoint {
            inventory.save(path)?;
        }
        let processed = (done * batch + chunk.len()).min(total);
        log::info!(
            "induced {processed}/{total} words ({:.1}s)",
            started.elapsed().as_secs_f64()
        );
    }

    Ok(BuildReport {
        inventory,
        failures,
        resumed,
    })
}

impl fmt::Display for InventoryHeader {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "#params\tlang={}\tN={}\tK={}\tlambda={}\tvocab={}\tseed={}\tsource={}",
            self.language, self.n, self.k, self.lambda, self.vocab_limit, self.seed, self.source
        )
    }
}

const COLUMNS: &str = "word\tsense_id\tkeyword\tcluster";

impl SenseInventory {
    pub fn senses(&self, word: &str) -> Option<&[SenseCluster]> {
        self.entries.get(word).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Writes the TSV layout: a `#params` line, the column header, then one
    /// row per sense with `member:weight` pairs joined by commas.
    pub fn write<W: Write>(&self, mut out: W) -> Result<(), InventoryError> {
        for field in [&self.header.language, &self.header.source] {
            if field.contains(['\t', '\n', '\r']) {
                return Err(InventoryError::ReservedCharacter(field.clone()));
            }
        }
        writeln!(out, "{}", self.header)?;
        writeln!(out, "{COLUMNS}")?;
        for (word, senses) in &self.entries {
            check_word(word)?;
            for sense in senses {
                check_word(&sense.keyword)?;
                write!(out, "{word}\t{}\t{}\t", sense.sense_id, sense.keyword)?;
                for (i, m) in sense.members.iter().enumerate() {
                    check_word(&m.word)?;
                    if i > 0 {
                        out.write_all(b",")?;
                    }
                    write!(out, "{}:{:.6}", m.word, m.weight)?;
                }
                writeln!(out)?;
            }
        }
        out.flush()?;
        Ok(())
    }

    /// Saves atomically through a sibling temporary file.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), InventoryError> {
        let path = path.as_ref();
        let mut tmp = path.as_os_str().to_owned();
        tmp.push(".tmp");
        let tmp = PathBuf::from(tmp);
        self.write(BufWriter::new(File::create(&tmp)?))?;
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self, InventoryError> {
        let mut lines = reader.lines();
        let first = lines
            .next()
            .transpose()?
            .ok_or(InventoryError::MissingParams)?;
        let header = parse_header(first.trim_end_matches('\r'))?;
        let columns = lines.next().transpose()?.unwrap_or_default();
        if columns.trim_end_matches('\r') != COLUMNS {
            return Err(malformed(2, format!("expected column header {COLUMNS:?}")));
        }

        let mut entries: BTreeMap<String, Vec<SenseCluster>> = BTreeMap::new();
        for (offset, line) in lines.enumerate() {
            let lineno = offset + 3;
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let [word, sense_id, keyword, cluster] = fields[..] else {
                return Err(malformed(
                    lineno,
                    format!("expected 4 columns, found {}", fields.len()),
                ));
            };
            let sense_id: usize = sense_id
                .parse()
                .map_err(|_| malformed(lineno, format!("bad sense id {sense_id:?}")))?;
            let mut members = Vec::new();
            for item in cluster.split(',') {
                let (member, weight) = item
                    .rsplit_once(':')
                    .ok_or_else(|| malformed(lineno, format!("bad member {item:?}")))?;
                let weight: f64 = weight
                    .parse()
                    .map_err(|_| malformed(lineno, format!("bad weight {weight:?}")))?;
                if member.is_empty() || !(-1.0..=1.0).contains(&weight) {
                    return Err(malformed(lineno, format!("bad member {item:?}")));
                }
                members.push(Member {
                    word: member.to_string(),
                    weight,
                });
            }
            if !members.iter().any(|m| m.word == keyword) {
                return Err(malformed(
                    lineno,
                    format!("keyword {keyword:?} is not a member"),
                ));
            }
            let senses = entries.entry(word.to_string()).or_default();
            if sense_id != senses.len() {
                return Err(malformed(
                    lineno,
                    format!(
                        "sense id {sense_id} of {word:?} out of sequence, expected {}",
                        senses.len()
                    ),
                ));
            }
            senses.push(SenseCluster {
                sense_id,
                keyword: keyword.to_string(),
                members,
            });
        }
        Ok(Self { header, entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, InventoryError> {
        Self::read(BufReader::new(File::open(path)?))
    }
}

fn malformed(line: usize, reason: String) -> InventoryError {
    InventoryError::Malformed { line, reason }
}

fn parse_header(line: &str) -> Result<InventoryHeader, InventoryError> {
    let mut fields = line.split('\t');
    if fields.next() != Some("#params") {
        return Err(InventoryError::MissingParams);
    }
    let values: BTreeMap<&str, &str> = fields.filter_map(|f| f.split_once('=')).collect();
    let get = |key: &str| {
        values
            .get(key)
            .copied()
            .ok_or_else(|| malformed(1, format!("missing {key}=")))
    };
    fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, InventoryError> {
        value
            .parse()
            .map_err(|_| malformed(1, format!("bad value for {key}: {value:?}")))
    }
    Ok(InventoryHeader {
        language: get("lang")?.to_string(),
        n: num("N", get("N")?)?,
        k: num("K", get("K")?)?,
        lambda: num("lambda", get("lambda")?)?,
        vocab_limit: num("vocab", get("vocab")?)?,
        seed: num("seed", get("seed")?)?,
        source: get("source")?.to_string(),
    })
}

#[cfg(test)]
#[allow(clippy::approx_constant)] // 6-decimal weights, not constants
mod tests {
    use super::*;

    fn ae(member: WordId, anti: WordId) -> AntiEdge {
        AntiEdge { member, anti }
    }

    fn toy() -> EmbeddingMatrix {
        EmbeddingMatrix::from_rows([
            ("w", vec![1.0, 0.0]),
            ("a", vec![0.9, 0.1]),
            ("b", vec![0.5, 0.5]),
            ("u", vec![0.0, 1.0]),
        ])
        .unwrap()
    }

    fn header() -> InventoryHeader {
        InventoryHeader {
            language: "en".into(),
            n: 50,
            k: 50,
            lambda: 0.5,
            vocab_limit: 100_000,
            seed: 7,
            source: "toy.vec".into(),
        }
    }

    #[test]
    fn counts_with_multiplicity() {
        let (a, b, c, x, y, z) = (0, 1, 2, 3, 4, 5);
        let edges = [ae(a, x), ae(b, x), ae(c, y)];
        assert_eq!(count_anti_edges(&edges, x), 2);
        assert_eq!(count_anti_edges(&edges, a), 1);
        assert_eq!(count_anti_edges(&edges, z), 0);
    }

    #[test]
    fn keyword_is_strict_argmax() {
        let m = toy();
        let edges = [ae(1, 3), ae(1, 2), ae(1, 3), ae(2, 3)];
        // counts: a=3, b=2
        assert_eq!(select_keyword(&[1, 2], &edges, &m, 0), 1);
    }

    #[test]
    fn keyword_ties_prefer_closer_member() {
        let m = toy();
        // a and b both touch one anti-edge; a is closer to w
        let edges = [ae(1, 3), ae(2, 3)];
        assert_eq!(select_keyword(&[2, 1], &edges, &m, 0), 1);
    }

    #[test]
    fn sense_vector_extremes() {
        let m = toy();
        let cluster = SenseCluster {
            sense_id: 0,
            keyword: "b".into(),
            members: vec![
                Member {
                    word: "b".into(),
                    weight: 0.0,
                },
                Member {
                    word: "a".into(),
                    weight: 0.0,
                },
            ],
        };
        assert_eq!(sense_vector(&m, 0, &cluster, 1.0).unwrap(), m.row(0));

        let single = SenseCluster {
            sense_id: 0,
            keyword: "b".into(),
            members: vec![Member {
                word: "b".into(),
                weight: 0.0,
            }],
        };
        let c = dot(m.row(0), m.row(2));
        let expected: Vec<f64> = m.row(2).iter().map(|x| c * x).collect();
        assert_eq!(sense_vector(&m, 0, &single, 0.0).unwrap(), expected);

        let orthogonal = SenseCluster {
            sense_id: 0,
            keyword: "u".into(),
            members: vec![Member {
                word: "u".into(),
                weight: 0.0,
            }],
        };
        assert_eq!(
            sense_vector(&m, 0, &orthogonal, 0.5).unwrap(),
            vec![0.5, 0.0]
        );
    }

    #[test]
    fn mix_seed_spreads_ids() {
        assert_ne!(mix_seed(0, 0), mix_seed(0, 1));
        assert_ne!(mix_seed(0, 1), mix_seed(1, 1));
        assert_eq!(mix_seed(42, 9), mix_seed(42, 9));
    }

    #[test]
    fn empty_inventory_writes_headers_only() {
        let inv = SenseInventory {
            header: header(),
            entries: BTreeMap::new(),
        };
        let mut buf = Vec::new();
        inv.write(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "#params\tlang=en\tN=50\tK=50\tlambda=0.5\tvocab=100000\tseed=7\tsource=toy.vec\n\
             word\tsense_id\tkeyword\tcluster\n"
        );
        assert_eq!(SenseInventory::read(text.as_bytes()).unwrap(), inv);
    }

    #[test]
    fn one_row_per_sense() {
        let mut entries = BTreeMap::new();
        entries.insert(
            "w".to_string(),
            vec![
                SenseCluster {
                    sense_id: 0,
                    keyword: "a".into(),
                    members: vec![
                        Member {
                            word: "a".into(),
                            weight: 0.993884,
                        },
                        Member {
                            word: "b".into(),
                            weight: 0.707107,
                        },
                    ],
                },
                SenseCluster {
                    sense_id: 1,
                    keyword: "u".into(),
                    members: vec![Member {
                        word: "u".into(),
                        weight: 0.0,
                    }],
                },
            ],
        );
        let inv = SenseInventory {
            header: header(),
            entries,
        };
        let mut buf = Vec::new();
        inv.write(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let rows: Vec<&str> = text.lines().skip(2).collect();
        assert_eq!(
            rows,
            ["w\t0\ta\ta:0.993884,b:0.707107", "w\t1\tu\tu:0.000000"]
        );
        assert_eq!(SenseInventory::read(text.as_bytes()).unwrap(), inv);
    }

    #[test]
    fn read_reports_line_numbers() {
        let head = format!("{}\n{COLUMNS}\n", header());
        assert!(matches!(
            SenseInventory::read(format!("{head}w\t0\ta\n").as_bytes()),
            Err(InventoryError::Malformed { line: 3, .. })
        ));
        assert!(matches!(
            SenseInventory::read(format!("{head}w\t0\ta\ta:0.5\nw\t2\tb\tb:0.1\n").as_bytes()),
            Err(InventoryError::Malformed { line: 4, .. })
        ));
        assert!(matches!(
            SenseInventory::read(format!("{head}w\t0\tz\ta:0.5\n").as_bytes()),
            Err(InventoryError::Malformed { line: 3, .. })
        ));
        assert!(matches!(
            SenseInventory::read(format!("{head}w\t0\ta\ta:zz\n").as_bytes()),
            Err(InventoryError::Malformed { line: 3, .. })
        ));
        assert!(matches!(
            SenseInventory::read(format!("{COLUMNS}\n").as_bytes()),
            Err(InventoryError::MissingParams)
        ));
        assert!(matches!(
            SenseInventory::read("#params\tlang=en\tN=5\n".as_bytes()),
            Err(InventoryError::Malformed { line: 1, .. })
        ));
    }

    #[test]
    fn reserved_characters_are_rejected() {
        let m = EmbeddingMatrix::from_rows([
            ("a,b", vec![1.0, 0.0, 0.0]),
            ("c", vec![0.0, 1.0, 0.0]),
            ("d", vec![0.0, 0.9, 0.1]),
            ("e", vec![0.0, 0.8, 0.2]),
        ])
        .unwrap();
        let report = build_inventory(
            &m,
            &WordSelection::Words(vec!["a,b".into(), "d".into()]),
            &InductionParams::with_neighbors(2, 2),
            &BuildOptions::default(),
        )
        .unwrap();
        assert_eq!(report.failures.len(), 1);
        assert_eq!(report.failures[0].0, "a,b");
        assert!(report.inventory.entries.contains_key("d"));
    }

    #[test]
    fn fallback_sense_is_nearest_neighbor() {
        // graph of w is empty: anti-pairs of a and b fall on c
        let m = EmbeddingMatrix::from_rows([
            ("w", vec![1.0, 0.0, 0.0]),
            ("a", vec![0.9, 0.1, 0.0]),
            ("b", vec![0.9, 0.0, 0.1]),
            ("c", vec![0.5, -1.0, -1.0]),
        ])
        .unwrap();
        let senses = induce_senses(&m, 0, &InductionParams::with_neighbors(2, 2)).unwrap();
        assert_eq!(senses.len(), 1);
        assert_eq!(senses[0].keyword, "a");
        assert_eq!(senses[0].members.len(), 1);
    }

    #[test]
    fn unknown_words_are_reported_not_fatal() {
        let report = build_inventory(
            &toy(),
            &WordSelection::Words(vec!["nope".into(), "w".into()]),
            &InductionParams::with_neighbors(2, 2),
            &BuildOptions::default(),
        )
        .unwrap();
        assert_eq!(report.inventory.len(), 1);
        assert_eq!(report.failures[0].0, "nope");
    }
}
