//! Tokenization, context vectors, sense selection and max-sim relatedness.

use std::sync::OnceLock;

use regex::Regex;
use serde::Serialize;
use thiserror::Error;

use crate::inventory::{sense_vector, SenseCluster, SenseInventory};
use crate::vectorstore::{cosine, EmbeddingMatrix, VectorError, WordId};

#[derive(Debug, Error)]
pub enum DisambigError {
    #[error("no in-vocabulary context around the target token")]
    NoContext,
    #[error("token index {0} is out of range")]
    BadTarget(usize),
    #[error("word {0:?} has no inventory entry")]
    OutOfInventory(String),
    #[error(transparent)]
    Vector(#[from] VectorError),
}

/// A token with character (not byte) offsets into the input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Token {
    pub surface: String,
    pub char_start: usize,
    pub char_end: usize,
    /// `None` for out-of-vocabulary tokens or before resolution.
    #[serde(skip)]
    pub word_id: Option<WordId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Window {
    /// Every other token of the input.
    #[default]
    Sentence,
    /// Tokens at most this many positions away from the target.
    Tokens(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DisambiguationResult {
    pub sense_id: usize,
    pub keyword: String,
    /// Cosine between the chosen sense vector and the context vector.
    pub score: f64,
    /// Best score minus runner-up score; 0 for single-sense words.
    pub margin: f64,
    pub n_senses: usize,
    /// Set when there was no usable context and sense 0 was picked by default.
    pub low_confidence: bool,
}

/// Per-token outcome of [`SenseModel::disambiguate_text`].
#[derive(Debug, Clone, PartialEq)]
pub struct TokenAnalysis {
    pub token: Token,
    /// Number of inventory senses, 0 if the token has no entry.
    pub n_senses: usize,
    pub result: Option<DisambiguationResult>,
}

impl TokenAnalysis {
    pub fn ambiguous(&self) -> bool {
        self.n_senses >= 2
    }
}

fn punctuation() -> &'static (Regex, Regex) {
    static RE: OnceLock<(Regex, Regex)> = OnceLock::new();
    RE.get_or_init(|| {
        (
            Regex::new(r"^\p{P}+").expect("valid regex"),
            Regex::new(r"\p{P}+$").expect("valid regex"),
        )
    })
}

/// Splits on Unicode whitespace and peels leading/trailing punctuation off
/// each chunk, one token per punctuation character. Inner punctuation such
/// as hyphens stays in the word.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut chunk: Option<(usize, usize)> = None; // (byte start, char start)
    for (char_pos, (byte, ch)) in text.char_indices().enumerate() {
        if ch.is_whitespace() {
            if let Some((b, c)) = chunk.take() {
                split_chunk(&text[b..byte], c, &mut tokens);
            }
        } else if chunk.is_none() {
            chunk = Some((byte, char_pos));
        }
    }
    if let Some((b, c)) = chunk {
        split_chunk(&text[b..], c, &mut tokens);
    }
    tokens
}

fn split_chunk(chunk: &str, char_start: usize, out: &mut Vec<Token>) {
    let (leading, trailing) = punctuation();
    let lead_end = leading.find(chunk).map_or(0, |m| m.end());
    let trail_start = trailing
        .find(&chunk[lead_end..])
        .map_or(chunk.len(), |m| lead_end + m.start());

    let mut pos = char_start;
    let mut push = |surface: &str, out: &mut Vec<Token>| {
        let len = surface.chars().count();
        out.push(Token {
            surface: surface.to_string(),
            char_start: pos,
            char_end: pos + len,
            word_id: None,
        });
        pos += len;
    };
    for (i, ch) in chunk[..lead_end].char_indices() {
        push(&chunk[i..i + ch.len_utf8()], out);
    }
    if trail_start > lead_end {
        push(&chunk[lead_end..trail_start], out);
    }
    for (i, ch) in chunk[trail_start..].char_indices() {
        let at = trail_start + i;
        push(&chunk[at..at + ch.len_utf8()], out);
    }
}

/// Fills in `word_id` using the matrix lookup rule (exact, then lowercase).
pub fn resolve_tokens(matrix: &EmbeddingMatrix, tokens: &mut [Token]) {
    for t in tokens {
        t.word_id = matrix.lookup(&t.surface).ok();
    }
}

/// Mean of the in-vocabulary token vectors inside the window, excluding
/// the target itself.
pub fn context_vector(
    matrix: &EmbeddingMatrix,
    tokens: &[Token],
    target: usize,
    window: Window,
) -> Result<Vec<f64>, DisambigError> {
    if target >= tokens.len() {
        return Err(DisambigError::BadTarget(target));
    }
    let (lo, hi) = match window {
        Window::Sentence => (0, tokens.len()),
        Window::Tokens(k) => (target.saturating_sub(k), (target + k + 1).min(tokens.len())),
    };
    let mut sum = vec![0.0; matrix.dim()];
    let mut n = 0usize;
    for (j, t) in tokens.iter().enumerate().take(hi).skip(lo) {
        if j == target {
            continue;
        }
        if let Some(id) = t.word_id {
            sum.iter_mut()
                .zip(matrix.row(id))
                .for_each(|(s, x)| *s += x);
            n += 1;
        }
    }
    if n == 0 {
        return Err(DisambigError::NoContext);
    }
    let n = n as f64;
    sum.iter_mut().for_each(|s| *s /= n);
    Ok(sum)
}

/// Cosine that treats a zero vector as having no similarity to anything.
fn similarity(a: &[f64], b: &[f64]) -> Option<f64> {
    cosine(a, b).ok()
}

/// Position of the highest score, ties going to the smaller sense id, with
/// the margin to the runner-up.
fn argmax_with_margin(scores: &[f64], ids: &[usize]) -> (usize, f64, f64) {
    let mut best = 0;
    for i in 1..scores.len() {
        if scores[i] > scores[best] || (scores[i] == scores[best] && ids[i] < ids[best]) {
            best = i;
        }
    }
    let runner_up = scores
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != best)
        .map(|(_, &s)| s)
        .fold(f64::NEG_INFINITY, f64::max);
    let margin = if runner_up.is_finite() {
        (scores[best] - runner_up).max(0.0)
    } else {
        0.0
    };
    (best, scores[best], margin)
}

/// Disambiguation and relatedness over one matrix and its inventory.
#[derive(Debug, Clone, Copy)]
pub struct SenseModel<'a> {
    pub matrix: &'a EmbeddingMatrix,
    pub inventory: &'a SenseInventory,
}

impl<'a> SenseModel<'a> {
    pub fn new(matrix: &'a EmbeddingMatrix, inventory: &'a SenseInventory) -> Self {
        Self { matrix, inventory }
    }

    /// Inventory entry for a surface form, resolved like a vocabulary lookup.
    pub fn entry(&self, word: &str) -> Option<(&'a str, &'a [SenseCluster])> {
        let inventory = self.inventory;
        let canonical = match self.matrix.lookup(word) {
            Ok(id) => self.matrix.word(id).to_string(),
            Err(_) if inventory.entries.contains_key(word) => word.to_string(),
            Err(_) => word.to_lowercase(),
        };
        inventory
            .entries
            .get_key_value(&canonical)
            .map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Sense vectors of `word` with the inventory's λ.
    pub fn sense_vectors(&self, word: &str) -> Result<Vec<Vec<f64>>, DisambigError> {
        let (canonical, senses) = self
            .entry(word)
            .ok_or_else(|| DisambigError::OutOfInventory(word.to_string()))?;
        let ego = self
            .matrix
            .id(canonical)
            .ok_or_else(|| VectorError::OutOfVocabulary(canonical.to_string()))?;
        let lambda = self.inventory.header.lambda;
        senses
            .iter()
            .map(|s| sense_vector(self.matrix, ego, s, lambda).map_err(DisambigError::from))
            .collect()
    }

    /// Picks the sense whose vector is closest to `context`.
    pub fn disambiguate(
        &self,
        word: &str,
        context: &[f64],
    ) -> Result<DisambiguationResult, DisambigError> {
        let (_, senses) = self
            .entry(word)
            .ok_or_else(|| DisambigError::OutOfInventory(word.to_string()))?;
        let scores: Vec<f64> = self
            .sense_vectors(word)?
            .iter()
            .map(|s| similarity(s, context).unwrap_or(0.0))
            .collect();
        let ids: Vec<usize> = senses.iter().map(|s| s.sense_id).collect();
        let (best, score, margin) = argmax_with_margin(&scores, &ids);
        Ok(DisambiguationResult {
            sense_id: senses[best].sense_id,
            keyword: senses[best].keyword.clone(),
            score,
            margin,
            n_senses: senses.len(),
            low_confidence: false,
        })
    }

    /// Tokenizes `text` and resolves every token that has two or more senses.
    pub fn disambiguate_text(
        &self,
        text: &str,
        window: Window,
    ) -> Result<Vec<TokenAnalysis>, DisambigError> {
        let mut tokens = tokenize(text);
        resolve_tokens(self.matrix, &mut tokens);
        let mut out = Vec::with_capacity(tokens.len());
        for (i, token) in tokens.iter().enumerate() {
            let n_senses = self.entry(&token.surface).map_or(0, |(_, s)| s.len());
            let result = if n_senses >= 2 {
                Some(match context_vector(self.matrix, &tokens, i, window) {
                    Ok(context) => self.disambiguate(&token.surface, &context)?,
                    Err(DisambigError::NoContext) => self.default_sense(&token.surface, n_senses),
                    Err(e) => return Err(e),
                })
            } else {
                None
            };
            out.push(TokenAnalysis {
                token: token.clone(),
                n_senses,
                result,
            });
        }
        Ok(out)
    }

    fn default_sense(&self, word: &str, n_senses: usize) -> DisambiguationResult {
        let keyword = self
            .entry(word)
            .map(|(_, s)| s[0].keyword.clone())
            .unwrap_or_default();
        DisambiguationResult {
            sense_id: 0,
            keyword,
            score: 0.0,
            margin: 0.0,
            n_senses,
            low_confidence: true,
        }
    }

    /// Vectors standing for a word: its sense vectors if it has an
    /// inventory entry, otherwise its plain word vector.
    fn representations(&self, word: &str) -> Result<Vec<Vec<f64>>, DisambigError> {
        match self.sense_vectors(word) {
            Ok(v) => Ok(v),
            Err(DisambigError::OutOfInventory(_)) => Ok(vec![self.matrix.vector(word)?.to_vec()]),
            Err(e) => Err(e),
        }
    }

    /// Maximum cosine over all pairs of representations of the two words.
    pub fn relatedness(&self, w1: &str, w2: &str) -> Result<f64, DisambigError> {
        let a = self.representations(w1)?;
        let b = self.representations(w2)?;
        a.iter()
            .flat_map(|x| b.iter().filter_map(move |y| similarity(x, y)))
            .reduce(f64::max)
            .ok_or(DisambigError::Vector(VectorError::ZeroQuery))
    }
}
