//! Plain-text corpus loading and occurrence selection.
//!
//! A corpus file holds one sentence per line with whitespace-separated
//! tokens. Word identity is the exact surface form: casing is kept because
//! it is one of the concepts under study.

use std::collections::HashMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense word identifier, assigned in first-appearance order.
pub type WordId = u32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub id: u32,
    pub tokens: Vec<WordId>,
}

/// Position of one token in the corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct OccurrenceKey {
    pub sentence_id: u32,
    pub position: u32,
}

/// One contextual instance of a word. Ordering is `(word_id, sentence_id, position)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct WordOccurrence {
    pub word_id: WordId,
    pub sentence_id: u32,
    pub position: u32,
}

impl WordOccurrence {
    pub fn key(&self) -> OccurrenceKey {
        OccurrenceKey {
            sentence_id: self.sentence_id,
            position: self.position,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    sentences: Vec<Sentence>,
    words: Vec<String>,
    index: HashMap<String, WordId>,
}

impl Corpus {
    /// Builds a corpus from in-memory lines. Blank lines are skipped.
    pub fn from_lines<'a>(lines: impl IntoIterator<Item = &'a str>) -> Self {
        let mut corpus = Corpus::default();
        for line in lines {
            corpus.push_line(line);
        }
        corpus
    }

    fn push_line(&mut self, line: &str) {
        let mut tokens = Vec::new();
        for token in line.split_whitespace() {
            let next = self.words.len() as WordId;
            let id = *self.index.entry(token.to_owned()).or_insert_with(|| {
                self.words.push(token.to_owned());
                next
            });
            tokens.push(id);
        }
        if !tokens.is_empty() {
            let id = self.sentences.len() as u32;
            self.sentences.push(Sentence { id, tokens });
        }
    }

    pub fn sentences(&self) -> &[Sentence] {
        &self.sentences
    }

    pub fn vocab_size(&self) -> usize {
        self.words.len()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn word(&self, id: WordId) -> Option<&str> {
        self.words.get(id as usize).map(String::as_str)
    }

    pub fn word_id(&self, word: &str) -> Option<WordId> {
        self.index.get(word).copied()
    }

    /// Word at a corpus slot, if the slot exists.
    pub fn token(&self, key: OccurrenceKey) -> Option<WordId> {
        self.sentences
            .get(key.sentence_id as usize)?
            .tokens
            .get(key.position as usize)
            .copied()
    }

    pub fn sentence_len(&self, sentence_id: u32) -> Option<usize> {
        self.sentences
            .get(sentence_id as usize)
            .map(|s| s.tokens.len())
    }

    pub fn occurrence(&self, key: OccurrenceKey) -> Option<WordOccurrence> {
        self.token(key).map(|word_id| WordOccurrence {
            word_id,
            sentence_id: key.sentence_id,
            position: key.position,
        })
    }

    /// Every token in corpus order.
    pub fn occurrences(&self) -> impl Iterator<Item = WordOccurrence> + '_ {
        self.sentences.iter().flat_map(|s| {
            s.tokens
                .iter()
                .enumerate()
                .map(move |(pos, &word_id)| WordOccurrence {
                    word_id,
                    sentence_id: s.id,
                    position: pos as u32,
                })
        })
    }
}

/// Loads a UTF-8 corpus file, one sentence per line.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut corpus = Corpus::default();
    for (i, raw) in bytes.split(|&b| b == b'\n').enumerate() {
        let line = std::str::from_utf8(raw).map_err(|_| Error::InvalidUtf8 {
            path: path.to_path_buf(),
            line: i + 1,
        })?;
        corpus.push_line(line);
    }
    Ok(corpus)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    /// Word types seen fewer times than this are dropped entirely.
    pub min_frequency: usize,
    /// Per-type cap on retained occurrences.
    pub max_occurrences: usize,
    pub seed: u64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            min_frequency: 10,
            max_occurrences: 10,
            seed: 0,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_frequency == 0 || self.max_occurrences == 0 {
            return Err(Error::InvalidConfig(
                "min_frequency and max_occurrences must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Occurrences selected for embedding extraction, sorted by
/// `(word_id, sentence_id, position)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OccurrenceSet(Vec<WordOccurrence>);

impl OccurrenceSet {
    pub fn from_unsorted(mut occurrences: Vec<WordOccurrence>) -> Self {
        occurrences.sort_unstable();
        occurrences.dedup();
        OccurrenceSet(occurrences)
    }

    pub fn as_slice(&self) -> &[WordOccurrence] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, WordOccurrence> {
        self.0.iter()
    }

    pub fn into_vec(self) -> Vec<WordOccurrence> {
        self.0
    }

    /// Writes the `word_id\tword\tsentence_id\tposition` TSV export.
    pub fn write_tsv(&self, corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(out, "word_id\tword\tsentence_id\tposition").map_err(io)?;
        for occ in &self.0 {
            let word = corpus.word(occ.word_id).unwrap_or_default();
            writeln!(
                out,
                "{}\t{}\t{}\t{}",
                occ.word_id, word, occ.sentence_id, occ.position
            )
            .map_err(io)?;
        }
        out.flush().map_err(io)
    }
}

impl<'a> IntoIterator for &'a OccurrenceSet {
    type Item = &'a WordOccurrence;
    type IntoIter = std::slice::Iter<'a, WordOccurrence>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// Drops rare word types and caps the rest at `max_occurrences` contexts.
///
/// When a type exceeds the cap its occurrences are sampled uniformly without
/// replacement from one ChaCha stream seeded by `cfg.seed`, visiting word
/// types in id order, so equal inputs always give equal output.
pub fn filter_occurrences(corpus: &Corpus, cfg: &FilterConfig) -> Result<OccurrenceSet> {
    cfg.validate()?;
    let mut by_word: Vec<Vec<WordOccurrence>> = vec![Vec::new(); corpus.vocab_size()];
    for occ in corpus.occurrences() {
        by_word[occ.word_id as usize].push(occ);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut kept = Vec::new();
    for list in by_word {
        if list.len() < cfg.min_frequency {
            continue;
        }
        if list.len() <= cfg.max_occurrences {
            kept.extend(list);
        } else {
            let mut picks = index::sample(&mut rng, list.len(), cfg.max_occurrences).into_vec();
            picks.sort_unstable();
            kept.extend(picks.into_iter().map(|i| list[i]));
        }
    }
    Ok(OccurrenceSet::from_unsorted(kept))
}
