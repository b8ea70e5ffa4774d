//! Corpus ingestion: whitespace tokenization, the frequency-filtered
//! vocabulary, training-pair windows and pseudo-word corruption.

use std::collections::HashMap;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Split UTF-8 text on whitespace. No case folding or normalization.
pub fn tokenize(text: &str) -> impl Iterator<Item = &str> + Clone {
    text.split_whitespace()
}

/// Read a whole corpus file into memory.
pub fn read_corpus(path: impl AsRef<Path>) -> Result<String> {
    Ok(fs::read_to_string(path)?)
}

/// Word ↔ id map with occurrence counts.
///
/// Ids are dense, assigned by descending frequency with ties broken by
/// first occurrence in the stream.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, u32>,
    freqs: Vec<u64>,
    total_tokens: u64,
}

impl Vocabulary {
    /// Count tokens and keep those occurring at least `min_count` times.
    pub fn build<'a, I>(tokens: I, min_count: u64) -> Result<Self>
    where
        I: IntoIterator<Item = &'a str>,
    {
        if min_count == 0 {
            return Err(Error::InvalidConfig("min_count must be at least 1".into()));
        }
        // (count, first occurrence rank)
        let mut counts: HashMap<&'a str, (u64, usize)> = HashMap::new();
        for tok in tokens {
            let next = counts.len();
            counts.entry(tok).or_insert((0, next)).0 += 1;
        }
        let mut kept: Vec<(&str, u64, usize)> = counts
            .into_iter()
            .filter(|&(_, (c, _))| c >= min_count)
            .map(|(w, (c, first))| (w, c, first))
            .collect();
        if kept.is_empty() {
            return Err(Error::EmptyVocabulary { min_count });
        }
        kept.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)));
        Ok(Self::from_parts(
            kept.iter().map(|&(w, c, _)| (w.to_owned(), c)).collect(),
        ))
    }

    /// Assemble a vocabulary from `(word, freq)` entries already in id order.
    pub fn from_parts(entries: Vec<(String, u64)>) -> Self {
        let mut words = Vec::with_capacity(entries.len());
        let mut freqs = Vec::with_capacity(entries.len());
        let mut index = HashMap::with_capacity(entries.len());
        for (id, (w, f)) in entries.into_iter().enumerate() {
            index.insert(w.clone(), id as u32);
            words.push(w);
            freqs.push(f);
        }
        let total_tokens = freqs.iter().sum();
        Vocabulary {
            words,
            index,
            freqs,
            total_tokens,
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: u32) -> &str {
        &self.words[id as usize]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn freq(&self, id: u32) -> u64 {
        self.freqs[id as usize]
    }

    pub fn freqs(&self) -> &[u64] {
        &self.freqs
    }

    /// Number of retained-word occurrences.
    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    /// Map tokens to ids, dropping out-of-vocabulary tokens.
    pub fn encode<'a, I>(&self, tokens: I) -> Vec<u32>
    where
        I: IntoIterator<Item = &'a str>,
    {
        tokens.into_iter().filter_map(|t| self.id(t)).collect()
    }
}

/// One training object: an input word and the words around it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrainingPair {
    pub input: u32,
    pub context: Vec<u32>,
}

/// Positions within `window / 2` of `i`, clipped to `0..len`, as two
/// half-open ranges (left, right) that exclude `i`.
#[inline]
pub fn context_bounds(
    len: usize,
    i: usize,
    window: usize,
) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
    let half = window / 2;
    let lo = i.saturating_sub(half);
    let hi = (i + half + 1).min(len);
    (lo..i, i + 1..hi)
}

/// Iterator over one [`TrainingPair`] per position of `ids`.
pub struct TrainingPairs<'a> {
    ids: &'a [u32],
    window: usize,
    pos: usize,
}

impl Iterator for TrainingPairs<'_> {
    type Item = TrainingPair;

    fn next(&mut self) -> Option<TrainingPair> {
        if self.pos >= self.ids.len() {
            return None;
        }
        let i = self.pos;
        self.pos += 1;
        let (left, right) = context_bounds(self.ids.len(), i, self.window);
        let context = self.ids[left]
            .iter()
            .chain(&self.ids[right])
            .copied()
            .collect();
        Some(TrainingPair {
            input: self.ids[i],
            context,
        })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.ids.len() - self.pos;
        (n, Some(n))
    }
}

impl ExactSizeIterator for TrainingPairs<'_> {}

/// Stream `(x_i, y_i)` pairs with a context of all positions `t` with
/// `|t - i| <= window / 2`, `t != i`.
pub fn iter_training_pairs(ids: &[u32], window: usize) -> TrainingPairs<'_> {
    TrainingPairs {
        ids,
        window,
        pos: 0,
    }
}

/// Two real words collapsed into one artificial ambiguous token.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Merge {
    pub first: String,
    pub second: String,
    pub pseudo: String,
}

impl Merge {
    pub fn new(first: impl Into<String>, second: impl Into<String>, pseudo: impl Into<String>) -> Self {
        Merge {
            first: first.into(),
            second: second.into(),
            pseudo: pseudo.into(),
        }
    }
}

/// Gold label of one pseudo-word occurrence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PseudoLabel {
    pub position: usize,
    pub pseudo: String,
    /// 0 if the occurrence came from `Merge::first`, 1 for `Merge::second`.
    pub source: u8,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PseudoCorpus {
    pub tokens: Vec<String>,
    pub labels: Vec<PseudoLabel>,
}

/// Replace both words of every merge by its pseudo-word and record which
/// source each replaced occurrence came from.
pub fn make_pseudoword_corpus<S: AsRef<str>>(tokens: &[S], merges: &[Merge]) -> Result<PseudoCorpus> {
    let mut table: HashMap<&str, (usize, u8)> = HashMap::new();
    for (m_idx, m) in merges.iter().enumerate() {
        if m.first == m.second {
            return Err(Error::SelfMerge(m.first.clone()));
        }
        for (src, w) in [(0u8, &m.first), (1u8, &m.second)] {
            if table.insert(w.as_str(), (m_idx, src)).is_some() {
                return Err(Error::OverlappingMerge(w.clone()));
            }
        }
    }
    let mut out = PseudoCorpus {
        tokens: Vec::with_capacity(tokens.len()),
        labels: Vec::new(),
    };
    for (position, tok) in tokens.iter().enumerate() {
        let tok = tok.as_ref();
        match table.get(tok) {
            Some(&(m_idx, source)) => {
                let pseudo = &merges[m_idx].pseudo;
                out.tokens.push(pseudo.clone());
                out.labels.push(PseudoLabel {
                    position,
                    pseudo: pseudo.clone(),
                    source,
                });
            }
            None => out.tokens.push(tok.to_owned()),
        }
    }
    Ok(out)
}

/// Write gold labels as TSV: `position<TAB>pseudoword<TAB>source_label`.
pub fn write_pseudo_labels<W: Write>(mut out: W, labels: &[PseudoLabel]) -> io::Result<()> {
    for l in labels {
        writeln!(out, "{}\t{}\t{}", l.position, l.pseudo, l.source)?;
    }
    Ok(())
}

/// Parse the TSV written by [`write_pseudo_labels`].
pub fn read_pseudo_labels(text: &str) -> Result<Vec<PseudoLabel>> {
    let mut labels = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let bad = |msg: &str| Error::Parse {
            line: n + 1,
            msg: msg.to_owned(),
        };
        if cols.len() != 3 {
            return Err(bad("expected 3 tab-separated columns"));
        }
        labels.push(PseudoLabel {
            position: cols[0].parse().map_err(|_| bad("bad position"))?,
            pseudo: cols[1].to_owned(),
            source: cols[2].parse().map_err(|_| bad("bad source label"))?,
        });
    }
    Ok(labels)
}
