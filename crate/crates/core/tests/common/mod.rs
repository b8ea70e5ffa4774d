//! Synthetic topical corpus used by the integration and acceptance tests.
//!
//! Documents are drawn from a mixture language: every document picks one
//! topic, and each token is either a function word (shared by all topics)
//! or a word from the document's topic. Words from different topics never
//! share a document, so two of them merged into one pseudo-word have
//! cleanly separable contexts.

#![allow(dead_code)]

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct SynthSpec {
    pub topics: usize,
    pub words_per_topic: usize,
    pub function_words: usize,
    /// Probability that a token is a function word.
    pub function_share: f64,
    pub doc_len: (usize, usize),
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            topics: 30,
            words_per_topic: 60,
            function_words: 80,
            function_share: 0.45,
            doc_len: (150, 400),
            seed: 7,
        }
    }
}

pub struct Synth {
    pub spec: SynthSpec,
    pub function: Vec<String>,
    /// `topic_words[topic][rank]`, rank 0 most frequent.
    pub topic_words: Vec<Vec<String>>,
    rng: ChaCha8Rng,
    fw_dist: WeightedIndex<f64>,
    tw_dist: WeightedIndex<f64>,
}

const ONSETS: &[&str] = &[
    "b", "c", "d", "f", "g", "h", "j", "k", "l", "m", "n", "p", "r", "s", "t", "v", "w", "z", "br", "cl", "dr",
    "gr", "pl", "st", "tr", "sh", "ch", "th",
];
const VOWELS: &[&str] = &["a", "e", "i", "o", "u", "ai", "ea", "ou", "io"];

fn make_word(rng: &mut ChaCha8Rng, syllables: usize) -> String {
    let mut w = String::new();
    for _ in 0..syllables {
        w.push_str(ONSETS[rng.random_range(0..ONSETS.len())]);
        w.push_str(VOWELS[rng.random_range(0..VOWELS.len())]);
    }
    if rng.random_bool(0.5) {
        w.push_str(["n", "r", "s", "l", "x"][rng.random_range(0..5)]);
    }
    w
}

fn zipf(n: usize) -> WeightedIndex<f64> {
    WeightedIndex::new((1..=n).map(|r| 1.0 / r as f64)).unwrap()
}

impl Synth {
    pub fn new(spec: SynthSpec) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let mut seen = std::collections::HashSet::new();
        let mut fresh = |rng: &mut ChaCha8Rng, syl: usize| loop {
            let w = make_word(rng, syl);
            if seen.insert(w.clone()) {
                return w;
            }
        };
        let function = (0..spec.function_words).map(|_| fresh(&mut rng, 2)).collect();
        let topic_words = (0..spec.topics)
            .map(|_| (0..spec.words_per_topic).map(|_| fresh(&mut rng, 3)).collect())
            .collect();
        Synth {
            fw_dist: zipf(spec.function_words),
            tw_dist: zipf(spec.words_per_topic),
            spec,
            function,
            topic_words,
            rng,
        }
    }

    /// Generate documents until at least `bytes` of text exist. Documents
    /// are separated by newlines.
    pub fn text(&mut self, bytes: usize) -> String {
        let mut out = String::with_capacity(bytes + 4096);
        while out.len() < bytes {
            let topic = self.rng.random_range(0..self.spec.topics);
            let len = self.rng.random_range(self.spec.doc_len.0..=self.spec.doc_len.1);
            for i in 0..len {
                let w = if self.rng.random_bool(self.spec.function_share) {
                    &self.function[self.fw_dist.sample(&mut self.rng)]
                } else {
                    &self.topic_words[topic][self.tw_dist.sample(&mut self.rng)]
                };
                if i > 0 {
                    out.push(' ');
                }
                out.push_str(w);
            }
            out.push('\n');
        }
        out
    }

    /// `count` merges of equally ranked words from distinct topic pairs.
    pub fn merges(&self, count: usize, rank: usize) -> Vec<(String, String, String)> {
        (0..count)
            .map(|i| {
                let a = &self.topic_words[2 * i][rank];
                let b = &self.topic_words[2 * i + 1][rank];
                (a.clone(), b.clone(), format!("{a}_{b}"))
            })
            .collect()
    }
}
