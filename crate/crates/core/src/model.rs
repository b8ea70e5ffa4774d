//! Learned parameters and the variational stick-breaking posterior.

use rand::distr::{Distribution, Open01};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::huffman::HuffmanCode;
use crate::math::{digamma, Scalar};

/// Probability vector over the `T` senses of one word.
#[derive(Clone, Debug, PartialEq)]
pub struct SensePosterior(Vec<f64>);

impl SensePosterior {
    /// Wrap a vector that is already a distribution: nonnegative entries
    /// summing to one within `1e-9`.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        let sum: f64 = probs.iter().sum();
        if probs.is_empty() || probs.iter().any(|&p| p.is_nan() || p < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!(
                "not a probability vector (sum {sum})"
            )));
        }
        Ok(SensePosterior(probs))
    }

    pub(crate) fn new_unchecked(probs: Vec<f64>) -> Self {
        SensePosterior(probs)
    }

    /// Point mass on sense `k` out of `senses`.
    pub fn one_hot(senses: usize, k: usize) -> Self {
        let mut p = vec![0.0; senses];
        p[k] = 1.0;
        SensePosterior(p)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Most probable sense; the lowest index wins ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (k, &p) in self.0.iter().enumerate() {
            if p > self.0[best] {
                best = k;
            }
        }
        best
    }
}

impl std::ops::Index<usize> for SensePosterior {
    type Output = f64;

    fn index(&self, k: usize) -> &f64 {
        &self.0[k]
    }
}

/// All parameters of a trained (or training) model.
///
/// * `input`: `V × T × D` sense prototypes, row-major.
/// * `output`: `(V − 1) × D` vectors of the Huffman tree's internal nodes.
/// * `counts`: `V × T` expected sense-assignment counts; each row sums to the
///   word's corpus frequency.
#[derive(Clone, Debug, PartialEq)]
pub struct SenseModel<F: Scalar = f32> {
    vocab: Vocabulary,
    code: HuffmanCode,
    dim: usize,
    senses: usize,
    alpha: f64,
    input: Vec<F>,
    output: Vec<F>,
    counts: Vec<f64>,
}

impl<F: Scalar> SenseModel<F> {
    /// Fresh model: all mass of every word on sense 0, prototypes uniform on
    /// `(-0.5/D, 0.5/D)` drawn in `(word, sense, coordinate)` order, output
    /// vectors zero.
    pub fn init(
        vocab: Vocabulary,
        code: HuffmanCode,
        dim: usize,
        senses: usize,
        alpha: f64,
        seed: u64,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidConfig("dimension must be at least 1".into()));
        }
        if senses == 0 {
            return Err(Error::InvalidConfig("number of senses must be at least 1".into()));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidConfig(format!("alpha must be positive, got {alpha}")));
        }
        if code.num_words() != vocab.len() {
            return Err(Error::InvalidConfig(format!(
                "code has {} words, vocabulary {}",
                code.num_words(),
                vocab.len()
            )));
        }
        let v = vocab.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = 1.0 / dim as f64;
        let input = (0..v * senses * dim)
            .map(|_| {
                let u: f64 = Open01.sample(&mut rng);
                F::from_f64((u - 0.5) * scale)
            })
            .collect();
        let mut counts = vec![0.0; v * senses];
        for (w, &f) in vocab.freqs().iter().enumerate() {
            counts[w * senses] = f as f64;
        }
        Ok(SenseModel {
            output: vec![F::ZERO; v.saturating_sub(1) * dim],
            vocab,
            code,
            dim,
            senses,
            alpha,
            input,
            counts,
        })
    }

    /// Assemble a model from raw parts (used by the loader).
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        vocab: Vocabulary,
        code: HuffmanCode,
        dim: usize,
        senses: usize,
        alpha: f64,
        input: Vec<F>,
        output: Vec<F>,
        counts: Vec<f64>,
    ) -> Result<Self> {
        let v = vocab.len();
        if code.num_words() != v
            || input.len() != v * senses * dim
            || output.len() != v.saturating_sub(1) * dim
            || counts.len() != v * senses
        {
            return Err(Error::CorruptModel("parameter array sizes disagree".into()));
        }
        Ok(SenseModel {
            vocab,
            code,
            dim,
            senses,
            alpha,
            input,
            output,
            counts,
        })
    }

    /// Copy with every vector converted to another storage type.
    pub fn cast<G: Scalar>(&self) -> SenseModel<G> {
        SenseModel {
            vocab: self.vocab.clone(),
            code: self.code.clone(),
            dim: self.dim,
            senses: self.senses,
            alpha: self.alpha,
            input: self.input.iter().map(|x| G::from_f64(x.to_f64())).collect(),
            output: self.output.iter().map(|x| G::from_f64(x.to_f64())).collect(),
            counts: self.counts.clone(),
        }
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn code(&self) -> &HuffmanCode {
        &self.code
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn senses(&self) -> usize {
        self.senses
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn num_words(&self) -> usize {
        self.vocab.len()
    }

    #[inline]
    pub fn in_vec(&self, word: u32, sense: usize) -> &[F] {
        let off = (word as usize * self.senses + sense) * self.dim;
        &self.input[off..off + self.dim]
    }

    #[inline]
    pub fn in_vec_mut(&mut self, word: u32, sense: usize) -> &mut [F] {
        let off = (word as usize * self.senses + sense) * self.dim;
        &mut self.input[off..off + self.dim]
    }

    #[inline]
    pub fn out_vec(&self, node: u32) -> &[F] {
        let off = node as usize * self.dim;
        &self.output[off..off + self.dim]
    }

    #[inline]
    pub fn out_vec_mut(&mut self, node: u32) -> &mut [F] {
        let off = node as usize * self.dim;
        &mut self.output[off..off + self.dim]
    }

    pub fn input(&self) -> &[F] {
        &self.input
    }

    pub fn input_mut(&mut self) -> &mut [F] {
        &mut self.input
    }

    pub fn output(&self) -> &[F] {
        &self.output
    }

    pub fn output_mut(&mut self) -> &mut [F] {
        &mut self.output
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    /// Sense counts `n_wk` of one word.
    #[inline]
    pub fn word_counts(&self, word: u32) -> &[f64] {
        let off = word as usize * self.senses;
        &self.counts[off..off + self.senses]
    }

    #[inline]
    pub fn word_counts_mut(&mut self, word: u32) -> &mut [f64] {
        let off = word as usize * self.senses;
        &mut self.counts[off..off + self.senses]
    }

    /// Mutable views of all three parameter blocks at once.
    pub(crate) fn blocks_mut(&mut self) -> (&mut [F], &mut [F], &mut [f64]) {
        (&mut self.input, &mut self.output, &mut self.counts)
    }

    pub(crate) fn check_word(&self, word: u32) -> Result<()> {
        if (word as usize) < self.vocab.len() {
            Ok(())
        } else {
            Err(Error::OutOfVocabulary(format!("word id {word}")))
        }
    }

    /// `E_q[log p(z = k | β, w)]` for every sense.
    pub fn expected_log_pi(&self, word: u32) -> Vec<f64> {
        let mut out = vec![0.0; self.senses];
        expected_log_pi_into(self.word_counts(word), self.alpha, &mut out);
        out
    }

    /// Predictive sense prior `p(z = k | w)` integrated over `q(β)`.
    pub fn prior_sense_probs(&self, word: u32) -> SensePosterior {
        let mut out = vec![0.0; self.senses];
        prior_probs_into(self.word_counts(word), self.alpha, &mut out);
        SensePosterior(out)
    }

    /// Number of senses whose prior probability exceeds `epsilon`.
    pub fn sense_count(&self, word: u32, epsilon: f64) -> usize {
        self.prior_sense_probs(word)
            .probs()
            .iter()
            .filter(|&&p| p > epsilon)
            .count()
    }

    /// First non-finite parameter entry, if any, as `(word, sense)` for
    /// prototypes or `(u32::MAX, node)` for output vectors.
    pub fn find_non_finite(&self) -> Option<(u32, usize)> {
        if let Some(i) = self.input.iter().position(|x| !x.is_finite()) {
            let row = i / self.dim;
            return Some(((row / self.senses) as u32, row % self.senses));
        }
        if let Some(i) = self.output.iter().position(|x| !x.is_finite()) {
            return Some((u32::MAX, i / self.dim));
        }
        if let Some(i) = self.counts.iter().position(|x| !x.is_finite()) {
            return Some(((i / self.senses) as u32, i % self.senses));
        }
        None
    }
}

/// Beta parameters `(a_k, b_k)` of the first `T − 1` sticks:
/// `a_k = 1 + n_k`, `b_k = α + Σ_{r>k} n_r`.
fn beta_params(counts: &[f64], alpha: f64, mut f: impl FnMut(usize, f64, f64)) {
    let t = counts.len();
    let mut tail = 0.0;
    let mut tails = vec![0.0; t];
    for k in (0..t).rev() {
        tails[k] = tail;
        tail += counts[k];
    }
    for k in 0..t.saturating_sub(1) {
        f(k, 1.0 + counts[k], alpha + tails[k]);
    }
}

/// Write `E[log π_k]` for sense counts `counts` into `out`. The last stick is
/// fixed to one.
pub fn expected_log_pi_into(counts: &[f64], alpha: f64, out: &mut [f64]) {
    let t = counts.len();
    let mut acc = 0.0;
    beta_params(counts, alpha, |k, a, b| {
        let psi_ab = digamma(a + b);
        out[k] = acc + digamma(a) - psi_ab;
        acc += digamma(b) - psi_ab;
    });
    out[t - 1] = acc;
}

/// Write the integrated stick-breaking prior `E[β_k] ∏_{r<k} E[1 − β_r]`.
pub fn prior_probs_into(counts: &[f64], alpha: f64, out: &mut [f64]) {
    let t = counts.len();
    let mut rest = 1.0;
    beta_params(counts, alpha, |k, a, b| {
        out[k] = rest * a / (a + b);
        rest *= b / (a + b);
    });
    out[t - 1] = rest;
}
