//! Inference over a trained model: context disambiguation, predictive
//! likelihood, nearest neighbours and contextual similarity.

use std::cmp::Ordering;

use crate::corpus::TrainingPair;
use crate::error::{Error, Result};
use crate::math::{dot, exp_normalize, log_sum_exp, norm, Scalar};
use crate::model::{SenseModel, SensePosterior};
use crate::softmax::log_p_word;

/// Number of context words nearest to the target used by the contextual
/// similarity measures.
pub const SIMILARITY_CONTEXT: usize = 4;

fn log_weights<F: Scalar>(model: &SenseModel<F>, word: u32, context: &[u32]) -> Vec<f64> {
    let prior = model.prior_sense_probs(word);
    prior
        .probs()
        .iter()
        .enumerate()
        .map(|(k, &p)| p.ln() + context.iter().map(|&y| log_p_word(model, y, word, k)).sum::<f64>())
        .collect()
}

/// `p(z = k | w, context) ∝ p(z = k | w) ∏_j p(y_j | w, k)`.
pub fn disambiguate<F: Scalar>(model: &SenseModel<F>, word: u32, context: &[u32]) -> SensePosterior {
    if context.is_empty() {
        return model.prior_sense_probs(word);
    }
    let mut lw = log_weights(model, word, context);
    exp_normalize(&mut lw);
    SensePosterior::new_unchecked(lw)
}

/// String-level [`disambiguate`]: out-of-vocabulary context words are dropped.
pub fn disambiguate_tokens<F: Scalar, S: AsRef<str>>(
    model: &SenseModel<F>,
    word: &str,
    context: &[S],
) -> Result<SensePosterior> {
    let w = model
        .vocab()
        .id(word)
        .ok_or_else(|| Error::OutOfVocabulary(word.to_owned()))?;
    let ctx = model.vocab().encode(context.iter().map(AsRef::as_ref));
    Ok(disambiguate(model, w, &ctx))
}

/// Average log-likelihood per context word under the posterior predictive
/// `p(y | x) = Σ_k p(z = k | x) ∏_j p(y_j | x, k)`. Pairs with empty context
/// are skipped.
pub fn predictive_loglik<F: Scalar>(model: &SenseModel<F>, pairs: &[TrainingPair]) -> Result<f64> {
    let mut total = 0.0;
    let mut words = 0usize;
    for pair in pairs {
        if pair.context.is_empty() {
            continue;
        }
        model.check_word(pair.input)?;
        total += log_sum_exp(&log_weights(model, pair.input, &pair.context));
        words += pair.context.len();
    }
    if words == 0 {
        return Err(Error::NoContext);
    }
    Ok(total / words as f64)
}

pub fn cosine<F: Scalar>(a: &[F], b: &[F]) -> f64 {
    dot(a, b) / (norm(a) * norm(b))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Neighbor {
    pub word: u32,
    pub sense: usize,
    pub cosine: f64,
}

/// Top `top_n` prototypes of other words by cosine to `In[word][sense]`,
/// considering only senses with prior probability above `epsilon`.
pub fn nearest_neighbors<F: Scalar>(
    model: &SenseModel<F>,
    word: u32,
    sense: usize,
    top_n: usize,
    epsilon: f64,
) -> Result<Vec<Neighbor>> {
    model.check_word(word)?;
    if sense >= model.senses() {
        return Err(Error::InvalidConfig(format!("sense {sense} out of range")));
    }
    if top_n == 0 {
        return Err(Error::InvalidConfig("top_n must be at least 1".into()));
    }
    let query = model.in_vec(word, sense);
    let qn = norm(query);
    if qn == 0.0 {
        return Err(Error::ZeroNorm { word, sense });
    }
    let mut hits = Vec::new();
    for v in 0..model.num_words() as u32 {
        if v == word {
            continue;
        }
        let prior = model.prior_sense_probs(v);
        for (k, &p) in prior.probs().iter().enumerate() {
            if p <= epsilon {
                continue;
            }
            let cand = model.in_vec(v, k);
            let cn = norm(cand);
            if cn == 0.0 {
                continue;
            }
            hits.push(Neighbor {
                word: v,
                sense: k,
                cosine: dot(query, cand) / (qn * cn),
            });
        }
    }
    hits.sort_by(|a, b| {
        b.cosine
            .partial_cmp(&a.cosine)
            .unwrap_or(Ordering::Equal)
            .then(a.word.cmp(&b.word))
            .then(a.sense.cmp(&b.sense))
    });
    hits.truncate(top_n);
    Ok(hits)
}

/// A target occurrence inside a token sequence; `tokens[position]` is the
/// target itself.
#[derive(Clone, Copy, Debug)]
pub struct Occurrence<'a> {
    pub tokens: &'a [u32],
    pub position: usize,
}

impl Occurrence<'_> {
    /// Up to `n` tokens closest to the target, alternating left and right
    /// outward from it (left first on ties).
    pub fn nearest(&self, n: usize) -> Vec<u32> {
        let mut out = Vec::with_capacity(n);
        let len = self.tokens.len();
        let mut dist = 1;
        while out.len() < n && (dist <= self.position || self.position + dist < len) {
            if dist <= self.position {
                out.push(self.tokens[self.position - dist]);
            }
            if out.len() < n && self.position + dist < len {
                out.push(self.tokens[self.position + dist]);
            }
            dist += 1;
        }
        out
    }
}

fn checked_proto<F: Scalar>(model: &SenseModel<F>, word: u32, sense: usize) -> Result<&[F]> {
    let v = model.in_vec(word, sense);
    if norm(v) == 0.0 {
        Err(Error::ZeroNorm { word, sense })
    } else {
        Ok(v)
    }
}

/// Posterior-weighted contextual similarity
/// `(1 / (K₁K₂)) Σ_{k₁,k₂} p(k₁|w₁,C₁) p(k₂|w₂,C₂) cos(In[w₁][k₁], In[w₂][k₂])`
/// where `K_i` is the number of senses of `w_i` above `epsilon`. With
/// `scale_by_sense_counts = false` the `1/(K₁K₂)` factor is dropped.
pub fn avg_sim_c<F: Scalar>(
    model: &SenseModel<F>,
    first: (u32, Occurrence<'_>),
    second: (u32, Occurrence<'_>),
    epsilon: f64,
    scale_by_sense_counts: bool,
) -> Result<f64> {
    let (w1, occ1) = first;
    let (w2, occ2) = second;
    model.check_word(w1)?;
    model.check_word(w2)?;
    let p1 = disambiguate(model, w1, &occ1.nearest(SIMILARITY_CONTEXT));
    let p2 = disambiguate(model, w2, &occ2.nearest(SIMILARITY_CONTEXT));
    let mut sum = 0.0;
    for k1 in 0..model.senses() {
        let a = checked_proto(model, w1, k1)?;
        for k2 in 0..model.senses() {
            let b = checked_proto(model, w2, k2)?;
            sum += p1[k1] * p2[k2] * cosine(a, b);
        }
    }
    if scale_by_sense_counts {
        let k1 = model.sense_count(w1, epsilon).max(1) as f64;
        let k2 = model.sense_count(w2, epsilon).max(1) as f64;
        sum /= k1 * k2;
    }
    Ok(sum)
}

/// Cosine between the most probable prototypes of each occurrence.
pub fn max_sim_c<F: Scalar>(
    model: &SenseModel<F>,
    first: (u32, Occurrence<'_>),
    second: (u32, Occurrence<'_>),
) -> Result<f64> {
    let (w1, occ1) = first;
    let (w2, occ2) = second;
    model.check_word(w1)?;
    model.check_word(w2)?;
    let k1 = disambiguate(model, w1, &occ1.nearest(SIMILARITY_CONTEXT)).argmax();
    let k2 = disambiguate(model, w2, &occ2.nearest(SIMILARITY_CONTEXT)).argmax();
    Ok(cosine(checked_proto(model, w1, k1)?, checked_proto(model, w2, k2)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Vocabulary;
    use crate::huffman::HuffmanCode;
    use crate::train::local_step;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn model(freqs: &[u64], dim: usize, senses: usize, seed: u64) -> SenseModel<f64> {
        let vocab = Vocabulary::from_parts(
            freqs.iter().enumerate().map(|(i, &f)| (format!("w{i}"), f)).collect(),
        );
        let code = HuffmanCode::build(freqs).unwrap();
        let mut m = SenseModel::init(vocab, code, dim, senses, 0.3, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
        for x in m.input_mut() {
            *x = rng.random_range(-1.0..1.0);
        }
        for x in m.output_mut() {
            *x = rng.random_range(-1.0..1.0);
        }
        for w in 0..freqs.len() as u32 {
            let f = freqs[w as usize] as f64;
            let mut split: Vec<f64> = (0..senses).map(|_| rng.random_range(0.0..1.0)).collect();
            let s: f64 = split.iter().sum();
            split.iter_mut().for_each(|x| *x *= f / s);
            m.word_counts_mut(w).copy_from_slice(&split);
        }
        m
    }

    #[test]
    fn empty_context_returns_prior() {
        let m = model(&[9, 6, 4, 2], 5, 3, 1);
        assert_eq!(disambiguate(&m, 2, &[]), m.prior_sense_probs(2));
    }

    #[test]
    fn single_sense_is_certain() {
        let m = model(&[9, 6, 4, 2], 5, 1, 1);
        assert_eq!(disambiguate(&m, 1, &[0, 2, 3]).probs(), &[1.0]);
    }

    #[test]
    fn token_level_disambiguation_drops_oov() {
        let m = model(&[9, 6, 4, 2], 5, 3, 2);
        let a = disambiguate_tokens(&m, "w1", &["w0", "zzz", "w3"]).unwrap();
        assert_eq!(a, disambiguate(&m, 1, &[0, 3]));
        let only_oov = disambiguate_tokens(&m, "w1", &["zzz"]).unwrap();
        assert_eq!(only_oov, m.prior_sense_probs(1));
        assert!(matches!(
            disambiguate_tokens(&m, "nope", &["w0"]),
            Err(Error::OutOfVocabulary(_))
        ));
    }

    #[test]
    fn loglik_of_zero_model() {
        let vocab = Vocabulary::from_parts(vec![("a".into(), 2), ("b".into(), 1)]);
        let code = HuffmanCode::build(vocab.freqs()).unwrap();
        let mut m: SenseModel<f64> = SenseModel::init(vocab, code, 3, 1, 1.0, 0).unwrap();
        m.input_mut().iter_mut().for_each(|x| *x = 0.0);
        let pairs = [TrainingPair { input: 0, context: vec![1] }];
        assert!((predictive_loglik(&m, &pairs).unwrap() - 0.5f64.ln()).abs() < 1e-15);
        let empty = [TrainingPair { input: 0, context: vec![] }];
        assert!(matches!(predictive_loglik(&m, &empty), Err(Error::NoContext)));
    }

    #[test]
    fn single_sense_loglik_is_plain_skipgram() {
        let m = model(&[9, 6, 4, 2, 1], 4, 1, 3);
        let pairs: Vec<_> = crate::corpus::iter_training_pairs(&[0, 1, 2, 3, 4, 0, 2], 4).collect();
        let mut total = 0.0;
        let mut n = 0;
        for p in &pairs {
            for &y in &p.context {
                total += log_p_word(&m, y, p.input, 0);
                n += 1;
            }
        }
        let got = predictive_loglik(&m, &pairs).unwrap();
        assert!((got - total / n as f64).abs() < 1e-12);
        assert!(got <= 0.0);
    }

    #[test]
    fn argmax_agrees_with_local_step_under_concentrated_prior() {
        let mut m = model(&[50, 40, 30, 20, 10, 5], 6, 3, 4);
        for w in 0..6u32 {
            let f = m.vocab().freq(w) as f64;
            m.word_counts_mut(w).copy_from_slice(&[0.0, f, 0.0]);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let w = rng.random_range(0..6);
            let ctx: Vec<u32> = (0..rng.random_range(0..4)).map(|_| rng.random_range(0..6)).collect();
            assert_eq!(disambiguate(&m, w, &ctx).argmax(), local_step(&m, w, &ctx).argmax());
        }
    }

    #[test]
    fn neighbors_exclude_self_and_rank_by_cosine() {
        let m = model(&[9, 8, 7, 6, 5, 4, 3], 4, 2, 5);
        let hits = nearest_neighbors(&m, 2, 1, 100, 0.0).unwrap();
        assert!(hits.iter().all(|h| h.word != 2));
        assert_eq!(hits.len(), 6 * 2);
        assert!(hits.windows(2).all(|p| p[0].cosine >= p[1].cosine));
        assert_eq!(nearest_neighbors(&m, 2, 1, 3, 0.0).unwrap().len(), 3);
        assert!(nearest_neighbors(&m, 2, 1, 0, 0.0).is_err());
    }

    #[test]
    fn zero_query_is_rejected() {
        let mut m = model(&[3, 2, 1], 4, 2, 6);
        m.in_vec_mut(0, 1).iter_mut().for_each(|x| *x = 0.0);
        assert!(matches!(
            nearest_neighbors(&m, 0, 1, 5, 0.0),
            Err(Error::ZeroNorm { word: 0, sense: 1 })
        ));
    }

    #[test]
    fn planted_clusters_are_recovered() {
        // Nine words in three orthogonal clusters, one sense each.
        let freqs: Vec<u64> = (1..=9).rev().collect();
        let mut m = model(&freqs, 3, 1, 7);
        for w in 0..9u32 {
            let c = (w % 3) as usize;
            let v = m.in_vec_mut(w, 0);
            v.iter_mut().for_each(|x| *x = 0.0);
            v[c] = 1.0 + w as f64 * 0.1;
            v[(c + 1) % 3] = 0.01 * w as f64;
        }
        for w in 0..9u32 {
            let hits = nearest_neighbors(&m, w, 0, 2, 0.0).unwrap();
            for h in hits {
                assert_eq!(h.word % 3, w % 3, "word {w} got {h:?}");
            }
        }
    }

    #[test]
    fn nearest_context_words() {
        let toks = [10, 11, 12, 13, 14, 15, 16];
        let occ = Occurrence { tokens: &toks, position: 3 };
        assert_eq!(occ.nearest(4), vec![12, 14, 11, 15]);
        let edge = Occurrence { tokens: &toks, position: 0 };
        assert_eq!(edge.nearest(4), vec![11, 12, 13, 14]);
        let short = Occurrence { tokens: &toks[..2], position: 1 };
        assert_eq!(short.nearest(4), vec![10]);
    }

    #[test]
    fn single_sense_similarities_coincide() {
        let m = model(&[9, 8, 7, 6, 5], 4, 1, 8);
        let toks = [0u32, 1, 2, 3, 4];
        let a = Occurrence { tokens: &toks, position: 1 };
        let b = Occurrence { tokens: &toks, position: 3 };
        let avg = avg_sim_c(&m, (1, a), (3, b), 1e-3, true).unwrap();
        let max = max_sim_c(&m, (1, a), (3, b)).unwrap();
        let cos = cosine(m.in_vec(1, 0), m.in_vec(3, 0));
        assert!((avg - cos).abs() < 1e-12);
        assert!((max - cos).abs() < 1e-12);
        assert!((max_sim_c(&m, (1, a), (1, a)).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn avg_sim_matches_double_loop() {
        let m = model(&[9, 8, 7, 6, 5], 4, 3, 10);
        let toks = [0u32, 1, 2, 3, 4, 0, 1];
        let a = Occurrence { tokens: &toks, position: 2 };
        let b = Occurrence { tokens: &toks, position: 5 };
        let p1 = disambiguate(&m, 2, &[1, 3, 0, 4]);
        let p2 = disambiguate(&m, 0, &[4, 1, 3, 2]);
        let mut want = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let (x, y) = (m.in_vec(2, i), m.in_vec(0, j));
                let cos = x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>()
                    / (x.iter().map(|a| a * a).sum::<f64>().sqrt() * y.iter().map(|a| a * a).sum::<f64>().sqrt());
                want += p1[i] * p2[j] * cos;
            }
        }
        let unscaled = avg_sim_c(&m, (2, a), (0, b), 1e-3, false).unwrap();
        assert!((unscaled - want).abs() < 1e-12);
        let k = (m.sense_count(2, 1e-3) * m.sense_count(0, 1e-3)) as f64;
        let scaled = avg_sim_c(&m, (2, a), (0, b), 1e-3, true).unwrap();
        assert!((scaled - want / k).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn cosine_symmetric_and_self_one(a in proptest::collection::vec(-5.0f64..5.0, 6), b in proptest::collection::vec(-5.0f64..5.0, 6)) {
            prop_assume!(norm(&a) > 1e-6 && norm(&b) > 1e-6);
            prop_assert!((cosine(&a, &b) - cosine(&b, &a)).abs() < 1e-12);
            prop_assert!((cosine(&a, &a) - 1.0).abs() < 1e-12);
        }

        #[test]
        fn neighbors_scale_invariant(seed in 0u64..1000, scale in 0.01f64..100.0) {
            let m = model(&[9, 8, 7, 6, 5, 4], 4, 2, seed);
            let mut scaled = m.clone();
            scaled.input_mut().iter_mut().for_each(|x| *x *= scale);
            let a: Vec<_> = nearest_neighbors(&m, 1, 0, 5, 0.0).unwrap().into_iter().map(|h| (h.word, h.sense)).collect();
            let b: Vec<_> = nearest_neighbors(&scaled, 1, 0, 5, 0.0).unwrap().into_iter().map(|h| (h.word, h.sense)).collect();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn loglik_nonpositive(seed in 0u64..500) {
            let m = model(&[9, 8, 7, 6, 5, 4], 3, 3, seed);
            let pairs: Vec<_> = crate::corpus::iter_training_pairs(&[0, 3, 1, 5, 2, 4, 0], 4).collect();
            prop_assert!(predictive_loglik(&m, &pairs).unwrap() <= 0.0);
        }
    }
}
