use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{build_vocabulary, Document, LdaConfig, LdaModel, Matrix, Vocabulary};
use crate::{Error, Result};

/// FNV-1a over the document id; picks the document's ChaCha stream.
fn stream_for(doc_id: &str) -> u64 {
    doc_id.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}

/// Each document draws from its own ChaCha8 stream keyed by (seed, id), so
/// a document's random numbers do not depend on where it sits in the corpus.
pub(crate) fn doc_rng(seed: u64, doc_id: &str) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_for(doc_id));
    rng
}

/// Read-only view of the sampler between sweeps.
pub struct SamplerState<'a> {
    pub(crate) vocab: &'a Vocabulary,
    pub(crate) config: &'a LdaConfig,
    pub(crate) docs: &'a [Vec<usize>],
    pub(crate) topic_word: &'a Matrix<u64>,
    pub(crate) doc_topic: &'a Matrix<u64>,
    pub(crate) topic_totals: &'a [u64],
}

impl SamplerState<'_> {
    pub fn topic_word_counts(&self) -> &Matrix<u64> {
        self.topic_word
    }

    pub fn doc_topic_counts(&self) -> &Matrix<u64> {
        self.doc_topic
    }

    pub fn topic_totals(&self) -> &[u64] {
        self.topic_totals
    }

    pub fn total_tokens(&self) -> u64 {
        self.docs.iter().map(|d| d.len() as u64).sum()
    }

    /// Log-likelihood of the corpus under the current sample's point
    /// estimates of theta and phi.
    pub fn log_likelihood(&self) -> f64 {
        let k = self.config.n_topics;
        let v = self.vocab.len() as f64;
        let (alpha, beta) = (self.config.alpha, self.config.beta);
        let mut total = 0.0;
        for (d, words) in self.docs.iter().enumerate() {
            let nd = words.len() as f64 + k as f64 * alpha;
            for &w in words {
                let p: f64 = (0..k)
                    .map(|t| {
                        let theta = (self.doc_topic.get(d, t) as f64 + alpha) / nd;
                        let phi = (self.topic_word.get(t, w) as f64 + beta) / (self.topic_totals[t] as f64 + v * beta);
                        theta * phi
                    })
                    .sum();
                total += p.ln();
            }
        }
        total
    }
}

/// Fit with the default (silent) observer.
pub fn fit_gibbs(corpus: &[Document], cfg: &LdaConfig) -> Result<LdaModel> {
    fit_gibbs_observed(corpus, cfg, |_, _| {})
}

/// Collapsed Gibbs sampling. `observe(sweep, state)` runs after every sweep
/// (`sweep` counts from 1).
pub fn fit_gibbs_observed<F>(corpus: &[Document], cfg: &LdaConfig, mut observe: F) -> Result<LdaModel>
where
    F: FnMut(usize, &SamplerState<'_>),
{
    cfg.validate()?;
    let vocab = build_vocabulary(corpus)?;
    let mut seen = HashSet::new();
    for doc in corpus {
        if doc.tokens.is_empty() {
            return Err(Error::EmptyDocument(doc.id.clone()));
        }
        if !seen.insert(doc.id.as_str()) {
            return Err(Error::DuplicateDocument(doc.id.clone()));
        }
    }
    let k = cfg.n_topics;
    let v = vocab.len();
    if v < k {
        log::warn!("vocabulary ({v}) is smaller than the topic count ({k})");
    }

    let docs: Vec<Vec<usize>> = corpus
        .iter()
        .map(|d| {
            d.tokens
                .iter()
                .map(|t| vocab.id(t).expect("built from corpus"))
                .collect()
        })
        .collect();
    let mut rngs: Vec<ChaCha8Rng> = corpus.iter().map(|d| doc_rng(cfg.seed, &d.id)).collect();

    let mut topic_word = Matrix::<u64>::zeros(k, v);
    let mut doc_topic = Matrix::<u64>::zeros(docs.len(), k);
    let mut topic_totals = vec![0u64; k];
    let mut assignments: Vec<Vec<usize>> = Vec::with_capacity(docs.len());
    for (d, words) in docs.iter().enumerate() {
        let z: Vec<usize> = words.iter().map(|_| rngs[d].random_range(0..k)).collect();
        for (&w, &t) in words.iter().zip(&z) {
            *topic_word.get_mut(t, w) += 1;
            *doc_topic.get_mut(d, t) += 1;
            topic_totals[t] += 1;
        }
        assignments.push(z);
    }

    let mut summed_topic_word = Matrix::<u64>::zeros(k, v);
    let mut summed_doc_topic = Matrix::<u64>::zeros(docs.len(), k);
    let mut n_samples = 0u64;
    let (alpha, beta) = (cfg.alpha, cfg.beta);
    let v_beta = v as f64 * beta;
    let mut cumulative = vec![0.0f64; k];

    for sweep in 1..=cfg.n_iterations {
        for (d, words) in docs.iter().enumerate() {
            let rng = &mut rngs[d];
            for (i, &w) in words.iter().enumerate() {
                let old = assignments[d][i];
                *topic_word.get_mut(old, w) -= 1;
                *doc_topic.get_mut(d, old) -= 1;
                topic_totals[old] -= 1;

                let mut acc = 0.0;
                for t in 0..k {
                    acc += (doc_topic.get(d, t) as f64 + alpha) * (topic_word.get(t, w) as f64 + beta)
                        / (topic_totals[t] as f64 + v_beta);
                    cumulative[t] = acc;
                }
                let u = rng.random::<f64>() * acc;
                let new = cumulative.partition_point(|&c| c <= u).min(k - 1);

                assignments[d][i] = new;
                *topic_word.get_mut(new, w) += 1;
                *doc_topic.get_mut(d, new) += 1;
                topic_totals[new] += 1;
            }
        }
        if sweep > cfg.burn_in {
            for (s, &c) in summed_topic_word.data.iter_mut().zip(&topic_word.data) {
                *s += c;
            }
            for (s, &c) in summed_doc_topic.data.iter_mut().zip(&doc_topic.data) {
                *s += c;
            }
            n_samples += 1;
        }
        observe(
            sweep,
            &SamplerState {
                vocab: &vocab,
                config: cfg,
                docs: &docs,
                topic_word: &topic_word,
                doc_topic: &doc_topic,
                topic_totals: &topic_totals,
            },
        );
    }

    LdaModel::from_counts(
        cfg.clone(),
        vocab,
        corpus.iter().map(|d| d.id.clone()).collect(),
        topic_word,
        doc_topic,
        summed_topic_word,
        summed_doc_topic,
        n_samples,
    )
}

impl LdaModel {
    /// Estimate theta for a document the model was not fitted on, holding
    /// the topics fixed. Tokens outside the vocabulary are ignored; with no
    /// known tokens the result is the prior (uniform) and `known` is 0.
    pub fn infer_theta(&self, doc_id: &str, tokens: &[String], iterations: usize, burn_in: usize) -> InferredTheta {
        let k = self.n_topics();
        let alpha = self.config.alpha;
        let words: Vec<usize> = tokens.iter().filter_map(|t| self.vocab.id(t)).collect();
        if words.is_empty() || iterations == 0 {
            return InferredTheta {
                theta: vec![1.0 / k as f64; k],
                known_tokens: words.len(),
            };
        }
        let phi = self.phi();
        let mut rng = doc_rng(self.config.seed, doc_id);
        let mut counts = vec![0u64; k];
        let mut z: Vec<usize> = words.iter().map(|_| rng.random_range(0..k)).collect();
        for &t in &z {
            counts[t] += 1;
        }
        let mut summed = vec![0u64; k];
        let mut samples = 0u64;
        let mut cumulative = vec![0.0f64; k];
        let burn_in = burn_in.min(iterations - 1);
        for sweep in 1..=iterations {
            for (i, &w) in words.iter().enumerate() {
                counts[z[i]] -= 1;
                let mut acc = 0.0;
                for t in 0..k {
                    acc += (counts[t] as f64 + alpha) * phi.get(t, w);
                    cumulative[t] = acc;
                }
                let u = rng.random::<f64>() * acc;
                z[i] = cumulative.partition_point(|&c| c <= u).min(k - 1);
                counts[z[i]] += 1;
            }
            if sweep > burn_in {
                for (s, &c) in summed.iter_mut().zip(&counts) {
                    *s += c;
                }
                samples += 1;
            }
        }
        let denom = words.len() as f64 + k as f64 * alpha;
        InferredTheta {
            theta: summed
                .iter()
                .map(|&c| (c as f64 / samples as f64 + alpha) / denom)
                .collect(),
            known_tokens: words.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InferredTheta {
    pub theta: Vec<f64>,
    pub known_tokens: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(id: &str, words: &[&str]) -> Document {
        Document::new(id, words.iter().map(|w| w.to_string()).collect())
    }

    fn quick(k: usize) -> LdaConfig {
        LdaConfig {
            n_iterations: 50,
            burn_in: 30,
            seed: 7,
            ..LdaConfig::with_topics(k)
        }
    }

    #[test]
    fn single_document_theta_normalized() {
        let m = fit_gibbs(&[doc("only", &["apple", "pear", "apple"])], &quick(2)).unwrap();
        let row = m.theta().row(0);
        assert_eq!(row.len(), 2);
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            fit_gibbs(&[doc("a", &["x"]), doc("b", &[])], &quick(2)),
            Err(Error::EmptyDocument(id)) if id == "b"
        ));
        assert!(matches!(
            fit_gibbs(&[doc("a", &["x"]), doc("a", &["y"])], &quick(2)),
            Err(Error::DuplicateDocument(_))
        ));
        assert!(fit_gibbs(&[doc("a", &["x"])], &quick(1)).is_err());
        assert!(fit_gibbs(&[], &quick(2)).is_err());
        let bad = LdaConfig {
            burn_in: 50,
            ..quick(2)
        };
        assert!(fit_gibbs(&[doc("a", &["x"])], &bad).is_err());
    }

    #[test]
    fn deterministic() {
        let corpus = vec![doc("a", &["x", "y", "z", "x"]), doc("b", &["y", "y", "w"])];
        let m1 = fit_gibbs(&corpus, &quick(3)).unwrap();
        let m2 = fit_gibbs(&corpus, &quick(3)).unwrap();
        assert_eq!(m1, m2);
        let other = fit_gibbs(&corpus, &LdaConfig { seed: 8, ..quick(3) }).unwrap();
        assert_eq!(other.total_tokens(), m1.total_tokens());
    }

    #[test]
    fn counts_conserved_every_sweep() {
        let corpus = vec![doc("a", &["x", "y", "z", "x"]), doc("b", &["y", "y", "w"])];
        let mut sweeps = 0;
        fit_gibbs_observed(&corpus, &quick(3), |_, s| {
            sweeps += 1;
            assert_eq!(s.topic_word_counts().as_slice().iter().sum::<u64>(), 7);
            assert_eq!(s.doc_topic_counts().as_slice().iter().sum::<u64>(), 7);
            assert_eq!(s.topic_totals().iter().sum::<u64>(), 7);
        })
        .unwrap();
        assert_eq!(sweeps, 50);
    }

    #[test]
    fn unknown_tokens_fall_back_to_prior() {
        let m = fit_gibbs(&[doc("a", &["x", "y"]), doc("b", &["z"])], &quick(4)).unwrap();
        let inferred = m.infer_theta("new", &["nope".to_string()], 20, 10);
        assert_eq!(inferred.known_tokens, 0);
        assert!(inferred.theta.iter().all(|&p| (p - 0.25).abs() < 1e-15));
        let inferred = m.infer_theta("new", &["x".to_string(), "nope".to_string()], 20, 10);
        assert_eq!(inferred.known_tokens, 1);
        assert!((inferred.theta.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}
