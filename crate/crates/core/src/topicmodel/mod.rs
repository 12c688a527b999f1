//! Latent Dirichlet allocation fitted by collapsed Gibbs sampling.
//!
//! Each app is one document: its method, XML and GUI tokens concatenated.
//! Topics are numbered from 1 in every user-facing place ([`TopicId`]
//! displays as `T1`, `T2`, ...) and indexed from 0 internally.

mod gibbs;
mod persist;
mod topicmap;

use std::collections::{BTreeSet, HashMap};
use std::fmt;

pub use gibbs::{fit_gibbs, fit_gibbs_observed, InferredTheta, SamplerState};
pub use persist::{load_model, read_model, save_model, write_model};
pub use topicmap::{classical_mds, emit_topic_map, js_divergence, TopicMap, TopicMapEntry};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TopicId(usize);

impl TopicId {
    pub fn from_index(index: usize) -> Self {
        Self(index)
    }

    /// From the 1-based number used in files and reports.
    pub fn from_number(number: usize) -> Option<Self> {
        number.checked_sub(1).map(Self)
    }

    pub fn index(self) -> usize {
        self.0
    }

    pub fn number(self) -> usize {
        self.0 + 1
    }
}

impl fmt::Display for TopicId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "T{}", self.number())
    }
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Copy + Default> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::default(); rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<T>>, cols: usize) -> Self {
        let n = rows.len();
        let data: Vec<T> = rows.into_iter().flatten().collect();
        assert_eq!(data.len(), n * cols, "ragged rows");
        Self { rows: n, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    pub fn get_mut(&mut self, r: usize, c: usize) -> &mut T {
        &mut self.data[r * self.cols + c]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[T]> {
        (0..self.rows).map(move |r| self.row(r))
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }
}

/// Token ↔ dense id, ids assigned in lexicographic token order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    ids: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let sorted: BTreeSet<String> = tokens.into_iter().map(Into::into).collect();
        let tokens: Vec<String> = sorted.into_iter().collect();
        let ids = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Self { tokens, ids }
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.ids.get(token).copied()
    }

    pub fn token(&self, id: usize) -> &str {
        &self.tokens[id]
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

/// One topic-model document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub tokens: Vec<String>,
}

impl Document {
    pub fn new(id: impl Into<String>, tokens: Vec<String>) -> Self {
        Self { id: id.into(), tokens }
    }
}

pub fn build_vocabulary(corpus: &[Document]) -> Result<Vocabulary> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(Vocabulary::from_tokens(
        corpus.iter().flat_map(|d| d.tokens.iter().cloned()),
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LdaConfig {
    pub n_topics: usize,
    /// Symmetric per-topic document prior.
    pub alpha: f64,
    /// Symmetric topic-word prior.
    pub beta: f64,
    pub n_iterations: usize,
    /// Sweeps discarded before sufficient statistics are averaged.
    pub burn_in: usize,
    pub seed: u64,
}

pub const DEFAULT_TOPICS: usize = 31;
pub const DEFAULT_ALPHA_SUM: f64 = 5.0;

impl Default for LdaConfig {
    fn default() -> Self {
        Self::with_topics(DEFAULT_TOPICS)
    }
}

impl LdaConfig {
    /// Defaults for `k` topics: alpha = 5/k, beta = 0.01, 1000 sweeps with
    /// the first 800 discarded.
    pub fn with_topics(k: usize) -> Self {
        Self {
            n_topics: k,
            alpha: DEFAULT_ALPHA_SUM / k.max(1) as f64,
            beta: 0.01,
            n_iterations: 1000,
            burn_in: 800,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_topics < 2 {
            return Err(Error::InvalidModel(format!(
                "need at least 2 topics, got {}",
                self.n_topics
            )));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) || !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidModel("alpha and beta must be positive".into()));
        }
        if self.n_iterations == 0 || self.burn_in >= self.n_iterations {
            return Err(Error::InvalidModel(format!(
                "burn_in ({}) must be below n_iterations ({})",
                self.burn_in, self.n_iterations
            )));
        }
        Ok(())
    }
}

/// A fitted model.
///
/// Keeps the final sample's integer counts and the counts summed over every
/// post-burn-in sweep; `phi` and `theta` are posterior means derived from the
/// summed counts.
#[derive(Debug, Clone, PartialEq)]
pub struct LdaModel {
    pub config: LdaConfig,
    pub vocab: Vocabulary,
    pub doc_ids: Vec<String>,
    pub doc_lengths: Vec<u64>,
    pub topic_word_counts: Matrix<u64>,
    pub doc_topic_counts: Matrix<u64>,
    pub summed_topic_word: Matrix<u64>,
    pub summed_doc_topic: Matrix<u64>,
    pub n_samples: u64,
    phi: Matrix<f64>,
    theta: Matrix<f64>,
}

impl LdaModel {
    /// Assemble a model from count matrices and derive `phi` and `theta`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_counts(
        config: LdaConfig,
        vocab: Vocabulary,
        doc_ids: Vec<String>,
        topic_word_counts: Matrix<u64>,
        doc_topic_counts: Matrix<u64>,
        summed_topic_word: Matrix<u64>,
        summed_doc_topic: Matrix<u64>,
        n_samples: u64,
    ) -> Result<Self> {
        config.validate()?;
        let k = config.n_topics;
        let (v, d) = (vocab.len(), doc_ids.len());
        let shapes = [
            (topic_word_counts.rows(), topic_word_counts.cols(), k, v),
            (summed_topic_word.rows(), summed_topic_word.cols(), k, v),
            (doc_topic_counts.rows(), doc_topic_counts.cols(), d, k),
            (summed_doc_topic.rows(), summed_doc_topic.cols(), d, k),
        ];
        if shapes.iter().any(|&(r, c, er, ec)| r != er || c != ec) {
            return Err(Error::InvalidModel("count matrix shape mismatch".into()));
        }
        if n_samples == 0 {
            return Err(Error::InvalidModel("no samples".into()));
        }
        let doc_lengths: Vec<u64> = doc_topic_counts.iter_rows().map(|r| r.iter().sum()).collect();
        let total: u64 = doc_lengths.iter().sum();
        if topic_word_counts.as_slice().iter().sum::<u64>() != total
            || summed_topic_word.as_slice().iter().sum::<u64>() != total * n_samples
            || summed_doc_topic.as_slice().iter().sum::<u64>() != total * n_samples
        {
            return Err(Error::InvalidModel("count matrices disagree on the token total".into()));
        }
        let mut model = Self {
            config,
            vocab,
            doc_ids,
            doc_lengths,
            topic_word_counts,
            doc_topic_counts,
            summed_topic_word,
            summed_doc_topic,
            n_samples,
            phi: Matrix::zeros(0, 0),
            theta: Matrix::zeros(0, 0),
        };
        model.phi = model.posterior_phi();
        model.theta = model.posterior_theta();
        Ok(model)
    }

    fn posterior_phi(&self) -> Matrix<f64> {
        let (k, v) = (self.n_topics(), self.vocab.len());
        let s = self.n_samples as f64;
        let beta = self.config.beta;
        let mut phi = Matrix::zeros(k, v);
        for t in 0..k {
            let counts = self.summed_topic_word.row(t);
            let total = counts.iter().sum::<u64>() as f64 / s;
            let denom = total + v as f64 * beta;
            for (p, &c) in phi.row_mut(t).iter_mut().zip(counts) {
                *p = (c as f64 / s + beta) / denom;
            }
        }
        phi
    }

    fn posterior_theta(&self) -> Matrix<f64> {
        let (d, k) = (self.doc_ids.len(), self.n_topics());
        let s = self.n_samples as f64;
        let alpha = self.config.alpha;
        let mut theta = Matrix::zeros(d, k);
        for doc in 0..d {
            let denom = self.doc_lengths[doc] as f64 + k as f64 * alpha;
            for (p, &c) in theta.row_mut(doc).iter_mut().zip(self.summed_doc_topic.row(doc)) {
                *p = (c as f64 / s + alpha) / denom;
            }
        }
        theta
    }

    pub fn n_topics(&self) -> usize {
        self.config.n_topics
    }

    pub fn n_docs(&self) -> usize {
        self.doc_ids.len()
    }

    /// Topic-word distributions, one row per topic.
    pub fn phi(&self) -> &Matrix<f64> {
        &self.phi
    }

    /// Document-topic distributions, one row per document.
    pub fn theta(&self) -> &Matrix<f64> {
        &self.theta
    }

    pub fn doc_index(&self, id: &str) -> Option<usize> {
        self.doc_ids.iter().position(|d| d == id)
    }

    pub fn theta_for(&self, id: &str) -> Option<&[f64]> {
        self.doc_index(id).map(|i| self.theta.row(i))
    }

    pub fn total_tokens(&self) -> u64 {
        self.doc_lengths.iter().sum()
    }
}

/// The `max_n` largest entries of a theta row as `(topic, percent)`, largest
/// first, ties to the lower topic; entries under `min_pct` percent dropped.
pub fn top_topics(theta_row: &[f64], min_pct: f64, max_n: usize) -> Vec<(TopicId, f64)> {
    let mut ranked: Vec<(TopicId, f64)> = theta_row
        .iter()
        .enumerate()
        .map(|(i, &p)| (TopicId::from_index(i), p * 100.0))
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked.truncate(max_n);
    ranked.retain(|&(_, pct)| pct >= min_pct);
    ranked
}

/// An app's leading topics with their percentages.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicAssignment {
    pub app_id: String,
    pub contributions: Vec<(TopicId, f64)>,
}

impl TopicAssignment {
    pub fn from_theta(app_id: impl Into<String>, theta_row: &[f64], min_pct: f64, max_n: usize) -> Self {
        Self {
            app_id: app_id.into(),
            contributions: top_topics(theta_row, min_pct, max_n),
        }
    }

    pub fn primary_topic(&self) -> Option<TopicId> {
        self.contributions.first().map(|&(t, _)| t)
    }
}

/// The `n` most probable tokens of a topic, ties in token order.
pub fn top_words(model: &LdaModel, topic: TopicId, n: usize) -> Result<Vec<(String, f64)>> {
    if topic.index() >= model.n_topics() {
        return Err(Error::InvalidModel(format!("no topic {topic}")));
    }
    let row = model.phi().row(topic.index());
    let mut ids: Vec<usize> = (0..row.len()).collect();
    ids.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
    Ok(ids
        .into_iter()
        .take(n)
        .map(|w| (model.vocab.token(w).to_owned(), row[w]))
        .collect())
}

/// Sum over token positions of `log Σ_k theta[d][k] * phi[k][w]`.
/// Documents are matched to the model by id; unknown documents or tokens
/// are an error.
pub fn corpus_log_likelihood(model: &LdaModel, corpus: &[Document]) -> Result<f64> {
    let phi = model.phi();
    let mut total = 0.0;
    for doc in corpus {
        let theta = model
            .theta_for(&doc.id)
            .ok_or_else(|| Error::InvalidModel(format!("document {:?} not in model", doc.id)))?;
        for tok in &doc.tokens {
            let w = model
                .vocab
                .id(tok)
                .ok_or_else(|| Error::InvalidModel(format!("token {tok:?} not in vocabulary")))?;
            let p: f64 = theta.iter().enumerate().map(|(k, &t)| t * phi.get(k, w)).sum();
            total += p.ln();
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(words: &[&str]) -> Vec<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn vocabulary_is_sorted() {
        let corpus = vec![
            Document::new("d1", toks(&["b", "a"])),
            Document::new("d2", toks(&["b"])),
        ];
        let vocab = build_vocabulary(&corpus).unwrap();
        assert_eq!(vocab.id("a"), Some(0));
        assert_eq!(vocab.id("b"), Some(1));
        assert_eq!(vocab.len(), 2);
        assert!(build_vocabulary(&[]).is_err());
    }

    #[test]
    fn top_topics_london_row() {
        let mut row = vec![0.0; 31];
        row[11] = 0.91274;
        row[2] = 0.06725;
        row[30] = 0.01379;
        let rest = (1.0 - 0.91274 - 0.06725 - 0.01379) / 28.0;
        for (i, p) in row.iter_mut().enumerate() {
            if ![11, 2, 30].contains(&i) {
                *p = rest;
            }
        }
        let top = top_topics(&row, 1.0, 4);
        assert_eq!(top.len(), 3);
        assert_eq!(top[0].0.number(), 12);
        assert_eq!(top[1].0.number(), 3);
        assert!((top[0].1 - 91.274).abs() < 1e-9);
    }

    #[test]
    fn top_topics_uniform_and_single() {
        let uniform = vec![1.0 / 31.0; 31];
        let top = top_topics(&uniform, 1.0, 4);
        assert_eq!(top.iter().map(|t| t.0.index()).collect::<Vec<_>>(), vec![0, 1, 2, 3]);
        let mut one = vec![0.0; 5];
        one[3] = 1.0;
        assert_eq!(top_topics(&one, 1.0, 4), vec![(TopicId::from_index(3), 100.0)]);
    }

    fn tiny_model() -> LdaModel {
        let vocab = Vocabulary::from_tokens(["rain", "sun", "weather"]);
        let tw = Matrix::from_rows(vec![vec![1, 0, 5], vec![0, 3, 0]], 3);
        let dt = Matrix::from_rows(vec![vec![6, 0], vec![0, 3]], 2);
        LdaModel::from_counts(
            LdaConfig::with_topics(2),
            vocab,
            vec!["a".into(), "b".into()],
            tw.clone(),
            dt.clone(),
            tw,
            dt,
            1,
        )
        .unwrap()
    }

    #[test]
    fn top_words_order_and_clamp() {
        let m = tiny_model();
        let words = top_words(&m, TopicId::from_index(0), 2).unwrap();
        assert_eq!(words[0].0, "weather");
        assert_eq!(words[1].0, "rain");
        assert!(top_words(&m, TopicId::from_index(0), 0).unwrap().is_empty());
        assert_eq!(top_words(&m, TopicId::from_index(1), 10).unwrap().len(), 3);
        assert!(top_words(&m, TopicId::from_index(2), 1).is_err());
        // ties broken by token order: rain and weather both have zero count in topic 2
        let t2 = top_words(&m, TopicId::from_index(1), 3).unwrap();
        assert_eq!(t2[1].0, "rain");
    }

    #[test]
    fn posterior_rows_normalized() {
        let m = tiny_model();
        for row in m.phi().iter_rows().chain(m.theta().iter_rows()) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn log_likelihood_of_certain_token_is_zero() {
        // one document, one token: with tiny priors theta·phi → 1
        let vocab = Vocabulary::from_tokens(["only"]);
        let cfg = LdaConfig {
            alpha: 1e-12,
            beta: 1e-12,
            ..LdaConfig::with_topics(2)
        };
        let tw = Matrix::from_rows(vec![vec![1], vec![0]], 1);
        let dt = Matrix::from_rows(vec![vec![1, 0]], 2);
        let m = LdaModel::from_counts(cfg, vocab, vec!["d".into()], tw.clone(), dt.clone(), tw, dt, 1).unwrap();
        let ll = corpus_log_likelihood(&m, &[Document::new("d", toks(&["only"]))]).unwrap();
        assert!(ll.abs() < 1e-9, "{ll}");
    }

    #[test]
    fn shape_and_total_checks() {
        let vocab = Vocabulary::from_tokens(["x"]);
        let tw = Matrix::from_rows(vec![vec![2], vec![0]], 1);
        let dt = Matrix::from_rows(vec![vec![1, 0]], 2);
        let r = LdaModel::from_counts(
            LdaConfig::with_topics(2),
            vocab,
            vec!["d".into()],
            tw.clone(),
            dt.clone(),
            tw,
            dt,
            1,
        );
        assert!(r.is_err());
    }
}
