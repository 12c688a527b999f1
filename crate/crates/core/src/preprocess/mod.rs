//! Token cleaning and corpus pruning.
//!
//! Each of an app's three token lists goes through the same per-source
//! chain: strip punctuation, lowercase, sort and deduplicate, drop short
//! tokens, lemmatize, Porter-stem, then sort and deduplicate again. GUI
//! tokens additionally must be dictionary words, which discards most OCR
//! noise. After that the corpus is pruned of tokens present in too many apps
//! and uninteresting apps are removed.

mod lemmatize;
mod porter;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rayon::prelude::*;

pub use lemmatize::Lemmatizer;
pub use porter::porter_stem;

use crate::extract::{AppId, RawAppFeatures, Sha256};
use crate::textstats::{EnglishDictionary, TextQualityFlags};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineThresholds {
    /// Tokens shorter than this are dropped before stemming.
    pub min_token_len: usize,
    /// Tokens present in at least this fraction of apps are pruned.
    pub support_cutoff: f64,
    /// Apps with fewer processed keywords are removed.
    pub min_keywords: usize,
    /// Apps with at least this share of non-English words are removed.
    pub max_non_english: f64,
    /// Apps with at least this share of encrypted-looking words are removed.
    pub max_encrypted: f64,
}

impl Default for PipelineThresholds {
    fn default() -> Self {
        Self {
            min_token_len: 4,
            support_cutoff: 0.10,
            min_keywords: 10,
            max_non_english: 0.10,
            max_encrypted: 0.51,
        }
    }
}

impl PipelineThresholds {
    pub fn validate(&self) -> Result<()> {
        if self.min_token_len == 0 || self.min_keywords == 0 {
            return Err(Error::Config(
                "token length and keyword minimums must be positive".into(),
            ));
        }
        if !(self.support_cutoff > 0.0 && self.support_cutoff <= 1.0) {
            return Err(Error::Config(format!(
                "support_cutoff must be in (0, 1], got {}",
                self.support_cutoff
            )));
        }
        for (name, v) in [
            ("max_non_english", self.max_non_english),
            ("max_encrypted", self.max_encrypted),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::Config(format!("{name} must be in (0, 1], got {v}")));
            }
        }
        Ok(())
    }
}

/// One app after cleaning: three sorted, duplicate-free token lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcessedAppFeatures {
    pub id: AppId,
    pub method_tokens: Vec<String>,
    pub xml_tokens: Vec<String>,
    pub gui_tokens: Vec<String>,
}

impl ProcessedAppFeatures {
    pub fn keyword_count(&self) -> usize {
        self.method_tokens.len() + self.xml_tokens.len() + self.gui_tokens.len()
    }

    /// Distinct tokens across the three lists.
    pub fn token_set(&self) -> BTreeSet<&str> {
        self.lists().flat_map(|l| l.iter().map(String::as_str)).collect()
    }

    /// The topic-model document: the three lists concatenated.
    pub fn document(&self) -> Vec<String> {
        self.lists().flatten().cloned().collect()
    }

    fn lists(&self) -> impl Iterator<Item = &Vec<String>> {
        [&self.method_tokens, &self.xml_tokens, &self.gui_tokens].into_iter()
    }

    fn lists_mut(&mut self) -> impl Iterator<Item = &mut Vec<String>> {
        [&mut self.method_tokens, &mut self.xml_tokens, &mut self.gui_tokens].into_iter()
    }
}

/// Delete every non-alphanumeric character; `None` if nothing useful is
/// left (empty or purely numeric).
pub fn clean_token(token: &str) -> Option<String> {
    let cleaned: String = token.chars().filter(|c| c.is_alphanumeric()).collect();
    if cleaned.is_empty() || cleaned.chars().all(|c| c.is_numeric()) {
        None
    } else {
        Some(cleaned)
    }
}

/// Lowercase, sort, deduplicate.
pub fn normalize<S: AsRef<str>>(tokens: &[S]) -> Vec<String> {
    let set: BTreeSet<String> = tokens.iter().map(|t| t.as_ref().to_lowercase()).collect();
    set.into_iter().collect()
}

pub fn drop_short(tokens: &[String], min_len: usize) -> Vec<String> {
    tokens
        .iter()
        .filter(|t| t.chars().count() >= min_len)
        .cloned()
        .collect()
}

/// Run one source list through the per-source chain.
pub fn process_source<S: AsRef<str>>(
    tokens: &[S],
    min_len: usize,
    lemmatizer: &Lemmatizer<'_>,
    require_dictionary: Option<&EnglishDictionary>,
) -> Vec<String> {
    let cleaned: Vec<String> = tokens.iter().filter_map(|t| clean_token(t.as_ref())).collect();
    let mut tokens = drop_short(&normalize(&cleaned), min_len);
    if let Some(dict) = require_dictionary {
        tokens.retain(|t| dict.contains(t));
    }
    let stemmed: Vec<String> = tokens.iter().map(|t| porter_stem(&lemmatizer.lemmatize(t))).collect();
    normalize(&stemmed)
}

/// Per-app cleaning, before any corpus-level step.
pub fn process_app(
    raw: &RawAppFeatures,
    thresholds: &PipelineThresholds,
    dict: &EnglishDictionary,
) -> ProcessedAppFeatures {
    let lemmatizer = Lemmatizer::new(dict);
    let run = |words: &[String], gate| process_source(words, thresholds.min_token_len, &lemmatizer, gate);
    ProcessedAppFeatures {
        id: raw.id.clone(),
        method_tokens: run(&raw.method_words, None),
        xml_tokens: run(&raw.xml_words, None),
        gui_tokens: run(&raw.gui_words, Some(dict)),
    }
}

/// Document frequencies over a corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusStats {
    pub n_docs: usize,
    pub doc_frequency: BTreeMap<String, usize>,
}

impl CorpusStats {
    pub fn support(&self, token: &str) -> f64 {
        self.doc_frequency.get(token).copied().unwrap_or(0) as f64 / self.n_docs as f64
    }
}

pub fn compute_support(corpus: &[ProcessedAppFeatures]) -> Result<CorpusStats> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut doc_frequency: BTreeMap<String, usize> = BTreeMap::new();
    for app in corpus {
        for t in app.token_set() {
            *doc_frequency.entry(t.to_owned()).or_default() += 1;
        }
    }
    Ok(CorpusStats {
        n_docs: corpus.len(),
        doc_frequency,
    })
}

/// Remove every token whose support is at or above `cutoff` from all lists.
pub fn prune_by_support(
    mut corpus: Vec<ProcessedAppFeatures>,
    stats: &CorpusStats,
    cutoff: f64,
) -> Vec<ProcessedAppFeatures> {
    let common: BTreeSet<&str> = stats
        .doc_frequency
        .keys()
        .filter(|t| stats.support(t) >= cutoff)
        .map(String::as_str)
        .collect();
    if common.is_empty() {
        return corpus;
    }
    for app in &mut corpus {
        for list in app.lists_mut() {
            list.retain(|t| !common.contains(t.as_str()));
        }
    }
    corpus
}

#[derive(Debug, Clone, PartialEq)]
pub enum RemovalReason {
    TooFewKeywords(usize),
    NonEnglish(f64),
    Encrypted(f64),
}

impl RemovalReason {
    pub fn code(&self) -> &'static str {
        match self {
            RemovalReason::TooFewKeywords(_) => "few-keywords",
            RemovalReason::NonEnglish(_) => "non-english",
            RemovalReason::Encrypted(_) => "encrypted",
        }
    }
}

impl fmt::Display for RemovalReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RemovalReason::TooFewKeywords(n) => write!(f, "few-keywords({n})"),
            RemovalReason::NonEnglish(r) => write!(f, "non-english({r:.4})"),
            RemovalReason::Encrypted(r) => write!(f, "encrypted({r:.4})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Removal {
    pub id: AppId,
    pub reasons: Vec<RemovalReason>,
}

/// Split the corpus into kept apps and removals. Keyword counts come from
/// the processed lists; the ratios from flags measured on raw features.
/// Apps without flags are judged on keyword count alone.
pub fn filter_apps(
    corpus: Vec<ProcessedAppFeatures>,
    flags: &BTreeMap<Sha256, TextQualityFlags>,
    thresholds: &PipelineThresholds,
) -> (Vec<ProcessedAppFeatures>, Vec<Removal>) {
    let mut kept = Vec::with_capacity(corpus.len());
    let mut removed = Vec::new();
    for app in corpus {
        let mut reasons = Vec::new();
        let n = app.keyword_count();
        if n < thresholds.min_keywords {
            reasons.push(RemovalReason::TooFewKeywords(n));
        }
        if let Some(f) = flags.get(&app.id.sha256) {
            if f.non_english_ratio >= thresholds.max_non_english {
                reasons.push(RemovalReason::NonEnglish(f.non_english_ratio));
            }
            if f.encrypted_ratio >= thresholds.max_encrypted {
                reasons.push(RemovalReason::Encrypted(f.encrypted_ratio));
            }
        }
        if reasons.is_empty() {
            kept.push(app);
        } else {
            removed.push(Removal { id: app.id, reasons });
        }
    }
    (kept, removed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessOptions {
    pub thresholds: PipelineThresholds,
    /// Support pruning; turn off for single-app or tiny corpora, where every
    /// token has support 1.0.
    pub prune: bool,
}

impl Default for PreprocessOptions {
    fn default() -> Self {
        Self {
            thresholds: PipelineThresholds::default(),
            prune: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PreprocessOutput {
    pub corpus: Vec<ProcessedAppFeatures>,
    pub removed: Vec<Removal>,
}

/// Clean a whole corpus.
///
/// Removing apps shrinks the corpus and can push a surviving token back over
/// the support cutoff, so pruning and filtering repeat until neither changes
/// anything. The result therefore has no token at or above the cutoff.
pub fn preprocess_corpus(
    raw: &[RawAppFeatures],
    flags: &BTreeMap<Sha256, TextQualityFlags>,
    opts: &PreprocessOptions,
    dict: &EnglishDictionary,
) -> PreprocessOutput {
    let th = &opts.thresholds;
    let mut corpus: Vec<ProcessedAppFeatures> = raw.par_iter().map(|r| process_app(r, th, dict)).collect();
    let mut removed = Vec::new();
    loop {
        if opts.prune {
            if let Ok(stats) = compute_support(&corpus) {
                corpus = prune_by_support(corpus, &stats, th.support_cutoff);
            }
        }
        let (kept, dropped) = filter_apps(corpus, flags, th);
        corpus = kept;
        let done = dropped.is_empty() || !opts.prune;
        removed.extend(dropped);
        if done {
            break;
        }
    }
    removed.sort_by(|a, b| a.id.cmp(&b.id));
    PreprocessOutput { corpus, removed }
}
