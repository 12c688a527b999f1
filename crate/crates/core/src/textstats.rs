//! Per-app text quality measurements: obfuscation, encryption-likeness and
//! the share of non-English words. They drive both the app filter in
//! preprocessing and the anomaly flag in classification.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use crate::extract::RawAppFeatures;
use crate::{Error, Result};

static BUNDLED_WORDS: &str = include_str!("../data/english_words.txt");

/// A set of lowercase English words; lookups lowercase the query.
#[derive(Debug, Clone)]
pub struct EnglishDictionary {
    words: HashSet<String>,
}

impl EnglishDictionary {
    /// The word list shipped with the crate.
    pub fn bundled() -> Self {
        Self::from_words(BUNDLED_WORDS.lines()).expect("bundled word list is nonempty")
    }

    /// Load a plain-text list, one word per line. Blank lines and lines
    /// starting with `#` are ignored.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_words(text.lines().filter(|l| !l.trim_start().starts_with('#')))
            .map_err(|_| Error::parse(path, 0, "word list is empty"))
    }

    pub fn from_words<I, S>(words: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let words: HashSet<String> = words
            .into_iter()
            .map(|w| w.as_ref().trim().to_lowercase())
            .filter(|w| !w.is_empty())
            .collect();
        if words.is_empty() {
            return Err(Error::Config("dictionary is empty".into()));
        }
        Ok(Self { words })
    }

    pub fn contains(&self, word: &str) -> bool {
        if word.chars().any(char::is_uppercase) {
            self.words.contains(&word.to_lowercase())
        } else {
            self.words.contains(word)
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Tunables for the encryption and obfuscation detectors.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorThresholds {
    pub hex_min_len: usize,
    pub base64_min_len: usize,
    pub base64_min_entropy: f64,
    pub consonant_min_len: usize,
    pub consonant_run: usize,
    /// Identifiers of at most this many characters count as obfuscated.
    pub short_identifier_len: usize,
    /// Share of short identifiers above which a source is obfuscated.
    pub obfuscated_share: f64,
}

impl Default for DetectorThresholds {
    fn default() -> Self {
        Self {
            hex_min_len: 32,
            base64_min_len: 16,
            base64_min_entropy: 4.0,
            consonant_min_len: 12,
            consonant_run: 5,
            short_identifier_len: 2,
            obfuscated_share: 0.30,
        }
    }
}

/// Shannon entropy of the character distribution, in bits per character.
pub fn token_entropy(token: &str) -> Result<f64> {
    let mut counts: BTreeMap<char, usize> = BTreeMap::new();
    for c in token.chars() {
        *counts.entry(c).or_default() += 1;
    }
    let n: usize = counts.values().sum();
    if n == 0 {
        return Err(Error::EmptyToken);
    }
    let n = n as f64;
    Ok(counts
        .values()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum::<f64>()
        .max(0.0))
}

fn is_base64_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '+' | '/' | '=')
}

fn longest_consonant_run(token: &str) -> usize {
    let mut best = 0;
    let mut run = 0;
    for c in token.chars() {
        if c.is_ascii_alphabetic() && !matches!(c.to_ascii_lowercase(), 'a' | 'e' | 'i' | 'o' | 'u') {
            run += 1;
            best = best.max(run);
        } else {
            run = 0;
        }
    }
    best
}

/// Heuristic for ciphertext, hashes and encoded blobs. True when any of:
/// a long all-hex token; a long high-entropy base64 token; a long
/// non-dictionary token containing an unpronounceable consonant run.
pub fn is_encrypted_like(token: &str, dict: &EnglishDictionary, th: &DetectorThresholds) -> bool {
    let len = token.chars().count();
    if len >= th.hex_min_len && token.chars().all(|c| c.is_ascii_hexdigit()) {
        return true;
    }
    if len >= th.base64_min_len
        && token.chars().all(is_base64_char)
        && token_entropy(token)
            .map(|h| h >= th.base64_min_entropy)
            .unwrap_or(false)
    {
        return true;
    }
    len >= th.consonant_min_len && !dict.contains(token) && longest_consonant_run(token) >= th.consonant_run
}

/// Fraction of all raw words (three sources, with multiplicity) that look
/// encrypted. Zero for an app without words.
pub fn encrypted_ratio(rec: &RawAppFeatures, dict: &EnglishDictionary, th: &DetectorThresholds) -> f64 {
    let (hits, total) = rec.all_words().fold((0usize, 0usize), |(h, t), w| {
        (h + usize::from(is_encrypted_like(w, dict, th)), t + 1)
    });
    ratio(hits, total)
}

/// Fraction of raw words of at least four characters that are not in the
/// dictionary. Zero when there are no such words.
pub fn non_english_ratio(rec: &RawAppFeatures, dict: &EnglishDictionary) -> f64 {
    let (misses, total) = rec
        .all_words()
        .filter(|w| w.chars().count() >= 4)
        .fold((0usize, 0usize), |(m, t), w| {
            (m + usize::from(!dict.contains(w)), t + 1)
        });
    ratio(misses, total)
}

/// True when more than the configured share of identifiers are very short,
/// the signature of renaming obfuscators (`a`, `b`, `aa`, ...).
pub fn is_obfuscated_source<S: AsRef<str>>(identifiers: &[S], th: &DetectorThresholds) -> bool {
    if identifiers.is_empty() {
        return false;
    }
    let short = identifiers
        .iter()
        .filter(|id| id.as_ref().chars().count() <= th.short_identifier_len)
        .count();
    short as f64 / identifiers.len() as f64 > th.obfuscated_share
}

fn ratio(part: usize, whole: usize) -> f64 {
    if whole == 0 {
        0.0
    } else {
        part as f64 / whole as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TextQualityFlags {
    pub non_english_ratio: f64,
    pub encrypted_ratio: f64,
    pub obfuscated_methods: bool,
    pub obfuscated_xml: bool,
    pub encrypted_present: bool,
}

impl TextQualityFlags {
    pub fn clean() -> Self {
        Self {
            non_english_ratio: 0.0,
            encrypted_ratio: 0.0,
            obfuscated_methods: false,
            obfuscated_xml: false,
            encrypted_present: false,
        }
    }

    pub fn obfuscated(&self) -> bool {
        self.obfuscated_methods || self.obfuscated_xml
    }
}

/// Measure one app. Method obfuscation is judged on the raw identifiers,
/// XML obfuscation on the extracted XML words.
pub fn measure(rec: &RawAppFeatures, dict: &EnglishDictionary, th: &DetectorThresholds) -> TextQualityFlags {
    let encrypted = encrypted_ratio(rec, dict, th);
    TextQualityFlags {
        non_english_ratio: non_english_ratio(rec, dict),
        encrypted_ratio: encrypted,
        obfuscated_methods: is_obfuscated_source(&rec.method_identifiers, th),
        obfuscated_xml: is_obfuscated_source(&rec.xml_words, th),
        encrypted_present: encrypted > 0.0,
    }
}
