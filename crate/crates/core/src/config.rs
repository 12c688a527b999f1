//! Pipeline configuration: a flat `key = value` file.
//!
//! ```text
//! # comments and blank lines are ignored
//! input_root = apps
//! output_dir = out
//! topics = 31
//! prune = true
//! ocr = command
//! ocr_command = tesseract-stdout
//! stopwords_extra = foo, bar
//! ```
//!
//! Unknown keys and repeated keys are errors. Relative paths are resolved
//! against the directory holding the config file. See [`KEYS`] for the
//! full list.

use std::path::{Path, PathBuf};

use crate::classify::ClassifyOptions;
use crate::extract::{OcrAdapter, StopwordTable};
use crate::preprocess::PreprocessOptions;
use crate::textstats::DetectorThresholds;
use crate::topicmodel::{LdaConfig, DEFAULT_ALPHA_SUM};
use crate::{Error, Result};

/// Every accepted key.
pub const KEYS: &[&str] = &[
    "input_root",
    "output_dir",
    "dictionary",
    "label_map",
    "reference_labels",
    "min_token_len",
    "support_cutoff",
    "min_keywords",
    "max_non_english",
    "max_encrypted",
    "prune",
    "topics",
    "alpha",
    "beta",
    "iterations",
    "burn_in",
    "seed",
    "infer_iterations",
    "infer_burn_in",
    "topic_words",
    "hex_min_len",
    "base64_min_len",
    "base64_min_entropy",
    "consonant_min_len",
    "consonant_run",
    "short_identifier_len",
    "obfuscated_share",
    "min_topic_pct",
    "max_topics",
    "spread_pct",
    "min_spread_topics",
    "ocr",
    "ocr_command",
    "stopwords_extra",
];

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub input_root: Option<PathBuf>,
    pub output_dir: PathBuf,
    /// English word list; the bundled one when unset.
    pub dictionary: Option<PathBuf>,
    /// Topic label map; a majority map built from the reference labels, or
    /// the stock 31-topic map, when unset.
    pub label_map: Option<PathBuf>,
    pub reference_labels: Option<PathBuf>,
    pub preprocess: PreprocessOptions,
    pub lda: LdaConfig,
    /// Alpha as written in the config file; when unset, alpha follows the
    /// topic count.
    pub explicit_alpha: Option<f64>,
    /// Fold-in sweeps for apps that were not part of the fitted corpus.
    pub infer_iterations: usize,
    pub infer_burn_in: usize,
    pub topic_words: usize,
    pub detectors: DetectorThresholds,
    pub classify: ClassifyOptions,
    pub ocr: OcrAdapter,
    pub stopwords_extra: Vec<String>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            input_root: None,
            output_dir: PathBuf::from("."),
            dictionary: None,
            label_map: None,
            reference_labels: None,
            preprocess: PreprocessOptions::default(),
            lda: LdaConfig::default(),
            explicit_alpha: None,
            infer_iterations: 200,
            infer_burn_in: 100,
            topic_words: 20,
            detectors: DetectorThresholds::default(),
            classify: ClassifyOptions::default(),
            ocr: OcrAdapter::Sidecar,
            stopwords_extra: Vec::new(),
        }
    }
}

fn value<T: std::str::FromStr>(line: usize, key: &str, raw: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| Error::Config(format!("line {line}: bad value for {key}: {raw:?}")))
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new(""));
        Self::parse(&text, base)
    }

    /// Parse config text, resolving relative paths against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = std::collections::BTreeSet::new();
        let mut alpha = None;
        let mut ocr_kind = None;
        let mut ocr_command = None;
        let path = |raw: &str| base.join(raw);

        for (i, raw_line) in text.lines().enumerate() {
            let n = i + 1;
            let line = raw_line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, raw) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| Error::Config(format!("line {n}: expected `key = value`")))?;
            if !KEYS.contains(&key) {
                return Err(Error::Config(format!("line {n}: unknown key {key:?}")));
            }
            if !seen.insert(key.to_owned()) {
                return Err(Error::Config(format!("line {n}: {key} set twice")));
            }
            let th = &mut cfg.preprocess.thresholds;
            let det = &mut cfg.detectors;
            match key {
                "input_root" => cfg.input_root = Some(path(raw)),
                "output_dir" => cfg.output_dir = path(raw),
                "dictionary" => cfg.dictionary = Some(path(raw)),
                "label_map" => cfg.label_map = Some(path(raw)),
                "reference_labels" => cfg.reference_labels = Some(path(raw)),
                "min_token_len" => th.min_token_len = value(n, key, raw)?,
                "support_cutoff" => th.support_cutoff = value(n, key, raw)?,
                "min_keywords" => th.min_keywords = value(n, key, raw)?,
                "max_non_english" => th.max_non_english = value(n, key, raw)?,
                "max_encrypted" => th.max_encrypted = value(n, key, raw)?,
                "prune" => cfg.preprocess.prune = value(n, key, raw)?,
                "topics" => cfg.lda.n_topics = value(n, key, raw)?,
                "alpha" => alpha = Some(value(n, key, raw)?),
                "beta" => cfg.lda.beta = value(n, key, raw)?,
                "iterations" => cfg.lda.n_iterations = value(n, key, raw)?,
                "burn_in" => cfg.lda.burn_in = value(n, key, raw)?,
                "seed" => cfg.lda.seed = value(n, key, raw)?,
                "infer_iterations" => cfg.infer_iterations = value(n, key, raw)?,
                "infer_burn_in" => cfg.infer_burn_in = value(n, key, raw)?,
                "topic_words" => cfg.topic_words = value(n, key, raw)?,
                "hex_min_len" => det.hex_min_len = value(n, key, raw)?,
                "base64_min_len" => det.base64_min_len = value(n, key, raw)?,
                "base64_min_entropy" => det.base64_min_entropy = value(n, key, raw)?,
                "consonant_min_len" => det.consonant_min_len = value(n, key, raw)?,
                "consonant_run" => det.consonant_run = value(n, key, raw)?,
                "short_identifier_len" => det.short_identifier_len = value(n, key, raw)?,
                "obfuscated_share" => det.obfuscated_share = value(n, key, raw)?,
                "min_topic_pct" => cfg.classify.min_pct = value(n, key, raw)?,
                "max_topics" => cfg.classify.max_topics = value(n, key, raw)?,
                "spread_pct" => cfg.classify.anomaly.spread_pct = value(n, key, raw)?,
                "min_spread_topics" => cfg.classify.anomaly.min_topics = value(n, key, raw)?,
                "ocr" => ocr_kind = Some(raw.to_owned()),
                "ocr_command" => ocr_command = Some(raw.to_owned()),
                "stopwords_extra" => {
                    cfg.stopwords_extra = raw
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(str::to_owned)
                        .collect()
                }
                _ => unreachable!("key list and match arms disagree on {key}"),
            }
        }

        cfg.ocr = match (ocr_kind.as_deref(), ocr_command) {
            (None | Some("sidecar"), None) => OcrAdapter::Sidecar,
            (None | Some("command"), Some(cmd)) if !cmd.is_empty() => OcrAdapter::Command(cmd),
            (Some("command"), _) => return Err(Error::Config("ocr = command needs ocr_command".into())),
            (Some("sidecar"), Some(_)) => return Err(Error::Config("ocr_command given with ocr = sidecar".into())),
            (Some(other), _) => return Err(Error::Config(format!("unknown ocr adapter {other:?}"))),
            (None, Some(_)) => return Err(Error::Config("empty ocr_command".into())),
        };
        cfg.explicit_alpha = alpha;
        cfg.set_topics(cfg.lda.n_topics);
        Ok(cfg)
    }

    /// Change the topic count, rescaling alpha unless it was set explicitly.
    pub fn set_topics(&mut self, k: usize) {
        self.lda.n_topics = k;
        self.lda.alpha = self.explicit_alpha.unwrap_or(DEFAULT_ALPHA_SUM / k.max(1) as f64);
    }

    /// Range checks, plus existence of every file the config names.
    pub fn validate(&self) -> Result<()> {
        self.preprocess.thresholds.validate()?;
        self.lda.validate().map_err(|e| Error::Config(e.to_string()))?;
        if self.infer_iterations > 0 && self.infer_burn_in >= self.infer_iterations {
            return Err(Error::Config("infer_burn_in must be below infer_iterations".into()));
        }
        let d = &self.detectors;
        if d.hex_min_len == 0 || d.base64_min_len == 0 || d.consonant_min_len == 0 || d.consonant_run == 0 {
            return Err(Error::Config("detector lengths must be positive".into()));
        }
        if !(0.0..=1.0).contains(&d.obfuscated_share) {
            return Err(Error::Config("obfuscated_share must be in [0, 1]".into()));
        }
        if d.base64_min_entropy.is_nan() || d.base64_min_entropy < 0.0 {
            return Err(Error::Config("base64_min_entropy must be nonnegative".into()));
        }
        let c = &self.classify;
        if c.max_topics == 0 || !(0.0..=100.0).contains(&c.min_pct) {
            return Err(Error::Config(
                "max_topics must be positive and min_topic_pct in [0, 100]".into(),
            ));
        }
        if c.anomaly.min_topics == 0 || !(0.0..=100.0).contains(&c.anomaly.spread_pct) {
            return Err(Error::Config(
                "min_spread_topics must be positive and spread_pct in [0, 100]".into(),
            ));
        }
        for p in [
            &self.input_root,
            &self.dictionary,
            &self.label_map,
            &self.reference_labels,
        ]
        .into_iter()
        .flatten()
        {
            if !p.exists() {
                return Err(Error::Config(format!("{} does not exist", p.display())));
            }
        }
        Ok(())
    }

    pub fn stopwords(&self) -> StopwordTable {
        StopwordTable::with_extensions(&self.stopwords_extra)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        let cfg = PipelineConfig::parse("", Path::new("")).unwrap();
        assert_eq!(cfg, PipelineConfig::default());
        assert_eq!(cfg.lda.n_topics, 31);
        assert!((cfg.lda.alpha - 5.0 / 31.0).abs() < 1e-15);
        assert_eq!(cfg.preprocess.thresholds.min_keywords, 10);
    }

    #[test]
    fn alpha_follows_topic_count() {
        let cfg = PipelineConfig::parse("topics = 10\n", Path::new("")).unwrap();
        assert_eq!(cfg.lda.alpha, 0.5);
        let cfg = PipelineConfig::parse("topics = 10\nalpha = 0.1\n", Path::new("")).unwrap();
        assert_eq!(cfg.lda.alpha, 0.1);
    }

    #[test]
    fn parses_keys() {
        let text = "# run\ninput_root = apps\nprune = false\nseed = 7\nocr = command\nocr_command = ocr.sh\nstopwords_extra = Foo, bar,\n";
        let cfg = PipelineConfig::parse(text, Path::new("/base")).unwrap();
        assert_eq!(cfg.input_root, Some(PathBuf::from("/base/apps")));
        assert!(!cfg.preprocess.prune);
        assert_eq!(cfg.lda.seed, 7);
        assert_eq!(cfg.ocr, OcrAdapter::Command("ocr.sh".into()));
        assert_eq!(cfg.stopwords_extra, vec!["Foo", "bar"]);
        assert!(cfg.stopwords().contains("foo"));
    }

    #[test]
    fn rejects_bad_input() {
        let base = Path::new("");
        for text in [
            "colour = blue\n",
            "seed = 1\nseed = 2\n",
            "topics = many\n",
            "just a line\n",
            "ocr = command\n",
            "ocr = magic\n",
        ] {
            assert!(PipelineConfig::parse(text, base).is_err(), "{text:?}");
        }
    }

    #[test]
    fn validate_checks_ranges_and_files() {
        let mut cfg = PipelineConfig::default();
        cfg.validate().unwrap();
        cfg.preprocess.thresholds.support_cutoff = 1.5;
        assert!(cfg.validate().is_err());
        let cfg = PipelineConfig {
            dictionary: Some(PathBuf::from("/definitely/not/here.txt")),
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let mut cfg = PipelineConfig::default();
        cfg.lda.burn_in = cfg.lda.n_iterations;
        assert!(cfg.validate().is_err());
    }
}
