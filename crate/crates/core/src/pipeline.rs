//! The pipeline stages as file-to-file operations.
//!
//! | stage        | reads                                   | writes                                  |
//! |--------------|-----------------------------------------|-----------------------------------------|
//! | `extract`    | decompiled app directories              | Dataset-1, quality flags                |
//! | `preprocess` | Dataset-1 (+ quality flags)             | Dataset-2, removal report               |
//! | `fit`        | Dataset-2                               | model, topic keys, composition          |
//! | `classify`   | model, Dataset-2 (+ quality flags)      | classification                          |
//! | `similarity` | classification, reference labels        | similarity report                       |
//! | `topicmap`   | model                                   | topic-map JSON                          |

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;

use crate::classify::{
    classify_app, majority_label_map, most_frequent_match_similarity, ClassificationResult, SimilarityReport,
    TopicLabelMap,
};
use crate::config::PipelineConfig;
use crate::dataset::{self, DatasetRow};
use crate::extract::{extract_corpus, Sha256};
use crate::preprocess::{preprocess_corpus, PreprocessOutput};
use crate::textstats::{measure, EnglishDictionary, TextQualityFlags};
use crate::topicmodel::{
    emit_topic_map, fit_gibbs_observed, load_model, Document, LdaModel, TopicAssignment, TopicMap,
};
use crate::{Error, Result};

pub fn load_dictionary(cfg: &PipelineConfig) -> Result<EnglishDictionary> {
    match &cfg.dictionary {
        Some(path) => EnglishDictionary::load(path),
        None => Ok(EnglishDictionary::bundled()),
    }
}

/// Scan every app under `input_root` into Dataset-1 and its quality flags.
/// Returns the number of apps written.
pub fn cmd_extract(cfg: &PipelineConfig, input_root: &Path, dataset_out: &Path, quality_out: &Path) -> Result<usize> {
    let dict = load_dictionary(cfg)?;
    let records = extract_corpus(input_root, &cfg.stopwords(), &cfg.ocr)?;
    let flags: BTreeMap<Sha256, TextQualityFlags> = records
        .par_iter()
        .map(|r| (r.id.sha256.clone(), measure(r, &dict, &cfg.detectors)))
        .collect();
    let rows: Vec<DatasetRow> = records.iter().map(DatasetRow::from).collect();
    dataset::save_dataset(dataset_out, &rows)?;
    dataset::save_quality(quality_out, &flags)?;
    log::info!("extracted {} app(s) into {}", rows.len(), dataset_out.display());
    Ok(rows.len())
}

/// Quality flags from the extract stage, or measured from Dataset-1 words
/// when no flags file is given. Measured flags cannot see method identifiers,
/// so method obfuscation is never set on them.
fn quality_for(
    rows: &[DatasetRow],
    quality: Option<&Path>,
    dict: &EnglishDictionary,
    cfg: &PipelineConfig,
) -> Result<BTreeMap<Sha256, TextQualityFlags>> {
    if let Some(path) = quality {
        return dataset::load_quality(path);
    }
    Ok(rows
        .par_iter()
        .map(|r| {
            (
                r.id.sha256.clone(),
                measure(&r.clone().into_raw(), dict, &cfg.detectors),
            )
        })
        .collect())
}

/// Clean Dataset-1 into Dataset-2 and report removed apps.
pub fn cmd_preprocess(
    cfg: &PipelineConfig,
    dataset_in: &Path,
    quality: Option<&Path>,
    dataset_out: &Path,
    report_out: &Path,
) -> Result<PreprocessOutput> {
    let dict = load_dictionary(cfg)?;
    let rows = dataset::load_dataset(dataset_in)?;
    if rows.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let flags = quality_for(&rows, quality, &dict, cfg)?;
    let raw: Vec<_> = rows.into_iter().map(DatasetRow::into_raw).collect();
    let out = preprocess_corpus(&raw, &flags, &cfg.preprocess, &dict);
    let clean: Vec<DatasetRow> = out.corpus.iter().map(DatasetRow::from).collect();
    dataset::save_dataset(dataset_out, &clean)?;
    dataset::save_removals(report_out, &out.removed)?;
    log::info!("kept {} app(s), removed {}", out.corpus.len(), out.removed.len());
    Ok(out)
}

/// One LDA document per row, keyed by digest.
pub fn documents(rows: Vec<DatasetRow>) -> Vec<Document> {
    rows.into_iter()
        .map(|r| {
            let key = r.id.key().to_owned();
            Document::new(key, r.into_processed().document())
        })
        .collect()
}

const LIKELIHOOD_LOG_EVERY: usize = 100;

/// Fit the topic model on Dataset-2.
pub fn cmd_fit(
    cfg: &PipelineConfig,
    dataset_in: &Path,
    model_out: &Path,
    keys_out: &Path,
    composition_out: &Path,
) -> Result<LdaModel> {
    let rows = dataset::load_dataset(dataset_in)?;
    if rows.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if rows.len() < cfg.lda.n_topics {
        log::warn!("{} document(s) for {} topics", rows.len(), cfg.lda.n_topics);
    }
    let corpus = documents(rows);
    let model = fit_gibbs_observed(&corpus, &cfg.lda, |sweep, state| {
        if sweep == 1 || sweep % LIKELIHOOD_LOG_EVERY == 0 {
            log::debug!("sweep {sweep}: log likelihood {:.3}", state.log_likelihood());
        }
    })?;
    crate::topicmodel::save_model(&model, model_out)?;
    dataset::save_topic_keys(keys_out, &model, cfg.topic_words)?;
    dataset::save_composition(composition_out, &model)?;
    log::info!(
        "fitted {} topics on {} document(s), {} tokens",
        model.n_topics(),
        model.n_docs(),
        model.total_tokens()
    );
    Ok(model)
}

/// Theta for a document: the fitted row if the model saw it, otherwise a
/// fold-in estimate against the fixed topics.
fn theta_for(model: &LdaModel, doc: &Document, cfg: &PipelineConfig) -> Vec<f64> {
    if let Some(row) = model.theta_for(&doc.id) {
        return row.to_vec();
    }
    let inferred = model.infer_theta(&doc.id, &doc.tokens, cfg.infer_iterations, cfg.infer_burn_in);
    if inferred.known_tokens == 0 {
        log::warn!(
            "{}: no token is in the model vocabulary; using the uniform prior",
            doc.id
        );
    }
    inferred.theta
}

/// The label map named by the config; failing that, the majority map over
/// the reference labels; failing that, the stock map.
fn label_map_for(cfg: &PipelineConfig, assignments: &[TopicAssignment]) -> Result<TopicLabelMap> {
    if let Some(path) = &cfg.label_map {
        return dataset::load_label_map(path);
    }
    if let Some(path) = &cfg.reference_labels {
        let reference = dataset::load_reference(path)?;
        return majority_label_map(assignments, &reference);
    }
    Ok(TopicLabelMap::default())
}

/// Classify every app in Dataset-2 with a fitted model.
pub fn cmd_classify(
    cfg: &PipelineConfig,
    model_in: &Path,
    dataset_in: &Path,
    quality: Option<&Path>,
    out: &Path,
) -> Result<Vec<ClassificationResult>> {
    let model = load_model(model_in)?;
    let rows = dataset::load_dataset(dataset_in)?;
    let flags = match quality {
        Some(path) => dataset::load_quality(path)?,
        None => {
            log::warn!("no quality flags given; obfuscation and encryption are treated as absent");
            BTreeMap::new()
        }
    };
    let corpus = documents(rows);
    let thetas: Vec<Vec<f64>> = corpus.par_iter().map(|d| theta_for(&model, d, cfg)).collect();
    let opts = &cfg.classify;
    let assignments: Vec<TopicAssignment> = corpus
        .iter()
        .zip(&thetas)
        .map(|(d, t)| TopicAssignment::from_theta(d.id.clone(), t, opts.min_pct, opts.max_topics))
        .collect();
    let labels = label_map_for(cfg, &assignments)?;
    let clean = TextQualityFlags::clean();
    let results = corpus
        .par_iter()
        .zip(&thetas)
        .map(|(d, theta)| {
            let f = match Sha256::parse(&d.id).ok().and_then(|s| flags.get(&s)) {
                Some(f) => f,
                None => {
                    if quality.is_some() {
                        log::warn!("{}: no quality flags", d.id);
                    }
                    &clean
                }
            };
            classify_app(&d.id, theta, f, &labels, opts)
        })
        .collect::<Result<Vec<_>>>()?;
    dataset::save_classification(out, &results)?;
    let anomalies = results.iter().filter(|r| r.anomaly).count();
    log::info!("classified {} app(s), {anomalies} anomaly candidate(s)", results.len());
    Ok(results)
}

/// Score a classification against reference labels.
pub fn cmd_similarity(
    cfg: &PipelineConfig,
    classification_in: &Path,
    reference_in: &Path,
    out: &Path,
) -> Result<SimilarityReport> {
    let results = dataset::load_classification(classification_in)?;
    let reference = dataset::load_reference(reference_in)?;
    let assignments: Vec<TopicAssignment> = results.into_iter().map(|r| r.assignment).collect();
    let labels = match &cfg.label_map {
        Some(path) => dataset::load_label_map(path)?,
        None => majority_label_map(&assignments, &reference)?,
    };
    let report = most_frequent_match_similarity(&assignments, &reference, &labels)?;
    dataset::save_similarity(out, &report)?;
    match report.average {
        Some(avg) => log::info!("average similarity {avg:.2}% over {} topic(s)", report.per_topic.len()),
        None => log::info!("no topic could be scored"),
    }
    Ok(report)
}

/// Topic-map plot data as pretty-printed JSON.
pub fn cmd_topicmap(cfg: &PipelineConfig, model_in: &Path, out: &Path) -> Result<TopicMap> {
    let model = load_model(model_in)?;
    let map = emit_topic_map(&model, cfg.topic_words)?;
    dataset::write_atomic(out, |w| {
        serde_json::to_writer_pretty(&mut *w, &map)?;
        w.write_all(b"\n")
    })?;
    Ok(map)
}
