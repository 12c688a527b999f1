//! Tab-separated file formats shared by the pipeline stages.
//!
//! Every file is UTF-8, one header row, one record per line, fields split by
//! a single tab. Files are written to a temporary sibling and renamed into
//! place, so a failed stage never leaves a partial file behind.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::classify::{AnomalyReason, ClassificationResult, SimilarityReport, TopicLabelMap};
use crate::extract::{AppId, RawAppFeatures, Sha256};
use crate::preprocess::{ProcessedAppFeatures, Removal};
use crate::textstats::TextQualityFlags;
use crate::topicmodel::{top_words, LdaModel, TopicAssignment, TopicId};
use crate::{Error, Result};

/// Written in place of an empty token list.
pub const NULL_FIELD: &str = "Null";

pub const DATASET_HEADER: [&str; 5] = ["sha256", "package_id", "method_names", "xml_values", "gui_text"];
pub const QUALITY_HEADER: [&str; 6] = [
    "sha256",
    "non_english_ratio",
    "encrypted_ratio",
    "obfuscated_methods",
    "obfuscated_xml",
    "encrypted_present",
];
pub const REMOVAL_HEADER: [&str; 3] = ["sha256", "package_id", "reasons"];
pub const LABEL_MAP_HEADER: [&str; 3] = ["topic", "category", "malware"];
pub const REFERENCE_HEADER: [&str; 2] = ["app_id", "category"];
pub const CLASSIFICATION_HEADER: [&str; 13] = [
    "app_id",
    "primary_topic",
    "category",
    "topic_1",
    "pct_1",
    "topic_2",
    "pct_2",
    "topic_3",
    "pct_3",
    "topic_4",
    "pct_4",
    "anomaly",
    "reasons",
];
pub const TOPIC_KEYS_HEADER: [&str; 3] = ["topic", "alpha", "top_words"];
pub const SIMILARITY_HEADER: [&str; 5] = ["topic", "category", "apps", "matched", "similarity"];

/// Contribution columns in the classification file.
pub const MAX_CONTRIBUTIONS: usize = 4;

/// Write through `f` into a temporary file next to `path`, then rename it
/// over `path`.
pub fn write_atomic<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> io::Result<()>,
{
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    {
        let mut w = BufWriter::new(tmp.as_file_mut());
        f(&mut w).and_then(|()| w.flush()).map_err(|e| Error::io(path, e))?;
    }
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| Error::io(path, e))
}

/// Data lines of a table whose header must equal `header`. Each item carries
/// its 1-based line number.
fn read_table<R: Read>(reader: R, path: &Path, header: &[&str]) -> Result<Vec<(usize, Vec<String>)>> {
    let mut rows = Vec::new();
    let mut lines = BufReader::new(reader).lines();
    let first = match lines.next() {
        Some(l) => l.map_err(|e| Error::io(path, e))?,
        None => return Err(Error::parse(path, 1, "missing header row")),
    };
    if first.split('\t').ne(header.iter().copied()) {
        return Err(Error::parse(
            path,
            1,
            format!("expected header {:?}", header.join("\t")),
        ));
    }
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let n = i + 2;
        let fields: Vec<String> = line.split('\t').map(str::to_owned).collect();
        if fields.len() != header.len() {
            return Err(Error::parse(
                path,
                n,
                format!("expected {} columns, found {}", header.len(), fields.len()),
            ));
        }
        rows.push((n, fields));
    }
    Ok(rows)
}

fn write_row<W: Write + ?Sized, S: AsRef<str>>(w: &mut W, fields: &[S]) -> io::Result<()> {
    for (i, f) in fields.iter().enumerate() {
        if i > 0 {
            w.write_all(b"\t")?;
        }
        w.write_all(f.as_ref().as_bytes())?;
    }
    w.write_all(b"\n")
}

fn parse_field<T: std::str::FromStr>(path: &Path, line: usize, name: &str, text: &str) -> Result<T> {
    text.parse()
        .map_err(|_| Error::parse(path, line, format!("bad {name}: {text:?}")))
}

fn parse_topic(path: &Path, line: usize, text: &str) -> Result<TopicId> {
    let digits = text.strip_prefix('T').unwrap_or(text);
    digits
        .parse()
        .ok()
        .and_then(TopicId::from_number)
        .ok_or_else(|| Error::parse(path, line, format!("bad topic {text:?}")))
}

/// One app in the Dataset-1 / Dataset-2 layout: three space-joined token
/// lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetRow {
    pub id: AppId,
    pub methods: Vec<String>,
    pub xml: Vec<String>,
    pub gui: Vec<String>,
}

impl DatasetRow {
    /// A raw record for preprocessing. Identifier-level information is not
    /// stored in the dataset, so `method_identifiers` is empty.
    pub fn into_raw(self) -> RawAppFeatures {
        RawAppFeatures {
            id: self.id,
            method_identifiers: Vec::new(),
            method_words: self.methods,
            xml_words: self.xml,
            gui_words: self.gui,
            smali_file_count: 0,
            xml_file_count: 0,
            image_file_count: 0,
            skipped_files: 0,
        }
    }

    pub fn into_processed(self) -> ProcessedAppFeatures {
        ProcessedAppFeatures {
            id: self.id,
            method_tokens: self.methods,
            xml_tokens: self.xml,
            gui_tokens: self.gui,
        }
    }
}

impl From<&RawAppFeatures> for DatasetRow {
    fn from(r: &RawAppFeatures) -> Self {
        Self {
            id: r.id.clone(),
            methods: r.method_words.clone(),
            xml: r.xml_words.clone(),
            gui: r.gui_words.clone(),
        }
    }
}

impl From<&ProcessedAppFeatures> for DatasetRow {
    fn from(p: &ProcessedAppFeatures) -> Self {
        Self {
            id: p.id.clone(),
            methods: p.method_tokens.clone(),
            xml: p.xml_tokens.clone(),
            gui: p.gui_tokens.clone(),
        }
    }
}

fn join_tokens(tokens: &[String]) -> io::Result<String> {
    if tokens.is_empty() {
        return Ok(NULL_FIELD.to_owned());
    }
    if tokens
        .iter()
        .any(|t| t.is_empty() || t.contains([' ', '\t', '\n', '\r']))
    {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            "token is empty or contains whitespace",
        ));
    }
    Ok(tokens.join(" "))
}

fn split_tokens(path: &Path, line: usize, field: &str) -> Result<Vec<String>> {
    if field == NULL_FIELD {
        return Ok(Vec::new());
    }
    field
        .split(' ')
        .map(|t| {
            if t.is_empty() {
                Err(Error::parse(path, line, "empty token in token list"))
            } else {
                Ok(t.to_owned())
            }
        })
        .collect()
}

pub fn write_dataset<W: Write + ?Sized>(rows: &[DatasetRow], w: &mut W) -> io::Result<()> {
    write_row(w, &DATASET_HEADER)?;
    for r in rows {
        write_row(
            w,
            &[
                r.id.sha256.as_str().to_owned(),
                r.id.package_id.clone(),
                join_tokens(&r.methods)?,
                join_tokens(&r.xml)?,
                join_tokens(&r.gui)?,
            ],
        )?;
    }
    Ok(())
}

pub fn read_dataset<R: Read>(reader: R, path: &Path) -> Result<Vec<DatasetRow>> {
    read_table(reader, path, &DATASET_HEADER)?
        .into_iter()
        .map(|(n, f)| {
            let id = AppId::new(&f[0], &f[1]).map_err(|e| Error::parse(path, n, e.to_string()))?;
            Ok(DatasetRow {
                id,
                methods: split_tokens(path, n, &f[2])?,
                xml: split_tokens(path, n, &f[3])?,
                gui: split_tokens(path, n, &f[4])?,
            })
        })
        .collect()
}

pub fn save_dataset(path: &Path, rows: &[DatasetRow]) -> Result<()> {
    write_atomic(path, |w| write_dataset(rows, w))
}

pub fn load_dataset(path: &Path) -> Result<Vec<DatasetRow>> {
    read_dataset(open(path)?, path)
}

pub fn write_quality<W: Write + ?Sized>(flags: &BTreeMap<Sha256, TextQualityFlags>, w: &mut W) -> io::Result<()> {
    write_row(w, &QUALITY_HEADER)?;
    for (sha, f) in flags {
        write_row(
            w,
            &[
                sha.to_string(),
                f.non_english_ratio.to_string(),
                f.encrypted_ratio.to_string(),
                f.obfuscated_methods.to_string(),
                f.obfuscated_xml.to_string(),
                f.encrypted_present.to_string(),
            ],
        )?;
    }
    Ok(())
}

pub fn read_quality<R: Read>(reader: R, path: &Path) -> Result<BTreeMap<Sha256, TextQualityFlags>> {
    let mut out = BTreeMap::new();
    for (n, f) in read_table(reader, path, &QUALITY_HEADER)? {
        let sha = Sha256::parse(&f[0]).map_err(|e| Error::parse(path, n, e.to_string()))?;
        let flags = TextQualityFlags {
            non_english_ratio: parse_field(path, n, "non_english_ratio", &f[1])?,
            encrypted_ratio: parse_field(path, n, "encrypted_ratio", &f[2])?,
            obfuscated_methods: parse_field(path, n, "obfuscated_methods", &f[3])?,
            obfuscated_xml: parse_field(path, n, "obfuscated_xml", &f[4])?,
            encrypted_present: parse_field(path, n, "encrypted_present", &f[5])?,
        };
        out.insert(sha, flags);
    }
    Ok(out)
}

pub fn save_quality(path: &Path, flags: &BTreeMap<Sha256, TextQualityFlags>) -> Result<()> {
    write_atomic(path, |w| write_quality(flags, w))
}

pub fn load_quality(path: &Path) -> Result<BTreeMap<Sha256, TextQualityFlags>> {
    read_quality(open(path)?, path)
}

/// Removed apps with their reasons, `;`-separated.
pub fn write_removals<W: Write + ?Sized>(removed: &[Removal], w: &mut W) -> io::Result<()> {
    write_row(w, &REMOVAL_HEADER)?;
    for r in removed {
        let reasons: Vec<String> = r.reasons.iter().map(ToString::to_string).collect();
        write_row(
            w,
            &[
                r.id.sha256.as_str(),
                r.id.package_id.as_str(),
                reasons.join(";").as_str(),
            ],
        )?;
    }
    Ok(())
}

pub fn save_removals(path: &Path, removed: &[Removal]) -> Result<()> {
    write_atomic(path, |w| write_removals(removed, w))
}

pub fn write_label_map<W: Write + ?Sized>(map: &TopicLabelMap, w: &mut W) -> io::Result<()> {
    write_row(w, &LABEL_MAP_HEADER)?;
    for (topic, label) in map.iter() {
        write_row(
            w,
            &[topic.to_string(), label.category.clone(), label.malware.to_string()],
        )?;
    }
    Ok(())
}

/// Topics may be written `T12` or `12`.
pub fn read_label_map<R: Read>(reader: R, path: &Path) -> Result<TopicLabelMap> {
    let mut map = TopicLabelMap::new();
    for (n, f) in read_table(reader, path, &LABEL_MAP_HEADER)? {
        let topic = parse_topic(path, n, &f[0])?;
        if map.get(topic).is_some() {
            return Err(Error::parse(path, n, format!("topic {topic} listed twice")));
        }
        let malware = parse_field(path, n, "malware flag", &f[2])?;
        map.insert(topic, f[1].clone(), malware)
            .map_err(|e| Error::parse(path, n, e.to_string()))?;
    }
    Ok(map)
}

pub fn save_label_map(path: &Path, map: &TopicLabelMap) -> Result<()> {
    write_atomic(path, |w| write_label_map(map, w))
}

pub fn load_label_map(path: &Path) -> Result<TopicLabelMap> {
    read_label_map(open(path)?, path)
}

pub fn write_reference<W: Write + ?Sized>(reference: &BTreeMap<String, String>, w: &mut W) -> io::Result<()> {
    write_row(w, &REFERENCE_HEADER)?;
    for (app, category) in reference {
        write_row(w, &[app, category])?;
    }
    Ok(())
}

pub fn read_reference<R: Read>(reader: R, path: &Path) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (n, f) in read_table(reader, path, &REFERENCE_HEADER)? {
        let [app, category] = <[String; 2]>::try_from(f).expect("column count checked");
        if category.is_empty() {
            return Err(Error::parse(path, n, "empty category"));
        }
        if out.insert(app.clone(), category).is_some() {
            return Err(Error::parse(path, n, format!("app {app:?} listed twice")));
        }
    }
    Ok(out)
}

pub fn save_reference(path: &Path, reference: &BTreeMap<String, String>) -> Result<()> {
    write_atomic(path, |w| write_reference(reference, w))
}

pub fn load_reference(path: &Path) -> Result<BTreeMap<String, String>> {
    read_reference(open(path)?, path)
}

/// Percentages are printed with three decimals.
pub fn write_classification<W: Write + ?Sized>(results: &[ClassificationResult], w: &mut W) -> io::Result<()> {
    write_row(w, &CLASSIFICATION_HEADER)?;
    for r in results {
        let mut fields = vec![
            r.app_id.clone(),
            r.assignment
                .primary_topic()
                .map_or_else(|| NULL_FIELD.to_owned(), |t| t.to_string()),
            r.category.clone(),
        ];
        for i in 0..MAX_CONTRIBUTIONS {
            match r.assignment.contributions.get(i) {
                Some((t, pct)) => {
                    fields.push(t.to_string());
                    fields.push(format!("{pct:.3}"));
                }
                None => fields.extend([String::new(), String::new()]),
            }
        }
        fields.push(r.anomaly.to_string());
        let reasons: Vec<&str> = r.anomaly_reasons.iter().map(|x| x.as_str()).collect();
        fields.push(if reasons.is_empty() {
            NULL_FIELD.to_owned()
        } else {
            reasons.join(",")
        });
        write_row(w, &fields)?;
    }
    Ok(())
}

pub fn read_classification<R: Read>(reader: R, path: &Path) -> Result<Vec<ClassificationResult>> {
    read_table(reader, path, &CLASSIFICATION_HEADER)?
        .into_iter()
        .map(|(n, f)| {
            let mut contributions = Vec::new();
            for i in 0..MAX_CONTRIBUTIONS {
                let (t, p) = (&f[3 + 2 * i], &f[4 + 2 * i]);
                if t.is_empty() && p.is_empty() {
                    continue;
                }
                contributions.push((parse_topic(path, n, t)?, parse_field(path, n, "percentage", p)?));
            }
            let assignment = TopicAssignment {
                app_id: f[0].clone(),
                contributions,
            };
            let primary = assignment.primary_topic().map(|t| t.to_string());
            if primary.as_deref().unwrap_or(NULL_FIELD) != f[1] {
                return Err(Error::parse(
                    path,
                    n,
                    "primary topic disagrees with the first contribution",
                ));
            }
            let anomaly_reasons = if f[12] == NULL_FIELD {
                Vec::new()
            } else {
                f[12]
                    .split(',')
                    .map(|s| {
                        AnomalyReason::parse(s)
                            .ok_or_else(|| Error::parse(path, n, format!("unknown anomaly reason {s:?}")))
                    })
                    .collect::<Result<_>>()?
            };
            Ok(ClassificationResult {
                app_id: f[0].clone(),
                assignment,
                category: f[2].clone(),
                anomaly: parse_field(path, n, "anomaly flag", &f[11])?,
                anomaly_reasons,
            })
        })
        .collect()
}

pub fn save_classification(path: &Path, results: &[ClassificationResult]) -> Result<()> {
    write_atomic(path, |w| write_classification(results, w))
}

pub fn load_classification(path: &Path) -> Result<Vec<ClassificationResult>> {
    read_classification(open(path)?, path)
}

/// One row per document: its id, then the percentage of each topic.
pub fn write_composition<W: Write + ?Sized>(model: &LdaModel, w: &mut W) -> io::Result<()> {
    let mut header = vec!["app_id".to_owned()];
    header.extend((0..model.n_topics()).map(|k| TopicId::from_index(k).to_string()));
    write_row(w, &header)?;
    for (d, id) in model.doc_ids.iter().enumerate() {
        let mut line = id.clone();
        for p in model.theta().row(d) {
            write!(line, "\t{:.6}", p * 100.0).expect("writing to a String");
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn read_composition<R: Read>(reader: R, path: &Path) -> Result<Vec<(String, Vec<f64>)>> {
    let mut lines = BufReader::new(reader).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::parse(path, 1, "missing header row"))?
        .map_err(|e| Error::io(path, e))?;
    let k = header.split('\t').count() - 1;
    let expected: Vec<String> = std::iter::once("app_id".to_owned())
        .chain((0..k).map(|i| TopicId::from_index(i).to_string()))
        .collect();
    if header.split('\t').ne(expected.iter().map(String::as_str)) || k == 0 {
        return Err(Error::parse(path, 1, "expected header app_id, T1, ..., TK"));
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let n = i + 2;
        let mut fields = line.split('\t');
        let id = fields.next().unwrap_or_default().to_owned();
        let pcts: Vec<f64> = fields
            .map(|x| parse_field(path, n, "percentage", x))
            .collect::<Result<_>>()?;
        if pcts.len() != k {
            return Err(Error::parse(
                path,
                n,
                format!("expected {k} percentages, found {}", pcts.len()),
            ));
        }
        out.push((id, pcts));
    }
    Ok(out)
}

pub fn save_composition(path: &Path, model: &LdaModel) -> Result<()> {
    write_atomic(path, |w| write_composition(model, w))
}

pub const TOPIC_KEY_WORDS: usize = 20;

/// One row per topic: id, its Dirichlet parameter and its top words.
pub fn write_topic_keys<W: Write + ?Sized>(model: &LdaModel, n_words: usize, w: &mut W) -> io::Result<()> {
    write_row(w, &TOPIC_KEYS_HEADER)?;
    for k in 0..model.n_topics() {
        let topic = TopicId::from_index(k);
        let words = top_words(model, topic, n_words).map_err(io::Error::other)?;
        let words: Vec<&str> = words.iter().map(|(w, _)| w.as_str()).collect();
        write_row(w, &[topic.to_string(), model.config.alpha.to_string(), words.join(" ")])?;
    }
    Ok(())
}

pub fn save_topic_keys(path: &Path, model: &LdaModel, n_words: usize) -> Result<()> {
    write_atomic(path, |w| write_topic_keys(model, n_words, w))
}

/// Per-topic similarity with two decimals, `NA` for unscored topics, and a
/// closing `average` row.
pub fn write_similarity<W: Write + ?Sized>(report: &SimilarityReport, w: &mut W) -> io::Result<()> {
    write_row(w, &SIMILARITY_HEADER)?;
    let pct = |p: Option<f64>| p.map_or_else(|| "NA".to_owned(), |p| format!("{p:.2}"));
    for (topic, s) in &report.per_topic {
        write_row(
            w,
            &[
                topic.to_string(),
                s.category.clone(),
                s.apps.to_string(),
                s.matched.to_string(),
                pct(s.percent),
            ],
        )?;
    }
    let apps: usize = report.per_topic.values().map(|s| s.apps).sum();
    let matched: usize = report.per_topic.values().map(|s| s.matched).sum();
    write_row(
        w,
        &[
            "average".to_owned(),
            String::new(),
            apps.to_string(),
            matched.to_string(),
            pct(report.average),
        ],
    )
}

pub fn save_similarity(path: &Path, report: &SimilarityReport) -> Result<()> {
    write_atomic(path, |w| write_similarity(report, w))
}
