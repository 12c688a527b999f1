//! Raw token extraction from decompiled app directories.
//!
//! Each app lives in its own directory named `<sha256>__<package_id>`.
//! Three sources are scanned: method names in `*.smali` files, element text
//! in `strings.xml` files, and text recognized in image files by an
//! [`OcrAdapter`].

mod identifier;
mod ocr;
mod smali;
mod walk;
mod xml;

use std::fmt;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

pub use identifier::{split_identifier, strip_code_stopwords, StopwordTable};
pub use ocr::{is_image_header, scan_gui_text, OcrAdapter};
pub use smali::{method_identifier, scan_smali_methods};
pub use xml::{element_words, scan_xml_strings};

use crate::{Error, Result};

/// A 64-character lowercase hex digest identifying an apk.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Sha256(String);

impl Sha256 {
    pub fn parse(s: &str) -> Result<Self> {
        if s.len() == 64 && s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f')) {
            Ok(Self(s.to_owned()))
        } else {
            Err(Error::Sha256(s.to_owned()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Sha256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// The identity of one app: digest plus package id.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AppId {
    pub sha256: Sha256,
    pub package_id: String,
}

impl AppId {
    pub fn new(sha256: &str, package_id: &str) -> Result<Self> {
        if package_id.is_empty() || package_id.chars().any(char::is_whitespace) {
            return Err(Error::AppDirName(format!("{sha256}__{package_id}")));
        }
        Ok(Self {
            sha256: Sha256::parse(sha256)?,
            package_id: package_id.to_owned(),
        })
    }

    /// The string used as a document / app key in output files.
    pub fn key(&self) -> &str {
        self.sha256.as_str()
    }
}

/// A decompiled app directory on disk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AppDirRef {
    pub root: PathBuf,
    pub id: AppId,
}

impl AppDirRef {
    /// Parse the `<sha256>__<package_id>` directory name.
    pub fn from_dir(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        let name = root
            .file_name()
            .and_then(|n| n.to_str())
            .ok_or_else(|| Error::AppDirName(root.display().to_string()))?;
        let (sha, package) = name
            .split_once("__")
            .ok_or_else(|| Error::AppDirName(name.to_owned()))?;
        let id = AppId::new(sha, package).map_err(|_| Error::AppDirName(name.to_owned()))?;
        Ok(Self { root, id })
    }
}

/// All app directories directly under `input_root`, sorted by digest.
/// Entries whose names do not parse are skipped with a warning.
pub fn discover_apps(input_root: &Path) -> Result<Vec<AppDirRef>> {
    let entries = std::fs::read_dir(input_root).map_err(|e| Error::io(input_root, e))?;
    let mut apps = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(input_root, e))?;
        if !entry.file_type().map(|t| t.is_dir()).unwrap_or(false) {
            continue;
        }
        match AppDirRef::from_dir(entry.path()) {
            Ok(app) => apps.push(app),
            Err(e) => log::warn!("ignoring {}: {e}", entry.path().display()),
        }
    }
    apps.sort_by(|a, b| a.id.cmp(&b.id));
    if apps.is_empty() {
        return Err(Error::NoApps(input_root.to_path_buf()));
    }
    Ok(apps)
}

/// One app's unprocessed tokens from the three sources.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawAppFeatures {
    pub id: AppId,
    /// Method names as found, before splitting.
    pub method_identifiers: Vec<String>,
    /// Split, lowercased, stopword-filtered method words.
    pub method_words: Vec<String>,
    pub xml_words: Vec<String>,
    pub gui_words: Vec<String>,
    pub smali_file_count: usize,
    pub xml_file_count: usize,
    pub image_file_count: usize,
    /// Files that could not be read or recognized and were skipped.
    pub skipped_files: usize,
}

impl RawAppFeatures {
    /// All words from the three sources, with multiplicity.
    pub fn all_words(&self) -> impl Iterator<Item = &str> {
        self.method_words
            .iter()
            .chain(&self.xml_words)
            .chain(&self.gui_words)
            .map(String::as_str)
    }
}

/// Build a record from the scanner outputs.
pub fn assemble_record(
    id: AppId,
    methods: Vec<String>,
    xml: Vec<String>,
    gui: Vec<String>,
    stopwords: &StopwordTable,
) -> RawAppFeatures {
    let split: Vec<String> = methods.iter().flat_map(|m| split_identifier(m)).collect();
    RawAppFeatures {
        id,
        method_words: strip_code_stopwords(&split, stopwords),
        method_identifiers: methods,
        xml_words: xml.iter().map(|w| w.to_lowercase()).collect(),
        gui_words: gui.iter().map(|w| w.to_lowercase()).collect(),
        smali_file_count: 0,
        xml_file_count: 0,
        image_file_count: 0,
        skipped_files: 0,
    }
}

/// Scan one app directory.
pub fn extract_app(app: &AppDirRef, stopwords: &StopwordTable, ocr: &OcrAdapter) -> Result<RawAppFeatures> {
    let files = walk::files_sorted(&app.root)?;
    let (methods, smali_skipped) = scan_smali_methods(&app.root)?;
    let (xml, xml_skipped) = scan_xml_strings(&app.root)?;
    let (gui, images, gui_failed) = scan_gui_text(&app.root, ocr)?;
    let mut rec = assemble_record(app.id.clone(), methods, xml, gui, stopwords);
    rec.smali_file_count = files
        .iter()
        .filter(|p| p.extension().and_then(|e| e.to_str()) == Some("smali"))
        .count();
    rec.xml_file_count = files
        .iter()
        .filter(|p| p.file_name().and_then(|n| n.to_str()) == Some("strings.xml"))
        .count();
    rec.image_file_count = images;
    rec.skipped_files = smali_skipped + xml_skipped + gui_failed;
    if rec.skipped_files > 0 {
        log::warn!(
            "{}: skipped {} unreadable file(s)",
            app.id.package_id,
            rec.skipped_files
        );
    }
    Ok(rec)
}

/// Scan every app under `input_root` in parallel. Apps that fail to scan are
/// logged and left out. The result is sorted by digest.
pub fn extract_corpus(input_root: &Path, stopwords: &StopwordTable, ocr: &OcrAdapter) -> Result<Vec<RawAppFeatures>> {
    ocr.check()?;
    let apps = discover_apps(input_root)?;
    log::info!("scanning {} app(s) under {}", apps.len(), input_root.display());
    let records: Vec<RawAppFeatures> = apps
        .par_iter()
        .filter_map(|app| match extract_app(app, stopwords, ocr) {
            Ok(rec) => Some(rec),
            Err(e) => {
                log::warn!("skipping app {}: {e}", app.root.display());
                None
            }
        })
        .collect();
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SHA: &str = "0123456789abcdef0123456789abcdef0123456789abcdef0123456789abcdef";

    fn id() -> AppId {
        AppId::new(SHA, "com.example.app").unwrap()
    }

    #[test]
    fn sha_validation() {
        assert!(Sha256::parse(SHA).is_ok());
        assert!(Sha256::parse(&SHA.to_uppercase()).is_err());
        assert!(Sha256::parse(&SHA[1..]).is_err());
        assert!(AppId::new(SHA, "").is_err());
    }

    #[test]
    fn dir_name() {
        let app = AppDirRef::from_dir(format!("/tmp/{SHA}__com.a.b")).unwrap();
        assert_eq!(app.id.package_id, "com.a.b");
        assert!(AppDirRef::from_dir("/tmp/not-an-app").is_err());
        assert!(AppDirRef::from_dir(format!("/tmp/{SHA}__")).is_err());
    }

    #[test]
    fn assemble_on_create_is_all_stopwords() {
        let rec = assemble_record(id(), vec!["onCreate".into()], vec![], vec![], &StopwordTable::default());
        assert!(rec.method_words.is_empty());
        assert_eq!(rec.method_identifiers, vec!["onCreate"]);
    }

    #[test]
    fn assemble_keeps_draw_compass() {
        let rec = assemble_record(
            id(),
            vec!["drawCompass".into()],
            vec!["Find".into(), "Location".into()],
            vec!["Fabs".into()],
            &StopwordTable::default(),
        );
        assert_eq!(rec.method_words, vec!["draw", "compass"]);
        assert_eq!(rec.xml_words, vec!["find", "location"]);
        assert_eq!(rec.gui_words, vec!["fabs"]);
    }

    #[test]
    fn assemble_empty() {
        let rec = assemble_record(id(), vec![], vec![], vec![], &StopwordTable::default());
        assert_eq!(rec.all_words().count(), 0);
    }
}
