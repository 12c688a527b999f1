use std::path::Path;

use super::walk::{files_sorted, read_text};
use crate::Result;

/// Method identifiers found in every `*.smali` file under `root`.
///
/// Returns the identifiers and the number of files that could not be read.
pub fn scan_smali_methods(root: &Path) -> Result<(Vec<String>, usize)> {
    let mut methods = Vec::new();
    let mut skipped = 0;
    for path in files_sorted(root)? {
        if path.extension().and_then(|e| e.to_str()) != Some("smali") {
            continue;
        }
        match read_text(&path) {
            Some(text) => methods.extend(text.lines().filter_map(method_identifier)),
            None => skipped += 1,
        }
    }
    Ok((methods, skipped))
}

/// The identifier right before the opening parenthesis of a `.method` line.
pub fn method_identifier(line: &str) -> Option<String> {
    let at = line.find(".method")?;
    let rest = &line[at + ".method".len()..];
    let head = &rest[..rest.find('(')?];
    head.split_whitespace().last().map(str::to_owned)
}
