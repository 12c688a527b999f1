use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;

use super::walk::{files_sorted, read_text};
use crate::Result;

static ELEMENT_TEXT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r">([^>]*)</").unwrap());

/// Words captured from element text in every `strings.xml` under `root`.
///
/// Extraction is a regex over the raw file, so malformed XML is fine.
/// Single-character words are dropped. Returns the words and the number of
/// `strings.xml` files that could not be read.
pub fn scan_xml_strings(root: &Path) -> Result<(Vec<String>, usize)> {
    let mut words = Vec::new();
    let mut skipped = 0;
    for path in files_sorted(root)? {
        if path.file_name().and_then(|n| n.to_str()) != Some("strings.xml") {
            continue;
        }
        match read_text(&path) {
            Some(text) => words.extend(element_words(&text)),
            None => skipped += 1,
        }
    }
    Ok((words, skipped))
}

pub fn element_words(text: &str) -> Vec<String> {
    ELEMENT_TEXT
        .captures_iter(text)
        .flat_map(|cap| {
            cap.get(1)
                .map(|m| m.as_str())
                .unwrap_or_default()
                .split_whitespace()
                .filter(|w| w.chars().count() > 1)
                .map(str::to_owned)
                .collect::<Vec<_>>()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn string_values() {
        assert_eq!(
            element_words(r#"<string name="x">Find your location</string>"#),
            vec!["Find", "your", "location"]
        );
        assert!(element_words(r#"<string name="y">I m</string>"#).is_empty());
        assert!(element_words("<resources/>").is_empty());
    }

    #[test]
    fn whole_resource_file() {
        let text = "<?xml version=\"1.0\" encoding=\"utf-8\"?>\n<resources>\n    \
                    <string name=\"a\">Settings</string>\n    \
                    <string name=\"b\">Restaurants&amp;Pubs</string>\n\
                    <string-array name=\"c\"><item>Metric</item><item>Imperial units</item></string-array>\n\
                    </resources>\n";
        assert_eq!(
            element_words(text),
            vec!["Settings", "Restaurants&amp;Pubs", "Metric", "Imperial", "units"]
        );
    }
}
