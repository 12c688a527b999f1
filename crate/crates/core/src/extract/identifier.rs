use std::collections::BTreeSet;

/// Identifiers and UI boilerplate that carry no signal about what an app does.
/// Matching is case-insensitive; the entries are stored lowercased.
const DEFAULT_STOPWORDS: &[&str] = &[
    "$",
    "_",
    "-",
    "<clinit>",
    "<init>",
    "abstract",
    "assert",
    "boolean",
    "break",
    "bridge",
    "byte",
    "case",
    "catch",
    "char",
    "class",
    "const",
    "constructor",
    "continue",
    "create",
    "declared",
    "default",
    "do",
    "double",
    "else",
    "enum",
    "execute",
    "extends",
    "false",
    "final",
    "finally",
    "float",
    "for",
    "get",
    "goto",
    "has",
    "if",
    "implements",
    "import",
    "instanceof",
    "int",
    "interface",
    "iterator",
    "long",
    "native",
    "new",
    "next",
    "null",
    "on",
    "package",
    "private",
    "protected",
    "public",
    "return",
    "run",
    "set",
    "short",
    "static",
    "super",
    "switch",
    "synchronized",
    "synthetic",
    "this",
    "throw",
    "throws",
    "to",
    "transient",
    "true",
    "try",
    "value",
    "void",
    "volatile",
    "while",
    "All",
    "Button",
    "Click",
    "Down",
    "Drawable",
    "Drop",
    "From",
    "Icon",
    "Item",
    "Layout",
    "Menu",
    "Next",
    "String",
    "Title",
    "To",
    "Value",
    "View",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StopwordTable {
    entries: BTreeSet<String>,
}

impl Default for StopwordTable {
    fn default() -> Self {
        Self {
            entries: DEFAULT_STOPWORDS.iter().map(|w| w.to_lowercase()).collect(),
        }
    }
}

impl StopwordTable {
    /// Default table plus `extra` entries (blank entries are ignored).
    pub fn with_extensions<I, S>(extra: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut table = Self::default();
        table.entries.extend(
            extra
                .into_iter()
                .map(|w| w.as_ref().trim().to_lowercase())
                .filter(|w| !w.is_empty()),
        );
        table
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains(&word.to_lowercase())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(String::as_str)
    }
}

/// Split a method identifier into lowercase words.
///
/// Underscores are deleted first, so `snake_case` becomes the single word
/// `snakecase`. The remaining text is cut wherever a lowercase letter or
/// digit is followed by an uppercase letter; digits stay with the segment
/// they follow.
pub fn split_identifier(identifier: &str) -> Vec<String> {
    let mut words = Vec::new();
    let mut current = String::new();
    let mut prev_lower_or_digit = false;
    for c in identifier.chars().filter(|&c| c != '_') {
        if c.is_uppercase() && prev_lower_or_digit && !current.is_empty() {
            words.push(std::mem::take(&mut current).to_lowercase());
        }
        prev_lower_or_digit = c.is_lowercase() || c.is_ascii_digit();
        current.push(c);
    }
    if !current.is_empty() {
        words.push(current.to_lowercase());
    }
    words
}

/// Drop stopwords and single-character words, keeping survivor order.
pub fn strip_code_stopwords(words: &[String], table: &StopwordTable) -> Vec<String> {
    words
        .iter()
        .filter(|w| w.chars().count() > 1 && !table.contains(w))
        .cloned()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn strings(words: &[&str]) -> Vec<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn camel_case() {
        assert_eq!(split_identifier("getBirthData"), strings(&["get", "birth", "data"]));
        assert_eq!(
            split_identifier("createParcelArray"),
            strings(&["create", "parcel", "array"])
        );
    }

    #[test]
    fn snake_case_merges() {
        assert_eq!(split_identifier("snake_case"), strings(&["snakecase"]));
    }

    #[test]
    fn digits_and_upper_runs() {
        assert_eq!(split_identifier("get2Data"), strings(&["get2", "data"]));
        assert_eq!(split_identifier("parseURLString"), strings(&["parse", "urlstring"]));
        assert_eq!(split_identifier("<clinit>"), strings(&["<clinit>"]));
        assert!(split_identifier("").is_empty());
        assert!(split_identifier("___").is_empty());
    }

    #[test]
    fn stopwords_removed() {
        let table = StopwordTable::default();
        assert_eq!(
            strip_code_stopwords(&strings(&["get", "birth", "data"]), &table),
            strings(&["birth", "data"])
        );
        assert_eq!(
            strip_code_stopwords(&strings(&["create", "parcel", "array"]), &table),
            strings(&["parcel", "array"])
        );
        assert!(strip_code_stopwords(&strings(&["a", "b"]), &table).is_empty());
        assert!(strip_code_stopwords(&strings(&["<clinit>"]), &table).is_empty());
    }

    #[test]
    fn table_is_case_insensitive() {
        let table = StopwordTable::default();
        assert!(table.contains("button"));
        assert!(table.contains("Create"));
        assert!(table.contains("VIEW"));
        assert!(!table.contains("draw"));
        // duplicates in the source list ("to"/"To", "value"/"Value", "next"/"Next") collapse
        assert_eq!(table.len(), DEFAULT_STOPWORDS.len() - 3);
    }

    #[test]
    fn extensions() {
        let table = StopwordTable::with_extensions(["Activity", " ", "fragment"]);
        assert!(table.contains("activity"));
        assert!(table.contains("FRAGMENT"));
        assert!(!table.contains(""));
    }

    proptest! {
        #[test]
        fn split_rejoins_to_input(id in "[A-Za-z0-9_]{0,24}") {
            let joined: String = split_identifier(&id).concat();
            prop_assert_eq!(joined, id.replace('_', "").to_lowercase());
        }

        #[test]
        fn strip_is_idempotent(words in proptest::collection::vec("[a-zA-Z]{1,8}", 0..20)) {
            let table = StopwordTable::default();
            let words: Vec<String> = words.into_iter().map(|w| w.to_lowercase()).collect();
            let once = strip_code_stopwords(&words, &table);
            let twice = strip_code_stopwords(&once, &table);
            prop_assert!(once.iter().all(|w| words.contains(w)));
            prop_assert_eq!(once, twice);
        }
    }
}
