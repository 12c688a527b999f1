use crate::textstats::EnglishDictionary;

const IRREGULAR: &[(&str, &str)] = &[
    ("analyses", "analysis"),
    ("children", "child"),
    ("criteria", "criterion"),
    ("feet", "foot"),
    ("geese", "goose"),
    ("halves", "half"),
    ("indices", "index"),
    ("knives", "knife"),
    ("leaves", "leaf"),
    ("lives", "life"),
    ("matrices", "matrix"),
    ("mice", "mouse"),
    ("oxen", "ox"),
    ("people", "person"),
    ("phenomena", "phenomenon"),
    ("selves", "self"),
    ("shelves", "shelf"),
    ("teeth", "tooth"),
    ("vertices", "vertex"),
    ("wives", "wife"),
    ("wolves", "wolf"),
];

/// Plural endings tried in order: sibilant `-es` forms first, then `-ies`,
/// then a bare `-s`.
const PLURAL_RULES: &[(&str, &str)] = &[
    ("sses", "ss"),
    ("shes", "sh"),
    ("ches", "ch"),
    ("xes", "x"),
    ("zes", "z"),
    ("ses", "s"),
    ("ies", "y"),
    ("men", "man"),
    ("s", ""),
];

const MIN_STEM: usize = 3;

/// Dictionary-guided reduction of English inflections.
///
/// A candidate base form is accepted only if the dictionary knows it, so
/// unknown tokens pass through untouched.
pub struct Lemmatizer<'a> {
    dict: &'a EnglishDictionary,
}

impl<'a> Lemmatizer<'a> {
    pub fn new(dict: &'a EnglishDictionary) -> Self {
        Self { dict }
    }

    pub fn lemmatize(&self, token: &str) -> String {
        if let Some((_, base)) = IRREGULAR.iter().find(|(form, _)| *form == token) {
            return (*base).to_owned();
        }
        if let Some(base) = self.plural(token).or_else(|| self.superlative(token)) {
            return base;
        }
        token.to_owned()
    }

    fn known(&self, stem: &str) -> bool {
        stem.chars().count() >= MIN_STEM && self.dict.contains(stem)
    }

    fn plural(&self, token: &str) -> Option<String> {
        if token.ends_with("ss") || token.ends_with("us") || token.ends_with("is") {
            return None;
        }
        PLURAL_RULES.iter().find_map(|(suffix, repl)| {
            let stem = token.strip_suffix(suffix)?;
            let base = format!("{stem}{repl}");
            self.known(&base).then_some(base)
        })
    }

    /// `nearest` → `near`, `latest` → `late`: accepted only when the
    /// comparative form (`nearer`, `later`) is also a known word.
    fn superlative(&self, token: &str) -> Option<String> {
        let stem = token.strip_suffix("est")?;
        if stem.chars().count() < MIN_STEM {
            return None;
        }
        let comparative = format!("{stem}er");
        if !self.dict.contains(&comparative) {
            return None;
        }
        if stem.chars().count() >= 4 && self.dict.contains(stem) {
            return Some(stem.to_owned());
        }
        let with_e = format!("{stem}e");
        self.known(&with_e).then_some(with_e)
    }
}
