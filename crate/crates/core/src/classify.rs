//! Topic labels, similarity against a reference labeling, and the anomaly
//! heuristic.

use std::collections::BTreeMap;
use std::fmt;

use crate::textstats::TextQualityFlags;
use crate::topicmodel::{TopicAssignment, TopicId};
use crate::{Error, Result};

/// Category of topics that gather apps without a clear theme. Such topics
/// carry no similarity score.
pub const NON_MATCH: &str = "Non-Match";

/// Category names of the stock 31-topic model, topic 1 first.
pub const DEFAULT_CATEGORIES: [&str; 31] = [
    "Personalization",
    "Cards",
    "Education",
    "Libraries_and_Demo",
    "Lifestyle",
    "Tools",
    "Medical",
    "Music_and_Audio",
    "Sports",
    "Arcade",
    "Transportation",
    "Business",
    NON_MATCH,
    "Communication",
    "Casual",
    "Brain",
    "Health_and_Fitness",
    "Finance",
    "Productivity",
    "Books_and_Reference",
    "Racing",
    "Photography",
    "Entertainment",
    "Media_and_Video",
    "Comics",
    "Weather",
    "Travel_and_Local",
    "Sports_Games",
    "News_and_Magazines",
    "Shopping",
    "Social",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopicLabel {
    pub category: String,
    pub malware: bool,
}

/// Topic to category. The [`Default`] map labels the stock 31 topics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopicLabelMap {
    entries: BTreeMap<TopicId, TopicLabel>,
}

impl TopicLabelMap {
    /// An empty map.
    pub fn new() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, topic: TopicId, category: impl Into<String>, malware: bool) -> Result<()> {
        let category = category.into();
        if category.trim().is_empty() {
            return Err(Error::Config(format!("empty category for topic {topic}")));
        }
        self.entries.insert(topic, TopicLabel { category, malware });
        Ok(())
    }

    pub fn get(&self, topic: TopicId) -> Option<&TopicLabel> {
        self.entries.get(&topic)
    }

    pub fn category(&self, topic: TopicId) -> Option<&str> {
        self.get(topic).map(|l| l.category.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (TopicId, &TopicLabel)> {
        self.entries.iter().map(|(&t, l)| (t, l))
    }

    /// True when topics `1..=k` are all labeled and nothing else is.
    pub fn covers(&self, k: usize) -> bool {
        self.entries.len() == k && self.entries.keys().all(|t| t.index() < k)
    }
}

impl Default for TopicLabelMap {
    fn default() -> Self {
        let mut map = Self::new();
        for (i, name) in DEFAULT_CATEGORIES.iter().enumerate() {
            map.entries.insert(
                TopicId::from_index(i),
                TopicLabel {
                    category: (*name).to_owned(),
                    malware: false,
                },
            );
        }
        map
    }
}

/// Category of the assignment's primary topic.
pub fn assign_category<'m>(assignment: &TopicAssignment, labels: &'m TopicLabelMap) -> Result<&'m str> {
    let primary = assignment
        .primary_topic()
        .ok_or_else(|| Error::EmptyAssignment(assignment.app_id.clone()))?;
    labels.category(primary).ok_or(Error::UnlabeledTopic(primary.number()))
}

fn reference_for<'r>(reference: &'r BTreeMap<String, String>, app: &str) -> Result<&'r str> {
    reference
        .get(app)
        .map(String::as_str)
        .ok_or_else(|| Error::MissingReference(app.to_owned()))
}

/// Reference categories of each topic's apps, grouped by primary topic.
/// Apps without any contribution belong to no topic.
fn tally<'r>(
    assignments: &[TopicAssignment],
    reference: &'r BTreeMap<String, String>,
) -> Result<BTreeMap<TopicId, BTreeMap<&'r str, usize>>> {
    let mut out: BTreeMap<TopicId, BTreeMap<&str, usize>> = BTreeMap::new();
    for a in assignments {
        let Some(topic) = a.primary_topic() else { continue };
        let category = reference_for(reference, &a.app_id)?;
        *out.entry(topic).or_default().entry(category).or_default() += 1;
    }
    Ok(out)
}

/// Label each topic with the most common reference category among the apps
/// whose primary topic it is. Ties go to the alphabetically first category;
/// topics without apps stay unlabeled.
pub fn majority_label_map(
    assignments: &[TopicAssignment],
    reference: &BTreeMap<String, String>,
) -> Result<TopicLabelMap> {
    let mut map = TopicLabelMap::new();
    for (topic, counts) in tally(assignments, reference)? {
        let mut best: Option<(&str, usize)> = None;
        for (&category, &n) in &counts {
            if best.is_none_or(|(_, m)| n > m) {
                best = Some((category, n));
            }
        }
        if let Some((category, _)) = best {
            map.insert(topic, category, false)?;
        }
    }
    Ok(map)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicSimilarity {
    pub category: String,
    pub apps: usize,
    pub matched: usize,
    /// `None` for the non-match category.
    pub percent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityReport {
    pub per_topic: BTreeMap<TopicId, TopicSimilarity>,
    /// Unweighted mean of the scored topics; `None` when nothing was scored.
    pub average: Option<f64>,
}

/// Per topic, the percentage of its apps whose reference category equals
/// the topic's label.
pub fn most_frequent_match_similarity(
    assignments: &[TopicAssignment],
    reference: &BTreeMap<String, String>,
    labels: &TopicLabelMap,
) -> Result<SimilarityReport> {
    let mut per_topic = BTreeMap::new();
    for (topic, counts) in tally(assignments, reference)? {
        let category = labels.category(topic).ok_or(Error::UnlabeledTopic(topic.number()))?;
        let apps: usize = counts.values().sum();
        let matched = counts.get(category).copied().unwrap_or(0);
        let percent = (category != NON_MATCH).then(|| 100.0 * matched as f64 / apps as f64);
        per_topic.insert(
            topic,
            TopicSimilarity {
                category: category.to_owned(),
                apps,
                matched,
                percent,
            },
        );
    }
    let scored: Vec<f64> = per_topic.values().filter_map(|s| s.percent).collect();
    let average = (!scored.is_empty()).then(|| scored.iter().sum::<f64>() / scored.len() as f64);
    Ok(SimilarityReport { per_topic, average })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AnomalyReason {
    Obfuscated,
    Encrypted,
    TopicSpread,
}

impl AnomalyReason {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Obfuscated => "obfuscated",
            Self::Encrypted => "encrypted",
            Self::TopicSpread => "topic-spread",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "obfuscated" => Some(Self::Obfuscated),
            "encrypted" => Some(Self::Encrypted),
            "topic-spread" => Some(Self::TopicSpread),
            _ => None,
        }
    }
}

impl fmt::Display for AnomalyReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnomalyThresholds {
    /// Percent of theta mass a topic needs to count toward the spread.
    pub spread_pct: f64,
    pub min_topics: usize,
}

impl Default for AnomalyThresholds {
    fn default() -> Self {
        Self {
            spread_pct: 8.0,
            min_topics: 2,
        }
    }
}

const THETA_SUM_TOLERANCE: f64 = 1e-6;

/// Collect every anomaly reason that applies. The app is an anomaly
/// candidate only when all three do.
pub fn flag_anomaly(
    flags: &TextQualityFlags,
    theta_row: &[f64],
    th: &AnomalyThresholds,
) -> Result<(bool, Vec<AnomalyReason>)> {
    let sum: f64 = theta_row.iter().sum();
    if (sum - 1.0).abs() > THETA_SUM_TOLERANCE {
        return Err(Error::NotNormalized(sum));
    }
    let mut reasons = Vec::new();
    if flags.obfuscated() {
        reasons.push(AnomalyReason::Obfuscated);
    }
    if flags.encrypted_present {
        reasons.push(AnomalyReason::Encrypted);
    }
    let spread = theta_row.iter().filter(|&&p| p * 100.0 >= th.spread_pct).count();
    if spread >= th.min_topics {
        reasons.push(AnomalyReason::TopicSpread);
    }
    Ok((reasons.len() == 3, reasons))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyOptions {
    pub min_pct: f64,
    pub max_topics: usize,
    pub anomaly: AnomalyThresholds,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            min_pct: 1.0,
            max_topics: 4,
            anomaly: AnomalyThresholds::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationResult {
    pub app_id: String,
    pub assignment: TopicAssignment,
    pub category: String,
    pub anomaly: bool,
    pub anomaly_reasons: Vec<AnomalyReason>,
}

pub fn classify_app(
    app_id: &str,
    theta_row: &[f64],
    flags: &TextQualityFlags,
    labels: &TopicLabelMap,
    opts: &ClassifyOptions,
) -> Result<ClassificationResult> {
    let assignment = TopicAssignment::from_theta(app_id, theta_row, opts.min_pct, opts.max_topics);
    let category = assign_category(&assignment, labels)?.to_owned();
    let (anomaly, anomaly_reasons) = flag_anomaly(flags, theta_row, &opts.anomaly)?;
    Ok(ClassificationResult {
        app_id: app_id.to_owned(),
        assignment,
        category,
        anomaly,
        anomaly_reasons,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn assigned(app: &str, topic: usize) -> TopicAssignment {
        TopicAssignment {
            app_id: app.into(),
            contributions: vec![(TopicId::from_number(topic).unwrap(), 100.0)],
        }
    }

    fn refs(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(a, c)| (a.to_string(), c.to_string())).collect()
    }

    fn t(n: usize) -> TopicId {
        TopicId::from_number(n).unwrap()
    }

    #[test]
    fn default_map_names() {
        let map = TopicLabelMap::default();
        assert!(map.covers(31));
        assert_eq!(map.category(t(1)), Some("Personalization"));
        assert_eq!(map.category(t(13)), Some(NON_MATCH));
        assert_eq!(map.category(t(26)), Some("Weather"));
        assert!(map.iter().all(|(_, l)| !l.malware));
    }

    #[test]
    fn weather_topic_under_default_map() {
        let a = assigned("x", 26);
        assert_eq!(assign_category(&a, &TopicLabelMap::default()).unwrap(), "Weather");
    }

    #[test]
    fn empty_assignment_is_an_error() {
        let a = TopicAssignment {
            app_id: "x".into(),
            contributions: vec![],
        };
        assert!(matches!(
            assign_category(&a, &TopicLabelMap::default()),
            Err(Error::EmptyAssignment(_))
        ));
    }

    #[test]
    fn majority_and_ties() {
        let a = [
            assigned("a", 1),
            assigned("b", 1),
            assigned("c", 1),
            assigned("d", 2),
            assigned("e", 2),
        ];
        let r = refs(&[
            ("a", "Weather"),
            ("b", "Sports"),
            ("c", "Weather"),
            ("d", "Weather"),
            ("e", "Sports"),
        ]);
        let map = majority_label_map(&a, &r).unwrap();
        assert_eq!(map.category(t(1)), Some("Weather"));
        assert_eq!(map.category(t(2)), Some("Sports"));
        assert_eq!(map.category(t(3)), None);
    }

    #[test]
    fn missing_reference_names_the_app() {
        let err = majority_label_map(&[assigned("ghost", 1)], &BTreeMap::new()).unwrap_err();
        assert!(matches!(err, Error::MissingReference(app) if app == "ghost"));
    }

    #[test]
    fn non_match_topics_are_not_averaged() {
        let a = [assigned("a", 13), assigned("b", 26), assigned("c", 26)];
        let r = refs(&[("a", "Tools"), ("b", "Weather"), ("c", "Sports")]);
        let rep = most_frequent_match_similarity(&a, &r, &TopicLabelMap::default()).unwrap();
        assert_eq!(rep.per_topic[&t(13)].percent, None);
        assert_eq!(rep.per_topic[&t(26)].percent, Some(50.0));
        assert_eq!(rep.average, Some(50.0));
    }

    #[test]
    fn spread_needs_two_topics() {
        let bad = TextQualityFlags {
            obfuscated_xml: true,
            encrypted_present: true,
            ..TextQualityFlags::clean()
        };
        let th = AnomalyThresholds::default();
        let (hit, reasons) = flag_anomaly(&bad, &[0.9, 0.1], &th).unwrap();
        assert!(hit);
        assert_eq!(reasons.len(), 3);
        let (hit, reasons) = flag_anomaly(&bad, &[0.95, 0.05], &th).unwrap();
        assert!(!hit);
        assert_eq!(reasons, vec![AnomalyReason::Obfuscated, AnomalyReason::Encrypted]);
        assert!(flag_anomaly(&bad, &[0.5, 0.4], &th).is_err());
    }

    fn theta_strategy() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.01f64..1.0, 2..12).prop_map(|v| {
            let s: f64 = v.iter().sum();
            v.into_iter().map(|x| x / s).collect()
        })
    }

    proptest! {
        #[test]
        fn adding_a_reason_never_clears_the_flag(
            theta in theta_strategy(),
            m in any::<bool>(), x in any::<bool>(), e in any::<bool>(),
        ) {
            let th = AnomalyThresholds::default();
            let base = TextQualityFlags { obfuscated_methods: m, obfuscated_xml: x, encrypted_present: e, ..TextQualityFlags::clean() };
            let (before, _) = flag_anomaly(&base, &theta, &th).unwrap();
            for more in [
                TextQualityFlags { obfuscated_methods: true, ..base.clone() },
                TextQualityFlags { obfuscated_xml: true, ..base.clone() },
                TextQualityFlags { encrypted_present: true, ..base.clone() },
            ] {
                let (after, _) = flag_anomaly(&more, &theta, &th).unwrap();
                prop_assert!(!before || after);
            }
        }

        #[test]
        fn category_follows_argmax_only(theta in theta_strategy(), scale in 0.1f64..10.0) {
            let map = TopicLabelMap::default();
            let a = TopicAssignment::from_theta("x", &theta, 0.0, 4);
            let scaled: Vec<f64> = theta.iter().map(|p| p * scale).collect();
            let b = TopicAssignment::from_theta("x", &scaled, 0.0, 4);
            prop_assert_eq!(assign_category(&a, &map).unwrap(), assign_category(&b, &map).unwrap());
        }

        #[test]
        fn similarity_ignores_app_order(
            apps in prop::collection::vec((1usize..5, 0usize..3), 1..40),
            seed in any::<u64>(),
        ) {
            let cats = ["Alpha", "Beta", "Gamma"];
            let mut assignments: Vec<_> = apps.iter().enumerate().map(|(i, &(topic, _))| assigned(&i.to_string(), topic)).collect();
            let reference: BTreeMap<_, _> = apps.iter().enumerate().map(|(i, &(_, c))| (i.to_string(), cats[c].to_string())).collect();
            let map = majority_label_map(&assignments, &reference).unwrap();
            let before = most_frequent_match_similarity(&assignments, &reference, &map).unwrap();
            let n = assignments.len();
            for i in 0..n {
                let j = (seed as usize).wrapping_add(i * 7) % n;
                assignments.swap(i, j);
            }
            let after = most_frequent_match_similarity(&assignments, &reference, &map).unwrap();
            prop_assert_eq!(before, after);
        }
    }
}
