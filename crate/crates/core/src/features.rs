//! Tweet corpus to design matrix.
//!
//! Columns, in order: `Constant`, the controls `Followers`, `Length`, `Http`
//! and `Self`, then one binary column per figure topic and per issue topic.
//! Columns that are constant over the corpus are dropped and reported.

use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, Read};
use std::path::Path;
use std::sync::OnceLock;

use chrono::{DateTime, Utc};
use ndarray::{Array2, ShapeBuilder};
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::data::{ColumnScaling, Dataset};
use crate::error::{Error, Result};

pub const INTERCEPT: &str = "Constant";
pub const FOLLOWERS: &str = "Followers";
pub const LENGTH: &str = "Length";
pub const HYPERLINK: &str = "Http";
pub const SELF_REFERENCE: &str = "Self";

const DEFAULT_LEXICON: &str = include_str!("../data/default_lexicon.toml");

/// 127-word English stop-word list (the classic NLTK list).
pub const STOPWORDS: [&str; 127] = [
    "i", "me", "my", "myself", "we", "our", "ours", "ourselves", "you", "your", "yours", "yourself",
    "yourselves", "he", "him", "his", "himself", "she", "her", "hers", "herself", "it", "its", "itself",
    "they", "them", "their", "theirs", "themselves", "what", "which", "who", "whom", "this", "that",
    "these", "those", "am", "is", "are", "was", "were", "be", "been", "being", "have", "has", "had",
    "having", "do", "does", "did", "doing", "a", "an", "the", "and", "but", "if", "or", "because", "as",
    "until", "while", "of", "at", "by", "for", "with", "about", "against", "between", "into", "through",
    "during", "before", "after", "above", "below", "to", "from", "up", "down", "in", "out", "on", "off",
    "over", "under", "again", "further", "then", "once", "here", "there", "when", "where", "why", "how",
    "all", "any", "both", "each", "few", "more", "most", "other", "some", "such", "no", "nor", "not",
    "only", "own", "same", "so", "than", "too", "very", "s", "t", "can", "will", "just", "don", "should",
    "now",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TweetRecord {
    pub id: String,
    pub timestamp: DateTime<Utc>,
    pub text: String,
    pub likes: u64,
    pub author: String,
}

/// Reads line-delimited JSON records; blank lines are skipped.
pub fn read_corpus<R: BufRead>(reader: R, path: &Path) -> Result<Vec<TweetRecord>> {
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: idx + 1,
            message,
        };
        let rec: TweetRecord = serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        if rec.text.is_empty() {
            return Err(parse_err(format!("record {} has empty text", rec.id)));
        }
        records.push(rec);
    }
    Ok(records)
}

/// Follower counts over time, per author.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FollowerSeries {
    series: BTreeMap<String, Vec<(DateTime<Utc>, u64)>>,
}

impl FollowerSeries {
    /// Observations must be strictly increasing in time per author.
    pub fn new(series: BTreeMap<String, Vec<(DateTime<Utc>, u64)>>) -> Result<Self> {
        for (author, obs) in &series {
            if obs.windows(2).any(|w| w[1].0 <= w[0].0) {
                return Err(Error::InvalidInput(format!(
                    "follower series for {author} is not strictly increasing in time"
                )));
            }
        }
        Ok(FollowerSeries { series })
    }

    /// Reads `author,timestamp,count` rows. Rows may come in any order.
    pub fn read_csv<R: Read>(reader: R, path: &Path) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            author: String,
            timestamp: DateTime<Utc>,
            count: u64,
        }
        let mut series: BTreeMap<String, Vec<(DateTime<Utc>, u64)>> = BTreeMap::new();
        let mut r = csv::Reader::from_reader(reader);
        for (idx, row) in r.deserialize::<Row>().enumerate() {
            let row = row.map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: idx + 2,
                message: e.to_string(),
            })?;
            series.entry(row.author).or_default().push((row.timestamp, row.count));
        }
        for obs in series.values_mut() {
            obs.sort_by_key(|o| o.0);
        }
        Self::new(series)
    }

    /// Count at the latest observation no later than `at`.
    pub fn at_or_before(&self, author: &str, at: DateTime<Utc>) -> Option<u64> {
        let obs = self.series.get(author)?;
        let idx = obs.partition_point(|o| o.0 <= at);
        (idx > 0).then(|| obs[idx - 1].1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topic {
    pub name: String,
    pub patterns: Vec<String>,
}

/// On-disk lexicon: topic lists plus an optional handle-to-figure map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexiconConfig {
    pub figures: Vec<Topic>,
    pub issues: Vec<Topic>,
    #[serde(default)]
    pub authors: BTreeMap<String, String>,
    #[serde(default)]
    pub stopwords: Option<Vec<String>>,
}

impl LexiconConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn bundled() -> Self {
        Self::parse(DEFAULT_LEXICON).expect("bundled lexicon parses")
    }
}

/// Keyword rules for one candidate's corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicLexicon {
    figure_topics: Vec<Topic>,
    issue_topics: Vec<Topic>,
    self_name: Vec<String>,
    stopwords: HashSet<String>,
    candidate: Option<String>,
}

impl TopicLexicon {
    /// `candidate` names the figure topic of the corpus author. Its patterns
    /// identify self-references and its own column is always 0.
    pub fn new(
        figure_topics: Vec<Topic>,
        issue_topics: Vec<Topic>,
        candidate: Option<String>,
        stopwords: Option<Vec<String>>,
    ) -> Result<Self> {
        let mut names: HashSet<&str> = [INTERCEPT, FOLLOWERS, LENGTH, HYPERLINK, SELF_REFERENCE].into();
        for t in figure_topics.iter().chain(&issue_topics) {
            if !names.insert(t.name.as_str()) {
                return Err(Error::InvalidInput(format!("duplicate or reserved topic name {:?}", t.name)));
            }
            if t.patterns.is_empty() || t.patterns.iter().any(String::is_empty) {
                return Err(Error::InvalidInput(format!("topic {:?} needs non-empty patterns", t.name)));
            }
        }
        let issue_topics = issue_topics
            .into_iter()
            .map(|t| Topic {
                name: t.name,
                patterns: t.patterns.iter().map(|p| p.to_lowercase()).collect(),
            })
            .collect();
        let self_name = match &candidate {
            Some(c) => figure_topics
                .iter()
                .find(|t| &t.name == c)
                .map(|t| t.patterns.clone())
                .ok_or_else(|| Error::InvalidInput(format!("candidate {c:?} is not a figure topic")))?,
            None => Vec::new(),
        };
        let stopwords = match stopwords {
            Some(words) => words.into_iter().map(|w| w.to_lowercase()).collect(),
            None => STOPWORDS.iter().map(|w| w.to_string()).collect(),
        };
        Ok(TopicLexicon {
            figure_topics,
            issue_topics,
            self_name,
            stopwords,
            candidate,
        })
    }

    /// Builds the lexicon for a corpus author, resolving the candidate
    /// through the config's handle map unless given explicitly.
    pub fn from_config(config: &LexiconConfig, candidate: Option<&str>, author: Option<&str>) -> Result<Self> {
        let candidate = candidate
            .map(str::to_string)
            .or_else(|| author.and_then(|a| config.authors.get(a).cloned()));
        Self::new(config.figures.clone(), config.issues.clone(), candidate, config.stopwords.clone())
    }

    pub fn figure_topics(&self) -> &[Topic] {
        &self.figure_topics
    }

    pub fn issue_topics(&self) -> &[Topic] {
        &self.issue_topics
    }

    pub fn candidate(&self) -> Option<&str> {
        self.candidate.as_deref()
    }

    pub fn is_stopword(&self, token: &str) -> bool {
        self.stopwords.contains(&token.to_lowercase())
    }

    /// Every column the featurizer declares, in output order.
    pub fn declared_columns(&self) -> Vec<String> {
        let mut cols: Vec<String> = [INTERCEPT, FOLLOWERS, LENGTH, HYPERLINK, SELF_REFERENCE]
            .iter()
            .map(|s| s.to_string())
            .collect();
        cols.extend(self.figure_topics.iter().map(|t| t.name.clone()));
        cols.extend(self.issue_topics.iter().map(|t| t.name.clone()));
        cols
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopicLabels {
    pub figures: Vec<u8>,
    pub issues: Vec<u8>,
    pub self_reference: u8,
}

impl TopicLabels {
    pub fn figure(&self, lexicon: &TopicLexicon, name: &str) -> Option<u8> {
        let i = lexicon.figure_topics.iter().position(|t| t.name == name)?;
        Some(self.figures[i])
    }

    pub fn issue(&self, lexicon: &TopicLexicon, name: &str) -> Option<u8> {
        let i = lexicon.issue_topics.iter().position(|t| t.name == name)?;
        Some(self.issues[i])
    }
}

/// Figure topics match case-sensitively on the raw text, issue topics on
/// the lowercased text. The candidate's own figure goes to `self_reference`.
pub fn label_topics(text: &str, lexicon: &TopicLexicon) -> TopicLabels {
    let any_in = |patterns: &[String], haystack: &str| patterns.iter().any(|p| haystack.contains(p.as_str())) as u8;
    let figures = lexicon
        .figure_topics
        .iter()
        .map(|t| {
            if lexicon.candidate.as_deref() == Some(t.name.as_str()) {
                0
            } else {
                any_in(&t.patterns, text)
            }
        })
        .collect();
    let lower = text.to_lowercase();
    let issues = lexicon.issue_topics.iter().map(|t| any_in(&t.patterns, &lower)).collect();
    TopicLabels {
        figures,
        issues,
        self_reference: any_in(&lexicon.self_name, text),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Controls {
    pub followers: f64,
    pub length: usize,
    pub has_link: u8,
    pub self_ref: u8,
}

fn url_pattern() -> &'static Regex {
    static URL: OnceLock<Regex> = OnceLock::new();
    URL.get_or_init(|| Regex::new(r"https?://\S+").expect("valid regex"))
}

/// Tokens after splitting on whitespace and trimming punctuation, minus stop words.
pub fn content_length(text: &str, lexicon: &TopicLexicon) -> usize {
    text.split_whitespace()
        .map(|tok| tok.trim_matches(is_punctuation))
        .filter(|tok| !tok.is_empty() && !lexicon.is_stopword(tok))
        .count()
}

fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation() || matches!(c, '\u{2018}'..='\u{201F}' | '\u{2026}' | '\u{2013}' | '\u{2014}')
}

pub fn has_link(text: &str) -> bool {
    url_pattern().is_match(text)
}

/// Follower count (nearest preceding observation), content length, link flag
/// and self-reference flag of one record.
pub fn control_features(rec: &TweetRecord, series: &FollowerSeries, lexicon: &TopicLexicon) -> Result<Controls> {
    let followers = series
        .at_or_before(&rec.author, rec.timestamp)
        .ok_or_else(|| Error::MissingFollowers {
            id: rec.id.clone(),
            timestamp: rec.timestamp.to_rfc3339(),
        })?;
    Ok(Controls {
        followers: followers as f64,
        length: content_length(&rec.text, lexicon),
        has_link: has_link(&rec.text) as u8,
        self_ref: label_topics(&rec.text, lexicon).self_reference,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingPolicy {
    /// Raw follower counts are divided by this before anything else.
    pub follower_divisor: f64,
    /// Standardize every non-intercept column to mean 0, sd 1.
    pub standardize: bool,
}

impl Default for ScalingPolicy {
    fn default() -> Self {
        ScalingPolicy {
            follower_divisor: 1e7,
            standardize: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub dataset: Dataset,
    /// Full declared schema, in order.
    pub declared: Vec<String>,
    /// Declared columns removed because they were constant.
    pub dropped: Vec<String>,
}

/// Featurizes a single-author corpus.
pub fn build_design(
    records: &[TweetRecord],
    series: &FollowerSeries,
    lexicon: &TopicLexicon,
    policy: &ScalingPolicy,
) -> Result<Design> {
    let first = records.first().ok_or(Error::EmptyCorpus)?;
    if let Some(other) = records.iter().find(|r| r.author != first.author) {
        return Err(Error::MixedAuthors {
            first: first.author.clone(),
            other: other.author.clone(),
        });
    }
    if !(policy.follower_divisor > 0.0) || !policy.follower_divisor.is_finite() {
        return Err(Error::InvalidInput("follower divisor must be positive".into()));
    }

    let declared = lexicon.declared_columns();
    let n = records.len();
    let mut raw = Array2::<f64>::zeros((n, declared.len()).f());
    for (j, rec) in records.iter().enumerate() {
        let controls = control_features(rec, series, lexicon)?;
        let labels = label_topics(&rec.text, lexicon);
        let mut row = vec![
            1.0,
            controls.followers,
            controls.length as f64,
            controls.has_link as f64,
            controls.self_ref as f64,
        ];
        row.extend(labels.figures.iter().chain(&labels.issues).map(|&b| b as f64));
        raw.row_mut(j).assign(&ndarray::Array1::from(row));
    }

    let mut kept = vec![0usize];
    let mut dropped = Vec::new();
    for (c, name) in declared.iter().enumerate().skip(1) {
        let col = raw.column(c);
        if col.iter().all(|v| *v == col[0]) {
            dropped.push(name.clone());
        } else {
            kept.push(c);
        }
    }

    let x = raw.select(ndarray::Axis(1), &kept);
    let names: Vec<String> = kept.iter().map(|&c| declared[c].clone()).collect();
    let mut scaling = vec![ColumnScaling::IDENTITY; kept.len()];
    let mut x = x;
    if let Some(f) = names.iter().position(|n| n == FOLLOWERS) {
        let step = ColumnScaling {
            multiplier: 1.0 / policy.follower_divisor,
            offset: 0.0,
        };
        x.column_mut(f).mapv_inplace(|v| step.apply(v));
        scaling[f] = step;
    }
    let y = records.iter().map(|r| r.likes).collect();
    let mut dataset = Dataset::with_scaling(x, y, names, scaling)?;
    if policy.standardize {
        dataset = dataset.standardized();
    }
    Ok(Design {
        dataset,
        declared,
        dropped,
    })
}
