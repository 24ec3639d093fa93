//! News records: ingestion, validation, the sampled/unsampled partition and
//! dataset statistics.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: malformed record ({field}): {message}")]
    MalformedRecord {
        line: usize,
        field: String,
        message: String,
    },
    #[error("record {id} (line {line}) is missing field `{field}`")]
    MissingField { id: String, line: usize, field: String },
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("split ratio {0} must lie strictly between 0 and 1")]
    InvalidRatio(f64),
    #[error("need at least 2 records to split, got {0}")]
    TooFewRecords(usize),
    #[error("duplicate record id {0}")]
    DuplicateId(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Origin of a news article.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Source {
    #[serde(rename = "H")]
    Human,
    #[serde(rename = "M")]
    Machine,
    #[serde(rename = "UNKNOWN")]
    Unknown,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Human => "H",
            Source::Machine => "M",
            Source::Unknown => "UNKNOWN",
        })
    }
}

impl FromStr for Source {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "H" => Ok(Source::Human),
            "M" => Ok(Source::Machine),
            "UNKNOWN" => Ok(Source::Unknown),
            other => Err(format!("expected H, M or UNKNOWN, got `{other}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Split {
    #[serde(rename = "TRAIN")]
    Train,
    #[serde(rename = "VAL")]
    Val,
    #[serde(rename = "TEST")]
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "TRAIN",
            Split::Val => "VAL",
            Split::Test => "TEST",
        })
    }
}

impl FromStr for Split {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "TRAIN" => Ok(Split::Train),
            "VAL" | "VALID" | "VALIDATION" => Ok(Split::Val),
            "TEST" => Ok(Split::Test),
            other => Err(format!("expected TRAIN, VAL or TEST, got `{other}`")),
        }
    }
}

/// One news article.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewsRecord {
    pub id: String,
    pub publisher: String,
    pub highlight: String,
    pub content: String,
    pub source: Source,
    pub split: Split,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    /// One JSON object per line.
    Jsonl,
    /// Tab-separated with a header row naming the six fields.
    Tsv,
}

const FIELDS: [&str; 6] = ["id", "publisher", "highlight", "content", "source", "split"];

/// Key marking a metadata line (e.g. the config manifest hash) in JSONL files.
pub const MANIFEST_KEY: &str = "_manifest";

pub fn load_corpus(path: &Path, format: Format) -> Result<Vec<NewsRecord>, CorpusError> {
    let file = fs::File::open(path)?;
    read_corpus(BufReader::new(file), format)
}

pub fn read_corpus<R: BufRead>(reader: R, format: Format) -> Result<Vec<NewsRecord>, CorpusError> {
    let mut records = Vec::new();
    let mut header: Option<Vec<String>> = None;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: HashMap<String, String> = match format {
            Format::Jsonl => match parse_json_line(&line, lineno)? {
                Some(f) => f,
                None => continue,
            },
            Format::Tsv => {
                let cols: Vec<String> = line.split('\t').map(str::to_string).collect();
                match &header {
                    None => {
                        if let Some(missing) = FIELDS.iter().find(|f| !cols.iter().any(|c| c == *f)) {
                            return Err(CorpusError::MalformedRecord {
                                line: lineno,
                                field: (*missing).into(),
                                message: "header is missing this column".into(),
                            });
                        }
                        header = Some(cols);
                        continue;
                    }
                    Some(h) => h.iter().cloned().zip(cols).collect(),
                }
            }
        };
        records.push(record_from_fields(&fields, lineno)?);
    }
    if records.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    Ok(records)
}

fn parse_json_line(line: &str, lineno: usize) -> Result<Option<HashMap<String, String>>, CorpusError> {
    let value: serde_json::Value = serde_json::from_str(line).map_err(|e| CorpusError::MalformedRecord {
        line: lineno,
        field: "<line>".into(),
        message: e.to_string(),
    })?;
    let obj = value.as_object().ok_or_else(|| CorpusError::MalformedRecord {
        line: lineno,
        field: "<line>".into(),
        message: "expected a JSON object".into(),
    })?;
    if obj.contains_key(MANIFEST_KEY) {
        return Ok(None);
    }
    let mut out = HashMap::new();
    for (k, v) in obj {
        let s = match v {
            serde_json::Value::String(s) => s.clone(),
            serde_json::Value::Null => continue,
            other => {
                return Err(CorpusError::MalformedRecord {
                    line: lineno,
                    field: k.clone(),
                    message: format!("expected a string, got {other}"),
                })
            }
        };
        out.insert(k.clone(), s);
    }
    Ok(Some(out))
}

fn record_from_fields(fields: &HashMap<String, String>, line: usize) -> Result<NewsRecord, CorpusError> {
    let id = fields.get("id").cloned().unwrap_or_else(|| format!("<line {line}>"));
    let get = |name: &str| {
        fields.get(name).cloned().ok_or_else(|| CorpusError::MissingField {
            id: id.clone(),
            line,
            field: name.into(),
        })
    };
    let bad = |field: &str, message: String| CorpusError::MalformedRecord {
        line,
        field: field.into(),
        message,
    };
    let _ = get("id")?;
    let content = get("content")?;
    if content.trim().is_empty() {
        return Err(bad("content", format!("record {id} has empty content")));
    }
    Ok(NewsRecord {
        publisher: get("publisher")?,
        highlight: get("highlight")?,
        source: get("source")?.parse().map_err(|m| bad("source", m))?,
        split: get("split")?.parse().map_err(|m| bad("split", m))?,
        content,
        id,
    })
}

/// Writes JSONL, optionally preceded by a manifest metadata line.
pub fn write_corpus<W: Write>(mut out: W, records: &[NewsRecord], manifest_hash: Option<&str>) -> std::io::Result<()> {
    if let Some(hash) = manifest_hash {
        writeln!(out, "{}", serde_json::json!({ MANIFEST_KEY: hash }))?;
    }
    for r in records {
        writeln!(out, "{}", serde_json::to_string(r).expect("record serializes"))?;
    }
    Ok(())
}

pub fn save_corpus(path: &Path, records: &[NewsRecord], manifest_hash: Option<&str>) -> std::io::Result<()> {
    let mut buf = Vec::new();
    write_corpus(&mut buf, records, manifest_hash)?;
    fs::write(path, buf)
}

/// Partition of human TRAIN ids into the generation-prompt group (`sampled`)
/// and the generator-training group (`unsampled`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusSplit {
    pub sampled: BTreeSet<String>,
    pub unsampled: BTreeSet<String>,
    pub seed: u64,
    pub ratio: f64,
}

impl CorpusSplit {
    pub fn select<'a>(&self, records: &'a [NewsRecord], sampled: bool) -> Vec<&'a NewsRecord> {
        let set = if sampled { &self.sampled } else { &self.unsampled };
        records.iter().filter(|r| set.contains(&r.id)).collect()
    }
}

pub fn split_sampled(records: &[NewsRecord], ratio: f64, seed: u64) -> Result<CorpusSplit, CorpusError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(CorpusError::InvalidRatio(ratio));
    }
    if records.len() < 2 {
        return Err(CorpusError::TooFewRecords(records.len()));
    }
    let mut seen = BTreeSet::new();
    for r in records {
        if !seen.insert(r.id.clone()) {
            return Err(CorpusError::DuplicateId(r.id.clone()));
        }
    }
    let n_sampled = (ratio * records.len() as f64).round() as usize;
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.shuffle(&mut rng::stream(seed, &[rng::tag("split_sampled")]));
    let (s, u) = order.split_at(n_sampled);
    Ok(CorpusSplit {
        sampled: s.iter().map(|&i| records[i].id.clone()).collect(),
        unsampled: u.iter().map(|&i| records[i].id.clone()).collect(),
        seed,
        ratio,
    })
}

/// Keeps records of the `k` most frequent publishers; ties go to the
/// lexicographically smaller name.
pub fn filter_top_publishers(records: &[NewsRecord], k: usize) -> Vec<NewsRecord> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for r in records {
        *counts.entry(r.publisher.as_str()).or_default() += 1;
    }
    let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
    // BTreeMap order is lexicographic and sort_by is stable.
    ranked.sort_by(|a, b| b.1.cmp(&a.1));
    let keep: BTreeSet<&str> = ranked.iter().take(k).map(|(p, _)| *p).collect();
    records
        .iter()
        .filter(|r| keep.contains(r.publisher.as_str()))
        .cloned()
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub total: usize,
    pub counts: BTreeMap<String, usize>,
    pub publisher_classes: usize,
    pub avg_content_tokens: f64,
    /// Content plus publisher, highlight and the three control tokens.
    pub avg_prompt_tokens: f64,
}

pub fn compute_stats(records: &[NewsRecord]) -> Result<DatasetStats, CorpusError> {
    if records.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut publishers = BTreeSet::new();
    let (mut content_tokens, mut prompt_tokens) = (0usize, 0usize);
    for r in records {
        *counts.entry(r.split.to_string()).or_default() += 1;
        if !r.publisher.is_empty() {
            publishers.insert(r.publisher.as_str());
        }
        let c = r.content.split_whitespace().count();
        content_tokens += c;
        prompt_tokens += c + 3 + r.publisher.split_whitespace().count() + r.highlight.split_whitespace().count();
    }
    let n = records.len() as f64;
    Ok(DatasetStats {
        total: records.len(),
        counts,
        publisher_classes: publishers.len(),
        avg_content_tokens: content_tokens as f64 / n,
        avg_prompt_tokens: prompt_tokens as f64 / n,
    })
}
