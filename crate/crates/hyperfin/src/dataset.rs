//! Term records and the closed set of ten hypernym classes.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of hypernym classes. Fixed by the task definition.
pub const CLASS_COUNT: usize = 10;

/// Canonical class names, in index order.
const CLASS_NAMES: [&str; CLASS_COUNT] = [
    "Equity Index",
    "Credit Index",
    "Bonds",
    "Swap",
    "Option",
    "Funds",
    "Future",
    "MMIs",
    "Stocks",
    "Forward",
];

/// One of the ten hypernym classes. The index↔name bijection is fixed:
/// `Equity Index` is 0 and `Forward` is 9.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClassLabel(u8);

impl ClassLabel {
    pub fn from_index(index: usize) -> Option<ClassLabel> {
        (index < CLASS_COUNT).then(|| ClassLabel(index as u8))
    }

    /// Case-insensitive exact match against the canonical names.
    pub fn from_name(name: &str) -> Option<ClassLabel> {
        let needle = name.trim();
        CLASS_NAMES
            .iter()
            .position(|n| n.eq_ignore_ascii_case(needle))
            .map(|i| ClassLabel(i as u8))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn canonical_name(self) -> &'static str {
        CLASS_NAMES[self.index()]
    }

    pub fn all() -> impl Iterator<Item = ClassLabel> {
        (0..CLASS_COUNT).map(|i| ClassLabel(i as u8))
    }
}

impl std::fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.canonical_name())
    }
}

impl std::fmt::Debug for ClassLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}({})", self.canonical_name(), self.0)
    }
}

/// A hyponym label, optionally paired with its gold class.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermRecord {
    pub term: String,
    pub gold: Option<ClassLabel>,
}

/// Ordered term records plus per-class gold counts.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    records: Vec<TermRecord>,
    label_counts: [usize; CLASS_COUNT],
}

/// Supported dataset file formats.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    /// Pick a format from the file extension; JSON when unknown.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Json,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct RawRecord {
    term: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
}

impl Dataset {
    pub fn from_records(records: Vec<TermRecord>) -> Result<Dataset> {
        let mut label_counts = [0usize; CLASS_COUNT];
        for (i, r) in records.iter().enumerate() {
            if r.term.trim().is_empty() {
                return Err(Error::Validation(format!("record {i} has an empty term")));
            }
            if let Some(gold) = r.gold {
                label_counts[gold.index()] += 1;
            }
        }
        Ok(Dataset {
            records,
            label_counts,
        })
    }

    pub fn load(path: &Path, format: Format) -> Result<Dataset> {
        match format {
            Format::Json => Dataset::load_json(path),
            Format::Csv => Dataset::load_csv(path),
        }
    }

    /// Load a JSON array of `{"term": ..., "label": ...}` objects; `label`
    /// may be absent or null for prediction-only records.
    pub fn load_json(path: &Path) -> Result<Dataset> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let raw: Vec<RawRecord> = serde_json::from_reader(BufReader::new(file))
            .map_err(|e| Error::parse(path, e.line(), e.to_string()))?;
        let records = raw
            .into_iter()
            .map(|r| convert_record(r))
            .collect::<Result<Vec<_>>>()?;
        Dataset::from_records(records)
    }

    /// Load a two-column CSV with a `term,label` header. An empty label
    /// cell yields a prediction-only record.
    pub fn load_csv(path: &Path) -> Result<Dataset> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(BufReader::new(file));
        let headers = reader
            .headers()
            .map_err(|e| Error::parse(path, 1, e.to_string()))?;
        if headers.len() < 2 || &headers[0] != "term" || &headers[1] != "label" {
            return Err(Error::parse(path, 1, "expected header `term,label`"));
        }
        let mut records = Vec::new();
        for (i, row) in reader.records().enumerate() {
            let row = row.map_err(|e| Error::parse(path, i + 2, e.to_string()))?;
            if row.len() < 2 {
                return Err(Error::parse(path, i + 2, "expected 2 columns"));
            }
            let label = row[1].trim();
            records.push(convert_record(RawRecord {
                term: row[0].to_string(),
                label: (!label.is_empty()).then(|| label.to_string()),
            })?);
        }
        Dataset::from_records(records)
    }

    /// Serialize back to the JSON input format. Reloading the written file
    /// yields an identical record list.
    pub fn save_json(&self, path: &Path) -> Result<()> {
        let raw: Vec<RawRecord> = self
            .records
            .iter()
            .map(|r| RawRecord {
                term: r.term.clone(),
                label: r.gold.map(|g| g.canonical_name().to_string()),
            })
            .collect();
        let mut out = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
        serde_json::to_writer_pretty(&mut out, &raw)
            .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
        out.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    pub fn records(&self) -> &[TermRecord] {
        &self.records
    }

    /// Gold-label counts, indexed by class.
    pub fn label_counts(&self) -> &[usize; CLASS_COUNT] {
        &self.label_counts
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Per-class counts keyed by class, for reporting.
    pub fn count_map(&self) -> BTreeMap<ClassLabel, usize> {
        ClassLabel::all()
            .map(|c| (c, self.label_counts[c.index()]))
            .collect()
    }
}

fn convert_record(raw: RawRecord) -> Result<TermRecord> {
    let term = raw.term.trim().to_string();
    if term.is_empty() {
        return Err(Error::Validation("record has an empty term".into()));
    }
    let gold = match raw.label {
        None => None,
        Some(name) => Some(
            ClassLabel::from_name(&name).ok_or_else(|| Error::UnknownLabel(name.clone()))?,
        ),
    };
    Ok(TermRecord { term, gold })
}

/// Normalize a label for lookups and overlap checks: lowercase, trim,
/// collapse internal whitespace, and strip one plural `s` from the final
/// token. The strip is skipped when the token would drop below two
/// characters or already ends in a double `s`, which keeps the function
/// idempotent and leaves short abbreviations intact ("MMIs" → "mmi",
/// "s" → "s", "class" → "class").
pub fn normalize_label(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for token in text.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        for c in token.chars() {
            out.extend(c.to_lowercase());
        }
    }
    let last_len = out
        .rsplit(' ')
        .next()
        .map(|t| t.chars().count())
        .unwrap_or(0);
    if out.ends_with('s') && !out.ends_with("ss") && last_len >= 3 {
        out.pop();
    }
    out
}

impl Serialize for ClassLabel {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.canonical_name())
    }
}

impl<'de> Deserialize<'de> for ClassLabel {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let name = String::deserialize(deserializer)?;
        ClassLabel::from_name(&name)
            .ok_or_else(|| serde::de::Error::custom(format!("unknown class label {name:?}")))
    }
}
