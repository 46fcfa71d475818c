//! JSON-lines dataset: one `{"tokenized_text", "ner", "kge"}` object per line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gold entity span, inclusive token bounds. Serialised as `[start, end, "type"]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "(usize, usize, String)", into = "(usize, usize, String)")]
pub struct EntitySpan {
    pub start: usize,
    pub end: usize,
    pub label: String,
}

/// Span linked to a knowledge-graph node. Serialised as `[start, end, "node_id"]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "(usize, usize, String)", into = "(usize, usize, String)")]
pub struct KgeSpan {
    pub start: usize,
    pub end: usize,
    pub node_id: String,
}

macro_rules! tuple_conv {
    ($ty:ident, $field:ident) => {
        impl From<(usize, usize, String)> for $ty {
            fn from((start, end, $field): (usize, usize, String)) -> Self {
                Self { start, end, $field }
            }
        }
        impl From<$ty> for (usize, usize, String) {
            fn from(s: $ty) -> Self {
                (s.start, s.end, s.$field)
            }
        }
        impl $ty {
            pub fn new(start: usize, end: usize, $field: impl Into<String>) -> Self {
                Self {
                    start,
                    end,
                    $field: $field.into(),
                }
            }

            pub fn width(&self) -> usize {
                self.end + 1 - self.start
            }
        }
    };
}
tuple_conv!(EntitySpan, label);
tuple_conv!(KgeSpan, node_id);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub tokenized_text: Vec<String>,
    #[serde(default)]
    pub ner: Vec<EntitySpan>,
    #[serde(default)]
    pub kge: Vec<KgeSpan>,
}

impl DatasetEntry {
    /// Checks span bounds and that every kge span sits on some ner span.
    pub fn validate(&self) -> std::result::Result<(), String> {
        let t = self.tokenized_text.len();
        for s in &self.ner {
            if s.start > s.end || s.end >= t {
                return Err(format!(
                    "ner span ({}, {}) invalid for {t} tokens",
                    s.start, s.end
                ));
            }
        }
        for k in &self.kge {
            if k.start > k.end || k.end >= t {
                return Err(format!(
                    "kge span ({}, {}) invalid for {t} tokens",
                    k.start, k.end
                ));
            }
            if !self.ner.iter().any(|s| s.start == k.start && s.end == k.end) {
                return Err(format!(
                    "kge span ({}, {}) for {:?} has no matching ner span",
                    k.start, k.end, k.node_id
                ));
            }
        }
        Ok(())
    }

    pub fn max_width(&self) -> usize {
        self.ner.iter().map(EntitySpan::width).max().unwrap_or(0)
    }

    /// Two gold spans overlap or coincide, so first-occurrence alignment could
    /// not tell the mentions apart.
    pub fn is_ambiguous(&self) -> bool {
        self.ner.iter().enumerate().any(|(i, a)| {
            self.ner[i + 1..]
                .iter()
                .any(|b| a.start <= b.end && b.start <= a.end)
        })
    }

    /// Distinct entity types in first-seen order.
    pub fn labels(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for s in &self.ner {
            if !out.contains(&s.label.as_str()) {
                out.push(&s.label);
            }
        }
        out
    }
}

/// Corpus-wide distinct labels in first-seen order.
pub fn collect_labels(entries: &[DatasetEntry]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for e in entries {
        for l in e.labels() {
            if !out.iter().any(|o| o == l) {
                out.push(l.to_string());
            }
        }
    }
    out
}

pub fn write_dataset(entries: &[DatasetEntry], path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for e in entries {
        serde_json::to_writer(&mut w, e)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Everything found while reading a dataset without stopping at the first problem.
#[derive(Debug, Default)]
pub struct DatasetScan {
    pub entries: Vec<DatasetEntry>,
    pub problems: Vec<Error>,
}

/// Reads every line, collecting parse and validation problems instead of failing.
pub fn scan_dataset(path: &Path) -> Result<DatasetScan> {
    let reader = BufReader::new(File::open(path)?);
    let mut scan = DatasetScan::default();
    let mut entry_index = 0;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<DatasetEntry>(&line) {
            Ok(entry) => {
                match entry.validate() {
                    Ok(()) => scan.entries.push(entry),
                    Err(message) => scan.problems.push(Error::Validation {
                        entry: entry_index,
                        message,
                    }),
                }
                entry_index += 1;
            }
            Err(e) => scan.problems.push(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            }),
        }
    }
    Ok(scan)
}

/// Strict read: the first malformed or invalid line is an error.
pub fn read_dataset(path: &Path) -> Result<Vec<DatasetEntry>> {
    let mut scan = scan_dataset(path)?;
    if !scan.problems.is_empty() {
        return Err(scan.problems.swap_remove(0));
    }
    Ok(scan.entries)
}

/// Why an entry was kept out of a training set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exclusion {
    TooWide,
    Ambiguous,
}

/// Entries usable for training at span width `max_width`, plus the indices and
/// reasons of the ones left out.
pub fn training_subset(
    entries: &[DatasetEntry],
    max_width: usize,
) -> (Vec<DatasetEntry>, Vec<(usize, Exclusion)>) {
    let mut kept = Vec::new();
    let mut excluded = Vec::new();
    for (i, e) in entries.iter().enumerate() {
        if e.is_ambiguous() {
            excluded.push((i, Exclusion::Ambiguous));
        } else if e.max_width() > max_width {
            log::warn!(
                "entry {i}: gold span width {} exceeds max span width {max_width}; excluded",
                e.max_width()
            );
            excluded.push((i, Exclusion::TooWide));
        } else {
            kept.push(e.clone());
        }
    }
    (kept, excluded)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry() -> DatasetEntry {
        DatasetEntry {
            tokenized_text: ["BRCA1", "regulates", "TP53", "."].map(String::from).to_vec(),
            ner: vec![EntitySpan::new(0, 0, "Gene"), EntitySpan::new(2, 2, "Gene")],
            kge: vec![KgeSpan::new(0, 0, "G1"), KgeSpan::new(2, 2, "G2")],
        }
    }

    #[test]
    fn wire_format_is_tuple_arrays() {
        let line = serde_json::to_string(&entry()).unwrap();
        assert_eq!(
            line,
            r#"{"tokenized_text":["BRCA1","regulates","TP53","."],"ner":[[0,0,"Gene"],[2,2,"Gene"]],"kge":[[0,0,"G1"],[2,2,"G2"]]}"#
        );
    }

    #[test]
    fn empty_file_and_bit_exact_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        std::fs::write(&path, "").unwrap();
        assert!(read_dataset(&path).unwrap().is_empty());

        write_dataset(&[entry()], &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let back = read_dataset(&path).unwrap();
        assert_eq!(back, vec![entry()]);
        write_dataset(&back, &path).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), bytes);
    }

    #[test]
    fn missing_kge_defaults_to_empty() {
        let e: DatasetEntry =
            serde_json::from_str(r#"{"tokenized_text":["a"],"ner":[[0,0,"X"]]}"#).unwrap();
        assert!(e.kge.is_empty());
    }

    #[test]
    fn out_of_range_is_a_validation_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        let mut bad = entry();
        bad.ner[1].end = 4;
        write_dataset(&[entry(), bad], &path).unwrap();
        match read_dataset(&path) {
            Err(Error::Validation { entry, .. }) => assert_eq!(entry, 1),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        let good = serde_json::to_string(&entry()).unwrap();
        std::fs::write(&path, format!("{good}\n{{not json\n")).unwrap();
        match read_dataset(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn kge_must_sit_on_a_ner_span() {
        let mut e = entry();
        e.kge[0].end = 1;
        assert!(e.validate().is_err());
    }

    #[test]
    fn training_subset_filters() {
        let mut wide = entry();
        wide.ner = vec![EntitySpan::new(0, 3, "Gene")];
        wide.kge.clear();
        let mut dup = entry();
        dup.ner[1] = EntitySpan::new(0, 0, "Gene");
        dup.kge.clear();
        let (kept, excluded) = training_subset(&[entry(), wide, dup], 2);
        assert_eq!(kept, vec![entry()]);
        assert_eq!(excluded, vec![(1, Exclusion::TooWide), (2, Exclusion::Ambiguous)]);
    }
}
