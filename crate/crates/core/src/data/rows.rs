//! Relation rows (entity pairs with their relation) and seeded subsampling.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationRow {
    pub head_entity_id: String,
    pub head_entity_name: String,
    pub tail_entity_id: String,
    pub tail_entity_name: String,
    pub relation_type: String,
    pub head_type: String,
    pub tail_type: String,
}

/// Strips matched surrounding quotes and brackets, then collapses internal whitespace.
pub fn clean_entity_name(raw: &str) -> String {
    const PAIRS: &[(char, char)] = &[
        ('"', '"'),
        ('\'', '\''),
        ('`', '`'),
        ('(', ')'),
        ('[', ']'),
        ('{', '}'),
        ('<', '>'),
    ];
    let mut s = raw.trim();
    while let Some(&(_, close)) = PAIRS.iter().find(|(open, _)| s.starts_with(*open)) {
        if s.len() < 2 || !s.ends_with(close) {
            break;
        }
        s = s[1..s.len() - 1].trim();
    }
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

impl RelationRow {
    /// Copy with both entity names cleaned.
    pub fn cleaned(&self) -> Self {
        Self {
            head_entity_name: clean_entity_name(&self.head_entity_name),
            tail_entity_name: clean_entity_name(&self.tail_entity_name),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.head_entity_id.trim().is_empty() || self.tail_entity_id.trim().is_empty() {
            return Err("empty entity id".into());
        }
        if clean_entity_name(&self.head_entity_name).is_empty()
            || clean_entity_name(&self.tail_entity_name).is_empty()
        {
            return Err("entity name empty after cleaning".into());
        }
        if self.relation_type.trim().is_empty() {
            return Err("empty relation type".into());
        }
        Ok(())
    }
}

/// Reads a delimited file whose header names the seven row fields.
pub fn read_relation_rows(path: &Path, delimiter: u8) -> Result<Vec<RelationRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut rows = Vec::new();
    for (i, rec) in reader.deserialize::<RelationRow>().enumerate() {
        let row = rec?;
        row.validate().map_err(|message| Error::Parse {
            path: path.to_path_buf(),
            // header is line 1
            line: i + 2,
            message,
        })?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_relation_rows(path: &Path, rows: &[RelationRow], delimiter: u8) -> Result<()> {
    let mut w = csv::WriterBuilder::new().delimiter(delimiter).from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Keeps each row independently with probability `1 / rate_denominator`,
/// preserving input order.
pub fn subsample_rows<I, T>(rows: I, rate_denominator: u64, seed: u64) -> Result<Vec<T>>
where
    I: IntoIterator<Item = T>,
{
    if rate_denominator == 0 {
        return Err(Error::Config("subsample rate denominator must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(rows
        .into_iter()
        .filter(|_| rate_denominator == 1 || rng.random_range(0..rate_denominator) == 0)
        .collect())
}
