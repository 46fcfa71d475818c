//! First-occurrence alignment of entity names to token spans.
//!
//! Each mention is tokenised with [`tokenize_text`] and matched against the
//! entry's tokens left to right; the first contiguous match wins. A mention
//! that cannot be located yields an [`AlignError`] record and alignment moves
//! on to the next mention. Mentions with missing fields are skipped without a
//! record.

use serde::{Deserialize, Serialize};

use crate::data::dataset::{EntitySpan, KgeSpan};
use crate::data::tokenize_text;

/// One entity to locate: surface name, entity type and knowledge-graph id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityMention {
    pub name: Option<String>,
    pub entity_type: Option<String>,
    pub node_id: Option<String>,
}

impl EntityMention {
    pub fn new(name: &str, entity_type: &str, node_id: &str) -> Self {
        Self {
            name: Some(name.to_string()),
            entity_type: Some(entity_type.to_string()),
            node_id: Some(node_id.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignInput {
    pub tokenized_text: Vec<String>,
    pub mentions: Vec<EntityMention>,
}

/// Diagnostic for a mention that could not be placed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignError {
    pub mention: usize,
    pub text: String,
    pub search: Vec<String>,
    /// Byte offset of the raw name inside the joined text, if it occurs as a substring.
    pub found_index: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AlignOutcome {
    /// Tokens the spans index into.
    pub tokens: Vec<String>,
    pub entity_spans: Vec<EntitySpan>,
    pub kges: Vec<KgeSpan>,
    pub errors: Vec<AlignError>,
    /// Mentions dropped for missing fields.
    pub skipped: usize,
}

impl AlignOutcome {
    /// Two aligned mentions landed on overlapping spans.
    pub fn is_ambiguous(&self) -> bool {
        let s = &self.entity_spans;
        s.iter()
            .enumerate()
            .any(|(i, a)| s[i + 1..].iter().any(|b| a.start <= b.end && b.start <= a.end))
    }
}

/// Position of the first contiguous occurrence of `needle` in `haystack`.
pub fn find_first(haystack: &[String], needle: &[String]) -> Option<usize> {
    if needle.is_empty() || needle.len() > haystack.len() {
        return None;
    }
    haystack.windows(needle.len()).position(|w| w == needle)
}

pub fn align_entry(input: &AlignInput) -> AlignOutcome {
    let text = input.tokenized_text.join(" ");
    let mut out = AlignOutcome {
        tokens: tokenize_text(&text),
        ..Default::default()
    };
    for (k, m) in input.mentions.iter().enumerate() {
        let (Some(name), Some(ty), Some(id)) = (&m.name, &m.entity_type, &m.node_id) else {
            out.skipped += 1;
            continue;
        };
        let search = tokenize_text(name);
        match find_first(&out.tokens, &search) {
            Some(start) => {
                let end = start + search.len() - 1;
                out.entity_spans.push(EntitySpan::new(start, end, ty.clone()));
                out.kges.push(KgeSpan::new(start, end, id.clone()));
            }
            None => {
                let found_index = if name.is_empty() { None } else { text.find(name.as_str()) };
                log::debug!(
                    "align: mention {k} not found; text={text:?} search={search:?} found_index={found_index:?}"
                );
                out.errors.push(AlignError {
                    mention: k,
                    text: text.clone(),
                    search,
                    found_index,
                });
            }
        }
    }
    out
}
