//! Relation rows → template sentences → aligned JSON-lines training data.

pub mod align;
pub mod dataset;
pub mod generate;
pub mod rows;
pub mod templates;
mod vocab;
mod tokenize;

pub use align::{align_entry, AlignError, AlignInput, AlignOutcome, EntityMention};
pub use dataset::{
    collect_labels, read_dataset, scan_dataset, training_subset, write_dataset, DatasetEntry,
    DatasetScan, EntitySpan, Exclusion, KgeSpan,
};
pub use generate::{generate_entry, generate_with_skeleton, GeneratedEntry};
pub use rows::{clean_entity_name, read_relation_rows, subsample_rows, write_relation_rows, RelationRow};
pub use templates::TemplateSet;
pub use tokenize::{tokenize_text, EDGE_PUNCTUATION};
pub use vocab::{Vocab, UNK, UNK_ID};

/// Mentions recovered from a generated entry, used to re-run alignment on it.
pub fn mentions_of(entry: &DatasetEntry) -> Vec<EntityMention> {
    entry
        .ner
        .iter()
        .zip(&entry.kge)
        .map(|(n, k)| {
            EntityMention::new(
                &entry.tokenized_text[n.start..=n.end].join(" "),
                &n.label,
                &k.node_id,
            )
        })
        .collect()
}
