//! Deterministic template-based sentence synthesis.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::align::{align_entry, AlignInput, EntityMention};
use crate::data::dataset::DatasetEntry;
use crate::data::rows::{clean_entity_name, RelationRow};
use crate::data::templates::{TemplateSet, HEAD, TAIL};
use crate::data::tokenize_text;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratedEntry {
    pub entry: DatasetEntry,
    /// Head and tail resolved to overlapping spans; keep out of training sets.
    pub ambiguous: bool,
    pub skeleton: usize,
}

/// Fills a seeded skeleton with the row's cleaned names and aligns it.
pub fn generate_entry(row: &RelationRow, templates: &TemplateSet, seed: u64) -> Result<GeneratedEntry> {
    let skeletons = templates.skeletons(&row.relation_type).ok_or_else(|| {
        Error::Generation(format!("no template for relation {:?}", row.relation_type))
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let skeleton = rng.random_range(0..skeletons.len());
    generate_with_skeleton(row, templates, skeleton)
}

/// As [`generate_entry`] with an explicit skeleton index.
pub fn generate_with_skeleton(
    row: &RelationRow,
    templates: &TemplateSet,
    skeleton: usize,
) -> Result<GeneratedEntry> {
    let skeletons = templates.skeletons(&row.relation_type).ok_or_else(|| {
        Error::Generation(format!("no template for relation {:?}", row.relation_type))
    })?;
    let template = skeletons.get(skeleton).ok_or_else(|| {
        Error::Generation(format!(
            "skeleton {skeleton} out of range for relation {:?}",
            row.relation_type
        ))
    })?;
    let head = clean_entity_name(&row.head_entity_name);
    let tail = clean_entity_name(&row.tail_entity_name);
    if head.is_empty() || tail.is_empty() {
        return Err(Error::Generation(format!(
            "row {}->{} has an empty entity name",
            row.head_entity_id, row.tail_entity_id
        )));
    }
    // pad placeholders so names never fuse with neighbouring skeleton text
    let text = template
        .replacen(HEAD, &format!(" {head} "), 1)
        .replacen(TAIL, &format!(" {tail} "), 1);
    let input = AlignInput {
        tokenized_text: tokenize_text(&text),
        mentions: vec![
            EntityMention::new(&head, &row.head_type, &row.head_entity_id),
            EntityMention::new(&tail, &row.tail_type, &row.tail_entity_id),
        ],
    };
    let out = align_entry(&input);
    if !out.errors.is_empty() {
        return Err(Error::Generation(format!(
            "generated sentence {text:?} failed alignment: {:?}",
            out.errors
        )));
    }
    let ambiguous = out.is_ambiguous();
    Ok(GeneratedEntry {
        entry: DatasetEntry {
            tokenized_text: out.tokens,
            ner: out.entity_spans,
            kge: out.kges,
        },
        ambiguous,
        skeleton,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::dataset::{EntitySpan, KgeSpan};
    use std::collections::BTreeMap;

    fn row(head: &str, tail: &str, rel: &str) -> RelationRow {
        RelationRow {
            head_entity_id: "G1".into(),
            head_entity_name: head.into(),
            tail_entity_id: "G2".into(),
            tail_entity_name: tail.into(),
            relation_type: rel.into(),
            head_type: "Gene".into(),
            tail_type: "Gene".into(),
        }
    }

    fn templates(pairs: &[(&str, &str)]) -> TemplateSet {
        let mut m: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (r, s) in pairs {
            m.entry(r.to_string()).or_default().push(s.to_string());
        }
        TemplateSet::new(m).unwrap()
    }

    #[test]
    fn one_skeleton_case() {
        let t = templates(&[("regulates", "HEAD regulates TAIL .")]);
        let g = generate_entry(&row("BRCA1", "TP53", "regulates"), &t, 0).unwrap();
        assert_eq!(g.entry.tokenized_text, ["BRCA1", "regulates", "TP53", "."]);
        assert_eq!(
            g.entry.ner,
            vec![EntitySpan::new(0, 0, "Gene"), EntitySpan::new(2, 2, "Gene")]
        );
        assert_eq!(g.entry.kge, vec![KgeSpan::new(0, 0, "G1"), KgeSpan::new(2, 2, "G2")]);
        assert!(!g.ambiguous);
    }

    #[test]
    fn multiword_entity_width_two() {
        let t = templates(&[("linked", "HEAD is linked to TAIL")]);
        let mut r = row("BRCA1", "breast cancer", "linked");
        r.tail_type = "Disease".into();
        let g = generate_entry(&r, &t, 0).unwrap();
        let tail = &g.entry.ner[1];
        assert_eq!((tail.start, tail.end), (4, 5));
        assert_eq!(tail.width(), 2);
    }

    #[test]
    fn same_names_flagged_ambiguous() {
        let t = templates(&[("binds", "HEAD binds TAIL")]);
        let g = generate_entry(&row("TP53", "TP53", "binds"), &t, 0).unwrap();
        assert!(g.ambiguous);
        assert_eq!(g.entry.ner[0].start, g.entry.ner[1].start);
    }

    #[test]
    fn missing_relation_is_named() {
        let t = templates(&[("binds", "HEAD binds TAIL")]);
        let err = generate_entry(&row("a", "b", "cures"), &t, 0).unwrap_err();
        assert!(err.to_string().contains("cures"));
    }

    #[test]
    fn placeholder_next_to_punctuation() {
        let t = templates(&[("r", "(HEAD) acts on TAIL.")]);
        let g = generate_entry(&row("\"BRCA1\"", "TP53", "r"), &t, 0).unwrap();
        assert_eq!(g.entry.tokenized_text, ["(", "BRCA1", ")", "acts", "on", "TP53", "."]);
    }

    #[test]
    fn seeded_choice_is_reproducible() {
        let t = templates(&[("r", "HEAD a TAIL"), ("r", "HEAD b TAIL"), ("r", "HEAD c TAIL")]);
        let r = row("x", "y", "r");
        for seed in 0..20 {
            assert_eq!(
                generate_entry(&r, &t, seed).unwrap(),
                generate_entry(&r, &t, seed).unwrap()
            );
        }
    }
}
