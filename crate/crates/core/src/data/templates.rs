//! Sentence skeletons keyed by relation type.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const HEAD: &str = "HEAD";
pub const TAIL: &str = "TAIL";

/// Each skeleton holds exactly one `HEAD` and one `TAIL` placeholder.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TemplateSet {
    templates: BTreeMap<String, Vec<String>>,
}

impl TemplateSet {
    pub fn new(templates: BTreeMap<String, Vec<String>>) -> Result<Self> {
        for (rel, skeletons) in &templates {
            if skeletons.is_empty() {
                return Err(Error::Config(format!("relation {rel:?} has no skeletons")));
            }
            for s in skeletons {
                if s.matches(HEAD).count() != 1 || s.matches(TAIL).count() != 1 {
                    return Err(Error::Config(format!(
                        "skeleton {s:?} for {rel:?} needs exactly one HEAD and one TAIL"
                    )));
                }
            }
        }
        Ok(Self { templates })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let map: BTreeMap<String, Vec<String>> = serde_json::from_str(&text)?;
        Self::new(map)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn skeletons(&self, relation: &str) -> Option<&[String]> {
        self.templates.get(relation).map(Vec::as_slice)
    }

    pub fn relations(&self) -> impl Iterator<Item = &str> {
        self.templates.keys().map(String::as_str)
    }
}
