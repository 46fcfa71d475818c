//! Windowed span enumeration.

use crate::error::{Error, Result};

/// The `T × w` raw spans of a sentence in start-major, width-minor order.
///
/// Spans running past the sentence end are kept so positions stay `p·w + width − 1`,
/// but are marked invalid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpanIndexSet {
    pub t: usize,
    pub w: usize,
    pub spans: Vec<(usize, usize)>,
    pub valid_mask: Vec<bool>,
}

pub fn enumerate_spans(t: usize, w: usize) -> Result<SpanIndexSet> {
    if t == 0 {
        return Err(Error::EmptyInput("cannot enumerate spans of an empty sentence".into()));
    }
    if w == 0 {
        return Err(Error::Config("max span width must be at least 1".into()));
    }
    let mut spans = Vec::with_capacity(t * w);
    let mut valid_mask = Vec::with_capacity(t * w);
    for p in 0..t {
        for q in p..p + w {
            spans.push((p, q));
            valid_mask.push(q < t);
        }
    }
    Ok(SpanIndexSet {
        t,
        w,
        spans,
        valid_mask,
    })
}

impl SpanIndexSet {
    pub fn len(&self) -> usize {
        self.spans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }

    pub fn valid_count(&self) -> usize {
        self.valid_mask.iter().filter(|&&v| v).count()
    }

    /// Raw position of the valid span `(p, q)`.
    pub fn position(&self, p: usize, q: usize) -> Option<usize> {
        (p <= q && q < self.t && q - p < self.w).then(|| p * self.w + (q - p))
    }

    /// `(start, end)` token indices used to build each representation,
    /// with out-of-range ends clamped to the last token.
    pub fn endpoints(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.spans.iter().map(|&(p, q)| (p, q.min(self.t - 1)))
    }
}
