//! Whitespace tokenisation with punctuation peeling.

/// Characters split off the start and end of whitespace-delimited chunks.
pub const EDGE_PUNCTUATION: &[char] = &['.', ',', ';', ':', '(', ')', '[', ']'];

fn is_edge(c: char) -> bool {
    EDGE_PUNCTUATION.contains(&c)
}

/// Splits on whitespace, then peels leading and trailing punctuation from each
/// chunk into one-character tokens. Interior punctuation and hyphens stay put.
pub fn tokenize_text(raw: &str) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in raw.split_whitespace() {
        let mut rest = chunk;
        while let Some(c) = rest.chars().next().filter(|&c| is_edge(c)) {
            out.push(c.to_string());
            rest = &rest[c.len_utf8()..];
        }
        let mut tail = Vec::new();
        while let Some(c) = rest.chars().next_back().filter(|&c| is_edge(c)) {
            tail.push(c.to_string());
            rest = &rest[..rest.len() - c.len_utf8()];
        }
        if !rest.is_empty() {
            out.push(rest.to_string());
        }
        out.extend(tail.into_iter().rev());
    }
    out
}
