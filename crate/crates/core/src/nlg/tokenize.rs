//! Shared tokenizer for all surface-overlap metrics.
//!
//! Lowercase, strip punctuation to spaces (keeping '.' when it sits
//! between digits, so measurements like "5.5 mm" survive), then split on
//! whitespace. Every metric in this crate tokenizes identically; the
//! version tag is recorded in run metadata so scores stay comparable.

pub const TOKENIZER_VERSION: &str = "lower-punct-v1";

/// Splits a report into comparable tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    for (i, &c) in chars.iter().enumerate() {
        if c.is_alphanumeric() {
            out.extend(c.to_lowercase());
        } else if c == '.'
            && i > 0
            && i + 1 < chars.len()
            && chars[i - 1].is_ascii_digit()
            && chars[i + 1].is_ascii_digit()
        {
            out.push('.');
        } else {
            out.push(' ');
        }
    }
    out.split_whitespace().map(str::to_string).collect()
}

/// Contiguous n-grams of `tokens`; empty when the text is shorter than n.
pub fn ngrams(tokens: &[String], n: usize) -> Vec<&[String]> {
    if n == 0 || tokens.len() < n {
        return Vec::new();
    }
    tokens.windows(n).collect()
}
