//! Tokenization shared by text features and BM25.

use alloc::string::String;
use alloc::vec::Vec;

/// Lowercase, split on anything that is not alphanumeric, drop tokens
/// shorter than two characters.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric()).filter(|t| t.chars().count() >= 2).map(|t| t.to_lowercase()).collect()
}

pub fn token_count(text: &str) -> usize {
    text.split(|c: char| !c.is_alphanumeric()).filter(|t| t.chars().count() >= 2).count()
}

/// Bucket of a token in a hashed bag-of-words of width `dim`.
pub fn hash_bucket(token: &str, dim: usize) -> usize {
    (crate::rng::fnv1a(token.as_bytes()) % dim as u64) as usize
}
