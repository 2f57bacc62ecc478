use std::collections::HashMap;

/// Token-set ratio: `2 · |a ∩ b| / (|a| + |b|)` with multiset intersection.
///
/// Returned as `(numerator, denominator)` so callers can stay in integers.
/// Two empty sequences give `(0, 1)`.
pub fn token_set_ratio<S: AsRef<str>>(a: &[S], b: &[S]) -> (u64, u64) {
    let total = (a.len() + b.len()) as u64;
    if total == 0 {
        return (0, 1);
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in a {
        *counts.entry(t.as_ref()).or_insert(0) += 1;
    }
    let mut shared = 0u64;
    for t in b {
        if let Some(c) = counts.get_mut(t.as_ref()) {
            if *c > 0 {
                *c -= 1;
                shared += 1;
            }
        }
    }
    (2 * shared, total)
}

/// Character-level similarity of two normalized words in `[0, 1]`.
pub fn word_similarity(a: &str, b: &str) -> f64 {
    strsim::normalized_levenshtein(a, b)
}
