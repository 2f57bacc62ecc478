//! Overlap coefficient between gloss word sets.

use std::collections::BTreeSet;

use num_rational::Ratio;
use thiserror::Error;

use crate::gloss::GlossToken;
use crate::text::normalize_text;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum OverlapError {
    #[error("overlap coefficient is undefined for two empty sets")]
    BothEmpty,
}

/// `|a ∩ b| / min(|a|, |b|)` as an exact fraction.
///
/// When exactly one side is empty nothing is shared and the result is 0.
pub fn overlap_coefficient<T: Ord>(
    a: &BTreeSet<T>,
    b: &BTreeSet<T>,
) -> Result<Ratio<u64>, OverlapError> {
    let smaller = a.len().min(b.len());
    if a.is_empty() && b.is_empty() {
        return Err(OverlapError::BothEmpty);
    }
    if smaller == 0 {
        return Ok(Ratio::from_integer(0));
    }
    let shared = a.intersection(b).count();
    Ok(Ratio::new(shared as u64, smaller as u64))
}

/// Normalized surfaces of the hand-produced tokens of a gloss. NMS and
/// classifier descriptions are excluded.
pub fn gloss_word_set(tokens: &[GlossToken]) -> BTreeSet<String> {
    tokens
        .iter()
        .filter(|t| t.is_sign())
        .map(|t| normalize_text(&t.surface))
        .filter(|s| !s.is_empty())
        .collect()
}

/// Renders a fraction as a percentage with two decimals, rounding half up.
pub fn render_percent(r: Ratio<u64>) -> String {
    let (n, d) = (*r.numer() as u128, *r.denom() as u128);
    let hundredths = (n * 20_000 + d) / (2 * d);
    format!("{}.{:02}%", hundredths / 100, hundredths % 100)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gloss::tokenize_gloss;

    fn set(words: &[&str]) -> BTreeSet<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn identical_and_disjoint() {
        assert_eq!(
            overlap_coefficient(&set(&["X", "Y"]), &set(&["X", "Y"])),
            Ok(Ratio::from_integer(1))
        );
        assert_eq!(
            overlap_coefficient(&set(&["X"]), &set(&["Y"])),
            Ok(Ratio::from_integer(0))
        );
    }

    #[test]
    fn two_thirds() {
        let a = set(&["ME", "SAME-AS", "BUTTER", "SMOOTH"]);
        let b = set(&["SMOOTH", "LIKE", "BUTTER"]);
        assert_eq!(overlap_coefficient(&a, &b), Ok(Ratio::new(2, 3)));
        assert_eq!(overlap_coefficient(&b, &a), Ok(Ratio::new(2, 3)));
    }

    #[test]
    fn empty_cases() {
        let e: BTreeSet<String> = BTreeSet::new();
        assert_eq!(overlap_coefficient(&e, &e), Err(OverlapError::BothEmpty));
        assert_eq!(overlap_coefficient(&e, &set(&["A"])), Ok(Ratio::from_integer(0)));
    }

    #[test]
    fn word_set_skips_nms() {
        let toks = tokenize_gloss("GUN [LCL\"shoot\"] CL:1 Gun F-S 'A-B'").unwrap();
        let ws = gloss_word_set(&toks);
        assert_eq!(ws, set(&["gun", "f-s 'a-b'"]));
    }

    #[test]
    fn percent_rendering() {
        assert_eq!(render_percent(Ratio::new(2, 3)), "66.67%");
        assert_eq!(render_percent(Ratio::from_integer(1)), "100.00%");
        assert_eq!(render_percent(Ratio::from_integer(0)), "0.00%");
        assert_eq!(render_percent(Ratio::new(1, 8)), "12.50%");
        assert_eq!(render_percent(Ratio::new(1, 200)), "0.50%");
        assert_eq!(render_percent(Ratio::new(1, 400)), "0.25%");
    }
}
