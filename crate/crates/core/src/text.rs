//! Text normalization shared by alignment and the gloss metrics.

fn is_apostrophe(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}' | '\u{2018}')
}

/// Lowercases, strips punctuation and collapses whitespace.
///
/// Apostrophes survive when they touch a letter or digit (`gon'`, `'cause`,
/// `don't`); hyphens survive only between two letters or digits
/// (`same-as`). Curly apostrophes are folded to `'`. Every other
/// non-alphanumeric character acts as a word separator.
pub fn normalize_text(raw: &str) -> String {
    let lowered: Vec<char> = raw.chars().flat_map(char::to_lowercase).collect();
    let alnum = |i: Option<usize>| i.and_then(|i| lowered.get(i)).is_some_and(|c| c.is_alphanumeric());

    let mut out = String::with_capacity(lowered.len());
    let mut pending_space = false;
    for (i, &c) in lowered.iter().enumerate() {
        let prev = i.checked_sub(1);
        let next = Some(i + 1);
        let keep = if c.is_alphanumeric() {
            Some(c)
        } else if is_apostrophe(c) && (alnum(prev) || alnum(next)) {
            Some('\'')
        } else if c == '-' && alnum(prev) && alnum(next) {
            Some('-')
        } else {
            None
        };
        match keep {
            Some(k) => {
                if pending_space && !out.is_empty() {
                    out.push(' ');
                }
                pending_space = false;
                out.push(k);
            }
            None => pending_space = true,
        }
    }
    out
}

/// Normalized whitespace-separated tokens.
pub fn normalized_tokens(raw: &str) -> Vec<String> {
    normalize_text(raw)
        .split(' ')
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// Collapses runs of whitespace to one space and trims the ends.
pub fn collapse_whitespace(raw: &str) -> String {
    raw.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn case_fold() {
        assert_eq!(normalize_text("Smooth like butter"), "smooth like butter");
    }

    #[test]
    fn apostrophe_kept() {
        assert_eq!(normalize_text("Gon' pop like trouble"), "gon' pop like trouble");
        assert_eq!(normalize_text("'cause talk is cheap"), "'cause talk is cheap");
        assert_eq!(normalize_text("Breakin\u{2019} into"), "breakin' into");
    }

    #[test]
    fn collapse_and_strip() {
        assert_eq!(normalize_text("  Break   it down!! "), "break it down");
        assert_eq!(normalize_text("Side step, right, left"), "side step right left");
    }

    #[test]
    fn hyphens() {
        assert_eq!(normalize_text("SAME-AS"), "same-as");
        assert_eq!(normalize_text("well- - done -x"), "well done x");
    }

    #[test]
    fn empty_and_symbols() {
        assert_eq!(normalize_text(""), "");
        assert_eq!(normalize_text(" ♪ -- ' "), "");
    }

    proptest! {
        #[test]
        fn idempotent(s in "\\PC{0,40}") {
            let once = normalize_text(&s);
            prop_assert_eq!(normalize_text(&once), once);
        }

        #[test]
        fn idempotent_ascii_punct(s in "[a-zA-Z'\\- ,.!?]{0,40}") {
            let once = normalize_text(&s);
            prop_assert_eq!(normalize_text(&once), once.clone());
            prop_assert!(!once.starts_with(' ') && !once.ends_with(' '));
            prop_assert!(!once.contains("  "));
        }
    }
}
