//! Gloss notation: tokenizer, canonical form and sign/NMS counts.
//!
//! The grammar (also in `docs/gloss-grammar.md`):
//!
//! ```text
//! gloss          = { ws } , [ token , { { ws } , token } ] , { ws } ;
//! token          = nms | fingerspelling | classifier | manual ;
//! nms            = "[" , { any-char - "]" | nms } , "]" ;
//! fingerspelling = "F-S" , [ { ws } , descriptor ] , { ws } , quoted
//!                | "F-S" , { word-char } ;
//! classifier     = cl-prefix , [ ( ":" | "-" ) , { word-char } ] , [ { ws } , descriptor ] ;
//! cl-prefix      = "BPCL" | "LCL" | "DCL" | "SCL" | "ICL" | "PCL" | "BCL" | "CL" ;
//! manual         = word-char , { word-char | descriptor } ;
//! descriptor     = "(" , { any-char - ")" } , ")" ;
//! quoted         = quote , { any-char - quote } , quote ;
//! word-char      = any-char - ws - "[" ;
//! ```
//!
//! Token surfaces are the source slice with inner whitespace collapsed, so
//! joining surfaces with single spaces yields the canonical form of a gloss.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::collapse_whitespace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenKind {
    ManualSign,
    Nms,
    Classifier,
    Fingerspelling,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GlossToken {
    pub kind: TokenKind,
    pub surface: String,
}

impl GlossToken {
    fn new(kind: TokenKind, slice: &str) -> Self {
        GlossToken {
            kind,
            surface: collapse_whitespace(slice),
        }
    }

    /// Manual signs and fingerspelling are produced with the hands.
    pub fn is_sign(&self) -> bool {
        matches!(self.kind, TokenKind::ManualSign | TokenKind::Fingerspelling)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GlossError {
    #[error("unbalanced '{delimiter}' at byte {offset}")]
    UnbalancedBracket { delimiter: char, offset: usize },
}

/// Classifier prefixes, longest first so `BPCL` wins over `CL`.
pub const CLASSIFIER_PREFIXES: [&str; 8] = ["BPCL", "LCL", "DCL", "SCL", "ICL", "PCL", "BCL", "CL"];

fn closing_quote(open: char) -> Option<&'static [char]> {
    match open {
        '\'' | '`' | '\u{2018}' => Some(&['\'', '\u{2019}', '`']),
        '\u{2019}' => Some(&['\u{2019}', '\'']),
        '"' => Some(&['"']),
        '\u{201C}' => Some(&['\u{201D}', '"']),
        _ => None,
    }
}

fn classifier_word(word: &str) -> bool {
    CLASSIFIER_PREFIXES.iter().any(|p| {
        word.strip_prefix(p)
            .is_some_and(|rest| rest.is_empty() || rest.starts_with([':', '-', '(']))
    })
}

struct Scanner<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Scanner<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.bump();
        }
    }

    /// Consumes a `[...]` group, honoring nesting. Cursor must be on `[`.
    fn bracket_group(&mut self) -> Result<(), GlossError> {
        let open = self.pos;
        let mut depth = 0usize;
        while let Some(c) = self.bump() {
            match c {
                '[' => depth += 1,
                ']' => {
                    depth -= 1;
                    if depth == 0 {
                        return Ok(());
                    }
                }
                _ => {}
            }
        }
        Err(GlossError::UnbalancedBracket {
            delimiter: '[',
            offset: open,
        })
    }

    /// Consumes a `(...)` group. Cursor must be on `(`.
    fn paren_group(&mut self) -> Result<(), GlossError> {
        let open = self.pos;
        self.bump();
        while let Some(c) = self.bump() {
            if c == ')' {
                return Ok(());
            }
        }
        Err(GlossError::UnbalancedBracket {
            delimiter: '(',
            offset: open,
        })
    }

    /// Consumes a bare word up to whitespace or `[`; parentheses inside a
    /// word are consumed whole.
    fn word(&mut self) -> Result<(), GlossError> {
        while let Some(c) = self.peek() {
            match c {
                c if c.is_whitespace() => break,
                '[' => break,
                ']' => {
                    return Err(GlossError::UnbalancedBracket {
                        delimiter: ']',
                        offset: self.pos,
                    })
                }
                '(' => self.paren_group()?,
                _ => {
                    self.bump();
                }
            }
        }
        Ok(())
    }

    /// Tries to consume `ws* (descriptor)?` followed by `ws* quoted`. Leaves
    /// the cursor untouched when no quoted group follows.
    fn fingerspelled_letters(&mut self) -> Result<bool, GlossError> {
        let save = self.pos;
        self.skip_ws();
        if self.peek() == Some('(') {
            self.paren_group()?;
            self.skip_ws();
        }
        let Some(closers) = self.peek().and_then(closing_quote) else {
            self.pos = save;
            return Ok(false);
        };
        self.bump();
        while let Some(c) = self.bump() {
            if closers.contains(&c) {
                // Greedy: a closer followed by a word character is an inner
                // apostrophe, not the end of the group.
                if !self.peek().is_some_and(|n| n.is_alphanumeric()) {
                    return Ok(true);
                }
            }
        }
        self.pos = save;
        Ok(false)
    }

    /// Consumes `ws* (descriptor)` when present.
    fn trailing_descriptor(&mut self) -> Result<(), GlossError> {
        let save = self.pos;
        self.skip_ws();
        if self.peek() == Some('(') {
            self.paren_group()
        } else {
            self.pos = save;
            Ok(())
        }
    }
}

/// Splits a gloss into manual signs, NMS, classifiers and fingerspelling.
pub fn tokenize_gloss(raw: &str) -> Result<Vec<GlossToken>, GlossError> {
    let mut sc = Scanner { src: raw, pos: 0 };
    let mut tokens = Vec::new();
    loop {
        sc.skip_ws();
        let start = sc.pos;
        let Some(c) = sc.peek() else { break };
        match c {
            '[' => {
                sc.bracket_group()?;
                tokens.push(GlossToken::new(TokenKind::Nms, &raw[start..sc.pos]));
            }
            ']' | ')' => {
                return Err(GlossError::UnbalancedBracket {
                    delimiter: c,
                    offset: start,
                })
            }
            _ => {
                sc.word()?;
                let word = &raw[start..sc.pos];
                let kind = if word == "F-S" {
                    sc.fingerspelled_letters()?;
                    TokenKind::Fingerspelling
                } else if word.starts_with("F-S") {
                    TokenKind::Fingerspelling
                } else if classifier_word(word) {
                    if !word.contains('(') {
                        sc.trailing_descriptor()?;
                    }
                    TokenKind::Classifier
                } else {
                    TokenKind::ManualSign
                };
                tokens.push(GlossToken::new(kind, &raw[start..sc.pos]));
            }
        }
    }
    Ok(tokens)
}

/// Token surfaces joined by single spaces.
pub fn canonical_gloss(tokens: &[GlossToken]) -> String {
    tokens
        .iter()
        .map(|t| t.surface.as_str())
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlossMetrics {
    pub sign_count: usize,
    pub nms_count: usize,
}

impl GlossMetrics {
    pub fn total(&self) -> usize {
        self.sign_count + self.nms_count
    }
}

/// Classifiers count as NMS; fingerspelling counts as one sign.
pub fn gloss_metrics(tokens: &[GlossToken]) -> GlossMetrics {
    tokens.iter().fold(GlossMetrics::default(), |mut m, t| {
        if t.is_sign() {
            m.sign_count += 1;
        } else {
            m.nms_count += 1;
        }
        m
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use TokenKind::*;

    fn kinds(raw: &str) -> Vec<(TokenKind, String)> {
        tokenize_gloss(raw)
            .unwrap()
            .into_iter()
            .map(|t| (t.kind, t.surface))
            .collect()
    }

    fn k(kind: TokenKind, s: &str) -> (TokenKind, String) {
        (kind, s.to_string())
    }

    #[test]
    fn plain_manual_signs() {
        assert_eq!(
            kinds("SMOOTH LIKE BUTTER"),
            vec![k(ManualSign, "SMOOTH"), k(ManualSign, "LIKE"), k(ManualSign, "BUTTER")]
        );
    }

    #[test]
    fn bracketed_nms() {
        assert_eq!(
            kinds("GUN [LCL\"shoot\"]"),
            vec![k(ManualSign, "GUN"), k(Nms, "[LCL\"shoot\"]")]
        );
        assert_eq!(
            kinds("[CL:1 \"person wearing   sunglasses\"]"),
            vec![k(Nms, "[CL:1 \"person wearing sunglasses\"]")]
        );
    }

    #[test]
    fn empty_gloss() {
        assert!(tokenize_gloss("").unwrap().is_empty());
        assert!(tokenize_gloss("  \n\t").unwrap().is_empty());
    }

    #[test]
    fn fingerspelling_group() {
        assert_eq!(
            kinds("JUMP TOP F-S 'L-E-B-R-O-N'"),
            vec![
                k(ManualSign, "JUMP"),
                k(ManualSign, "TOP"),
                k(Fingerspelling, "F-S 'L-E-B-R-O-N'")
            ]
        );
        assert_eq!(
            kinds("F-S (FingerSpelling) `L-E-B-R-O-N'"),
            vec![k(Fingerspelling, "F-S (FingerSpelling) `L-E-B-R-O-N'")]
        );
        assert_eq!(kinds("F-S"), vec![k(Fingerspelling, "F-S")]);
        assert_eq!(kinds("F-S-BTS"), vec![k(Fingerspelling, "F-S-BTS")]);
    }

    #[test]
    fn classifier_with_descriptor() {
        assert_eq!(
            kinds("JUMP TOP CL-5 (basketball shooting)"),
            vec![
                k(ManualSign, "JUMP"),
                k(ManualSign, "TOP"),
                k(Classifier, "CL-5 (basketball shooting)")
            ]
        );
        assert_eq!(kinds("BPCL:1"), vec![k(Classifier, "BPCL:1")]);
        // Words that merely start with the letters are ordinary signs.
        assert_eq!(kinds("CLOSE CLASS"), vec![k(ManualSign, "CLOSE"), k(ManualSign, "CLASS")]);
    }

    #[test]
    fn adjacent_brackets_split() {
        assert_eq!(
            kinds("FOOT [\"move right\"][\"move left\"]"),
            vec![
                k(ManualSign, "FOOT"),
                k(Nms, "[\"move right\"]"),
                k(Nms, "[\"move left\"]")
            ]
        );
    }

    #[test]
    fn unbalanced() {
        assert_eq!(
            tokenize_gloss("GUN [LCL shoot"),
            Err(GlossError::UnbalancedBracket {
                delimiter: '[',
                offset: 4
            })
        );
        assert_eq!(
            tokenize_gloss("CL-5 (ball"),
            Err(GlossError::UnbalancedBracket {
                delimiter: '(',
                offset: 5
            })
        );
        assert!(tokenize_gloss("A ] B").is_err());
        assert!(tokenize_gloss("[a [b]").is_err());
    }

    #[test]
    fn metrics() {
        assert_eq!(gloss_metrics(&[]), GlossMetrics::default());
        let m = gloss_metrics(&tokenize_gloss("GUN [LCL\"shoot\"]").unwrap());
        assert_eq!((m.sign_count, m.nms_count), (1, 1));
        let m = gloss_metrics(&tokenize_gloss("SMOOTH LIKE BUTTER").unwrap());
        assert_eq!((m.sign_count, m.nms_count), (3, 0));
        let m = gloss_metrics(&tokenize_gloss("JUMP TOP CL-5 (ball) F-S 'L-E-B'").unwrap());
        assert_eq!((m.sign_count, m.nms_count), (3, 1));
    }
}
