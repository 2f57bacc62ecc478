use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use regex::Regex;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TemplateError {
    #[error("missing values for placeholders: {}", names.join(", "))]
    MissingPlaceholder { names: Vec<String> },
    #[error("template {id}: required placeholder {name:?} does not occur in the body")]
    RequiredNotInBody { id: String, name: String },
    #[error("template file: {0}")]
    BadHeader(String),
}

fn placeholder_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\{\{\s*([^{}]+?)\s*\}\}").expect("valid regex"))
}

/// A prompt body with `{{name}}` slots. Names may contain spaces
/// (`{{sign language}}`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub id: String,
    pub version: u32,
    pub body: String,
    pub required: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rendered {
    pub text: String,
    /// Placeholders left verbatim because no value was supplied.
    pub warnings: Vec<String>,
}

impl PromptTemplate {
    pub fn new(id: &str, body: &str, required: &[&str]) -> Result<Self, TemplateError> {
        let t = PromptTemplate {
            id: id.to_string(),
            version: 1,
            body: body.to_string(),
            required: required.iter().map(|s| s.to_string()).collect(),
        };
        t.check()?;
        Ok(t)
    }

    fn check(&self) -> Result<(), TemplateError> {
        let present = self.placeholders();
        match self.required.iter().find(|r| !present.contains(*r)) {
            Some(name) => Err(TemplateError::RequiredNotInBody { id: self.id.clone(), name: name.clone() }),
            None => Ok(()),
        }
    }

    /// Parses a template file: a header block of `key: value` lines
    /// (`id`, `version`, `required` as a comma list) closed by a `---` line,
    /// followed by the body.
    pub fn parse_file(text: &str) -> Result<Self, TemplateError> {
        let (header, body) = text
            .split_once("\n---\n")
            .ok_or_else(|| TemplateError::BadHeader("no '---' separator".into()))?;
        let mut fields = BTreeMap::new();
        for row in header.lines().filter(|r| !r.trim().is_empty()) {
            let (k, v) = row
                .split_once(':')
                .ok_or_else(|| TemplateError::BadHeader(format!("bad header row {row:?}")))?;
            fields.insert(k.trim().to_string(), v.trim().to_string());
        }
        let id = fields.remove("id").ok_or_else(|| TemplateError::BadHeader("missing id".into()))?;
        let version = match fields.remove("version") {
            Some(v) => v.parse().map_err(|_| TemplateError::BadHeader(format!("bad version {v:?}")))?,
            None => 1,
        };
        let required = fields
            .remove("required")
            .map(|r| r.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect())
            .unwrap_or_default();
        let t = PromptTemplate { id, version, body: body.to_string(), required };
        t.check()?;
        Ok(t)
    }

    /// Distinct placeholder names in the body.
    pub fn placeholders(&self) -> BTreeSet<String> {
        placeholder_re().captures_iter(&self.body).map(|c| c[1].to_string()).collect()
    }

    pub fn render(&self, values: &BTreeMap<String, String>) -> Result<Rendered, TemplateError> {
        let missing: Vec<String> = self.required.iter().filter(|r| !values.contains_key(*r)).cloned().collect();
        if !missing.is_empty() {
            return Err(TemplateError::MissingPlaceholder { names: missing });
        }
        let mut warnings = Vec::new();
        let text = placeholder_re()
            .replace_all(&self.body, |c: &regex::Captures| match values.get(&c[1]) {
                Some(v) => v.clone(),
                None => {
                    if !warnings.contains(&c[1].to_string()) {
                        warnings.push(c[1].to_string());
                    }
                    c[0].to_string()
                }
            })
            .into_owned();
        Ok(Rendered { text, warnings })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vals(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn single_substitution() {
        let t = PromptTemplate::new("t", "Song {{title}}", &["title"]).unwrap();
        assert_eq!(t.render(&vals(&[("title", "Butter")])).unwrap().text, "Song Butter");
    }

    #[test]
    fn missing_required() {
        let t = PromptTemplate::new("t", "{{title}} by {{artist}}", &["title", "artist"]).unwrap();
        let err = t.render(&vals(&[("title", "Butter")])).unwrap_err();
        assert_eq!(err, TemplateError::MissingPlaceholder { names: vec!["artist".into()] });
    }

    #[test]
    fn unknown_placeholder_kept_with_warning() {
        let t = PromptTemplate::new("t", "Hi {{name}} {{unknown}}", &["name"]).unwrap();
        let r = t.render(&vals(&[("name", "Ana")])).unwrap();
        assert_eq!(r.text, "Hi Ana {{unknown}}");
        assert_eq!(r.warnings, vec!["unknown".to_string()]);
    }

    #[test]
    fn names_with_spaces() {
        let t = PromptTemplate::new("t", "in {{sign language}} for {{ user name }}", &["sign language", "user name"]).unwrap();
        let r = t.render(&vals(&[("sign language", "ASL"), ("user name", "Ana")])).unwrap();
        assert_eq!(r.text, "in ASL for Ana");
    }

    #[test]
    fn required_must_appear() {
        assert!(matches!(
            PromptTemplate::new("t", "body", &["x"]),
            Err(TemplateError::RequiredNotInBody { .. })
        ));
    }

    #[test]
    fn file_format() {
        let t = PromptTemplate::parse_file("id: meaning\nversion: 2\nrequired: title, artist\n---\n{{title}} / {{artist}}\n").unwrap();
        assert_eq!((t.id.as_str(), t.version), ("meaning", 2));
        assert_eq!(t.required.len(), 2);
        assert_eq!(t.body, "{{title}} / {{artist}}\n");
    }

    proptest::proptest! {
        #[test]
        fn render_keeps_literal_text(prefix in "[a-z .]{0,20}", suffix in "[a-z .]{0,20}", value in "[a-zA-Z ]{0,10}") {
            let t = PromptTemplate::new("t", &format!("{prefix}{{{{x}}}}{suffix}"), &["x"]).unwrap();
            let out = t.render(&vals(&[("x", &value)])).unwrap().text;
            proptest::prop_assert_eq!(out, format!("{prefix}{value}{suffix}"));
        }
    }
}
