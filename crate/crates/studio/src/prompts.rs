use std::collections::BTreeMap;

use elmi_llm::{PromptTemplate, TemplateError};

macro_rules! prompt_files {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../prompts/", $name, ".txt")))),*]
    };
}

const BUILTIN: &[(&str, &str)] = prompt_files![
    "meaning",
    "glossing_base",
    "glossing_refine",
    "emoting_base",
    "emoting_refine",
    "timing_base",
    "timing_refine",
    "proactive_opener",
    "intent_classifier",
    "line_inspector",
    "base_gloss",
    "performance_guide",
    "alternative_gloss",
    "line_match",
];

/// Templates used by the chat engine.
pub const CHAT_TEMPLATES: [&str; 9] = [
    "meaning",
    "glossing_base",
    "glossing_refine",
    "emoting_base",
    "emoting_refine",
    "timing_base",
    "timing_refine",
    "proactive_opener",
    "intent_classifier",
];

#[derive(Debug, Clone)]
pub struct PromptCatalog {
    templates: BTreeMap<String, PromptTemplate>,
}

impl PromptCatalog {
    /// The templates compiled into the binary from `prompts/`.
    pub fn builtin() -> Self {
        let templates = BUILTIN
            .iter()
            .map(|(name, text)| {
                let t = PromptTemplate::parse_file(text).unwrap_or_else(|e| panic!("prompts/{name}.txt: {e}"));
                assert_eq!(&t.id, name, "prompts/{name}.txt declares id {}", t.id);
                (t.id.clone(), t)
            })
            .collect();
        PromptCatalog { templates }
    }

    pub fn get(&self, id: &str) -> &PromptTemplate {
        self.templates.get(id).unwrap_or_else(|| panic!("no prompt template {id:?}"))
    }

    pub fn render(&self, id: &str, values: &BTreeMap<String, String>) -> Result<String, TemplateError> {
        Ok(self.get(id).render(values)?.text)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.templates.keys().map(String::as_str)
    }
}
