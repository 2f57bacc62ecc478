//! Per-line discussion threads.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::sync::{Arc, Mutex};

use chrono::Utc;
use elmi_core::{ProjectId, ProjectStatus};
use elmi_llm::{ChatExchange, LlmClient, LlmError, PromptKey, Role, TemperatureClass, Turn};
use num_rational::Ratio;
use serde::Serialize;
use thiserror::Error;

use crate::annotation::{ChallengeKind, ChallengeNote, LineAnnotation};
use crate::pipeline::{SongContext, Stage, StageOutputs};
use crate::prompts::PromptCatalog;
use crate::records::{ChatMessage, ChatThread, Intent, OpenedBy, Origin};
use crate::store::{Store, StoreError};

pub const MAX_QUESTIONS: usize = 2;

/// Persisted in place of a reply when the provider fails.
pub const APOLOGY: &str = "Sorry, I couldn't come up with a reply just now. Please send your message again.";

/// Stands in for the user side before a proactive opener.
pub const PROACTIVE_PROMPT: &str = "Please start the discussion about this line.";

const NO_GLOSS: &str = "(none yet)";
const NOT_AVAILABLE: &str = "(not available yet)";

#[derive(Debug, Error)]
pub enum ChatError {
    #[error("line {line_index} already has a thread ({thread_id})")]
    ThreadExists { line_index: usize, thread_id: String },
    #[error("line {0} has no challenge note, so it cannot be opened proactively")]
    NotNoteworthy(usize),
    #[error("not ready: {0}")]
    NotReady(String),
    #[error("thread {0} is already handling a message")]
    Busy(String),
    #[error("{0}")]
    BadRequest(String),
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// What the user sent: a shortcut button or typed text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TurnInput {
    Shortcut(Intent),
    Manual(String),
}

/// Message text recorded for a shortcut button press.
pub fn shortcut_text(intent: Intent) -> &'static str {
    match intent {
        Intent::Meaning => "Let's talk about what this line means.",
        Intent::Glossing => "Can you help me with the gloss for this line?",
        Intent::Emoting => "How should I express the emotion of this line?",
        Intent::Timing => "Does the gloss fit the timing of this line?",
    }
}

/// Template for an intent, depending on whether the user has glossed the line.
pub fn chat_template(intent: Intent, has_user_gloss: bool) -> &'static str {
    match (intent, has_user_gloss) {
        (Intent::Meaning, _) => "meaning",
        (Intent::Glossing, false) => "glossing_base",
        (Intent::Glossing, true) => "glossing_refine",
        (Intent::Emoting, false) => "emoting_base",
        (Intent::Emoting, true) => "emoting_refine",
        (Intent::Timing, false) => "timing_base",
        (Intent::Timing, true) => "timing_refine",
    }
}

/// Everything the chat prompts know about one line.
#[derive(Debug, Clone, PartialEq)]
pub struct LineContext {
    pub song: SongContext,
    pub line_index: usize,
    pub lyric_line: String,
    pub annotation: Option<LineAnnotation>,
    pub user_gloss: Option<String>,
}

pub fn describe_note(note: &ChallengeNote) -> String {
    if !note.is_noteworthy() {
        return "no particular challenges noted".into();
    }
    let mut s = format!("{}: {}", note.kind.as_str(), note.summary);
    if note.needs_fingerspelling_hint {
        s.push_str(" (fingerspelling may be needed)");
    }
    s
}

impl LineContext {
    fn base_values(&self) -> BTreeMap<String, String> {
        let mut v = self.song.values();
        v.insert("lyric line".into(), self.lyric_line.clone());
        v
    }

    /// Values for a reply template. `turn` counts the user messages in the
    /// thread including this one.
    pub fn chat_values(&self, message: &str, turn: usize) -> BTreeMap<String, String> {
        let mut v = self.base_values();
        let a = self.annotation.as_ref();
        let or_na = |s: Option<String>| s.unwrap_or_else(|| NOT_AVAILABLE.to_string());
        v.insert("line inspection".into(), or_na(a.map(|a| describe_note(&a.challenge))));
        v.insert("base gloss".into(), or_na(a.map(|a| a.base_gloss.clone())));
        v.insert(
            "alternatives".into(),
            or_na(a.map(|a| {
                format!("shorter: {} | alternative: {} | longer: {}", a.alt_glosses.shorter, a.alt_glosses.base_alt, a.alt_glosses.longer)
            })),
        );
        v.insert("mood".into(), or_na(a.map(|a| a.mood_hashtags.join(" "))));
        v.insert("performance guide".into(), or_na(a.map(|a| a.performance_guide.clone())));
        v.insert("user gloss".into(), self.user_gloss.clone().unwrap_or_else(|| NO_GLOSS.to_string()));
        v.insert("message".into(), message.to_string());
        v.insert("turn".into(), turn.to_string());
        v
    }

    pub fn classifier_values(&self, message: &str) -> BTreeMap<String, String> {
        BTreeMap::from([("message".to_string(), message.to_string()), ("lyric line".to_string(), self.lyric_line.clone())])
    }

    pub fn opener_values(&self, note: &ChallengeNote) -> BTreeMap<String, String> {
        let mut v = self.base_values();
        v.insert("challenge kind".into(), note.kind.as_str().to_string());
        v.insert("challenge summary".into(), note.summary.clone());
        v
    }
}

/// Splits text after runs of `.`, `!` or `?` that are followed by whitespace
/// or the end. Each piece keeps its trailing whitespace.
pub fn split_sentences(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((_, c)) = chars.next() {
        if !matches!(c, '.' | '!' | '?') {
            continue;
        }
        while let Some(&(_, n)) = chars.peek() {
            if matches!(n, '.' | '!' | '?') {
                chars.next();
            } else {
                break;
            }
        }
        let mut end = chars.peek().map_or(text.len(), |&(j, _)| j);
        if end < text.len() && !text[end..].starts_with(char::is_whitespace) {
            continue;
        }
        while let Some(&(j, n)) = chars.peek() {
            if n.is_whitespace() {
                chars.next();
                end = j + n.len_utf8();
            } else {
                break;
            }
        }
        out.push(&text[start..end]);
        start = end;
    }
    if start < text.len() {
        out.push(&text[start..]);
    }
    out
}

pub fn question_count(text: &str) -> usize {
    text.matches('?').count()
}

/// Keeps every sentence without a question mark and question sentences
/// while the running total stays within [`MAX_QUESTIONS`].
pub fn limit_questions(text: &str) -> String {
    let mut seen = 0;
    let kept: String = split_sentences(text)
        .into_iter()
        .filter(|s| {
            let q = question_count(s);
            if q == 0 {
                return true;
            }
            if seen + q <= MAX_QUESTIONS {
                seen += q;
                return true;
            }
            false
        })
        .collect();
    kept.trim().to_string()
}

fn has_digit(s: &str) -> bool {
    s.chars().any(char::is_numeric)
}

/// Drops sentences containing digits. If that leaves nothing, the digits
/// are removed instead.
pub fn strip_numbers(text: &str) -> String {
    if !has_digit(text) {
        return text.to_string();
    }
    let kept: String = split_sentences(text).into_iter().filter(|s| !has_digit(s)).collect();
    if !kept.trim().is_empty() {
        return kept.trim().to_string();
    }
    let bare: String = text.chars().filter(|c| !c.is_numeric()).collect();
    bare.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Parses a classifier reply: the first word naming an intent.
pub fn parse_intent(reply: &str) -> Option<Intent> {
    reply
        .split(|c: char| !c.is_alphabetic())
        .filter(|w| !w.is_empty())
        .find_map(|w| w.parse().ok())
}

/// Jaccard similarity of two token sets, exact.
fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> Ratio<u64> {
    let union = a.union(b).count() as u64;
    if union == 0 {
        return Ratio::from_integer(0);
    }
    Ratio::new(a.intersection(b).count() as u64, union)
}

/// Token set of a possibly incomplete gloss.
fn loose_tokens(text: &str) -> BTreeSet<String> {
    match elmi_core::tokenize_gloss(text) {
        Ok(t) => elmi_core::overlap::gloss_word_set(&t),
        Err(_) => text.split_whitespace().map(elmi_core::normalize_text).filter(|w| !w.is_empty()).collect(),
    }
}

fn squash(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// One or two precomputed variants to offer while the user types.
pub fn rank_suggestions(annotation: &LineAnnotation, partial: &str) -> Vec<String> {
    let alt = &annotation.alt_glosses;
    let partial = squash(partial);
    if partial.is_empty() {
        let mut out = vec![alt.base_alt.clone()];
        if alt.shorter != alt.base_alt {
            out.push(alt.shorter.clone());
        }
        return out;
    }
    let mut candidates: Vec<&String> = Vec::new();
    for c in [&alt.base_alt, &alt.shorter, &alt.longer, &annotation.base_gloss] {
        if squash(c) != partial && !candidates.iter().any(|x| squash(x) == squash(c)) {
            candidates.push(c);
        }
    }
    let target = loose_tokens(&partial);
    let mut scored: Vec<(Ratio<u64>, usize, &String)> =
        candidates.into_iter().enumerate().map(|(i, c)| (jaccard(&loose_tokens(c), &target), i, c)).collect();
    scored.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    scored.into_iter().take(2).map(|(_, _, c)| c.clone()).collect()
}

/// Result of one user turn.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TurnOutcome {
    pub user: ChatMessage,
    pub reply: ChatMessage,
}

struct BusyGuard<'a> {
    set: &'a Mutex<HashSet<String>>,
    id: String,
}

impl Drop for BusyGuard<'_> {
    fn drop(&mut self) {
        self.set.lock().expect("busy lock").remove(&self.id);
    }
}

pub struct ChatEngine {
    store: Arc<Store>,
    client: Arc<LlmClient>,
    catalog: Arc<PromptCatalog>,
    busy: Mutex<HashSet<String>>,
}

fn message(role: Role, text: String, intent: Option<Intent>, origin: Origin) -> ChatMessage {
    ChatMessage { seq: 0, role, text, intent, origin, retryable: false, classifier_fallback: false, created_at: Utc::now() }
}

impl ChatEngine {
    pub fn new(store: Arc<Store>, client: Arc<LlmClient>, catalog: Arc<PromptCatalog>) -> Self {
        ChatEngine { store, client, catalog, busy: Mutex::new(HashSet::new()) }
    }

    pub fn line_context(&self, project_id: &ProjectId, line_index: usize) -> Result<LineContext, ChatError> {
        let project = self.store.load_project(project_id)?;
        let (lyric, _) = self
            .store
            .load_timed_lyrics(project_id)
            .map_err(|e| match e {
                StoreError::NotFound(_) => ChatError::NotReady("lyrics have not been timed yet".into()),
                other => other.into(),
            })?;
        let line = lyric
            .lines
            .iter()
            .find(|l| l.index == line_index)
            .ok_or_else(|| ChatError::BadRequest(format!("line {line_index} does not exist ({} lines)", lyric.lines.len())))?;
        let annotation = self.store.load_annotations(project_id)?.into_iter().find(|a| a.line_index == line_index);
        let user_gloss = self.store.current_gloss(project_id, line_index)?.map(|g| g.raw);
        Ok(LineContext { song: SongContext::of(&project), line_index, lyric_line: line.text.clone(), annotation, user_gloss })
    }

    /// Challenge notes from the finished annotations, or from the inspection
    /// stage when later stages have not completed.
    pub fn challenge_notes(&self, project_id: &ProjectId) -> Result<Vec<ChallengeNote>, ChatError> {
        let annotations = self.store.load_annotations(project_id)?;
        if !annotations.is_empty() {
            return Ok(annotations.into_iter().map(|a| a.challenge).collect());
        }
        let Some((_, body)) = self.store.load_stage_artifact(project_id, Stage::InspectLines.name())? else {
            return Err(ChatError::NotReady("line inspection has not completed".into()));
        };
        let outputs: StageOutputs =
            serde_json::from_str(&body).map_err(|e| StoreError::Corrupt(format!("inspection artifact: {e}")))?;
        Ok(outputs.notes)
    }

    pub fn noteworthy_lines(&self, project_id: &ProjectId) -> Result<BTreeSet<usize>, ChatError> {
        Ok(self.challenge_notes(project_id)?.into_iter().filter(ChallengeNote::is_noteworthy).map(|n| n.line_index).collect())
    }

    pub fn suggest_inline(&self, project_id: &ProjectId, line_index: usize, partial: &str) -> Result<Vec<String>, ChatError> {
        let project = self.store.load_project(project_id)?;
        if project.status != ProjectStatus::Ready {
            return Err(ChatError::NotReady(format!("project is {}", project.status.as_str())));
        }
        let annotation = self
            .store
            .load_annotations(project_id)?
            .into_iter()
            .find(|a| a.line_index == line_index)
            .ok_or_else(|| ChatError::BadRequest(format!("line {line_index} has no annotation")))?;
        Ok(rank_suggestions(&annotation, partial))
    }

    fn acquire(&self, thread_id: &str) -> Result<BusyGuard<'_>, ChatError> {
        let mut set = self.busy.lock().expect("busy lock");
        if !set.insert(thread_id.to_string()) {
            return Err(ChatError::Busy(thread_id.to_string()));
        }
        Ok(BusyGuard { set: &self.busy, id: thread_id.to_string() })
    }

    /// Applies the persona limits to a generated reply. A reply with too
    /// many questions is regenerated once, then trimmed.
    fn polish(&self, exchange: &ChatExchange, key: &PromptKey, first: String, intent: Intent) -> String {
        let mut text = first.trim().to_string();
        if question_count(&text) > MAX_QUESTIONS {
            if let Ok(again) = self.client.complete_attempt(exchange, Some(key), 1) {
                text = again.trim().to_string();
            }
            if question_count(&text) > MAX_QUESTIONS {
                text = limit_questions(&text);
            }
        }
        if intent == Intent::Timing {
            text = strip_numbers(&text);
        }
        text
    }

    pub fn open_thread(&self, project_id: &ProjectId, line_index: usize, proactive: bool) -> Result<ChatThread, ChatError> {
        if let Some(t) = self.store.thread_for_line(project_id, line_index)? {
            return Err(ChatError::ThreadExists { line_index, thread_id: t.id });
        }
        let ctx = self.line_context(project_id, line_index)?;
        if !proactive {
            return Ok(self.store.create_thread(project_id, line_index, OpenedBy::User, None)?);
        }
        let note = self
            .challenge_notes(project_id)?
            .into_iter()
            .find(|n| n.line_index == line_index)
            .filter(ChallengeNote::is_noteworthy)
            .ok_or(ChatError::NotNoteworthy(line_index))?;
        let values = ctx.opener_values(&note);
        let system = self.catalog.render("proactive_opener", &values).map_err(|e| ChatError::BadRequest(e.to_string()))?;
        let exchange = ChatExchange::single(system, PROACTIVE_PROMPT, TemperatureClass::Creative);
        let key = PromptKey::new("proactive_opener", &values);
        let text = match self.client.complete(&exchange, Some(&key)) {
            Ok(raw) => self.polish(&exchange, &key, raw, Intent::Meaning),
            Err(_) => fallback_opener(&ctx.lyric_line, &note),
        };
        let opener = message(Role::Assistant, text, Some(Intent::Meaning), Origin::Proactive);
        Ok(self.store.create_thread(project_id, line_index, OpenedBy::Proactive, Some(opener))?)
    }

    fn classify(&self, ctx: &LineContext, text: &str) -> (Intent, bool) {
        let values = ctx.classifier_values(text);
        let Ok(system) = self.catalog.render("intent_classifier", &values) else {
            return (Intent::Meaning, true);
        };
        let exchange = ChatExchange::single(system, text, TemperatureClass::Deterministic);
        let key = PromptKey::new("intent_classifier", &values);
        match self.client.complete(&exchange, Some(&key)).ok().as_deref().and_then(parse_intent) {
            Some(i) => (i, false),
            None => (Intent::Meaning, true),
        }
    }

    /// Handles one user turn: picks the intent and template, sends the full
    /// thread history and persists both messages.
    pub fn send(&self, thread_id: &str, input: TurnInput) -> Result<TurnOutcome, ChatError> {
        let _guard = self.acquire(thread_id)?;
        let thread = self.store.load_thread(thread_id)?;
        let ctx = self.line_context(&ProjectId(thread.project_id.clone()), thread.line_index)?;

        let (text, intent, origin, fallback) = match input {
            TurnInput::Shortcut(intent) => (shortcut_text(intent).to_string(), intent, Origin::Shortcut, false),
            TurnInput::Manual(text) => {
                let text = text.trim().to_string();
                if text.is_empty() {
                    return Err(ChatError::BadRequest("message text is empty".into()));
                }
                let (intent, fallback) = self.classify(&ctx, &text);
                (text, intent, Origin::Manual, fallback)
            }
        };
        let mut user = message(Role::User, text.clone(), Some(intent), origin);
        user.classifier_fallback = fallback;

        let turn = thread.messages.iter().filter(|m| m.role == Role::User).count() + 1;
        let values = ctx.chat_values(&text, turn);
        let template = chat_template(intent, ctx.user_gloss.is_some());
        let system = self.catalog.render(template, &values).map_err(|e| ChatError::BadRequest(e.to_string()))?;

        let mut history = Vec::with_capacity(thread.messages.len() + 2);
        if thread.messages.first().is_some_and(|m| m.role == Role::Assistant) {
            history.push(Turn::user(PROACTIVE_PROMPT));
        }
        history.extend(thread.messages.iter().map(|m| Turn { role: m.role, text: m.text.clone() }));
        history.push(Turn::user(text));
        let exchange = ChatExchange::new(system, history, TemperatureClass::Creative)
            .map_err(|e| StoreError::Corrupt(format!("thread {thread_id}: {e}")))?;
        let key = PromptKey::new(template, &values);

        let reply = match self.client.complete(&exchange, Some(&key)) {
            Ok(raw) => message(Role::Assistant, self.polish(&exchange, &key, raw, intent), Some(intent), Origin::Reply),
            Err(LlmError::Provider(_) | LlmError::ValidationExhausted { .. } | LlmError::Template(_)) => {
                let mut m = message(Role::Assistant, APOLOGY.to_string(), Some(intent), Origin::Reply);
                m.retryable = true;
                m
            }
        };
        let mut saved = self.store.append_messages(thread_id, vec![user, reply])?;
        let reply = saved.pop().expect("two messages");
        let user = saved.pop().expect("two messages");
        Ok(TurnOutcome { user, reply })
    }
}

fn fallback_opener(line: &str, note: &ChallengeNote) -> String {
    let why = match note.kind {
        ChallengeKind::Poetic => "uses figurative language",
        ChallengeKind::Cultural => "leans on a cultural reference",
        ChallengeKind::Mismatch => "may not map directly onto signs",
        ChallengeKind::None => "is worth a closer look",
    };
    format!("The line \"{line}\" {why}: {} What do you think it is really saying?", note.summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::AltGlosses;

    #[test]
    fn sentence_split() {
        let s = split_sentences("Nice! What do you think?? Try it... ok");
        assert_eq!(s, vec!["Nice! ", "What do you think?? ", "Try it... ", "ok"]);
        assert_eq!(split_sentences("3.5 beats. Go"), vec!["3.5 beats. ", "Go"]);
        assert_eq!(split_sentences(""), Vec::<&str>::new());
    }

    #[test]
    fn question_limit() {
        let t = "Great start! Why butter? What is smooth? Where is the beat? Keep going.";
        assert_eq!(limit_questions(t), "Great start! Why butter? What is smooth? Keep going.");
        assert_eq!(limit_questions("A?? B? C."), "A?? C.");
        assert!(question_count(&limit_questions("???? a? b?")) <= MAX_QUESTIONS);
    }

    #[test]
    fn number_stripping() {
        assert_eq!(strip_numbers("Hold it for 2 beats. Then relax."), "Then relax.");
        assert_eq!(strip_numbers("Try 3 signs"), "Try signs");
        assert_eq!(strip_numbers("No numbers here."), "No numbers here.");
    }

    #[test]
    fn intent_parsing() {
        assert_eq!(parse_intent("Timing"), Some(Intent::Timing));
        assert_eq!(parse_intent("  glossing.\n"), Some(Intent::Glossing));
        assert_eq!(parse_intent("The topic is Emoting"), Some(Intent::Emoting));
        assert_eq!(parse_intent("no idea"), None);
    }

    #[test]
    fn template_routing() {
        for i in Intent::ALL {
            let (a, b) = (chat_template(i, false), chat_template(i, true));
            assert_eq!(a == b, i == Intent::Meaning);
        }
    }

    fn annotation() -> LineAnnotation {
        LineAnnotation {
            line_index: 0,
            challenge: ChallengeNote { line_index: 0, kind: ChallengeKind::None, summary: String::new(), needs_fingerspelling_hint: false },
            base_gloss: "SMOOTH LIKE BUTTER".into(),
            alt_glosses: AltGlosses { shorter: "SMOOTH BUTTER".into(), base_alt: "BUTTER SMOOTH SAME".into(), longer: "SMOOTH LIKE BUTTER [smile]".into() },
            mood_hashtags: vec!["#playful".into()],
            performance_guide: "Smile.".into(),
        }
    }

    #[test]
    fn suggestions() {
        let a = annotation();
        assert_eq!(rank_suggestions(&a, ""), vec!["BUTTER SMOOTH SAME", "SMOOTH BUTTER"]);
        let got = rank_suggestions(&a, "SMOOTH LIKE BUTTER");
        assert_eq!(got.len(), 2);
        assert!(!got.contains(&"SMOOTH LIKE BUTTER".to_string()));
        assert_eq!(got[0], "SMOOTH LIKE BUTTER [smile]");
        assert_eq!(rank_suggestions(&a, "SMOOTH BUT")[0], "SMOOTH BUTTER");
        // An unbalanced partial still ranks.
        assert_eq!(rank_suggestions(&a, "SMOOTH [smi").len(), 2);
    }
}
