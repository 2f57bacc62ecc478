use std::sync::Arc;

use elmi_core::alignment::{match_cues_to_lines, AlignConfig, AmbiguousWindow, MatchMethod};
use elmi_core::SubtitleCue;
use elmi_llm::{LlmClient, MockEntry, MockProvider, MockTable};
use elmi_studio::prompts::PromptCatalog;
use elmi_studio::timing::LlmLineFallback;

fn cue(index: usize, start_ms: u64, text: &str) -> SubtitleCue {
    SubtitleCue { index, start_ms, end_ms: start_ms + 1500, text: text.into() }
}

const LINES: [&str; 3] = ["Smooth like butter", "Like a criminal undercover", "Gon' pop like trouble"];

fn cues() -> Vec<SubtitleCue> {
    vec![cue(0, 1000, "Smooth like butter"), cue(1, 3000, "Comme un criminel sous couverture"), cue(2, 5000, "Gon' pop like trouble")]
}

fn window() -> AmbiguousWindow {
    AmbiguousWindow { lines: vec![(1, LINES[1].into())], cues: vec![(1, "Comme un criminel sous couverture".into())] }
}

fn fallback_client(reply: &str) -> LlmClient {
    let entry = MockEntry::new(LlmLineFallback::TEMPLATE, LlmLineFallback::values(&window()), vec![reply.into()]);
    LlmClient::new(Arc::new(MockProvider::new(MockTable { entries: vec![entry] }).unwrap()))
}

#[test]
fn llm_resolves_unmatched_window() {
    let client = fallback_client(r#"{"assignments":[{"line_index":1,"cue_indices":[1]}]}"#);
    let catalog = PromptCatalog::builtin();
    let fallback = LlmLineFallback { client: &client, catalog: &catalog };
    let matches = match_cues_to_lines(&cues(), &LINES, &AlignConfig::default(), Some(&fallback));
    assert_eq!(matches[1].method, MatchMethod::LlmFallback);
    assert_eq!(matches[1].cue_indices, vec![1]);
    assert_eq!(client.calls_for(LlmLineFallback::TEMPLATE), 1);
}

#[test]
fn out_of_window_answer_is_ignored() {
    let client = fallback_client(r#"{"assignments":[{"line_index":1,"cue_indices":[2]}]}"#);
    let catalog = PromptCatalog::builtin();
    let fallback = LlmLineFallback { client: &client, catalog: &catalog };
    let matches = match_cues_to_lines(&cues(), &LINES, &AlignConfig::default(), Some(&fallback));
    assert_eq!(matches[1].method, MatchMethod::Interpolated);
    assert_eq!(matches[2].cue_indices, vec![2]);
}

#[test]
fn without_fallback_line_is_interpolated() {
    let matches = match_cues_to_lines(&cues(), &LINES, &AlignConfig::default(), None);
    assert_eq!(matches[1].method, MatchMethod::Interpolated);
    assert!(matches[1].cue_indices.is_empty());
}
