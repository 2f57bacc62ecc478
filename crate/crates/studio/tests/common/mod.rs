#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use elmi_core::ProjectId;
use elmi_llm::{LlmClient, MockProvider};
use elmi_studio::app::{fixture_mock_provider, NewProject, Sources, Studio};
use elmi_studio::store::Store;
use elmi_studio::synth::{ChatScript, Truth};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn song_dir() -> PathBuf {
    fixtures().join("bts-butter")
}

pub fn truth() -> Truth {
    serde_json::from_str(&std::fs::read_to_string(song_dir().join("truth.json")).unwrap()).unwrap()
}

pub fn script() -> ChatScript {
    serde_json::from_str(&std::fs::read_to_string(song_dir().join("chat_script.json")).unwrap()).unwrap()
}

pub fn provider() -> MockProvider {
    fixture_mock_provider(&fixtures()).unwrap()
}

pub fn studio_with(provider: MockProvider, store: Arc<Store>) -> Studio {
    Studio::new(store, Arc::new(LlmClient::new(Arc::new(provider))), Sources::fixtures(fixtures()))
}

pub fn studio() -> Studio {
    studio_with(provider(), Arc::new(Store::open_in_memory().unwrap()))
}

pub fn butter_request() -> NewProject {
    let persona = script().persona;
    NewProject {
        title: "Butter".into(),
        artist: "BTS".into(),
        sign_language: persona.sign_language,
        nickname: persona.nickname,
        proficiency: Some(persona.proficiency),
    }
}

/// A processed project.
pub fn ready_project(studio: &Studio) -> ProjectId {
    let project = studio.create_project(&butter_request()).unwrap();
    studio.process(&project.id).unwrap();
    project.id
}

/// Plays a scripted thread against a ready project and returns every turn.
pub fn play_thread(
    studio: &Studio,
    id: &ProjectId,
    thread: &elmi_studio::synth::ScriptThread,
) -> (elmi_studio::records::ChatThread, Vec<elmi_studio::chat::TurnOutcome>) {
    use elmi_studio::chat::TurnInput;
    let (opened, created) = studio.open_thread(id, thread.line_index, thread.proactive).unwrap();
    assert!(created);
    let mut turns = Vec::new();
    for step in &thread.steps {
        if let Some(g) = &step.set_gloss {
            let current = studio.store.current_gloss(id, thread.line_index).unwrap().map_or(0, |g| g.version);
            studio.put_gloss(id, thread.line_index, g, current).unwrap();
            continue;
        }
        let input = match (&step.shortcut, &step.manual) {
            (Some(i), _) => TurnInput::Shortcut(*i),
            (None, Some(text)) => TurnInput::Manual(text.clone()),
            (None, None) => panic!("empty step"),
        };
        turns.push(studio.send_message(&opened.id, input).unwrap());
    }
    (studio.store.load_thread(&opened.id).unwrap(), turns)
}
