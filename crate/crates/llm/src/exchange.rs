use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Turns kept verbatim when a history is sent to a provider.
pub const HISTORY_WINDOW: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    User,
    Assistant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TemperatureClass {
    Deterministic,
    Creative,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub role: Role,
    pub text: String,
}

impl Turn {
    pub fn user(text: impl Into<String>) -> Self {
        Turn { role: Role::User, text: text.into() }
    }

    pub fn assistant(text: impl Into<String>) -> Self {
        Turn { role: Role::Assistant, text: text.into() }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("history turn {index} has role {found:?}; turns must alternate starting with user")]
pub struct AlternationError {
    pub index: usize,
    pub found: Role,
}

/// A system prompt plus an alternating user/assistant history.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatExchange {
    pub system: String,
    history: Vec<Turn>,
    pub temperature: TemperatureClass,
}

/// Wire-level message, including the system role.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireMessage {
    pub role: String,
    pub content: String,
}

fn check_alternation(history: &[Turn]) -> Result<(), AlternationError> {
    for (index, turn) in history.iter().enumerate() {
        let expected = if index % 2 == 0 { Role::User } else { Role::Assistant };
        if turn.role != expected {
            return Err(AlternationError { index, found: turn.role });
        }
    }
    Ok(())
}

impl ChatExchange {
    pub fn new(system: impl Into<String>, history: Vec<Turn>, temperature: TemperatureClass) -> Result<Self, AlternationError> {
        check_alternation(&history)?;
        Ok(ChatExchange { system: system.into(), history, temperature })
    }

    /// A single-question exchange.
    pub fn single(system: impl Into<String>, user: impl Into<String>, temperature: TemperatureClass) -> Self {
        ChatExchange { system: system.into(), history: vec![Turn::user(user)], temperature }
    }

    pub fn history(&self) -> &[Turn] {
        &self.history
    }

    pub fn push(&mut self, turn: Turn) -> Result<(), AlternationError> {
        let expected = if self.history.len().is_multiple_of(2) { Role::User } else { Role::Assistant };
        if turn.role != expected {
            return Err(AlternationError { index: self.history.len(), found: turn.role });
        }
        self.history.push(turn);
        Ok(())
    }

    /// The history as sent to a provider. Histories longer than
    /// [`HISTORY_WINDOW`] keep their most recent turns; the dropped prefix is
    /// folded into one synthetic user turn placed first. When the window
    /// would begin with a user turn, that turn is folded too so roles still
    /// alternate.
    pub fn windowed_history(&self) -> Vec<Turn> {
        if self.history.len() <= HISTORY_WINDOW {
            return self.history.clone();
        }
        let mut cut = self.history.len() - HISTORY_WINDOW;
        if self.history[cut].role == Role::User {
            cut += 1;
        }
        let mut out = vec![Turn::user(summarize(&self.history[..cut]))];
        out.extend_from_slice(&self.history[cut..]);
        out
    }

    pub fn to_wire(&self) -> Vec<WireMessage> {
        let mut out = vec![WireMessage { role: "system".into(), content: self.system.clone() }];
        out.extend(self.windowed_history().into_iter().map(|t| WireMessage {
            role: match t.role {
                Role::User => "user".into(),
                Role::Assistant => "assistant".into(),
            },
            content: t.text,
        }));
        out
    }
}

const SUMMARY_SNIPPET_CHARS: usize = 120;

/// Mechanical digest of older turns: each turn's opening words, in order.
fn summarize(turns: &[Turn]) -> String {
    let mut out = format!("(Summary of {} earlier messages in this thread)", turns.len());
    for t in turns {
        let who = match t.role {
            Role::User => "User",
            Role::Assistant => "You",
        };
        let snippet: String = t.text.split_whitespace().collect::<Vec<_>>().join(" ");
        let snippet: String = if snippet.chars().count() > SUMMARY_SNIPPET_CHARS {
            snippet.chars().take(SUMMARY_SNIPPET_CHARS).chain("...".chars()).collect()
        } else {
            snippet
        };
        out.push_str(&format!("\n- {who}: {snippet}"));
    }
    out
}
