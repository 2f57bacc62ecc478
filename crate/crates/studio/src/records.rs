use chrono::{DateTime, Utc};
use elmi_llm::Role;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Intent {
    Meaning,
    Glossing,
    Emoting,
    Timing,
}

impl Intent {
    pub const ALL: [Intent; 4] = [Intent::Meaning, Intent::Glossing, Intent::Emoting, Intent::Timing];

    pub fn as_str(self) -> &'static str {
        match self {
            Intent::Meaning => "Meaning",
            Intent::Glossing => "Glossing",
            Intent::Emoting => "Emoting",
            Intent::Timing => "Timing",
        }
    }
}

impl std::str::FromStr for Intent {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Intent::ALL
            .into_iter()
            .find(|i| i.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown intent {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Shortcut,
    Manual,
    Proactive,
    Reply,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OpenedBy {
    User,
    Proactive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub seq: u32,
    pub role: Role,
    pub text: String,
    pub intent: Option<Intent>,
    pub origin: Origin,
    /// Canned reply after a provider failure; the user may resend.
    #[serde(default)]
    pub retryable: bool,
    /// Intent defaulted to Meaning because classification failed.
    #[serde(default)]
    pub classifier_fallback: bool,
    pub created_at: DateTime<Utc>,
}

impl ChatMessage {
    pub fn origin_consistent(&self) -> bool {
        match self.role {
            Role::User => matches!(self.origin, Origin::Shortcut | Origin::Manual),
            Role::Assistant => matches!(self.origin, Origin::Proactive | Origin::Reply),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatThread {
    pub id: String,
    pub project_id: String,
    pub line_index: usize,
    pub opened_by: OpenedBy,
    pub messages: Vec<ChatMessage>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobKind {
    Alignment,
    Preprocess,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobStatus {
    Pending,
    Running,
    Done,
    Failed,
}

impl JobStatus {
    pub fn can_transition_to(self, next: JobStatus) -> bool {
        matches!(
            (self, next),
            (JobStatus::Pending, JobStatus::Running) | (JobStatus::Running, JobStatus::Done) | (JobStatus::Running, JobStatus::Failed)
        )
    }

    pub fn is_finished(self) -> bool {
        matches!(self, JobStatus::Done | JobStatus::Failed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobRecord {
    pub id: i64,
    pub project_id: String,
    pub kind: JobKind,
    pub status: JobStatus,
    pub stage: Option<String>,
    pub error: Option<String>,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
}
