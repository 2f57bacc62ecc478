use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChallengeKind {
    Poetic,
    Cultural,
    Mismatch,
    None,
}

impl ChallengeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ChallengeKind::Poetic => "poetic",
            ChallengeKind::Cultural => "cultural",
            ChallengeKind::Mismatch => "mismatch",
            ChallengeKind::None => "none",
        }
    }
}

/// Line Inspector output for one line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChallengeNote {
    pub line_index: usize,
    pub kind: ChallengeKind,
    pub summary: String,
    pub needs_fingerspelling_hint: bool,
}

impl ChallengeNote {
    pub fn is_noteworthy(&self) -> bool {
        self.kind != ChallengeKind::None
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AltGlosses {
    pub shorter: String,
    pub base_alt: String,
    pub longer: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerformanceGuide {
    pub line_index: usize,
    pub mood_hashtags: Vec<String>,
    pub performance_guide: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineAnnotation {
    pub line_index: usize,
    pub challenge: ChallengeNote,
    pub base_gloss: String,
    pub alt_glosses: AltGlosses,
    pub mood_hashtags: Vec<String>,
    pub performance_guide: String,
}
