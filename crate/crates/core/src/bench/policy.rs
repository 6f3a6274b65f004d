use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::agent::{Behavior, FilterMode};
use crate::conformal::Thresholds;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    Commcp,
    /// Frontier exploration only: no semantic values, no communication.
    Mmfbe,
    /// Semantic exploration without communication.
    Mmeuc,
    /// Every A/B pair is reported.
    NoCp,
    /// Random objects, as many as the conformal filter passes.
    ComControl,
    NoAnswerSharing,
}

impl Policy {
    pub const ALL: [Policy; 6] = [
        Policy::Commcp,
        Policy::Mmfbe,
        Policy::Mmeuc,
        Policy::NoCp,
        Policy::ComControl,
        Policy::NoAnswerSharing,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Policy::Commcp => "commcp",
            Policy::Mmfbe => "mmfbe",
            Policy::Mmeuc => "mmeuc",
            Policy::NoCp => "no_cp",
            Policy::ComControl => "com_control",
            Policy::NoAnswerSharing => "no_answer_sharing",
        }
    }

    pub fn behavior(self, thresholds: Thresholds) -> Behavior {
        let full = Behavior {
            semantic_map: true,
            comms: true,
            filter: FilterMode::Conformal(thresholds),
            answer_sharing: true,
        };
        match self {
            Policy::Commcp => full,
            Policy::Mmfbe => Behavior {
                semantic_map: false,
                comms: false,
                answer_sharing: false,
                ..full
            },
            Policy::Mmeuc => Behavior {
                comms: false,
                answer_sharing: false,
                ..full
            },
            Policy::NoCp => Behavior {
                filter: FilterMode::PassAll,
                ..full
            },
            Policy::ComControl => Behavior {
                filter: FilterMode::CardinalityMatched(thresholds),
                ..full
            },
            Policy::NoAnswerSharing => Behavior {
                answer_sharing: false,
                ..full
            },
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Policy::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown policy {s:?}"))
    }
}
