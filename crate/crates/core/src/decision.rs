use std::fmt;

use crate::corpus::TagId;

/// Where a tag came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    /// The word has exactly one candidate tag.
    Dictionary,
    /// A trained classifier picked the tag.
    Learner,
    /// Nothing applied; the global majority (or a learner's default) was used.
    Fallback,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Dictionary => "dictionary",
            Provenance::Learner => "learner",
            Provenance::Fallback => "fallback",
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TagDecision {
    pub tag: TagId,
    pub provenance: Provenance,
    /// Per-tag scores indexed by tag id, when the learner produces them:
    /// probabilities for the decision list and maximum entropy, vote counts
    /// for the pairwise SVM.
    pub scores: Option<Vec<f64>>,
}

impl TagDecision {
    pub fn new(tag: TagId, provenance: Provenance) -> Self {
        TagDecision {
            tag,
            provenance,
            scores: None,
        }
    }

    pub fn with_scores(mut self, scores: Vec<f64>) -> Self {
        self.scores = Some(scores);
        self
    }
}
