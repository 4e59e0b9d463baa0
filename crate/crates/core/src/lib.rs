//! Part-of-speech tagging with three learners over sparse binary window
//! features: a decision list, a conditional maximum-entropy model trained
//! by generalized iterative scaling, and pairwise polynomial-kernel SVMs
//! trained by sequential minimal optimization.
//!
//! ```
//! use seqtag::corpus::Sentence;
//! use seqtag::features::FeatureConfig;
//! use seqtag::tagger::{train_tagger, Method};
//!
//! let training = vec![
//!     Sentence::from_pairs([("they", "PRON"), ("run", "VERB"), ("fast", "ADV")]),
//!     Sentence::from_pairs([("a", "DET"), ("run", "NOUN"), ("ended", "VERB")]),
//! ];
//! let (bundle, _) =
//!     train_tagger(&training, Method::DecisionList, &FeatureConfig::default(), &Default::default())?;
//! let tags = bundle.tag_sentence(&Sentence::from_words(["a", "run"]));
//! assert_eq!(bundle.tag_set.name(tags[1].tag), "NOUN");
//! # Ok::<(), seqtag::Error>(())
//! ```

pub mod bundle;
pub mod corpus;
pub mod decision;
pub mod decision_list;
mod error;
pub mod eval;
pub mod features;
pub mod maxent;
pub mod svm;
pub mod tagger;
mod textio;

pub use decision::{Provenance, TagDecision};
pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/corpus.md")]
    mod corpus {}
    #[doc = include_str!("../../../book/src/features.md")]
    mod features {}
    #[doc = include_str!("../../../book/src/learners.md")]
    mod learners {}
    #[doc = include_str!("../../../book/src/tagging.md")]
    mod tagging {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
