//! End-to-end tagging.
//!
//! Words with one candidate tag take it straight from the lexicon. Words
//! with several go to the learner, which sees the window features of the
//! position. Words missing from the lexicon get the global majority tag.
//! Learners are trained on ambiguous training positions only.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::corpus::{build_lexicon, partition_tokens, Lexicon, Sentence, TagId, TagSet};
use crate::decision::{Provenance, TagDecision};
use crate::decision_list::{train_decision_list, DecisionListConfig, DecisionListModel};
use crate::error::{Error, Result};
use crate::features::{build_vocabulary, extract, FeatureConfig, FeatureVector, FeatureVocabulary};
use crate::maxent::{train_gis, GisConfig, GisReport, MaxEntModel};
use crate::svm::{train_pairwise, PairwiseModel, PairwiseReport, SvmConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Baseline,
    DecisionList,
    MaxEnt,
    Svm,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Baseline, Method::DecisionList, Method::MaxEnt, Method::Svm];

    /// Identifier used on the command line and in model files.
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Baseline => "baseline",
            Method::DecisionList => "dlist",
            Method::MaxEnt => "maxent",
            Method::Svm => "svm",
        }
    }

    /// Name used in report tables.
    pub fn display_name(self) -> &'static str {
        match self {
            Method::Baseline => "Baseline method",
            Method::DecisionList => "Decision list",
            Method::MaxEnt => "Maximum entropy",
            Method::Svm => "Support vector machine",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::UnknownMethod(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LearnerConfig {
    pub decision_list: DecisionListConfig,
    pub gis: GisConfig,
    pub svm: SvmConfig,
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        self.gis.validate()?;
        self.svm.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Learner {
    /// Rank-1 candidate of the word.
    Baseline,
    DecisionList(DecisionListModel),
    MaxEnt(MaxEntModel),
    Svm(PairwiseModel),
}

impl Learner {
    pub fn method(&self) -> Method {
        match self {
            Learner::Baseline => Method::Baseline,
            Learner::DecisionList(_) => Method::DecisionList,
            Learner::MaxEnt(_) => Method::MaxEnt,
            Learner::Svm(_) => Method::Svm,
        }
    }
}

/// Everything needed to tag new text.
#[derive(Debug, Clone, PartialEq)]
pub struct TaggerBundle {
    pub lexicon: Lexicon,
    pub tag_set: TagSet,
    /// Empty for the baseline.
    pub vocabulary: FeatureVocabulary,
    pub feature_config: FeatureConfig,
    pub learner: Learner,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingReport {
    pub method: Method,
    /// Ambiguous training positions the learner saw.
    pub examples: usize,
    pub features: usize,
    pub gis: Option<GisReport>,
    pub svm: Option<PairwiseReport>,
}

/// Builds the lexicon from `training` and trains `method` on it.
pub fn train_tagger(
    training: &[Sentence],
    method: Method,
    feature_config: &FeatureConfig,
    learner_config: &LearnerConfig,
) -> Result<(TaggerBundle, TrainingReport)> {
    let (lexicon, tag_set) = build_lexicon(training)?;
    train_with_lexicon(training, lexicon, tag_set, method, feature_config, learner_config)
}

/// Like [`train_tagger`] with a lexicon supplied by the caller, for example
/// one extended by [`Lexicon::apply_override`].
pub fn train_with_lexicon(
    training: &[Sentence],
    lexicon: Lexicon,
    tag_set: TagSet,
    method: Method,
    feature_config: &FeatureConfig,
    learner_config: &LearnerConfig,
) -> Result<(TaggerBundle, TrainingReport)> {
    feature_config.validate()?;
    learner_config.validate()?;
    let ambiguous = partition_tokens(training, &lexicon).ambiguous.len();

    if method == Method::Baseline {
        let mut vocabulary = FeatureVocabulary::new();
        vocabulary.freeze();
        let bundle = TaggerBundle {
            lexicon,
            tag_set,
            vocabulary,
            feature_config: *feature_config,
            learner: Learner::Baseline,
        };
        let report = TrainingReport {
            method,
            examples: ambiguous,
            features: 0,
            gis: None,
            svm: None,
        };
        return Ok((bundle, report));
    }

    let vocabulary = build_vocabulary(training, &lexicon, feature_config)?;
    let examples = training_examples(training, &lexicon, &tag_set, &vocabulary, feature_config)?;
    let mut report = TrainingReport {
        method,
        examples: examples.len(),
        features: vocabulary.len(),
        gis: None,
        svm: None,
    };
    let learner = match method {
        Method::Baseline => unreachable!(),
        Method::DecisionList => Learner::DecisionList(train_decision_list(
            &examples,
            &tag_set,
            &learner_config.decision_list,
        )?),
        Method::MaxEnt => {
            let (model, gis) = train_gis(&examples, &tag_set, &learner_config.gis)?;
            report.gis = Some(gis);
            Learner::MaxEnt(model)
        }
        Method::Svm => {
            let (model, svm) = train_pairwise(&examples, &tag_set, &learner_config.svm)?;
            report.svm = Some(svm);
            Learner::Svm(model)
        }
    };
    let bundle = TaggerBundle {
        lexicon,
        tag_set,
        vocabulary,
        feature_config: *feature_config,
        learner,
    };
    Ok((bundle, report))
}

/// `(features, gold tag)` for every ambiguous position of `training`.
pub fn training_examples(
    training: &[Sentence],
    lexicon: &Lexicon,
    tag_set: &TagSet,
    vocabulary: &FeatureVocabulary,
    config: &FeatureConfig,
) -> Result<Vec<(FeatureVector, TagId)>> {
    partition_tokens(training, lexicon)
        .ambiguous
        .iter()
        .map(|pos| {
            let sentence = &training[pos.sentence];
            let token = &sentence.tokens[pos.token];
            let tag = token.tag.as_deref().ok_or_else(|| Error::MissingGoldTags {
                sentence: pos.sentence,
                word: token.word.clone(),
            })?;
            let tag = tag_set
                .lookup(tag)
                .ok_or_else(|| Error::UnknownTag(tag.to_string()))?;
            Ok((extract(sentence, pos.token, lexicon, vocabulary, config)?, tag))
        })
        .collect()
}

/// The most frequent training tag of `word`, or the global majority tag
/// for a word the lexicon does not know.
pub fn baseline_predict(lexicon: &Lexicon, word: &str) -> TagDecision {
    match lexicon.candidates(word) {
        None => TagDecision::new(lexicon.majority_tag(), Provenance::Fallback),
        Some([only]) => TagDecision::new(only.tag, Provenance::Dictionary),
        Some(c) => TagDecision::new(c[0].tag, Provenance::Learner),
    }
}

impl TaggerBundle {
    pub fn method(&self) -> Method {
        self.learner.method()
    }

    /// One decision per token. Neighbor features always come from candidate
    /// sets, so every position is tagged independently.
    pub fn tag_sentence(&self, sentence: &Sentence) -> Vec<TagDecision> {
        (0..sentence.len())
            .map(|i| self.tag_position(sentence, i))
            .collect()
    }

    /// Tags many sentences in parallel; output order matches input order.
    pub fn tag_corpus(&self, sentences: &[Sentence]) -> Vec<Vec<TagDecision>> {
        sentences.par_iter().map(|s| self.tag_sentence(s)).collect()
    }

    fn tag_position(&self, sentence: &Sentence, position: usize) -> TagDecision {
        let word = &sentence.tokens[position].word;
        let decision = baseline_predict(&self.lexicon, word);
        if decision.provenance != Provenance::Learner {
            return decision;
        }
        let context = || {
            extract(sentence, position, &self.lexicon, &self.vocabulary, &self.feature_config)
                .expect("position is within the sentence")
        };
        match &self.learner {
            Learner::Baseline => decision,
            Learner::DecisionList(m) => m.predict(&context()),
            Learner::MaxEnt(m) => m.predict(&context()),
            Learner::Svm(m) => m.predict(&context()),
        }
    }

    /// `word<TAB>tag<TAB>provenance` lines with a blank line after each
    /// sentence.
    pub fn format_tagged(&self, sentences: &[Sentence], decisions: &[Vec<TagDecision>]) -> String {
        let mut out = String::new();
        for (s, d) in sentences.iter().zip(decisions) {
            for (tok, dec) in s.tokens.iter().zip(d) {
                out.push_str(&tok.word);
                out.push('\t');
                out.push_str(self.tag_set.name(dec.tag));
                out.push('\t');
                out.push_str(dec.provenance.as_str());
                out.push('\n');
            }
            out.push('\n');
        }
        out
    }
}
