//! Precision metrics, the synthetic corpus generator and method comparison.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::time::Instant;

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::corpus::{Sentence, Token};
use crate::error::{Error, Result};
use crate::features::FeatureConfig;
use crate::tagger::{train_tagger, LearnerConfig, Method, TaggerBundle};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Counts {
    pub total: usize,
    pub correct: usize,
}

impl Counts {
    /// `None` when there is nothing to count.
    pub fn precision(&self) -> Option<f64> {
        (self.total > 0).then(|| self.correct as f64 / self.total as f64)
    }

    fn add(&mut self, correct: bool) {
        self.total += 1;
        self.correct += usize::from(correct);
    }
}

/// Ambiguity is judged by the training lexicon: a word absent from it is
/// unknown, even if it would be ambiguous in the test data.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Metrics {
    pub ambiguous: Counts,
    pub unambiguous: Counts,
    pub unknown: Counts,
    pub all: Counts,
    /// `confusion[gold][predicted]` over the bundle's tag ids.
    pub confusion: Vec<Vec<u64>>,
    /// Test tokens whose gold tag never occurs in training.
    pub unseen_gold: usize,
}

impl Metrics {
    pub fn ambiguous_precision(&self) -> Option<f64> {
        self.ambiguous.precision()
    }

    pub fn all_words_precision(&self) -> Option<f64> {
        self.all.precision()
    }
}

pub fn evaluate(bundle: &TaggerBundle, test: &[Sentence]) -> Result<Metrics> {
    for (s, sentence) in test.iter().enumerate() {
        if let Some(tok) = sentence.tokens.iter().find(|t| t.tag.is_none()) {
            return Err(Error::MissingGoldTags {
                sentence: s,
                word: tok.word.clone(),
            });
        }
    }
    let n = bundle.tag_set.len();
    let mut m = Metrics {
        confusion: vec![vec![0; n]; n],
        ..Default::default()
    };
    let decisions = bundle.tag_corpus(test);
    for (sentence, decisions) in test.iter().zip(&decisions) {
        for (tok, d) in sentence.tokens.iter().zip(decisions) {
            let gold = tok.tag.as_deref().expect("checked above");
            let correct = bundle.tag_set.name(d.tag) == gold;
            match bundle.lexicon.candidates(&tok.word).map(<[_]>::len) {
                None => m.unknown.add(correct),
                Some(1) => m.unambiguous.add(correct),
                Some(_) => m.ambiguous.add(correct),
            }
            m.all.add(correct);
            match bundle.tag_set.lookup(gold) {
                Some(g) => m.confusion[g.index()][d.tag.index()] += 1,
                None => m.unseen_gold += 1,
            }
        }
    }
    Ok(m)
}

const TAG_NAMES: [&str; 12] = [
    "NOUN", "VERB", "ADJ", "ADV", "PRON", "DET", "ADP", "NUM", "CONJ", "AUX", "PROPN", "INTJ",
];

/// Tag given to cue words.
pub const CUE_TAG: &str = "PART";

const SYLLABLES: [&str; 16] = [
    "ka", "ki", "ku", "ma", "mi", "mu", "na", "ni", "nu", "pa", "pi", "po", "ra", "ri", "so", "ta",
];

/// Parameters of the generated corpus.
///
/// Sentences are sequences of slots. A slot holds either a filler word,
/// drawn from a content tag chosen uniformly and a Zipf distribution over
/// that tag's words, or (with probability `ambiguity_rate`, never twice in a
/// row) one of the ambiguous words. Each ambiguous word has candidate tags
/// drawn from the first `ambiguous_tag_pool` content tags, a designated
/// side (left or right), and an injective map from its candidates to cue
/// words. With probability `signal_strength` the cue for the true tag is
/// inserted on that side. Cue words are shared between ambiguous words with
/// different maps, so a cue only identifies the tag together with the word
/// it accompanies.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpusSpec {
    pub seed: u64,
    pub sentences: usize,
    /// Number of content tags.
    pub tags: usize,
    pub words_per_tag: usize,
    pub ambiguous_words: usize,
    pub ambiguous_tag_pool: usize,
    /// Each ambiguous word gets between 2 and this many candidates.
    pub max_candidates: usize,
    pub ambiguity_rate: f64,
    pub signal_strength: f64,
    pub cue_words: usize,
    /// Slot counts, before cue insertion.
    pub min_length: usize,
    pub max_length: usize,
    /// Draw the true tag of an ambiguous occurrence uniformly from its
    /// candidates instead of with weights `1, 1/2, 1/3, ...`.
    pub uniform_tag_distribution: bool,
}

impl Default for SyntheticCorpusSpec {
    fn default() -> Self {
        SyntheticCorpusSpec {
            seed: 42,
            sentences: 3000,
            tags: 12,
            words_per_tag: 40,
            ambiguous_words: 60,
            ambiguous_tag_pool: 4,
            max_candidates: 2,
            ambiguity_rate: 0.3,
            signal_strength: 0.9,
            cue_words: 4,
            min_length: 6,
            max_length: 16,
            uniform_tag_distribution: false,
        }
    }
}

impl SyntheticCorpusSpec {
    /// The comparison corpus: signal strength 0.9, and enough sentences
    /// that the default split leaves well over 5,000 ambiguous training
    /// tokens.
    pub fn benchmark(seed: u64) -> Self {
        SyntheticCorpusSpec {
            seed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::InvalidSpec(m.to_string()));
        if self.tags < 2 {
            return fail("need at least 2 content tags");
        }
        if self.words_per_tag == 0 {
            return fail("words_per_tag must be positive");
        }
        if self.max_candidates < 2 {
            return fail("max_candidates must be at least 2");
        }
        if self.ambiguous_tag_pool < self.max_candidates || self.ambiguous_tag_pool > self.tags {
            return fail("ambiguous_tag_pool must lie between max_candidates and tags");
        }
        if self.cue_words < self.max_candidates {
            return fail("cue_words must be at least max_candidates");
        }
        if !(0.0..=1.0).contains(&self.ambiguity_rate) || !(0.0..=1.0).contains(&self.signal_strength) {
            return fail("rates must lie in [0, 1]");
        }
        if self.ambiguity_rate > 0.0 && self.ambiguous_words == 0 {
            return fail("ambiguity_rate > 0 needs ambiguous words");
        }
        if self.min_length == 0 || self.min_length > self.max_length {
            return fail("need 1 <= min_length <= max_length");
        }
        Ok(())
    }
}

/// How one ambiguous word is signalled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CueRule {
    pub word: String,
    /// −1 or +1.
    pub offset: i32,
    /// `(tag, cue word)` for every candidate tag.
    pub cues: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub sentences: Vec<Sentence>,
    pub cue_rules: Vec<CueRule>,
}

fn synthetic_word(mut i: usize) -> String {
    // bijective base-16 over syllables, at least two syllables long
    i += SYLLABLES.len();
    let mut parts = Vec::new();
    loop {
        parts.push(SYLLABLES[i % SYLLABLES.len()]);
        if i < SYLLABLES.len() {
            break;
        }
        i = i / SYLLABLES.len() - 1;
    }
    parts.reverse();
    parts.concat()
}

fn content_tag(i: usize) -> String {
    TAG_NAMES.get(i).map_or_else(|| format!("T{i}"), |s| s.to_string())
}

struct Ambiguous {
    word: String,
    tags: Vec<usize>,
    weights: WeightedIndex<f64>,
    offset: i32,
    cue_of: Vec<usize>,
}

/// Same spec, same corpus.
pub fn generate_synthetic_corpus(spec: &SyntheticCorpusSpec) -> Result<SyntheticCorpus> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut next_name = 0;
    let mut name = || {
        next_name += 1;
        synthetic_word(next_name - 1)
    };

    let fillers: Vec<Vec<String>> = (0..spec.tags)
        .map(|_| (0..spec.words_per_tag).map(|_| name()).collect())
        .collect();
    let zipf = WeightedIndex::new((1..=spec.words_per_tag).map(|r| 1.0 / r as f64))
        .expect("positive weights");

    let mut ambiguous = Vec::with_capacity(spec.ambiguous_words);
    for _ in 0..spec.ambiguous_words {
        let k = rng.gen_range(2..=spec.max_candidates);
        let tags = rand::seq::index::sample(&mut rng, spec.ambiguous_tag_pool, k).into_vec();
        let cue_of = rand::seq::index::sample(&mut rng, spec.cue_words, k).into_vec();
        let weights = if spec.uniform_tag_distribution {
            WeightedIndex::new(vec![1.0; k])
        } else {
            WeightedIndex::new((1..=k).map(|r| 1.0 / r as f64))
        }
        .expect("positive weights");
        let offset = if rng.gen_bool(0.5) { -1 } else { 1 };
        ambiguous.push(Ambiguous {
            word: name(),
            tags,
            weights,
            offset,
            cue_of,
        });
    }
    let cues: Vec<String> = (0..spec.cue_words).map(|_| name()).collect();

    let mut sentences = Vec::with_capacity(spec.sentences);
    for _ in 0..spec.sentences {
        let len = rng.gen_range(spec.min_length..=spec.max_length);
        let mut tokens = Vec::with_capacity(len + 4);
        let mut previous_ambiguous = false;
        for _ in 0..len {
            if !previous_ambiguous && rng.gen_bool(spec.ambiguity_rate) {
                let a = &ambiguous[rng.gen_range(0..ambiguous.len())];
                let which = a.weights.sample(&mut rng);
                let word = Token::tagged(a.word.as_str(), content_tag(a.tags[which]));
                if rng.gen_bool(spec.signal_strength) {
                    let cue = Token::tagged(cues[a.cue_of[which]].as_str(), CUE_TAG);
                    if a.offset < 0 {
                        tokens.extend([cue, word]);
                    } else {
                        tokens.extend([word, cue]);
                    }
                } else {
                    tokens.push(word);
                }
                previous_ambiguous = true;
            } else {
                let t = rng.gen_range(0..spec.tags);
                let w = &fillers[t][zipf.sample(&mut rng)];
                tokens.push(Token::tagged(w.as_str(), content_tag(t)));
                previous_ambiguous = false;
            }
        }
        sentences.push(Sentence::new(tokens));
    }

    let cue_rules = ambiguous
        .iter()
        .map(|a| CueRule {
            word: a.word.clone(),
            offset: a.offset,
            cues: a
                .tags
                .iter()
                .zip(&a.cue_of)
                .map(|(&t, &c)| (content_tag(t), cues[c].clone()))
                .collect(),
        })
        .collect();
    Ok(SyntheticCorpus {
        sentences,
        cue_rules,
    })
}

/// Training share of the default split, 8,322 of 10,452.
pub const DEFAULT_TRAIN_FRACTION: f64 = 8322.0 / (8322.0 + 2130.0);

/// The first `round(len × train_fraction)` sentences train, the rest test.
pub fn split(sentences: &[Sentence], train_fraction: f64) -> (Vec<Sentence>, Vec<Sentence>) {
    let cut = (sentences.len() as f64 * train_fraction.clamp(0.0, 1.0)).round() as usize;
    (sentences[..cut].to_vec(), sentences[cut..].to_vec())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub method: Method,
    pub features: String,
    pub metrics: Metrics,
    pub seconds: f64,
}

#[derive(Serialize)]
struct Record<'a> {
    method: &'a str,
    name: &'a str,
    features: &'a str,
    ambiguous_precision: Option<f64>,
    all_words_precision: Option<f64>,
    ambiguous: Counts,
    unambiguous: Counts,
    unknown: Counts,
    all: Counts,
    #[serde(skip_serializing_if = "Option::is_none")]
    seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
}

fn percent(p: Option<f64>) -> String {
    p.map_or_else(|| "-".to_string(), |p| format!("{:.1}", 100.0 * p))
}

impl ComparisonReport {
    pub fn row(&self, method: Method, features: &str) -> Option<&ComparisonRow> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.features == features)
    }

    /// Aligned table, precisions in percent to one decimal. Wall time is
    /// left out unless asked for, so that reruns compare byte for byte.
    pub fn to_text(&self, timings: bool) -> String {
        let mut header = vec![
            "Method".to_string(),
            "Features".to_string(),
            "Ambiguous (%)".to_string(),
            "All words (%)".to_string(),
        ];
        if timings {
            header.push("Seconds".to_string());
        }
        let mut table = vec![header];
        for r in &self.rows {
            let mut cells = vec![
                r.method.display_name().to_string(),
                r.features.clone(),
                percent(r.metrics.ambiguous_precision()),
                percent(r.metrics.all_words_precision()),
            ];
            if timings {
                cells.push(format!("{:.2}", r.seconds));
            }
            table.push(cells);
        }
        let widths: Vec<usize> = (0..table[0].len())
            .map(|c| table.iter().map(|row| row[c].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for row in &table {
            let mut line = String::new();
            for (c, cell) in row.iter().enumerate() {
                if c > 0 {
                    line.push_str("  ");
                }
                if c < 2 {
                    let _ = write!(line, "{cell:<w$}", w = widths[c]);
                } else {
                    let _ = write!(line, "{cell:>w$}", w = widths[c]);
                }
            }
            out.push_str(line.trim_end());
            out.push('\n');
        }
        out
    }

    /// One JSON object per row, precisions unrounded.
    pub fn to_jsonl(&self, timings: bool) -> String {
        let mut out = String::new();
        for r in &self.rows {
            let rec = Record {
                method: r.method.as_str(),
                name: r.method.display_name(),
                features: &r.features,
                ambiguous_precision: r.metrics.ambiguous_precision(),
                all_words_precision: r.metrics.all_words_precision(),
                ambiguous: r.metrics.ambiguous,
                unambiguous: r.metrics.unambiguous,
                unknown: r.metrics.unknown,
                all: r.metrics.all,
                seconds: timings.then_some(r.seconds),
            };
            out.push_str(&serde_json::to_string(&rec).expect("plain record"));
            out.push('\n');
        }
        out
    }
}

/// Trains and evaluates every method under every feature configuration.
/// The baseline ignores features, so it only gets a row under the first
/// configuration.
pub fn run_comparison(
    training: &[Sentence],
    test: &[Sentence],
    methods: &[Method],
    feature_configs: &[FeatureConfig],
    learner_config: &LearnerConfig,
) -> Result<ComparisonReport> {
    let mut rows = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, fc) in feature_configs.iter().enumerate() {
        for &method in methods {
            if method == Method::Baseline && i > 0 {
                continue;
            }
            if !seen.insert((method.as_str(), fc.label())) {
                continue;
            }
            let start = Instant::now();
            let (bundle, _) = train_tagger(training, method, fc, learner_config)?;
            let metrics = evaluate(&bundle, test)?;
            rows.push(ComparisonRow {
                method,
                features: fc.label(),
                metrics,
                seconds: start.elapsed().as_secs_f64(),
            });
        }
    }
    Ok(ComparisonReport { rows })
}
