//! Single-file model format.
//!
//! ```text
//! seqtag-bundle<TAB>1
//! method<TAB>svm
//! window / use_pos / use_pos_order / use_word lines
//! tags<TAB>N, then N lines `name<TAB>global count`
//! lexicon<TAB>M, then M lines `word<TAB>tag_id:count,...` in rank order
//! vocabulary<TAB>K, then K feature lines
//! learner block for the method
//! end
//! ```

use std::collections::HashMap;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::corpus::{Candidate, Lexicon, TagId, TagSet};
use crate::decision_list::DecisionListModel;
use crate::error::{Error, Result};
use crate::features::{FeatureConfig, FeatureVocabulary};
use crate::maxent::MaxEntModel;
use crate::svm::PairwiseModel;
use crate::tagger::{Learner, Method, TaggerBundle};
use crate::textio::{field, parse_bool, LineReader};

pub const FORMAT_MAGIC: &str = "seqtag-bundle";
pub const FORMAT_VERSION: u32 = 1;

pub fn save_bundle<W: Write>(bundle: &TaggerBundle, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{FORMAT_MAGIC}\t{FORMAT_VERSION}")?;
    writeln!(out, "method\t{}", bundle.method())?;
    let fc = &bundle.feature_config;
    writeln!(out, "window\t{}", fc.window)?;
    writeln!(out, "use_pos\t{}", fc.use_pos)?;
    writeln!(out, "use_pos_order\t{}", fc.use_pos_order)?;
    writeln!(out, "use_word\t{}", fc.use_word)?;

    let counts = bundle.lexicon.global_tag_counts();
    writeln!(out, "tags\t{}", bundle.tag_set.len())?;
    for id in bundle.tag_set.ids() {
        writeln!(out, "{}\t{}", bundle.tag_set.name(id), counts[id.index()])?;
    }

    writeln!(out, "lexicon\t{}", bundle.lexicon.len())?;
    for (word, cands) in bundle.lexicon.iter_sorted() {
        let list: Vec<String> = cands.iter().map(|c| format!("{}:{}", c.tag, c.count)).collect();
        writeln!(out, "{word}\t{}", list.join(","))?;
    }

    writeln!(out, "vocabulary\t{}", bundle.vocabulary.len())?;
    bundle.vocabulary.write_to(&mut out, &bundle.tag_set)?;

    match &bundle.learner {
        Learner::Baseline => {}
        Learner::DecisionList(m) => m.write_to(&mut out)?,
        Learner::MaxEnt(m) => m.write_to(&mut out)?,
        Learner::Svm(m) => m.write_to(&mut out)?,
    }
    writeln!(out, "end")
}

pub fn load_bundle<R: Read>(mut input: R) -> Result<TaggerBundle> {
    let mut text = String::new();
    input
        .read_to_string(&mut text)
        .map_err(|e| match e.kind() {
            std::io::ErrorKind::InvalidData => Error::corrupt("header", "file is not UTF-8"),
            _ => Error::Io(e),
        })?;
    parse_bundle(&text)
}

pub fn save_bundle_file(bundle: &TaggerBundle, path: impl AsRef<Path>) -> Result<()> {
    let mut buf = Vec::new();
    save_bundle(bundle, &mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn load_bundle_file(path: impl AsRef<Path>) -> Result<TaggerBundle> {
    load_bundle(fs::File::open(path)?)
}

fn parse_bundle(text: &str) -> Result<TaggerBundle> {
    let mut r = LineReader::new(text);

    let version: u32 = r
        .value("header", FORMAT_MAGIC)
        .map_err(|_| Error::corrupt("header", "not a seqtag bundle"))?
        .parse()
        .map_err(|_| Error::corrupt("header", "bad version"))?;
    if version != FORMAT_VERSION {
        return Err(Error::FormatVersionMismatch {
            found: version,
            supported: FORMAT_VERSION,
        });
    }

    const CFG: &str = "config";
    let method: Method = r
        .value(CFG, "method")?
        .parse()
        .map_err(|e: Error| Error::corrupt(CFG, e.to_string()))?;
    let feature_config = FeatureConfig {
        window: r.parsed(CFG, "window")?,
        use_pos: parse_bool(CFG, r.value(CFG, "use_pos")?)?,
        use_pos_order: parse_bool(CFG, r.value(CFG, "use_pos_order")?)?,
        use_word: parse_bool(CFG, r.value(CFG, "use_word")?)?,
    };
    feature_config
        .validate()
        .map_err(|e| Error::corrupt(CFG, e.to_string()))?;

    const TAGS: &str = "tags";
    let n_tags: usize = r.parsed(TAGS, "tags")?;
    let mut names = Vec::with_capacity(n_tags);
    let mut counts = Vec::with_capacity(n_tags);
    for _ in 0..n_tags {
        let line = r.next_line(TAGS)?;
        let mut cols = line.split('\t');
        let name = cols.next().filter(|n| !n.is_empty());
        let name = name.ok_or_else(|| Error::corrupt(TAGS, format!("bad line `{line}`")))?;
        names.push(name.to_string());
        counts.push(field::<u64>(TAGS, line, cols.next())?);
    }
    let tag_set = TagSet::from_names(names.iter());
    if tag_set.names() != names.as_slice() {
        return Err(Error::corrupt(TAGS, "tags not sorted and distinct"));
    }

    const LEX: &str = "lexicon";
    let n_words: usize = r.parsed(LEX, "lexicon")?;
    let mut entries = HashMap::with_capacity(n_words);
    for _ in 0..n_words {
        let line = r.next_line(LEX)?;
        let bad = || Error::corrupt(LEX, format!("bad line `{line}`"));
        let (word, list) = line.split_once('\t').ok_or_else(bad)?;
        let cands = list
            .split(',')
            .map(|item| {
                let (t, c) = item.split_once(':')?;
                let tag = TagId(t.parse().ok()?);
                (tag.index() < n_tags).then_some(())?;
                Some(Candidate {
                    tag,
                    count: c.parse().ok()?,
                })
            })
            .collect::<Option<Vec<_>>>()
            .ok_or_else(bad)?;
        if word.is_empty() || entries.insert(word.to_string(), cands).is_some() {
            return Err(bad());
        }
    }
    let lexicon = Lexicon::from_parts(entries, counts);

    const VOCAB: &str = "vocabulary";
    let n_features: usize = r.parsed(VOCAB, "vocabulary")?;
    let mut vocabulary = FeatureVocabulary::new();
    for _ in 0..n_features {
        vocabulary.push_line(r.next_line(VOCAB)?, &tag_set)?;
    }
    vocabulary.freeze();

    let learner = match method {
        Method::Baseline => Learner::Baseline,
        Method::DecisionList => Learner::DecisionList(DecisionListModel::read_from(&mut r)?),
        Method::MaxEnt => Learner::MaxEnt(MaxEntModel::read_from(&mut r)?),
        Method::Svm => Learner::Svm(PairwiseModel::read_from(&mut r)?),
    };
    let learner_tags = match &learner {
        Learner::Baseline => n_tags,
        Learner::DecisionList(m) => m.tag_count(),
        Learner::MaxEnt(m) => m.tag_count(),
        Learner::Svm(m) => m.tag_count(),
    };
    if learner_tags != n_tags {
        return Err(Error::corrupt(method.as_str(), "tag count disagrees with the tag section"));
    }
    r.expect("end", "end")?;

    Ok(TaggerBundle {
        lexicon,
        tag_set,
        vocabulary,
        feature_config,
        learner,
    })
}
