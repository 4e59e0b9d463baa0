//! Tagged corpora, the tag inventory and the candidate-tag lexicon.
//!
//! Two plain-text formats are understood:
//!
//! * `tab-tagged`: one `word<TAB>tag` pair per line, sentences separated by
//!   a blank line, `#` lines are comments.
//! * `tab-words`: one word per line with the same sentence and comment
//!   conventions. Anything after a tab is ignored, so a tagged file can be
//!   fed to the tagger as raw input.
//!
//! The lexicon is built from training data only. Each word maps to its
//! candidate tags ordered by descending training count, ties broken by the
//! tag name, and the 1-based position in that list is the candidate's rank.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense tag identifier, contiguous from 0 within a [`TagSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TagId(pub u32);

impl TagId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for TagId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// The tag inventory. Ids follow ascending tag name, so comparing ids
/// orders tags by name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagSet {
    tags: Vec<String>,
    index: HashMap<String, TagId>,
}

impl TagSet {
    pub fn from_names<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut tags: Vec<String> = names.into_iter().map(Into::into).collect();
        tags.sort();
        tags.dedup();
        let index = tags
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), TagId(i as u32)))
            .collect();
        TagSet { tags, index }
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn lookup(&self, name: &str) -> Option<TagId> {
        self.index.get(name).copied()
    }

    /// # Panics
    ///
    /// Panics if `id` does not belong to this set.
    pub fn name(&self, id: TagId) -> &str {
        &self.tags[id.index()]
    }

    pub fn ids(&self) -> impl Iterator<Item = TagId> {
        (0..self.tags.len() as u32).map(TagId)
    }

    pub fn names(&self) -> &[String] {
        &self.tags
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub word: String,
    /// Gold tag name; absent for raw tagging input.
    pub tag: Option<String>,
}

impl Token {
    pub fn tagged(word: impl Into<String>, tag: impl Into<String>) -> Self {
        Token {
            word: word.into(),
            tag: Some(tag.into()),
        }
    }

    pub fn raw(word: impl Into<String>) -> Self {
        Token {
            word: word.into(),
            tag: None,
        }
    }
}

/// A non-empty sequence of tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub tokens: Vec<Token>,
}

impl Sentence {
    pub fn new(tokens: Vec<Token>) -> Self {
        debug_assert!(!tokens.is_empty(), "sentences are non-empty");
        Sentence { tokens }
    }

    /// Builds a tagged sentence from `(word, tag)` pairs.
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        Sentence::new(pairs.into_iter().map(|(w, t)| Token::tagged(w, t)).collect())
    }

    /// Builds an untagged sentence from words.
    pub fn from_words<'a>(words: impl IntoIterator<Item = &'a str>) -> Self {
        Sentence::new(words.into_iter().map(Token::raw).collect())
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    TabTagged,
    TabWords,
}

impl FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tab-tagged" => Ok(CorpusFormat::TabTagged),
            "tab-words" => Ok(CorpusFormat::TabWords),
            other => Err(Error::InvalidConfig(format!("unknown corpus format `{other}`"))),
        }
    }
}

/// Reads sentences in file order. Runs of blank lines are a single
/// separator, so no empty sentence is ever produced.
pub fn load_corpus<R: BufRead>(reader: R, format: CorpusFormat) -> Result<Vec<Sentence>> {
    let mut sentences = Vec::new();
    let mut current = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        let line_no = i + 1;
        if line.trim().is_empty() {
            if !current.is_empty() {
                sentences.push(Sentence::new(std::mem::take(&mut current)));
            }
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let token = match format {
            CorpusFormat::TabTagged => {
                let (word, tag) = line.split_once('\t').ok_or(Error::MalformedLine(line_no))?;
                if word.is_empty() || tag.is_empty() || tag.contains('\t') {
                    return Err(Error::MalformedLine(line_no));
                }
                Token::tagged(word, tag)
            }
            CorpusFormat::TabWords => {
                let word = line.split('\t').next().unwrap_or_default();
                if word.is_empty() {
                    return Err(Error::MalformedLine(line_no));
                }
                Token::raw(word)
            }
        };
        current.push(token);
    }
    if !current.is_empty() {
        sentences.push(Sentence::new(current));
    }
    Ok(sentences)
}

/// Writes sentences back out; tokens with a tag are written `word<TAB>tag`,
/// untagged tokens as the bare word.
pub fn write_corpus<W: Write>(mut out: W, sentences: &[Sentence]) -> std::io::Result<()> {
    for (i, sentence) in sentences.iter().enumerate() {
        if i > 0 {
            writeln!(out)?;
        }
        for token in &sentence.tokens {
            match &token.tag {
                Some(tag) => writeln!(out, "{}\t{}", token.word, tag)?,
                None => writeln!(out, "{}", token.word)?,
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Candidate {
    pub tag: TagId,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    entries: HashMap<String, Vec<Candidate>>,
    global_tag_counts: Vec<u64>,
}

impl Lexicon {
    pub(crate) fn from_parts(
        entries: HashMap<String, Vec<Candidate>>,
        global_tag_counts: Vec<u64>,
    ) -> Self {
        Lexicon {
            entries,
            global_tag_counts,
        }
    }

    /// Candidates in rank order, or `None` for a word never seen in training.
    pub fn candidates(&self, word: &str) -> Option<&[Candidate]> {
        self.entries.get(word).map(Vec::as_slice)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains_key(word)
    }

    pub fn is_ambiguous(&self, word: &str) -> bool {
        self.candidates(word).is_some_and(|c| c.len() > 1)
    }

    /// 1-based rank of `tag` among the candidates of `word`.
    pub fn rank(&self, word: &str, tag: TagId) -> Option<usize> {
        self.candidates(word)?
            .iter()
            .position(|c| c.tag == tag)
            .map(|p| p + 1)
    }

    pub fn global_tag_counts(&self) -> &[u64] {
        &self.global_tag_counts
    }

    /// Most frequent tag over the whole training corpus; ties go to the
    /// lower tag id.
    pub fn majority_tag(&self) -> TagId {
        let mut best = 0;
        for (i, &c) in self.global_tag_counts.iter().enumerate() {
            if c > self.global_tag_counts[best] {
                best = i;
            }
        }
        TagId(best as u32)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries in ascending word order.
    pub fn iter_sorted(&self) -> impl Iterator<Item = (&str, &[Candidate])> {
        let sorted: BTreeMap<&str, &[Candidate]> = self
            .entries
            .iter()
            .map(|(w, c)| (w.as_str(), c.as_slice()))
            .collect();
        sorted.into_iter()
    }

    /// Replaces the candidate lists of the words named in an override file
    /// (`word<TAB>tag1,tag2,...`). The listed order becomes the rank order;
    /// counts are carried over from training where the pair was observed.
    pub fn apply_override<R: BufRead>(&mut self, reader: R, tags: &TagSet) -> Result<usize> {
        let mut replaced = 0;
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (word, list) = line.split_once('\t').ok_or(Error::MalformedLine(i + 1))?;
            if word.is_empty() {
                return Err(Error::MalformedLine(i + 1));
            }
            let mut candidates = Vec::new();
            for name in list.split(',').map(str::trim).filter(|n| !n.is_empty()) {
                let tag = tags
                    .lookup(name)
                    .ok_or_else(|| Error::UnknownTag(name.to_string()))?;
                if candidates.iter().any(|c: &Candidate| c.tag == tag) {
                    continue;
                }
                let count = self
                    .candidates(word)
                    .and_then(|cs| cs.iter().find(|c| c.tag == tag))
                    .map_or(0, |c| c.count);
                candidates.push(Candidate { tag, count });
            }
            if candidates.is_empty() {
                return Err(Error::MalformedLine(i + 1));
            }
            self.entries.insert(word.to_string(), candidates);
            replaced += 1;
        }
        Ok(replaced)
    }
}

/// Builds the lexicon and tag set from gold-tagged training sentences.
pub fn build_lexicon(training: &[Sentence]) -> Result<(Lexicon, TagSet)> {
    let mut names = Vec::new();
    for (s, sentence) in training.iter().enumerate() {
        for token in &sentence.tokens {
            match &token.tag {
                Some(tag) => names.push(tag.as_str()),
                None => {
                    return Err(Error::MissingGoldTags {
                        sentence: s,
                        word: token.word.clone(),
                    })
                }
            }
        }
    }
    if names.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let tags = TagSet::from_names(names);

    let mut counts: HashMap<String, BTreeMap<TagId, u64>> = HashMap::new();
    let mut global = vec![0u64; tags.len()];
    for token in training.iter().flat_map(|s| &s.tokens) {
        let tag = tags
            .lookup(token.tag.as_deref().expect("checked above"))
            .expect("tag set built from these tokens");
        *counts
            .entry(token.word.clone())
            .or_default()
            .entry(tag)
            .or_insert(0) += 1;
        global[tag.index()] += 1;
    }

    let entries = counts
        .into_iter()
        .map(|(word, per_tag)| {
            let mut candidates: Vec<Candidate> = per_tag
                .into_iter()
                .map(|(tag, count)| Candidate { tag, count })
                .collect();
            // ids follow tag names, so the id breaks count ties by name
            candidates.sort_by(|a, b| b.count.cmp(&a.count).then(a.tag.cmp(&b.tag)));
            (word, candidates)
        })
        .collect();

    Ok((Lexicon::from_parts(entries, global), tags))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TokenPos {
    pub sentence: usize,
    pub token: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Partition {
    pub ambiguous: Vec<TokenPos>,
    pub unambiguous: Vec<TokenPos>,
    pub unknown: Vec<TokenPos>,
}

impl Partition {
    pub fn total(&self) -> usize {
        self.ambiguous.len() + self.unambiguous.len() + self.unknown.len()
    }
}

/// Splits every token position by how the lexicon classifies its word.
pub fn partition_tokens(corpus: &[Sentence], lexicon: &Lexicon) -> Partition {
    let mut partition = Partition::default();
    for (s, sentence) in corpus.iter().enumerate() {
        for (t, token) in sentence.tokens.iter().enumerate() {
            let pos = TokenPos {
                sentence: s,
                token: t,
            };
            match lexicon.candidates(&token.word).map(<[Candidate]>::len) {
                None => partition.unknown.push(pos),
                Some(1) => partition.unambiguous.push(pos),
                Some(_) => partition.ambiguous.push(pos),
            }
        }
    }
    partition
}
