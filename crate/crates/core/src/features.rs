//! Sparse binary window features.
//!
//! Every offset `o` in `[-window, +window]` around the target contributes,
//! per enabled group:
//!
//! * `POS`: one key per candidate tag of the word at `o`,
//! * `POS_ORDER`: one key per `(candidate tag, rank)` pair, rank capped at
//!   [`MAX_RANK`],
//! * `WORD`: the surface form at `o`.
//!
//! Offsets that fall outside the sentence emit one boundary key per enabled
//! group instead. Neighbours always contribute their candidate sets, never
//! tags decided earlier in the sentence, so each position can be featurized
//! independently.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;

use crate::corpus::{partition_tokens, Lexicon, Sentence, TagId, TagSet};
use crate::error::{Error, Result};

/// Ranks deeper than this share the last rank value.
pub const MAX_RANK: u8 = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FeatureId(pub u32);

impl FeatureId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for FeatureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FeatureKind {
    Pos,
    PosOrder,
    Word,
}

impl FeatureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureKind::Pos => "POS",
            FeatureKind::PosOrder => "POS_ORDER",
            FeatureKind::Word => "WORD",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "POS" => Some(FeatureKind::Pos),
            "POS_ORDER" => Some(FeatureKind::PosOrder),
            "WORD" => Some(FeatureKind::Word),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FeaturePayload {
    /// The offset lies outside the sentence.
    Boundary,
    Tag(TagId),
    TagRank(TagId, u8),
    Word(String),
}

/// A feature before it is mapped to a dense id.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FeatureKey {
    pub kind: FeatureKind,
    pub offset: i32,
    pub payload: FeaturePayload,
}

impl FeatureKey {
    pub fn pos(offset: i32, tag: TagId) -> Self {
        FeatureKey {
            kind: FeatureKind::Pos,
            offset,
            payload: FeaturePayload::Tag(tag),
        }
    }

    pub fn pos_order(offset: i32, tag: TagId, rank: usize) -> Self {
        debug_assert!(rank >= 1);
        FeatureKey {
            kind: FeatureKind::PosOrder,
            offset,
            payload: FeaturePayload::TagRank(tag, rank.min(MAX_RANK as usize) as u8),
        }
    }

    pub fn word(offset: i32, word: impl Into<String>) -> Self {
        FeatureKey {
            kind: FeatureKind::Word,
            offset,
            payload: FeaturePayload::Word(word.into()),
        }
    }

    pub fn boundary(kind: FeatureKind, offset: i32) -> Self {
        FeatureKey {
            kind,
            offset,
            payload: FeaturePayload::Boundary,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureConfig {
    pub window: usize,
    pub use_pos: bool,
    pub use_pos_order: bool,
    pub use_word: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            window: 3,
            use_pos: true,
            use_pos_order: true,
            use_word: true,
        }
    }
}

impl FeatureConfig {
    /// The same configuration with word features switched off.
    pub fn without_words(self) -> Self {
        FeatureConfig {
            use_word: false,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.use_pos || self.use_pos_order || self.use_word) {
            return Err(Error::InvalidConfig(
                "at least one feature group must be enabled".into(),
            ));
        }
        if self.window > i32::MAX as usize / 2 {
            return Err(Error::InvalidConfig(format!("window {} is too large", self.window)));
        }
        Ok(())
    }

    /// Short label such as `full` or `no-word`.
    pub fn label(&self) -> String {
        let mut off = Vec::new();
        if !self.use_pos {
            off.push("no-pos");
        }
        if !self.use_pos_order {
            off.push("no-pos-order");
        }
        if !self.use_word {
            off.push("no-word");
        }
        let groups = if off.is_empty() {
            "full".to_string()
        } else {
            off.join(",")
        };
        if self.window == 3 {
            groups
        } else {
            format!("{groups},w{}", self.window)
        }
    }
}

/// Sorted set of present features.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct FeatureVector(Vec<FeatureId>);

impl FeatureVector {
    pub fn new(mut ids: Vec<FeatureId>) -> Self {
        ids.sort_unstable();
        ids.dedup();
        FeatureVector(ids)
    }

    pub fn from_ids(ids: impl IntoIterator<Item = u32>) -> Self {
        FeatureVector::new(ids.into_iter().map(FeatureId).collect())
    }

    pub fn ids(&self) -> &[FeatureId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, id: FeatureId) -> bool {
        self.0.binary_search(&id).is_ok()
    }

    /// Size of the intersection, i.e. the dot product of the binary vectors.
    pub fn overlap(&self, other: &FeatureVector) -> usize {
        let (a, b) = (&self.0, &other.0);
        let (mut i, mut j, mut n) = (0, 0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    n += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        n
    }
}

/// Bidirectional `FeatureKey` ↔ `FeatureId` map. Ids are handed out in
/// first-seen order; a frozen vocabulary never grows.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FeatureVocabulary {
    keys: Vec<FeatureKey>,
    ids: HashMap<FeatureKey, FeatureId>,
    frozen: bool,
}

impl FeatureVocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn get(&self, key: &FeatureKey) -> Option<FeatureId> {
        self.ids.get(key).copied()
    }

    pub fn key(&self, id: FeatureId) -> Option<&FeatureKey> {
        self.keys.get(id.index())
    }

    pub fn keys(&self) -> &[FeatureKey] {
        &self.keys
    }

    /// Returns the id of `key`, allocating one unless frozen.
    pub fn intern(&mut self, key: FeatureKey) -> Option<FeatureId> {
        if let Some(id) = self.ids.get(&key) {
            return Some(*id);
        }
        if self.frozen {
            return None;
        }
        let id = FeatureId(self.keys.len() as u32);
        self.ids.insert(key.clone(), id);
        self.keys.push(key);
        Some(id)
    }

    /// `id<TAB>kind<TAB>offset<TAB>payload`, one line per feature. Tags are
    /// written by name, ranks as `name:rank`, boundaries with an empty payload.
    pub fn write_to<W: Write>(&self, mut out: W, tags: &TagSet) -> std::io::Result<()> {
        for (i, key) in self.keys.iter().enumerate() {
            let payload = match &key.payload {
                FeaturePayload::Boundary => String::new(),
                FeaturePayload::Tag(t) => tags.name(*t).to_string(),
                FeaturePayload::TagRank(t, r) => format!("{}:{}", tags.name(*t), r),
                FeaturePayload::Word(w) => w.clone(),
            };
            writeln!(out, "{}\t{}\t{}\t{}", i, key.kind.as_str(), key.offset, payload)?;
        }
        Ok(())
    }

    /// Parses one line written by [`write_to`](Self::write_to); lines must
    /// arrive in id order.
    pub(crate) fn push_line(&mut self, line: &str, tags: &TagSet) -> Result<()> {
        const SECTION: &str = "vocabulary";
        let bad = |d: &str| Error::corrupt(SECTION, format!("{d}: `{line}`"));
        let mut cols = line.splitn(4, '\t');
        let (Some(id), Some(kind), Some(offset), Some(payload)) =
            (cols.next(), cols.next(), cols.next(), cols.next())
        else {
            return Err(bad("expected 4 columns"));
        };
        let id: usize = id.parse().map_err(|_| bad("bad id"))?;
        if id != self.keys.len() {
            return Err(bad("ids out of order"));
        }
        let kind = FeatureKind::parse(kind).ok_or_else(|| bad("bad kind"))?;
        let offset: i32 = offset.parse().map_err(|_| bad("bad offset"))?;
        let tag = |name: &str| tags.lookup(name).ok_or_else(|| bad("unknown tag"));
        let payload = if payload.is_empty() {
            FeaturePayload::Boundary
        } else {
            match kind {
                FeatureKind::Pos => FeaturePayload::Tag(tag(payload)?),
                FeatureKind::PosOrder => {
                    let (name, rank) = payload.rsplit_once(':').ok_or_else(|| bad("bad rank"))?;
                    let rank: u8 = rank.parse().map_err(|_| bad("bad rank"))?;
                    if rank == 0 || rank > MAX_RANK {
                        return Err(bad("rank out of range"));
                    }
                    FeaturePayload::TagRank(tag(name)?, rank)
                }
                FeatureKind::Word => FeaturePayload::Word(payload.to_string()),
            }
        };
        let key = FeatureKey {
            kind,
            offset,
            payload,
        };
        if self.ids.contains_key(&key) {
            return Err(bad("duplicate key"));
        }
        self.ids.insert(key.clone(), FeatureId(id as u32));
        self.keys.push(key);
        Ok(())
    }
}

/// Emits the keys for one position. The flag passed alongside each key is
/// false for word keys of words the lexicon does not know; those may only
/// be looked up, never allocated.
fn for_each_key(
    sentence: &Sentence,
    position: usize,
    lexicon: &Lexicon,
    config: &FeatureConfig,
    mut emit: impl FnMut(FeatureKey, bool),
) -> Result<()> {
    let len = sentence.tokens.len();
    if position >= len {
        return Err(Error::PositionOutOfRange { position, len });
    }
    let window = config.window as i64;
    for offset in -window..=window {
        let at = position as i64 + offset;
        let offset = offset as i32;
        if at < 0 || at >= len as i64 {
            if config.use_pos {
                emit(FeatureKey::boundary(FeatureKind::Pos, offset), true);
            }
            if config.use_pos_order {
                emit(FeatureKey::boundary(FeatureKind::PosOrder, offset), true);
            }
            if config.use_word {
                emit(FeatureKey::boundary(FeatureKind::Word, offset), true);
            }
            continue;
        }
        let word = &sentence.tokens[at as usize].word;
        let candidates = lexicon.candidates(word);
        if let Some(candidates) = candidates {
            if config.use_pos {
                for c in candidates {
                    emit(FeatureKey::pos(offset, c.tag), true);
                }
            }
            if config.use_pos_order {
                for (i, c) in candidates.iter().enumerate() {
                    emit(FeatureKey::pos_order(offset, c.tag, i + 1), true);
                }
            }
        }
        if config.use_word {
            emit(FeatureKey::word(offset, word.as_str()), candidates.is_some());
        }
    }
    Ok(())
}

/// The raw keys for one position, ignoring any vocabulary.
pub fn context_keys(
    sentence: &Sentence,
    position: usize,
    lexicon: &Lexicon,
    config: &FeatureConfig,
) -> Result<Vec<FeatureKey>> {
    let mut keys = Vec::new();
    for_each_key(sentence, position, lexicon, config, |k, _| keys.push(k))?;
    Ok(keys)
}

/// Maps the keys of one position through `vocab`. Keys the vocabulary does
/// not hold are dropped, so this never grows it.
pub fn extract(
    sentence: &Sentence,
    position: usize,
    lexicon: &Lexicon,
    vocab: &FeatureVocabulary,
    config: &FeatureConfig,
) -> Result<FeatureVector> {
    let mut ids = Vec::new();
    for_each_key(sentence, position, lexicon, config, |k, _| {
        if let Some(id) = vocab.get(&k) {
            ids.push(id);
        }
    })?;
    Ok(FeatureVector::new(ids))
}

/// Like [`extract`], but allocates ids for new keys while `vocab` is not
/// frozen. Words missing from the lexicon are still lookup-only.
pub fn extract_mut(
    sentence: &Sentence,
    position: usize,
    lexicon: &Lexicon,
    vocab: &mut FeatureVocabulary,
    config: &FeatureConfig,
) -> Result<FeatureVector> {
    let mut ids = Vec::new();
    for_each_key(sentence, position, lexicon, config, |k, allocatable| {
        let id = if allocatable { vocab.intern(k) } else { vocab.get(&k) };
        ids.extend(id);
    })?;
    Ok(FeatureVector::new(ids))
}

/// Collects every key emitted at an ambiguous training position and freezes
/// the result.
pub fn build_vocabulary(
    training: &[Sentence],
    lexicon: &Lexicon,
    config: &FeatureConfig,
) -> Result<FeatureVocabulary> {
    config.validate()?;
    let partition = partition_tokens(training, lexicon);
    if partition.ambiguous.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    let mut vocab = FeatureVocabulary::new();
    for pos in &partition.ambiguous {
        extract_mut(&training[pos.sentence], pos.token, lexicon, &mut vocab, config)?;
    }
    vocab.freeze();
    Ok(vocab)
}
