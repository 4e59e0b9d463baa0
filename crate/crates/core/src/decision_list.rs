//! Decision lists over single features.
//!
//! Every `(feature, tag)` pair seen at least `min_count` times becomes an
//! entry scored by the conditional frequency `count(f, a) / count(f)`. The
//! list is sorted best-first and prediction returns the tag of the first
//! entry whose feature is present, which is the same as taking the feature
//! whose best tag has the highest conditional frequency.
//!
//! Ties on score go to the feature seen more often, then the lower feature
//! id, then the lower tag id.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use crate::corpus::{TagId, TagSet};
use crate::decision::{Provenance, TagDecision};
use crate::error::{Error, Result};
use crate::features::{FeatureId, FeatureVector};
use crate::textio::{field, LineReader};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecisionListConfig {
    pub min_count: u64,
}

impl Default for DecisionListConfig {
    fn default() -> Self {
        DecisionListConfig { min_count: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecisionListEntry {
    pub feature: FeatureId,
    pub tag: TagId,
    /// Training examples containing the feature with this tag.
    pub pair_count: u64,
    /// Training examples containing the feature.
    pub feature_count: u64,
}

impl DecisionListEntry {
    pub fn score(&self) -> f64 {
        self.pair_count as f64 / self.feature_count as f64
    }

    /// List order: best entry first. Scores are compared as exact fractions.
    pub fn list_order(&self, other: &Self) -> Ordering {
        let lhs = self.pair_count as u128 * other.feature_count as u128;
        let rhs = other.pair_count as u128 * self.feature_count as u128;
        rhs.cmp(&lhs)
            .then(other.feature_count.cmp(&self.feature_count))
            .then(self.feature.cmp(&other.feature))
            .then(self.tag.cmp(&other.tag))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionListModel {
    entries: Vec<DecisionListEntry>,
    fallback_tag: TagId,
    tag_count: usize,
    by_feature: HashMap<FeatureId, Vec<usize>>,
}

impl DecisionListModel {
    fn from_sorted(entries: Vec<DecisionListEntry>, fallback_tag: TagId, tag_count: usize) -> Self {
        let mut by_feature: HashMap<FeatureId, Vec<usize>> = HashMap::new();
        for (i, e) in entries.iter().enumerate() {
            by_feature.entry(e.feature).or_default().push(i);
        }
        DecisionListModel {
            entries,
            fallback_tag,
            tag_count,
            by_feature,
        }
    }

    pub fn entries(&self) -> &[DecisionListEntry] {
        &self.entries
    }

    pub fn fallback_tag(&self) -> TagId {
        self.fallback_tag
    }

    pub fn tag_count(&self) -> usize {
        self.tag_count
    }

    /// Index of the first list entry whose feature is in `context`.
    pub fn first_match(&self, context: &FeatureVector) -> Option<usize> {
        context
            .ids()
            .iter()
            .filter_map(|f| self.by_feature.get(f).map(|idx| idx[0]))
            .min()
    }

    /// Walks the list from the top. The attached scores are the conditional
    /// frequencies of every tag given the winning feature.
    pub fn predict(&self, context: &FeatureVector) -> TagDecision {
        let Some(first) = self.first_match(context) else {
            return TagDecision::new(self.fallback_tag, Provenance::Fallback);
        };
        let winner = self.entries[first];
        let mut scores = vec![0.0; self.tag_count];
        for &i in &self.by_feature[&winner.feature] {
            let e = &self.entries[i];
            scores[e.tag.index()] = e.score();
        }
        TagDecision::new(winner.tag, Provenance::Learner).with_scores(scores)
    }

    /// `fallback`, `tags` and `entries` header lines, then
    /// `feature_id<TAB>tag_id<TAB>score<TAB>count` per entry in list order.
    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "fallback\t{}", self.fallback_tag)?;
        writeln!(out, "tags\t{}", self.tag_count)?;
        writeln!(out, "entries\t{}", self.entries.len())?;
        for e in &self.entries {
            writeln!(out, "{}\t{}\t{}\t{}", e.feature, e.tag, e.score(), e.feature_count)?;
        }
        Ok(())
    }

    pub(crate) fn read_from(reader: &mut LineReader<'_>) -> Result<Self> {
        const S: &str = "decision_list";
        let fallback = TagId(reader.parsed(S, "fallback")?);
        let tag_count: usize = reader.parsed(S, "tags")?;
        let n: usize = reader.parsed(S, "entries")?;
        if fallback.index() >= tag_count {
            return Err(Error::corrupt(S, "fallback tag out of range"));
        }
        let mut entries = Vec::with_capacity(n);
        for _ in 0..n {
            let line = reader.next_line(S)?;
            let mut cols = line.split('\t');
            let feature = FeatureId(field(S, line, cols.next())?);
            let tag = TagId(field(S, line, cols.next())?);
            let score: f64 = field(S, line, cols.next())?;
            let feature_count: u64 = field(S, line, cols.next())?;
            if tag.index() >= tag_count || !(score > 0.0 && score <= 1.0) || feature_count == 0 {
                return Err(Error::corrupt(S, format!("bad entry `{line}`")));
            }
            let pair_count = (score * feature_count as f64).round() as u64;
            entries.push(DecisionListEntry {
                feature,
                tag,
                pair_count,
                feature_count,
            });
        }
        Ok(DecisionListModel::from_sorted(entries, fallback, tag_count))
    }
}

pub fn train_decision_list(
    examples: &[(FeatureVector, TagId)],
    tag_set: &TagSet,
    config: &DecisionListConfig,
) -> Result<DecisionListModel> {
    if examples.is_empty() {
        return Err(Error::NoExamples);
    }
    let mut pair_counts: BTreeMap<(FeatureId, TagId), u64> = BTreeMap::new();
    let mut feature_counts: HashMap<FeatureId, u64> = HashMap::new();
    let mut tag_counts = vec![0u64; tag_set.len()];
    for (context, tag) in examples {
        tag_counts[tag.index()] += 1;
        for &f in context.ids() {
            *pair_counts.entry((f, *tag)).or_insert(0) += 1;
            *feature_counts.entry(f).or_insert(0) += 1;
        }
    }
    let mut entries: Vec<DecisionListEntry> = pair_counts
        .into_iter()
        .filter(|&(_, c)| c >= config.min_count.max(1))
        .map(|((feature, tag), pair_count)| DecisionListEntry {
            feature,
            tag,
            pair_count,
            feature_count: feature_counts[&feature],
        })
        .collect();
    entries.sort_by(DecisionListEntry::list_order);

    let mut fallback = 0;
    for (i, &c) in tag_counts.iter().enumerate() {
        if c > tag_counts[fallback] {
            fallback = i;
        }
    }
    Ok(DecisionListModel::from_sorted(
        entries,
        TagId(fallback as u32),
        tag_set.len(),
    ))
}
