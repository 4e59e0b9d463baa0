//! One-vs-one multiclass SVM.
//!
//! A binary machine is trained for every unordered pair of tags `(a, b)`,
//! `a < b`, with `a` as the +1 class. Each machine casts one vote; the tag
//! with the most votes wins. Ties go to the tag whose won contests have the
//! larger summed `|margin|`, then to the lower tag id.

use std::collections::HashMap;
use std::io::Write;

use rayon::prelude::*;

use super::kernel::poly;
use super::smo::{sign, train_smo, BinaryProblem, SmoReport, SvmBinaryModel, SvmConfig};
use crate::corpus::{TagId, TagSet};
use crate::decision::{Provenance, TagDecision};
use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::textio::LineReader;

#[derive(Debug, Clone, PartialEq)]
pub struct PairReport {
    pub pair: (TagId, TagId),
    pub examples: usize,
    pub support_vectors: usize,
    pub smo: SmoReport,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PairwiseReport {
    pub trained: Vec<PairReport>,
    /// Pairs skipped because one of the tags has no training example.
    pub omitted: Vec<(TagId, TagId)>,
}

/// Support vectors shared across machines, so a query's overlap with each
/// distinct training context is computed once.
#[derive(Debug, Clone, Default)]
struct SupportPool {
    contexts: Vec<FeatureVector>,
    /// Per machine: `(pool index, α y)`.
    terms: Vec<Vec<(usize, f64)>>,
}

impl SupportPool {
    fn build(machines: &[((TagId, TagId), SvmBinaryModel)]) -> Self {
        let mut index: HashMap<&FeatureVector, usize> = HashMap::new();
        let mut contexts = Vec::new();
        let mut terms = Vec::with_capacity(machines.len());
        for (_, m) in machines {
            let mut t = Vec::with_capacity(m.support_vectors().len());
            for sv in m.support_vectors() {
                let idx = *index.entry(&sv.context).or_insert_with(|| {
                    contexts.push(sv.context.clone());
                    contexts.len() - 1
                });
                t.push((idx, sv.alpha * f64::from(sv.label)));
            }
            terms.push(t);
        }
        SupportPool { contexts, terms }
    }
}

#[derive(Debug, Clone)]
pub struct PairwiseModel {
    tag_count: usize,
    machines: Vec<((TagId, TagId), SvmBinaryModel)>,
    pool: SupportPool,
}

impl PartialEq for PairwiseModel {
    fn eq(&self, other: &Self) -> bool {
        self.tag_count == other.tag_count && self.machines == other.machines
    }
}

impl PairwiseModel {
    /// `machines` must be ordered by pair with `a < b` in every pair.
    pub fn from_machines(tag_count: usize, machines: Vec<((TagId, TagId), SvmBinaryModel)>) -> Self {
        debug_assert!(machines.iter().all(|((a, b), _)| a < b));
        let pool = SupportPool::build(&machines);
        PairwiseModel {
            tag_count,
            machines,
            pool,
        }
    }

    pub fn machines(&self) -> &[((TagId, TagId), SvmBinaryModel)] {
        &self.machines
    }

    pub fn tag_count(&self) -> usize {
        self.tag_count
    }

    /// Margin of every machine for `x`, in machine order.
    pub fn margins(&self, x: &FeatureVector) -> Vec<f64> {
        let overlaps: Vec<usize> = self.pool.contexts.iter().map(|c| c.overlap(x)).collect();
        self.machines
            .iter()
            .zip(&self.pool.terms)
            .map(|((_, m), terms)| {
                let degree = m.config().degree;
                terms
                    .iter()
                    .map(|&(i, coef)| coef * poly(overlaps[i], degree))
                    .sum::<f64>()
                    + m.bias()
            })
            .collect()
    }

    /// Scores attached to the decision are the vote counts per tag.
    pub fn predict(&self, x: &FeatureVector) -> TagDecision {
        let mut votes = vec![0u32; self.tag_count];
        let mut strength = vec![0.0f64; self.tag_count];
        for (((a, b), _), margin) in self.machines.iter().zip(self.margins(x)) {
            let winner = if sign(margin) > 0 { *a } else { *b };
            votes[winner.index()] += 1;
            strength[winner.index()] += margin.abs();
        }
        let mut best = 0;
        for t in 1..self.tag_count {
            let better = votes[t] > votes[best]
                || (votes[t] == votes[best] && strength[t] > strength[best]);
            if better {
                best = t;
            }
        }
        TagDecision::new(TagId(best as u32), Provenance::Learner)
            .with_scores(votes.iter().map(|&v| f64::from(v)).collect())
    }

    /// `tags` and `pairs` header lines, then one block per machine opened
    /// by `pair<TAB>a<TAB>b`.
    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "tags\t{}", self.tag_count)?;
        writeln!(out, "pairs\t{}", self.machines.len())?;
        for ((a, b), m) in &self.machines {
            writeln!(out, "pair\t{a}\t{b}")?;
            m.write_to(&mut out)?;
        }
        Ok(())
    }

    pub(crate) fn read_from(reader: &mut LineReader<'_>) -> Result<Self> {
        const S: &str = "svm";
        let tag_count: usize = reader.parsed(S, "tags")?;
        let n: usize = reader.parsed(S, "pairs")?;
        let mut machines = Vec::with_capacity(n);
        for _ in 0..n {
            let v = reader.value(S, "pair")?;
            let (a, b) = v
                .split_once('\t')
                .and_then(|(a, b)| Some((a.parse::<u32>().ok()?, b.parse::<u32>().ok()?)))
                .ok_or_else(|| Error::corrupt(S, format!("bad pair `{v}`")))?;
            if a >= b || b as usize >= tag_count {
                return Err(Error::corrupt(S, format!("bad pair `{v}`")));
            }
            machines.push(((TagId(a), TagId(b)), SvmBinaryModel::read_from(reader)?));
        }
        Ok(PairwiseModel::from_machines(tag_count, machines))
    }
}

/// Trains all pairs of tags that occur among `examples`. Pairs run in
/// parallel on the current rayon pool; results keep pair order.
pub fn train_pairwise(
    examples: &[(FeatureVector, TagId)],
    tag_set: &TagSet,
    config: &SvmConfig,
) -> Result<(PairwiseModel, PairwiseReport)> {
    config.validate()?;
    let mut present = vec![false; tag_set.len()];
    for (_, t) in examples {
        present[t.index()] = true;
    }
    let distinct = present.iter().filter(|&&p| p).count();
    if distinct < 2 {
        return Err(Error::SingleCategory(distinct));
    }

    let mut pairs = Vec::new();
    let mut omitted = Vec::new();
    for a in tag_set.ids() {
        for b in tag_set.ids().filter(|&b| b > a) {
            if present[a.index()] && present[b.index()] {
                pairs.push((a, b));
            } else {
                omitted.push((a, b));
            }
        }
    }

    let trained: Vec<Result<(SvmBinaryModel, PairReport)>> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let (contexts, labels): (Vec<_>, Vec<_>) = examples
                .iter()
                .filter(|(_, t)| *t == a || *t == b)
                .map(|(x, t)| (x.clone(), if *t == a { 1i8 } else { -1 }))
                .unzip();
            let problem = BinaryProblem::new(contexts, labels)?;
            let (model, smo) = train_smo(&problem, config)?;
            let report = PairReport {
                pair: (a, b),
                examples: problem.len(),
                support_vectors: model.support_vectors().len(),
                smo,
            };
            Ok((model, report))
        })
        .collect();

    let mut machines = Vec::with_capacity(pairs.len());
    let mut reports = Vec::with_capacity(pairs.len());
    for (pair, result) in pairs.into_iter().zip(trained) {
        let (model, report) = result?;
        machines.push((pair, model));
        reports.push(report);
    }
    Ok((
        PairwiseModel::from_machines(tag_set.len(), machines),
        PairwiseReport {
            trained: reports,
            omitted,
        },
    ))
}
