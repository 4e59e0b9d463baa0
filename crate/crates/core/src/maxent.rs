//! Conditional maximum-entropy classifier trained by generalized iterative
//! scaling.
//!
//! The model is `p(a | x) ∝ exp(Σ_{f ∈ x} w(f, a))`. Training drives the
//! model expectation of every `(feature, tag)` indicator,
//! `1/N Σ_n [f ∈ x_n] p(a | x_n)`, to its empirical value
//! `1/N Σ_n [f ∈ x_n][y_n = a]`.
//!
//! GIS needs every context to carry the same number of active features. A
//! correction feature pads each context up to `c_gis`, the largest active
//! count seen in training, and each update is
//! `w(f, a) += ln(empirical / model) / c_gis`. The correction feature's own
//! weight stays at zero: it only has to exist for the step size to be valid,
//! and pinning it keeps the training log-likelihood non-decreasing while
//! leaving predictions a function of the real features alone. Pairs never
//! seen in training are pinned at zero the same way.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use crate::corpus::{TagId, TagSet};
use crate::decision::{Provenance, TagDecision};
use crate::error::{Error, Result};
use crate::features::{FeatureId, FeatureVector};
use crate::textio::{field, LineReader};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GisConfig {
    pub max_iterations: usize,
    pub constraint_tolerance: f64,
}

impl Default for GisConfig {
    fn default() -> Self {
        GisConfig {
            max_iterations: 500,
            constraint_tolerance: 1e-3,
        }
    }
}

impl GisConfig {
    pub fn validate(&self) -> Result<()> {
        if self.constraint_tolerance.is_nan() || self.constraint_tolerance <= 0.0 {
            return Err(Error::InvalidConfig(
                "GIS constraint tolerance must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GisReport {
    /// Weight updates performed.
    pub iterations: usize,
    /// Largest constraint violation of the returned model.
    pub residual: f64,
    pub converged: bool,
    /// Training conditional log-likelihood before each update and of the
    /// returned model (`iterations + 1` values).
    pub log_likelihood: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxEntModel {
    /// Weights of the `(feature, tag)` pairs seen in training.
    weights: BTreeMap<(FeatureId, TagId), f64>,
    tag_count: usize,
    c_gis: u32,
    fallback_tag: TagId,
    by_feature: HashMap<FeatureId, Vec<(TagId, f64)>>,
}

impl MaxEntModel {
    pub fn from_weights(
        weights: BTreeMap<(FeatureId, TagId), f64>,
        tag_count: usize,
        c_gis: u32,
        fallback_tag: TagId,
    ) -> Self {
        let mut by_feature: HashMap<FeatureId, Vec<(TagId, f64)>> = HashMap::new();
        for (&(f, t), &w) in &weights {
            by_feature.entry(f).or_default().push((t, w));
        }
        MaxEntModel {
            weights,
            tag_count,
            c_gis,
            fallback_tag,
            by_feature,
        }
    }

    pub fn weight(&self, feature: FeatureId, tag: TagId) -> f64 {
        self.weights.get(&(feature, tag)).copied().unwrap_or(0.0)
    }

    pub fn weights(&self) -> &BTreeMap<(FeatureId, TagId), f64> {
        &self.weights
    }

    pub fn c_gis(&self) -> u32 {
        self.c_gis
    }

    pub fn tag_count(&self) -> usize {
        self.tag_count
    }

    pub fn fallback_tag(&self) -> TagId {
        self.fallback_tag
    }

    /// `p(· | context)`, indexed by tag id.
    pub fn distribution(&self, context: &FeatureVector) -> Vec<f64> {
        let mut scores = vec![0.0; self.tag_count];
        for f in context.ids() {
            if let Some(ws) = self.by_feature.get(f) {
                for &(t, w) in ws {
                    scores[t.index()] += w;
                }
            }
        }
        softmax_in_place(&mut scores);
        scores
    }

    /// Argmax of the distribution, ties to the lower tag id. A context with
    /// no feature known to the model gets the uniform distribution and the
    /// training majority tag.
    pub fn predict(&self, context: &FeatureVector) -> TagDecision {
        let dist = self.distribution(context);
        if !context.ids().iter().any(|f| self.by_feature.contains_key(f)) {
            return TagDecision::new(self.fallback_tag, Provenance::Fallback).with_scores(dist);
        }
        let mut best = 0;
        for (i, &p) in dist.iter().enumerate() {
            if p > dist[best] {
                best = i;
            }
        }
        TagDecision::new(TagId(best as u32), Provenance::Learner).with_scores(dist)
    }

    /// Header lines (`tags`, `c_gis`, `fallback`, `weights`) followed by
    /// `feature_id<TAB>tag_id<TAB>weight` lines. Weights are printed in the
    /// shortest form that parses back to the same `f64`.
    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "tags\t{}", self.tag_count)?;
        writeln!(out, "c_gis\t{}", self.c_gis)?;
        writeln!(out, "fallback\t{}", self.fallback_tag)?;
        writeln!(out, "weights\t{}", self.weights.len())?;
        for (&(f, t), w) in &self.weights {
            writeln!(out, "{f}\t{t}\t{w:?}")?;
        }
        Ok(())
    }

    pub(crate) fn read_from(reader: &mut LineReader<'_>) -> Result<Self> {
        const S: &str = "maxent";
        let tag_count: usize = reader.parsed(S, "tags")?;
        let c_gis: u32 = reader.parsed(S, "c_gis")?;
        let fallback = TagId(reader.parsed(S, "fallback")?);
        let n: usize = reader.parsed(S, "weights")?;
        if fallback.index() >= tag_count || c_gis == 0 {
            return Err(Error::corrupt(S, "bad header"));
        }
        let mut weights = BTreeMap::new();
        for _ in 0..n {
            let line = reader.next_line(S)?;
            let mut cols = line.split('\t');
            let f = FeatureId(field(S, line, cols.next())?);
            let t = TagId(field(S, line, cols.next())?);
            let w: f64 = field(S, line, cols.next())?;
            if t.index() >= tag_count || !w.is_finite() {
                return Err(Error::corrupt(S, format!("bad weight `{line}`")));
            }
            weights.insert((f, t), w);
        }
        Ok(MaxEntModel::from_weights(weights, tag_count, c_gis, fallback))
    }
}

fn softmax_in_place(scores: &mut [f64]) {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    for s in scores.iter_mut() {
        *s = (*s - max).exp();
        z += *s;
    }
    for s in scores.iter_mut() {
        *s /= z;
    }
}

/// Dense working copy of a training set: features renumbered `0..F`.
struct Dense {
    contexts: Vec<Vec<usize>>,
    labels: Vec<usize>,
    features: Vec<FeatureId>,
    tags: usize,
}

impl Dense {
    fn new(examples: &[(FeatureVector, TagId)], tags: usize) -> Self {
        let mut index: BTreeMap<FeatureId, usize> = BTreeMap::new();
        for (x, _) in examples {
            for &f in x.ids() {
                index.entry(f).or_insert(0);
            }
        }
        let features: Vec<FeatureId> = index.keys().copied().collect();
        for (i, v) in index.values_mut().enumerate() {
            *v = i;
        }
        let contexts = examples
            .iter()
            .map(|(x, _)| x.ids().iter().map(|f| index[f]).collect())
            .collect();
        let labels = examples.iter().map(|(_, t)| t.index()).collect();
        Dense {
            contexts,
            labels,
            features,
            tags,
        }
    }

    fn empirical(&self) -> Vec<f64> {
        let n = self.labels.len() as f64;
        let mut e = vec![0.0; self.features.len() * self.tags];
        for (x, &y) in self.contexts.iter().zip(&self.labels) {
            for &f in x {
                e[f * self.tags + y] += 1.0 / n;
            }
        }
        e
    }

    /// Model expectations and conditional log-likelihood under `weights`.
    fn expected(&self, weights: &[f64]) -> (Vec<f64>, f64) {
        let n = self.labels.len() as f64;
        let t = self.tags;
        let mut e = vec![0.0; weights.len()];
        let mut ll = 0.0;
        let mut p = vec![0.0; t];
        for (x, &y) in self.contexts.iter().zip(&self.labels) {
            p.iter_mut().for_each(|v| *v = 0.0);
            for &f in x {
                for (a, v) in p.iter_mut().enumerate() {
                    *v += weights[f * t + a];
                }
            }
            softmax_in_place(&mut p);
            ll += p[y].ln();
            for &f in x {
                for (a, v) in p.iter().enumerate() {
                    e[f * t + a] += v / n;
                }
            }
        }
        (e, ll)
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn train_gis(
    examples: &[(FeatureVector, TagId)],
    tag_set: &TagSet,
    config: &GisConfig,
) -> Result<(MaxEntModel, GisReport)> {
    config.validate()?;
    if examples.is_empty() {
        return Err(Error::NoExamples);
    }
    let tags = tag_set.len();
    let data = Dense::new(examples, tags);
    let c_gis = data.contexts.iter().map(Vec::len).max().unwrap_or(0).max(1);
    let step = 1.0 / c_gis as f64;

    let empirical = data.empirical();
    let mut weights = vec![0.0; empirical.len()];
    let mut log_likelihood = Vec::new();
    let mut iterations = 0;
    let residual = loop {
        let (model, ll) = data.expected(&weights);
        log_likelihood.push(ll);
        let residual = max_abs_diff(&empirical, &model);
        if residual <= config.constraint_tolerance || iterations == config.max_iterations {
            break residual;
        }
        for ((w, &emp), &exp) in weights.iter_mut().zip(&empirical).zip(&model) {
            if emp > 0.0 {
                *w += step * (emp / exp).ln();
            }
        }
        iterations += 1;
    };

    let mut map = BTreeMap::new();
    for (fi, &f) in data.features.iter().enumerate() {
        for a in 0..tags {
            if empirical[fi * tags + a] > 0.0 {
                map.insert((f, TagId(a as u32)), weights[fi * tags + a]);
            }
        }
    }
    let mut label_counts = vec![0usize; tags];
    for &y in &data.labels {
        label_counts[y] += 1;
    }
    let mut fallback = 0;
    for (i, &c) in label_counts.iter().enumerate() {
        if c > label_counts[fallback] {
            fallback = i;
        }
    }

    let model = MaxEntModel::from_weights(map, tags, c_gis as u32, TagId(fallback as u32));
    let report = GisReport {
        iterations,
        residual,
        converged: residual <= config.constraint_tolerance,
        log_likelihood,
    };
    Ok((model, report))
}

/// Largest `|empirical − model|` expectation gap over every feature that
/// occurs in `examples` paired with every tag of the model.
pub fn check_constraints(model: &MaxEntModel, examples: &[(FeatureVector, TagId)]) -> f64 {
    if examples.is_empty() {
        return 0.0;
    }
    let n = examples.len() as f64;
    let t = model.tag_count();
    let mut gap: HashMap<FeatureId, Vec<f64>> = HashMap::new();
    for (x, y) in examples {
        let p = model.distribution(x);
        for &f in x.ids() {
            let g = gap.entry(f).or_insert_with(|| vec![0.0; t]);
            g[y.index()] += 1.0 / n;
            for (a, pa) in p.iter().enumerate() {
                g[a] -= pa / n;
            }
        }
    }
    gap.values()
        .flat_map(|g| g.iter())
        .map(|v| v.abs())
        .fold(0.0, f64::max)
}
