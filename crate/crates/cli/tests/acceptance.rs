#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::time::{Duration, Instant};

use nalgebra::SymmetricEigen;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use seqtag::corpus::{build_lexicon, partition_tokens, TagId, TagSet};
use seqtag::decision::Provenance;
use seqtag::decision_list::{train_decision_list, DecisionListConfig};
use seqtag::eval::{
    generate_synthetic_corpus, run_comparison, split, ComparisonReport, Metrics, SyntheticCorpusSpec,
    DEFAULT_TRAIN_FRACTION,
};
use seqtag::features::{FeatureConfig, FeatureVector};
use seqtag::maxent::{check_constraints, train_gis, GisConfig};
use seqtag::svm::{
    dual_objective, kernel, solve_dual, train_pairwise, train_smo, BinaryProblem, SvmBinaryModel, SvmConfig,
};
use seqtag::tagger::{train_tagger, Learner, LearnerConfig, Method};

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome {
            pass,
            detail: detail.into(),
        }
    }
}

fn fv(ids: &[u32]) -> FeatureVector {
    FeatureVector::from_ids(ids.iter().copied())
}

fn random_ids(rng: &mut ChaCha8Rng, features: u32, max_len: usize) -> Vec<u32> {
    let mut all: Vec<u32> = (0..features).collect();
    all.shuffle(rng);
    let len = rng.gen_range(0..=max_len.min(features as usize));
    let mut ids = all[..len].to_vec();
    ids.sort_unstable();
    ids
}

/// Up to six points over four features, both labels present.
fn random_binary(rng: &mut ChaCha8Rng) -> (Vec<Vec<u32>>, Vec<i8>) {
    let n = rng.gen_range(2..=6);
    let points: Vec<Vec<u32>> = (0..n).map(|_| random_ids(rng, 4, 4)).collect();
    let mut labels: Vec<i8> = (0..n).map(|_| if rng.gen_bool(0.5) { 1 } else { -1 }).collect();
    if !labels.contains(&1) {
        labels[0] = 1;
    }
    if !labels.contains(&-1) {
        labels[n - 1] = -1;
    }
    (points, labels)
}

fn problem(points: &[Vec<u32>], labels: &[i8]) -> BinaryProblem {
    BinaryProblem::new(points.iter().map(|p| fv(p)).collect(), labels.to_vec()).unwrap()
}

fn as_f64(labels: &[i8]) -> Vec<f64> {
    labels.iter().map(|&l| l as f64).collect()
}

fn within(elapsed: Duration, limit_secs: f64) -> bool {
    elapsed.as_secs_f64() < limit_secs
}

/// Dual feasibility of a stored model: `0 < α ≤ C` and `|Σ α y| ≤ 1e-9`.
fn feasible(model: &SvmBinaryModel) -> bool {
    let c = model.config().c;
    let sum: f64 = model.support_vectors().iter().map(|sv| sv.alpha * sv.label as f64).sum();
    model.support_vectors().iter().all(|sv| sv.alpha > 0.0 && sv.alpha <= c) && sum.abs() <= 1e-9
}

fn smo_oracle(models: &mut Vec<SvmBinaryModel>) -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst_exact, mut worst_below_grid, mut worst_literal) = (0.0f64, f64::NEG_INFINITY, 0.0f64);
    let mut full_grids = 0;
    let mut failures = Vec::new();
    for case in 0..50 {
        let (pts, labels) = random_binary(&mut rng);
        let degree = rng.gen_range(1..=2);
        let c = if rng.gen_bool(0.5) { 1.0 } else { 10.0 };
        let cfg = SvmConfig {
            c,
            degree,
            ..Default::default()
        };
        let p = problem(&pts, &labels);
        let sol = solve_dual(&p, &cfg).unwrap();
        let smo = dual_objective(&p, &sol.alphas, degree);

        let y = as_f64(&labels);
        let k = support::gram(&pts, degree);
        let (exact, _) = support::exact_dual_max(&k, &y, c);
        let grid = match support::grid_dual_max(&k, &y, c, 0.01, 300_000) {
            Some(g) => {
                full_grids += 1;
                g
            }
            None => support::refined_grid_dual_max(&k, &y, c, 0.01),
        };
        worst_exact = worst_exact.max((smo - exact).abs());
        worst_below_grid = worst_below_grid.max(grid - smo);
        worst_literal = worst_literal.max((smo - grid).abs());
        if (smo - exact).abs() > 1e-4 || smo < grid - 1e-4 {
            failures.push(case);
        }
        models.push(train_smo(&p, &cfg).unwrap().0);
    }
    let elapsed = start.elapsed();
    Outcome::new(
        failures.is_empty() && within(elapsed, 10.0),
        format!(
            "max |smo-exact| {worst_exact:.2e}, max grid-smo {worst_below_grid:.2e}, \
             max |smo-grid| {worst_literal:.2e}, {full_grids}/50 full 0.01 grids, failing cases {failures:?}"
        ),
    )
}

fn separable_margin(models: &mut Vec<SvmBinaryModel>) -> Outcome {
    let start = Instant::now();
    let sets: Vec<(Vec<Vec<u32>>, Vec<i8>)> = vec![
        (vec![vec![0], vec![1]], vec![1, -1]),
        (vec![vec![0], vec![0, 2], vec![1], vec![1, 2]], vec![1, 1, -1, -1]),
        (vec![vec![0, 1], vec![0, 2], vec![3], vec![3, 2], vec![4]], vec![1, 1, -1, -1, -1]),
        (
            vec![vec![0, 5], vec![0, 6], vec![0, 7], vec![1, 5], vec![1, 6], vec![2]],
            vec![1, 1, 1, -1, -1, -1],
        ),
        (vec![vec![0, 1, 2], vec![0, 1], vec![2, 3], vec![3]], vec![1, 1, -1, -1]),
    ];
    let cfg = SvmConfig {
        c: 1e4,
        degree: 1,
        ..Default::default()
    };
    let (mut errors, mut worst) = (0, 0.0f64);
    for (pts, labels) in &sets {
        let (model, _) = train_smo(&problem(pts, labels), &cfg).unwrap();
        errors += pts
            .iter()
            .zip(labels)
            .filter(|(x, &y)| model.predict(&fv(x)).0 != y)
            .count();
        for sv in model.support_vectors() {
            worst = worst.max((model.margin(&sv.context).abs() - 1.0).abs());
        }
        models.push(model);
    }
    let elapsed = start.elapsed();
    Outcome::new(
        errors == 0 && worst <= 1e-2 && within(elapsed, 1.0),
        format!("{} sets, {errors} training errors, max ||margin|-1| {worst:.2e}", sets.len()),
    )
}

fn dual_feasibility(mut models: Vec<SvmBinaryModel>) -> Outcome {
    let spec = SyntheticCorpusSpec {
        sentences: 500,
        ..SyntheticCorpusSpec::benchmark(42)
    };
    let corpus = generate_synthetic_corpus(&spec).unwrap();
    let (train, _) = split(&corpus.sentences, DEFAULT_TRAIN_FRACTION);
    let (bundle, _) = train_tagger(&train, Method::Svm, &FeatureConfig::default(), &LearnerConfig::default()).unwrap();
    if let Learner::Svm(m) = &bundle.learner {
        models.extend(m.machines().iter().map(|(_, b)| b.clone()));
    }
    let bad = models.iter().filter(|m| !feasible(m)).count();
    Outcome::new(bad == 0, format!("{} binary models checked, {bad} infeasible", models.len()))
}

fn gram_psd() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut min_eig, mut asymmetric) = (f64::INFINITY, 0);
    for set in 0..100 {
        let n = rng.gen_range(1..=10);
        let points: Vec<FeatureVector> = (0..n).map(|_| fv(&random_ids(&mut rng, 15, 8))).collect();
        let degree = 1 + set % 2;
        let k = nalgebra::DMatrix::from_fn(n, n, |i, j| kernel(&points[i], &points[j], degree));
        if k != k.transpose() {
            asymmetric += 1;
        }
        min_eig = SymmetricEigen::new(k).eigenvalues.iter().copied().fold(min_eig, f64::min);
    }
    Outcome::new(
        asymmetric == 0 && min_eig >= -1e-8,
        format!("100 sets, smallest eigenvalue {min_eig:.3e}, {asymmetric} asymmetric"),
    )
}

fn tag_set(n: usize) -> TagSet {
    TagSet::from_names((0..n).map(|i| format!("T{i}")))
}

fn gis_constraints() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cfg = GisConfig {
        max_iterations: 100_000,
        constraint_tolerance: 1e-3,
    };
    let (mut worst, mut unconverged, mut decreasing) = (0.0f64, 0, 0);
    for _ in 0..20 {
        let tags = rng.gen_range(2..=4);
        let n = rng.gen_range(5..=25);
        let ex: Vec<(FeatureVector, TagId)> = (0..n)
            .map(|_| {
                let mut f = random_ids(&mut rng, 6, 3);
                if f.is_empty() {
                    f.push(rng.gen_range(0..6));
                }
                (fv(&f), TagId(rng.gen_range(0..tags)))
            })
            .collect();
        let (model, report) = train_gis(&ex, &tag_set(tags as usize), &cfg).unwrap();
        if !report.converged {
            unconverged += 1;
        }
        worst = worst.max(check_constraints(&model, &ex));
        decreasing += report.log_likelihood.windows(2).filter(|w| w[1] < w[0] - 1e-12).count();
    }
    let mut analytic = 0.0f64;
    for (a, b) in [(3, 1), (1, 0), (2, 3), (5, 1), (1, 1)] {
        let mut ex = vec![(fv(&[7]), TagId(0)); a];
        ex.extend(vec![(fv(&[7]), TagId(1)); b]);
        let (model, _) = train_gis(&ex, &tag_set(2), &cfg).unwrap();
        let p = model.distribution(&fv(&[7]))[0];
        analytic = analytic.max((p - a as f64 / (a + b) as f64).abs());
    }
    let elapsed = start.elapsed();
    Outcome::new(
        unconverged == 0 && worst <= 1e-3 && analytic <= 1e-3 && decreasing == 0 && within(elapsed, 10.0),
        format!(
            "20 corpora, {unconverged} unconverged, max residual {worst:.2e}, \
             max analytic error {analytic:.2e}, {decreasing} log-likelihood decreases"
        ),
    )
}

fn decision_list_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut contexts, mut mismatches) = (0, 0);
    for _ in 0..100 {
        let tags = rng.gen_range(1..=5u32);
        let n = rng.gen_range(1..=150);
        let raw: Vec<(Vec<u32>, u32)> = (0..n)
            .map(|_| (random_ids(&mut rng, 20, 5), rng.gen_range(0..tags)))
            .collect();
        let ex: Vec<_> = raw.iter().map(|(f, t)| (fv(f), TagId(*t))).collect();
        let model = train_decision_list(&ex, &tag_set(tags as usize), &DecisionListConfig::default()).unwrap();
        let queries: Vec<Vec<u32>> = (0..50).map(|_| random_ids(&mut rng, 22, 6)).collect();
        for ctx in raw.iter().map(|(f, _)| f).chain(&queries) {
            contexts += 1;
            let got = model.predict(&fv(ctx));
            let ok = match support::decision_list_ref(&raw, ctx) {
                Some(t) => got.tag == TagId(t) && got.provenance == Provenance::Learner,
                None => got.provenance == Provenance::Fallback,
            };
            if !ok {
                mismatches += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    Outcome::new(
        mismatches == 0 && within(elapsed, 5.0),
        format!("100 corpora, {contexts} contexts, {mismatches} mismatches"),
    )
}

fn pairwise_reduction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let tags = TagSet::from_names(["A", "B"]);
    let (mut queries, mut mismatches) = (0, 0);
    for _ in 0..10 {
        let (pts, labels) = random_binary(&mut rng);
        let ex: Vec<_> = pts
            .iter()
            .zip(&labels)
            .map(|(p, &l)| (fv(p), TagId(if l > 0 { 0 } else { 1 })))
            .collect();
        let cfg = SvmConfig {
            degree: rng.gen_range(1..=2),
            ..Default::default()
        };
        let (pair, _) = train_pairwise(&ex, &tags, &cfg).unwrap();
        let (binary, _) = train_smo(&problem(&pts, &labels), &cfg).unwrap();
        for _ in 0..100 {
            let q = fv(&random_ids(&mut rng, 6, 5));
            queries += 1;
            let want = TagId(if binary.predict(&q).0 > 0 { 0 } else { 1 });
            if pair.predict(&q).tag != want {
                mismatches += 1;
            }
        }
    }
    Outcome::new(
        queries == 1000 && mismatches == 0,
        format!("{queries} queries, {mismatches} mismatches"),
    )
}

fn pct(p: Option<f64>) -> f64 {
    100.0 * p.unwrap_or(f64::NAN)
}

fn ambiguous(report: &ComparisonReport, method: Method, features: &str) -> f64 {
    pct(report.row(method, features).unwrap().metrics.ambiguous_precision())
}

/// Benchmark comparison on the seed-42 corpus with and without word
/// features. Returns the report, the number of ambiguous training tokens
/// and the elapsed time of the full-feature half.
fn benchmark() -> (ComparisonReport, usize, Duration) {
    let corpus = generate_synthetic_corpus(&SyntheticCorpusSpec::benchmark(42)).unwrap();
    let (train, test) = split(&corpus.sentences, DEFAULT_TRAIN_FRACTION);
    let (lexicon, _) = build_lexicon(&train).unwrap();
    let ambiguous_tokens = partition_tokens(&train, &lexicon).ambiguous.len();
    let full = FeatureConfig::default();
    let lc = LearnerConfig::default();
    let start = Instant::now();
    let mut report = run_comparison(&train, &test, &Method::ALL, &[full], &lc).unwrap();
    let elapsed = start.elapsed();
    let learners = [Method::DecisionList, Method::MaxEnt, Method::Svm];
    let ablated = run_comparison(&train, &test, &learners, &[full.without_words()], &lc).unwrap();
    report.rows.extend(ablated.rows);
    (report, ambiguous_tokens, elapsed)
}

fn ordering(report: &ComparisonReport, ambiguous_tokens: usize, elapsed: Duration) -> Outcome {
    let full = FeatureConfig::default().label();
    let svm = ambiguous(report, Method::Svm, &full);
    let dlist = ambiguous(report, Method::DecisionList, &full);
    let maxent = ambiguous(report, Method::MaxEnt, &full);
    let base = ambiguous(report, Method::Baseline, &full);
    Outcome::new(
        ambiguous_tokens >= 5000 && svm >= dlist + 5.0 && svm > base && within(elapsed, 300.0),
        format!(
            "{ambiguous_tokens} ambiguous training tokens; ambiguous precision: svm {svm:.1}%, \
             decision list {dlist:.1}%, maximum entropy {maxent:.1}%, baseline {base:.1}%"
        ),
    )
}

fn ablation(report: &ComparisonReport) -> Outcome {
    let full = ambiguous(report, Method::Svm, &FeatureConfig::default().label());
    let no_word = ambiguous(report, Method::Svm, &FeatureConfig::default().without_words().label());
    let others: Vec<String> = [Method::DecisionList, Method::MaxEnt]
        .into_iter()
        .map(|m| format!("{m} {:.1}%", ambiguous(report, m, &FeatureConfig::default().without_words().label())))
        .collect();
    Outcome::new(
        no_word <= full,
        format!("svm {full:.1}% -> {no_word:.1}% without words; others without words: {}", others.join(", ")),
    )
}

fn decomposes(m: &Metrics) -> bool {
    m.all.total == m.ambiguous.total + m.unambiguous.total + m.unknown.total
        && m.all.correct == m.ambiguous.correct + m.unambiguous.correct + m.unknown.correct
}

fn all_words_relation(report: &ComparisonReport) -> Outcome {
    let mut bad = Vec::new();
    let mut dictionary_exact = 0;
    for row in &report.rows {
        let m = &row.metrics;
        if m.unambiguous.correct == m.unambiguous.total {
            dictionary_exact += 1;
        }
        let relation = m.all_words_precision() >= m.ambiguous_precision();
        if !decomposes(m) || !relation {
            bad.push(format!("{} {}", row.method, row.features));
        }
    }
    Outcome::new(
        bad.is_empty(),
        format!(
            "{} evaluations, {dictionary_exact} with every dictionary assignment correct, violations {bad:?}",
            report.rows.len()
        ),
    )
}

fn reproducibility() -> Outcome {
    let dir = tempfile::TempDir::new().unwrap();
    let records = dir.path().join("records.jsonl");
    let records = records.to_str().unwrap();
    let argv = [
        "seqtag",
        "compare",
        "--seed",
        "42",
        "--sentences",
        "1200",
        "--ablation",
        "--records",
        records,
    ];
    let mut runs = Vec::new();
    for _ in 0..2 {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = seqtag_cli::run_with(argv, &mut out, &mut err);
        runs.push((code, out, std::fs::read(records).unwrap_or_default()));
    }
    let same = runs[0] == runs[1];
    Outcome::new(
        same && runs[0].0 == 0 && !runs[0].1.is_empty(),
        format!(
            "exit codes {} and {}, report {} bytes, records {} bytes, identical: {same}",
            runs[0].0,
            runs[1].0,
            runs[0].1.len(),
            runs[0].2.len()
        ),
    )
}

fn report(n: usize, title: &str, elapsed: Duration, outcome: &Outcome) {
    let verdict = if outcome.pass { "PASS" } else { "FAIL" };
    println!("{verdict} {n:>2} {title} [{:.2}s] {}", elapsed.as_secs_f64(), outcome.detail);
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let value = f();
    (value, start.elapsed())
}

fn main() {
    let mut models = Vec::new();
    let mut outcomes = Vec::new();

    let (o, t) = timed(|| smo_oracle(&mut models));
    outcomes.push((1, "SMO reaches the dual optimum", t, o));
    let (o, t) = timed(|| separable_margin(&mut models));
    outcomes.push((2, "separable sets attain unit margin", t, o));
    let (o, t) = timed(|| dual_feasibility(models));
    outcomes.push((3, "trained models are dual feasible", t, o));
    let (o, t) = timed(gram_psd);
    outcomes.push((4, "Gram matrices are symmetric PSD", t, o));
    let (o, t) = timed(gis_constraints);
    outcomes.push((5, "GIS satisfies its constraints", t, o));
    let (o, t) = timed(decision_list_oracle);
    outcomes.push((6, "decision list matches brute force", t, o));
    let (o, t) = timed(pairwise_reduction);
    outcomes.push((7, "two-tag pairwise equals binary", t, o));

    let ((bench, tokens, full_time), t) = timed(benchmark);
    println!("{}", bench.to_text(true));
    outcomes.push((8, "SVM beats decision list and baseline", full_time, ordering(&bench, tokens, full_time)));
    outcomes.push((9, "removing word features does not help SVM", t - full_time, ablation(&bench)));
    outcomes.push((10, "all-words precision decomposes and dominates", Duration::ZERO, all_words_relation(&bench)));
    let (o, t) = timed(reproducibility);
    outcomes.push((11, "compare is byte-reproducible", t, o));

    for (n, title, elapsed, outcome) in &outcomes {
        report(*n, title, *elapsed, outcome);
    }
    let failed = outcomes.iter().filter(|o| !o.3.pass).count();
    println!("{} passed, {failed} failed", outcomes.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
