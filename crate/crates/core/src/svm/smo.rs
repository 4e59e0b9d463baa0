//! Binary soft-margin SVM trained by sequential minimal optimization.
//!
//! The dual is
//!
//! ```text
//! maximize   L(α) = Σ α_i − ½ Σ_i Σ_j α_i α_j y_i y_j K(x_i, x_j)
//! subject to 0 ≤ α_i ≤ C,   Σ α_i y_i = 0
//! ```
//!
//! Each step picks the maximal KKT violator `i`, then the partner `j` whose
//! joint update gains the most (second-order selection), and solves the
//! two-variable subproblem in closed form. Training stops once the largest
//! violating pair's gradient gap drops below `kkt_tolerance`.
//!
//! The bias is not averaged over free support vectors. With
//! `b_i = Σ_j α_j y_j K(x_j, x_i)` over all training points it is
//! `b = −(max_{y_i = −1} b_i + min_{y_i = +1} b_i) / 2`.

use std::io::Write;

use super::kernel::{kernel, KernelMatrix};
use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::textio::{field, LineReader};

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmConfig {
    pub c: f64,
    pub degree: u32,
    pub kkt_tolerance: f64,
    /// Iteration budget in units of the problem size: at most
    /// `max_passes × n` two-variable updates.
    pub max_passes: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            c: 1.0,
            degree: 2,
            kkt_tolerance: 1e-3,
            max_passes: 1000,
        }
    }
}

impl SvmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidConfig(format!("C must be positive, got {}", self.c)));
        }
        if self.degree == 0 {
            return Err(Error::InvalidConfig("degree must be at least 1".into()));
        }
        if self.kkt_tolerance.is_nan() || self.kkt_tolerance <= 0.0 {
            return Err(Error::InvalidConfig("KKT tolerance must be positive".into()));
        }
        if self.max_passes == 0 {
            return Err(Error::InvalidConfig("max passes must be at least 1".into()));
        }
        Ok(())
    }
}

/// Training points with labels in `{+1, −1}`; both labels present.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryProblem {
    contexts: Vec<FeatureVector>,
    labels: Vec<i8>,
}

impl BinaryProblem {
    pub fn new(contexts: Vec<FeatureVector>, labels: Vec<i8>) -> Result<Self> {
        if contexts.len() != labels.len() {
            return Err(Error::InvalidConfig(format!(
                "{} contexts but {} labels",
                contexts.len(),
                labels.len()
            )));
        }
        if labels.iter().any(|&y| y != 1 && y != -1) {
            return Err(Error::InvalidConfig("labels must be +1 or -1".into()));
        }
        if !(labels.contains(&1) && labels.contains(&-1)) {
            return Err(Error::DegenerateProblem);
        }
        Ok(BinaryProblem { contexts, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn contexts(&self) -> &[FeatureVector] {
        &self.contexts
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoReport {
    pub iterations: usize,
    pub converged: bool,
    /// Final `max_{I_up} −y G − min_{I_low} −y G`.
    pub kkt_gap: f64,
    /// Dual objective `L(α)` at the returned point.
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    /// One multiplier per training point, zeros included.
    pub alphas: Vec<f64>,
    pub report: SmoReport,
}

/// Solves the dual and returns every multiplier.
pub fn solve_dual(problem: &BinaryProblem, config: &SvmConfig) -> Result<DualSolution> {
    config.validate()?;
    let n = problem.len();
    let y: Vec<f64> = problem.labels.iter().map(|&l| l as f64).collect();
    let c = config.c;
    let mut kernel = KernelMatrix::new(&problem.contexts, config.degree);
    let diag: Vec<f64> = (0..n).map(|i| kernel.diag(i)).collect();

    let mut alpha = vec![0.0; n];
    // G = Qα − e with Q_ij = y_i y_j K_ij
    let mut grad = vec![-1.0; n];
    let budget = config.max_passes.saturating_mul(n).max(1);

    let in_up = |a: f64, yi: f64| if yi > 0.0 { a < c } else { a > 0.0 };
    let in_low = |a: f64, yi: f64| if yi > 0.0 { a > 0.0 } else { a < c };

    let mut iterations = 0;
    let (converged, gap) = loop {
        // maximal violator
        let mut g_max = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..n {
            if in_up(alpha[t], y[t]) && -y[t] * grad[t] >= g_max {
                g_max = -y[t] * grad[t];
                i = t;
            }
        }
        let mut g_max2 = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        if i != usize::MAX {
            let row_i = kernel.row(i);
            let mut best = f64::INFINITY;
            for t in 0..n {
                if !in_low(alpha[t], y[t]) {
                    continue;
                }
                let v = y[t] * grad[t];
                if v >= g_max2 {
                    g_max2 = v;
                }
                let diff = g_max + v;
                if diff > 0.0 {
                    let k_it = kernel.value(row_i[t]);
                    let quad = diag[i] + diag[t] - 2.0 * y[i] * y[t] * k_it;
                    let gain = -(diff * diff) / if quad > 0.0 { quad } else { TAU };
                    if gain <= best {
                        best = gain;
                        j = t;
                    }
                }
            }
        }
        let gap = g_max + g_max2;
        if i == usize::MAX || j == usize::MAX || gap < config.kkt_tolerance {
            break (true, gap.max(0.0));
        }
        if iterations >= budget {
            break (false, gap);
        }
        iterations += 1;

        let row_i = kernel.row(i);
        let row_j = kernel.row(j);
        let q_ij = y[i] * y[j] * kernel.value(row_i[j]);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let quad = diag[i] + diag[j] + 2.0 * q_ij;
            let quad = if quad > 0.0 { quad } else { TAU };
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = diag[i] + diag[j] - 2.0 * q_ij;
            let quad = if quad > 0.0 { quad } else { TAU };
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let d_i = alpha[i] - old_i;
        let d_j = alpha[j] - old_j;
        for t in 0..n {
            grad[t] += y[t]
                * (y[i] * kernel.value(row_i[t]) * d_i + y[j] * kernel.value(row_j[t]) * d_j);
        }
    };

    let objective = alpha
        .iter()
        .zip(&grad)
        .map(|(a, g)| 0.5 * a * (1.0 - g))
        .sum();
    Ok(DualSolution {
        alphas: alpha,
        report: SmoReport {
            iterations,
            converged,
            kkt_gap: gap,
            objective,
        },
    })
}

/// `L(α)` evaluated directly from the kernel.
pub fn dual_objective(problem: &BinaryProblem, alphas: &[f64], degree: u32) -> f64 {
    assert_eq!(alphas.len(), problem.len(), "one multiplier per point");
    let x = &problem.contexts;
    let y = &problem.labels;
    let mut linear = 0.0;
    let mut quadratic = 0.0;
    for i in 0..x.len() {
        linear += alphas[i];
        if alphas[i] == 0.0 {
            continue;
        }
        for j in 0..x.len() {
            quadratic += alphas[i]
                * alphas[j]
                * f64::from(y[i])
                * f64::from(y[j])
                * kernel(&x[i], &x[j], degree);
        }
    }
    linear - 0.5 * quadratic
}

fn bias_from_matrix(problem: &BinaryProblem, alphas: &[f64], kernel: &mut KernelMatrix<'_>) -> f64 {
    let n = problem.len();
    let mut b = vec![0.0; n];
    for (j, &a) in alphas.iter().enumerate() {
        if a == 0.0 {
            continue;
        }
        let coef = a * f64::from(problem.labels[j]);
        let row = kernel.row(j);
        for (bi, &o) in b.iter_mut().zip(row.iter()) {
            *bi += coef * kernel.value(o);
        }
    }
    let mut max_neg = f64::NEG_INFINITY;
    let mut min_pos = f64::INFINITY;
    for (bi, &y) in b.iter().zip(&problem.labels) {
        if y < 0 {
            max_neg = max_neg.max(*bi);
        } else {
            min_pos = min_pos.min(*bi);
        }
    }
    -(max_neg + min_pos) / 2.0
}

/// Bias from the extrema of `b_i` over all training points.
pub fn compute_bias(problem: &BinaryProblem, alphas: &[f64], config: &SvmConfig) -> f64 {
    assert_eq!(alphas.len(), problem.len(), "one multiplier per point");
    let mut kernel = KernelMatrix::new(&problem.contexts, config.degree);
    bias_from_matrix(problem, alphas, &mut kernel)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupportVector {
    pub context: FeatureVector,
    pub alpha: f64,
    pub label: i8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmBinaryModel {
    support: Vec<SupportVector>,
    bias: f64,
    config: SvmConfig,
}

impl SvmBinaryModel {
    pub fn from_parts(support: Vec<SupportVector>, bias: f64, config: SvmConfig) -> Self {
        SvmBinaryModel {
            support,
            bias,
            config,
        }
    }

    pub fn support_vectors(&self) -> &[SupportVector] {
        &self.support
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn config(&self) -> &SvmConfig {
        &self.config
    }

    /// `Σ α_i y_i K(x_i, x) + b`.
    pub fn margin(&self, x: &FeatureVector) -> f64 {
        self.support
            .iter()
            .map(|sv| sv.alpha * f64::from(sv.label) * kernel(&sv.context, x, self.config.degree))
            .sum::<f64>()
            + self.bias
    }

    /// Label and margin; a margin of exactly zero maps to +1.
    pub fn predict(&self, x: &FeatureVector) -> (i8, f64) {
        let m = self.margin(x);
        (sign(m), m)
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "C\t{:?}", self.config.c)?;
        writeln!(out, "degree\t{}", self.config.degree)?;
        writeln!(out, "kkt_tol\t{:?}", self.config.kkt_tolerance)?;
        writeln!(out, "max_passes\t{}", self.config.max_passes)?;
        writeln!(out, "bias\t{:?}", self.bias)?;
        writeln!(out, "support\t{}", self.support.len())?;
        for sv in &self.support {
            let ids: Vec<String> = sv.context.ids().iter().map(|f| f.to_string()).collect();
            writeln!(out, "{:?}\t{}\t{}", sv.alpha, sv.label, ids.join(" "))?;
        }
        Ok(())
    }

    pub(crate) fn read_from(reader: &mut LineReader<'_>) -> Result<Self> {
        const S: &str = "svm";
        let config = SvmConfig {
            c: reader.parsed(S, "C")?,
            degree: reader.parsed(S, "degree")?,
            kkt_tolerance: reader.parsed(S, "kkt_tol")?,
            max_passes: reader.parsed(S, "max_passes")?,
        };
        config
            .validate()
            .map_err(|e| Error::corrupt(S, e.to_string()))?;
        let bias: f64 = reader.parsed(S, "bias")?;
        let n: usize = reader.parsed(S, "support")?;
        let mut support = Vec::with_capacity(n);
        for _ in 0..n {
            let line = reader.next_line(S)?;
            let mut cols = line.split('\t');
            let alpha: f64 = field(S, line, cols.next())?;
            let label: i8 = field(S, line, cols.next())?;
            let ids = cols
                .next()
                .ok_or_else(|| Error::corrupt(S, format!("bad line `{line}`")))?;
            let ids = ids
                .split_whitespace()
                .map(|t| t.parse::<u32>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| Error::corrupt(S, format!("bad feature ids `{line}`")))?;
            if !(alpha > 0.0 && alpha <= config.c) || (label != 1 && label != -1) {
                return Err(Error::corrupt(S, format!("bad support vector `{line}`")));
            }
            support.push(SupportVector {
                context: FeatureVector::from_ids(ids),
                alpha,
                label,
            });
        }
        Ok(SvmBinaryModel::from_parts(support, bias, config))
    }
}

#[inline]
pub(crate) fn sign(x: f64) -> i8 {
    if x >= 0.0 {
        1
    } else {
        -1
    }
}

/// Solves the dual, computes the bias and keeps the points with `α > 0`.
pub fn train_smo(problem: &BinaryProblem, config: &SvmConfig) -> Result<(SvmBinaryModel, SmoReport)> {
    let solution = solve_dual(problem, config)?;
    let mut kernel = KernelMatrix::new(&problem.contexts, config.degree);
    let bias = bias_from_matrix(problem, &solution.alphas, &mut kernel);
    let support = solution
        .alphas
        .iter()
        .zip(problem.contexts.iter().zip(&problem.labels))
        .filter(|(&a, _)| a > 0.0)
        .map(|(&alpha, (x, &label))| SupportVector {
            context: x.clone(),
            alpha,
            label,
        })
        .collect();
    Ok((SvmBinaryModel::from_parts(support, bias, *config), solution.report))
}
