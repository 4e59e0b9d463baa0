//! Independent reference implementations used by the integration tests
//! and the acceptance suite. Nothing here calls into the solver code it
//! checks.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use nalgebra::{DMatrix, DVector};

/// `(|x ∩ y| + 1)^d` on plain id lists.
pub fn kernel_ref(x: &[u32], y: &[u32], degree: u32) -> f64 {
    let a: BTreeSet<_> = x.iter().collect();
    let overlap = y.iter().collect::<BTreeSet<_>>().intersection(&a).count();
    (overlap as f64 + 1.0).powi(degree as i32)
}

pub fn gram(points: &[Vec<u32>], degree: u32) -> DMatrix<f64> {
    let n = points.len();
    DMatrix::from_fn(n, n, |i, j| kernel_ref(&points[i], &points[j], degree))
}

/// `Σ α − ½ αᵀ Q α` with `Q_ij = y_i y_j K_ij`, written as a matrix product.
pub fn dual_value(k: &DMatrix<f64>, y: &[f64], alpha: &[f64]) -> f64 {
    let n = y.len();
    let ay = DVector::from_fn(n, |i, _| alpha[i] * y[i]);
    alpha.iter().sum::<f64>() - 0.5 * (ay.transpose() * k * &ay)[(0, 0)]
}

/// Exact maximum of the dual by enumerating faces of the box.
///
/// Every coordinate is fixed at 0, fixed at C, or free. On each face the
/// stationarity conditions `(Qα)_i + ν y_i = 1` (free i) together with
/// `yᵀα = 0` form a linear system, solved in the least-squares sense by
/// SVD. Consistent solutions inside the box are candidates; the best
/// candidate is the optimum. An optimum with the fewest free coordinates
/// is the unique stationary point of its face, so it is always found.
pub fn exact_dual_max(k: &DMatrix<f64>, y: &[f64], c: f64) -> (f64, Vec<f64>) {
    let n = y.len();
    let q = DMatrix::from_fn(n, n, |i, j| y[i] * y[j] * k[(i, j)]);
    let mut best = (f64::NEG_INFINITY, vec![0.0; n]);
    let faces = 3usize.pow(n as u32);
    for code in 0..faces {
        let mut state = vec![0u8; n];
        let mut rest = code;
        for s in state.iter_mut() {
            *s = (rest % 3) as u8;
            rest /= 3;
        }
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        let mut alpha: Vec<f64> = state.iter().map(|&s| if s == 1 { c } else { 0.0 }).collect();
        if !free.is_empty() {
            let m = free.len();
            let mut a = DMatrix::zeros(m + 1, m + 1);
            let mut b = DVector::zeros(m + 1);
            for (r, &i) in free.iter().enumerate() {
                for (s, &j) in free.iter().enumerate() {
                    a[(r, s)] = q[(i, j)];
                }
                a[(r, m)] = y[i];
                let fixed: f64 = (0..n).filter(|&j| state[j] != 2).map(|j| q[(i, j)] * alpha[j]).sum();
                b[r] = 1.0 - fixed;
                a[(m, r)] = y[i];
            }
            b[m] = -(0..n).filter(|&j| state[j] != 2).map(|j| y[j] * alpha[j]).sum::<f64>();
            let svd = a.clone().svd(true, true);
            let Ok(sol) = svd.solve(&b, 1e-10) else { continue };
            if (&a * &sol - &b).norm() > 1e-8 {
                continue;
            }
            for (r, &i) in free.iter().enumerate() {
                alpha[i] = sol[r];
            }
        }
        let feasible = alpha.iter().all(|&v| v >= -1e-9 && v <= c + 1e-9)
            && alpha.iter().zip(y).map(|(a, y)| a * y).sum::<f64>().abs() < 1e-8;
        if !feasible {
            continue;
        }
        let value = dual_value(k, y, &alpha);
        if value > best.0 {
            best = (value, alpha);
        }
    }
    best
}

/// `Q_ij = y_i y_j K_ij` flattened row-major, for the grid searches.
fn flat_q(k: &DMatrix<f64>, y: &[f64]) -> Vec<f64> {
    let n = y.len();
    (0..n * n).map(|t| y[t / n] * y[t % n] * k[(t / n, t % n)]).collect()
}

fn flat_dual(q: &[f64], alpha: &[f64]) -> f64 {
    let n = alpha.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += alpha[i] * alpha[j] * q[i * n + j];
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

/// Best dual value over the lattice `axis[0] × … × axis[n−2]`, the last
/// multiplier being fixed by the equality constraint and required to land
/// in `[0, C]`. Returns the value and the maximizing first `n − 1`
/// coordinates.
fn lattice_max(q: &[f64], y: &[f64], c: f64, axis: &[Vec<f64>]) -> (f64, Vec<f64>) {
    let n = y.len();
    let mut best = (f64::NEG_INFINITY, vec![0.0; n - 1]);
    if axis.iter().any(Vec::is_empty) {
        return best;
    }
    let mut idx = vec![0usize; n - 1];
    let mut alpha = vec![0.0; n];
    loop {
        for i in 0..n - 1 {
            alpha[i] = axis[i][idx[i]];
        }
        let partial: f64 = (0..n - 1).map(|i| alpha[i] * y[i]).sum();
        let last = -partial * y[n - 1];
        if (-1e-12..=c + 1e-12).contains(&last) {
            alpha[n - 1] = last.clamp(0.0, c);
            let v = flat_dual(q, &alpha);
            if v > best.0 {
                best = (v, alpha[..n - 1].to_vec());
            }
        }
        let mut d = 0;
        loop {
            if d == n - 1 {
                return best;
            }
            idx[d] += 1;
            if idx[d] < axis[d].len() {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

/// Grid search over the feasible region with spacing `step`: the first
/// `n − 1` multipliers range over the grid, the last one is fixed by the
/// equality constraint and must land in `[0, C]`. Returns `None` when the
/// grid would have more than `budget` points.
pub fn grid_dual_max(k: &DMatrix<f64>, y: &[f64], c: f64, step: f64, budget: u64) -> Option<f64> {
    let n = y.len();
    let per_axis = (c / step).round() as u64 + 1;
    if per_axis.checked_pow((n - 1) as u32).is_none_or(|p| p > budget) {
        return None;
    }
    let line: Vec<f64> = (0..per_axis).map(|t| (t as f64 * step).min(c)).collect();
    let axis = vec![line; n - 1];
    Some(lattice_max(&flat_q(k, y), y, c, &axis).0)
}

/// Coarse-to-fine grid search: a grid of spacing `C/10`, then repeated
/// local grids of ±5 steps around the incumbent with the spacing divided by
/// 5, down to `final_step`. Every point visited is feasible, so the result
/// is a lower bound on the true maximum.
pub fn refined_grid_dual_max(k: &DMatrix<f64>, y: &[f64], c: f64, final_step: f64) -> f64 {
    let n = y.len();
    let q = flat_q(k, y);
    let mut step = c / 10.0;
    let mut center = vec![c / 2.0; n - 1];
    const HALF: i64 = 5;
    let mut best = f64::NEG_INFINITY;
    loop {
        let axis: Vec<Vec<f64>> = center
            .iter()
            .map(|&m| {
                (-HALF..=HALF)
                    .map(|t| m + t as f64 * step)
                    .filter(|v| (-1e-12..=c + 1e-12).contains(v))
                    .map(|v| v.clamp(0.0, c))
                    .collect()
            })
            .collect();
        let (value, at) = lattice_max(&q, y, c, &axis);
        if value > best {
            best = value;
            center = at;
        }
        if step <= final_step + 1e-15 {
            return best;
        }
        step = (step / 5.0).max(final_step);
    }
}

/// Decision-function value `Σ α_i y_i K(x_i, x) + b` written out directly.
pub fn margin_ref(points: &[Vec<u32>], y: &[f64], alpha: &[f64], b: f64, x: &[u32], degree: u32) -> f64 {
    (0..points.len())
        .map(|i| alpha[i] * y[i] * kernel_ref(&points[i], x, degree))
        .sum::<f64>()
        + b
}

/// `b = −(max_{y=−1} b_i + min_{y=+1} b_i)/2` over all points.
pub fn bias_ref(points: &[Vec<u32>], y: &[f64], alpha: &[f64], degree: u32) -> f64 {
    let bi: Vec<f64> = (0..points.len())
        .map(|i| margin_ref(points, y, alpha, 0.0, &points[i], degree))
        .collect();
    let max_neg = (0..bi.len()).filter(|&i| y[i] < 0.0).map(|i| bi[i]).fold(f64::NEG_INFINITY, f64::max);
    let min_pos = (0..bi.len()).filter(|&i| y[i] > 0.0).map(|i| bi[i]).fold(f64::INFINITY, f64::min);
    -(max_neg + min_pos) / 2.0
}

/// Brute-force decision-list prediction: for every feature present, find
/// the tag with the highest conditional frequency; the feature whose best
/// frequency is highest wins. Ties: higher feature count, lower feature,
/// lower tag. `None` when no present feature was seen in training.
pub fn decision_list_ref(examples: &[(Vec<u32>, u32)], context: &[u32]) -> Option<u32> {
    let mut pair: HashMap<(u32, u32), u64> = HashMap::new();
    let mut feat: HashMap<u32, u64> = HashMap::new();
    for (fs, t) in examples {
        for &f in fs.iter().collect::<BTreeSet<_>>() {
            *pair.entry((f, *t)).or_default() += 1;
            *feat.entry(f).or_default() += 1;
        }
    }
    // (score numerator, score denominator, feature count, feature, tag)
    let mut best: Option<(u64, u64, u64, u32, u32)> = None;
    for &f in context.iter().collect::<BTreeSet<_>>() {
        let Some(&nf) = feat.get(&f) else { continue };
        let mut tags: Vec<u32> = pair.keys().filter(|(g, _)| *g == f).map(|&(_, t)| t).collect();
        tags.sort();
        for t in tags {
            let c = pair[&(f, t)];
            let better = match best {
                None => true,
                Some((bc, bn, bfc, bf, bt)) => {
                    let lhs = c as u128 * bn as u128;
                    let rhs = bc as u128 * nf as u128;
                    lhs > rhs
                        || (lhs == rhs && nf > bfc)
                        || (lhs == rhs && nf == bfc && f < bf)
                        || (lhs == rhs && nf == bfc && f == bf && t < bt)
                }
            };
            if better {
                best = Some((c, nf, nf, f, t));
            }
        }
    }
    best.map(|b| b.4)
}

/// Conditional expectations of every `(feature, tag)` indicator under
/// `probs` (one distribution per example) and under the empirical labels,
/// returned as the largest absolute difference over seen features × tags.
pub fn constraint_residual_ref(examples: &[(Vec<u32>, u32)], probs: &[Vec<f64>], tags: usize) -> f64 {
    let n = examples.len() as f64;
    let mut emp: HashMap<(u32, usize), f64> = HashMap::new();
    let mut model: HashMap<(u32, usize), f64> = HashMap::new();
    for ((fs, t), p) in examples.iter().zip(probs) {
        for &f in fs.iter().collect::<BTreeSet<_>>() {
            *emp.entry((f, *t as usize)).or_default() += 1.0 / n;
            for (a, pa) in p.iter().enumerate().take(tags) {
                *model.entry((f, a)).or_default() += pa / n;
            }
        }
    }
    model
        .iter()
        .map(|(k, m)| (m - emp.get(k).copied().unwrap_or(0.0)).abs())
        .fold(0.0, f64::max)
}
