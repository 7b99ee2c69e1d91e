//! List learning of sparse linear classifiers from mostly-corrupted samples.
//!
//! An s-sparse linear classifier predicts 1 iff sum_j weights[j] *
//! x[support[j]] >= 1. When only an alpha fraction of a sample is labeled
//! consistently with such a classifier (the rest arbitrary), no single
//! hypothesis can be identified, but a short list containing a good one can:
//! enumerate every s-subset of coordinates and every s-subset of examples,
//! and solve the linear system that makes those examples sit exactly at the
//! margin-nu boundary of their label. Labels enter in signed form
//! ytilde = 2y - 1, giving rows ytilde_j * x_j and right-hand sides
//! ytilde_j - nu.
//!
//! Ill-conditioned tuples (condition number above [`CONDITION_CUTOFF`]) are
//! skipped silently; enumeration order is lexicographic over (coordinate
//! tuple, example tuple), so the output order is deterministic.

use crate::data::{Classifier, Dataset};
use crate::error::{invalid, Error, Result};
use crate::fmath;
use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

/// Tuples whose s x s system has 2-norm condition number above this are
/// dropped.
pub const CONDITION_CUTOFF: f64 = 1e10;

/// Weight agreement tolerance used when deduplicating the list.
pub const DEDUP_TOL: f64 = 1e-9;

/// The fixed decision threshold of every listed classifier.
pub const SPARSE_THRESHOLD: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SparseListConfig {
    /// Sparsity s >= 1 of the candidate classifiers.
    pub s: usize,
    /// Number of examples to enumerate over (the first m of the dataset).
    pub m: usize,
    /// Margin offset nu > 0 in the right-hand side ytilde - nu.
    pub nu: f64,
    /// Collapse classifiers whose weights agree within [`DEDUP_TOL`].
    pub dedup: bool,
}

impl SparseListConfig {
    pub fn new(s: usize, m: usize, nu: f64) -> Result<Self> {
        if s == 0 {
            return Err(invalid("s", "sparsity must be at least 1"));
        }
        if m < s {
            return Err(invalid("m", "need at least s examples"));
        }
        if !(nu.is_finite() && nu > 0.0) {
            return Err(invalid("nu", "margin must be positive and finite"));
        }
        Ok(SparseListConfig {
            s,
            m,
            nu,
            dedup: true,
        })
    }

    pub fn without_dedup(mut self) -> Self {
        self.dedup = false;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SparseRepr", into = "SparseRepr")]
pub struct SparseLinearClassifier {
    support: Vec<usize>,
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct SparseRepr {
    support: Vec<usize>,
    weights: Vec<f64>,
    threshold: f64,
}

impl TryFrom<SparseRepr> for SparseLinearClassifier {
    type Error = Error;
    fn try_from(r: SparseRepr) -> Result<Self> {
        if r.threshold != SPARSE_THRESHOLD {
            return Err(invalid("threshold", "sparse classifiers have a fixed threshold of 1"));
        }
        SparseLinearClassifier::new(r.support, r.weights)
    }
}

impl From<SparseLinearClassifier> for SparseRepr {
    fn from(c: SparseLinearClassifier) -> SparseRepr {
        SparseRepr {
            support: c.support,
            weights: c.weights,
            threshold: SPARSE_THRESHOLD,
        }
    }
}

impl SparseLinearClassifier {
    pub fn new(support: Vec<usize>, weights: Vec<f64>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::EmptyInput("support"));
        }
        if support.len() != weights.len() {
            return Err(invalid("weights", "support and weights lengths differ"));
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("support", "support indices must be strictly increasing"));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite("weights"));
        }
        Ok(SparseLinearClassifier { support, weights })
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn threshold(&self) -> f64 {
        SPARSE_THRESHOLD
    }

    /// Predicts 1 iff the sparse inner product reaches the threshold.
    pub fn predict(&self, x: &[f64]) -> bool {
        let mut acc = 0.0;
        for (j, &coord) in self.support.iter().enumerate() {
            acc += self.weights[j] * x[coord];
        }
        acc >= SPARSE_THRESHOLD
    }

    pub fn to_classifier(&self) -> Classifier {
        Classifier::Sparse {
            support: self.support.clone(),
            weights: self.weights.clone(),
            t: SPARSE_THRESHOLD,
        }
    }
}

/// A list entry together with the tuple that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct ListEntry {
    pub classifier: SparseLinearClassifier,
    /// Coordinate tuple (strictly increasing).
    pub coords: Vec<usize>,
    /// Example indices (strictly increasing) whose system was solved.
    pub examples: Vec<usize>,
}

/// Enumerates candidate sparse classifiers from the first `cfg.m` examples.
pub fn sparse_list(data: &Dataset, cfg: &SparseListConfig) -> Result<Vec<SparseLinearClassifier>> {
    Ok(sparse_list_detailed(data, cfg)?
        .into_iter()
        .map(|e| e.classifier)
        .collect())
}

/// As [`sparse_list`], but keeps tuple provenance. With dedup enabled the
/// first tuple producing a weight vector is the one recorded.
pub fn sparse_list_detailed(data: &Dataset, cfg: &SparseListConfig) -> Result<Vec<ListEntry>> {
    let d = data.dim();
    let s = cfg.s;
    if s > d {
        return Err(invalid("s", "sparsity exceeds the dimension"));
    }
    if data.len() < cfg.m {
        return Err(invalid("m", "dataset has fewer than m examples"));
    }

    let mut entries = Vec::new();
    let mut seen: BTreeMap<(Vec<usize>, Vec<i128>), ()> = BTreeMap::new();
    let mut mat = alloc::vec![0.0; s * s];
    let mut rhs = alloc::vec![0.0; s];

    let mut coords: Vec<usize> = (0..s).collect();
    loop {
        let mut exs: Vec<usize> = (0..s).collect();
        loop {
            for (j, &ex) in exs.iter().enumerate() {
                let ysign = if data.y(ex) { 1.0 } else { -1.0 };
                let x = data.x(ex);
                for (k, &coord) in coords.iter().enumerate() {
                    mat[j * s + k] = ysign * x[coord];
                }
                rhs[j] = ysign - cfg.nu;
            }
            if let Some(weights) = solve_well_conditioned(&mat, &rhs, s) {
                let classifier = SparseLinearClassifier::new(coords.clone(), weights)?;
                let keep = if cfg.dedup {
                    let key = (
                        classifier.support.clone(),
                        classifier.weights.iter().map(|&w| quantize(w)).collect(),
                    );
                    seen.insert(key, ()).is_none()
                } else {
                    true
                };
                if keep {
                    entries.push(ListEntry {
                        classifier,
                        coords: coords.clone(),
                        examples: exs.clone(),
                    });
                }
            }
            if !next_combination(&mut exs, cfg.m) {
                break;
            }
        }
        if !next_combination(&mut coords, d) {
            break;
        }
    }
    Ok(entries)
}

fn quantize(w: f64) -> i128 {
    fmath::round(w / DEDUP_TOL) as i128
}

/// Advances a strictly-increasing index tuple to its lexicographic successor
/// below `n`. Returns false when exhausted.
fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] != i + n - k {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Solves the s x s system if its condition number is below the cutoff.
fn solve_well_conditioned(mat: &[f64], rhs: &[f64], s: usize) -> Option<Vec<f64>> {
    if condition_number(mat, s) > CONDITION_CUTOFF {
        return None;
    }
    let w = solve_lu(mat, rhs, s)?;
    if w.iter().any(|c| !c.is_finite()) {
        return None;
    }
    Some(w)
}

/// 2-norm condition number via one-sided Jacobi SVD. Working on the matrix
/// itself (never its Gram matrix) keeps small singular values resolvable
/// down to machine precision times the largest, which the cutoff needs.
/// Returns infinity for singular or non-finite systems.
fn condition_number(mat: &[f64], s: usize) -> f64 {
    if mat.iter().any(|v| !v.is_finite()) {
        return f64::INFINITY;
    }
    let sv = singular_values(mat.to_vec(), s);
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for &v in &sv {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo <= 0.0 || hi == 0.0 {
        return f64::INFINITY;
    }
    hi / lo
}

/// Singular values of a row-major s x s matrix by one-sided Jacobi
/// rotations: column pairs are rotated until mutually orthogonal and the
/// singular values are the final column norms.
fn singular_values(mut a: Vec<f64>, s: usize) -> Vec<f64> {
    for _ in 0..60 {
        let mut rotated = false;
        for p in 0..s {
            for q in (p + 1)..s {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = 0.0;
                for k in 0..s {
                    let ap = a[k * s + p];
                    let aq = a[k * s + q];
                    alpha += ap * ap;
                    beta += aq * aq;
                    gamma += ap * aq;
                }
                if fmath::abs(gamma) <= 1e-18 * fmath::sqrt(alpha * beta) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = if zeta >= 0.0 {
                    1.0 / (zeta + fmath::sqrt(1.0 + zeta * zeta))
                } else {
                    -1.0 / (-zeta + fmath::sqrt(1.0 + zeta * zeta))
                };
                let c = 1.0 / fmath::sqrt(1.0 + t * t);
                let sn = c * t;
                for k in 0..s {
                    let ap = a[k * s + p];
                    let aq = a[k * s + q];
                    a[k * s + p] = c * ap - sn * aq;
                    a[k * s + q] = sn * ap + c * aq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    (0..s)
        .map(|j| {
            let mut acc = 0.0;
            for k in 0..s {
                acc += a[k * s + j] * a[k * s + j];
            }
            fmath::sqrt(acc)
        })
        .collect()
}

/// Gaussian elimination with partial pivoting.
fn solve_lu(mat: &[f64], rhs: &[f64], s: usize) -> Option<Vec<f64>> {
    let mut a = mat.to_vec();
    let mut b = rhs.to_vec();
    for col in 0..s {
        let mut pivot = col;
        let mut best = fmath::abs(a[col * s + col]);
        for row in (col + 1)..s {
            let v = fmath::abs(a[row * s + col]);
            if v > best {
                best = v;
                pivot = row;
            }
        }
        if best == 0.0 {
            return None;
        }
        if pivot != col {
            for k in 0..s {
                a.swap(col * s + k, pivot * s + k);
            }
            b.swap(col, pivot);
        }
        let diag = a[col * s + col];
        for row in (col + 1)..s {
            let f = a[row * s + col] / diag;
            if f == 0.0 {
                continue;
            }
            for k in col..s {
                a[row * s + k] -= f * a[col * s + k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut w = alloc::vec![0.0; s];
    for col in (0..s).rev() {
        let mut acc = b[col];
        for k in (col + 1)..s {
            acc -= a[col * s + k] * w[k];
        }
        w[col] = acc / a[col * s + col];
    }
    Some(w)
}

/// Sample size sufficient for the list to contain a good classifier:
/// ceil(constant * (s ln d + ln(1/delta)) / (alpha * epsilon)), at least 1.
pub fn list_sample_size(
    alpha: f64,
    epsilon: f64,
    delta: f64,
    s: usize,
    d: usize,
    constant: f64,
) -> Result<usize> {
    for (name, v) in [("alpha", alpha), ("epsilon", epsilon), ("delta", delta)] {
        if !(v.is_finite() && v > 0.0 && v <= 1.0) {
            return Err(invalid(name, "must lie in (0, 1]"));
        }
    }
    if s == 0 || d == 0 {
        return Err(invalid("s/d", "sparsity and dimension must be at least 1"));
    }
    if !(constant.is_finite() && constant > 0.0) {
        return Err(invalid("constant", "must be positive and finite"));
    }
    let raw = constant * (s as f64 * fmath::ln(d as f64) + fmath::ln(1.0 / delta))
        / (alpha * epsilon);
    Ok(fmath::ceil_at_least_one(raw))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitRng;
    use alloc::vec;

    #[test]
    fn hand_solved_one_dimensional_system() {
        // One example x = (2, 0), y = 1, nu = 0.5: on coordinate 0 the
        // system is 2w = 0.5, so w = 0.25. Coordinate 1 gives a singular
        // 1 x 1 system and is skipped.
        let mut data = Dataset::new(2).unwrap();
        data.push(&[2.0, 0.0], true).unwrap();
        let cfg = SparseListConfig::new(1, 1, 0.5).unwrap();
        let list = sparse_list(&data, &cfg).unwrap();
        assert_eq!(list.len(), 1);
        assert_eq!(list[0].support(), &[0]);
        assert_eq!(list[0].weights(), &[0.25]);
        assert_eq!(list[0].threshold(), 1.0);
    }

    #[test]
    fn negative_label_system() {
        // y = 0 maps to ytilde = -1: the system is -3w = -1 - nu.
        let mut data = Dataset::new(1).unwrap();
        data.push(&[3.0], false).unwrap();
        let cfg = SparseListConfig::new(1, 1, 0.2).unwrap();
        let list = sparse_list(&data, &cfg).unwrap();
        assert_eq!(list.len(), 1);
        assert!((list[0].weights()[0] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn dedup_collapses_identical_solutions() {
        let mut data = Dataset::new(2).unwrap();
        data.push(&[2.0, 0.0], true).unwrap();
        data.push(&[2.0, 0.0], true).unwrap();
        let cfg = SparseListConfig::new(1, 2, 0.5).unwrap();
        let deduped = sparse_list(&data, &cfg).unwrap();
        assert_eq!(deduped.len(), 1);
        let raw = sparse_list(&data, &cfg.clone().without_dedup()).unwrap();
        assert_eq!(raw.len(), 2);
    }

    #[test]
    fn enumeration_is_deterministic_and_lexicographic() {
        let mut rng = SplitRng::new(10);
        let mut data = Dataset::new(3).unwrap();
        let mut x = [0.0; 3];
        for i in 0..6 {
            rng.fill_standard_normal(&mut x);
            data.push(&x, i % 2 == 0).unwrap();
        }
        let cfg = SparseListConfig::new(2, 6, 1e-3).unwrap();
        let a = sparse_list_detailed(&data, &cfg).unwrap();
        let b = sparse_list_detailed(&data, &cfg).unwrap();
        assert_eq!(a, b);
        // provenance tuples appear in lexicographic order
        let keys: Vec<(Vec<usize>, Vec<usize>)> = a
            .iter()
            .map(|e| (e.coords.clone(), e.examples.clone()))
            .collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        // full count: C(3,2) coordinate pairs x C(6,2) example pairs
        assert!(a.len() <= 3 * 15);
    }

    #[test]
    fn solutions_satisfy_their_defining_systems() {
        let mut rng = SplitRng::new(11);
        let mut data = Dataset::new(4).unwrap();
        let mut x = [0.0; 4];
        for i in 0..8 {
            rng.fill_standard_normal(&mut x);
            data.push(&x, i % 3 == 0).unwrap();
        }
        let cfg = SparseListConfig::new(2, 8, 1e-3).unwrap();
        for entry in sparse_list_detailed(&data, &cfg).unwrap() {
            for &ex in &entry.examples {
                let ysign = if data.y(ex) { 1.0 } else { -1.0 };
                let x = data.x(ex);
                let mut acc = 0.0;
                for (k, &coord) in entry.coords.iter().enumerate() {
                    acc += entry.classifier.weights()[k] * x[coord];
                }
                let residual = ysign * acc - (ysign - cfg.nu);
                assert!(
                    residual.abs() <= 1e-8,
                    "tuple {:?}/{:?} residual {residual}",
                    entry.coords,
                    entry.examples
                );
            }
        }
    }

    #[test]
    fn ill_conditioned_tuples_are_skipped() {
        // Two nearly identical rows: condition number far above the cutoff.
        let mut data = Dataset::new(2).unwrap();
        data.push(&[1.0, 1.0], true).unwrap();
        data.push(&[1.0, 1.0 + 1e-14], true).unwrap();
        let cfg = SparseListConfig::new(2, 2, 0.5).unwrap();
        let list = sparse_list(&data, &cfg).unwrap();
        assert!(list.is_empty(), "near-singular system must be dropped");
    }

    #[test]
    fn condition_number_matches_known_singular_values() {
        // R * diag(3, 1) for a rotation R has singular values 3 and 1.
        let a = vec![1.8, -0.8, 2.4, 0.6];
        assert!((condition_number(&a, 2) - 3.0).abs() < 1e-12);
        assert!(condition_number(&[0.0], 1).is_infinite());
        assert!((condition_number(&[-2.5], 1) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sample_size_formula_values() {
        // (alpha, eps, delta, s, d) = (0.5, 0.1, 0.1, 2, 10):
        // (2 ln 10 + ln 10) / 0.05 = 138.16 -> 139.
        assert_eq!(list_sample_size(0.5, 0.1, 0.1, 2, 10, 1.0).unwrap(), 139);
        // boundary parameters collapse to the minimum
        assert_eq!(list_sample_size(1.0, 1.0, 1.0, 1, 2, 1.0).unwrap(), 1);
        assert!(list_sample_size(0.0, 0.1, 0.1, 1, 2, 1.0).is_err());
        assert!(list_sample_size(0.5, 0.1, 1.5, 1, 2, 1.0).is_err());
    }

    #[test]
    fn sample_size_scales_inversely_with_alpha_and_epsilon() {
        let base = list_sample_size(0.5, 0.1, 0.1, 2, 10, 1.0).unwrap();
        let half_alpha = list_sample_size(0.25, 0.1, 0.1, 2, 10, 1.0).unwrap();
        let half_eps = list_sample_size(0.5, 0.05, 0.1, 2, 10, 1.0).unwrap();
        assert!(half_alpha >= 2 * base - 1);
        assert!(half_eps >= 2 * base - 1);
    }

    #[test]
    fn every_entry_misses_its_own_tuple_by_the_margin_shift() {
        // The defining system places each tuple example exactly nu past the
        // wrong side of the threshold, so each entry misclassifies its own
        // tuple examples and no entry can reach zero training error.
        let mut rng = SplitRng::new(21);
        let mut data = Dataset::new(3).unwrap();
        let mut x = [0.0; 3];
        for i in 0..7 {
            rng.fill_standard_normal(&mut x);
            data.push(&x, i % 2 == 0).unwrap();
        }
        let cfg = SparseListConfig::new(1, 7, 1e-2).unwrap();
        for entry in sparse_list_detailed(&data, &cfg).unwrap() {
            for &ex in &entry.examples {
                assert_ne!(
                    entry.classifier.predict(data.x(ex)),
                    data.y(ex),
                    "tuple example must sit nu past the wrong side"
                );
            }
        }
    }

    #[test]
    fn margin_separated_planted_instance_has_a_near_consistent_member() {
        // 2-sparse planted classifier, half the sample corrupted, margin
        // 0.2 on the clean half. Some member must misclassify at most its
        // own defining tuple among the clean examples, and agree with the
        // planted classifier on almost all fresh margin-separated points.
        let d = 6;
        let planted = SparseLinearClassifier::new(vec![1, 4], vec![1.8, -1.2]).unwrap();
        let margin = 0.2;
        let mut rng = SplitRng::new(31);
        let mut data = Dataset::new(d).unwrap();
        let mut x = vec![0.0; d];
        let mut clean = Vec::new();
        for i in 0..40 {
            if rng.next_bool(0.5) {
                loop {
                    rng.fill_standard_normal(&mut x);
                    let margin_value = 1.8 * x[1] - 1.2 * x[4] - 1.0;
                    if margin_value.abs() >= margin {
                        break;
                    }
                }
                clean.push(i);
                let y = planted.predict(&x);
                data.push(&x, y).unwrap();
            } else {
                rng.fill_standard_normal(&mut x);
                data.push(&x, rng.next_bool(0.5)).unwrap();
            }
        }
        let cfg = SparseListConfig::new(2, 40, 1e-3).unwrap();
        let list = sparse_list(&data, &cfg).unwrap();
        let best_clean_errors = list
            .iter()
            .map(|c| clean.iter().filter(|&&i| c.predict(data.x(i)) != data.y(i)).count())
            .min()
            .unwrap();
        assert!(
            best_clean_errors <= cfg.s,
            "best member misses {best_clean_errors} clean examples, expected at most s = {}",
            cfg.s
        );

        let mut fresh_agree_best = 0.0f64;
        let n_fresh = 2_000;
        let mut fresh = Dataset::new(d).unwrap();
        for _ in 0..n_fresh {
            loop {
                rng.fill_standard_normal(&mut x);
                if (1.8 * x[1] - 1.2 * x[4] - 1.0).abs() >= margin {
                    break;
                }
            }
            fresh.push(&x, planted.predict(&x)).unwrap();
        }
        for c in &list {
            let agree = fresh
                .iter()
                .filter(|&(x, y)| c.predict(x) == y)
                .count() as f64
                / n_fresh as f64;
            fresh_agree_best = fresh_agree_best.max(agree);
        }
        assert!(
            fresh_agree_best >= 0.95,
            "best fresh agreement {fresh_agree_best} below 0.95"
        );
    }
}
