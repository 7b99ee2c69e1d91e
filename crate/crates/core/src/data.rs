//! Labeled examples, datasets, classifiers, and empirical error estimators.
//!
//! Labels are bits. In classification contexts `y` is the class; in selector
//! training contexts the bit is an error indicator e = 1[c(x) != y], carried
//! by the same structures.

use crate::error::{invalid, Error, Result};
use crate::geom::{dot, Halfspace, Vector};
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledExample {
    pub x: Vector,
    pub y: bool,
}

/// Set of labeled examples in fixed dimension, stored flat for cache-friendly
/// scans.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    d: usize,
    xs: Vec<f64>,
    ys: Vec<bool>,
}

impl Dataset {
    pub fn new(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(invalid("d", "dimension must be at least 1"));
        }
        Ok(Dataset {
            d,
            xs: Vec::new(),
            ys: Vec::new(),
        })
    }

    pub fn from_examples(d: usize, examples: &[LabeledExample]) -> Result<Self> {
        let mut data = Dataset::new(d)?;
        for ex in examples {
            data.push(ex.x.as_slice(), ex.y)?;
        }
        Ok(data)
    }

    pub fn push(&mut self, x: &[f64], y: bool) -> Result<()> {
        if x.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: x.len(),
            });
        }
        if x.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("example coordinates"));
        }
        self.xs.extend_from_slice(x);
        self.ys.push(y);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }

    pub fn x(&self, i: usize) -> &[f64] {
        &self.xs[i * self.d..(i + 1) * self.d]
    }

    pub fn y(&self, i: usize) -> bool {
        self.ys[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], bool)> + '_ {
        self.xs.chunks_exact(self.d).zip(self.ys.iter().copied())
    }

    pub fn labels(&self) -> &[bool] {
        &self.ys
    }
}

/// Deterministic, total binary classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Classifier {
    /// Predicts 1 iff <w,x> >= t.
    Linear { w: Vec<f64>, t: f64 },
    /// Predicts 1 iff sum_j weights[j] * x[support[j]] >= t. Coordinates are
    /// 0-based and strictly increasing.
    Sparse {
        support: Vec<usize>,
        weights: Vec<f64>,
        t: f64,
    },
    /// Predicts `label` everywhere.
    Constant { label: bool },
    /// Exact-match lookup over a finite point set; unmatched points map to
    /// `default`.
    Table {
        points: Vec<Vec<f64>>,
        labels: Vec<bool>,
        default: bool,
    },
}

impl Classifier {
    pub fn predict(&self, x: &[f64]) -> bool {
        match self {
            Classifier::Linear { w, t } => dot(w, x) >= *t,
            Classifier::Sparse { support, weights, t } => {
                let mut acc = 0.0;
                for (j, &coord) in support.iter().enumerate() {
                    acc += weights[j] * x[coord];
                }
                acc >= *t
            }
            Classifier::Constant { label } => *label,
            Classifier::Table {
                points,
                labels,
                default,
            } => {
                for (p, &label) in points.iter().zip(labels.iter()) {
                    if p.len() == x.len() && p.iter().zip(x.iter()).all(|(a, b)| a == b) {
                        return label;
                    }
                }
                *default
            }
        }
    }

    /// Validates internal consistency against an ambient dimension.
    pub fn validate(&self, d: usize) -> Result<()> {
        match self {
            Classifier::Linear { w, t } => {
                if w.len() != d {
                    return Err(Error::DimensionMismatch { expected: d, got: w.len() });
                }
                if w.iter().any(|c| !c.is_finite()) || !t.is_finite() {
                    return Err(Error::NonFinite("classifier parameters"));
                }
            }
            Classifier::Sparse { support, weights, t } => {
                if support.len() != weights.len() {
                    return Err(invalid("support", "support and weights lengths differ"));
                }
                if support.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(invalid("support", "support indices must be strictly increasing"));
                }
                if support.last().is_some_and(|&c| c >= d) {
                    return Err(invalid("support", "support index out of range"));
                }
                if weights.iter().any(|c| !c.is_finite()) || !t.is_finite() {
                    return Err(Error::NonFinite("classifier parameters"));
                }
            }
            Classifier::Constant { .. } => {}
            Classifier::Table { points, labels, .. } => {
                if points.len() != labels.len() {
                    return Err(invalid("points", "points and labels lengths differ"));
                }
                if points.iter().any(|p| p.len() != d) {
                    return Err(Error::DimensionMismatch { expected: d, got: 0 });
                }
            }
        }
        Ok(())
    }
}

/// Lazy error-bit view of a dataset under a classifier: yields (x, e) with
/// e = 1[c(x) != y]. Never materialized.
#[derive(Debug, Clone, Copy)]
pub struct ErrorDistribution<'a> {
    base: &'a Dataset,
    classifier: &'a Classifier,
}

pub fn to_error_distribution<'a>(
    base: &'a Dataset,
    classifier: &'a Classifier,
) -> Result<ErrorDistribution<'a>> {
    classifier.validate(base.dim())?;
    Ok(ErrorDistribution { base, classifier })
}

impl<'a> ErrorDistribution<'a> {
    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn len(&self) -> usize {
        self.base.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }

    pub fn get(&self, i: usize) -> (&'a [f64], bool) {
        let x = self.base.x(i);
        (x, self.classifier.predict(x) != self.base.y(i))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'a [f64], bool)> + '_ {
        let c = self.classifier;
        self.base.iter().map(move |(x, y)| (x, c.predict(x) != y))
    }

    /// Fraction of examples where the classifier disagrees with the label.
    pub fn error_rate(&self) -> Result<f64> {
        if self.is_empty() {
            return Err(Error::EmptyInput("dataset"));
        }
        let errs = self.iter().filter(|&(_, e)| e).count();
        Ok(errs as f64 / self.len() as f64)
    }
}

/// One-pass tallies for a (classifier, selector) pair on a dataset. All
/// derived rates come from the same integer counts, so the identity
/// conditional * mass = joint holds up to a final rounding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SelectionStats {
    pub n: usize,
    pub n_selected: usize,
    pub n_error_selected: usize,
}

impl SelectionStats {
    /// Empirical P[c(x) != y and x in h].
    pub fn joint_error(&self) -> f64 {
        self.n_error_selected as f64 / self.n as f64
    }

    /// Empirical P[x in h].
    pub fn selected_mass(&self) -> f64 {
        self.n_selected as f64 / self.n as f64
    }

    /// Empirical P[c(x) != y | x in h]; undefined when nothing is selected.
    pub fn conditional_error(&self) -> Result<f64> {
        if self.n_selected == 0 {
            return Err(Error::EmptySelection);
        }
        Ok(self.n_error_selected as f64 / self.n_selected as f64)
    }
}

pub fn selection_stats(data: &Dataset, c: &Classifier, h: &Halfspace) -> Result<SelectionStats> {
    if data.is_empty() {
        return Err(Error::EmptyInput("dataset"));
    }
    if h.dim() != data.dim() {
        return Err(Error::DimensionMismatch {
            expected: data.dim(),
            got: h.dim(),
        });
    }
    c.validate(data.dim())?;
    let mut n_selected = 0;
    let mut n_error_selected = 0;
    for (x, y) in data.iter() {
        if h.contains(x) {
            n_selected += 1;
            if c.predict(x) != y {
                n_error_selected += 1;
            }
        }
    }
    Ok(SelectionStats {
        n: data.len(),
        n_selected,
        n_error_selected,
    })
}

/// Empirical joint error P[c(x) != y and x in h].
pub fn joint_error(data: &Dataset, c: &Classifier, h: &Halfspace) -> Result<f64> {
    Ok(selection_stats(data, c, h)?.joint_error())
}

/// Empirical conditional error P[c(x) != y | x in h]. Errors with
/// [`Error::EmptySelection`] when no point lands in `h`.
pub fn conditional_error(data: &Dataset, c: &Classifier, h: &Halfspace) -> Result<f64> {
    selection_stats(data, c, h)?.conditional_error()
}
