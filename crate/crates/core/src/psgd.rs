//! Projected SGD on the ReLU surrogate.
//!
//! For an error distribution over (x, e) pairs the surrogate loss of a
//! selector direction w is L(w) = E[e * max(0, <x,w>)]. On the unit sphere
//! its projected gradient at w is
//!
//!   g_w(x, e) = e * (x - <x,w> w) * 1[<x,w> >= 0],
//!
//! which is orthogonal to w by construction. Each step moves against the
//! batch-mean gradient and renormalizes; since the step is orthogonal the
//! pre-normalization norm satisfies ||u||^2 = 1 + beta^2 ||g||^2 >= 1, so
//! renormalizing never divides by a small number.

use crate::data::{Classifier, Dataset};
use crate::error::{invalid, Error, Result};
use crate::fmath;
use crate::geom::{dot, norm, scaled_add, Halfspace, UnitVector};
use crate::planted::ErrorSampler;
use crate::rng::SplitRng;
use alloc::vec::Vec;

/// Step-size schedule and run length for one PSGD run.
#[derive(Debug, Clone, PartialEq)]
pub struct PsgdConfig {
    pub iterations: usize,
    pub batch_size: usize,
    pub w0: UnitVector,
    pub step_size: f64,
    pub step_size_overridden: bool,
    /// When set, stop once the batch gradient norm falls below
    /// [`early_stop_threshold`] of this accuracy.
    pub stop_epsilon: Option<f64>,
}

impl PsgdConfig {
    /// Default step size beta = sqrt(1 / (T * d)).
    pub fn new(iterations: usize, batch_size: usize, w0: UnitVector) -> Result<Self> {
        if iterations == 0 {
            return Err(invalid("iterations", "must be at least 1"));
        }
        if batch_size == 0 {
            return Err(invalid("batch_size", "must be at least 1"));
        }
        let step_size = fmath::sqrt(1.0 / (iterations as f64 * w0.dim() as f64));
        Ok(PsgdConfig {
            iterations,
            batch_size,
            w0,
            step_size,
            step_size_overridden: false,
            stop_epsilon: None,
        })
    }

    pub fn with_step_size(mut self, beta: f64) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(invalid("step_size", "must be positive and finite"));
        }
        self.step_size = beta;
        self.step_size_overridden = true;
        Ok(self)
    }

    pub fn with_stop_epsilon(mut self, epsilon: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0 && epsilon < 1.0) {
            return Err(invalid("stop_epsilon", "must lie in (0, 1)"));
        }
        self.stop_epsilon = Some(epsilon);
        Ok(self)
    }
}

/// Gradient-norm level below which a run may stop early:
/// (2/5) * eps * sqrt(ln(1/eps)).
pub fn early_stop_threshold(epsilon: f64) -> f64 {
    0.4 * epsilon * fmath::sqrt(fmath::ln(1.0 / epsilon))
}

/// Full record of one PSGD run. Row i of the trace holds the iterate w(i)
/// together with the batch statistics measured at w(i-1) just before the
/// update.
#[derive(Debug, Clone, PartialEq)]
pub struct PsgdTrace {
    pub start: UnitVector,
    pub iterates: Vec<UnitVector>,
    pub grad_norms: Vec<f64>,
    pub loss_estimates: Vec<f64>,
    pub step_size: f64,
    /// A finite source exhausted its data and re-drew with replacement.
    pub resampled: bool,
    /// The run hit the early-stop gradient threshold before T iterations.
    pub stopped_early: bool,
}

impl PsgdTrace {
    pub fn len(&self) -> usize {
        self.iterates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iterates.is_empty()
    }
}

/// Mean surrogate loss of `w` over (x, e) pairs: E[e * max(0, <x,w>)].
/// Empty batches score 0. Positively homogeneous in ||w||.
pub fn surrogate_loss<'a>(pairs: impl Iterator<Item = (&'a [f64], bool)>, w: &[f64]) -> f64 {
    let mut acc = 0.0;
    let mut n = 0usize;
    for (x, e) in pairs {
        if e {
            let s = dot(x, w);
            if s > 0.0 {
                acc += s;
            }
        }
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        acc / n as f64
    }
}

/// Projected gradient of the surrogate at a single example:
/// e * (x - <x,w> w) * 1[<x,w> >= 0]. The boundary <x,w> = 0 counts as
/// inside, matching halfspace membership.
pub fn projected_gradient(x: &[f64], e: bool, w: &UnitVector) -> Result<Vec<f64>> {
    if x.len() != w.dim() {
        return Err(Error::DimensionMismatch {
            expected: w.dim(),
            got: x.len(),
        });
    }
    if !e || dot(x, w.as_slice()) < 0.0 {
        return Ok(alloc::vec![0.0; x.len()]);
    }
    crate::geom::project_orthogonal(x, w)
}

/// Runs projected SGD and returns every iterate.
pub fn psgd(
    source: &mut dyn ErrorSampler,
    cfg: &PsgdConfig,
    rng: &mut SplitRng,
) -> Result<PsgdTrace> {
    let d = cfg.w0.dim();
    if source.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: source.dim(),
        });
    }
    let beta = cfg.step_size;
    let stop_at = cfg.stop_epsilon.map(early_stop_threshold);

    let mut w = cfg.w0.clone();
    let mut x = alloc::vec![0.0; d];
    let mut grad_sum = alloc::vec![0.0; d];
    let mut u = alloc::vec![0.0; d];
    let mut iterates = Vec::with_capacity(cfg.iterations);
    let mut grad_norms = Vec::with_capacity(cfg.iterations);
    let mut loss_estimates = Vec::with_capacity(cfg.iterations);
    let mut stopped_early = false;

    for _ in 0..cfg.iterations {
        grad_sum.iter_mut().for_each(|g| *g = 0.0);
        let mut loss_acc = 0.0;
        for _ in 0..cfg.batch_size {
            let e = source.sample_into(rng, &mut x);
            if e {
                let s = dot(&x, w.as_slice());
                if s >= 0.0 {
                    loss_acc += s;
                    // Projection is linear, so accumulate raw x and project
                    // the batch sum once.
                    scaled_add(&mut grad_sum, 1.0, &x);
                }
            }
        }
        let inv_n = 1.0 / cfg.batch_size as f64;
        let along = dot(&grad_sum, w.as_slice());
        // batch-mean projected gradient: (sum - <sum,w> w) / N
        u.copy_from_slice(w.as_slice());
        for i in 0..d {
            let g = (grad_sum[i] - along * w.as_slice()[i]) * inv_n;
            grad_sum[i] = g;
            u[i] -= beta * g;
        }
        let g_norm = norm(&grad_sum);
        let u_norm = norm(&u);
        debug_assert!(
            u_norm >= 1.0 - 1e-9,
            "orthogonal step shrank the iterate norm: {u_norm}"
        );
        for c in u.iter_mut() {
            *c /= u_norm;
        }
        w = UnitVector::from_coords(u.clone())?;
        iterates.push(w.clone());
        grad_norms.push(g_norm);
        loss_estimates.push(loss_acc * inv_n);
        if let Some(thresh) = stop_at {
            if g_norm < thresh {
                stopped_early = true;
                break;
            }
        }
    }

    Ok(PsgdTrace {
        start: cfg.w0.clone(),
        iterates,
        grad_norms,
        loss_estimates,
        step_size: beta,
        resampled: source.resampled(),
        stopped_early,
    })
}

/// Iterate chosen by empirical joint error on a holdout set.
#[derive(Debug, Clone, PartialEq)]
pub struct BestIterate {
    pub index: usize,
    pub joint_error: f64,
    pub w: UnitVector,
}

/// Scans a trace and returns the iterate minimizing the empirical joint
/// error of (classifier, H_w) on the holdout. Ties go to the lowest index.
pub fn best_iterate(
    trace: &PsgdTrace,
    holdout: &Dataset,
    classifier: &Classifier,
) -> Result<BestIterate> {
    if trace.is_empty() {
        return Err(Error::EmptyInput("trace"));
    }
    if holdout.is_empty() {
        return Err(Error::EmptyInput("holdout"));
    }
    classifier.validate(holdout.dim())?;
    let errs = classifier_error_bits(holdout, classifier);
    let mut best_index = 0usize;
    let mut best_count = usize::MAX;
    for (i, w) in trace.iterates.iter().enumerate() {
        let count = selected_error_count(holdout, &errs, w)?;
        if count < best_count {
            best_count = count;
            best_index = i;
        }
    }
    Ok(BestIterate {
        index: best_index,
        joint_error: best_count as f64 / holdout.len() as f64,
        w: trace.iterates[best_index].clone(),
    })
}

/// Precomputed per-example error bits of a classifier on a dataset.
pub(crate) fn classifier_error_bits(data: &Dataset, c: &Classifier) -> Vec<bool> {
    data.iter().map(|(x, y)| c.predict(x) != y).collect()
}

/// Number of holdout points with x in H_w that the classifier got wrong.
pub(crate) fn selected_error_count(
    data: &Dataset,
    error_bits: &[bool],
    w: &UnitVector,
) -> Result<usize> {
    if w.dim() != data.dim() {
        return Err(Error::DimensionMismatch {
            expected: data.dim(),
            got: w.dim(),
        });
    }
    let ws = w.as_slice();
    let mut count = 0usize;
    for (i, (x, _)) in data.iter().enumerate() {
        if error_bits[i] && dot(x, ws) >= 0.0 {
            count += 1;
        }
    }
    Ok(count)
}

/// Joint error of every iterate of a trace on a holdout, in iterate order.
pub fn trace_holdout_errors(
    trace: &PsgdTrace,
    holdout: &Dataset,
    classifier: &Classifier,
) -> Result<Vec<f64>> {
    let errs = classifier_error_bits(holdout, classifier);
    let n = holdout.len() as f64;
    trace
        .iterates
        .iter()
        .map(|w| Ok(selected_error_count(holdout, &errs, w)? as f64 / n))
        .collect()
}

/// The selector trained by one run: homogeneous halfspace at the chosen
/// iterate.
pub fn selector_at(trace: &PsgdTrace, index: usize) -> Result<Halfspace> {
    trace
        .iterates
        .get(index)
        .map(|w| Halfspace::homogeneous(w.clone()))
        .ok_or(Error::NoCandidates)
}
