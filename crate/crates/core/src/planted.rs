//! Synthetic data: Gaussian marginals, planted noisy-label models, and the
//! streaming sampler traits consumed by the training loops.

use crate::data::{Classifier, Dataset, ErrorDistribution};
use crate::error::{invalid, Error, Result};
use crate::geom::{Halfspace, UnitVector};
use crate::rng::SplitRng;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

/// Draws `n` examples with x ~ N(0, I_d) and all labels 0.
pub fn sample_gaussian(d: usize, n: usize, rng: &mut SplitRng) -> Result<Dataset> {
    let mut data = Dataset::new(d)?;
    let mut x = alloc::vec![0.0; d];
    for _ in 0..n {
        rng.fill_standard_normal(&mut x);
        data.push(&x, false)?;
    }
    Ok(data)
}

/// Gaussian marginal with labels planted by a base classifier and flipped by
/// region: labels disagree with `classifier` with probability `p_in` inside
/// the halfspace through the origin with normal `v`, and `p_out` outside it.
///
/// With `p_in <= p_out` the selector H_v is optimal and its joint error is
/// exactly `p_in / 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedModel {
    pub d: usize,
    pub v: UnitVector,
    pub classifier: Classifier,
    pub p_in: f64,
    pub p_out: f64,
    pub seed: u64,
}

impl PlantedModel {
    pub fn new(
        v: UnitVector,
        classifier: Classifier,
        p_in: f64,
        p_out: f64,
        seed: u64,
    ) -> Result<Self> {
        let d = v.dim();
        classifier.validate(d)?;
        if !(p_in.is_finite() && p_out.is_finite()) {
            return Err(Error::NonFinite("noise rates"));
        }
        if !(0.0..=1.0).contains(&p_in) || !(0.0..=1.0).contains(&p_out) || p_in > p_out {
            return Err(invalid(
                "p_in/p_out",
                alloc::format!("need 0 <= p_in <= p_out <= 1, got p_in={p_in}, p_out={p_out}"),
            ));
        }
        Ok(PlantedModel {
            d,
            v,
            classifier,
            p_in,
            p_out,
            seed,
        })
    }

    /// The optimal selector H_v (homogeneous halfspace with normal `v`).
    pub fn selector(&self) -> Halfspace {
        Halfspace::homogeneous(self.v.clone())
    }

    /// Joint error of the base classifier restricted to H_v: p_in / 2.
    pub fn optimal_joint_error(&self) -> f64 {
        self.p_in / 2.0
    }

    /// Draws one example. Consumes the coordinates first (Box-Muller pairs),
    /// then exactly one uniform for the label flip.
    pub fn sample_into(&self, rng: &mut SplitRng, x: &mut [f64]) -> bool {
        debug_assert_eq!(x.len(), self.d);
        rng.fill_standard_normal(x);
        let inside = crate::geom::dot(x, self.v.as_slice()) >= 0.0;
        let p = if inside { self.p_in } else { self.p_out };
        let flip = rng.next_bool(p);
        self.classifier.predict(x) != flip
    }

    pub fn sample(&self, n: usize, rng: &mut SplitRng) -> Result<Dataset> {
        let mut data = Dataset::new(self.d)?;
        let mut x = alloc::vec![0.0; self.d];
        for _ in 0..n {
            let y = self.sample_into(rng, &mut x);
            data.push(&x, y)?;
        }
        Ok(data)
    }

    /// Convenience sampler seeded from the model's own seed and a label.
    pub fn sample_with_own_seed(&self, n: usize, label: &str) -> Result<Dataset> {
        let mut rng = SplitRng::new(self.seed).child(label);
        self.sample(n, &mut rng)
    }
}

/// Stream of labeled examples (x, y). Finite sources report when they have
/// started re-drawing.
pub trait LabeledSampler {
    fn dim(&self) -> usize;
    /// Writes x into the buffer and returns y.
    fn sample_into(&mut self, rng: &mut SplitRng, x: &mut [f64]) -> bool;
    /// True once a finite source has exhausted its examples and switched to
    /// drawing with replacement.
    fn resampled(&self) -> bool {
        false
    }
}

impl<T: LabeledSampler + ?Sized> LabeledSampler for &mut T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn sample_into(&mut self, rng: &mut SplitRng, x: &mut [f64]) -> bool {
        (**self).sample_into(rng, x)
    }
    fn resampled(&self) -> bool {
        (**self).resampled()
    }
}

/// Stream of (x, e) pairs where the bit is an error indicator.
pub trait ErrorSampler {
    fn dim(&self) -> usize;
    fn sample_into(&mut self, rng: &mut SplitRng, x: &mut [f64]) -> bool;
    fn resampled(&self) -> bool {
        false
    }
}

/// Unlimited sampler over a planted model.
pub struct PlantedSampler<'a> {
    model: &'a PlantedModel,
}

impl<'a> PlantedSampler<'a> {
    pub fn new(model: &'a PlantedModel) -> Self {
        PlantedSampler { model }
    }
}

impl LabeledSampler for PlantedSampler<'_> {
    fn dim(&self) -> usize {
        self.model.d
    }

    fn sample_into(&mut self, rng: &mut SplitRng, x: &mut [f64]) -> bool {
        self.model.sample_into(rng, x)
    }
}

/// Gaussian marginal with a constant label; the worst-case stream used by
/// the statistical checks has label 1 everywhere.
pub struct GaussianConstLabel {
    pub d: usize,
    pub label: bool,
}

impl LabeledSampler for GaussianConstLabel {
    fn dim(&self) -> usize {
        self.d
    }

    fn sample_into(&mut self, rng: &mut SplitRng, x: &mut [f64]) -> bool {
        rng.fill_standard_normal(x);
        self.label
    }
}

/// Finite dataset replayed as a stream: a seeded permutation is consumed
/// without replacement; once exhausted the source switches to uniform draws
/// with replacement and flags it.
pub struct DatasetSampler<'a> {
    data: &'a Dataset,
    order: Vec<u32>,
    pos: usize,
    resampled: bool,
}

impl<'a> DatasetSampler<'a> {
    pub fn new(data: &'a Dataset, rng: &mut SplitRng) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyInput("dataset"));
        }
        let mut order: Vec<u32> = (0..data.len() as u32).collect();
        rng.shuffle(&mut order);
        Ok(DatasetSampler {
            data,
            order,
            pos: 0,
            resampled: false,
        })
    }

    fn next_index(&mut self, rng: &mut SplitRng) -> usize {
        if self.pos < self.order.len() {
            let i = self.order[self.pos] as usize;
            self.pos += 1;
            i
        } else {
            self.resampled = true;
            rng.next_index(self.data.len())
        }
    }
}

impl LabeledSampler for DatasetSampler<'_> {
    fn dim(&self) -> usize {
        self.data.dim()
    }

    fn sample_into(&mut self, rng: &mut SplitRng, x: &mut [f64]) -> bool {
        let i = self.next_index(rng);
        x.copy_from_slice(self.data.x(i));
        self.data.y(i)
    }

    fn resampled(&self) -> bool {
        self.resampled
    }
}

/// Adapter turning a labeled stream into an error stream for a classifier:
/// e = 1[c(x) != y].
pub struct ClassifierErrors<'a, S: LabeledSampler> {
    pub source: S,
    pub classifier: &'a Classifier,
}

impl<'a, S: LabeledSampler> ClassifierErrors<'a, S> {
    pub fn new(source: S, classifier: &'a Classifier) -> Result<Self> {
        classifier.validate(source.dim())?;
        Ok(ClassifierErrors { source, classifier })
    }
}

impl<S: LabeledSampler> ErrorSampler for ClassifierErrors<'_, S> {
    fn dim(&self) -> usize {
        self.source.dim()
    }

    fn sample_into(&mut self, rng: &mut SplitRng, x: &mut [f64]) -> bool {
        let y = self.source.sample_into(rng, x);
        self.classifier.predict(x) != y
    }

    fn resampled(&self) -> bool {
        self.source.resampled()
    }
}

/// Gaussian marginal with a constant error bit. `e = true` is the worst-case
/// stream for the surrogate-loss and gradient bounds.
pub struct GaussianConstError {
    pub d: usize,
    pub e: bool,
}

impl ErrorSampler for GaussianConstError {
    fn dim(&self) -> usize {
        self.d
    }

    fn sample_into(&mut self, rng: &mut SplitRng, x: &mut [f64]) -> bool {
        rng.fill_standard_normal(x);
        self.e
    }
}

/// Replays a lazy error view of a finite dataset, without replacement first,
/// then with replacement (flagged).
pub struct ErrorDistributionSampler<'a> {
    view: ErrorDistribution<'a>,
    order: Vec<u32>,
    pos: usize,
    resampled: bool,
}

impl<'a> ErrorDistributionSampler<'a> {
    pub fn new(view: ErrorDistribution<'a>, rng: &mut SplitRng) -> Result<Self> {
        if view.is_empty() {
            return Err(Error::EmptyInput("dataset"));
        }
        let mut order: Vec<u32> = (0..view.len() as u32).collect();
        rng.shuffle(&mut order);
        Ok(ErrorDistributionSampler {
            view,
            order,
            pos: 0,
            resampled: false,
        })
    }
}

impl ErrorSampler for ErrorDistributionSampler<'_> {
    fn dim(&self) -> usize {
        self.view.dim()
    }

    fn sample_into(&mut self, rng: &mut SplitRng, x: &mut [f64]) -> bool {
        let i = if self.pos < self.order.len() {
            let i = self.order[self.pos] as usize;
            self.pos += 1;
            i
        } else {
            self.resampled = true;
            rng.next_index(self.view.len())
        };
        let (xi, e) = self.view.get(i);
        x.copy_from_slice(xi);
        e
    }

    fn resampled(&self) -> bool {
        self.resampled
    }
}
