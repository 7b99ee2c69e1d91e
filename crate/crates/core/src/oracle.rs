//! Independent ground-truth engines: exhaustive grid search over halfspaces
//! in dimension 2 and 3, exhaustive subset search on finite distributions,
//! and the closed-form joint error of the planted model. Learners are
//! validated against these, never against themselves.

use crate::data::{Classifier, Dataset};
use crate::error::{invalid, Error, Result};
use crate::fmath;
use crate::geom::{angle, Halfspace, UnitVector, Vector};
use crate::planted::PlantedModel;
use crate::reduction::{
    err_class, err_cond, BandRequest, ConditionalLearner, FiniteDistribution, HypothesisFamily,
    LearnerFailure,
};
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

/// A deterministic direction/threshold grid for low-dimensional halfspace
/// search. Directions are uniform on the circle for d = 2 and a Fibonacci
/// sphere covering for d = 3.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    d: usize,
    angular_resolution: usize,
    thresholds: Vec<f64>,
}

impl GridSpec {
    pub fn new(d: usize, angular_resolution: usize, thresholds: Vec<f64>) -> Result<Self> {
        if d != 2 && d != 3 {
            return Err(invalid("d", "grid search supports dimension 2 or 3 only"));
        }
        if angular_resolution < 4 {
            return Err(invalid("angular_resolution", "need at least 4 directions"));
        }
        if thresholds.is_empty() {
            return Err(Error::EmptyInput("thresholds"));
        }
        if thresholds.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFinite("thresholds"));
        }
        Ok(GridSpec {
            d,
            angular_resolution,
            thresholds,
        })
    }

    /// Homogeneous grid: the single threshold 0.
    pub fn homogeneous(d: usize, angular_resolution: usize) -> Result<Self> {
        Self::new(d, angular_resolution, alloc::vec![0.0])
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn angular_resolution(&self) -> usize {
        self.angular_resolution
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    /// The i-th grid direction (unit norm).
    pub fn direction(&self, i: usize) -> Vec<f64> {
        debug_assert!(i < self.angular_resolution);
        let r = self.angular_resolution as f64;
        if self.d == 2 {
            let phi = core::f64::consts::TAU * i as f64 / r;
            alloc::vec![fmath::cos(phi), fmath::sin(phi)]
        } else {
            // Fibonacci sphere: evenly spread z levels, golden-angle azimuth.
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / r;
            let radius = fmath::sqrt((1.0 - z * z).max(0.0));
            let phi = core::f64::consts::PI * (3.0 - fmath::sqrt(5.0)) * i as f64;
            alloc::vec![radius * fmath::cos(phi), radius * fmath::sin(phi), z]
        }
    }

    /// Principal angular coordinate of direction i: the planar angle
    /// atan2(y, x) for d = 2, the polar angle acos(z) for d = 3.
    pub fn theta(&self, i: usize) -> f64 {
        let dir = self.direction(i);
        if self.d == 2 {
            fmath::atan2(dir[1], dir[0])
        } else {
            fmath::acos(dir[2].clamp(-1.0, 1.0))
        }
    }
}

/// One evaluated grid cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridRow {
    pub direction_index: usize,
    pub theta: f64,
    pub threshold: f64,
    pub joint_error: f64,
}

/// Evaluates the joint error of classifier `c` with every grid halfspace
/// on `data`. Rows are ordered by direction index, then threshold index.
pub fn grid_report(data: &Dataset, c: &Classifier, spec: &GridSpec) -> Result<Vec<GridRow>> {
    if data.dim() != spec.d {
        return Err(Error::DimensionMismatch {
            expected: spec.d,
            got: data.dim(),
        });
    }
    c.validate(data.dim())?;
    if data.is_empty() {
        return Err(Error::EmptyInput("dataset"));
    }
    let errors: Vec<bool> = (0..data.len())
        .map(|i| c.predict(data.x(i)) != data.y(i))
        .collect();
    let n = data.len() as f64;
    let mut rows = Vec::with_capacity(spec.angular_resolution * spec.thresholds.len());
    for i in 0..spec.angular_resolution {
        let dir = spec.direction(i);
        let theta = spec.theta(i);
        for &t in &spec.thresholds {
            let mut count = 0usize;
            for (j, &e) in errors.iter().enumerate() {
                if e {
                    let x = data.x(j);
                    let mut dot = 0.0;
                    for (a, b) in dir.iter().zip(x) {
                        dot += a * b;
                    }
                    if dot >= t {
                        count += 1;
                    }
                }
            }
            rows.push(GridRow {
                direction_index: i,
                theta,
                threshold: t,
                joint_error: count as f64 / n,
            });
        }
    }
    Ok(rows)
}

/// Exhaustive minimization of the joint error over the grid. Ties are
/// broken toward the lowest grid cell (direction index major, threshold
/// position minor).
pub fn grid_best_halfspace(
    data: &Dataset,
    c: &Classifier,
    spec: &GridSpec,
) -> Result<(Halfspace, f64)> {
    let rows = grid_report(data, c, spec)?;
    let mut best = &rows[0];
    for row in &rows[1..] {
        if row.joint_error < best.joint_error {
            best = row;
        }
    }
    let dir = spec.direction(best.direction_index);
    let w = UnitVector::new(Vector::new(dir)?)?;
    Ok((Halfspace::new(w, best.threshold)?, best.joint_error))
}

/// Exhaustive subset search. Without a band: minimizes the classification
/// loss over every member. With a band [a, b]: minimizes the conditional
/// loss err(S | S) over members whose selection mass lies in the band;
/// zero-mass members are unrankable and skipped. Ties break toward the
/// lowest member index. Returns (member index, minimized loss).
pub fn exhaustive_best_subset(
    dist: &FiniteDistribution,
    family: &HypothesisFamily,
    band: Option<(f64, f64)>,
) -> Result<(usize, f64)> {
    if family.dim() != dist.dim() {
        return Err(Error::DimensionMismatch {
            expected: dist.dim(),
            got: family.dim(),
        });
    }
    let mut best: Option<(usize, f64)> = None;
    match band {
        None => {
            for i in 0..family.len() {
                let err = err_class(dist, family.member(i));
                if best.map_or(true, |(_, b)| err < b) {
                    best = Some((i, err));
                }
            }
        }
        Some((lo, hi)) => {
            for i in 0..family.len() {
                let member = family.member(i);
                let mass = dist.mass_of(member);
                if mass <= 0.0 || mass < lo || mass > hi {
                    continue;
                }
                let err = err_cond(dist, member, member)?;
                if best.map_or(true, |(_, b)| err < b) {
                    best = Some((i, err));
                }
            }
        }
    }
    match (best, band) {
        (Some(found), _) => Ok(found),
        (None, Some((lo, hi))) => Err(Error::InfeasibleBand { lo, hi }),
        (None, None) => Err(Error::NoCandidates),
    }
}

/// The exact band-restricted conditional learner: exhaustive search,
/// usable as the inner algorithm of the reductions.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExhaustiveOracle;

impl ConditionalLearner for ExhaustiveOracle {
    fn learn(&mut self, req: &BandRequest<'_>) -> core::result::Result<usize, LearnerFailure> {
        exhaustive_best_subset(req.dist, req.family, Some((req.lo, req.hi)))
            .map(|(i, _)| i)
            .map_err(|_| LearnerFailure::EmptyBand)
    }
}

/// Closed-form joint error of the planted model under the selector H_w:
/// errors occur at rate p_in inside the wedge-complement H_v intersect H_w
/// and at rate p_out on the wedge H_w minus H_v, giving
/// p_in (pi - theta) / (2 pi) + p_out theta / (2 pi) with theta the angle
/// between v and w. At w = v this is the optimum p_in / 2.
pub fn planted_joint_error(model: &PlantedModel, w: &UnitVector) -> Result<f64> {
    let theta = angle(&model.v, w)?;
    let pi = core::f64::consts::PI;
    Ok((model.p_in * (pi - theta) + model.p_out * theta) / (2.0 * pi))
}
