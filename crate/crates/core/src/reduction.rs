//! Exact loss bookkeeping on finite distributions and the black-box
//! reductions from agnostic classification to conditional classification.
//!
//! Losses follow the agreement-as-loss convention: the classification loss
//! of a subset S is P[y = 1[x in S]], and the conditional loss on a
//! condition T is the same probability restricted to T. The two are tied by
//! an exact decomposition,
//!
//! ```text
//! err(S) = 2 err(S | S) P[S] + P[y=0] - P[S]
//!        = 2 err(S | not S) P[not S] + P[y=1] - P[not S]
//! ```
//!
//! which lets a learner that solves conditional classification on a mass
//! band solve classification outright: sweep bands [(k-1)e, ke] for
//! k = 1..ceil(1/e), collect one candidate per band, and return the exact
//! empirical minimizer. The multiplicative variant additionally runs every
//! band on the label-flipped distribution and admits the complements of
//! those candidates, which covers optima whose complement side is the
//! cheaper one to approximate.

use crate::data::Dataset;
use crate::error::{invalid, Error, Result};
use crate::fmath;
use crate::geom::Vector;
use crate::rng::SplitRng;
use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

/// Tolerance on the total mass of a finite distribution.
pub const MASS_TOL: f64 = 1e-12;

/// A single weighted labeled point of a finite distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub x: Vector,
    pub y: bool,
    pub mass: f64,
}

/// A finitely supported distribution on labeled points. Masses sum to one
/// within [`MASS_TOL`] and atoms are distinct as (point, label) pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistRepr", into = "DistRepr")]
pub struct FiniteDistribution {
    d: usize,
    atoms: Vec<Atom>,
}

#[derive(Serialize, Deserialize)]
struct DistRepr {
    d: usize,
    atoms: Vec<Atom>,
}

impl TryFrom<DistRepr> for FiniteDistribution {
    type Error = Error;
    fn try_from(r: DistRepr) -> Result<Self> {
        FiniteDistribution::new(r.d, r.atoms)
    }
}

impl From<FiniteDistribution> for DistRepr {
    fn from(dist: FiniteDistribution) -> DistRepr {
        DistRepr {
            d: dist.d,
            atoms: dist.atoms,
        }
    }
}

impl FiniteDistribution {
    pub fn new(d: usize, atoms: Vec<Atom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::EmptyInput("atoms"));
        }
        let mut total = 0.0;
        for atom in &atoms {
            if atom.x.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: atom.x.dim(),
                });
            }
            if !(atom.mass.is_finite() && atom.mass >= 0.0) {
                return Err(invalid("mass", "atom masses must be nonnegative and finite"));
            }
            total += atom.mass;
        }
        if fmath::abs(total - 1.0) > MASS_TOL {
            return Err(invalid("mass", format_args!("atom masses sum to {total}, not 1")));
        }
        let mut seen = BTreeMap::new();
        for (i, atom) in atoms.iter().enumerate() {
            let key: (Vec<u64>, bool) = (
                atom.x.as_slice().iter().map(|v| v.to_bits()).collect(),
                atom.y,
            );
            if seen.insert(key, i).is_some() {
                return Err(invalid("atoms", format_args!("atom {i} duplicates an earlier (point, label) pair")));
            }
        }
        Ok(FiniteDistribution { d, atoms })
    }

    /// Empirical distribution of a dataset: duplicate (point, label) pairs
    /// merge into one atom (first-occurrence order) with mass count/n.
    pub fn empirical(data: &Dataset) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyInput("dataset"));
        }
        let n = data.len() as f64;
        let mut order: Vec<(Vec<u64>, bool)> = Vec::new();
        let mut counts: BTreeMap<(Vec<u64>, bool), (usize, usize)> = BTreeMap::new();
        for i in 0..data.len() {
            let key: (Vec<u64>, bool) = (
                data.x(i).iter().map(|v| v.to_bits()).collect(),
                data.y(i),
            );
            match counts.get_mut(&key) {
                Some(entry) => entry.1 += 1,
                None => {
                    counts.insert(key.clone(), (i, 1));
                    order.push(key);
                }
            }
        }
        let atoms = order
            .into_iter()
            .map(|key| {
                let (first, count) = counts[&key];
                Ok(Atom {
                    x: Vector::new(data.x(first).to_vec())?,
                    y: data.y(first),
                    mass: count as f64 / n,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        FiniteDistribution::new(data.dim(), atoms)
    }

    /// Random test distribution: standard normal points, fair coin labels,
    /// uniform simplex masses (normalized exponentials).
    pub fn random(d: usize, n_atoms: usize, rng: &mut SplitRng) -> Result<Self> {
        if n_atoms == 0 {
            return Err(Error::EmptyInput("atoms"));
        }
        let mut raw = Vec::with_capacity(n_atoms);
        let mut total = 0.0;
        for _ in 0..n_atoms {
            let mut x = alloc::vec![0.0; d];
            rng.fill_standard_normal(&mut x);
            let y = rng.next_bool(0.5);
            let mass = -fmath::ln(1.0 - rng.next_f64());
            total += mass;
            raw.push((x, y, mass));
        }
        let atoms = raw
            .into_iter()
            .map(|(x, y, mass)| {
                Ok(Atom {
                    x: Vector::new(x)?,
                    y,
                    mass: mass / total,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        FiniteDistribution::new(d, atoms)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// Total mass of a subset.
    pub fn mass_of(&self, s: &SubsetSpec) -> f64 {
        self.atoms
            .iter()
            .filter(|a| s.contains(a.x.as_slice()))
            .map(|a| a.mass)
            .sum()
    }

    /// P[y = 1].
    pub fn positive_mass(&self) -> f64 {
        self.atoms.iter().filter(|a| a.y).map(|a| a.mass).sum()
    }
}

/// Flips every label; an involution.
pub fn flip_labels(dist: &FiniteDistribution) -> FiniteDistribution {
    let atoms = dist
        .atoms
        .iter()
        .map(|a| Atom {
            x: a.x.clone(),
            y: !a.y,
            mass: a.mass,
        })
        .collect();
    FiniteDistribution {
        d: dist.d,
        atoms,
    }
}

/// A membership test on points, composable by complement.
// adjacently tagged: the flattening form of `tag` cannot express a
// recursive enum (the nested "kind" key would collide)
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "spec", rename_all = "snake_case")]
pub enum SubsetSpec {
    All,
    Empty,
    /// dot(w, x) >= t, boundary inside.
    Halfspace { w: Vector, t: f64 },
    /// x[axis] >= t, boundary inside.
    AxisAbove { axis: usize, t: f64 },
    /// Finite point set, matched coordinatewise exactly.
    Points { points: Vec<Vector> },
    Complement(Box<SubsetSpec>),
}

impl SubsetSpec {
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            SubsetSpec::All => true,
            SubsetSpec::Empty => false,
            SubsetSpec::Halfspace { w, t } => {
                let mut acc = 0.0;
                for (wi, xi) in w.as_slice().iter().zip(x) {
                    acc += wi * xi;
                }
                acc >= *t
            }
            SubsetSpec::AxisAbove { axis, t } => x[*axis] >= *t,
            SubsetSpec::Points { points } => {
                points.iter().any(|p| p.as_slice() == x)
            }
            SubsetSpec::Complement(inner) => !inner.contains(x),
        }
    }

    /// Complement, unwrapping a double negation.
    pub fn complement(self) -> SubsetSpec {
        match self {
            SubsetSpec::Complement(inner) => *inner,
            other => SubsetSpec::Complement(Box::new(other)),
        }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        match self {
            SubsetSpec::All | SubsetSpec::Empty => Ok(()),
            SubsetSpec::Halfspace { w, t } => {
                if w.dim() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        got: w.dim(),
                    });
                }
                if !t.is_finite() {
                    return Err(Error::NonFinite("halfspace threshold"));
                }
                Ok(())
            }
            SubsetSpec::AxisAbove { axis, t } => {
                if *axis >= d {
                    return Err(invalid("axis", format_args!("axis {axis} out of range for dimension {d}")));
                }
                if !t.is_finite() {
                    return Err(Error::NonFinite("axis threshold"));
                }
                Ok(())
            }
            SubsetSpec::Points { points } => {
                for p in points {
                    if p.dim() != d {
                        return Err(Error::DimensionMismatch {
                            expected: d,
                            got: p.dim(),
                        });
                    }
                }
                Ok(())
            }
            SubsetSpec::Complement(inner) => inner.validate(d),
        }
    }
}

/// A finite list of candidate subsets. The closure flag is asserted at
/// construction and checked extensionally (against atom support) by the
/// reductions that rely on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisFamily {
    d: usize,
    members: Vec<SubsetSpec>,
    closed_under_complement: bool,
}

impl HypothesisFamily {
    pub fn new(d: usize, members: Vec<SubsetSpec>) -> Result<Self> {
        Self::build(d, members, false)
    }

    /// Constructs a family whose members the caller asserts to be closed
    /// under complement on every relevant support.
    pub fn new_closed(d: usize, members: Vec<SubsetSpec>) -> Result<Self> {
        Self::build(d, members, true)
    }

    /// Convenience constructor: appends the complement of every member,
    /// making the closure flag true by construction.
    pub fn with_complements(d: usize, members: Vec<SubsetSpec>) -> Result<Self> {
        let mut all = members.clone();
        all.extend(members.into_iter().map(SubsetSpec::complement));
        Self::build(d, all, true)
    }

    fn build(d: usize, members: Vec<SubsetSpec>, closed: bool) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::EmptyInput("family"));
        }
        for m in &members {
            m.validate(d)?;
        }
        Ok(HypothesisFamily {
            d,
            members,
            closed_under_complement: closed,
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn member(&self, i: usize) -> &SubsetSpec {
        &self.members[i]
    }

    pub fn members(&self) -> &[SubsetSpec] {
        &self.members
    }

    pub fn is_closed_under_complement(&self) -> bool {
        self.closed_under_complement
    }

    /// Per-member atom membership masks on a distribution's support.
    pub fn masks(&self, dist: &FiniteDistribution) -> Vec<Vec<bool>> {
        self.members
            .iter()
            .map(|m| {
                dist.atoms()
                    .iter()
                    .map(|a| m.contains(a.x.as_slice()))
                    .collect()
            })
            .collect()
    }

    /// For each member, the index of a member extensionally equal to its
    /// complement on the atom support (first such index). Errors when the
    /// family is not closed on this support.
    pub fn complement_map(&self, dist: &FiniteDistribution) -> Result<Vec<usize>> {
        let masks = self.masks(dist);
        let mut first: BTreeMap<&[bool], usize> = BTreeMap::new();
        for (i, mask) in masks.iter().enumerate() {
            first.entry(mask.as_slice()).or_insert(i);
        }
        masks
            .iter()
            .enumerate()
            .map(|(i, mask)| {
                let flipped: Vec<bool> = mask.iter().map(|b| !b).collect();
                first.get(flipped.as_slice()).copied().ok_or_else(|| {
                    invalid(
                        "family",
                        format_args!("member {i} has no extensional complement on the atom support"),
                    )
                })
            })
            .collect()
    }
}

/// Classification loss of a subset: exact P[y = 1[x in S]].
pub fn err_class(dist: &FiniteDistribution, s: &SubsetSpec) -> f64 {
    dist.atoms()
        .iter()
        .filter(|a| a.y == s.contains(a.x.as_slice()))
        .map(|a| a.mass)
        .sum()
}

/// Conditional classification loss of S on condition T:
/// exact P[y = 1[x in S] | x in T].
pub fn err_cond(dist: &FiniteDistribution, s: &SubsetSpec, t: &SubsetSpec) -> Result<f64> {
    let mut cond_mass = 0.0;
    let mut loss_mass = 0.0;
    for a in dist.atoms() {
        if t.contains(a.x.as_slice()) {
            cond_mass += a.mass;
            if a.y == s.contains(a.x.as_slice()) {
                loss_mass += a.mass;
            }
        }
    }
    if cond_mass <= 0.0 {
        return Err(Error::ZeroMassCondition);
    }
    Ok(loss_mass / cond_mass)
}

/// Both affine forms of the classification error decomposition. A form is
/// None when its conditioning event has zero mass.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionReport {
    /// err_class(S), always defined.
    pub lhs: f64,
    /// 2 err(S|S) P[S] + P[y=0] - P[S].
    pub form_on_s: Option<f64>,
    /// 2 err(S|not S) P[not S] + P[y=1] - P[not S].
    pub form_on_complement: Option<f64>,
}

pub fn check_decomposition(dist: &FiniteDistribution, s: &SubsetSpec) -> DecompositionReport {
    let lhs = err_class(dist, s);
    let p_s = dist.mass_of(s);
    let p_y1 = dist.positive_mass();
    let complement = s.clone().complement();
    let form_on_s = err_cond(dist, s, s)
        .ok()
        .map(|c| 2.0 * c * p_s + (1.0 - p_y1) - p_s);
    let form_on_complement = err_cond(dist, s, &complement)
        .ok()
        .map(|c| 2.0 * c * (1.0 - p_s) + p_y1 - (1.0 - p_s));
    DecompositionReport {
        lhs,
        form_on_s,
        form_on_complement,
    }
}

/// Why a band produced no candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerFailure {
    /// No family member with positive, in-band selection mass.
    EmptyBand,
    /// The learner gave up for its own reasons.
    Declined,
}

impl LearnerFailure {
    pub fn as_str(&self) -> &'static str {
        match self {
            LearnerFailure::EmptyBand => "empty_band",
            LearnerFailure::Declined => "declined",
        }
    }
}

/// One invocation of a conditional-classification learner on a mass band.
pub struct BandRequest<'a> {
    pub dist: &'a FiniteDistribution,
    pub family: &'a HypothesisFamily,
    /// Inclusive selection-mass band.
    pub lo: f64,
    pub hi: f64,
    pub epsilon: f64,
    pub delta: f64,
}

/// A learner that, given a mass band [lo, hi], returns the index of a family
/// member whose selection mass lies in the band and whose conditional loss
/// err(S | S) is near the in-band minimum.
pub trait ConditionalLearner {
    fn learn(&mut self, req: &BandRequest<'_>) -> core::result::Result<usize, LearnerFailure>;
}

/// Audit record for one learner invocation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandAudit {
    /// 1-based band index.
    pub k: usize,
    /// Band endpoints (inclusive).
    pub a: f64,
    pub b: f64,
    /// Whether this invocation ran on the label-flipped distribution.
    pub flipped: bool,
    pub learner_status: String,
    /// Candidate member index (for flipped runs: already complemented).
    pub candidate: Option<usize>,
    pub candidate_err: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReductionOutcome {
    /// Index of the winning family member.
    pub winner: usize,
    /// Exact classification loss of the winner.
    pub winner_err: f64,
    /// 1-based index of the band that produced the winner.
    pub winner_band: usize,
    /// Whether the winner came through the label-flipped path.
    pub winner_flipped: bool,
    pub audit: Vec<BandAudit>,
}

fn validate_reduction_inputs(
    family: &HypothesisFamily,
    dist: &FiniteDistribution,
    epsilon: f64,
    delta: f64,
) -> Result<usize> {
    if family.dim() != dist.dim() {
        return Err(Error::DimensionMismatch {
            expected: dist.dim(),
            got: family.dim(),
        });
    }
    if !family.is_closed_under_complement() {
        return Err(invalid("family", "reductions require a family closed under complement"));
    }
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(invalid("epsilon", "must be positive and finite"));
    }
    if !(delta.is_finite() && delta > 0.0 && delta < 1.0) {
        return Err(invalid("delta", "must lie in (0, 1)"));
    }
    Ok(fmath::ceil_at_least_one(1.0 / epsilon))
}

/// Sweeps mass bands [(k-1)e, ke] for k = 1..ceil(1/e), invoking the
/// learner once per band with confidence e*delta/2, and returns the exact
/// classification-loss minimizer among the per-band candidates (ties: the
/// lowest band). Bands where the learner fails are recorded and skipped.
///
/// With a learner that is within eta of the in-band conditional optimum the
/// winner is within 2*eta + 3e of the family-wide classification optimum;
/// the headline guarantee is min + 6e.
pub fn reduce_additive<L: ConditionalLearner + ?Sized>(
    learner: &mut L,
    family: &HypothesisFamily,
    dist: &FiniteDistribution,
    epsilon: f64,
    delta: f64,
) -> Result<ReductionOutcome> {
    let bands = validate_reduction_inputs(family, dist, epsilon, delta)?;
    let mut audit = Vec::with_capacity(bands);
    for k in 1..=bands {
        audit.push(run_band(learner, family, dist, dist, None, k, epsilon, delta));
    }
    finish(audit)
}

/// As [`reduce_additive`], but each band also runs on the label-flipped
/// distribution, admitting the complement of that run's winner as a
/// candidate. This covers optima whose complement carries the small mass,
/// preserving a multiplicative learner guarantee: with a (1+alpha)-factor
/// learner the winner is within (1+alpha)(min + 4e).
pub fn reduce_multiplicative<L: ConditionalLearner + ?Sized>(
    learner: &mut L,
    family: &HypothesisFamily,
    dist: &FiniteDistribution,
    alpha: f64,
    epsilon: f64,
    delta: f64,
) -> Result<ReductionOutcome> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(invalid("alpha", "must be positive and finite"));
    }
    let bands = validate_reduction_inputs(family, dist, epsilon, delta)?;
    let complement_of = family.complement_map(dist)?;
    let flipped = flip_labels(dist);
    let mut audit = Vec::with_capacity(2 * bands);
    for k in 1..=bands {
        audit.push(run_band(learner, family, dist, dist, None, k, epsilon, delta));
        audit.push(run_band(
            learner,
            family,
            dist,
            &flipped,
            Some(&complement_of),
            k,
            epsilon,
            delta,
        ));
    }
    finish(audit)
}

/// Runs one learner invocation. `eval_dist` is the true distribution used
/// for exact candidate evaluation; `learn_dist` is what the learner sees.
/// When `complement_of` is given the learner's answer is complemented
/// through it (the flipped path).
#[allow(clippy::too_many_arguments)]
fn run_band<L: ConditionalLearner + ?Sized>(
    learner: &mut L,
    family: &HypothesisFamily,
    eval_dist: &FiniteDistribution,
    learn_dist: &FiniteDistribution,
    complement_of: Option<&[usize]>,
    k: usize,
    epsilon: f64,
    delta: f64,
) -> BandAudit {
    let a = (k - 1) as f64 * epsilon;
    let b = k as f64 * epsilon;
    let req = BandRequest {
        dist: learn_dist,
        family,
        lo: a,
        hi: b,
        epsilon,
        delta: epsilon * delta / 2.0,
    };
    match learner.learn(&req) {
        Ok(index) => {
            let candidate = match complement_of {
                Some(map) => map[index],
                None => index,
            };
            let err = err_class(eval_dist, family.member(candidate));
            BandAudit {
                k,
                a,
                b,
                flipped: complement_of.is_some(),
                learner_status: String::from("ok"),
                candidate: Some(candidate),
                candidate_err: Some(err),
            }
        }
        Err(failure) => BandAudit {
            k,
            a,
            b,
            flipped: complement_of.is_some(),
            learner_status: String::from(failure.as_str()),
            candidate: None,
            candidate_err: None,
        },
    }
}

fn finish(audit: Vec<BandAudit>) -> Result<ReductionOutcome> {
    let mut best: Option<(usize, f64, usize, bool)> = None;
    for entry in &audit {
        if let (Some(candidate), Some(err)) = (entry.candidate, entry.candidate_err) {
            if best.map_or(true, |(_, e, _, _)| err < e) {
                best = Some((candidate, err, entry.k, entry.flipped));
            }
        }
    }
    match best {
        Some((winner, winner_err, winner_band, winner_flipped)) => Ok(ReductionOutcome {
            winner,
            winner_err,
            winner_band,
            winner_flipped,
            audit,
        }),
        None => Err(Error::NoCandidates),
    }
}

/// Holdout size for estimating candidate losses when the distribution is
/// only available through samples: ceil(ln(4 ceil(1/e) / delta) / (2 e^2)).
pub fn estimation_sample_size(epsilon: f64, delta: f64) -> Result<usize> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(invalid("epsilon", "must be positive and finite"));
    }
    if !(delta.is_finite() && delta > 0.0 && delta < 1.0) {
        return Err(invalid("delta", "must lie in (0, 1)"));
    }
    let bands = fmath::ceil_at_least_one(1.0 / epsilon) as f64;
    Ok(fmath::ceil_at_least_one(
        fmath::ln(4.0 * bands / delta) / (2.0 * epsilon * epsilon),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn subset_spec_json_round_trips_through_complement() {
        // regression: the recursive Complement variant must serialize
        // without the flattening tagged form, which cannot nest
        let spec = SubsetSpec::Halfspace {
            w: Vector::new(vec![1.0, 0.0]).unwrap(),
            t: 0.5,
        }
        .complement();
        let text = serde_json::to_string_pretty(&spec).unwrap();
        let back: SubsetSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
        assert!(text.contains("\"kind\": \"complement\""));
    }

    fn atom(x: &[f64], y: bool, mass: f64) -> Atom {
        Atom {
            x: Vector::new(x.to_vec()).unwrap(),
            y,
            mass,
        }
    }

    /// Four equal atoms on a line at 0, 1, 2, 3.
    fn four_atoms(ys: [bool; 4]) -> FiniteDistribution {
        let atoms = (0..4)
            .map(|i| atom(&[i as f64], ys[i], 0.25))
            .collect();
        FiniteDistribution::new(1, atoms).unwrap()
    }

    /// Exact in-band conditional minimizer; skips zero-mass members.
    struct ExactBandLearner;

    impl ConditionalLearner for ExactBandLearner {
        fn learn(&mut self, req: &BandRequest<'_>) -> core::result::Result<usize, LearnerFailure> {
            let mut best: Option<(usize, f64)> = None;
            for i in 0..req.family.len() {
                let member = req.family.member(i);
                let mass = req.dist.mass_of(member);
                if mass <= 0.0 || mass < req.lo || mass > req.hi {
                    continue;
                }
                let c = err_cond(req.dist, member, member).expect("positive mass");
                if best.map_or(true, |(_, b)| c < b) {
                    best = Some((i, c));
                }
            }
            best.map(|(i, _)| i).ok_or(LearnerFailure::EmptyBand)
        }
    }

    #[test]
    fn classification_loss_convention() {
        // all y = 0 against the empty set: every atom agrees, loss 1
        let dist = four_atoms([false; 4]);
        assert_eq!(err_class(&dist, &SubsetSpec::Empty), 1.0);
        // all y = 1 against everything: loss 1 again
        let dist = four_atoms([true; 4]);
        assert_eq!(err_class(&dist, &SubsetSpec::All), 1.0);
        // y = (0,0,1,1), S = atoms at 2 and 3: y matches membership everywhere
        let dist = four_atoms([false, false, true, true]);
        let s = SubsetSpec::AxisAbove { axis: 0, t: 1.5 };
        assert_eq!(err_class(&dist, &s), 1.0);
        // complement of S: no atom matches
        assert_eq!(err_class(&dist, &s.complement()), 0.0);
    }

    #[test]
    fn conditional_loss_and_zero_mass_guard() {
        let dist = four_atoms([true; 4]);
        assert_eq!(
            err_cond(&dist, &SubsetSpec::All, &SubsetSpec::All).unwrap(),
            1.0
        );
        assert!(matches!(
            err_cond(&dist, &SubsetSpec::All, &SubsetSpec::Empty),
            Err(Error::ZeroMassCondition)
        ));
        // condition on atoms {0, 1}, S = T, y = (1, 0, ...): half agree
        let dist = four_atoms([true, false, true, false]);
        let t = SubsetSpec::Complement(Box::new(SubsetSpec::AxisAbove { axis: 0, t: 1.5 }));
        assert_eq!(err_cond(&dist, &t, &t).unwrap(), 0.5);
    }

    #[test]
    fn distribution_validation() {
        let bad_sum = FiniteDistribution::new(1, vec![atom(&[0.0], true, 0.5)]);
        assert!(bad_sum.is_err());
        let dup = FiniteDistribution::new(
            1,
            vec![atom(&[0.0], true, 0.5), atom(&[0.0], true, 0.5)],
        );
        assert!(dup.is_err());
        // same point, different labels: allowed (a noisy point)
        let noisy = FiniteDistribution::new(
            1,
            vec![atom(&[0.0], true, 0.5), atom(&[0.0], false, 0.5)],
        );
        assert!(noisy.is_ok());
        let json = serde_json::to_string(&noisy.unwrap()).unwrap();
        let back: FiniteDistribution = serde_json::from_str(&json).unwrap();
        assert_eq!(back.len(), 2);
        let tampered = json.replace("0.5", "0.7");
        assert!(serde_json::from_str::<FiniteDistribution>(&tampered).is_err());
    }

    #[test]
    fn empirical_merges_duplicates() {
        let mut data = Dataset::new(2).unwrap();
        data.push(&[1.0, 2.0], true).unwrap();
        data.push(&[1.0, 2.0], true).unwrap();
        data.push(&[1.0, 2.0], false).unwrap();
        data.push(&[0.0, 0.0], false).unwrap();
        let dist = FiniteDistribution::empirical(&data).unwrap();
        assert_eq!(dist.len(), 3);
        assert_eq!(dist.atoms()[0].mass, 0.5);
        assert!((dist.atoms().iter().map(|a| a.mass).sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn flip_is_involution_and_complements_loss() {
        let mut rng = SplitRng::new(40);
        for trial in 0..50 {
            let dist = FiniteDistribution::random(2, 8, &mut rng).unwrap();
            let flipped = flip_labels(&dist);
            assert_eq!(flip_labels(&flipped), dist);
            let t = rng.standard_normal();
            let s = SubsetSpec::AxisAbove { axis: trial % 2, t };
            let total = err_class(&dist, &s) + err_class(&flipped, &s);
            assert!((total - 1.0).abs() < 1e-12, "trial {trial}: {total}");
            // conditional transform: flipping labels equals classifying by
            // the complement, conditioned on the same subset
            if dist.mass_of(&s) > 0.0 {
                let lhs = err_cond(&flipped, &s, &s).unwrap();
                let rhs = err_cond(&dist, &s.clone().complement(), &s).unwrap();
                assert!((lhs - rhs).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn decomposition_identity_on_random_instances() {
        let mut rng = SplitRng::new(41);
        let mut checked = 0;
        for trial in 0..200 {
            let dist = FiniteDistribution::random(3, 8, &mut rng).unwrap();
            let s = SubsetSpec::Halfspace {
                w: Vector::new(vec![
                    rng.standard_normal(),
                    rng.standard_normal(),
                    rng.standard_normal(),
                ])
                .unwrap(),
                t: rng.standard_normal(),
            };
            let report = check_decomposition(&dist, &s);
            if let Some(f1) = report.form_on_s {
                assert!((f1 - report.lhs).abs() <= 1e-12, "trial {trial} form 1");
                checked += 1;
            }
            if let Some(f2) = report.form_on_complement {
                assert!((f2 - report.lhs).abs() <= 1e-12, "trial {trial} form 2");
            }
        }
        assert!(checked > 100, "too few nondegenerate subsets: {checked}");
    }

    #[test]
    fn decomposition_boundary_masses_yield_partial_forms() {
        let dist = four_atoms([true, false, true, false]);
        let full = check_decomposition(&dist, &SubsetSpec::All);
        assert!(full.form_on_s.is_some());
        assert!(full.form_on_complement.is_none());
        assert!((full.form_on_s.unwrap() - full.lhs).abs() <= 1e-12);
        let empty = check_decomposition(&dist, &SubsetSpec::Empty);
        assert!(empty.form_on_s.is_none());
        assert!(empty.form_on_complement.is_some());
        assert!((empty.form_on_complement.unwrap() - empty.lhs).abs() <= 1e-12);
    }

    fn line_threshold_family(dist: &FiniteDistribution) -> HypothesisFamily {
        // thresholds placed between adjacent atom positions plus both
        // extremes, then closed by complements
        let mut xs: Vec<f64> = dist.atoms().iter().map(|a| a.x.as_slice()[0]).collect();
        xs.sort_by(f64::total_cmp);
        let mut thresholds = vec![xs[0] - 1.0];
        for w in xs.windows(2) {
            thresholds.push((w[0] + w[1]) / 2.0);
        }
        thresholds.push(xs[xs.len() - 1] + 1.0);
        let members = thresholds
            .into_iter()
            .map(|t| SubsetSpec::AxisAbove { axis: 0, t })
            .collect();
        HypothesisFamily::with_complements(1, members).unwrap()
    }

    fn exhaustive_min(dist: &FiniteDistribution, family: &HypothesisFamily) -> f64 {
        (0..family.len())
            .map(|i| err_class(dist, family.member(i)))
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn additive_reduction_meets_its_guarantee() {
        let mut rng = SplitRng::new(42);
        let epsilon = 0.1;
        for trial in 0..60 {
            let dist = FiniteDistribution::random(1, 8, &mut rng).unwrap();
            let family = line_threshold_family(&dist);
            let outcome =
                reduce_additive(&mut ExactBandLearner, &family, &dist, epsilon, 0.1).unwrap();
            let min = exhaustive_min(&dist, &family);
            assert!(
                outcome.winner_err <= min + 6.0 * epsilon + 1e-12,
                "trial {trial}: winner {} vs min {min}",
                outcome.winner_err
            );
            assert_eq!(outcome.winner_err, err_class(&dist, family.member(outcome.winner)));
            assert!(!outcome.winner_flipped);
            assert_eq!(outcome.audit.len(), 10);
        }
    }

    #[test]
    fn additive_reduction_zero_mass_and_full_mass_family() {
        // all labels 0: the full set has loss 0 under the agreement
        // convention and must win; the empty member is unrankable
        let dist = four_atoms([false; 4]);
        let family =
            HypothesisFamily::with_complements(1, vec![SubsetSpec::Empty]).unwrap();
        let outcome = reduce_additive(&mut ExactBandLearner, &family, &dist, 0.25, 0.1).unwrap();
        assert_eq!(family.member(outcome.winner), &SubsetSpec::Complement(Box::new(SubsetSpec::Empty)));
        assert_eq!(outcome.winner_err, 0.0);
        let skipped = outcome
            .audit
            .iter()
            .filter(|b| b.learner_status == "empty_band")
            .count();
        assert_eq!(skipped, 3, "only the full-mass band is feasible");
    }

    #[test]
    fn epsilon_at_least_one_degenerates_to_single_band() {
        let dist = four_atoms([true, false, true, false]);
        let family = line_threshold_family(&dist);
        let outcome = reduce_additive(&mut ExactBandLearner, &family, &dist, 1.0, 0.1).unwrap();
        assert_eq!(outcome.audit.len(), 1);
        assert_eq!(outcome.audit[0].a, 0.0);
        assert_eq!(outcome.audit[0].b, 1.0);
    }

    #[test]
    fn reductions_reject_unclosed_families() {
        let dist = four_atoms([true, false, true, false]);
        let family =
            HypothesisFamily::new(1, vec![SubsetSpec::AxisAbove { axis: 0, t: 0.5 }]).unwrap();
        assert!(reduce_additive(&mut ExactBandLearner, &family, &dist, 0.25, 0.1).is_err());
        assert!(
            reduce_multiplicative(&mut ExactBandLearner, &family, &dist, 0.5, 0.25, 0.1).is_err()
        );
    }

    #[test]
    fn complement_map_is_extensional() {
        let dist = four_atoms([true, false, true, false]);
        let family = line_threshold_family(&dist);
        let map = family.complement_map(&dist).unwrap();
        let masks = family.masks(&dist);
        for (i, &j) in map.iter().enumerate() {
            let flipped: Vec<bool> = masks[i].iter().map(|b| !b).collect();
            assert_eq!(masks[j], flipped);
        }
        // a family missing a complement fails
        let open = HypothesisFamily::new_closed(
            1,
            vec![SubsetSpec::AxisAbove { axis: 0, t: 0.5 }, SubsetSpec::All],
        )
        .unwrap();
        assert!(open.complement_map(&dist).is_err());
    }

    #[test]
    fn multiplicative_reduction_meets_its_guarantee() {
        let mut rng = SplitRng::new(43);
        let epsilon = 0.05;
        let alpha = 0.5;
        for trial in 0..60 {
            let dist = FiniteDistribution::random(1, 8, &mut rng).unwrap();
            let family = line_threshold_family(&dist);
            let outcome = reduce_multiplicative(
                &mut ExactBandLearner,
                &family,
                &dist,
                alpha,
                epsilon,
                0.1,
            )
            .unwrap();
            let min = exhaustive_min(&dist, &family);
            assert!(
                outcome.winner_err <= (1.0 + alpha) * (min + 4.0 * epsilon) + 1e-12,
                "trial {trial}: winner {} vs min {min}",
                outcome.winner_err
            );
        }
    }

    #[test]
    fn flipped_path_wins_when_the_complement_side_is_easy() {
        // Optimum S* = atoms at {3} with y = 1 there and mass 0.05; its
        // complement has mass 0.95. The direct path can only place S* in
        // the lowest band where a zero-ish-mass competitor confuses the
        // conditional objective; the flipped run on the complement band
        // recovers it. Construct so the winning audit entry is flipped.
        let atoms = vec![
            atom(&[0.0], false, 0.50),
            atom(&[1.0], false, 0.30),
            atom(&[2.0], true, 0.15),
            atom(&[3.0], true, 0.05),
        ];
        let dist = FiniteDistribution::new(1, atoms).unwrap();
        let family = line_threshold_family(&dist);
        let outcome = reduce_multiplicative(
            &mut ExactBandLearner,
            &family,
            &dist,
            0.5,
            0.5,
            0.1,
        )
        .unwrap();
        // with bands of width 0.5 the direct path in band 1 prefers the
        // {3}-only subset of mass 0.05 (conditional loss 1 is forced for
        // every in-band candidate; the first minimal one wins), while the
        // flipped path in band 2 can return the mass-0.95 complement of
        // the optimum and thus the optimum itself after complementing
        let flipped_entries: Vec<_> =
            outcome.audit.iter().filter(|e| e.flipped).collect();
        assert!(!flipped_entries.is_empty());
        let best_flipped = flipped_entries
            .iter()
            .filter_map(|e| e.candidate_err)
            .fold(f64::INFINITY, f64::min);
        let best_direct = outcome
            .audit
            .iter()
            .filter(|e| !e.flipped)
            .filter_map(|e| e.candidate_err)
            .fold(f64::INFINITY, f64::min);
        assert!(
            best_flipped < best_direct,
            "flipped {best_flipped} should beat direct {best_direct}"
        );
        assert!(outcome.winner_flipped);
    }

    #[test]
    fn estimation_sample_size_formula() {
        // epsilon = 0.1, delta = 0.1: ceil(ln(400) / 0.02) = ceil(299.57) = 300
        assert_eq!(estimation_sample_size(0.1, 0.1).unwrap(), 300);
        assert!(estimation_sample_size(0.0, 0.1).is_err());
        assert!(estimation_sample_size(0.1, 1.0).is_err());
    }

    #[test]
    fn band_sweep_covers_the_unit_interval() {
        for &eps in &[0.03, 0.1, 0.3, 0.7, 1.0, 1.5] {
            let bands = fmath::ceil_at_least_one(1.0 / eps);
            assert!((bands as f64) * eps >= 1.0 - 1e-12, "eps {eps}");
            // consecutive bands share an endpoint, leaving no gaps
            for k in 1..=bands {
                let a = (k - 1) as f64 * eps;
                let b = k as f64 * eps;
                assert!(a <= b);
            }
        }
    }
}
