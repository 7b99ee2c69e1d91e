//! Runnable numeric checks for the quantitative facts the learners rest on:
//! surrogate-loss and gradient-moment bounds, relative smoothness of the
//! surrogate gradient, the stationarity rate of projected SGD, the
//! stationary-point certificate on planted instances, and the exact
//! classification-error decomposition. Each check is a pure function of its
//! parameters and seed and reports measured value, bound, and tolerance.

use crate::error::{invalid, Result};
use crate::fmath;
use crate::geom::{angle, dot, UnitVector, Vector};
use crate::oracle::planted_joint_error;
use crate::planted::{GaussianConstError, PlantedModel};
use crate::psgd::{psgd, PsgdConfig};
use crate::reduction::{check_decomposition, FiniteDistribution, SubsetSpec};
use crate::rng::SplitRng;
use crate::INV_SQRT_2PI;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

/// Smallest Monte-Carlo sample size the moment checks accept; below this
/// the 3-sigma tolerances stop being meaningful.
pub const MIN_CHECK_SAMPLES: usize = 100_000;

/// Fresh-batch size used to estimate population gradient norms.
pub const POPULATION_BATCH: usize = 100_000;

/// Every how many iterates the convergence check measures the population
/// gradient.
pub const CONVERGENCE_STRIDE: usize = 10;

/// Accuracy above which the stationarity certificate only warns: its
/// constants are asymptotic and may not bind yet at coarse accuracy.
pub const ADVISORY_EPSILON: f64 = 0.001;

/// Outcome of one named check. For non-vacuous reports,
/// `passed == (measured <= bound + tolerance)`; a vacuous report records
/// that the check's premise did not apply and passes by definition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    /// The inequality under test, as a formula.
    pub statement_ref: String,
    pub measured: f64,
    pub bound: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// The premise of a conditional check failed; nothing was asserted.
    pub vacuous: bool,
    /// A failure of this check is reported as a warning, not an error.
    pub advisory: bool,
    pub n_samples: usize,
    pub seed: u64,
}

impl CheckReport {
    fn unconditional(
        name: &str,
        statement_ref: &str,
        measured: f64,
        bound: f64,
        tolerance: f64,
        n_samples: usize,
        seed: u64,
    ) -> Self {
        CheckReport {
            name: String::from(name),
            statement_ref: String::from(statement_ref),
            measured,
            bound,
            tolerance,
            passed: measured <= bound + tolerance,
            vacuous: false,
            advisory: false,
            n_samples,
            seed,
        }
    }
}

fn validate_moment_inputs(d: usize, n: usize) -> Result<()> {
    if d == 0 {
        return Err(invalid("d", "dimension must be at least 1"));
    }
    if n < MIN_CHECK_SAMPLES {
        return Err(invalid(
            "n",
            format!("need at least {MIN_CHECK_SAMPLES} samples for a meaningful tolerance"),
        ));
    }
    Ok(())
}

/// Worst-case surrogate loss: with every error bit set, the loss at any
/// unit w is E[max(0, <x, w>)] = 1/sqrt(2 pi), which is also its upper
/// bound. Monte-Carlo mean vs that bound with a 3-sigma tolerance.
pub fn check_loss_bound(d: usize, n: usize, seed: u64) -> Result<CheckReport> {
    validate_moment_inputs(d, n)?;
    let rng = SplitRng::new(seed);
    let w = UnitVector::random(d, &mut rng.child("w"))?;
    let mut sample_rng = rng.child("x");
    let mut x = alloc::vec![0.0; d];
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..n {
        sample_rng.fill_standard_normal(&mut x);
        let v = dot(&x, w.as_slice()).max(0.0);
        sum += v;
        sum_sq += v * v;
    }
    let nf = n as f64;
    let mean = sum / nf;
    let var = (sum_sq / nf - mean * mean).max(0.0);
    let tolerance = 3.0 * fmath::sqrt(var / nf);
    Ok(CheckReport::unconditional(
        "loss_upper_bound",
        "L(w) <= ||w|| / sqrt(2 pi)",
        mean,
        INV_SQRT_2PI,
        tolerance,
        n,
        seed,
    ))
}

/// Gradient moment bounds at a random unit w with every error bit set:
/// the mean projected gradient has norm at most 1/sqrt(2 pi) (it is in
/// fact 0 by symmetry), and its second moment is at most d/2. One shared
/// sample, two sub-reports.
pub fn check_grad_bounds(d: usize, n: usize, seed: u64) -> Result<Vec<CheckReport>> {
    validate_moment_inputs(d, n)?;
    let rng = SplitRng::new(seed);
    let w = UnitVector::random(d, &mut rng.child("w"))?;
    let ws = w.as_slice();
    let mut sample_rng = rng.child("x");
    let mut x = alloc::vec![0.0; d];
    let mut sum_g = alloc::vec![0.0; d];
    let mut sum_sq = 0.0;
    let mut sum_quad = 0.0;
    for _ in 0..n {
        sample_rng.fill_standard_normal(&mut x);
        let proj = dot(&x, ws);
        if proj < 0.0 {
            continue;
        }
        let mut norm_sq = 0.0;
        for j in 0..d {
            let gj = x[j] - proj * ws[j];
            sum_g[j] += gj;
            norm_sq += gj * gj;
        }
        sum_sq += norm_sq;
        sum_quad += norm_sq * norm_sq;
    }
    let nf = n as f64;
    let mean_norm = crate::geom::norm(&sum_g) / nf;
    let second_moment = sum_sq / nf;
    let fourth_moment = sum_quad / nf;
    // SE of the mean-vector norm, bounded by sqrt(E||g||^2 / n)
    let tol_mean = 3.0 * fmath::sqrt(second_moment / nf);
    let var_sq = (fourth_moment - second_moment * second_moment).max(0.0);
    let tol_sq = 3.0 * fmath::sqrt(var_sq / nf);
    Ok(alloc::vec![
        CheckReport::unconditional(
            "grad_mean_norm_bound",
            "||E[g_w]|| <= 1 / sqrt(2 pi)",
            mean_norm,
            INV_SQRT_2PI,
            tol_mean,
            n,
            seed,
        ),
        CheckReport::unconditional(
            "grad_second_moment_bound",
            "E[||g_w||^2] <= d / 2",
            second_moment,
            d as f64 / 2.0,
            tol_sq,
            n,
            seed,
        ),
    ])
}

/// Relative smoothness of the full surrogate gradient
/// grad L(w) = E[e x 1(<x,w> >= 0)]: over unit pairs (v, w), the
/// difference of shared-sample Monte-Carlo gradients must satisfy
/// ||grad(w) - grad(v)|| <= 2 ||w - v||. Pair 0 is (e1, e1) and pair 1 is
/// (e1, -e1); the rest are random. Reports the worst violation with a
/// 3-sigma tolerance from the worst pair's own Monte-Carlo error.
pub fn check_smoothness(d: usize, pairs: usize, n: usize, seed: u64) -> Result<CheckReport> {
    validate_moment_inputs(d, n)?;
    if pairs == 0 {
        return Err(invalid("pairs", "need at least one pair"));
    }
    let rng = SplitRng::new(seed);
    let mut sample_rng = rng.child("x");
    let mut xs = alloc::vec![0.0; n * d];
    sample_rng.fill_standard_normal(&mut xs);

    let e1 = UnitVector::basis(d, 0)?;
    let mut worst_violation = f64::NEG_INFINITY;
    let mut worst_se = 0.0;
    for p in 0..pairs {
        let (v, w) = match p {
            0 => (e1.clone(), e1.clone()),
            1 => (e1.clone(), e1.negated()),
            _ => {
                let mut pair_rng = rng.child_indexed("pair", p as u64);
                (
                    UnitVector::random(d, &mut pair_rng)?,
                    UnitVector::random(d, &mut pair_rng)?,
                )
            }
        };
        let vs = v.as_slice();
        let ws = w.as_slice();
        let mut sum_z = alloc::vec![0.0; d];
        let mut sum_z_sq = 0.0;
        for i in 0..n {
            let x = &xs[i * d..(i + 1) * d];
            let side_w = dot(x, ws) >= 0.0;
            let side_v = dot(x, vs) >= 0.0;
            if side_w == side_v {
                continue;
            }
            let sign = if side_w { 1.0 } else { -1.0 };
            let mut norm_sq = 0.0;
            for j in 0..d {
                let zj = sign * x[j];
                sum_z[j] += zj;
                norm_sq += x[j] * x[j];
            }
            sum_z_sq += norm_sq;
        }
        let nf = n as f64;
        let diff_norm = crate::geom::norm(&sum_z) / nf;
        let mut dist_sq = 0.0;
        for j in 0..d {
            let delta = ws[j] - vs[j];
            dist_sq += delta * delta;
        }
        let violation = diff_norm - 2.0 * fmath::sqrt(dist_sq);
        let variance = (sum_z_sq / nf - diff_norm * diff_norm).max(0.0);
        let se = fmath::sqrt(variance / nf);
        if violation > worst_violation {
            worst_violation = violation;
            worst_se = se;
        }
    }
    Ok(CheckReport::unconditional(
        "relative_smoothness",
        "||grad L(w) - grad L(v)|| <= 2 ||w - v||",
        worst_violation,
        0.0,
        3.0 * worst_se,
        n,
        seed,
    ))
}

/// Stationarity rate of projected SGD on the worst-case all-errors
/// Gaussian stream: the run average of ||E[g at iterate]||^2 must be at
/// most sqrt(d/T). Population gradients are estimated with a fresh
/// [`POPULATION_BATCH`]-sample batch at every [`CONVERGENCE_STRIDE`]-th
/// iterate; the tolerance combines the aggregated Monte-Carlo standard
/// error with the upward bias of the squared-norm estimator.
pub fn check_psgd_convergence(d: usize, t: usize, batch: usize, seed: u64) -> Result<CheckReport> {
    if d == 0 {
        return Err(invalid("d", "dimension must be at least 1"));
    }
    let rng = SplitRng::new(seed);
    let mut source = GaussianConstError { d, e: true };
    let cfg = PsgdConfig::new(t, batch, UnitVector::basis(d, 0)?)?;
    let trace = psgd(&mut source, &cfg, &mut rng.child("psgd"))?;

    let m = POPULATION_BATCH;
    let mf = m as f64;
    let mut x = alloc::vec![0.0; d];
    let mut total_sq_norm = 0.0;
    let mut total_bias = 0.0;
    let mut total_se_sq = 0.0;
    let mut measured_iterates = 0usize;
    for (idx, w) in trace.iterates.iter().enumerate().step_by(CONVERGENCE_STRIDE) {
        let ws = w.as_slice();
        let mut pop_rng = rng.child_indexed("pop", idx as u64);
        let mut sum_g = alloc::vec![0.0; d];
        let mut sum_g_sq = alloc::vec![0.0; d];
        for _ in 0..m {
            pop_rng.fill_standard_normal(&mut x);
            let proj = dot(&x, ws);
            if proj < 0.0 {
                continue;
            }
            for j in 0..d {
                let gj = x[j] - proj * ws[j];
                sum_g[j] += gj;
                sum_g_sq[j] += gj * gj;
            }
        }
        let mut norm_sq = 0.0;
        let mut bias = 0.0;
        let mut se_sq = 0.0;
        for j in 0..d {
            let mean_j = sum_g[j] / mf;
            let var_j = (sum_g_sq[j] / mf - mean_j * mean_j).max(0.0);
            norm_sq += mean_j * mean_j;
            bias += var_j / mf;
            se_sq += 4.0 * mean_j * mean_j * var_j / mf + 2.0 * var_j * var_j / (mf * mf);
        }
        total_sq_norm += norm_sq;
        total_bias += bias;
        total_se_sq += se_sq;
        measured_iterates += 1;
    }
    let k = measured_iterates as f64;
    let measured = total_sq_norm / k;
    let tolerance = 3.0 * fmath::sqrt(total_se_sq) / k + total_bias / k;
    Ok(CheckReport::unconditional(
        "psgd_convergence_rate",
        "avg over iterates of ||E[g]||^2 <= sqrt(d / T)",
        measured,
        fmath::sqrt(d as f64 / t as f64),
        tolerance,
        t * batch + measured_iterates * m,
        seed,
    ))
}

/// Stationary-point certificate on a planted instance: if the measured
/// mean-gradient norm at w falls below 0.4 eps sqrt(ln(1/eps)) and w is
/// within a right angle of the planted direction, then the closed-form
/// joint error of H_w must be below 2.5 (eps sqrt(ln(1/eps)))^(1/2).
/// When the premise fails the report is a vacuous pass. Checks at
/// eps > [`ADVISORY_EPSILON`] are advisory: the certificate's constants
/// are asymptotic in eps.
pub fn check_stationarity_certificate(
    model: &PlantedModel,
    w: &UnitVector,
    epsilon: f64,
    n: usize,
    seed: u64,
) -> Result<CheckReport> {
    if !(epsilon.is_finite() && epsilon > 0.0 && epsilon <= 1.0 / core::f64::consts::E) {
        return Err(invalid("epsilon", "must lie in (0, 1/e]"));
    }
    if n == 0 {
        return Err(invalid("n", "need at least one sample"));
    }
    let theta = angle(&model.v, w)?;
    let ws = w.as_slice();
    let d = model.d;

    let rng = SplitRng::new(seed);
    let mut grad_rng = rng.child("grad");
    let mut x = alloc::vec![0.0; d];
    let mut sum_ex = alloc::vec![0.0; d];
    let mut sum_eproj = 0.0;
    for _ in 0..n {
        let y = model.sample_into(&mut grad_rng, &mut x);
        if model.classifier.predict(&x) == y {
            continue;
        }
        let proj = dot(&x, ws);
        if proj < 0.0 {
            continue;
        }
        sum_eproj += proj;
        for j in 0..d {
            sum_ex[j] += x[j];
        }
    }
    let nf = n as f64;
    let mut grad_norm_sq = 0.0;
    for j in 0..d {
        let gj = (sum_ex[j] - sum_eproj * ws[j]) / nf;
        grad_norm_sq += gj * gj;
    }
    let grad_norm = fmath::sqrt(grad_norm_sq);

    let ln_term = fmath::sqrt(fmath::ln(1.0 / epsilon));
    let premise = grad_norm < 0.4 * epsilon * ln_term
        && theta < core::f64::consts::FRAC_PI_2;
    let measured = planted_joint_error(model, w)?;
    let bound = 2.5 * fmath::sqrt(epsilon * ln_term);
    Ok(CheckReport {
        name: format!("stationarity_certificate_theta_{theta:.3}"),
        statement_ref: String::from(
            "||E[g_w]|| < 0.4 eps sqrt(ln(1/eps)) and theta < pi/2 \
             => joint error < 2.5 (eps sqrt(ln(1/eps)))^(1/2)",
        ),
        measured,
        bound,
        tolerance: 0.0,
        passed: !premise || measured <= bound,
        vacuous: !premise,
        advisory: epsilon > ADVISORY_EPSILON,
        n_samples: n,
        seed,
    })
}

/// Exact error-decomposition identity over random finite distributions and
/// random halfspace subsets: the worst absolute deviation between the
/// classification loss and either affine conditional form must stay within
/// 1e-12.
pub fn check_decomposition_suite(trials: usize, seed: u64) -> Result<CheckReport> {
    if trials == 0 {
        return Err(invalid("trials", "need at least one trial"));
    }
    let d = 3;
    let rng = SplitRng::new(seed);
    let mut worst: f64 = 0.0;
    for t in 0..trials {
        let dist = FiniteDistribution::random(d, 8, &mut rng.child_indexed("dist", t as u64))?;
        let mut sub_rng = rng.child_indexed("subset", t as u64);
        let mut coords = alloc::vec![0.0; d];
        sub_rng.fill_standard_normal(&mut coords);
        let s = SubsetSpec::Halfspace {
            w: Vector::new(coords)?,
            t: sub_rng.standard_normal(),
        };
        let report = check_decomposition(&dist, &s);
        if let Some(f1) = report.form_on_s {
            worst = worst.max(fmath::abs(f1 - report.lhs));
        }
        if let Some(f2) = report.form_on_complement {
            worst = worst.max(fmath::abs(f2 - report.lhs));
        }
    }
    Ok(CheckReport::unconditional(
        "error_decomposition_identity",
        "err(S) = 2 err(S|S) P[S] + P[y=0] - P[S] \
         = 2 err(S|~S) P[~S] + P[y=1] - P[~S]",
        worst,
        0.0,
        1e-12,
        trials,
        seed,
    ))
}

/// The full default check suite: loss and gradient moment bounds at
/// d = 5 and n = 10^6, smoothness over 100 pairs, the convergence rate at
/// T = 2000, the stationarity certificate on a planted instance across a
/// small angle grid at eps = 0.01 (advisory), and the decomposition
/// identity over 1000 random instances.
pub fn default_suite(seed: u64) -> Result<Vec<CheckReport>> {
    let mut reports = Vec::new();
    reports.push(check_loss_bound(5, 1_000_000, seed)?);
    reports.extend(check_grad_bounds(5, 1_000_000, seed)?);
    reports.push(check_smoothness(5, 100, 100_000, seed)?);
    reports.push(check_psgd_convergence(5, 2000, 100, seed)?);

    let v = UnitVector::basis(2, 0)?;
    let classifier = crate::data::Classifier::Linear {
        w: v.as_slice().to_vec(),
        t: 0.0,
    };
    let model = PlantedModel::new(v, classifier, 0.02, 0.5, seed)?;
    for &theta in &[0.0, 0.05, 0.3, 1.0, 1.8] {
        let w = UnitVector::from_coords(alloc::vec![fmath::cos(theta), fmath::sin(theta)])?;
        reports.push(check_stationarity_certificate(
            &model, &w, 0.01, 200_000, seed,
        )?);
    }
    reports.push(check_decomposition_suite(1000, seed)?);
    Ok(reports)
}

/// True when a failed report should fail a run: non-vacuous, non-advisory.
pub fn is_blocking_failure(report: &CheckReport) -> bool {
    !report.passed && !report.vacuous && !report.advisory
}
