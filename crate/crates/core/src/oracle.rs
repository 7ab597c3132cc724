//! Ground truth for wrench feasibility: an LP that looks for nonnegative
//! generator weights reproducing a wrench, plus random wrench generators used
//! to compare a WCM against it.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::Vector6;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::contact::{same_anchor, GeneratingMatrices, Vec3, Wrench};
use crate::lp::{self, LinearProgram, LpSolution, Sense};
use crate::{Error, LpError, Result};

/// Wrenches with `SURFACE_TOL < |min(W·w)|/(1 + ‖w‖) ≤ BOUNDARY_BAND` are not
/// compared.
pub const BOUNDARY_BAND: f64 = 1e-7;

/// Margins within `SURFACE_TOL·(1 + ‖w‖)` of zero count as on the cone
/// surface, hence feasible. Wrenches of a cone that is not full-dimensional
/// always sit on its equality rows.
pub const SURFACE_TOL: f64 = 1e-9;

/// Allowed residual `‖P·α − w‖∞` of an accepted certificate.
const RESIDUAL_TOL: f64 = 1e-7;

const COEFFICIENT_TOL: f64 = 1e-10;

/// A halfspace-style membership test under comparison. Kept as a trait so
/// this module never depends on how the test was built.
pub trait WrenchClassifier {
    fn anchor(&self) -> &Vec3;
    /// Signed margin; nonnegative means inside.
    fn margin_of(&self, w: &Vector6<f64>) -> f64;
}

#[derive(Debug, Clone, PartialEq)]
pub struct MembershipVerdict {
    pub feasible: bool,
    /// Nonnegative generator weights when feasible.
    pub coefficients: Option<Vec<f64>>,
}

/// Is `wrench` (about the generating anchor) a nonnegative combination of
/// the stacked generator columns?
pub fn wrench_membership_lp(gen: &GeneratingMatrices, wrench: &Wrench) -> Result<MembershipVerdict> {
    if !same_anchor(&wrench.about, gen.anchor()) {
        return Err(Error::AnchorMismatch);
    }
    let n = gen.columns();
    let target = wrench.as_vector();
    let columns: Vec<Vector6<f64>> = (0..n).map(|k| gen.wrench_column(k)).collect();
    let mut program = LinearProgram::minimize(vec![0.0; n]).nonnegative();
    for r in 0..6 {
        program.add_constraint(columns.iter().map(|c| c[r]).collect(), Sense::Eq, target[r]);
    }
    match lp::solve(&program)? {
        LpSolution::Optimal { mut x, .. } => {
            if x.iter().any(|&a| a < -COEFFICIENT_TOL) {
                return Err(LpError::NumericalFailure("membership certificate has negative weights").into());
            }
            x.iter_mut().for_each(|a| *a = a.max(0.0));
            let rebuilt = columns.iter().zip(&x).fold(Vector6::zeros(), |acc, (c, a)| acc + c * *a);
            if (rebuilt - target).amax() > RESIDUAL_TOL * (1.0 + target.amax()) {
                return Err(LpError::NumericalFailure("membership certificate residual too large").into());
            }
            Ok(MembershipVerdict { feasible: true, coefficients: Some(x) })
        }
        LpSolution::Infeasible => Ok(MembershipVerdict { feasible: false, coefficients: None }),
        LpSolution::Unbounded => Err(LpError::NumericalFailure("membership LP reported unbounded").into()),
    }
}

/// A random feasible wrench with exponentially distributed generator weights.
pub fn sample_feasible_wrench(gen: &GeneratingMatrices, seed: u64) -> Wrench {
    WrenchSampler::new(seed).feasible(gen)
}

/// Deterministic source of test wrenches.
#[derive(Debug, Clone)]
pub struct WrenchSampler {
    rng: ChaCha8Rng,
}

/// A wrench placed close to the cone boundary along a random ray.
#[derive(Debug, Clone, PartialEq)]
pub struct StraddleSample {
    pub wrench: Wrench,
    /// Which side of the exit point the sample was placed on.
    pub intended_inside: bool,
    /// Relative distance from the exit point.
    pub delta: f64,
}

impl WrenchSampler {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    fn weights(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| Exp1.sample(&mut self.rng)).collect()
    }

    fn gaussian6(&mut self) -> Vector6<f64> {
        Vector6::from_fn(|_, _| StandardNormal.sample(&mut self.rng))
    }

    pub fn feasible(&mut self, gen: &GeneratingMatrices) -> Wrench {
        let a = self.weights(gen.columns());
        gen.combine(&a)
    }

    /// Starts at a feasible wrench `w0`, walks along a random direction `d`
    /// and finds the exit `t*` of `w0 + t·d` from the cone with one LP. The
    /// sample sits at `t*(1 − δ)` or `t*(1 + δ)`, `δ` log-uniform in
    /// `[1e-4, 1e-1]`.
    ///
    /// Half of the directions stay in the span of the generators so that the
    /// facet rows are exercised even when the cone is not full-dimensional.
    pub fn straddling(&mut self, gen: &GeneratingMatrices) -> Result<StraddleSample> {
        let n = gen.columns();
        let w0 = self.feasible(gen).as_vector();
        let scale = w0.norm().max(1.0);
        let d = if self.rng.random::<bool>() {
            let g: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut self.rng)).collect();
            gen.combine(&g).as_vector()
        } else {
            self.gaussian6()
        };
        let d = if d.norm() > 0.0 { d * (scale / d.norm()) } else { Vector6::x() * scale };

        let delta = libm::pow(10.0, self.rng.random_range(-4.0..=-1.0));
        let intended_inside = self.rng.random::<bool>();

        let mut cost = vec![0.0; n + 1];
        cost[n] = -1.0;
        let mut program = LinearProgram::minimize(cost).nonnegative();
        let columns: Vec<Vector6<f64>> = (0..n).map(|k| gen.wrench_column(k)).collect();
        for r in 0..6 {
            let mut row: Vec<f64> = columns.iter().map(|c| c[r]).collect();
            row.push(-d[r]);
            program.add_constraint(row, Sense::Eq, w0[r]);
        }
        let t = match lp::solve(&program)? {
            LpSolution::Optimal { x, .. } => {
                let t_star = x[n];
                if t_star > 1e-9 {
                    if intended_inside { t_star * (1.0 - delta) } else { t_star * (1.0 + delta) }
                } else {
                    // The ray leaves immediately (direction off the cone's span).
                    if intended_inside { 0.0 } else { delta }
                }
            }
            // The whole ray stays feasible.
            LpSolution::Unbounded => self.rng.random_range(0.0..=1.0),
            LpSolution::Infeasible => {
                return Err(LpError::NumericalFailure("straddle LP lost its feasible start").into())
            }
        };
        let w = w0 + d * t;
        Ok(StraddleSample { wrench: Wrench::from_vector(&w, *gen.anchor()), intended_inside, delta })
    }
}

/// Outcome counts of a WCM versus the membership oracle.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AgreementReport {
    pub agree_feasible: usize,
    pub agree_infeasible: usize,
    pub disagree: usize,
    pub boundary_excluded: usize,
}

impl AgreementReport {
    pub fn total(&self) -> usize {
        self.agree_feasible + self.agree_infeasible + self.disagree + self.boundary_excluded
    }

    pub fn compared(&self) -> usize {
        self.agree_feasible + self.agree_infeasible + self.disagree
    }
}

/// Verdict implied by a halfspace margin, or `None` inside the band where
/// the LP and the hull legitimately disagree.
pub fn margin_verdict(margin: f64, w: &Vector6<f64>) -> Option<bool> {
    let scale = 1.0 + w.norm();
    if margin.abs() <= SURFACE_TOL * scale {
        Some(true)
    } else if margin.abs() <= BOUNDARY_BAND * scale {
        None
    } else {
        Some(margin > 0.0)
    }
}

/// Draws `n` wrenches (alternating interior and boundary-straddling ones)
/// and tallies how often the WCM and the LP oracle agree.
pub fn compare_wcm_oracle<C: WrenchClassifier + ?Sized>(
    gen: &GeneratingMatrices,
    w: &C,
    n: usize,
    seed: u64,
) -> Result<AgreementReport> {
    if !same_anchor(w.anchor(), gen.anchor()) {
        return Err(Error::AnchorMismatch);
    }
    let mut sampler = WrenchSampler::new(seed);
    let mut report = AgreementReport::default();
    for i in 0..n {
        let wrench = if i % 2 == 0 { sampler.feasible(gen) } else { sampler.straddling(gen)?.wrench };
        let x = wrench.as_vector();
        let Some(by_wcm) = margin_verdict(w.margin_of(&x), &x) else {
            report.boundary_excluded += 1;
            continue;
        };
        let by_oracle = wrench_membership_lp(gen, &wrench)?.feasible;
        match (by_wcm, by_oracle) {
            (true, true) => report.agree_feasible += 1,
            (false, false) => report.agree_infeasible += 1,
            _ => report.disagree += 1,
        }
    }
    Ok(report)
}

/// Like [`compare_wcm_oracle`] but with a second classifier in place of the
/// LP, e.g. a shifted matrix against one rebuilt at the new anchor.
pub fn compare_classifiers<A, B>(gen: &GeneratingMatrices, a: &A, b: &B, n: usize, seed: u64) -> Result<AgreementReport>
where
    A: WrenchClassifier + ?Sized,
    B: WrenchClassifier + ?Sized,
{
    if !same_anchor(a.anchor(), gen.anchor()) || !same_anchor(b.anchor(), gen.anchor()) {
        return Err(Error::AnchorMismatch);
    }
    let mut sampler = WrenchSampler::new(seed);
    let mut report = AgreementReport::default();
    for i in 0..n {
        let x = if i % 2 == 0 { sampler.feasible(gen) } else { sampler.straddling(gen)?.wrench }.as_vector();
        match (margin_verdict(a.margin_of(&x), &x), margin_verdict(b.margin_of(&x), &x)) {
            (Some(true), Some(true)) => report.agree_feasible += 1,
            (Some(false), Some(false)) => report.agree_infeasible += 1,
            (Some(_), Some(_)) => report.disagree += 1,
            _ => report.boundary_excluded += 1,
        }
    }
    Ok(report)
}
