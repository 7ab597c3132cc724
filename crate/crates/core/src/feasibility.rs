//! Does the intersection of all contact dual cones reduce to `{0}`?
//!
//! If it does, every total force is a nonnegative combination of the contact
//! generators and any center-of-mass acceleration is feasible. Otherwise the
//! LP below returns a witness `v` with `Υᵀv > 0`, which seeds the wrench
//! constraint matrix construction.

use alloc::vec;
use alloc::vec::Vec;

use crate::contact::{build_generating_matrices, ContactConfiguration, GeneratingMatrices, Vec3};
use crate::lp::{self, LinearProgram, LpSolution, Sense};
use crate::{Error, LpError, Result};

/// `s* < −CLASSIFICATION_TOL` means a strict common dual direction exists.
pub const CLASSIFICATION_TOL: f64 = 1e-8;

/// Normals closer than this count as parallel for the shortcut.
pub const PARALLEL_NORMAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DualStatus {
    Unconstrained,
    Constrained,
}

/// Optimum of `min s  s.t.  Υᵀv + s·1 ≥ 0,  s ≥ −1,  −1 ≤ vₖ ≤ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualIntersectionResult {
    pub s_star: f64,
    pub v: Vec3,
    pub status: DualStatus,
}

/// Solves the dual-intersection LP on the columns of `Υ`.
pub fn dual_intersection_lp(gen: &GeneratingMatrices) -> Result<DualIntersectionResult> {
    let upsilon = gen.upsilon();
    let mut program = LinearProgram::minimize(vec![0.0, 0.0, 0.0, 1.0])
        .with_bounds(0, -1.0, 1.0)
        .with_bounds(1, -1.0, 1.0)
        .with_bounds(2, -1.0, 1.0)
        .with_bounds(3, -1.0, f64::INFINITY);
    for col in upsilon.column_iter() {
        program.add_constraint(vec![col[0], col[1], col[2], 1.0], Sense::Ge, 0.0);
    }
    let (x, s_star) = match lp::solve(&program)? {
        LpSolution::Optimal { x, objective } => (x, objective),
        // v = 0, s = 0 is always feasible and s is bounded below.
        _ => return Err(LpError::NumericalFailure("dual-intersection LP lost feasibility").into()),
    };
    let status = if s_star < -CLASSIFICATION_TOL {
        DualStatus::Constrained
    } else {
        DualStatus::Unconstrained
    };
    Ok(DualIntersectionResult { s_star, v: Vec3::new(x[0], x[1], x[2]), status })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Verdict {
    /// Every total force is achievable.
    Unconstrained,
    /// The feasible wrenches satisfy `witnessᵀF ≥ 0`; `‖witness‖∞ = 1`.
    Constrained { witness: Vec3 },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClassifyOptions {
    /// Skip the LP when all contact normals coincide and use the common
    /// normal as witness.
    pub parallel_shortcut: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    verdict: Verdict,
    generating: GeneratingMatrices,
    /// `None` when the parallel-normal shortcut answered without the LP.
    s_star: Option<f64>,
}

impl Classification {
    pub fn verdict(&self) -> &Verdict {
        &self.verdict
    }

    pub fn generating(&self) -> &GeneratingMatrices {
        &self.generating
    }

    pub fn s_star(&self) -> Option<f64> {
        self.s_star
    }

    pub fn witness(&self) -> Option<Vec3> {
        match self.verdict {
            Verdict::Constrained { witness } => Some(witness),
            Verdict::Unconstrained => None,
        }
    }

    pub fn is_constrained(&self) -> bool {
        matches!(self.verdict, Verdict::Constrained { .. })
    }
}

pub fn classify(config: &ContactConfiguration, com: &Vec3) -> Result<Classification> {
    classify_with(config, com, ClassifyOptions::default())
}

pub fn classify_with(
    config: &ContactConfiguration,
    com: &Vec3,
    options: ClassifyOptions,
) -> Result<Classification> {
    let generating = build_generating_matrices(config, com);
    if options.parallel_shortcut && config.normals_parallel(PARALLEL_NORMAL_TOL) {
        let normal = config.contacts()[0].normal();
        return Ok(Classification {
            verdict: Verdict::Constrained { witness: normal / normal.amax() },
            generating,
            s_star: None,
        });
    }
    let result = dual_intersection_lp(&generating)?;
    let verdict = match result.status {
        DualStatus::Unconstrained => Verdict::Unconstrained,
        DualStatus::Constrained => {
            let scale = result.v.amax();
            if scale <= 0.0 {
                return Err(Error::ZeroVector);
            }
            Verdict::Constrained { witness: result.v / scale }
        }
    };
    Ok(Classification { verdict, generating, s_star: Some(result.s_star) })
}

/// `Υᵀv` for a candidate witness.
pub fn dual_margins(gen: &GeneratingMatrices, v: &Vec3) -> Vec<f64> {
    gen.upsilon().column_iter().map(|c| c.dot(v)).collect()
}
