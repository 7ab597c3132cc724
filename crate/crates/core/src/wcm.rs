//! Wrench constraint matrices: the halfspace description `W·[F; M] ≥ 0` of
//! every total wrench (about the center of mass) a constrained contact
//! configuration can produce.
//!
//! Construction, for a witness `v` strictly inside all dual cones:
//!
//! 1. rotate the world so `v` becomes the z-axis and rescale every generator
//!    pair so its rotated force has unit z-component;
//! 2. drop that z-row: each column becomes a point in 5D, and the feasible
//!    wrenches divided by their (positive) z-force are exactly the convex
//!    hull of those points;
//! 3. every hull facet `a·p ≥ w` becomes the row `[a₁, a₂, −w, a₃, a₄, a₅]`
//!    in the rotated frame, every hull equality a `±` row pair, plus one row
//!    enforcing `vᵀF ≥ 0`;
//! 4. rotate rows back to the world frame and scale them to unit length.
//!
//! Moving the center of mass by `Δ` only needs `W·[[I, 0], [skew(Δ), I]]`.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{Dyn, Matrix3xX, OMatrix, RowVector6, Vector6, U6};

use crate::contact::{
    build_generating_matrices, required_wrench, rotation_aligning_z, same_anchor, ContactConfiguration,
    GeneratingMatrices, Mat3, MotionQuery, RigidBodyParams, Vec3, Wrench,
};
use crate::feasibility::{Classification, Verdict};
use crate::hull::{convex_hull, PointCloud};
use crate::lp::{self, LinearProgram, LpSolution, Sense};
use crate::oracle::{wrench_membership_lp, WrenchClassifier};
use crate::{Error, Result};

/// Generators with `v·υ ≤ WITNESS_POSITIVITY_TOL·‖v‖‖υ‖` are rejected.
pub const WITNESS_POSITIVITY_TOL: f64 = 1e-10;

/// Membership slack: `min(W·w) ≥ −MEMBERSHIP_TOL·(1 + ‖w‖)` counts as inside.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

pub type WrenchRows = OMatrix<f64, Dyn, U6>;

/// Generators expressed in the witness frame and rescaled so every force has
/// unit component along the witness.
#[derive(Debug, Clone, PartialEq)]
pub struct ModifiedGenerators {
    pub upsilon_tilde: Matrix3xX<f64>,
    pub gamma_tilde: Matrix3xX<f64>,
    pub rotation: Mat3,
    pub witness: Vec3,
}

impl ModifiedGenerators {
    /// Each column with its unit z-force removed: `[fx, fy, mx, my, mz]`.
    pub fn projected_points(&self) -> PointCloud {
        let mut pc = PointCloud::new(5).expect("5 is a supported dimension");
        for (f, m) in self.upsilon_tilde.column_iter().zip(self.gamma_tilde.column_iter()) {
            pc.push(&[f[0], f[1], m[0], m[1], m[2]]).expect("generators are finite");
        }
        pc
    }
}

pub fn modified_generators(gen: &GeneratingMatrices, v: &Vec3) -> Result<ModifiedGenerators> {
    let rotation = rotation_aligning_z(v)?;
    let v_norm = v.norm();
    let rotated_f = rotation * gen.upsilon();
    let rotated_m = rotation * gen.gamma();
    let mut upsilon_tilde = Matrix3xX::zeros(gen.columns());
    let mut gamma_tilde = Matrix3xX::zeros(gen.columns());
    for (k, col) in gen.upsilon().column_iter().enumerate() {
        let along = v.dot(&col);
        if along.is_nan() || along <= WITNESS_POSITIVITY_TOL * v_norm * col.norm() {
            return Err(Error::WitnessOnBoundary { column: k });
        }
        let scale = v_norm / along;
        upsilon_tilde.set_column(k, &(rotated_f.column(k) * scale));
        gamma_tilde.set_column(k, &(rotated_m.column(k) * scale));
    }
    Ok(ModifiedGenerators { upsilon_tilde, gamma_tilde, rotation, witness: *v })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WcmSource {
    Computed,
    /// Re-anchored by the accumulated displacement from the computed anchor.
    Shifted { delta: Vec3 },
}

/// `W·[F; M] ≥ 0` for wrenches about `anchor`. Rows have unit length.
#[derive(Debug, Clone, PartialEq)]
pub struct WrenchConstraintMatrix {
    rows: WrenchRows,
    anchor: Vec3,
    witness: Vec3,
    source: WcmSource,
}

impl WrenchConstraintMatrix {
    /// Builds from raw rows, scaling each to unit length. Zero rows are
    /// dropped.
    pub fn from_rows(rows: &[[f64; 6]], anchor: Vec3, witness: Vec3) -> Self {
        let kept: Vec<RowVector6<f64>> = rows
            .iter()
            .map(|r| RowVector6::from_row_slice(r))
            .filter(|r| r.norm() > 0.0)
            .map(|r| r.normalize())
            .collect();
        Self { rows: WrenchRows::from_rows(&kept), anchor, witness, source: WcmSource::Computed }
    }

    pub fn rows(&self) -> &WrenchRows {
        &self.rows
    }

    pub fn row_count(&self) -> usize {
        self.rows.nrows()
    }

    pub fn anchor(&self) -> &Vec3 {
        &self.anchor
    }

    pub fn witness(&self) -> &Vec3 {
        &self.witness
    }

    pub fn source(&self) -> &WcmSource {
        &self.source
    }

    /// `min(W·w)` without checking the anchor.
    pub fn margin_of(&self, w: &Vector6<f64>) -> f64 {
        (&self.rows * w).min()
    }

    pub fn margin(&self, wrench: &Wrench) -> Result<f64> {
        if !same_anchor(&wrench.about, &self.anchor) {
            return Err(Error::AnchorMismatch);
        }
        Ok(self.margin_of(&wrench.as_vector()))
    }

    /// Same matrix with every row multiplied by a positive factor and
    /// re-normalized; verdicts are unchanged.
    pub fn canonicalized(&self) -> Self {
        let mut rows = self.rows.clone();
        for mut r in rows.row_iter_mut() {
            let n = r.norm();
            if n > 0.0 {
                r /= n;
            }
        }
        Self { rows, ..self.clone() }
    }

    /// Multiplies row `i` by `factors[i]` without re-normalizing.
    pub fn with_row_scaling(&self, factors: &[f64]) -> Self {
        let mut rows = self.rows.clone();
        for (mut r, f) in rows.row_iter_mut().zip(factors) {
            r *= *f;
        }
        Self { rows, ..self.clone() }
    }
}

impl WrenchClassifier for WrenchConstraintMatrix {
    fn anchor(&self) -> &Vec3 {
        &self.anchor
    }

    fn margin_of(&self, w: &Vector6<f64>) -> f64 {
        WrenchConstraintMatrix::margin_of(self, w)
    }
}

/// WCM of `config` about `com` using witness `v`.
pub fn build_wcm(config: &ContactConfiguration, com: &Vec3, v: &Vec3) -> Result<WrenchConstraintMatrix> {
    wcm_from_generating(&build_generating_matrices(config, com), v)
}

/// WCM from already stacked generators (moments about `gen.anchor()`).
pub fn wcm_from_generating(gen: &GeneratingMatrices, v: &Vec3) -> Result<WrenchConstraintMatrix> {
    let modified = modified_generators(gen, v)?;
    let hull = convex_hull(&modified.projected_points())?;

    let lift = |a: &[f64], w: f64| [a[0], a[1], -w, a[2], a[3], a[4]];
    let mut rotated: Vec<[f64; 6]> = Vec::with_capacity(hull.facets.len() + 2 * hull.equalities.len() + 1);
    rotated.extend(hull.facets.iter().map(|f| lift(&f.normal, f.offset)));
    for eq in &hull.equalities {
        let row = lift(&eq.normal, eq.offset);
        rotated.push(row);
        rotated.push(row.map(|c| -c));
    }
    rotated.push([0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);

    // row_rot · [R F; R M] = [Rᵀ row_F; Rᵀ row_M] · [F; M]
    let rt = modified.rotation.transpose();
    let world: Vec<[f64; 6]> = rotated
        .iter()
        .map(|r| {
            let f = rt * Vec3::new(r[0], r[1], r[2]);
            let m = rt * Vec3::new(r[3], r[4], r[5]);
            [f.x, f.y, f.z, m.x, m.y, m.z]
        })
        .collect();
    Ok(WrenchConstraintMatrix::from_rows(&world, *gen.anchor(), *v))
}

/// Re-anchors `w` from `A` to `B = A + delta`: `W_B = W_A·[[I, 0], [skew(Δ), I]]`.
pub fn shift_wcm(w: &WrenchConstraintMatrix, delta: &Vec3) -> WrenchConstraintMatrix {
    let mut rows = w.rows.clone();
    for mut r in rows.row_iter_mut().filter(|_| *delta != Vec3::zeros()) {
        let force = Vec3::new(r[0], r[1], r[2]);
        let moment = Vec3::new(r[3], r[4], r[5]);
        // row_M · skew(Δ) as a row is (row_M × Δ)ᵀ.
        let f = force + moment.cross(delta);
        r[0] = f.x;
        r[1] = f.y;
        r[2] = f.z;
        let n = r.norm();
        if n > 0.0 {
            r /= n;
        }
    }
    let total = match w.source {
        WcmSource::Computed => *delta,
        WcmSource::Shifted { delta: previous } => previous + delta,
    };
    WrenchConstraintMatrix {
        rows,
        anchor: w.anchor + delta,
        witness: w.witness,
        source: WcmSource::Shifted { delta: total },
    }
}

/// `min(W·[F; M]) ≥ −MEMBERSHIP_TOL·(1 + ‖[F; M]‖)`.
pub fn wrench_feasible(w: &WrenchConstraintMatrix, wrench: &Wrench) -> Result<bool> {
    let margin = w.margin(wrench)?;
    Ok(margin >= -MEMBERSHIP_TOL * (1.0 + wrench.as_vector().norm()))
}

/// Whether some moment `M` makes `[force; M]` satisfy the WCM.
pub fn force_feasible(w: &WrenchConstraintMatrix, force: &Vec3) -> Result<bool> {
    let slack = MEMBERSHIP_TOL * (1.0 + force.norm());
    let mut program = LinearProgram::minimize(vec![0.0; 3]);
    for r in w.rows.row_iter() {
        let fixed = r[0] * force.x + r[1] * force.y + r[2] * force.z;
        program.add_constraint(vec![r[3], r[4], r[5]], Sense::Ge, -fixed - slack);
    }
    Ok(matches!(lp::solve(&program)?, LpSolution::Optimal { .. }))
}

/// Can the contacts realize center-of-mass acceleration `q.com_accel` (and
/// `q.angular_momentum_rate`, when given) with the CoM at `com`?
///
/// * Unconstrained, free angular momentum rate: always.
/// * Unconstrained, angular momentum rate given: the full wrench is checked
///   with the LP membership oracle, since an arbitrary force does not imply
///   an arbitrary simultaneous moment.
/// * Constrained: the WCM (anchored at `com`) decides; with a free angular
///   momentum rate only the force has to admit some moment.
pub fn acceleration_feasible(
    cls: &Classification,
    wcm: Option<&WrenchConstraintMatrix>,
    body: &RigidBodyParams,
    q: &MotionQuery,
    com: &Vec3,
) -> Result<bool> {
    let required = required_wrench(body, q, com);
    match cls.verdict() {
        Verdict::Unconstrained => match q.angular_momentum_rate {
            None => Ok(true),
            Some(_) => {
                let gen = cls.generating();
                let verdict = wrench_membership_lp(gen, &required.reanchored(gen.anchor()))?;
                Ok(verdict.feasible)
            }
        },
        Verdict::Constrained { .. } => {
            let wcm = wcm.ok_or(Error::MissingWcm)?;
            if !same_anchor(com, &wcm.anchor) {
                return Err(Error::AnchorMismatch);
            }
            match q.angular_momentum_rate {
                Some(_) => wrench_feasible(wcm, &required),
                None => force_feasible(wcm, &required.force),
            }
        }
    }
}
