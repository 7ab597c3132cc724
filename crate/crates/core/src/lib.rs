//! Wrench feasibility for spatially distributed unilateral frictional contacts.
//!
//! Given a set of point contacts (position, surface orientation, friction
//! pyramid), this crate answers two questions:
//!
//! 1. Can the contacts produce *any* total force? This happens exactly when
//!    the dual cones of all friction cones intersect only at the origin, and
//!    is decided by a small linear program ([`feasibility::classify`]).
//! 2. If not, which linear inequalities `W·[F; M] ≥ 0` bound the feasible
//!    total wrench about the center of mass? The rows of `W` come from the
//!    facets of a 5D convex hull ([`wcm::build_wcm`]) and can be re-anchored
//!    to a moved center of mass with a single 6×6 multiply
//!    ([`wcm::shift_wcm`]).
//!
//! An LP-based membership test that works straight from the stacked contact
//! generators lives in [`oracle`] and is used to validate everything else.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod contact;
mod error;
pub mod feasibility;
pub mod hull;
pub mod lp;
pub mod oracle;
pub mod wcm;

pub use contact::{
    build_generating_matrices, cone_generators, required_wrench, rotation_aligning_z,
    rotation_from_normal, skew, Contact, ContactConfiguration, FrictionConeSpec,
    GeneratingMatrices, Mat3, MotionQuery, RigidBodyParams, Vec3, Wrench,
};
pub use error::{Error, HullError, LpError, Result};
pub use feasibility::{
    classify, classify_with, dual_intersection_lp, Classification, ClassifyOptions,
    DualIntersectionResult, Verdict,
};
pub use hull::{affine_dimension, convex_hull, HullResult, PointCloud};
pub use oracle::{
    compare_classifiers, compare_wcm_oracle, sample_feasible_wrench, wrench_membership_lp, AgreementReport,
    MembershipVerdict, StraddleSample, WrenchClassifier, WrenchSampler,
};
pub use wcm::{
    acceleration_feasible, build_wcm, force_feasible, modified_generators, shift_wcm,
    wcm_from_generating, wrench_feasible, ModifiedGenerators, WcmSource, WrenchConstraintMatrix,
};
