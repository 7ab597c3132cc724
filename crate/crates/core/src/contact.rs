//! Point contacts, span-form friction pyramids and the stacked generating
//! matrices `Υ` (forces) and `Γ` (moments about the center of mass).

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{Matrix3, Matrix3xX, Vector3, Vector6};

use crate::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Tolerance on `‖RᵀR − I‖∞` and `|det R − 1|` for contact frames.
pub const ROTATION_TOL: f64 = 1e-10;

/// Vectors shorter than this do not define a direction.
pub const ZERO_VECTOR_TOL: f64 = 1e-12;

/// Relative tolerance when comparing the reference points of wrenches.
pub const ANCHOR_TOL: f64 = 1e-12;

pub(crate) fn same_anchor(a: &Vec3, b: &Vec3) -> bool {
    (a - b).amax() <= ANCHOR_TOL * (1.0 + a.amax().max(b.amax()))
}

/// A normal this close to ±x completes its frame from world y instead.
const TANGENT_FALLBACK_TOL: f64 = 1e-6;

fn is_finite3(v: &Vec3) -> bool {
    v.iter().all(|c| c.is_finite())
}

/// Coulomb friction approximated by an `m`-sided pyramid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrictionConeSpec {
    mu: f64,
    sides: usize,
}

impl FrictionConeSpec {
    /// `mu = 0` is accepted and yields the frictionless normal ray.
    pub fn new(mu: f64, sides: usize) -> Result<Self> {
        if !mu.is_finite() || mu < 0.0 {
            return Err(Error::InvalidInput(format!(
                "friction coefficient must be finite and non-negative, got {mu}"
            )));
        }
        if sides < 3 {
            return Err(Error::InvalidInput(format!(
                "friction pyramid needs at least 3 sides, got {sides}"
            )));
        }
        Ok(Self { mu, sides })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sides(&self) -> usize {
        self.sides
    }
}

/// Generating matrix `U` of a friction pyramid in its local contact frame.
///
/// Column `i` (1-based) is `[μ cos θ, μ sin θ, 1]` with `θ = 2π(i − ½)/m`.
/// The third component is exactly one.
pub fn cone_generators(cone: &FrictionConeSpec) -> Matrix3xX<f64> {
    let m = cone.sides;
    Matrix3xX::from_fn(m, |row, col| {
        let theta = 2.0 * PI * (col as f64 + 0.5) / m as f64;
        match row {
            0 => cone.mu * libm::cos(theta),
            1 => cone.mu * libm::sin(theta),
            _ => 1.0,
        }
    })
}

/// Cross-product matrix: `skew(r) * x == r × x`.
pub fn skew(r: &Vec3) -> Mat3 {
    Mat3::new(0.0, -r.z, r.y, r.z, 0.0, -r.x, -r.y, r.x, 0.0)
}

fn rotation_to_z_from_upper(u: &Vec3) -> Mat3 {
    // Rodrigues for unit u with u.z bounded away from -1.
    let k = u.cross(&Vec3::z());
    let c = u.z;
    let kx = skew(&k);
    Mat3::identity() + kx + kx * kx * (1.0 / (1.0 + c))
}

/// Rotation `R` with `R · v/‖v‖ = e_z`.
///
/// Uses Rodrigues' formula. For directions in the lower hemisphere the
/// vector is first flipped by a 180° rotation about x, so `v = −z` maps to
/// exactly `diag(1, −1, −1)`.
pub fn rotation_aligning_z(v: &Vec3) -> Result<Mat3> {
    let norm = v.norm();
    if !norm.is_finite() || norm <= ZERO_VECTOR_TOL {
        return Err(Error::ZeroVector);
    }
    let u = v / norm;
    if u.z >= -0.5 {
        Ok(rotation_to_z_from_upper(&u))
    } else {
        let flip = Mat3::from_diagonal(&Vec3::new(1.0, -1.0, -1.0));
        Ok(rotation_to_z_from_upper(&(flip * u)) * flip)
    }
}

/// Contact frame whose z-axis is `normal`, with the x-axis taken from world x
/// projected onto the tangent plane (world y when the normal is within 1e-6
/// of ±x).
pub fn rotation_from_normal(normal: &Vec3) -> Result<Mat3> {
    let norm = normal.norm();
    if !norm.is_finite() || norm <= ZERO_VECTOR_TOL {
        return Err(Error::ZeroVector);
    }
    let n = normal / norm;
    let near_x = (n - Vec3::x()).norm() < TANGENT_FALLBACK_TOL
        || (n + Vec3::x()).norm() < TANGENT_FALLBACK_TOL;
    let reference = if near_x { Vec3::y() } else { Vec3::x() };
    let t1 = (reference - n * reference.dot(&n)).normalize();
    let t2 = n.cross(&t1);
    Ok(Mat3::from_columns(&[t1, t2, n]))
}

fn check_rotation(r: &Mat3) -> Result<()> {
    if !r.iter().all(|c| c.is_finite()) {
        return Err(Error::InvalidInput("contact rotation has non-finite entries".into()));
    }
    let defect = (r.transpose() * r - Mat3::identity()).amax();
    if defect > ROTATION_TOL {
        return Err(Error::InvalidInput(format!(
            "contact rotation is not orthonormal (‖RᵀR − I‖∞ = {defect:e})"
        )));
    }
    if (r.determinant() - 1.0).abs() > ROTATION_TOL {
        return Err(Error::InvalidInput("contact rotation must have determinant +1".into()));
    }
    Ok(())
}

/// One unilateral point contact. `rotation` maps the local contact frame to
/// the world frame; its third column is the inward surface normal.
#[derive(Debug, Clone, PartialEq)]
pub struct Contact {
    point: Vec3,
    rotation: Mat3,
    cone: FrictionConeSpec,
}

impl Contact {
    pub fn new(point: Vec3, rotation: Mat3, cone: FrictionConeSpec) -> Result<Self> {
        if !is_finite3(&point) {
            return Err(Error::InvalidInput("contact point must be finite".into()));
        }
        check_rotation(&rotation)?;
        Ok(Self { point, rotation, cone })
    }

    /// Builds the frame with [`rotation_from_normal`].
    pub fn with_normal(point: Vec3, normal: Vec3, cone: FrictionConeSpec) -> Result<Self> {
        Self::new(point, rotation_from_normal(&normal)?, cone)
    }

    pub fn point(&self) -> &Vec3 {
        &self.point
    }

    pub fn rotation(&self) -> &Mat3 {
        &self.rotation
    }

    pub fn cone(&self) -> &FrictionConeSpec {
        &self.cone
    }

    pub fn normal(&self) -> Vec3 {
        self.rotation.column(2).into_owned()
    }

    /// The same contact after a rigid motion `x ↦ q·x + t` of the world.
    pub fn transformed(&self, q: &Mat3, t: &Vec3) -> Result<Self> {
        Self::new(q * self.point + t, q * self.rotation, self.cone)
    }
}

/// An ordered, non-empty set of contacts.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactConfiguration {
    contacts: Vec<Contact>,
}

impl ContactConfiguration {
    pub fn new(contacts: Vec<Contact>) -> Result<Self> {
        if contacts.is_empty() {
            return Err(Error::InvalidInput("a contact configuration needs at least one contact".into()));
        }
        Ok(Self { contacts })
    }

    pub fn contacts(&self) -> &[Contact] {
        &self.contacts
    }

    pub fn len(&self) -> usize {
        self.contacts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contacts.is_empty()
    }

    /// Total number of generator columns `Σ mᵢ`.
    pub fn generator_count(&self) -> usize {
        self.contacts.iter().map(|c| c.cone.sides).sum()
    }

    /// Index pairs of contacts sharing both point and rotation. They are
    /// redundant but harmless.
    pub fn duplicate_pairs(&self) -> Vec<(usize, usize)> {
        let mut pairs = Vec::new();
        for (i, a) in self.contacts.iter().enumerate() {
            for (j, b) in self.contacts.iter().enumerate().skip(i + 1) {
                if a.point == b.point && a.rotation == b.rotation {
                    pairs.push((i, j));
                }
            }
        }
        pairs
    }

    /// True when every contact normal equals the first one to within `tol`.
    pub fn normals_parallel(&self, tol: f64) -> bool {
        let first = self.contacts[0].normal();
        self.contacts.iter().all(|c| (c.normal() - first).amax() <= tol)
    }
}

/// `Υ` and `Γ` stacked column-wise over all contacts, moments taken about
/// `anchor`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratingMatrices {
    upsilon: Matrix3xX<f64>,
    gamma: Matrix3xX<f64>,
    anchor: Vec3,
    column_origin: Vec<(usize, usize)>,
}

impl GeneratingMatrices {
    pub fn upsilon(&self) -> &Matrix3xX<f64> {
        &self.upsilon
    }

    pub fn gamma(&self) -> &Matrix3xX<f64> {
        &self.gamma
    }

    pub fn anchor(&self) -> &Vec3 {
        &self.anchor
    }

    /// `(contact index, pyramid edge index)` for every column.
    pub fn column_origin(&self) -> &[(usize, usize)] {
        &self.column_origin
    }

    pub fn columns(&self) -> usize {
        self.upsilon.ncols()
    }

    /// Column `k` of the stacked 6×N matrix `[Υ; Γ]`.
    pub fn wrench_column(&self, k: usize) -> Vector6<f64> {
        let f = self.upsilon.column(k);
        let m = self.gamma.column(k);
        Vector6::new(f[0], f[1], f[2], m[0], m[1], m[2])
    }

    /// The wrench `[Υ; Γ]·A` about the anchor.
    ///
    /// # Panics
    /// If `coefficients.len()` differs from the column count.
    pub fn combine(&self, coefficients: &[f64]) -> Wrench {
        assert_eq!(coefficients.len(), self.columns(), "coefficient count");
        let a = nalgebra::DVectorView::from_slice(coefficients, coefficients.len());
        Wrench::new(&self.upsilon * a, &self.gamma * a, self.anchor)
    }
}

/// Stacks `Rᵢ·Uᵢ` and `skew(cᵢ − com)·Rᵢ·Uᵢ` for every contact.
pub fn build_generating_matrices(config: &ContactConfiguration, com: &Vec3) -> GeneratingMatrices {
    let total = config.generator_count();
    let mut upsilon = Matrix3xX::zeros(total);
    let mut gamma = Matrix3xX::zeros(total);
    let mut column_origin = Vec::with_capacity(total);
    let mut k = 0;
    for (i, contact) in config.contacts.iter().enumerate() {
        let arm = skew(&(contact.point - com));
        let forces = contact.rotation * cone_generators(&contact.cone);
        for (j, f) in forces.column_iter().enumerate() {
            upsilon.set_column(k, &f);
            gamma.set_column(k, &(arm * f));
            column_origin.push((i, j));
            k += 1;
        }
    }
    GeneratingMatrices { upsilon, gamma, anchor: *com, column_origin }
}

/// Mass and gravity of the whole robot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidBodyParams {
    mass: f64,
    gravity: Vec3,
}

impl RigidBodyParams {
    pub fn new(mass: f64, gravity: Vec3) -> Result<Self> {
        if !mass.is_finite() || mass <= 0.0 {
            return Err(Error::InvalidInput("mass must be positive".into()));
        }
        if !is_finite3(&gravity) {
            return Err(Error::InvalidInput("gravity must be finite".into()));
        }
        Ok(Self { mass, gravity })
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn gravity(&self) -> &Vec3 {
        &self.gravity
    }
}

/// Desired center-of-mass acceleration and rate of change of angular
/// momentum. `None` means the angular momentum rate is left free: only the
/// total force is constrained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionQuery {
    pub com_accel: Vec3,
    pub angular_momentum_rate: Option<Vec3>,
}

impl MotionQuery {
    pub fn new(com_accel: Vec3, angular_momentum_rate: Option<Vec3>) -> Self {
        Self { com_accel, angular_momentum_rate }
    }
}

/// Total force and moment about a reference point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wrench {
    pub force: Vec3,
    pub moment: Vec3,
    pub about: Vec3,
}

impl Wrench {
    pub fn new(force: Vec3, moment: Vec3, about: Vec3) -> Self {
        Self { force, moment, about }
    }

    pub fn zero(about: Vec3) -> Self {
        Self::new(Vec3::zeros(), Vec3::zeros(), about)
    }

    /// A force applied at `point`, reduced to `about`.
    pub fn force_at(force: Vec3, point: &Vec3, about: Vec3) -> Self {
        Self::new(force, (point - about).cross(&force), about)
    }

    pub fn from_vector(w: &Vector6<f64>, about: Vec3) -> Self {
        Self::new(Vec3::new(w[0], w[1], w[2]), Vec3::new(w[3], w[4], w[5]), about)
    }

    /// `[F; M]`.
    pub fn as_vector(&self) -> Vector6<f64> {
        Vector6::new(
            self.force.x,
            self.force.y,
            self.force.z,
            self.moment.x,
            self.moment.y,
            self.moment.z,
        )
    }

    /// The same physical wrench expressed about `point`.
    pub fn reanchored(&self, point: &Vec3) -> Self {
        Self::new(self.force, self.moment + (self.about - point).cross(&self.force), *point)
    }
}

/// Wrench the contacts must supply: `F = m(a − g)`, `M = L̇`, about `com`.
/// A free angular momentum rate contributes a zero moment here.
pub fn required_wrench(body: &RigidBodyParams, q: &MotionQuery, com: &Vec3) -> Wrench {
    Wrench::new(
        (q.com_accel - body.gravity) * body.mass,
        q.angular_momentum_rate.unwrap_or_else(Vec3::zeros),
        *com,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cone(mu: f64, sides: usize) -> FrictionConeSpec {
        FrictionConeSpec::new(mu, sides).unwrap()
    }

    #[test]
    fn pyramid_first_column() {
        let u = cone_generators(&cone(0.8, 4));
        let h = 0.8 * core::f64::consts::FRAC_1_SQRT_2;
        assert_relative_eq!(u[(0, 0)], h, epsilon = 1e-12);
        assert_relative_eq!(u[(1, 0)], h, epsilon = 1e-12);
        assert_eq!(u[(2, 0)], 1.0);
        assert_relative_eq!(h, 0.56569, epsilon = 1e-5);
    }

    #[test]
    fn pyramid_sign_pattern() {
        let u = cone_generators(&cone(0.8, 4));
        let mut signs: Vec<(i32, i32)> = u
            .column_iter()
            .map(|c| {
                assert_relative_eq!(c[0].abs(), 0.565685, epsilon = 1e-6);
                assert_relative_eq!(c[1].abs(), 0.565685, epsilon = 1e-6);
                (c[0].signum() as i32, c[1].signum() as i32)
            })
            .collect();
        signs.sort();
        assert_eq!(signs, [(-1, -1), (-1, 1), (1, -1), (1, 1)]);
    }

    #[test]
    fn frictionless_pyramid_is_normal_ray() {
        let u = cone_generators(&cone(0.0, 4));
        for c in u.column_iter() {
            assert_eq!(c.into_owned(), Vec3::z());
        }
    }

    #[test]
    fn pyramid_z_row_is_exactly_one() {
        for m in 3..12 {
            let u = cone_generators(&cone(1.3, m));
            assert!(u.row(2).iter().all(|&z| z == 1.0));
        }
    }

    #[test]
    fn pyramid_rotational_symmetry() {
        let m = 6;
        let u = cone_generators(&cone(0.7, m));
        let step = 2.0 * PI / m as f64;
        let rz = Mat3::new(
            libm::cos(step),
            -libm::sin(step),
            0.0,
            libm::sin(step),
            libm::cos(step),
            0.0,
            0.0,
            0.0,
            1.0,
        );
        let rotated = rz * &u;
        for (k, col) in rotated.column_iter().enumerate() {
            let expected = u.column((k + 1) % m);
            assert!((col - expected).amax() < 1e-12);
        }
    }

    #[test]
    fn cone_rejects_bad_parameters() {
        assert!(FrictionConeSpec::new(-0.1, 4).is_err());
        assert!(FrictionConeSpec::new(f64::NAN, 4).is_err());
        assert!(FrictionConeSpec::new(0.5, 2).is_err());
    }

    #[test]
    fn skew_basics() {
        assert_eq!(skew(&Vec3::zeros()), Mat3::zeros());
        assert_eq!(skew(&Vec3::x()) * Vec3::y(), Vec3::z());
        let s = skew(&Vec3::new(0.3, -1.2, 2.5));
        assert_eq!(s, -s.transpose());
    }

    #[test]
    fn rotation_aligning_z_cases() {
        assert_eq!(rotation_aligning_z(&Vec3::new(0.0, 0.0, 5.0)).unwrap(), Mat3::identity());
        let flip = rotation_aligning_z(&Vec3::new(0.0, 0.0, -1.0)).unwrap();
        assert_eq!(flip, Mat3::from_diagonal(&Vec3::new(1.0, -1.0, -1.0)));
        let v = Vec3::new(1.0, 1.0, 1.0);
        let r = rotation_aligning_z(&v).unwrap();
        assert!((r * v.normalize() - Vec3::z()).amax() < 1e-12);
        assert!((r.transpose() * r - Mat3::identity()).amax() < 1e-12);
        assert_relative_eq!(r.determinant(), 1.0, epsilon = 1e-12);
        assert_eq!(rotation_aligning_z(&Vec3::new(1e-13, 0.0, 0.0)), Err(Error::ZeroVector));
    }

    #[test]
    fn rotation_aligning_z_near_antipode() {
        for v in [Vec3::new(1e-9, -2e-9, -1.0), Vec3::new(0.3, 0.1, -0.6), Vec3::new(0.0, 1.0, -0.5)] {
            let r = rotation_aligning_z(&v).unwrap();
            assert!((r * v.normalize() - Vec3::z()).amax() < 1e-12, "{v:?}");
            assert!((r.transpose() * r - Mat3::identity()).amax() < 1e-12);
        }
    }

    #[test]
    fn normal_frames() {
        assert_eq!(rotation_from_normal(&Vec3::z()).unwrap(), Mat3::identity());
        for n in [Vec3::x(), -Vec3::x(), Vec3::new(-1.0, 0.0, 1.0), Vec3::new(0.2, -0.4, -0.9)] {
            let r = rotation_from_normal(&n).unwrap();
            assert!((r.column(2) - n.normalize()).amax() < 1e-15);
            check_rotation(&r).unwrap();
        }
        // Falls back to world y near ±x.
        let r = rotation_from_normal(&Vec3::x()).unwrap();
        assert!((r.column(0) - Vec3::y()).amax() < 1e-15);
    }

    #[test]
    fn contact_rejects_non_rotation() {
        let c = cone(0.8, 4);
        let scaled = Mat3::identity() * 1.01;
        assert!(Contact::new(Vec3::zeros(), scaled, c).is_err());
        let reflect = Mat3::from_diagonal(&Vec3::new(1.0, 1.0, -1.0));
        assert!(Contact::new(Vec3::zeros(), reflect, c).is_err());
    }

    #[test]
    fn generating_matrix_shapes() {
        let c = cone(0.8, 4);
        let contacts: Vec<Contact> = (0..4)
            .map(|i| Contact::with_normal(Vec3::new(i as f64, 0.0, 0.0), Vec3::z(), c).unwrap())
            .collect();
        let config = ContactConfiguration::new(contacts).unwrap();
        let gen = build_generating_matrices(&config, &Vec3::zeros());
        assert_eq!(gen.upsilon().shape(), (3, 16));
        assert_eq!(gen.gamma().shape(), (3, 16));
        assert_eq!(gen.column_origin()[5], (1, 1));

        let twelve: Vec<Contact> = (0..12)
            .map(|i| Contact::with_normal(Vec3::new(0.1 * i as f64, 0.0, 0.0), Vec3::z(), c).unwrap())
            .collect();
        let gen = build_generating_matrices(&ContactConfiguration::new(twelve).unwrap(), &Vec3::zeros());
        assert_eq!(gen.upsilon().shape(), (3, 48));
    }

    #[test]
    fn heterogeneous_sides() {
        let a = Contact::with_normal(Vec3::zeros(), Vec3::z(), cone(0.5, 3)).unwrap();
        let b = Contact::with_normal(Vec3::x(), Vec3::z(), cone(0.5, 7)).unwrap();
        let config = ContactConfiguration::new(alloc::vec![a, b]).unwrap();
        let gen = build_generating_matrices(&config, &Vec3::zeros());
        assert_eq!(gen.columns(), 10);
        assert_eq!(gen.column_origin()[3], (1, 0));
    }

    #[test]
    fn contact_at_com_has_no_moment() {
        let c = Contact::new(Vec3::new(0.2, 0.3, 0.4), Mat3::identity(), cone(0.8, 4)).unwrap();
        let config = ContactConfiguration::new(alloc::vec![c]).unwrap();
        let gen = build_generating_matrices(&config, &Vec3::new(0.2, 0.3, 0.4));
        assert_eq!(gen.gamma(), &Matrix3xX::zeros(4));
        assert_eq!(gen.upsilon(), &cone_generators(&cone(0.8, 4)));
    }

    #[test]
    fn duplicates_are_flagged() {
        let c = Contact::with_normal(Vec3::zeros(), Vec3::z(), cone(0.8, 4)).unwrap();
        let config = ContactConfiguration::new(alloc::vec![c.clone(), c]).unwrap();
        assert_eq!(config.duplicate_pairs(), [(0, 1)]);
        assert!(ContactConfiguration::new(Vec::new()).is_err());
    }

    #[test]
    fn required_wrench_cases() {
        let g = Vec3::new(0.0, 0.0, -9.81);
        let body = RigidBodyParams::new(10.0, g).unwrap();
        let com = Vec3::new(0.0, 0.0, 1.0);
        let w = required_wrench(&body, &MotionQuery::new(g, None), &com);
        assert_eq!(w.force, Vec3::zeros());
        let w = required_wrench(&body, &MotionQuery::new(Vec3::zeros(), Some(Vec3::zeros())), &com);
        assert_relative_eq!(w.force, Vec3::new(0.0, 0.0, 98.1), epsilon = 1e-12);
        assert_eq!(w.moment, Vec3::zeros());
        assert_eq!(w.about, com);
        let w = required_wrench(&body, &MotionQuery::new(Vec3::x(), None), &com);
        assert_relative_eq!(w.force, Vec3::new(10.0, 0.0, 98.1), epsilon = 1e-12);
        assert!(RigidBodyParams::new(0.0, g).is_err());
    }

    #[test]
    fn reanchoring_round_trip() {
        let w = Wrench::new(Vec3::new(1.0, 2.0, 3.0), Vec3::new(-0.5, 0.1, 0.0), Vec3::zeros());
        let p = Vec3::new(0.3, -0.2, 0.7);
        let back = w.reanchored(&p).reanchored(&Vec3::zeros());
        assert!((back.as_vector() - w.as_vector()).amax() < 1e-14);
    }
}
