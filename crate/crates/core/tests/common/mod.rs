#![allow(dead_code)]

use wcm_core::{
    rotation_from_normal, Contact, ContactConfiguration, FrictionConeSpec, Mat3, Vec3,
};

pub struct Scene {
    pub name: &'static str,
    pub config: ContactConfiguration,
    pub com: Vec3,
}

pub fn cone(mu: f64) -> FrictionConeSpec {
    FrictionConeSpec::new(mu, 4).unwrap()
}

/// Rectangle corners centred at `center` in the tangent plane of `normal`.
pub fn patch(center: Vec3, normal: Vec3, half_a: f64, half_b: f64, mu: f64) -> Vec<Contact> {
    let r = rotation_from_normal(&normal).unwrap();
    let (t1, t2) = (r.column(0).into_owned(), r.column(1).into_owned());
    [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)]
        .iter()
        .map(|&(a, b)| {
            Contact::with_normal(center + t1 * (a * half_a) + t2 * (b * half_b), normal, cone(mu)).unwrap()
        })
        .collect()
}

/// The two end points of a foot edge.
pub fn edge(center: Vec3, normal: Vec3, half_len: f64, mu: f64) -> Vec<Contact> {
    let r = rotation_from_normal(&normal).unwrap();
    let t1 = r.column(0).into_owned();
    [1.0, -1.0]
        .iter()
        .map(|&s| Contact::with_normal(center + t1 * (s * half_len), normal, cone(mu)).unwrap())
        .collect()
}

pub fn foot(center: Vec3, normal: Vec3) -> Vec<Contact> {
    patch(center, normal, 0.1, 0.05, 0.8)
}

pub fn hand(center: Vec3, normal: Vec3) -> Vec<Contact> {
    patch(center, normal, 0.04, 0.04, 0.8)
}

fn join(parts: Vec<Vec<Contact>>) -> ContactConfiguration {
    ContactConfiguration::new(parts.into_iter().flatten().collect()).unwrap()
}

pub fn up() -> Vec3 {
    Vec3::z()
}

pub fn incline_normal() -> Vec3 {
    Vec3::new(-1.0, 0.0, 1.0).normalize()
}

pub fn single_contact() -> Scene {
    let c = Contact::with_normal(Vec3::new(0.05, -0.02, 0.0), up(), cone(0.8)).unwrap();
    Scene { name: "single contact", config: ContactConfiguration::new(vec![c]).unwrap(), com: Vec3::new(0.0, 0.0, 0.9) }
}

pub fn flat_foot() -> Scene {
    Scene { name: "flat foot", config: join(vec![foot(Vec3::zeros(), up())]), com: Vec3::new(0.02, 0.01, 0.9) }
}

pub fn incline_and_ground() -> Scene {
    Scene {
        name: "incline and ground",
        config: join(vec![
            foot(Vec3::new(-0.3, 0.1, 0.0), up()),
            foot(Vec3::new(0.1, -0.1, 0.2), incline_normal()),
        ]),
        com: Vec3::new(-0.1, 0.0, 1.0),
    }
}

/// Two feet on the ground and a hand on a vertical wall face.
pub fn two_plane_twelve() -> Scene {
    Scene {
        name: "12-contact two-plane",
        config: join(vec![
            foot(Vec3::new(-0.5, 0.12, 0.0), up()),
            foot(Vec3::new(-0.5, -0.12, 0.0), up()),
            hand(Vec3::new(0.0, -0.2, 0.9), -Vec3::x()),
        ]),
        com: Vec3::new(-0.4, 0.0, 0.9),
    }
}

/// Collinear contacts with the CoM on the same line.
pub fn degenerate_coplanar() -> Scene {
    let contacts = (0..4)
        .map(|i| Contact::with_normal(Vec3::new(0.1 * i as f64, 0.0, 0.0), up(), cone(0.5)).unwrap())
        .collect();
    Scene { name: "degenerate coplanar", config: ContactConfiguration::new(contacts).unwrap(), com: Vec3::new(0.15, 0.0, 0.0) }
}

/// Two flat feet pressing on facing vertical walls.
pub fn two_walls() -> Scene {
    Scene {
        name: "two walls",
        config: join(vec![
            foot(Vec3::new(-0.4, 0.0, 0.5), Vec3::x()),
            foot(Vec3::new(0.4, 0.0, 0.5), -Vec3::x()),
        ]),
        com: Vec3::new(0.0, 0.0, 0.8),
    }
}

pub fn constrained_scenes() -> Vec<Scene> {
    vec![single_contact(), flat_foot(), incline_and_ground(), two_plane_twelve(), degenerate_coplanar()]
}

pub fn rot(axis: Vec3, angle: f64) -> Mat3 {
    *nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle).matrix()
}

pub fn transform(scene: &Scene, q: &Mat3, t: &Vec3) -> Scene {
    let contacts = scene.config.contacts().iter().map(|c| c.transformed(q, t).unwrap()).collect();
    Scene { name: scene.name, config: ContactConfiguration::new(contacts).unwrap(), com: q * scene.com + t }
}
