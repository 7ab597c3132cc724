#![allow(dead_code)]

use std::path::PathBuf;
use std::process::{Command, Output};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use wcm_cli::scene::{load_scene, Scene, ScenarioFile};
use wcm_core::{rotation_aligning_z, Contact, ContactConfiguration, Mat3, Vec3};

pub fn scene_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenes").join(name)
}

pub fn scene(name: &str) -> Scene {
    load_scene(&scene_path(name)).unwrap()
}

pub fn traverse_scenes() -> Vec<(String, Scene)> {
    ScenarioFile::load(&scene_path("traverse.json")).unwrap().into_iter().map(|p| (p.name, p.scene)).collect()
}

pub fn wcm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wcm")).args(args).output().expect("binary runs")
}

pub fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

pub fn unit(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

/// A random proper rotation.
pub fn random_rotation(rng: &mut ChaCha8Rng) -> Mat3 {
    let axis = rotation_aligning_z(&unit(rng)).unwrap();
    let (s, c) = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI).sin_cos();
    let spin = Mat3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0);
    axis * spin
}

pub fn moved(scene: &Scene, q: &Mat3, t: &Vec3) -> Scene {
    let contacts: Vec<Contact> = scene.config.contacts().iter().map(|c| c.transformed(q, t).unwrap()).collect();
    Scene { config: ContactConfiguration::new(contacts).unwrap(), body: scene.body, com: q * scene.com + t }
}

pub fn shuffled(scene: &Scene, rng: &mut ChaCha8Rng) -> Scene {
    let mut contacts = scene.config.contacts().to_vec();
    for i in (1..contacts.len()).rev() {
        contacts.swap(i, rng.random_range(0..=i));
    }
    Scene { config: ContactConfiguration::new(contacts).unwrap(), ..scene.clone() }
}
