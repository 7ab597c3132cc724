//! JSON scene and scenario files.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use wcm_core::{Contact, ContactConfiguration, FrictionConeSpec, Mat3, RigidBodyParams, Vec3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContactSpec {
    pub point: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normal: Option<[f64; 3]>,
    /// Row-major contact-to-world rotation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<[f64; 9]>,
    pub mu: f64,
    pub sides: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub mass: f64,
    pub gravity: [f64; 3],
    pub com: [f64; 3],
    pub contacts: Vec<ContactSpec>,
}

/// A validated scene.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub config: ContactConfiguration,
    pub body: RigidBodyParams,
    pub com: Vec3,
}

fn vec3(a: &[f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

fn finite(field: &str, values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        bail!("{field}: non-finite value")
    }
}

impl ContactSpec {
    fn to_contact(&self, field: &str) -> Result<Contact> {
        finite(&format!("{field}.point"), &self.point)?;
        let cone = FrictionConeSpec::new(self.mu, self.sides).map_err(|e| anyhow!("{field}: {e}"))?;
        let point = vec3(&self.point);
        match (&self.normal, &self.rotation) {
            (Some(n), None) => {
                finite(&format!("{field}.normal"), n)?;
                Contact::with_normal(point, vec3(n), cone).map_err(|e| anyhow!("{field}.normal: {e}"))
            }
            (None, Some(r)) => {
                finite(&format!("{field}.rotation"), r)?;
                Contact::new(point, Mat3::from_row_slice(r), cone).map_err(|e| anyhow!("{field}.rotation: {e}"))
            }
            (Some(_), Some(_)) => bail!("{field}: give either normal or rotation, not both"),
            (None, None) => bail!("{field}: one of normal or rotation is required"),
        }
    }

    fn from_contact(c: &Contact) -> Self {
        let r = c.rotation();
        let mut rotation = [0.0; 9];
        for i in 0..3 {
            for j in 0..3 {
                rotation[3 * i + j] = r[(i, j)];
            }
        }
        let p = c.point();
        Self { point: [p.x, p.y, p.z], normal: None, rotation: Some(rotation), mu: c.cone().mu(), sides: c.cone().sides() }
    }
}

impl SceneFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| anyhow!("invalid scene: {e}"))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read scene file {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_scene(&self) -> Result<Scene> {
        finite("mass", &[self.mass])?;
        finite("gravity", &self.gravity)?;
        finite("com", &self.com)?;
        let body = RigidBodyParams::new(self.mass, vec3(&self.gravity)).map_err(|e| anyhow!("mass: {e}"))?;
        if self.contacts.is_empty() {
            bail!("contacts: at least one contact is required");
        }
        let contacts = self
            .contacts
            .iter()
            .enumerate()
            .map(|(i, c)| c.to_contact(&format!("contacts[{i}]")))
            .collect::<Result<Vec<_>>>()?;
        let config = ContactConfiguration::new(contacts).map_err(|e| anyhow!("contacts: {e}"))?;
        Ok(Scene { config, body, com: vec3(&self.com) })
    }

    /// Exact description of `scene`; contacts are written with full rotations.
    pub fn from_scene(scene: &Scene) -> Self {
        let g = scene.body.gravity();
        Self {
            mass: scene.body.mass(),
            gravity: [g.x, g.y, g.z],
            com: [scene.com.x, scene.com.y, scene.com.z],
            contacts: scene.config.contacts().iter().map(ContactSpec::from_contact).collect(),
        }
    }
}

pub fn load_scene(path: &Path) -> Result<Scene> {
    SceneFile::load(path)?.to_scene()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySample {
    pub t: f64,
    pub com: [f64; 3],
    pub accel: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_dot: Option<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseFile {
    pub name: String,
    /// An inline scene or a path relative to the scenario file.
    pub scene: Value,
    pub com_trajectory: Vec<TrajectorySample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub phases: Vec<PhaseFile>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Phase {
    pub name: String,
    pub scene: Scene,
    pub samples: Vec<TrajectorySample>,
}

impl ScenarioFile {
    pub fn load(path: &Path) -> Result<Vec<Phase>> {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read scenario file {}", path.display()))?;
        let file: ScenarioFile =
            serde_json::from_str(&text).map_err(|e| anyhow!("invalid scenario {}: {e}", path.display()))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        file.resolve(&base)
    }

    pub fn resolve(&self, base: &Path) -> Result<Vec<Phase>> {
        if self.phases.is_empty() {
            bail!("phases: at least one phase is required");
        }
        self.phases.iter().enumerate().map(|(i, p)| p.resolve(base, &format!("phases[{i}]"))).collect()
    }
}

impl PhaseFile {
    fn resolve(&self, base: &Path, field: &str) -> Result<Phase> {
        let file = match &self.scene {
            Value::String(rel) => {
                let path: PathBuf = base.join(rel);
                SceneFile::load(&path).with_context(|| format!("{field}.scene"))?
            }
            inline => serde_json::from_value(inline.clone()).map_err(|e| anyhow!("{field}.scene: {e}"))?,
        };
        let scene = file.to_scene().with_context(|| format!("{field}.scene"))?;
        for (k, s) in self.com_trajectory.iter().enumerate() {
            let at = format!("{field}.com_trajectory[{k}]");
            finite(&format!("{at}.t"), &[s.t])?;
            finite(&format!("{at}.com"), &s.com)?;
            finite(&format!("{at}.accel"), &s.accel)?;
            if let Some(l) = &s.l_dot {
                finite(&format!("{at}.l_dot"), l)?;
            }
            if k > 0 && s.t <= self.com_trajectory[k - 1].t {
                bail!("{at}.t: times must be strictly increasing");
            }
        }
        Ok(Phase { name: self.name.clone(), scene, samples: self.com_trajectory.clone() })
    }
}

/// Parses `x,y,z`.
pub fn parse_vec3(s: &str) -> Result<Vec3, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected three comma-separated numbers, got `{s}`"));
    }
    let mut v = [0.0; 3];
    for (slot, p) in v.iter_mut().zip(&parts) {
        *slot = p.parse::<f64>().map_err(|e| format!("`{p}`: {e}"))?;
        if !slot.is_finite() {
            return Err(format!("`{p}` is not finite"));
        }
    }
    Ok(Vec3::new(v[0], v[1], v[2]))
}
