//! JSON scene and result files.

use std::collections::HashMap;
use std::path::Path;

use nalgebra::{Matrix3x4, Vector3};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::geometry::{Camera, ImageLine, LineObs};
use crate::synth::SyntheticScene;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraEntry {
    pub id: String,
    /// Row-major 3x4 projection matrix.
    #[serde(rename = "P")]
    pub p: [f64; 12],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineEntry {
    pub camera_id: String,
    pub l: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneFile {
    pub cameras: Vec<CameraEntry>,
    pub lines: Vec<LineEntry>,
    #[serde(default)]
    pub metadata: Map<String, Value>,
}

/// Cameras and lines of a validated scene file.
#[derive(Debug, Clone)]
pub struct Scene {
    pub cameras: Vec<Camera>,
    pub lines: Vec<ImageLine>,
    /// Group label per line.
    pub groups: Vec<Option<String>>,
    /// Index into `cameras` per line.
    pub camera_of: Vec<usize>,
    pub focal_length: Option<f64>,
}

impl Scene {
    pub fn observations(&self) -> Vec<LineObs<'_>> {
        self.lines
            .iter()
            .zip(&self.camera_of)
            .map(|(l, &c)| LineObs::new(l, &self.cameras[c]))
            .collect()
    }

    /// Line indices per group label, labels in first-appearance order.
    pub fn groups(&self) -> Vec<(String, Vec<usize>)> {
        let mut out: Vec<(String, Vec<usize>)> = Vec::new();
        for (i, g) in self.groups.iter().enumerate() {
            let Some(g) = g else { continue };
            match out.iter_mut().find(|(name, _)| name == g) {
                Some((_, idx)) => idx.push(i),
                None => out.push((g.clone(), vec![i])),
            }
        }
        out
    }
}

fn read(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|source| IoError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), IoError> {
    std::fs::write(path, text).map_err(|source| IoError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn to_pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("plain data serializes");
    s.push('\n');
    s
}

impl SceneFile {
    pub fn from_json(text: &str) -> Result<Self, IoError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        to_pretty(self)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, IoError> {
        Self::from_json(&read(path.as_ref())?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), IoError> {
        write(path.as_ref(), &self.to_json())
    }

    /// `metadata.focal_length`, when it is a positive number.
    pub fn focal_length(&self) -> Option<f64> {
        self.metadata
            .get("focal_length")
            .and_then(Value::as_f64)
            .filter(|f| *f > 0.0)
    }

    /// Checks the invariants and builds the geometric objects. The first
    /// violation is reported, naming the offending camera or line.
    pub fn to_scene(&self) -> Result<Scene, IoError> {
        if self.cameras.is_empty() {
            return Err(IoError::Invalid("scene has no cameras".into()));
        }
        let mut index = HashMap::new();
        let mut cameras = Vec::with_capacity(self.cameras.len());
        for (k, c) in self.cameras.iter().enumerate() {
            if index.insert(c.id.as_str(), k).is_some() {
                return Err(IoError::Invalid(format!("camera {k}: duplicate id '{}'", c.id)));
            }
            let p = Matrix3x4::from_row_slice(&c.p);
            let cam = Camera::new(c.id.clone(), p).map_err(|e| IoError::Invalid(format!("camera {k} ('{}'): {e}", c.id)))?;
            cameras.push(cam);
        }
        let mut lines = Vec::with_capacity(self.lines.len());
        let mut camera_of = Vec::with_capacity(self.lines.len());
        for (i, l) in self.lines.iter().enumerate() {
            let &k = index
                .get(l.camera_id.as_str())
                .ok_or_else(|| IoError::Invalid(format!("line {i}: unknown camera '{}'", l.camera_id)))?;
            let mut line = ImageLine::new(Vector3::from(l.l), l.camera_id.clone())
                .map_err(|e| IoError::Invalid(format!("line {i}: {e}")))?;
            if let Some(g) = &l.group {
                line = line.with_label(g.clone());
            }
            lines.push(line);
            camera_of.push(k);
        }
        Ok(Scene {
            cameras,
            lines,
            groups: self.lines.iter().map(|l| l.group.clone()).collect(),
            camera_of,
            focal_length: self.focal_length(),
        })
    }

    /// Scene file of a synthetic scene's image lines, grouped by cylinder.
    pub fn from_synthetic(scene: &SyntheticScene) -> Self {
        let cameras = scene
            .cameras
            .iter()
            .map(|c| {
                let m = c.matrix();
                CameraEntry {
                    id: c.id().to_owned(),
                    p: std::array::from_fn(|k| m[(k / 4, k % 4)]),
                }
            })
            .collect();
        let lines = scene
            .lines
            .iter()
            .map(|l| LineEntry {
                camera_id: l.image.camera_id.clone(),
                l: (*l.image.coeffs()).into(),
                group: l.image.label.clone(),
            })
            .collect();
        Self {
            cameras,
            lines,
            metadata: Map::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualStats {
    /// Geometric tangency defects in scene units.
    pub max_defect: f64,
    pub mean_defect: f64,
    /// Defects scaled by the focal length, when the scene gives one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_defect_px: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_defect_px: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CylinderEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
    pub direction: [f64; 3],
    pub axis_point: [f64; 3],
    pub radius: f64,
    /// Indices into the scene's lines.
    pub inliers: Vec<usize>,
    pub residuals: ResidualStats,
    pub method: String,
    pub conic_class: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultFile {
    pub cylinders: Vec<CylinderEntry>,
    pub config: Value,
}

impl ResultFile {
    /// Parses a result; directions are renormalized.
    pub fn from_json(text: &str) -> Result<Self, IoError> {
        let mut r: Self = serde_json::from_str(text)?;
        for (k, c) in r.cylinders.iter_mut().enumerate() {
            let d = Vector3::from(c.direction);
            let n = d.norm();
            if !(n.is_finite() && n > 0.0) {
                return Err(IoError::Invalid(format!("cylinder {k}: zero direction")));
            }
            c.direction = (d / n).into();
        }
        Ok(r)
    }

    pub fn to_json(&self) -> String {
        to_pretty(self)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, IoError> {
        Self::from_json(&read(path.as_ref())?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), IoError> {
        write(path.as_ref(), &self.to_json())
    }
}
