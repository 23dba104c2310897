//! Synthetic scenes: vertical cylinders seen by cameras scattered in a
//! square around the origin.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{tangent_lines_from_point, Camera, Circle2D, Cylinder3D, ImageLine, Line2D};

const MAX_DRAWS: usize = 100_000;

/// Where Gaussian noise enters a silhouette line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseModel {
    /// Offset of the rectified line (its direction is kept).
    RectifiedOffset,
    /// Offset of the normalized image line, i.e. a shift of the silhouette
    /// in image coordinates at unit focal length. The rectified line then
    /// still passes through the camera center.
    ImageCoordinate,
}

/// Horizontal placement of the cameras.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CameraLayout {
    /// Uniform in the square `[-box, box]^2` minus `[-exclusion, exclusion]^2`.
    Square { half_width: f64, exclusion: f64 },
    /// Uniform on an arc of `span` radians centered at angle 0, at
    /// `distance` from the first cylinder axis.
    Arc { distance: f64, span: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    pub radius_range: [f64; 2],
    pub layout: CameraLayout,
    pub n_cameras: usize,
    pub sigma: f64,
    pub noise: NoiseModel,
    pub n_cylinders: usize,
    /// Axis positions are drawn from `[-spread, spread]^2`; the first
    /// cylinder sits at the origin when `spread` is zero.
    pub center_spread: f64,
    /// Minimum gap between cylinder surfaces, and between a camera and any
    /// surface.
    pub clearance: f64,
    pub seed: u64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            radius_range: [0.5, 2.0],
            layout: CameraLayout::Square { half_width: 20.0, exclusion: 3.0 },
            n_cameras: 5,
            sigma: 0.0,
            noise: NoiseModel::RectifiedOffset,
            n_cylinders: 1,
            center_spread: 0.0,
            clearance: 0.1,
            seed: 0,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.radius_range;
        if !(lo > 0.0 && hi >= lo) {
            return Err(Error::InvalidConfig(format!("radius range [{lo}, {hi}] is invalid")));
        }
        match self.layout {
            CameraLayout::Square { half_width, exclusion } => {
                if !(exclusion >= 0.0 && half_width > exclusion) {
                    return Err(Error::InvalidConfig("camera exclusion square must lie inside the box".into()));
                }
            }
            CameraLayout::Arc { distance, span } => {
                if !(distance > hi && span > 0.0) {
                    return Err(Error::InvalidConfig("camera arc must lie outside the cylinder".into()));
                }
            }
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidConfig(format!("sigma {} must be non-negative", self.sigma)));
        }
        if self.n_cylinders == 0 || self.n_cameras == 0 {
            return Err(Error::InvalidConfig("need at least one camera and one cylinder".into()));
        }
        if self.n_cylinders > 1 && !(self.center_spread > 0.0) {
            return Err(Error::InvalidConfig("several cylinders need a positive center spread".into()));
        }
        Ok(())
    }
}

/// One silhouette line with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneLine {
    pub camera: usize,
    pub cylinder: usize,
    /// Exact tangent in the rectified plane.
    pub exact: Line2D,
    /// Noisy tangent in the rectified plane.
    pub noisy: Line2D,
    /// Image line: exact under [`NoiseModel::RectifiedOffset`], noisy under
    /// [`NoiseModel::ImageCoordinate`].
    pub image: ImageLine,
}

/// Scene with vertical cylinders, so the rectified plane is `y = 0` with
/// coordinates `(x, z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScene {
    pub cameras: Vec<Camera>,
    pub cylinders: Vec<Cylinder3D>,
    pub circles: Vec<Circle2D>,
    pub lines: Vec<SceneLine>,
}

impl SyntheticScene {
    pub fn exact_lines(&self) -> Vec<Line2D> {
        self.lines.iter().map(|l| l.exact).collect()
    }

    pub fn noisy_lines(&self) -> Vec<Line2D> {
        self.lines.iter().map(|l| l.noisy).collect()
    }

    /// Noisy rectified lines of one cylinder.
    pub fn noisy_lines_of(&self, cylinder: usize) -> Vec<Line2D> {
        self.lines.iter().filter(|l| l.cylinder == cylinder).map(|l| l.noisy).collect()
    }
}

/// Perturbs the offset of a unit-normal line by `N(0, sigma)`.
pub fn add_line_noise(line: &Line2D, sigma: f64, rng: &mut impl Rng) -> Line2D {
    if sigma == 0.0 {
        return *line;
    }
    let noise = Normal::new(0.0, sigma).expect("sigma is finite and non-negative");
    let [a, b] = line.normal();
    Line2D::new(a, b, line.offset() + noise.sample(rng)).expect("unit normal is kept")
}

fn sample_circles(cfg: &SceneConfig, rng: &mut impl Rng) -> Result<Vec<Circle2D>> {
    let [lo, hi] = cfg.radius_range;
    let mut out: Vec<Circle2D> = Vec::with_capacity(cfg.n_cylinders);
    for _ in 0..MAX_DRAWS {
        if out.len() == cfg.n_cylinders {
            return Ok(out);
        }
        let r = if hi > lo { rng.random_range(lo..hi) } else { lo };
        let (x, z) = if cfg.center_spread > 0.0 {
            let s = cfg.center_spread;
            (rng.random_range(-s..s), rng.random_range(-s..s))
        } else {
            (0.0, 0.0)
        };
        let clear = out
            .iter()
            .all(|c| (c.tx() - x).hypot(c.ty() - z) > c.radius() + r + cfg.clearance);
        if clear {
            out.push(Circle2D::new(x, z, r)?);
        }
    }
    Err(Error::InvalidConfig("could not place non-overlapping cylinders".into()))
}

fn sample_camera_position(cfg: &SceneConfig, first: &Circle2D, rng: &mut impl Rng) -> [f64; 2] {
    match cfg.layout {
        CameraLayout::Square { half_width, exclusion } => loop {
            let x = rng.random_range(-half_width..half_width);
            let z = rng.random_range(-half_width..half_width);
            if x.abs() > exclusion || z.abs() > exclusion {
                return [x, z];
            }
        },
        CameraLayout::Arc { distance, span } => {
            let phi = rng.random_range(-0.5 * span..0.5 * span);
            [first.tx() + distance * phi.cos(), first.ty() + distance * phi.sin()]
        }
    }
}

/// Draws a scene. Cameras closer than `clearance` to any cylinder surface
/// are redrawn. Each camera looks horizontally at the first cylinder axis,
/// from a height in `[-1, 1]`, and sees both silhouettes of every cylinder.
pub fn generate_scene(cfg: &SceneConfig, rng: &mut impl Rng) -> Result<SyntheticScene> {
    cfg.validate()?;
    let circles = sample_circles(cfg, rng)?;
    let cylinders: Vec<Cylinder3D> = circles
        .iter()
        .map(|c| Cylinder3D::new(Vector3::y(), Vector3::new(c.tx(), 0.0, c.ty()), c.radius()))
        .collect::<Result<_>>()?;
    let first = circles[0];
    let image_noise = Normal::new(0.0, cfg.sigma).expect("sigma validated");

    let mut cameras = Vec::with_capacity(cfg.n_cameras);
    let mut lines = Vec::new();
    let mut draws = 0;
    while cameras.len() < cfg.n_cameras {
        draws += 1;
        if draws > MAX_DRAWS {
            return Err(Error::InvalidConfig("could not place cameras outside the cylinders".into()));
        }
        let [x, z] = sample_camera_position(cfg, &first, rng);
        let inside = circles
            .iter()
            .any(|c| (c.tx() - x).hypot(c.ty() - z) <= c.radius() + cfg.clearance);
        if inside {
            continue;
        }
        let h = rng.random_range(-1.0..1.0);
        let center = Vector3::new(x, h, z);
        let target = Vector3::new(first.tx(), h, first.ty());
        let k = cameras.len();
        let cam = Camera::look_at(format!("cam{k}"), &center, &target, &Vector3::y())?;
        let rot = cam.rotation();
        for (ci, c) in circles.iter().enumerate() {
            let tangents = tangent_lines_from_point(c, [x, z]).expect("camera is outside every cylinder");
            for exact in tangents {
                let [a, b] = exact.normal();
                let image = ImageLine::new(rot * Vector3::new(a, 0.0, b), cam.id())?;
                let (noisy, image) = match cfg.noise {
                    NoiseModel::RectifiedOffset => (add_line_noise(&exact, cfg.sigma, rng), image),
                    NoiseModel::ImageCoordinate => {
                        let mut l = *image.coeffs();
                        if cfg.sigma > 0.0 {
                            l.z += image_noise.sample(rng);
                        }
                        let noisy_image = ImageLine::new(l, cam.id())?;
                        // silhouettes are vertical image lines (l2 = 0) and stay so, hence pi2 = 0
                        let plane = cam.matrix().transpose() * noisy_image.coeffs();
                        (Line2D::new(plane.x, plane.z, plane.w)?, noisy_image)
                    }
                };
                lines.push(SceneLine {
                    camera: k,
                    cylinder: ci,
                    exact,
                    noisy,
                    image: image.with_label(format!("cyl{ci}")),
                });
            }
        }
        cameras.push(cam);
    }
    Ok(SyntheticScene {
        cameras,
        cylinders,
        circles,
        lines,
    })
}

/// `generate_scene` driven by `cfg.seed`.
pub fn generate_seeded_scene(cfg: &SceneConfig) -> Result<SyntheticScene> {
    generate_scene(cfg, &mut ChaCha8Rng::seed_from_u64(cfg.seed))
}
