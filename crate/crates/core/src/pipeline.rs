//! End-to-end triangulation: axis direction, rectification, cross-section
//! and lifting back to a world cylinder. No final non-linear refinement.

use serde::{Deserialize, Serialize};

use crate::direction::{estimate_direction, DirectionConfig, DirectionEstimate};
use crate::error::Error;
use crate::geometry::{
    circle_from_dual_conic, geometric_line_residual, lift_circle_to_cylinder, Circle2D, Cylinder3D, LineObs,
    RectifiedProblem,
};
use crate::io::{CylinderEntry, ResidualStats, ResultFile, Scene};
use crate::robust::{ransac_circle, RansacConfig};
use crate::solvers::{classify_conic, solve_constrained_lsq, solve_linear_conic, ConicClass};

/// Default bound on `|pi2| / |Pi|` for a back-projected plane to count as
/// parallel to the estimated axis.
pub const PIPELINE_DIRECTION_TOL: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CrossSectionMethod {
    MinimalRansac,
    ConstrainedLsq,
    Linear,
}

impl CrossSectionMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            CrossSectionMethod::MinimalRansac => "minimal-ransac",
            CrossSectionMethod::ConstrainedLsq => "constrained-lsq",
            CrossSectionMethod::Linear => "linear",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub direction: DirectionConfig,
    pub cross_section: CrossSectionMethod,
    pub ransac: RansacConfig,
    pub direction_tol: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            direction: DirectionConfig::default(),
            cross_section: CrossSectionMethod::ConstrainedLsq,
            ransac: RansacConfig::default(),
            direction_tol: PIPELINE_DIRECTION_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PipelineError {
    #[error("direction stage: {0}")]
    Direction(Error),
    #[error("cross-section stage: {0}")]
    CrossSection(Error),
    #[error("cross-section stage: linear estimate is a {0}, not a circle")]
    NotACircle(ConicClass),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CylinderEstimate {
    pub cylinder: Cylinder3D,
    /// Cross-section in the rectified plane.
    pub circle: Circle2D,
    pub direction: DirectionEstimate,
    /// Indices into the observations passed in.
    pub inliers: Vec<usize>,
    /// Absolute geometric defects of the inliers.
    pub defects: Vec<f64>,
    pub conic_class: ConicClass,
}

impl CylinderEstimate {
    pub fn residual_stats(&self, focal_length: Option<f64>) -> ResidualStats {
        let max = self.defects.iter().copied().fold(0.0, f64::max);
        let mean = if self.defects.is_empty() {
            0.0
        } else {
            self.defects.iter().sum::<f64>() / self.defects.len() as f64
        };
        ResidualStats {
            max_defect: max,
            mean_defect: mean,
            max_defect_px: focal_length.map(|f| max * f),
            mean_defect_px: focal_length.map(|f| mean * f),
        }
    }
}

/// Estimates one cylinder from silhouette lines that all belong to it
/// (up to outliers when a robust stage is selected).
pub fn triangulate_cylinder(obs: &[LineObs<'_>], cfg: &PipelineConfig) -> Result<CylinderEstimate, PipelineError> {
    let direction = estimate_direction(obs, &cfg.direction).map_err(PipelineError::Direction)?;
    triangulate_with_direction(obs, direction, cfg)
}

/// The cross-section stages for a known direction estimate. Only the
/// direction inliers are used.
pub fn triangulate_with_direction(
    obs: &[LineObs<'_>],
    direction: DirectionEstimate,
    cfg: &PipelineConfig,
) -> Result<CylinderEstimate, PipelineError> {
    let used: Vec<LineObs<'_>> = direction.inlier_ids.iter().map(|&i| obs[i]).collect();
    let (problem, _) = RectifiedProblem::build(&used, &direction.w, cfg.direction_tol);
    let lines = problem.lines2d();
    let source = |k: usize| direction.inlier_ids[problem.lines[k].source];
    let cross = PipelineError::CrossSection;

    let (circle, kept, conic_class) = match cfg.cross_section {
        CrossSectionMethod::MinimalRansac => {
            let res = ransac_circle(&lines, &cfg.ransac).map_err(cross)?;
            (res.circle, res.inliers, ConicClass::Circle)
        }
        CrossSectionMethod::ConstrainedLsq => {
            if lines.len() < 4 {
                return Err(cross(Error::NotEnoughLines { required: 4, got: lines.len() }));
            }
            let sol = solve_constrained_lsq(&lines).map_err(cross)?;
            (sol.best, (0..lines.len()).collect(), ConicClass::Circle)
        }
        CrossSectionMethod::Linear => {
            let d = solve_linear_conic(&lines).map_err(cross)?;
            let class = classify_conic(&d);
            if !matches!(class, ConicClass::Circle | ConicClass::Ellipse) {
                return Err(PipelineError::NotACircle(class));
            }
            let c = circle_from_dual_conic(&d).map_err(cross)?;
            (c, (0..lines.len()).collect(), class)
        }
    };
    let defects = kept
        .iter()
        .map(|&k| geometric_line_residual(&lines[k], &circle).abs())
        .collect();
    Ok(CylinderEstimate {
        cylinder: lift_circle_to_cylinder(&circle, &problem.r_align),
        circle,
        inliers: kept.iter().map(|&k| source(k)).collect(),
        direction,
        defects,
        conic_class,
    })
}

/// One cylinder per labeled group. With a shared direction, the axis is
/// estimated once from all labeled lines.
pub fn triangulate_groups(
    obs: &[LineObs<'_>],
    groups: &[(String, Vec<usize>)],
    cfg: &PipelineConfig,
) -> Vec<(String, Result<CylinderEstimate, PipelineError>)> {
    let shared = cfg.direction.shared_direction.then(|| {
        let all: Vec<usize> = groups.iter().flat_map(|(_, idx)| idx.iter().copied()).collect();
        let pooled: Vec<LineObs<'_>> = all.iter().map(|&i| obs[i]).collect();
        estimate_direction(&pooled, &cfg.direction).map(|d| (d, all))
    });
    groups
        .iter()
        .map(|(name, idx)| {
            let sub: Vec<LineObs<'_>> = idx.iter().map(|&i| obs[i]).collect();
            let res = match &shared {
                None => triangulate_cylinder(&sub, cfg),
                Some(Err(e)) => Err(PipelineError::Direction(e.clone())),
                Some(Ok((d, all))) => {
                    // restrict the pooled inliers to this group
                    let inlier_ids = idx
                        .iter()
                        .enumerate()
                        .filter(|(_, i)| d.inlier_ids.iter().any(|&k| all[k] == **i))
                        .map(|(j, _)| j)
                        .collect();
                    let local = DirectionEstimate { inlier_ids, ..d.clone() };
                    triangulate_with_direction(&sub, local, cfg)
                }
            };
            let res = res.map(|mut est| {
                est.inliers = est.inliers.iter().map(|&j| idx[j]).collect();
                est
            });
            (name.clone(), res)
        })
        .collect()
}

/// Result file entry for an estimate; `inliers` must already index the
/// scene's lines.
pub fn cylinder_entry(est: &CylinderEstimate, group: Option<String>, method: CrossSectionMethod, focal_length: Option<f64>) -> CylinderEntry {
    CylinderEntry {
        group,
        direction: (*est.cylinder.direction()).into(),
        axis_point: (*est.cylinder.point()).into(),
        radius: est.cylinder.radius(),
        inliers: est.inliers.clone(),
        residuals: est.residual_stats(focal_length),
        method: method.as_str().into(),
        conic_class: est.conic_class.as_str().into(),
    }
}

/// Runs the pipeline on a scene: one cylinder from all lines, or one per
/// group label when `grouped`. Fails on the first group that fails.
pub fn triangulate_scene(scene: &Scene, cfg: &PipelineConfig, grouped: bool) -> Result<ResultFile, (Option<String>, PipelineError)> {
    let obs = scene.observations();
    let mut cylinders = Vec::new();
    if grouped {
        for (name, res) in triangulate_groups(&obs, &scene.groups(), cfg) {
            let est = res.map_err(|e| (Some(name.clone()), e))?;
            cylinders.push(cylinder_entry(&est, Some(name), cfg.cross_section, scene.focal_length));
        }
    } else {
        let est = triangulate_cylinder(&obs, cfg).map_err(|e| (None, e))?;
        cylinders.push(cylinder_entry(&est, None, cfg.cross_section, scene.focal_length));
    }
    Ok(ResultFile {
        cylinders,
        config: serde_json::to_value(cfg).expect("plain data serializes"),
    })
}
