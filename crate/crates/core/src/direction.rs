//! Axis direction from silhouette lines.
//!
//! Every silhouette plane contains the axis direction, so each line gives
//! one linear constraint `l^T R w = 0` on the unit vector `w`.

use nalgebra::{DMatrix, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::LineObs;

/// Ratio `s2 / s1` below which the constraint rows span less than a plane.
const RANK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct DirectionEstimate {
    pub w: Vector3<f64>,
    /// Indices into the input slice.
    pub inlier_ids: Vec<usize>,
    /// Singular values of the stacked rows, in decreasing order.
    pub singular_values: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionMethod {
    LeastSquares,
    Ransac,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionConfig {
    pub method: DirectionMethod,
    pub ransac_iterations: usize,
    /// Angular residual threshold in radians.
    pub inlier_threshold: f64,
    pub sample_size: usize,
    /// Pool the lines of all cylinders into one estimate.
    pub shared_direction: bool,
    pub seed: u64,
}

impl Default for DirectionConfig {
    fn default() -> Self {
        Self {
            method: DirectionMethod::LeastSquares,
            ransac_iterations: 500,
            inlier_threshold: 0.01,
            sample_size: 2,
            shared_direction: false,
            seed: 0,
        }
    }
}

impl DirectionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sample_size < 2 {
            return Err(Error::InvalidConfig("sample_size must be at least 2".into()));
        }
        if !(self.inlier_threshold > 0.0) {
            return Err(Error::InvalidConfig("inlier_threshold must be positive".into()));
        }
        if self.ransac_iterations == 0 {
            return Err(Error::InvalidConfig("ransac_iterations must be positive".into()));
        }
        Ok(())
    }
}

/// Flips `w` so its largest-magnitude component is positive (first index on
/// ties).
pub fn canonical_sign(w: Vector3<f64>) -> Vector3<f64> {
    let mut k = 0;
    for i in 1..3 {
        if w[i].abs() > w[k].abs() {
            k = i;
        }
    }
    if w[k] < 0.0 {
        -w
    } else {
        w
    }
}

/// `|asin(row . w / |row|)|`: the angle between `w` and the silhouette plane.
pub fn angular_residual(obs: &LineObs<'_>, w: &Vector3<f64>) -> f64 {
    let row = obs.direction_row();
    (row.dot(w) / row.norm()).clamp(-1.0, 1.0).asin().abs()
}

/// Right singular vector of the smallest singular value of the rows
/// `l_i^T R_i`.
pub fn estimate_direction_lsq(obs: &[LineObs<'_>]) -> Result<DirectionEstimate> {
    if obs.len() < 2 {
        return Err(Error::NotEnoughLines { required: 2, got: obs.len() });
    }
    let rows = obs.len().max(3);
    let mut a = DMatrix::<f64>::zeros(rows, 3);
    for (i, o) in obs.iter().enumerate() {
        let r = o.direction_row();
        let r = r / r.norm();
        a.set_row(i, &r.transpose());
    }
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let s = order.map(|k| svd.singular_values[k]);
    if !(s[1] > RANK_TOL * s[0]) {
        return Err(Error::RankDeficient);
    }
    let row = v_t.row(order[2]);
    let w = canonical_sign(Vector3::new(row[0], row[1], row[2]).normalize());
    Ok(DirectionEstimate {
        w,
        inlier_ids: (0..obs.len()).collect(),
        singular_values: s,
    })
}

/// RANSAC over `sample_size`-line hypotheses, re-estimated on the best
/// consensus set.
pub fn estimate_direction_ransac(obs: &[LineObs<'_>], cfg: &DirectionConfig) -> Result<DirectionEstimate> {
    cfg.validate()?;
    if obs.len() < cfg.sample_size {
        return Err(Error::NotEnoughLines { required: cfg.sample_size, got: obs.len() });
    }
    let required = cfg.sample_size + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let inliers_of = |w: &Vector3<f64>| -> Vec<usize> {
        (0..obs.len())
            .filter(|&i| angular_residual(&obs[i], w) <= cfg.inlier_threshold)
            .collect()
    };
    let mut best: Vec<usize> = Vec::new();
    for _ in 0..cfg.ransac_iterations {
        let idx = rand::seq::index::sample(&mut rng, obs.len(), cfg.sample_size);
        let sample: Vec<LineObs<'_>> = idx.iter().map(|i| obs[i]).collect();
        let Ok(h) = estimate_direction_lsq(&sample) else {
            continue;
        };
        let inl = inliers_of(&h.w);
        if inl.len() > best.len() {
            best = inl;
        }
    }
    if best.len() < required {
        return Err(Error::NoConsensus { best: best.len(), required });
    }
    let subset: Vec<LineObs<'_>> = best.iter().map(|&i| obs[i]).collect();
    let est = estimate_direction_lsq(&subset)?;
    Ok(DirectionEstimate {
        inlier_ids: inliers_of(&est.w),
        ..est
    })
}

/// Dispatches on `cfg.method`.
pub fn estimate_direction(obs: &[LineObs<'_>], cfg: &DirectionConfig) -> Result<DirectionEstimate> {
    match cfg.method {
        DirectionMethod::LeastSquares => estimate_direction_lsq(obs),
        DirectionMethod::Ransac => estimate_direction_ransac(obs, cfg),
    }
}
