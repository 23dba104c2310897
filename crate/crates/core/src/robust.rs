//! Robust cross-section estimation and multi-cylinder matching.
//!
//! Hypotheses come from the three-line minimal solver and are scored by the
//! geometric tangency defect `| |n . t + c| - r |`, which is in scene units.

use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{geometric_line_residual, lift_circle_to_cylinder, Circle2D, Cylinder3D, Line2D, LineObs, RectifiedProblem};
use crate::solvers::{solve_constrained_lsq, solve_minimal_three_lines};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RansacConfig {
    pub iterations: usize,
    /// Try every 3-subset instead of random samples.
    pub exhaustive: bool,
    /// Maximum tangency defect of an inlier, in scene units.
    pub inlier_threshold: f64,
    pub min_inliers: usize,
    pub seed: u64,
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self {
            iterations: 200,
            exhaustive: false,
            inlier_threshold: 0.05,
            min_inliers: 3,
            seed: 0,
        }
    }
}

impl RansacConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.inlier_threshold > 0.0) {
            return Err(Error::InvalidConfig("inlier_threshold must be positive".into()));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RansacResult {
    pub circle: Circle2D,
    /// Indices of inlier lines, increasing.
    pub inliers: Vec<usize>,
    /// Number of minimal problems solved.
    pub hypotheses: usize,
}

/// Lines of `lines` whose tangency defect to `c` is within `threshold`.
pub fn consensus(lines: &[Line2D], c: &Circle2D, threshold: f64) -> Vec<usize> {
    (0..lines.len())
        .filter(|&i| geometric_line_residual(&lines[i], c).abs() <= threshold)
        .collect()
}

/// Best candidate of one 3-line sample: `(inlier count, circle)`.
fn score_sample(lines: &[Line2D], s: [usize; 3], threshold: f64) -> Option<(usize, Circle2D)> {
    let sols = solve_minimal_three_lines(&lines[s[0]], &lines[s[1]], &lines[s[2]]).ok()?;
    let mut best: Option<(usize, Circle2D)> = None;
    for c in sols {
        let n = consensus(lines, &c, threshold).len();
        if best.is_none_or(|(m, _)| n > m) {
            best = Some((n, c));
        }
    }
    best
}

/// Picks the highest count; the lowest index wins ties.
fn best_of(scored: Vec<Option<(usize, Circle2D)>>) -> Option<(usize, Circle2D)> {
    scored.into_iter().flatten().fold(None, |best, (n, c)| match best {
        Some((m, _)) if m >= n => best,
        _ => Some((n, c)),
    })
}

/// Refits on the inliers with the constrained least-squares solver when
/// there are at least four, keeping the refit if it does not lose support.
fn refine(lines: &[Line2D], c: Circle2D, threshold: f64) -> (Circle2D, Vec<usize>) {
    let inliers = consensus(lines, &c, threshold);
    if inliers.len() < 4 {
        return (c, inliers);
    }
    let subset: Vec<Line2D> = inliers.iter().map(|&i| lines[i]).collect();
    match solve_constrained_lsq(&subset) {
        Ok(sol) => {
            let refined = consensus(lines, &sol.best, threshold);
            if refined.len() >= inliers.len() {
                (sol.best, refined)
            } else {
                (c, inliers)
            }
        }
        Err(_) => (c, inliers),
    }
}

fn all_triples(n: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::with_capacity(n * n * n / 6);
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                out.push([i, j, k]);
            }
        }
    }
    out
}

/// RANSAC over 3-line samples. Samples are drawn up front from the seeded
/// generator and evaluated in parallel, so the result does not depend on
/// thread scheduling.
pub fn ransac_circle(lines: &[Line2D], cfg: &RansacConfig) -> Result<RansacResult> {
    cfg.validate()?;
    if lines.len() < 3 {
        return Err(Error::NotEnoughLines { required: 3, got: lines.len() });
    }
    let samples: Vec<[usize; 3]> = if cfg.exhaustive {
        all_triples(lines.len())
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        (0..cfg.iterations)
            .map(|_| {
                let mut s = [0; 3];
                for (k, i) in rand::seq::index::sample(&mut rng, lines.len(), 3).iter().enumerate() {
                    s[k] = i;
                }
                s
            })
            .collect()
    };
    let scored: Vec<_> = samples
        .par_iter()
        .map(|&s| score_sample(lines, s, cfg.inlier_threshold))
        .collect();
    let Some((count, circle)) = best_of(scored) else {
        return Err(Error::NoConsensus { best: 0, required: cfg.min_inliers });
    };
    if count < cfg.min_inliers {
        return Err(Error::NoConsensus { best: count, required: cfg.min_inliers });
    }
    let (circle, inliers) = refine(lines, circle, cfg.inlier_threshold);
    Ok(RansacResult {
        circle,
        inliers,
        hypotheses: samples.len(),
    })
}

/// One cylinder found by [`exhaustive_multi_cylinder`].
#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub cylinder: Cylinder3D,
    pub circle: Circle2D,
    /// `(camera id, observation index)` of every matched line.
    pub matched_lines: Vec<(String, usize)>,
    /// Fraction of the scored lines that support the model.
    pub inlier_rate: f64,
    pub outlier_rate: f64,
    /// Index of the reference pair that produced the model.
    pub pair: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiCylinderResult {
    pub cylinders: Vec<MatchResult>,
    /// Reference pairs without an accepted model.
    pub skipped: Vec<(usize, Error)>,
    /// Minimal problems solved: pairs times rectified lines outside the
    /// reference image.
    pub hypotheses: usize,
    /// Observations excluded from scoring because they do not fit `w`.
    pub rejected: Vec<(usize, Error)>,
}

/// Matches silhouettes across images and estimates all cylinders sharing
/// the axis direction `w`.
///
/// Each pair in `ref_pairs` (observation indices of a left and right
/// silhouette in the same reference image) is combined with every single
/// line from the other images. The best-supported model per pair is refined
/// on its inliers; models are then accepted greedily by decreasing support,
/// each line going to at most one cylinder.
pub fn exhaustive_multi_cylinder(
    obs: &[LineObs<'_>],
    ref_pairs: &[(usize, usize)],
    w: &Vector3<f64>,
    direction_tol: f64,
    cfg: &RansacConfig,
) -> Result<MultiCylinderResult> {
    cfg.validate()?;
    let (problem, rejected) = RectifiedProblem::build(obs, w, direction_tol);
    let lines = problem.lines2d();
    // position of each observation among the rectified lines
    let mut slot = vec![None; obs.len()];
    for (k, rl) in problem.lines.iter().enumerate() {
        slot[rl.source] = Some(k);
    }
    let counter = AtomicUsize::new(0);

    let per_pair: Vec<Result<(Circle2D, Vec<usize>)>> = ref_pairs
        .par_iter()
        .map(|&(a, b)| {
            let ref_cam = obs.get(a).ok_or(Error::InvalidConfig(format!("reference line {a} out of range")))?;
            obs.get(b).ok_or(Error::InvalidConfig(format!("reference line {b} out of range")))?;
            let ref_id = ref_cam.camera.id();
            let (Some(sa), Some(sb)) = (slot[a], slot[b]) else {
                return Err(Error::NoConsensus { best: 0, required: cfg.min_inliers });
            };
            let others: Vec<usize> = problem
                .lines
                .iter()
                .enumerate()
                .filter(|(_, rl)| rl.camera_id != ref_id)
                .map(|(k, _)| k)
                .collect();
            counter.fetch_add(others.len(), Ordering::Relaxed);
            let scored = others
                .iter()
                .map(|&k| score_sample(&lines, [sa, sb, k], cfg.inlier_threshold))
                .collect();
            let (count, c) = best_of(scored).unwrap_or((0, Circle2D::new(0.0, 0.0, 1.0).expect("unit circle")));
            if count < cfg.min_inliers {
                return Err(Error::NoConsensus { best: count, required: cfg.min_inliers });
            }
            Ok(refine(&lines, c, cfg.inlier_threshold))
        })
        .collect();

    let mut order: Vec<usize> = (0..ref_pairs.len()).filter(|&p| per_pair[p].is_ok()).collect();
    order.sort_by_key(|&p| std::cmp::Reverse(per_pair[p].as_ref().map(|r| r.1.len()).unwrap_or(0)));

    let mut skipped: Vec<(usize, Error)> = per_pair
        .iter()
        .enumerate()
        .filter_map(|(p, r)| r.as_ref().err().map(|e| (p, e.clone())))
        .collect();
    let mut taken = vec![false; lines.len()];
    let mut cylinders = Vec::new();
    for p in order {
        let (c, inliers) = per_pair[p].as_ref().expect("filtered to ok");
        let free: Vec<usize> = inliers.iter().copied().filter(|&k| !taken[k]).collect();
        if free.len() < cfg.min_inliers {
            skipped.push((p, Error::NoConsensus { best: free.len(), required: cfg.min_inliers }));
            continue;
        }
        let circle = if free.len() < inliers.len() && free.len() >= 4 {
            let subset: Vec<Line2D> = free.iter().map(|&k| lines[k]).collect();
            solve_constrained_lsq(&subset).map(|s| s.best).unwrap_or(*c)
        } else {
            *c
        };
        for &k in &free {
            taken[k] = true;
        }
        let rate = free.len() as f64 / lines.len() as f64;
        cylinders.push(MatchResult {
            cylinder: lift_circle_to_cylinder(&circle, &problem.r_align),
            circle,
            matched_lines: free
                .iter()
                .map(|&k| (problem.lines[k].camera_id.clone(), problem.lines[k].source))
                .collect(),
            inlier_rate: rate,
            outlier_rate: 1.0 - rate,
            pair: p,
        });
    }
    skipped.sort_by_key(|(p, _)| *p);
    Ok(MultiCylinderResult {
        cylinders,
        skipped,
        hypotheses: counter.into_inner(),
        rejected,
    })
}
