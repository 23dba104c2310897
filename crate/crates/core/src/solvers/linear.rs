//! Unconstrained linear estimate of the dual conic and conic classification.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{circle_from_dual_conic, DualConic2D, Line2D};

/// Singular value ratio below which the tangency system is rank deficient.
const RANK_TOL: f64 = 1e-10;

/// Manifold tolerance (on the unit-norm conic) for the circle label.
const CIRCLE_TOL: f64 = 1e-8;

const DEGENERATE_TOL: f64 = 1e-12;

/// Type of the point conic dual to a dual conic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConicClass {
    Circle,
    Ellipse,
    Hyperbola,
    Parabola,
    Degenerate,
}

impl ConicClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            ConicClass::Circle => "circle",
            ConicClass::Ellipse => "ellipse",
            ConicClass::Hyperbola => "hyperbola",
            ConicClass::Parabola => "parabola",
            ConicClass::Degenerate => "degenerate",
        }
    }
}

impl std::fmt::Display for ConicClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Smallest right singular vector of the stacked tangency rows.
pub fn solve_linear_conic(lines: &[Line2D]) -> Result<DualConic2D> {
    if lines.len() < 5 {
        return Err(Error::RankDeficient);
    }
    let rows = lines.len().max(6);
    let mut a = DMatrix::<f64>::zeros(rows, 6);
    for (i, l) in lines.iter().enumerate() {
        let r = l.tangency_row();
        let n = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        for (j, v) in r.iter().enumerate() {
            a[(i, j)] = v / n;
        }
    }
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let mut order: Vec<usize> = (0..6).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let s = |k: usize| svd.singular_values[order[k]];
    if s(4) <= RANK_TOL * s(0) {
        return Err(Error::RankDeficient);
    }
    let row = v_t.row(order[5]);
    DualConic2D::new(std::array::from_fn(|k| row[k]))
}

/// Classifies the point conic `adj(D)`.
///
/// The leading 2x2 minor of the adjugate equals `det(D) * d6`; its sign
/// separates ellipses (> 0) from hyperbolas (< 0).
pub fn classify_conic(d: &DualConic2D) -> ConicClass {
    let u = d.unit();
    let m = u.matrix();
    let det = m.determinant();
    if det.abs() < DEGENERATE_TOL {
        return ConicClass::Degenerate;
    }
    let adj = m.try_inverse().expect("non-singular") * det;
    let minor = adj[(0, 0)] * adj[(1, 1)] - adj[(0, 1)] * adj[(1, 0)];
    if minor.abs() < DEGENERATE_TOL {
        ConicClass::Parabola
    } else if minor < 0.0 {
        ConicClass::Hyperbola
    } else if u.is_on_manifold(CIRCLE_TOL) && circle_from_dual_conic(&u).is_ok() {
        ConicClass::Circle
    } else {
        ConicClass::Ellipse
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{dual_conic_from_circle, Circle2D};

    fn tangents(c: &Circle2D, angles: &[f64]) -> Vec<Line2D> {
        angles
            .iter()
            .map(|&t| {
                let n = [t.cos(), t.sin()];
                let p = [c.tx() + c.radius() * n[0], c.ty() + c.radius() * n[1]];
                Line2D::through(p, n).unwrap()
            })
            .collect()
    }

    #[test]
    fn classify_examples() {
        let c = dual_conic_from_circle(&Circle2D::new(0.0, 0.0, 1.0).unwrap());
        assert_eq!(classify_conic(&c), ConicClass::Circle);
        let h = DualConic2D::new([1.0, 0.0, 0.0, -1.0, 0.0, -1.0]).unwrap();
        assert_eq!(classify_conic(&h), ConicClass::Hyperbola);
        let z = DualConic2D::new([1.0, 0.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(classify_conic(&z), ConicClass::Degenerate);
        let e = DualConic2D::new([4.0, 0.0, 0.0, 1.0, 0.0, -1.0]).unwrap();
        assert_eq!(classify_conic(&e), ConicClass::Ellipse);
    }

    #[test]
    fn parabola_has_vanishing_minor() {
        // y = x^2: point conic [[1,0,0],[0,0,-1/2],[0,-1/2,0]]
        let c = nalgebra::Matrix3::new(1.0, 0.0, 0.0, 0.0, 0.0, -0.5, 0.0, -0.5, 0.0);
        let d = DualConic2D::from_matrix(&c.try_inverse().unwrap()).unwrap();
        assert_eq!(classify_conic(&d), ConicClass::Parabola);
    }

    #[test]
    fn classification_is_scale_invariant() {
        let d = dual_conic_from_circle(&Circle2D::new(3.0, -2.0, 0.7).unwrap());
        for s in [-5.0, 1e-3, 1e4] {
            assert_eq!(classify_conic(&d.scaled(s)), ConicClass::Circle);
        }
    }

    #[test]
    fn full_coverage_recovers_circle() {
        let c = Circle2D::new(1.0, 2.0, 1.5).unwrap();
        let angles: Vec<f64> = (0..6).map(|k| k as f64 * std::f64::consts::TAU / 6.0 + 0.1).collect();
        let d = solve_linear_conic(&tangents(&c, &angles)).unwrap();
        assert!(d.is_on_manifold(1e-8));
        let got = circle_from_dual_conic(&d).unwrap();
        assert!((got.tx() - 1.0).abs() < 1e-8);
        assert!((got.ty() - 2.0).abs() < 1e-8);
        assert!((got.radius() - 1.5).abs() < 1e-8);
    }

    #[test]
    fn four_lines_are_rank_deficient() {
        let c = Circle2D::new(0.0, 0.0, 1.0).unwrap();
        let lines = tangents(&c, &[0.0, 1.0, 2.0, 3.0]);
        assert_eq!(solve_linear_conic(&lines), Err(Error::RankDeficient));
    }
}
