//! Cross-section solvers in the rectified plane.
//!
//! * [`minimal`]: circle from three tangent lines through the nullspace of
//!   the tangency equations and the two circle constraints.
//! * [`lsq`]: least squares over all lines subject to the circle
//!   constraints, solved non-iteratively through the stationary points of
//!   the Lagrangian.
//! * [`linear`]: the unconstrained linear conic estimate, kept as a baseline.

pub mod linear;
pub mod lsq;
pub mod minimal;

pub use linear::{classify_conic, solve_linear_conic, ConicClass};
pub use lsq::{
    build_stationary_system, lsq_cost, solve_constrained_lsq, LsqSolution, StationaryPoint,
    StationarySystem,
};
pub use minimal::{
    nullspace_parametrization, solve_minimal_three_lines, solve_quadratic_pair, NullspaceBasis,
    QuadraticPair,
};

use nalgebra::{Matrix2, Vector2};

use crate::geometry::{Circle2D, Line2D};

/// Fixed rotation applied by [`Similarity`]; keeps the elimination variable
/// away from axis-aligned coincidences in synthetic data.
const PRECONDITION_ANGLE: f64 = 0.4363323129985824;

/// Similarity `x' = Q (x - t0) / k` used to precondition line sets: `t0` is
/// the least-squares intersection point of the lines and `k` their RMS
/// distance to it.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Similarity {
    t0: Vector2<f64>,
    k: f64,
    cos: f64,
    sin: f64,
}

impl Similarity {
    pub(crate) fn for_lines(lines: &[Line2D]) -> Self {
        let mut a = Matrix2::zeros();
        let mut b = Vector2::zeros();
        for l in lines {
            let n = Vector2::from(l.normal());
            a += n * n.transpose();
            b -= n * l.offset();
        }
        let t0 = a
            .pseudo_inverse(1e-12 * a.norm().max(1e-300))
            .map(|inv| inv * b)
            .unwrap_or_else(|_| Vector2::zeros());
        let ms = lines
            .iter()
            .map(|l| l.signed_distance([t0.x, t0.y]).powi(2))
            .sum::<f64>()
            / lines.len().max(1) as f64;
        let k = if ms.sqrt() > 1e-12 { ms.sqrt() } else { 1.0 };
        Self {
            t0,
            k,
            cos: PRECONDITION_ANGLE.cos(),
            sin: PRECONDITION_ANGLE.sin(),
        }
    }

    pub(crate) fn line_to_local(&self, l: &Line2D) -> Line2D {
        let [a, b] = l.normal();
        let c = (l.signed_distance([self.t0.x, self.t0.y])) / self.k;
        let (na, nb) = (self.cos * a - self.sin * b, self.sin * a + self.cos * b);
        Line2D::new(na, nb, c).expect("rotated unit normal is non-zero")
    }

    pub(crate) fn point_to_world(&self, p: [f64; 2]) -> [f64; 2] {
        // Q^T p
        let (x, y) = (self.cos * p[0] + self.sin * p[1], -self.sin * p[0] + self.cos * p[1]);
        [self.t0.x + self.k * x, self.t0.y + self.k * y]
    }

    pub(crate) fn circle_to_world(&self, c: &Circle2D) -> Option<Circle2D> {
        let [x, y] = self.point_to_world(c.center());
        Circle2D::new(x, y, self.k * c.radius()).ok()
    }

    pub(crate) fn scale(&self) -> f64 {
        self.k
    }
}

/// Removes near-duplicate circles, keeping the first occurrence.
pub(crate) fn dedup_circles(circles: &mut Vec<Circle2D>, rel_tol: f64) {
    let mut out: Vec<Circle2D> = Vec::with_capacity(circles.len());
    for c in circles.drain(..) {
        let scale = 1.0 + c.tx().abs() + c.ty().abs() + c.radius();
        let dup = out.iter().any(|o| {
            (o.tx() - c.tx()).abs() + (o.ty() - c.ty()).abs() + (o.radius() - c.radius()).abs()
                <= rel_tol * scale
        });
        if !dup {
            out.push(c);
        }
    }
    *circles = out;
}
