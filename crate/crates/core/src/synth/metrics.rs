//! Error metrics against ground truth.

use crate::geometry::{Circle2D, Cylinder3D, DualConic2D};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorMetrics {
    /// Distance between centers, or between axes for cylinders.
    pub center_error: f64,
    pub radius_error: f64,
    /// Angle between axes in radians; zero for circles.
    pub direction_angle: f64,
}

impl ErrorMetrics {
    /// `center_error + radius_error`.
    pub fn total(&self) -> f64 {
        self.center_error + self.radius_error
    }
}

pub fn circle_error(est: &Circle2D, truth: &Circle2D) -> ErrorMetrics {
    ErrorMetrics {
        center_error: (est.tx() - truth.tx()).hypot(est.ty() - truth.ty()),
        radius_error: (est.radius() - truth.radius()).abs(),
        direction_angle: 0.0,
    }
}

/// Axis distance is the shortest distance between the two axis lines
/// (point-to-line distance when they are parallel).
pub fn cylinder_error(est: &Cylinder3D, truth: &Cylinder3D) -> ErrorMetrics {
    let (w1, w2) = (est.direction(), truth.direction());
    let dp = est.point() - truth.point();
    let cross = w1.cross(w2);
    let center_error = if cross.norm() > 1e-12 {
        dp.dot(&cross).abs() / cross.norm()
    } else {
        (dp - w2 * dp.dot(w2)).norm()
    };
    ErrorMetrics {
        center_error,
        radius_error: (est.radius() - truth.radius()).abs(),
        direction_angle: w1.dot(w2).abs().min(1.0).acos(),
    }
}

fn gauge(d: &DualConic2D) -> DualConic2D {
    if d.coeffs()[5].abs() < 1e-12 {
        d.unit()
    } else {
        d.scaled(-1.0 / d.coeffs()[5])
    }
}

/// Frobenius norm of the difference of the full symmetric matrices, both
/// scaled to `d6 = -1` (unit norm when `|d6| < 1e-12`).
pub fn frobenius_conic_error(est: &DualConic2D, truth: &DualConic2D) -> f64 {
    (gauge(est).matrix() - gauge(truth).matrix()).norm()
}
