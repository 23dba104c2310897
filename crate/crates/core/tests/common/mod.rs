#![allow(dead_code)]

pub mod oracle;

use cyltri::{Circle2D, Line2D};

/// Tangent to `c` with outward normal at angle `phi`.
pub fn tangent(c: &Circle2D, phi: f64) -> Line2D {
    let n = [phi.cos(), phi.sin()];
    Line2D::through([c.tx() + c.radius() * n[0], c.ty() + c.radius() * n[1]], n).unwrap()
}
