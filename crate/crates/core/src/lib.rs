//! Triangulation of infinite cylinders from image silhouette lines.
//!
//! Silhouette lines of a cylinder back-project to planes tangent to it. Once
//! the axis direction is known the planes reduce to lines in a rectified
//! plane orthogonal to the axis, tangent to the circular cross-section. The
//! cross-section is estimated with a three-line minimal solver (for RANSAC)
//! or with a non-iterative constrained least-squares solver, both restricted
//! to dual conics that are circles.

pub mod direction;
pub mod error;
pub mod geometry;
pub mod io;
pub mod pipeline;
pub mod poly;
pub mod robust;
pub mod solvers;
pub mod synth;

pub use error::{Error, Result};
pub use geometry::{Camera, Circle2D, Cylinder3D, DualConic2D, ImageLine, Line2D, LineObs};
