//! Geometric primitives: calibrated cameras, image and rectified lines, dual
//! conics and circles, and the exact algebraic maps between them.
//!
//! A cylinder with axis direction `w` is represented as the dual quadric with
//! apex `(w, 0)` at infinity. After rotating the world so that `w` becomes the
//! y-axis, every tangent plane has a vanishing y-component and the envelope
//! collapses to a 3x3 dual conic `d` in the plane `y = 0`, acting on 2D lines
//! `(a, b, c)` that describe `a*x + b*z + c = 0`. The 4x4 envelope is never
//! stored densely; [`DualQuadricCylinder`] keeps the aligning rotation and the
//! rectified conic instead.

use nalgebra::{Matrix3, Matrix3x4, Matrix4, Rotation3, Unit, Vector3, Vector4};

use crate::error::{Error, Result};

/// Tolerance on `R^T R = I` and `det R = 1` for camera rotation blocks.
pub const ROTATION_TOL: f64 = 1e-9;

/// Default relative tolerance on the dropped plane component in
/// [`backproject_line_2d`].
pub const DEFAULT_DIRECTION_TOL: f64 = 1e-6;

const Y_AXIS: Vector3<f64> = Vector3::new(0.0, 1.0, 0.0);

/// A calibrated camera `P = [R | t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Camera {
    id: String,
    p: Matrix3x4<f64>,
}

impl Camera {
    pub fn new(id: impl Into<String>, p: Matrix3x4<f64>) -> Result<Self> {
        let id = id.into();
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidCamera(format!("camera {id}: non-finite entry")));
        }
        let r: Matrix3<f64> = p.fixed_view::<3, 3>(0, 0).into_owned();
        let orth = (r.transpose() * r - Matrix3::identity()).abs().max();
        if orth > ROTATION_TOL {
            return Err(Error::InvalidCamera(format!(
                "camera {id}: rotation block is not orthonormal (max |R^T R - I| = {orth:.3e})"
            )));
        }
        let det = r.determinant();
        if (det - 1.0).abs() > ROTATION_TOL {
            return Err(Error::InvalidCamera(format!(
                "camera {id}: rotation block has determinant {det}"
            )));
        }
        Ok(Self { id, p })
    }

    pub fn from_pose(id: impl Into<String>, r: &Matrix3<f64>, t: &Vector3<f64>) -> Result<Self> {
        let mut p = Matrix3x4::zeros();
        p.fixed_view_mut::<3, 3>(0, 0).copy_from(r);
        p.set_column(3, t);
        Self::new(id, p)
    }

    /// Camera at `center` looking at `target`, with image y pointing along
    /// `-up` (x right, y down, z forward).
    pub fn look_at(
        id: impl Into<String>,
        center: &Vector3<f64>,
        target: &Vector3<f64>,
        up: &Vector3<f64>,
    ) -> Result<Self> {
        let id = id.into();
        let forward = (target - center)
            .try_normalize(1e-12)
            .ok_or_else(|| Error::InvalidCamera(format!("camera {id}: target equals center")))?;
        let right = forward
            .cross(up)
            .try_normalize(1e-12)
            .ok_or_else(|| Error::InvalidCamera(format!("camera {id}: up is parallel to view")))?;
        let down = forward.cross(&right);
        let r = Matrix3::from_rows(&[right.transpose(), down.transpose(), forward.transpose()]);
        let t = -(r * center);
        Self::from_pose(id, &r, &t)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn matrix(&self) -> &Matrix3x4<f64> {
        &self.p
    }

    pub fn rotation(&self) -> Matrix3<f64> {
        self.p.fixed_view::<3, 3>(0, 0).into_owned()
    }

    pub fn translation(&self) -> Vector3<f64> {
        self.p.column(3).into_owned()
    }

    pub fn center(&self) -> Vector3<f64> {
        -(self.rotation().transpose() * self.translation())
    }

    /// Camera matrix acting on world points rotated by `r_align`.
    pub fn rotated(&self, r_align: &Rotation3<f64>) -> Matrix3x4<f64> {
        let mut h = Matrix4::identity();
        h.fixed_view_mut::<3, 3>(0, 0)
            .copy_from(&r_align.matrix().transpose());
        self.p * h
    }
}

fn normalize_line(v: Vector3<f64>, what: &str) -> Result<Vector3<f64>> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidLine(format!("{what} has non-finite coefficients")));
    }
    let n = v.x.hypot(v.y);
    if n <= 1e-12 * v.norm() || n == 0.0 {
        return Err(Error::InvalidLine(format!("{what} is the line at infinity")));
    }
    Ok(v / n)
}

/// An image line `l` observed by the camera `camera_id`, stored with unit
/// normal `(l1, l2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageLine {
    coeffs: Vector3<f64>,
    pub camera_id: String,
    /// Cylinder identity, for known correspondences and evaluation.
    pub label: Option<String>,
}

impl ImageLine {
    pub fn new(coeffs: Vector3<f64>, camera_id: impl Into<String>) -> Result<Self> {
        Ok(Self {
            coeffs: normalize_line(coeffs, "image line")?,
            camera_id: camera_id.into(),
            label: None,
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn coeffs(&self) -> &Vector3<f64> {
        &self.coeffs
    }
}

/// An image line paired with the camera that observed it.
#[derive(Debug, Clone, Copy)]
pub struct LineObs<'a> {
    pub line: &'a ImageLine,
    pub camera: &'a Camera,
}

impl<'a> LineObs<'a> {
    pub fn new(line: &'a ImageLine, camera: &'a Camera) -> Self {
        Self { line, camera }
    }

    /// `l^T R`, the row this observation contributes to the direction system.
    pub fn direction_row(&self) -> Vector3<f64> {
        self.camera.rotation().transpose() * self.line.coeffs()
    }

    /// Tangent plane `P^T l`.
    pub fn plane(&self) -> Plane3D {
        Plane3D(self.camera.matrix().transpose() * self.line.coeffs())
    }
}

/// Homogeneous plane `Pi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane3D(pub Vector4<f64>);

/// A line `a*x + b*z + c = 0` in the rectified plane, with `a^2 + b^2 = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line2D(Vector3<f64>);

impl Line2D {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        Self::from_vector(Vector3::new(a, b, c))
    }

    pub fn from_vector(v: Vector3<f64>) -> Result<Self> {
        Ok(Self(normalize_line(v, "2D line")?))
    }

    /// Line through `point` with unit `normal`.
    pub fn through(point: [f64; 2], normal: [f64; 2]) -> Result<Self> {
        let c = -(normal[0] * point[0] + normal[1] * point[1]);
        Self::new(normal[0], normal[1], c)
    }

    pub fn coeffs(&self) -> &Vector3<f64> {
        &self.0
    }

    pub fn normal(&self) -> [f64; 2] {
        [self.0.x, self.0.y]
    }

    pub fn offset(&self) -> f64 {
        self.0.z
    }

    /// Signed distance of a point to the line.
    pub fn signed_distance(&self, p: [f64; 2]) -> f64 {
        self.0.x * p[0] + self.0.y * p[1] + self.0.z
    }

    /// Coefficients `a` such that `r^T d r = a . (d1, .., d6)`.
    pub fn tangency_row(&self) -> [f64; 6] {
        let [l1, l2, l3] = [self.0.x, self.0.y, self.0.z];
        [
            l1 * l1,
            2.0 * l1 * l2,
            2.0 * l1 * l3,
            l2 * l2,
            2.0 * l2 * l3,
            l3 * l3,
        ]
    }
}

/// Symmetric dual conic
/// `[[d1, d2, d3], [d2, d4, d5], [d3, d5, d6]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualConic2D {
    d: [f64; 6],
}

impl DualConic2D {
    pub fn new(d: [f64; 6]) -> Result<Self> {
        if d.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("dual conic has non-finite coefficients".into()));
        }
        if d.iter().all(|&v| v == 0.0) {
            return Err(Error::DegenerateConic);
        }
        Ok(Self { d })
    }

    pub fn coeffs(&self) -> &[f64; 6] {
        &self.d
    }

    pub fn norm(&self) -> f64 {
        self.d.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        let [d1, d2, d3, d4, d5, d6] = self.d;
        Matrix3::new(d1, d2, d3, d2, d4, d5, d3, d5, d6)
    }

    pub fn from_matrix(m: &Matrix3<f64>) -> Result<Self> {
        let s = 0.5 * (m + m.transpose());
        Self::new([s[(0, 0)], s[(0, 1)], s[(0, 2)], s[(1, 1)], s[(1, 2)], s[(2, 2)]])
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { d: self.d.map(|v| v * s) }
    }

    /// Scaled to unit coefficient norm.
    pub fn unit(&self) -> Self {
        self.scaled(1.0 / self.norm())
    }

    /// Scaled so that `d6 = -1`, or `None` when `d6` vanishes.
    pub fn gauge_d6(&self) -> Option<Self> {
        let d6 = self.d[5];
        if d6.abs() <= 1e-12 * self.norm() {
            None
        } else {
            Some(self.scaled(-1.0 / d6))
        }
    }

    /// Both circle constraints within `eps * |d|^2`.
    pub fn is_on_manifold(&self, eps: f64) -> bool {
        let (c1, c2) = manifold_residuals(self);
        c1.abs() <= eps && c2.abs() <= eps
    }
}

/// Circle in the rectified plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle2D {
    tx: f64,
    ty: f64,
    r: f64,
}

impl Circle2D {
    pub fn new(tx: f64, ty: f64, r: f64) -> Result<Self> {
        if !(tx.is_finite() && ty.is_finite() && r.is_finite()) {
            return Err(Error::InvalidCircle("non-finite parameters".into()));
        }
        if r <= 0.0 {
            return Err(Error::InvalidCircle(format!("radius {r} is not positive")));
        }
        Ok(Self { tx, ty, r })
    }

    pub fn tx(&self) -> f64 {
        self.tx
    }

    pub fn ty(&self) -> f64 {
        self.ty
    }

    pub fn center(&self) -> [f64; 2] {
        [self.tx, self.ty]
    }

    pub fn radius(&self) -> f64 {
        self.r
    }

    pub fn dual_conic(&self) -> DualConic2D {
        dual_conic_from_circle(self)
    }
}

/// Infinite circular cylinder with unit axis `direction`, axis point `point`
/// (closest point to the origin) and `radius`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cylinder3D {
    direction: Unit<Vector3<f64>>,
    point: Vector3<f64>,
    radius: f64,
}

impl Cylinder3D {
    pub fn new(direction: Vector3<f64>, point: Vector3<f64>, radius: f64) -> Result<Self> {
        let direction = Unit::try_new(direction, 1e-12)
            .ok_or_else(|| Error::InvalidConfig("cylinder direction is zero".into()))?;
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidCircle(format!("radius {radius} is not positive")));
        }
        if point.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("cylinder axis point is not finite".into()));
        }
        let point = point - direction.as_ref() * direction.dot(&point);
        Ok(Self {
            direction,
            point,
            radius,
        })
    }

    pub fn direction(&self) -> &Vector3<f64> {
        self.direction.as_ref()
    }

    pub fn point(&self) -> &Vector3<f64> {
        &self.point
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// The two silhouette lines of this cylinder in `camera`, or `None` when
    /// the camera center lies inside the cylinder or on its axis line.
    pub fn silhouette(&self, camera: &Camera) -> Option<[Vector3<f64>; 2]> {
        let r_align = rotation_to_y_axis(self.direction());
        let c = r_align * camera.center();
        let circle = rectify_circle(self, &r_align);
        let [l1, l2] = tangent_lines_from_point(&circle, [c.x, c.z])?;
        let lift = |l: Line2D| {
            let n = r_align.matrix().transpose() * Vector3::new(l.0.x, 0.0, l.0.y);
            camera.rotation() * n
        };
        Some([lift(l1), lift(l2)])
    }
}

/// Cross-section of a cylinder in the frame rotated by `r_align`. Assumes
/// `r_align` maps the cylinder axis to the y-axis.
pub fn rectify_circle(cyl: &Cylinder3D, r_align: &Rotation3<f64>) -> Circle2D {
    let p = r_align * cyl.point();
    Circle2D {
        tx: p.x,
        ty: p.z,
        r: cyl.radius(),
    }
}

/// The two tangents from `point` to `circle`, or `None` if `point` is not
/// strictly outside. Each line passes through `point`.
pub fn tangent_lines_from_point(circle: &Circle2D, point: [f64; 2]) -> Option<[Line2D; 2]> {
    let dx = circle.tx - point[0];
    let dy = circle.ty - point[1];
    let dist = dx.hypot(dy);
    if dist <= circle.r * (1.0 + 1e-12) {
        return None;
    }
    let base = dy.atan2(dx);
    let half = (circle.r / dist).asin();
    let line = |angle: f64| {
        // normal perpendicular to the tangent direction
        let normal = [-angle.sin(), angle.cos()];
        Line2D::through(point, normal)
    };
    Some([line(base + half).ok()?, line(base - half).ok()?])
}

/// Implicit dual quadric of a cylinder: apex `(w, 0)` and the rectified
/// dual conic of its cross-section.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualQuadricCylinder {
    pub apex: Vector4<f64>,
    pub r_align: Rotation3<f64>,
    pub conic: DualConic2D,
}

impl DualQuadricCylinder {
    pub fn from_cylinder(cyl: &Cylinder3D) -> Self {
        let r_align = rotation_to_y_axis(cyl.direction());
        let w = cyl.direction();
        Self {
            apex: Vector4::new(w.x, w.y, w.z, 0.0),
            r_align,
            conic: dual_conic_from_circle(&rectify_circle(cyl, &r_align)),
        }
    }

    /// Dense 4x4 envelope `D` in world coordinates.
    pub fn envelope(&self) -> Matrix4<f64> {
        let [d1, d2, d3, d4, d5, d6] = *self.conic.coeffs();
        let rect = Matrix4::new(
            d1, 0.0, d2, d3, //
            0.0, 0.0, 0.0, 0.0, //
            d2, 0.0, d4, d5, //
            d3, 0.0, d5, d6,
        );
        let mut h = Matrix4::identity();
        h.fixed_view_mut::<3, 3>(0, 0)
            .copy_from(self.r_align.matrix());
        h.transpose() * rect * h
    }
}

/// Lines after rotating the world so the cylinder axis is the y-axis.
#[derive(Debug, Clone, PartialEq)]
pub struct RectifiedProblem {
    pub r_align: Rotation3<f64>,
    pub lines: Vec<RectifiedLine>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RectifiedLine {
    pub line: Line2D,
    pub camera_id: String,
    /// Index of the originating observation.
    pub source: usize,
}

impl RectifiedProblem {
    /// Backprojects every observation; observations that fail (direction
    /// inconsistent or degenerate) are returned separately with their error.
    pub fn build(obs: &[LineObs<'_>], w: &Vector3<f64>, direction_tol: f64) -> (Self, Vec<(usize, Error)>) {
        let r_align = rotation_to_y_axis(w);
        let mut lines = Vec::with_capacity(obs.len());
        let mut rejected = Vec::new();
        for (i, o) in obs.iter().enumerate() {
            match backproject_line_2d(o.line, o.camera, &r_align, direction_tol) {
                Ok(line) => lines.push(RectifiedLine {
                    line,
                    camera_id: o.camera.id().to_owned(),
                    source: i,
                }),
                Err(e) => rejected.push((i, e)),
            }
        }
        (Self { r_align, lines }, rejected)
    }

    pub fn lines2d(&self) -> Vec<Line2D> {
        self.lines.iter().map(|l| l.line).collect()
    }
}

/// `P D P^T`, the image dual conic of the dual quadric `D`.
pub fn project_dual_quadric(camera: &Camera, d: &Matrix4<f64>) -> Matrix3<f64> {
    let p = camera.matrix();
    p * d * p.transpose()
}

/// `l^T R w`: zero when `l` is a silhouette of a cylinder with direction `w`.
pub fn direction_residual(line: &ImageLine, camera: &Camera, w: &Vector3<f64>) -> f64 {
    line.coeffs().dot(&(camera.rotation() * w))
}

/// Rotation taking `w` to the y-axis: the Rodrigues rotation about `w x y`,
/// identity for `w ~ +y` and a half turn about x for `w ~ -y`.
pub fn rotation_to_y_axis(w: &Vector3<f64>) -> Rotation3<f64> {
    let w = w.normalize();
    let axis = w.cross(&Y_AXIS);
    let s = axis.norm();
    if s < 1e-8 {
        if w.y > 0.0 {
            return Rotation3::identity();
        }
        return Rotation3::from_axis_angle(&Vector3::x_axis(), std::f64::consts::PI);
    }
    let angle = s.atan2(w.dot(&Y_AXIS));
    Rotation3::from_axis_angle(&Unit::new_unchecked(axis / s), angle)
}

/// Backprojects an image line to the rectified plane: `Pi = P'^T l` with the
/// world rotated by `r_align`, then `(pi1, pi3, pi4)`. Fails when the
/// y-component exceeds `direction_tol * |Pi|`.
pub fn backproject_line_2d(
    line: &ImageLine,
    camera: &Camera,
    r_align: &Rotation3<f64>,
    direction_tol: f64,
) -> Result<Line2D> {
    let pi: Vector4<f64> = camera.rotated(r_align).transpose() * line.coeffs();
    let ratio = pi.y.abs() / pi.norm();
    if !(ratio <= direction_tol) {
        return Err(Error::DirectionInconsistent { ratio });
    }
    Line2D::new(pi.x, pi.z, pi.w)
}

/// Dual conic `T d0 T^T` of a circle, in the gauge `d6 = -1`.
pub fn dual_conic_from_circle(c: &Circle2D) -> DualConic2D {
    let (tx, ty, r2) = (c.tx, c.ty, c.r * c.r);
    DualConic2D {
        d: [r2 - tx * tx, -tx * ty, -tx, r2 - ty * ty, -ty, -1.0],
    }
}

/// Recovers the circle of an on-manifold dual conic: with `d6 = -1`,
/// `tx = -d3`, `ty = -d5` and `r^2 = d1 + d3^2`.
pub fn circle_from_dual_conic(d: &DualConic2D) -> Result<Circle2D> {
    let g = d.gauge_d6().ok_or(Error::DegenerateConic)?;
    let [d1, _, d3, _, d5, _] = g.d;
    let r_squared = d1 + d3 * d3;
    if !(r_squared > 0.0) {
        return Err(Error::ImaginaryRadius { r_squared });
    }
    Circle2D::new(-d3, -d5, r_squared.sqrt())
}

/// Raw circle constraints `(d3 d5 - d2 d6, d5^2 - d3^2 + d1 d6 - d4 d6)`.
pub fn manifold_constraints(d: &[f64; 6]) -> (f64, f64) {
    let [d1, d2, d3, d4, d5, d6] = *d;
    (d3 * d5 - d2 * d6, d5 * d5 - d3 * d3 + d1 * d6 - d4 * d6)
}

/// Circle constraints evaluated on `d / |d|`.
pub fn manifold_residuals(d: &DualConic2D) -> (f64, f64) {
    manifold_constraints(&d.unit().d)
}

/// Signed tangency defect `|l . (tx, ty, 1)| - r` in scene units.
pub fn geometric_line_residual(line: &Line2D, c: &Circle2D) -> f64 {
    line.signed_distance(c.center()).abs() - c.r
}

/// `r^T d r`.
pub fn algebraic_residual(line: &Line2D, d: &DualConic2D) -> f64 {
    line.tangency_row()
        .iter()
        .zip(d.coeffs())
        .map(|(a, b)| a * b)
        .sum()
}

/// Lifts a rectified circle back to a world cylinder.
pub fn lift_circle_to_cylinder(c: &Circle2D, r_align: &Rotation3<f64>) -> Cylinder3D {
    let w = r_align.inverse() * Y_AXIS;
    let p = r_align.inverse() * Vector3::new(c.tx, 0.0, c.ty);
    Cylinder3D::new(w, p, c.r).expect("rotation of a valid circle is a valid cylinder")
}
