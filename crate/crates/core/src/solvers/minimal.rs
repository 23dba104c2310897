//! Minimal solver: the circle(s) tangent to three lines.
//!
//! The three tangency equations `r_i^T d r_i = 0` are linear in the six
//! conic coefficients and leave a three dimensional nullspace. Writing
//! `d = alpha * d_alpha + beta * d_beta + d_gamma` and substituting into the
//! two circle constraints gives a pair of bivariate quadratics with at most
//! four common roots. They are solved by eliminating one unknown with the
//! resultant, which leaves a quartic.

use nalgebra::{SMatrix, Vector3};

use super::{dedup_circles, Similarity};
use crate::error::{Error, Result};
use crate::geometry::{algebraic_residual, circle_from_dual_conic, Circle2D, DualConic2D, Line2D};
use crate::poly;

/// Relative size below which the resultant's leading coefficient is treated
/// as vanished.
const LEADING_TOL: f64 = 1e-10;

/// Radii at or below this (in the preconditioned frame) are point circles.
const MIN_LOCAL_RADIUS: f64 = 1e-8;

/// Eigenvalues with relative imaginary part below this are treated as real.
const IMAG_TOL: f64 = 1e-6;

/// Newton iterations allowed per root.
const NEWTON_ITERS: usize = 3;

/// Directions (in the basis of [`nullspace_parametrization`]) used in turn as the
/// affine chart `gamma = 1`. The first is the `d6` direction; the others
/// catch circles whose `d6` component is tiny after normalization, such as
/// a large circle tangent to three nearly concurrent lines.
const CHARTS: [[f64; 3]; 3] = [[0.0, 0.0, 1.0], [0.62, 0.31, 0.72], [-0.27, 0.68, 0.68]];

/// Relative distance below which two circles are the same solution.
const DEDUP_TOL: f64 = 1e-6;

/// Rotations of the `(alpha, beta)` plane tried before eliminating `beta`.
const GAUGE_ANGLES: [f64; 2] = [0.0, 0.6154797086703873];

/// Affine parametrization `d = alpha * d_alpha + beta * d_beta + d_gamma` of
/// the conics tangent to three lines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NullspaceBasis {
    pub d_alpha: [f64; 6],
    pub d_beta: [f64; 6],
    pub d_gamma: [f64; 6],
}

impl NullspaceBasis {
    /// Same nullspace with `d_gamma` along the unit coordinate vector `v`.
    fn in_chart(&self, v: &Vector3<f64>) -> Self {
        let helper = if v.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
        let e1 = v.cross(&helper).normalize();
        let e2 = v.cross(&e1);
        let combine = |e: &Vector3<f64>| -> [f64; 6] {
            std::array::from_fn(|j| e.x * self.d_alpha[j] + e.y * self.d_beta[j] + e.z * self.d_gamma[j])
        };
        Self {
            d_alpha: combine(&e1),
            d_beta: combine(&e2),
            d_gamma: combine(v),
        }
    }

    pub fn conic(&self, alpha: f64, beta: f64) -> [f64; 6] {
        std::array::from_fn(|k| alpha * self.d_alpha[k] + beta * self.d_beta[k] + self.d_gamma[k])
    }
}

/// Two quadratics in `(alpha, beta)`, coefficients ordered
/// `(alpha^2, alpha*beta, beta^2, alpha, beta, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticPair {
    pub q: [[f64; 6]; 2],
}

fn eval_quadratic(c: &[f64; 6], a: f64, b: f64) -> f64 {
    c[0] * a * a + c[1] * a * b + c[2] * b * b + c[3] * a + c[4] * b + c[5]
}

fn grad_quadratic(c: &[f64; 6], a: f64, b: f64) -> [f64; 2] {
    [2.0 * c[0] * a + c[1] * b + c[3], c[1] * a + 2.0 * c[2] * b + c[4]]
}

impl QuadraticPair {
    /// Substitutes the parametrization into both circle constraints.
    pub fn from_basis(basis: &NullspaceBasis) -> Self {
        let forms = [c1_form, c2_form];
        let (a, b, g) = (&basis.d_alpha, &basis.d_beta, &basis.d_gamma);
        let q = forms.map(|f| {
            [
                f(a, a),
                2.0 * f(a, b),
                f(b, b),
                2.0 * f(a, g),
                2.0 * f(b, g),
                f(g, g),
            ]
        });
        Self { q }
    }

    pub fn eval(&self, alpha: f64, beta: f64) -> [f64; 2] {
        self.q.map(|c| eval_quadratic(&c, alpha, beta))
    }

    fn scale(&self) -> [f64; 2] {
        self.q.map(|c| c.iter().fold(0.0f64, |m, v| m.max(v.abs())))
    }

    /// Coefficients in rotated coordinates `alpha = c u - s v`,
    /// `beta = s u + c v`.
    fn rotated(&self, angle: f64) -> Self {
        let (c, s) = (angle.cos(), angle.sin());
        let q = self.q.map(|k| {
            let [aa, ab, bb, a, b, one] = k;
            [
                aa * c * c + ab * c * s + bb * s * s,
                -2.0 * aa * c * s + ab * (c * c - s * s) + 2.0 * bb * c * s,
                aa * s * s - ab * c * s + bb * c * c,
                a * c + b * s,
                -a * s + b * c,
                one,
            ]
        });
        Self { q }
    }

    /// Relative residual of the pair at a point.
    fn residual(&self, a: f64, b: f64) -> f64 {
        let [s1, s2] = self.scale();
        let m = (1.0 + a.abs() + b.abs()).powi(2);
        let [r1, r2] = self.eval(a, b);
        (r1.abs() / (s1 * m).max(1e-300)).max(r2.abs() / (s2 * m).max(1e-300))
    }

    fn newton(&self, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
        let mut res = self.residual(a, b);
        for _ in 0..iters {
            let [f1, f2] = self.eval(a, b);
            let [j11, j12] = grad_quadratic(&self.q[0], a, b);
            let [j21, j22] = grad_quadratic(&self.q[1], a, b);
            let det = j11 * j22 - j12 * j21;
            if det == 0.0 || !det.is_finite() || res == 0.0 {
                break;
            }
            let da = (j22 * f1 - j12 * f2) / det;
            let db = (-j21 * f1 + j11 * f2) / det;
            let (na, nb) = (a - da, b - db);
            let nres = self.residual(na, nb);
            if !(nres < res) {
                break;
            }
            (a, b, res) = (na, nb, nres);
        }
        (a, b)
    }
}

// symmetric bilinear forms of the circle constraints
fn c1_form(x: &[f64; 6], y: &[f64; 6]) -> f64 {
    // d3 d5 - d2 d6
    0.5 * (x[2] * y[4] + x[4] * y[2]) - 0.5 * (x[1] * y[5] + x[5] * y[1])
}

fn c2_form(x: &[f64; 6], y: &[f64; 6]) -> f64 {
    // d5^2 - d3^2 + d1 d6 - d4 d6
    x[4] * y[4] - x[2] * y[2] + 0.5 * (x[0] * y[5] + x[5] * y[0]) - 0.5 * (x[3] * y[5] + x[5] * y[3])
}

/// Nullspace of the three tangency equations, rotated so that `d_gamma` has
/// the largest `|d6|` of all unit vectors in it and `d_alpha`, `d_beta` have
/// `d6 = 0`. Solutions missed by the affine gauge therefore all have
/// `d6 = 0`, i.e. are not circles.
pub fn nullspace_parametrization(lines: &[Line2D; 3]) -> Result<NullspaceBasis> {
    // concurrent lines are only tangent to point circles at their meet
    let m = nalgebra::Matrix3::from_rows(&lines.map(|l| l.coeffs().transpose()));
    let norms: f64 = lines.iter().map(|l| l.coeffs().norm()).product();
    if m.determinant().abs() <= 1e-10 * norms {
        return Err(Error::DegenerateLines);
    }
    let mut a = SMatrix::<f64, 6, 6>::zeros();
    for (i, l) in lines.iter().enumerate() {
        a.set_row(i, &SMatrix::<f64, 1, 6>::from(l.tangency_row()));
    }
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let mut order: Vec<usize> = (0..6).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let s = |k: usize| svd.singular_values[order[k]];
    if !(s(2) > 1e-10 * s(0)) {
        return Err(Error::DegenerateLines);
    }
    let null: [[f64; 6]; 3] =
        std::array::from_fn(|k| std::array::from_fn(|j| v_t[(order[3 + k], j)]));

    let d6 = Vector3::new(null[0][5], null[1][5], null[2][5]);
    let n6 = d6.norm();
    if n6 < 1e-12 {
        return Err(Error::DegenerateLines);
    }
    let e3 = d6 / n6;
    let helper = if e3.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let e1 = e3.cross(&helper).normalize();
    let e2 = e3.cross(&e1);
    let combine = |e: &Vector3<f64>| -> [f64; 6] {
        std::array::from_fn(|j| e.x * null[0][j] + e.y * null[1][j] + e.z * null[2][j])
    };
    Ok(NullspaceBasis {
        d_alpha: combine(&e1),
        d_beta: combine(&e2),
        d_gamma: combine(&e3),
    })
}

/// Real common roots of two bivariate quadratics (at most four).
///
/// `beta` is eliminated with the resultant of the pair viewed as quadratics
/// in `beta`; the roots of the resulting quartic in `alpha` come from the
/// companion matrix, `beta` is back-substituted and every root gets up to
/// three Newton steps on the original pair.
pub fn solve_quadratic_pair(q: &QuadraticPair) -> Result<Vec<(f64, f64)>> {
    let [s1, s2] = q.scale();
    if s1 == 0.0 || s2 == 0.0 {
        return Err(Error::NonFiniteSolutionSet);
    }
    let mut last_err = Error::NonFiniteSolutionSet;
    for (attempt, &angle) in GAUGE_ANGLES.iter().enumerate() {
        let last = attempt + 1 == GAUGE_ANGLES.len();
        let rq = q.rotated(angle);
        let res = beta_resultant(&rq);
        let scale = res.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        if !(scale > 1e-13 * (s1 * s2).powi(2)) {
            last_err = Error::NonFiniteSolutionSet;
            continue;
        }
        if res[4].abs() < LEADING_TOL * scale && !last {
            continue;
        }
        let trimmed = poly::trim(&res, LEADING_TOL);
        let Some(us) = poly::real_roots(trimmed, IMAG_TOL) else {
            continue;
        };
        let (c, s) = (angle.cos(), angle.sin());
        let mut out: Vec<(f64, f64)> = Vec::new();
        for u in us {
            for v in beta_candidates(&rq, u) {
                let (a, b) = q.newton(c * u - s * v, s * u + c * v, NEWTON_ITERS);
                if q.residual(a, b) > 1e-9 {
                    continue;
                }
                let scale = 1.0 + a.abs() + b.abs();
                if out
                    .iter()
                    .all(|&(x, y)| (x - a).abs() + (y - b).abs() > 1e-7 * scale)
                {
                    out.push((a, b));
                }
            }
        }
        return Ok(out);
    }
    Err(last_err)
}

/// Resultant with respect to `beta` as a polynomial in `alpha` (degree <= 4).
fn beta_resultant(q: &QuadraticPair) -> Vec<f64> {
    let parts = |c: &[f64; 6]| -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        // c2 beta^2 + (c4 + c1 alpha) beta + (c5 + c3 alpha + c0 alpha^2)
        (vec![c[2]], vec![c[4], c[1]], vec![c[5], c[3], c[0]])
    };
    let (a1, b1, c1) = parts(&q.q[0]);
    let (a2, b2, c2) = parts(&q.q[1]);
    let ac = poly::sub(&poly::mul(&a1, &c2), &poly::mul(&a2, &c1));
    let ab = poly::sub(&poly::mul(&a1, &b2), &poly::mul(&a2, &b1));
    let bc = poly::sub(&poly::mul(&b1, &c2), &poly::mul(&b2, &c1));
    let mut r = poly::sub(&poly::mul(&ac, &ac), &poly::mul(&ab, &bc));
    r.resize(5, 0.0);
    r
}

/// Candidate `beta` values for a root `alpha` of the resultant: the common
/// root formula plus the roots of each quadratic in `beta`.
fn beta_candidates(q: &QuadraticPair, a: f64) -> Vec<f64> {
    let coeffs = |c: &[f64; 6]| [c[5] + c[3] * a + c[0] * a * a, c[4] + c[1] * a, c[2]];
    let p1 = coeffs(&q.q[0]);
    let p2 = coeffs(&q.q[1]);
    let mut out = Vec::with_capacity(5);
    let den = p1[2] * p2[1] - p2[2] * p1[1];
    let num = p1[2] * p2[0] - p2[2] * p1[0];
    if den != 0.0 && (num / den).is_finite() {
        out.push(-num / den);
    }
    for p in [p1, p2] {
        if let Some(r) = poly::real_roots(poly::trim(&p, 1e-14), IMAG_TOL) {
            out.extend(r);
        }
    }
    out
}

/// Circles tangent to three lines (at most four), via the nullspace
/// parametrization and [`solve_quadratic_pair`]. Lines are preconditioned by
/// a similarity before solving.
pub fn solve_minimal_three_lines(r1: &Line2D, r2: &Line2D, r3: &Line2D) -> Result<Vec<Circle2D>> {
    let world = [*r1, *r2, *r3];
    let sim = Similarity::for_lines(&world);
    let local = world.map(|l| sim.line_to_local(&l));
    let basis = nullspace_parametrization(&local)?;
    let mut candidates: Vec<(Circle2D, f64)> = Vec::new();
    let mut first_err = None;
    for chart in CHARTS {
        let b = basis.in_chart(&Vector3::from(chart).normalize());
        let roots = match solve_quadratic_pair(&QuadraticPair::from_basis(&b)) {
            Ok(r) => r,
            Err(e) => {
                first_err.get_or_insert(e);
                continue;
            }
        };
        for (a, be) in roots {
            let Some(c) = DualConic2D::new(b.conic(a, be))
                .ok()
                .and_then(|d| circle_from_dual_conic(&d).ok())
            else {
                continue;
            };
            // point circles are rank-one conics through a common point
            if c.radius() <= MIN_LOCAL_RADIUS {
                continue;
            }
            if let Some(c) = sim.circle_to_world(&c) {
                let c = polish_circle(&world, c);
                candidates.push((c, max_unit_residual(&world, &c)));
            }
        }
        // three lines in general position have exactly four tangent circles
        let mut distinct: Vec<Circle2D> = candidates.iter().map(|(c, _)| *c).collect();
        dedup_circles(&mut distinct, DEDUP_TOL);
        if distinct.len() >= 4 {
            break;
        }
    }
    if candidates.is_empty() {
        if let Some(e) = first_err {
            return Err(e);
        }
    }
    candidates.sort_by(|x, y| x.1.total_cmp(&y.1));
    let mut circles: Vec<Circle2D> = candidates.into_iter().map(|(c, _)| c).collect();
    dedup_circles(&mut circles, DEDUP_TOL);
    if circles.is_empty() {
        return Err(Error::NoRealCircle);
    }
    Ok(circles)
}

fn max_unit_residual(lines: &[Line2D; 3], c: &Circle2D) -> f64 {
    let d = c.dual_conic().unit();
    lines
        .iter()
        .map(|l| algebraic_residual(l, &d).abs())
        .fold(0.0, f64::max)
}

/// Newton steps on `u_i^2 - r^2 = 0` in circle parameters, where `u_i` is
/// the signed distance of the center to line `i`. Steps are kept only
/// while they reduce the residual.
fn polish_circle(lines: &[Line2D; 3], mut c: Circle2D) -> Circle2D {
    let mut res = max_unit_residual(lines, &c);
    for _ in 0..NEWTON_ITERS {
        if res == 0.0 {
            break;
        }
        let mut j = nalgebra::Matrix3::zeros();
        let mut f = Vector3::zeros();
        for (i, l) in lines.iter().enumerate() {
            let u = l.signed_distance(c.center());
            let [a, b] = l.normal();
            f[i] = u * u - c.radius() * c.radius();
            j[(i, 0)] = 2.0 * u * a;
            j[(i, 1)] = 2.0 * u * b;
            j[(i, 2)] = -2.0 * c.radius();
        }
        let Some(step) = j.lu().solve(&f) else { break };
        let Ok(next) = Circle2D::new(c.tx() - step[0], c.ty() - step[1], c.radius() - step[2]) else {
            break;
        };
        let next_res = max_unit_residual(lines, &next);
        if !(next_res < res) {
            break;
        }
        (c, res) = (next, next_res);
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::geometric_line_residual;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn line(a: f64, b: f64, c: f64) -> Line2D {
        Line2D::new(a, b, c).unwrap()
    }

    fn tangent(c: &Circle2D, phi: f64) -> Line2D {
        let n = [phi.cos(), phi.sin()];
        Line2D::through([c.tx() + c.radius() * n[0], c.ty() + c.radius() * n[1]], n).unwrap()
    }

    /// Independent oracle: the circles tangent to three lines have centers
    /// solving `n_i . t + c_i = s_i r` for sign patterns `s`.
    fn sign_pattern_oracle(lines: &[Line2D; 3]) -> Vec<Circle2D> {
        let mut out = Vec::new();
        for signs in [[1.0, 1.0, 1.0], [1.0, 1.0, -1.0], [1.0, -1.0, 1.0], [-1.0, 1.0, 1.0]] {
            let m = nalgebra::Matrix3::from_fn(|i, j| match j {
                0 => lines[i].normal()[0],
                1 => lines[i].normal()[1],
                _ => -signs[i],
            });
            let rhs = nalgebra::Vector3::from_fn(|i, _| -lines[i].offset());
            if let Some(x) = m.lu().solve(&rhs) {
                if let Ok(c) = Circle2D::new(x.x, x.y, x.z.abs()) {
                    out.push(c);
                }
            }
        }
        out
    }

    fn contains(set: &[Circle2D], c: &Circle2D, tol: f64) -> bool {
        set.iter().any(|s| {
            (s.tx() - c.tx()).abs() < tol && (s.ty() - c.ty()).abs() < tol && (s.radius() - c.radius()).abs() < tol
        })
    }

    #[test]
    fn unit_circle_tangents_are_representable() {
        let lines = [line(1.0, 0.0, -1.0), line(1.0, 0.0, 1.0), line(0.0, 1.0, -1.0)];
        let basis = nullspace_parametrization(&lines).unwrap();
        // project the unit circle's conic onto span(d_alpha, d_beta, d_gamma)
        let target = [1.0, 0.0, 0.0, 1.0, 0.0, -1.0];
        let b = [basis.d_alpha, basis.d_beta, basis.d_gamma];
        let mut proj = [0.0; 6];
        for v in &b {
            let dot: f64 = v.iter().zip(&target).map(|(x, y)| x * y).sum();
            for k in 0..6 {
                proj[k] += dot * v[k];
            }
        }
        let err: f64 = proj.iter().zip(&target).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        assert!(err < 1e-12);
    }

    #[test]
    fn repeated_line_is_degenerate() {
        let l = line(1.0, 0.0, -1.0);
        assert_eq!(nullspace_parametrization(&[l, l, line(0.0, 1.0, 2.0)]), Err(Error::DegenerateLines));
        assert_eq!(solve_minimal_three_lines(&l, &l, &line(0.0, 1.0, 2.0)), Err(Error::DegenerateLines));
    }

    #[test]
    fn basis_vectors_satisfy_tangency() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let lines: [Line2D; 3] = std::array::from_fn(|_| {
                let phi: f64 = rng.random_range(0.0..6.3);
                line(phi.cos(), phi.sin(), rng.random_range(-5.0..5.0))
            });
            let basis = nullspace_parametrization(&lines).unwrap();
            for v in [basis.d_alpha, basis.d_beta, basis.d_gamma] {
                for l in &lines {
                    let r: f64 = l.tangency_row().iter().zip(&v).map(|(a, b)| a * b).sum();
                    assert!(r.abs() < 1e-12);
                }
            }
            assert!(basis.d_alpha[5].abs() < 1e-14 && basis.d_beta[5].abs() < 1e-14);
        }
    }

    #[test]
    fn quadratic_pair_circle_and_line() {
        // a^2 + b^2 - 1, a - b
        let q = QuadraticPair {
            q: [[1.0, 0.0, 1.0, 0.0, 0.0, -1.0], [0.0, 0.0, 0.0, 1.0, -1.0, 0.0]],
        };
        let mut sols = solve_quadratic_pair(&q).unwrap();
        sols.sort_by(|x, y| x.0.total_cmp(&y.0));
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(sols.len(), 2);
        assert!((sols[0].0 + h).abs() < 1e-12 && (sols[0].1 + h).abs() < 1e-12);
        assert!((sols[1].0 - h).abs() < 1e-12 && (sols[1].1 - h).abs() < 1e-12);
    }

    #[test]
    fn quadratic_pair_without_real_roots() {
        let q = QuadraticPair {
            q: [[1.0, 0.0, 1.0, 0.0, 0.0, 1.0], [0.0, 0.0, 0.0, 1.0, -1.0, 0.0]],
        };
        assert!(solve_quadratic_pair(&q).unwrap().is_empty());
    }

    #[test]
    fn identical_quadratics_have_no_finite_solution_set() {
        let c = [1.0, 0.0, 1.0, 0.0, 0.0, -1.0];
        let q = QuadraticPair { q: [c, c] };
        assert_eq!(solve_quadratic_pair(&q), Err(Error::NonFiniteSolutionSet));
    }

    /// Grid-seeded Newton oracle for a random quadratic pair.
    fn grid_oracle(q: &QuadraticPair) -> Vec<(f64, f64)> {
        let mut found: Vec<(f64, f64)> = Vec::new();
        let n = 60;
        for i in 0..=n {
            for j in 0..=n {
                let (mut a, mut b) = (-6.0 + 12.0 * i as f64 / n as f64, -6.0 + 12.0 * j as f64 / n as f64);
                for _ in 0..60 {
                    let [f1, f2] = q.eval(a, b);
                    let [j11, j12] = grad_quadratic(&q.q[0], a, b);
                    let [j21, j22] = grad_quadratic(&q.q[1], a, b);
                    let det = j11 * j22 - j12 * j21;
                    if det.abs() < 1e-14 {
                        break;
                    }
                    a -= (j22 * f1 - j12 * f2) / det;
                    b -= (-j21 * f1 + j11 * f2) / det;
                }
                let [f1, f2] = q.eval(a, b);
                if f1.abs() < 1e-11 && f2.abs() < 1e-11 && a.abs() < 8.0 && b.abs() < 8.0 {
                    if found.iter().all(|&(x, y)| (x - a).hypot(y - b) > 1e-6) {
                        found.push((a, b));
                    }
                }
            }
        }
        found
    }

    #[test]
    fn quadratic_pair_matches_grid_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut checked = 0;
        for _ in 0..40 {
            let q = QuadraticPair {
                q: std::array::from_fn(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0))),
            };
            let oracle = grid_oracle(&q);
            let sols = solve_quadratic_pair(&q).unwrap();
            // only compare roots inside the oracle's window
            let inside: Vec<_> = sols.iter().filter(|(a, b)| a.abs() < 5.0 && b.abs() < 5.0).collect();
            for (a, b) in &inside {
                assert!(oracle.iter().any(|(x, y)| (x - a).hypot(y - b) < 1e-6), "spurious root");
            }
            for (x, y) in oracle.iter().filter(|(a, b)| a.abs() < 5.0 && b.abs() < 5.0) {
                assert!(sols.iter().any(|(a, b)| (x - a).hypot(y - b) < 1e-6), "missed root ({x}, {y})");
                checked += 1;
            }
        }
        assert!(checked > 20);
    }

    #[test]
    fn parallel_pair_and_cross_line() {
        let sols = solve_minimal_three_lines(&line(1.0, 0.0, -1.0), &line(1.0, 0.0, 1.0), &line(0.0, 1.0, -1.0)).unwrap();
        assert_eq!(sols.len(), 2);
        assert!(contains(&sols, &Circle2D::new(0.0, 0.0, 1.0).unwrap(), 1e-10));
        assert!(contains(&sols, &Circle2D::new(0.0, 2.0, 1.0).unwrap(), 1e-10));
    }

    #[test]
    fn right_isosceles_triangle() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let lines = [line(1.0, 0.0, 0.0), line(0.0, 1.0, 0.0), line(s, s, -2.0 * s)];
        let sols = solve_minimal_three_lines(&lines[0], &lines[1], &lines[2]).unwrap();
        assert_eq!(sols.len(), 4);
        for c in &sols {
            for l in &lines {
                assert!(geometric_line_residual(l, c).abs() < 1e-10);
            }
        }
        let k = 2.0 - std::f64::consts::SQRT_2;
        assert!(contains(&sols, &Circle2D::new(k, k, k).unwrap(), 1e-10));
        for c in sign_pattern_oracle(&lines) {
            assert!(contains(&sols, &c, 1e-9));
        }
    }

    #[test]
    fn concurrent_lines_are_degenerate() {
        let lines = [line(1.0, 0.0, -1.0), line(0.0, 1.0, -1.0), line(1.0, 1.0, -2.0)];
        assert_eq!(solve_minimal_three_lines(&lines[0], &lines[1], &lines[2]), Err(Error::DegenerateLines));
    }

    #[test]
    fn random_tangents_recover_ground_truth() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..2000 {
            let c = Circle2D::new(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0), rng.random_range(0.5..2.0)).unwrap();
            let lines: [Line2D; 3] = std::array::from_fn(|_| tangent(&c, rng.random_range(0.0..std::f64::consts::TAU)));
            let Ok(sols) = solve_minimal_three_lines(&lines[0], &lines[1], &lines[2]) else {
                panic!("solver failed on {c:?} {lines:?}");
            };
            assert!(sols.len() <= 4);
            assert!(contains(&sols, &c, 1e-8), "{c:?} not in {sols:?}");
            for s in &sols {
                let d = s.dual_conic().unit();
                for l in &lines {
                    assert!(algebraic_residual(l, &d).abs() < 1e-8, "{} {s:?} {c:?}", algebraic_residual(l, &d));
                }
            }
        }
    }

    proptest! {
        #[test]
        fn similarity_equivariance(
            seed in 0u64..10_000,
            dx in -20.0..20.0f64, dy in -20.0..20.0f64, k in 0.05..20.0f64,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let lines: [Line2D; 3] = std::array::from_fn(|_| {
                let phi: f64 = rng.random_range(0.0..6.3);
                line(phi.cos(), phi.sin(), rng.random_range(-3.0..3.0))
            });
            let Ok(base) = solve_minimal_three_lines(&lines[0], &lines[1], &lines[2]) else { return Ok(()) };
            // x -> k x + (dx, dy)
            let moved = lines.map(|l| {
                let [a, b] = l.normal();
                line(a, b, k * l.offset() - a * dx - b * dy)
            });
            let out = solve_minimal_three_lines(&moved[0], &moved[1], &moved[2]).unwrap();
            prop_assert_eq!(out.len(), base.len());
            for c in &base {
                let m = Circle2D::new(k * c.tx() + dx, k * c.ty() + dy, k * c.radius()).unwrap();
                let tol = 1e-8 * (1.0 + m.tx().abs() + m.ty().abs() + m.radius());
                prop_assert!(contains(&out, &m, tol), "{:?} missing from {:?}", m, out);
            }
        }
    }
}
