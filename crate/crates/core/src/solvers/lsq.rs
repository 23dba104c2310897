//! Constrained least squares: minimize `sum_i (r_i^T d r_i)^2` over dual
//! conics that are circles, with the gauge `d6 = -1`.
//!
//! The Lagrangian
//! `L = d^T M d + l1 (d3 d5 - d2 d6) + l2 (d5^2 - d3^2 + d1 d6 - d4 d6)`
//! has seven partial derivatives. Those with respect to `d1`, `d2`, `l1` and
//! `l2` are linear in `(d1, d2, l1, l2)`:
//!
//! ```text
//! d1 = d4 + d5^2 - d3^2    d2 = -d3 d5    l2 = 2 (Md)_1    l1 = -2 (Md)_2
//! ```
//!
//! Substituting them leaves three polynomials in `(d3, d4, d5)`: two cubics
//! (from `d3`, `d5`) and a quadratic (from `d4`). The quadratic is linear in
//! `d4` with coefficient `2n`, so `d4` is eliminated as well. The two
//! remaining bivariate cubics have at most nine common roots, found by
//! hiding `d3` in the Bezout resultant (degree nine).

use nalgebra::{Matrix3, SMatrix, SVector};

use super::Similarity;
use crate::error::{Error, Result};
use crate::geometry::{dual_conic_from_circle, Circle2D, Line2D};
use crate::poly::{self, MPoly};

type Poly3 = MPoly<3>;
type Matrix6 = SMatrix<f64, 6, 6>;

const D3: usize = 0;
const D4: usize = 1;
const D5: usize = 2;

/// Eigenvalues with relative imaginary part below this are treated as real.
const IMAG_TOL: f64 = 1e-5;

/// Relative residual below which a polished root is accepted.
const ROOT_TOL: f64 = 1e-9;

const NEWTON_ITERS: usize = 3;

/// Stationary equations of the Lagrangian after eliminating
/// `(d1, d2, l1, l2)`, in the unknowns `(d3, d4, d5)`.
#[derive(Debug, Clone)]
pub struct StationarySystem {
    moments: Matrix6,
    /// `dL/dd3`, `dL/dd4`, `dL/dd5`.
    pub equations: [Poly3; 3],
}

/// A stationary point of the Lagrangian (`d6 = -1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryPoint {
    pub d: [f64; 6],
    pub lambda: [f64; 2],
}

impl StationaryPoint {
    /// Circle of this point, or `None` when `r^2 <= 0`.
    pub fn circle(&self) -> Option<Circle2D> {
        let r2 = self.d[0] + self.d[2] * self.d[2];
        if r2 > 0.0 {
            Circle2D::new(-self.d[2], -self.d[4], r2.sqrt()).ok()
        } else {
            None
        }
    }
}

/// `d` as polynomials in `(d3, d4, d5)` on the constraint set.
fn conic_polys() -> [Poly3; 6] {
    let d3 = Poly3::var(D3);
    let d4 = Poly3::var(D4);
    let d5 = Poly3::var(D5);
    let d1 = &(&d4 + &(&d5 * &d5)) - &(&d3 * &d3);
    let d2 = -&(&d3 * &d5);
    [d1, d2, d3, d4, d5, Poly3::constant(-1.0)]
}

fn moment_matrix(lines: &[Line2D]) -> Matrix6 {
    lines.iter().fold(Matrix6::zeros(), |m, l| {
        let a = SVector::<f64, 6>::from(l.tangency_row());
        m + a * a.transpose()
    })
}

/// Builds the stationary system for at least four lines.
pub fn build_stationary_system(lines: &[Line2D]) -> Result<StationarySystem> {
    if lines.len() < 4 {
        return Err(Error::NotEnoughLines { required: 4, got: lines.len() });
    }
    // With d6 = -1 the (d1, d2, l1, l2) block is always invertible; the data
    // are degenerate when the normals do not span the plane (all lines
    // parallel), leaving the center unconstrained along them.
    let scatter = lines.iter().fold(nalgebra::Matrix2::zeros(), |m, l| {
        let n = nalgebra::Vector2::from(l.normal());
        m + n * n.transpose()
    });
    let eig = scatter.symmetric_eigenvalues();
    if eig.min() <= 1e-10 * lines.len() as f64 {
        return Err(Error::EliminationSingular);
    }

    let moments = moment_matrix(lines);
    let d = conic_polys();
    let md: [Poly3; 6] = std::array::from_fn(|k| {
        (0..6).fold(Poly3::zero(), |acc, j| &acc + &d[j].scale(moments[(k, j)]))
    });
    let two = |p: &Poly3| p.scale(2.0);
    // l2 = 2 (Md)_1, l1 = -2 (Md)_2
    let l2 = two(&md[0]);
    let l1 = -&two(&md[1]);
    let eq3 = &(&two(&md[2]) + &(&l1 * &d[4])) - &(&l2 * &d[2]).scale(2.0);
    let eq4 = &two(&md[3]) + &l2;
    let eq5 = &(&two(&md[4]) + &(&l1 * &d[2])) + &(&l2 * &d[4]).scale(2.0);
    Ok(StationarySystem {
        moments,
        equations: [eq3, eq4, eq5],
    })
}

impl StationarySystem {
    pub fn moments(&self) -> &Matrix6 {
        &self.moments
    }

    /// Recovers `(d1, d2, l1, l2)` from `(d3, d4, d5)`.
    pub fn back_substitute(&self, d3: f64, d4: f64, d5: f64) -> StationaryPoint {
        let d = [d4 + d5 * d5 - d3 * d3, -d3 * d5, d3, d4, d5, -1.0];
        let md = self.moments * SVector::<f64, 6>::from(d);
        StationaryPoint {
            d,
            lambda: [-2.0 * md[1], 2.0 * md[0]],
        }
    }

    /// `d^T M d`.
    pub fn cost(&self, d: &[f64; 6]) -> f64 {
        let v = SVector::<f64, 6>::from(*d);
        (v.transpose() * self.moments * v)[0]
    }

    pub fn lagrangian(&self, d: &[f64; 6], lambda: &[f64; 2]) -> f64 {
        let (c1, c2) = crate::geometry::manifold_constraints(d);
        self.cost(d) + lambda[0] * c1 + lambda[1] * c2
    }

    /// Gradient of the Lagrangian in `(d1, .., d5, l1, l2)` at fixed `d6`.
    pub fn lagrangian_gradient(&self, d: &[f64; 6], lambda: &[f64; 2]) -> [f64; 7] {
        let [_, _, d3, _, d5, d6] = *d;
        let [l1, l2] = *lambda;
        let md = self.moments * SVector::<f64, 6>::from(*d);
        let (c1, c2) = crate::geometry::manifold_constraints(d);
        [
            2.0 * md[0] + l2 * d6,
            2.0 * md[1] - l1 * d6,
            2.0 * md[2] + l1 * d5 - 2.0 * l2 * d3,
            2.0 * md[3] - l2 * d6,
            2.0 * md[4] + l1 * d3 + 2.0 * l2 * d5,
            c1,
            c2,
        ]
    }

    /// Scale of the gradient terms at a point, for relative comparisons.
    pub fn gradient_scale(&self, d: &[f64; 6], lambda: &[f64; 2]) -> f64 {
        let dn = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        2.0 * self.moments.norm() * dn + 2.0 * (lambda[0].abs() + lambda[1].abs()) * dn + dn * dn
    }
}

/// Result of [`solve_constrained_lsq`].
#[derive(Debug, Clone)]
pub struct LsqSolution {
    /// Minimum-cost circle.
    pub best: Circle2D,
    pub best_cost: f64,
    /// All real circles among the stationary points with their costs, in
    /// increasing order of cost.
    pub circles: Vec<(Circle2D, f64)>,
    /// Every real stationary point of the Lagrangian (at most nine),
    /// including those with `r^2 <= 0`.
    pub stationary: Vec<StationaryPoint>,
}

/// `sum_i (r_i^T d_c r_i)^2` for the circle's dual conic in the gauge
/// `d6 = -1`.
pub fn lsq_cost(lines: &[Line2D], c: &Circle2D) -> f64 {
    residual_cost(lines, dual_conic_from_circle(c).coeffs())
}

// Summing squared residuals avoids the cancellation in `d^T M d`.
fn residual_cost(lines: &[Line2D], d: &[f64; 6]) -> f64 {
    lines
        .iter()
        .map(|l| {
            let a = l.tangency_row();
            (0..6).map(|k| a[k] * d[k]).sum::<f64>().powi(2)
        })
        .sum()
}

/// Global minimizer of the algebraic cost over circles, found among all
/// real stationary points of the Lagrangian.
pub fn solve_constrained_lsq(lines: &[Line2D]) -> Result<LsqSolution> {
    let world = build_stationary_system(lines)?;
    let sim = Similarity::for_lines(lines);
    let local_lines: Vec<Line2D> = lines.iter().map(|l| sim.line_to_local(l)).collect();
    let local = build_stationary_system(&local_lines)?;
    let roots = stationary_roots(&local)?;

    let k = sim.scale();
    let mut stationary = Vec::with_capacity(roots.len());
    let mut circles = Vec::new();
    for (d3, d4, d5) in roots {
        // local circle parameters; r^2 may be non-positive
        let (tx, ty, r2) = (-d3, -d5, d4 + d5 * d5);
        let [wx, wy] = sim.point_to_world([tx, ty]);
        let wr2 = r2 * k * k;
        let p = world.back_substitute(-wx, wr2 - wy * wy, -wy);
        stationary.push(p);
        if let Some(c) = p.circle() {
            circles.push((c, residual_cost(lines, &p.d)));
        }
    }
    circles.sort_by(|a, b| a.1.total_cmp(&b.1));
    let Some(&(best, best_cost)) = circles.first() else {
        return Err(Error::NoRealCircle);
    };
    Ok(LsqSolution {
        best,
        best_cost,
        circles,
        stationary,
    })
}

/// All real roots `(d3, d4, d5)` of a stationary system.
fn stationary_roots(sys: &StationarySystem) -> Result<Vec<(f64, f64, f64)>> {
    let [eq3, eq4, eq5] = &sys.equations;
    // eq4 = a d4 + b(d3, d5)
    let a = eq4.coeff(&[0, 1, 0]);
    if !(a.abs() > 0.0) {
        return Err(Error::EliminationSingular);
    }
    let mut rest = eq4.clone();
    rest.add_term([0, 1, 0], -a);
    debug_assert_eq!(rest.degree_in(D4), 0);
    let d4_of = rest.scale(-1.0 / a);
    let f = eq3.substitute(D4, &d4_of);
    let g = eq5.substitute(D4, &d4_of);

    let fb = f.as_bivariate(D3, D5);
    let gb = g.as_bivariate(D3, D5);
    let bez = poly::bezout_matrix(&fb, &gb);
    let res = poly::poly_det(&bez);
    let scale = res.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let fs = f.max_abs_coeff();
    let gs = g.max_abs_coeff();
    if !(scale > 1e-14 * (fs * gs).powi(3)) {
        return Err(Error::NonFiniteSolutionSet);
    }
    let xs = poly::real_roots(poly::trim(&res, 1e-13), IMAG_TOL).ok_or(Error::NonFiniteSolutionSet)?;

    let pair = BivariatePair::new(&f, &g);
    let mut found: Vec<(f64, f64)> = Vec::new();
    for x in xs {
        for y in d5_candidates(&bez, &fb, &gb, x) {
            let (px, py) = pair.newton(x, y, NEWTON_ITERS);
            if pair.residual(px, py) > ROOT_TOL {
                continue;
            }
            let s = 1.0 + px.abs() + py.abs();
            if found.iter().all(|&(u, v)| (u - px).abs() + (v - py).abs() > 1e-7 * s) {
                found.push((px, py));
            }
        }
    }
    Ok(found
        .into_iter()
        .map(|(x, y)| (x, d4_of.eval(&[x, 0.0, y]), y))
        .collect())
}

/// Candidate `d5` values for a root `x` of the resultant: the kernel of the
/// Bezout matrix (which is `(1, y, y^2)` at a simple common root) and the
/// real roots of each cubic in `d5`.
fn d5_candidates(bez: &[Vec<Vec<f64>>], fb: &[Vec<f64>], gb: &[Vec<f64>], x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(7);
    let n = bez.len();
    if n == 3 {
        let m = Matrix3::from_fn(|i, j| poly::eval(&bez[i][j], x));
        let svd = m.svd(false, true);
        if let Some(v_t) = svd.v_t {
            let k = svd.singular_values.imin();
            let v = v_t.row(k);
            if v[0].abs() > 1e-12 {
                out.push(v[1] / v[0]);
            }
        }
    }
    for bi in [fb, gb] {
        let coeffs: Vec<f64> = bi.iter().map(|c| poly::eval(c, x)).collect();
        if let Some(r) = poly::real_roots(poly::trim(&coeffs, 1e-14), IMAG_TOL) {
            out.extend(r);
        }
    }
    out
}

/// Two bivariate polynomials in `(d3, d5)` with their Jacobian, for Newton
/// polishing.
struct BivariatePair {
    f: Poly3,
    g: Poly3,
    df: [Poly3; 2],
    dg: [Poly3; 2],
    fs: f64,
    gs: f64,
}

impl BivariatePair {
    fn new(f: &Poly3, g: &Poly3) -> Self {
        Self {
            f: f.clone(),
            g: g.clone(),
            df: [f.partial(D3), f.partial(D5)],
            dg: [g.partial(D3), g.partial(D5)],
            fs: f.terms().map(|(_, c)| c.abs()).sum(),
            gs: g.terms().map(|(_, c)| c.abs()).sum(),
        }
    }

    fn residual(&self, x: f64, y: f64) -> f64 {
        let p = [x, 0.0, y];
        let m = (1.0 + x.abs() + y.abs()).powi(3);
        (self.f.eval(&p).abs() / (self.fs * m)).max(self.g.eval(&p).abs() / (self.gs * m))
    }

    fn newton(&self, mut x: f64, mut y: f64, iters: usize) -> (f64, f64) {
        let mut res = self.residual(x, y);
        for _ in 0..iters {
            let p = [x, 0.0, y];
            let (f, g) = (self.f.eval(&p), self.g.eval(&p));
            let (a, b) = (self.df[0].eval(&p), self.df[1].eval(&p));
            let (c, d) = (self.dg[0].eval(&p), self.dg[1].eval(&p));
            let det = a * d - b * c;
            if det == 0.0 || !det.is_finite() || res == 0.0 {
                break;
            }
            let (nx, ny) = (x - (d * f - b * g) / det, y - (-c * f + a * g) / det);
            let nres = self.residual(nx, ny);
            if !(nres < res) {
                break;
            }
            (x, y, res) = (nx, ny, nres);
        }
        (x, y)
    }
}
