//! Brute-force reference for the circle-constrained least-squares problem.
//!
//! For unit-normal lines `(a, b, c)` and a circle `(x, y, r)` the residual
//! in the `d6 = -1` gauge is `r^2 - s^2` with `s = a x + b y + c`. For a
//! fixed center the optimal `r^2` is the mean of `s^2`, so the problem is a
//! two-dimensional minimization of `sum (s_i^2 - mean s^2)^2`, solved here by
//! Levenberg-Marquardt from a grid of starting centers.

use cyltri::Line2D;

pub struct OracleFit {
    pub center: [f64; 2],
    pub r_squared: f64,
    pub cost: f64,
}

fn residuals(lines: &[[f64; 3]], p: [f64; 2]) -> (Vec<f64>, f64) {
    let s2: Vec<f64> = lines
        .iter()
        .map(|l| (l[0] * p[0] + l[1] * p[1] + l[2]).powi(2))
        .collect();
    let mean = s2.iter().sum::<f64>() / s2.len() as f64;
    (s2.iter().map(|v| v - mean).collect(), mean)
}

fn cost(lines: &[[f64; 3]], p: [f64; 2]) -> f64 {
    residuals(lines, p).0.iter().map(|g| g * g).sum()
}

fn jacobian(lines: &[[f64; 3]], p: [f64; 2]) -> Vec<[f64; 2]> {
    let raw: Vec<[f64; 2]> = lines
        .iter()
        .map(|l| {
            let s = l[0] * p[0] + l[1] * p[1] + l[2];
            [2.0 * s * l[0], 2.0 * s * l[1]]
        })
        .collect();
    let n = raw.len() as f64;
    let mx = raw.iter().map(|j| j[0]).sum::<f64>() / n;
    let my = raw.iter().map(|j| j[1]).sum::<f64>() / n;
    raw.iter().map(|j| [j[0] - mx, j[1] - my]).collect()
}

fn levenberg_marquardt(lines: &[[f64; 3]], mut p: [f64; 2]) -> [f64; 2] {
    let mut mu = 1e-3;
    let mut f = cost(lines, p);
    for _ in 0..500 {
        let (g, _) = residuals(lines, p);
        let j = jacobian(lines, p);
        let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (ji, gi) in j.iter().zip(&g) {
            a11 += ji[0] * ji[0];
            a12 += ji[0] * ji[1];
            a22 += ji[1] * ji[1];
            b1 += ji[0] * gi;
            b2 += ji[1] * gi;
        }
        if b1.abs() + b2.abs() < 1e-300 {
            break;
        }
        let mut improved = false;
        while mu < 1e20 {
            let (m11, m22) = (a11 + mu * a11.max(1e-300), a22 + mu * a22.max(1e-300));
            let det = m11 * m22 - a12 * a12;
            let dx = -(m22 * b1 - a12 * b2) / det;
            let dy = -(m11 * b2 - a12 * b1) / det;
            let q = [p[0] + dx, p[1] + dy];
            let fq = cost(lines, q);
            if fq < f {
                let small = (f - fq) <= 1e-16 * f && dx.hypot(dy) <= 1e-15 * (1.0 + p[0].hypot(p[1]));
                p = q;
                f = fq;
                mu = (mu / 3.0).max(1e-12);
                improved = true;
                if small {
                    return p;
                }
                break;
            }
            mu *= 4.0;
        }
        if !improved {
            break;
        }
    }
    p
}

/// Best fit over a `grid x grid` lattice of starts spanning the region the
/// lines pass through.
pub fn oracle_lsq(lines: &[Line2D], grid: usize) -> OracleFit {
    let ls: Vec<[f64; 3]> = lines.iter().map(|l| {
        let c = l.coeffs();
        let n = c.x.hypot(c.y);
        [c.x / n, c.y / n, c.z / n]
    }).collect();
    // span: foot points of the lines from the origin
    let extent = ls.iter().map(|l| l[2].abs()).fold(1.0, f64::max);
    let mut best: Option<([f64; 2], f64)> = None;
    for i in 0..grid {
        for j in 0..grid {
            let u = |k: usize| -extent + 2.0 * extent * (k as f64 + 0.5) / grid as f64;
            let p = levenberg_marquardt(&ls, [u(i), u(j)]);
            let c = cost(&ls, p);
            if best.is_none_or(|(_, bc)| c < bc) {
                best = Some((p, c));
            }
        }
    }
    let (p, c) = best.expect("grid is non-empty");
    OracleFit {
        center: p,
        r_squared: residuals(&ls, p).1,
        cost: c,
    }
}
