//! Small polynomial kernels used by the conic solvers.
//!
//! Univariate polynomials are plain coefficient slices in ascending order of
//! degree. Real roots come from the eigenvalues of a (scaled) companion
//! matrix followed by Newton polishing. [`MPoly`] is a sparse multivariate
//! polynomial with a fixed number of variables, enough to form and
//! manipulate the stationary systems symbolically.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;

pub fn eval(p: &[f64], x: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

pub fn derivative(p: &[f64]) -> Vec<f64> {
    p.iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| k as f64 * c)
        .collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| a.get(i).copied().unwrap_or(0.0) + b.get(i).copied().unwrap_or(0.0))
        .collect()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| a.get(i).copied().unwrap_or(0.0) - b.get(i).copied().unwrap_or(0.0))
        .collect()
}

pub fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Drops highest-degree coefficients with magnitude `<= rel_tol * max |c|`.
pub fn trim(p: &[f64], rel_tol: f64) -> &[f64] {
    let scale = p.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let mut n = p.len();
    while n > 0 && p[n - 1].abs() <= rel_tol * scale {
        n -= 1;
    }
    &p[..n]
}

/// Real roots of `p` (ascending coefficients). Leading coefficients must
/// already be trimmed by the caller; exact zeros are stripped here.
///
/// Eigenvalues of the companion matrix with imaginary part below
/// `imag_tol * (1 + |z|)` are treated as real and polished with Newton's
/// method. Returns `None` for the zero polynomial.
pub fn real_roots(p: &[f64], imag_tol: f64) -> Option<Vec<f64>> {
    let p = trim(p, 0.0);
    if p.is_empty() {
        return None;
    }
    // factor out roots at zero
    let zeros = p.iter().take_while(|&&c| c == 0.0).count();
    let q = &p[zeros..];
    let mut roots = vec![0.0; zeros.min(1)];
    let n = q.len() - 1;
    if n == 0 {
        return Some(roots);
    }
    let lead = q[n];
    let monic: Vec<f64> = q.iter().map(|c| c / lead).collect();

    // substitute x = s y so the monic coefficients are balanced
    let s = (0..n)
        .filter(|&k| monic[k] != 0.0)
        .map(|k| monic[k].abs().powf(1.0 / (n - k) as f64))
        .fold(0.0f64, f64::max);
    let s = if s > 0.0 && s.is_finite() { 2f64.powi(s.log2().round() as i32) } else { 1.0 };

    let mut companion = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        companion[(i, i - 1)] = 1.0;
    }
    for k in 0..n {
        companion[(k, n - 1)] = -monic[k] / s.powi((n - k) as i32);
    }
    balance(&mut companion);
    let eig = companion.complex_eigenvalues();
    let dp = derivative(q);
    for z in eig.iter() {
        let (re, im) = (z.re * s, z.im * s);
        if !re.is_finite() {
            continue;
        }
        if im.abs() <= imag_tol * (1.0 + re.abs()) {
            roots.push(newton_polish(q, &dp, re, 3));
        } else if im > 0.0 {
            // an inaccurate pair can hide a real root of a tight cluster
            let (a, b) = (re - im, re + im);
            if eval(q, a).signum() * eval(q, b).signum() < 0.0 {
                roots.push(bisect(q, a, b));
            }
        }
    }
    roots.sort_by(|a, b| a.total_cmp(b));
    Some(roots)
}

/// Diagonal similarity scaling by powers of two so that rows and columns
/// have comparable norms.
fn balance(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for _ in 0..100 {
        let mut done = true;
        for i in 0..n {
            let c: f64 = (0..n).filter(|&j| j != i).map(|j| m[(j, i)].abs()).sum();
            let r: f64 = (0..n).filter(|&j| j != i).map(|j| m[(i, j)].abs()).sum();
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let mut f = 1.0;
            let (mut cs, total) = (c, c + r);
            let mut rs = r;
            while cs < rs / 2.0 {
                cs *= 2.0;
                rs /= 2.0;
                f *= 2.0;
            }
            while cs >= rs * 2.0 {
                cs /= 2.0;
                rs *= 2.0;
                f /= 2.0;
            }
            if (cs + rs) < 0.95 * total {
                done = false;
                for j in 0..n {
                    m[(i, j)] /= f;
                    m[(j, i)] *= f;
                }
            }
        }
        if done {
            break;
        }
    }
}

/// Root of `p` in `[a, b]`, given a sign change.
fn bisect(p: &[f64], mut a: f64, mut b: f64) -> f64 {
    let mut fa = eval(p, a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = eval(p, m);
        if fm == 0.0 {
            return m;
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

fn newton_polish(p: &[f64], dp: &[f64], x0: f64, iters: usize) -> f64 {
    let mut x = x0;
    let mut fx = eval(p, x).abs();
    for _ in 0..iters {
        let d = eval(dp, x);
        if d == 0.0 || fx == 0.0 {
            break;
        }
        let cand = x - eval(p, x) / d;
        let fc = eval(p, cand).abs();
        if !(fc < fx) {
            break;
        }
        x = cand;
        fx = fc;
    }
    x
}

/// Sparse polynomial in `N` variables.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MPoly<const N: usize> {
    terms: BTreeMap<[u8; N], f64>,
}

impl<const N: usize> MPoly<N> {
    pub fn zero() -> Self {
        Self { terms: BTreeMap::new() }
    }

    pub fn constant(c: f64) -> Self {
        let mut p = Self::zero();
        p.add_term([0; N], c);
        p
    }

    pub fn var(i: usize) -> Self {
        let mut e = [0; N];
        e[i] = 1;
        let mut p = Self::zero();
        p.add_term(e, 1.0);
        p
    }

    pub fn add_term(&mut self, exps: [u8; N], c: f64) {
        if c == 0.0 {
            return;
        }
        *self.terms.entry(exps).or_insert(0.0) += c;
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u8; N], &f64)> {
        self.terms.iter()
    }

    pub fn coeff(&self, exps: &[u8; N]) -> f64 {
        self.terms.get(exps).copied().unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.values().all(|&c| c == 0.0)
    }

    pub fn degree(&self) -> usize {
        self.terms
            .iter()
            .filter(|(_, &c)| c != 0.0)
            .map(|(e, _)| e.iter().map(|&k| k as usize).sum())
            .max()
            .unwrap_or(0)
    }

    /// Largest exponent of variable `i`.
    pub fn degree_in(&self, i: usize) -> usize {
        self.terms
            .iter()
            .filter(|(_, &c)| c != 0.0)
            .map(|(e, _)| e[i] as usize)
            .max()
            .unwrap_or(0)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0f64, |m, c| m.max(c.abs()))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            terms: self.terms.iter().map(|(e, c)| (*e, c * s)).collect(),
        }
    }

    pub fn eval(&self, x: &[f64; N]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                e.iter()
                    .zip(x)
                    .fold(*c, |acc, (&k, &xi)| acc * xi.powi(k as i32))
            })
            .sum()
    }

    pub fn partial(&self, i: usize) -> Self {
        let mut out = Self::zero();
        for (e, &c) in &self.terms {
            if e[i] == 0 {
                continue;
            }
            let mut f = *e;
            f[i] -= 1;
            out.add_term(f, c * e[i] as f64);
        }
        out
    }

    pub fn pow(&self, k: u32) -> Self {
        (0..k).fold(Self::constant(1.0), |acc, _| &acc * self)
    }

    /// Replaces variable `i` by the polynomial `q`.
    pub fn substitute(&self, i: usize, q: &Self) -> Self {
        let max = self.degree_in(i) as u32;
        let powers: Vec<Self> = (0..=max).map(|k| q.pow(k)).collect();
        let mut out = Self::zero();
        for (e, &c) in &self.terms {
            let mut rest = *e;
            let k = rest[i] as usize;
            rest[i] = 0;
            let mut mono = Self::zero();
            mono.add_term(rest, c);
            out = &out + &(&mono * &powers[k]);
        }
        out
    }

    /// Coefficients with respect to variable `y`, each a univariate
    /// polynomial in variable `x` (all other exponents must be zero).
    pub fn as_bivariate(&self, x: usize, y: usize) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.degree_in(x) + 1]; self.degree_in(y) + 1];
        for (e, &c) in &self.terms {
            debug_assert!(e.iter().enumerate().all(|(k, &v)| k == x || k == y || v == 0));
            out[e[y] as usize][e[x] as usize] += c;
        }
        out
    }
}

impl<const N: usize> Add for &MPoly<N> {
    type Output = MPoly<N>;
    fn add(self, rhs: Self) -> MPoly<N> {
        let mut out = self.clone();
        for (e, &c) in &rhs.terms {
            out.add_term(*e, c);
        }
        out
    }
}

impl<const N: usize> Sub for &MPoly<N> {
    type Output = MPoly<N>;
    fn sub(self, rhs: Self) -> MPoly<N> {
        let mut out = self.clone();
        for (e, &c) in &rhs.terms {
            out.add_term(*e, -c);
        }
        out
    }
}

impl<const N: usize> Neg for &MPoly<N> {
    type Output = MPoly<N>;
    fn neg(self) -> MPoly<N> {
        self.scale(-1.0)
    }
}

impl<const N: usize> Mul for &MPoly<N> {
    type Output = MPoly<N>;
    fn mul(self, rhs: Self) -> MPoly<N> {
        let mut out = MPoly::zero();
        for (ea, &ca) in &self.terms {
            for (eb, &cb) in &rhs.terms {
                let mut e = [0u8; N];
                for k in 0..N {
                    e[k] = ea[k] + eb[k];
                }
                out.add_term(e, ca * cb);
            }
        }
        out
    }
}

/// Bezout matrix of `f` and `g` in the variable `y`, whose coefficients
/// (indexed by power of `y`) are univariate polynomials in the hidden
/// variable. Its determinant is the resultant up to sign.
pub fn bezout_matrix(f: &[Vec<f64>], g: &[Vec<f64>]) -> Vec<Vec<Vec<f64>>> {
    let n = f.len().max(g.len()) - 1;
    let zero = Vec::new();
    let fk = |k: usize| f.get(k).unwrap_or(&zero);
    let gk = |k: usize| g.get(k).unwrap_or(&zero);
    let mut b = vec![vec![Vec::<f64>::new(); n]; n];
    // (f(y) g(z) - f(z) g(y)) / (y - z) = sum_{a > c} m_ac (yz)^c (y^m - z^m)/(y - z)
    for a in 0..=n {
        for c in 0..a {
            let m_ac = sub(&mul(fk(a), gk(c)), &mul(fk(c), gk(a)));
            let m = a - c;
            for k in 0..m {
                let (i, j) = (c + k, c + m - 1 - k);
                b[i][j] = add(&b[i][j], &m_ac);
            }
        }
    }
    b
}

/// Determinant of a square matrix with univariate polynomial entries, by
/// cofactor expansion (small sizes only).
pub fn poly_det(m: &[Vec<Vec<f64>>]) -> Vec<f64> {
    let n = m.len();
    match n {
        0 => vec![1.0],
        1 => m[0][0].clone(),
        2 => sub(&mul(&m[0][0], &m[1][1]), &mul(&m[0][1], &m[1][0])),
        _ => {
            let mut acc = Vec::new();
            for j in 0..n {
                let minor: Vec<Vec<Vec<f64>>> = m[1..]
                    .iter()
                    .map(|row| {
                        row.iter()
                            .enumerate()
                            .filter(|(k, _)| *k != j)
                            .map(|(_, e)| e.clone())
                            .collect()
                    })
                    .collect();
                let term = mul(&m[0][j], &poly_det(&minor));
                acc = if j % 2 == 0 { add(&acc, &term) } else { sub(&acc, &term) };
            }
            acc
        }
    }
}
