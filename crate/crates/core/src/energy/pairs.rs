//! Integrals over pairs of unit cells `C = [0,1]^n`, `D = o + [0,1]^n`
//! against the kernel `|x − y|^{-n-β}`.
//!
//! Separated pairs use tensor Gauss rules. Pairs that share a face, an edge,
//! a vertex or coincide are rewritten in the relative variable `z = x − y`:
//! along each ray `z = rθ` the inner integral over `x` is a polynomial in `r`,
//! which is built exactly and integrated against `r^{-1-β}` in closed form.
//! Only the angular integral is left to quadrature, and it is smooth on the
//! arcs used.

use std::f64::consts::PI;

use crate::quadrature::GaussRule;

pub(crate) const DEG: usize = 10;

/// Polynomial in `r`, coefficients in ascending order.
pub(crate) type RPoly = [f64; DEG];

pub(crate) fn poly_const(c: f64) -> RPoly {
    let mut p = [0.0; DEG];
    p[0] = c;
    p
}

pub(crate) fn poly_lin(c0: f64, c1: f64) -> RPoly {
    let mut p = [0.0; DEG];
    p[0] = c0;
    p[1] = c1;
    p
}

pub(crate) fn poly_mul(a: &RPoly, b: &RPoly) -> RPoly {
    let mut c = [0.0; DEG];
    for i in 0..DEG {
        if a[i] == 0.0 {
            continue;
        }
        for j in 0..DEG - i {
            c[i + j] += a[i] * b[j];
        }
    }
    c
}

pub(crate) fn poly_sub(a: &RPoly, b: &RPoly) -> RPoly {
    let mut c = *a;
    for i in 0..DEG {
        c[i] -= b[i];
    }
    c
}

fn poly_axpy(acc: &mut RPoly, w: f64, p: &RPoly) {
    for i in 0..DEG {
        acc[i] += w * p[i];
    }
}

/// A vector-valued integrand over `(x, y) ∈ C × D` in local cell coordinates.
pub(crate) trait PairIntegrand: Sync {
    fn len(&self) -> usize;
    fn eval(&self, x: &[f64; 2], y: &[f64; 2], out: &mut [f64]);
    /// Same as [`eval`](Self::eval) with coordinates that are polynomials in `r`.
    fn eval_poly(&self, x: &[RPoly; 2], y: &[RPoly; 2], out: &mut [RPoly]);
    /// Extra Gauss order for separated pairs.
    fn extra_order(&self) -> usize {
        0
    }
}

/// The constant integrand `1`, giving the set interaction of two cells.
pub(crate) struct Unit;

impl PairIntegrand for Unit {
    fn len(&self) -> usize {
        1
    }
    fn eval(&self, _: &[f64; 2], _: &[f64; 2], out: &mut [f64]) {
        out[0] = 1.0;
    }
    fn eval_poly(&self, _: &[RPoly; 2], _: &[RPoly; 2], out: &mut [RPoly]) {
        out[0] = poly_const(1.0);
    }
}

/// Products `e_ν e_μ` (upper triangle, row-major) of the hat differences
/// `e_ν(x, y) = φ_ν(x) − φ_ν(y)` over the union of the vertices of `C` and `D`.
pub(crate) struct HatDifferences {
    n: usize,
    /// Vertex positions relative to the lower corner of `C`.
    pub nodes: Vec<[i64; 2]>,
    in_c: Vec<Option<[bool; 2]>>,
    in_d: Vec<Option<[bool; 2]>>,
}

impl HatDifferences {
    pub fn new(n: usize, o: [i64; 2]) -> Self {
        let corners: Vec<[i64; 2]> = if n == 1 {
            vec![[0, 0], [1, 0]]
        } else {
            vec![[0, 0], [1, 0], [0, 1], [1, 1]]
        };
        let mut nodes: Vec<[i64; 2]> = corners.clone();
        for c in &corners {
            let p = [c[0] + o[0], c[1] + o[1]];
            if !nodes.contains(&p) {
                nodes.push(p);
            }
        }
        let local = |p: [i64; 2]| -> Option<[bool; 2]> {
            let ok = (0..n).all(|i| p[i] == 0 || p[i] == 1) && (n == 2 || p[1] == 0);
            ok.then(|| [p[0] == 1, p[1] == 1])
        };
        let in_c = nodes.iter().map(|&p| local(p)).collect();
        let in_d = nodes
            .iter()
            .map(|&p| local([p[0] - o[0], p[1] - o[1]]))
            .collect();
        HatDifferences {
            n,
            nodes,
            in_c,
            in_d,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Expands the upper-triangle output into a full symmetric matrix.
    pub fn unpack(&self, tri: &[f64]) -> Vec<f64> {
        let k = self.num_nodes();
        let mut m = vec![0.0; k * k];
        let mut idx = 0;
        for a in 0..k {
            for b in a..k {
                m[a * k + b] = tri[idx];
                m[b * k + a] = tri[idx];
                idx += 1;
            }
        }
        m
    }
}

fn hat_value(n: usize, which: [bool; 2], x: &[f64; 2]) -> f64 {
    let mut v = 1.0;
    for i in 0..n {
        v *= if which[i] { x[i] } else { 1.0 - x[i] };
    }
    v
}

fn hat_poly(n: usize, which: [bool; 2], x: &[RPoly; 2]) -> RPoly {
    let mut v = poly_const(1.0);
    for i in 0..n {
        let f = if which[i] {
            x[i]
        } else {
            poly_sub(&poly_const(1.0), &x[i])
        };
        v = poly_mul(&v, &f);
    }
    v
}

impl PairIntegrand for HatDifferences {
    fn len(&self) -> usize {
        let k = self.num_nodes();
        k * (k + 1) / 2
    }

    fn eval(&self, x: &[f64; 2], y: &[f64; 2], out: &mut [f64]) {
        let k = self.num_nodes();
        let mut e = [0.0; 8];
        for v in 0..k {
            let a = self.in_c[v].map_or(0.0, |w| hat_value(self.n, w, x));
            let b = self.in_d[v].map_or(0.0, |w| hat_value(self.n, w, y));
            e[v] = a - b;
        }
        let mut idx = 0;
        for a in 0..k {
            for b in a..k {
                out[idx] = e[a] * e[b];
                idx += 1;
            }
        }
    }

    fn eval_poly(&self, x: &[RPoly; 2], y: &[RPoly; 2], out: &mut [RPoly]) {
        let k = self.num_nodes();
        let zero = [0.0; DEG];
        let e: Vec<RPoly> = (0..k)
            .map(|v| {
                let a = self.in_c[v].map_or(zero, |w| hat_poly(self.n, w, x));
                let b = self.in_d[v].map_or(zero, |w| hat_poly(self.n, w, y));
                poly_sub(&a, &b)
            })
            .collect();
        let mut idx = 0;
        for a in 0..k {
            for b in a..k {
                out[idx] = poly_mul(&e[a], &e[b]);
                idx += 1;
            }
        }
    }

    fn extra_order(&self) -> usize {
        1
    }
}

/// `∫_C ∫_D f(x, y) |x − y|^{-n-β} dy dx` for unit cells at integer offset `o`.
pub(crate) fn unit_pair<I: PairIntegrand>(n: usize, o: [i64; 2], beta: f64, f: &I) -> Vec<f64> {
    let reach = (0..n).map(|i| o[i].abs()).max().unwrap_or(0);
    if reach >= 2 {
        separated_pair(n, o, beta, f, reach - 1)
    } else {
        near_pair(n, o, beta, f)
    }
}

fn separated_order(gap: i64) -> usize {
    match gap {
        1 => 10,
        2..=3 => 7,
        4..=8 => 5,
        _ => 4,
    }
}

fn separated_pair<I: PairIntegrand>(n: usize, o: [i64; 2], beta: f64, f: &I, gap: i64) -> Vec<f64> {
    let q = separated_order(gap) + f.extra_order();
    let rule = GaussRule::legendre(q);
    let pts: Vec<(f64, f64)> = rule.mapped(0.0, 1.0).collect();
    let cell_pts: Vec<([f64; 2], f64)> = if n == 1 {
        pts.iter().map(|&(x, w)| ([x, 0.0], w)).collect()
    } else {
        let mut v = Vec::with_capacity(q * q);
        for &(b, wb) in &pts {
            for &(a, wa) in &pts {
                v.push(([a, b], wa * wb));
            }
        }
        v
    };
    let exp = -0.5 * (n as f64 + beta);
    let mut out = vec![0.0; f.len()];
    let mut buf = vec![0.0; f.len()];
    for (x, wx) in &cell_pts {
        for (y, wy) in &cell_pts {
            let mut d2 = 0.0;
            for i in 0..n {
                let d = x[i] - y[i] - o[i] as f64;
                d2 += d * d;
            }
            let k = wx * wy * d2.powf(exp);
            f.eval(x, y, &mut buf);
            for (acc, v) in out.iter_mut().zip(&buf) {
                *acc += k * v;
            }
        }
    }
    out
}

const ANGULAR_ORDER: usize = 16;

fn near_pair<I: PairIntegrand>(n: usize, o: [i64; 2], beta: f64, f: &I) -> Vec<f64> {
    let mut out = vec![0.0; f.len()];
    if n == 1 {
        for dir in [1.0, -1.0] {
            let v = ray_integral(1, o, beta, f, [dir, 0.0]);
            for (acc, x) in out.iter_mut().zip(&v) {
                *acc += x;
            }
        }
        return out;
    }
    let mut breaks = vec![0.0, 0.5 * PI, PI, 1.5 * PI];
    for i in -1..=1 {
        for j in -1..=1 {
            let a = (i - o[0]) as f64;
            let b = (j - o[1]) as f64;
            if a == 0.0 && b == 0.0 {
                continue;
            }
            breaks.push(b.atan2(a).rem_euclid(2.0 * PI));
        }
    }
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
    let rule = GaussRule::legendre(ANGULAR_ORDER);
    for k in 0..breaks.len() {
        let a = breaks[k];
        let b = if k + 1 < breaks.len() {
            breaks[k + 1]
        } else {
            breaks[0] + 2.0 * PI
        };
        for (theta, w) in rule.mapped(a, b) {
            let v = ray_integral(2, o, beta, f, [theta.cos(), theta.sin()]);
            for (acc, x) in out.iter_mut().zip(&v) {
                *acc += w * x;
            }
        }
    }
    out
}

/// `∫_0^{R(θ)} r^{-1-β} G(rθ) dr` where `G(z) = ∫ f(x, x − z − o) dx` over the
/// admissible `x`.
fn ray_integral<I: PairIntegrand>(
    n: usize,
    o: [i64; 2],
    beta: f64,
    f: &I,
    dir: [f64; 2],
) -> Vec<f64> {
    let mut out = vec![0.0; f.len()];
    // z_i ranges over [-o_i - 1, 1 - o_i]
    let mut r_max = f64::INFINITY;
    for i in 0..n {
        let lo = (-o[i] - 1) as f64;
        let hi = (1 - o[i]) as f64;
        if dir[i] > 0.0 {
            r_max = r_max.min(hi / dir[i]);
        } else if dir[i] < 0.0 {
            r_max = r_max.min(lo / dir[i]);
        }
    }
    if !(r_max > 0.0) {
        return out;
    }
    let mut cuts = vec![0.0];
    for i in 0..n {
        if o[i] != 0 && dir[i] != 0.0 {
            let r = -(o[i] as f64) / dir[i];
            if r > 0.0 && r < r_max {
                cuts.push(r);
            }
        }
    }
    cuts.push(r_max);
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let rule = GaussRule::legendre(3);
    let tpts: Vec<(f64, f64)> = rule.mapped(0.0, 1.0).collect();
    let mut vals = vec![[0.0; DEG]; f.len()];
    let mut g = vec![[0.0; DEG]; f.len()];
    for piece in cuts.windows(2) {
        let (ra, rb) = (piece[0], piece[1]);
        if rb <= ra {
            continue;
        }
        let mid = 0.5 * (ra + rb);
        // x_i ∈ [lo_i, lo_i + len_i] and y_i = x_i − w_i with w_i = o_i + r·dir_i
        let mut lo = [poly_const(0.0); 2];
        let mut len = [poly_const(1.0); 2];
        let mut upper = [false; 2];
        for i in 0..n {
            let oi = o[i] as f64;
            upper[i] = oi + mid * dir[i] >= 0.0;
            if upper[i] {
                lo[i] = poly_lin(oi, dir[i]);
                len[i] = poly_lin(1.0 - oi, -dir[i]);
            } else {
                len[i] = poly_lin(1.0 + oi, dir[i]);
            }
        }
        let jac = if n == 1 {
            len[0]
        } else {
            poly_mul(&len[0], &len[1])
        };
        for acc in g.iter_mut() {
            *acc = [0.0; DEG];
        }
        let inner: Vec<([f64; 2], f64)> = if n == 1 {
            tpts.iter().map(|&(t, w)| ([t, 0.0], w)).collect()
        } else {
            let mut v = Vec::with_capacity(9);
            for &(u, wu) in &tpts {
                for &(t, wt) in &tpts {
                    v.push(([t, u], wt * wu));
                }
            }
            v
        };
        for (t, w) in &inner {
            let mut x = [poly_const(0.0); 2];
            let mut y = [poly_const(0.0); 2];
            for i in 0..n {
                let mut tl = len[i];
                for c in tl.iter_mut() {
                    *c *= t[i];
                }
                if upper[i] {
                    // x = w + len·t, y = len·t
                    x[i] = lo[i];
                    poly_axpy(&mut x[i], 1.0, &tl);
                    y[i] = tl;
                } else {
                    // x = len·t, y = len·t − w
                    x[i] = tl;
                    y[i] = tl;
                    y[i][0] -= o[i] as f64;
                    y[i][1] -= dir[i];
                }
            }
            f.eval_poly(&x, &y, &mut vals);
            for (acc, v) in g.iter_mut().zip(&vals) {
                poly_axpy(acc, *w, &poly_mul(v, &jac));
            }
        }
        for (acc, gp) in out.iter_mut().zip(&g) {
            *acc += power_moments(gp, beta, ra, rb);
        }
    }
    out
}

/// `∫_a^b r^{-1-β} Σ_j g_j r^j dr`; on pieces starting at zero the
/// coefficients with `j ≤ β` vanish analytically and are skipped.
fn power_moments(g: &RPoly, beta: f64, a: f64, b: f64) -> f64 {
    let mut total = 0.0;
    for (j, &c) in g.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let e = j as f64 - beta;
        if a == 0.0 {
            if e <= 1e-12 {
                continue;
            }
            total += c * b.powf(e) / e;
        } else if e.abs() < 1e-12 {
            total += c * (b / a).ln();
        } else {
            total += c * (b.powf(e) - a.powf(e)) / e;
        }
    }
    total
}
