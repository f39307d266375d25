//! Gauss–Legendre rules and the handful of one-dimensional integrals the
//! kernels reduce to.

use std::f64::consts::PI;

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn legendre(order: usize) -> Self {
        assert!(order >= 1, "Gauss rule needs at least one node");
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        let nf = order as f64;
        for i in 0..(order + 1) / 2 {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(order, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(order, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[order - 1 - i] = x;
            weights[i] = w;
            weights[order - 1 - i] = w;
        }
        if order % 2 == 1 {
            nodes[order / 2] = 0.0;
        }
        GaussRule { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre_with_derivative(order: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=order {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = order as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss rule on `[0, 1]` with panels refined geometrically towards
/// zero, for integrands that are smooth away from the origin.
pub(crate) fn integrate_graded_unit<F: FnMut(f64) -> f64>(rule: &GaussRule, mut f: F) -> f64 {
    let mut total = 0.0;
    let mut hi = 1.0;
    for _ in 0..64 {
        let lo = 0.5 * hi;
        total += rule.integrate(lo, hi, &mut f);
        hi = lo;
    }
    total + rule.integrate(0.0, hi, &mut f)
}

/// `∫_T^∞ r^{n-1} (1 + r²)^{-(n+2s)/2} dr` for `T ≥ 0`, computed numerically
/// after the substitution `r = T w^{-1/(2s)}`, which maps the infinite range onto
/// `(0, 1]` with a bounded integrand.
pub fn poisson_radial_tail(n: usize, s: f64, t: f64) -> f64 {
    debug_assert!(t >= 0.0);
    let q = 0.5 * (n as f64 + 2.0 * s);
    if t == 0.0 {
        return poisson_radial_mass(n, s);
    }
    let rule = GaussRule::legendre(12);
    let t2 = t * t;
    let inv_s = 1.0 / s;
    let body = integrate_graded_unit(&rule, |w| (t2 + w.powf(inv_s)).powf(-q));
    t.powi(n as i32) / (2.0 * s) * body
}

/// `∫_0^∞ r^{n-1} (1 + r²)^{-(n+2s)/2} dr`.
pub fn poisson_radial_mass(n: usize, s: f64) -> f64 {
    let q = 0.5 * (n as f64 + 2.0 * s);
    let rule = GaussRule::legendre(24);
    let head: f64 = (0..8)
        .map(|k| {
            let a = k as f64 / 8.0;
            rule.integrate(a, a + 0.125, |r| {
                r.powi(n as i32 - 1) * (1.0 + r * r).powf(-q)
            })
        })
        .sum();
    let inv_s = 1.0 / s;
    let tail = integrate_graded_unit(&rule, |w| (1.0 + w.powf(inv_s)).powf(-q)) / (2.0 * s);
    head + tail
}

/// Surface measure of the unit sphere in `R^n` (the two points of `S^0`, or the circle).
pub fn sphere_measure(n: usize) -> f64 {
    match n {
        1 => 2.0,
        2 => 2.0 * PI,
        _ => panic!("unsupported dimension {n}"),
    }
}

/// Integral over `R^n` of the unnormalized Poisson-type kernel at height one,
/// `∫ (1 + |t|²)^{-(n+2s)/2} dt`, obtained by numerical quadrature.
pub fn poisson_kernel_mass(n: usize, s: f64) -> f64 {
    sphere_measure(n) * poisson_radial_mass(n, s)
}

/// Distance from `x` (inside the box `[-w, w]^n`) to the box boundary along the
/// unit direction `dir`.
pub(crate) fn box_exit_distance(n: usize, x: &[f64; 2], dir: &[f64; 2], w: f64) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..n {
        if dir[i] > 0.0 {
            best = best.min((w - x[i]) / dir[i]);
        } else if dir[i] < 0.0 {
            best = best.min((-w - x[i]) / dir[i]);
        }
    }
    best.max(0.0)
}

/// Direction rule on the unit sphere of `R^n` adapted to a point inside the box
/// `[-w, w]^n`: in one dimension the two directions `±1`; in two dimensions Gauss
/// points on the arcs between the corner directions and any extra break angles.
pub(crate) fn direction_rule(
    n: usize,
    x: &[f64; 2],
    w: f64,
    extra_breaks: &[f64],
    per_arc: usize,
) -> Vec<([f64; 2], f64)> {
    if n == 1 {
        return vec![([1.0, 0.0], 1.0), ([-1.0, 0.0], 1.0)];
    }
    let mut breaks: Vec<f64> = [(w, w), (-w, w), (-w, -w), (w, -w)]
        .iter()
        .map(|&(cx, cy)| normalize_angle((cy - x[1]).atan2(cx - x[0])))
        .chain(extra_breaks.iter().map(|&a| normalize_angle(a)))
        .collect();
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    let rule = GaussRule::legendre(per_arc);
    let mut out = Vec::with_capacity(breaks.len() * per_arc);
    for k in 0..breaks.len() {
        let a = breaks[k];
        let b = if k + 1 < breaks.len() {
            breaks[k + 1]
        } else {
            breaks[0] + 2.0 * PI
        };
        for (theta, wt) in rule.mapped(a, b) {
            out.push(([theta.cos(), theta.sin()], wt));
        }
    }
    out
}

fn normalize_angle(a: f64) -> f64 {
    let t = a.rem_euclid(2.0 * PI);
    if t >= 2.0 * PI {
        0.0
    } else {
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_rule_is_exact_for_polynomials() {
        for order in 1..20 {
            let rule = GaussRule::legendre(order);
            for deg in 0..(2 * order) {
                let got = rule.integrate(0.0, 2.0, |x| x.powi(deg as i32));
                let exact = 2f64.powi(deg as i32 + 1) / (deg as f64 + 1.0);
                assert_relative_eq!(got, exact, max_relative = 1e-13);
            }
        }
    }

    #[test]
    fn kernel_mass_in_two_dimensions_is_pi_over_s() {
        for &s in &[0.2, 0.5, 0.8] {
            assert_relative_eq!(poisson_kernel_mass(2, s), PI / s, max_relative = 1e-12);
        }
    }

    #[test]
    fn kernel_mass_matches_beta_function_in_one_dimension() {
        use statrs::function::gamma::gamma;
        for &s in &[0.1, 0.3, 0.5, 0.75, 0.95] {
            let beta = gamma(0.5) * gamma(s) / gamma(0.5 + s);
            assert_relative_eq!(poisson_kernel_mass(1, s), beta, max_relative = 1e-11);
        }
    }

    #[test]
    fn radial_tail_matches_closed_form_in_two_dimensions() {
        for &s in &[0.25f64, 0.5, 0.9] {
            for &t in &[0.01f64, 0.3, 1.0, 7.0, 200.0] {
                let exact = (1.0 + t * t).powf(-s) / (2.0 * s);
                assert_relative_eq!(poisson_radial_tail(2, s, t), exact, max_relative = 1e-11);
            }
        }
    }

    #[test]
    fn radial_tail_is_consistent_with_head_integral() {
        let s = 0.35;
        let t = 0.7;
        let rule = GaussRule::legendre(30);
        let head = rule.integrate(0.0, t, |r| (1.0 + r * r).powf(-(0.5 + s)));
        assert_relative_eq!(
            head + poisson_radial_tail(1, s, t),
            poisson_radial_mass(1, s),
            max_relative = 1e-12
        );
    }

    #[test]
    fn direction_rule_integrates_circle() {
        let dirs = direction_rule(2, &[0.3, -0.2], 1.0, &[0.4], 8);
        let total: f64 = dirs.iter().map(|(_, w)| w).sum();
        assert_relative_eq!(total, 2.0 * PI, max_relative = 1e-13);
    }
}
