//! The localized Gagliardo energy `∬_{Q_Ω} |u(x) − u(y)|² / |x − y|^{n+2s}`
//! of a nodal field, assembled as a dense quadratic form.

use rayon::prelude::*;

use super::pairs::{unit_pair, HatDifferences};
use super::perimeter::check_omega;
use crate::error::{Error, Result};
use crate::field::{hat_weights, ExteriorDatum, NodeField};
use crate::geometry::{Ball, CellGrid, Point};
use crate::params::Params;
use crate::quadrature::{box_exit_distance, direction_rule, GaussRule};

/// Default far-field truncation radius, in units of the box half-width.
pub const R_FAR_FACTOR: f64 = 65536.0;

struct OffsetMatrix {
    nodes: Vec<[i64; 2]>,
    m: Vec<f64>,
}

/// Quadrature point of an `Ω` cell carrying the interaction with everything
/// beyond the box.
#[derive(Debug, Clone)]
struct TailPoint {
    nodes: [usize; 4],
    hats: [f64; 4],
    weight: f64,
    /// `∫ K`, `∫ g₁ K` and `∫ g₁² K` over the outside of the box, where
    /// `g₁ = g − offset` is the non-constant part of the datum.
    tau: [f64; 3],
    /// Bounds for the parts of `∫ g₁ K` and `∫ g₁² K` beyond `R_far`.
    bound: [f64; 2],
}

/// `E(u) = −Σ_{ν<μ} L_νμ (u_ν − u_μ)² + tail(u)`, where `L` has zero row sums.
pub struct DirichletForm {
    grid: CellGrid,
    omega_cells: Vec<bool>,
    lap: Vec<f64>,
    tail: Vec<TailPoint>,
    datum: ExteriorDatum,
}

impl DirichletForm {
    pub fn assemble(
        params: &Params,
        grid: &CellGrid,
        omega: &Ball,
        datum: &ExteriorDatum,
    ) -> Result<Self> {
        params.validate()?;
        if grid.dim() != params.n {
            return Err(Error::InvalidInput(format!(
                "grid dimension {} differs from n = {}",
                grid.dim(),
                params.n
            )));
        }
        if !datum.is_finite() {
            return Err(Error::NanField {
                node: grid.num_nodes(),
            });
        }
        if datum.coeff != 0.0 && datum.exponent >= params.s {
            return Err(Error::GrowthViolated {
                reason: format!(
                    "exterior datum grows like |y|^{} and the energy needs an exponent below s = {}",
                    datum.exponent, params.s
                ),
            });
        }
        let omega_cells = check_omega(grid, omega)?;
        let table = offset_table(grid, 2.0 * params.s);
        let lap = assemble_rows(grid, &omega_cells, &table);
        let tail = tail_points(grid, params.s, &omega_cells, datum);
        Ok(DirichletForm {
            grid: grid.clone(),
            omega_cells,
            lap,
            tail,
            datum: *datum,
        })
    }

    pub fn grid(&self) -> &CellGrid {
        &self.grid
    }

    pub fn omega_cells(&self) -> &[bool] {
        &self.omega_cells
    }

    pub fn datum(&self) -> &ExteriorDatum {
        &self.datum
    }

    pub fn num_nodes(&self) -> usize {
        self.grid.num_nodes()
    }

    /// Entry `(i, j)` of the symmetric matrix of the in-box part.
    pub fn lap_entry(&self, i: usize, j: usize) -> f64 {
        self.lap[i * self.num_nodes() + j]
    }

    fn tail_value(&self, tp: &TailPoint, u: &[f64]) -> f64 {
        tp.nodes.iter().zip(&tp.hats).map(|(&i, &w)| w * u[i]).sum()
    }

    /// Energy of the nodal values `u` with the stored datum.
    pub fn energy(&self, u: &[f64]) -> f64 {
        let n = self.num_nodes();
        let rows: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|i| {
                let row = &self.lap[i * n..(i + 1) * n];
                let mut acc = 0.0;
                for j in 0..i {
                    let d = u[i] - u[j];
                    acc -= row[j] * d * d;
                }
                acc
            })
            .collect();
        let body: f64 = rows.iter().sum();
        let c0 = self.datum.offset;
        let tail: f64 = self
            .tail
            .iter()
            .map(|tp| {
                let v = self.tail_value(tp, u) - c0;
                tp.weight * (v * v * tp.tau[0] - 2.0 * v * tp.tau[1] + tp.tau[2])
            })
            .sum();
        body + tail
    }

    /// Upper bound for the far-field part left out beyond the truncation radius.
    pub fn truncation_error(&self, u: &[f64]) -> f64 {
        let c0 = self.datum.offset;
        self.tail
            .iter()
            .map(|tp| {
                let v = (self.tail_value(tp, u) - c0).abs();
                tp.weight * (2.0 * v * tp.bound[0] + tp.bound[1])
            })
            .sum()
    }

    /// Symmetric matrix `A` and vector `b` with `E(u) = uᵀAu + 2bᵀu + const`.
    pub fn quadratic_parts(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.num_nodes();
        let mut a = self.lap.clone();
        let mut b = vec![0.0; n];
        let c0 = self.datum.offset;
        for tp in &self.tail {
            for (k, &i) in tp.nodes.iter().enumerate() {
                if tp.hats[k] == 0.0 {
                    continue;
                }
                b[i] -= tp.weight * tp.hats[k] * (c0 * tp.tau[0] + tp.tau[1]);
                for (l, &j) in tp.nodes.iter().enumerate() {
                    a[i * n + j] += tp.weight * tp.tau[0] * tp.hats[k] * tp.hats[l];
                }
            }
        }
        (a, b)
    }
}

/// Q_Ω energy of a nodal field, with the truncation bound of its far field.
pub fn dirichlet_fractional(params: &Params, u: &NodeField, omega: &Ball) -> Result<(f64, f64)> {
    u.check_finite()?;
    let form = DirichletForm::assemble(params, &u.grid, omega, &u.datum)?;
    Ok((form.energy(&u.values), form.truncation_error(&u.values)))
}

fn offset_table(grid: &CellGrid, beta: f64) -> Vec<OffsetMatrix> {
    let n = grid.dim();
    let side = grid.cells_per_side() as i64;
    let span = 2 * side - 1;
    let count = if n == 1 { span } else { span * span };
    let scale = grid.h().powf(n as f64 - beta);
    (0..count)
        .into_par_iter()
        .map(|k| {
            let o = [
                k % span - (side - 1),
                if n == 1 { 0 } else { k / span - (side - 1) },
            ];
            let hd = HatDifferences::new(n, o);
            let mut m = hd.unpack(&unit_pair(n, o, beta, &hd));
            for v in m.iter_mut() {
                *v *= scale;
            }
            OffsetMatrix {
                nodes: hd.nodes.clone(),
                m,
            }
        })
        .collect()
}

/// Row-wise assembly: each row only reads the table, so rows are filled in
/// parallel with a fixed summation order.
fn assemble_rows(grid: &CellGrid, omega_cells: &[bool], table: &[OffsetMatrix]) -> Vec<f64> {
    let n = grid.dim();
    let nn = grid.num_nodes();
    let nc = grid.num_cells();
    let side = grid.cells_per_side() as i64;
    let span = 2 * side - 1;
    let mut lap = vec![0.0; nn * nn];
    lap.par_chunks_mut(nn).enumerate().for_each(|(node, row)| {
        let nm = grid.node_multi(node);
        for p in grid.node_cells(node) {
            let pm = grid.cell_multi(p);
            let rel = [nm[0] as i64 - pm[0] as i64, nm[1] as i64 - pm[1] as i64];
            for q in 0..nc {
                if !(omega_cells[p] || omega_cells[q]) {
                    continue;
                }
                let qm = grid.cell_multi(q);
                let o = [qm[0] as i64 - pm[0] as i64, qm[1] as i64 - pm[1] as i64];
                let idx = (o[0] + side - 1) + if n == 1 { 0 } else { span * (o[1] + side - 1) };
                let entry = &table[idx as usize];
                let k = entry.nodes.len();
                let a = entry.nodes.iter().position(|&x| x == rel).unwrap();
                let shared = (0..n).all(|i| rel[i] - o[i] == 0 || rel[i] - o[i] == 1);
                let mult = if shared { 1.0 } else { 2.0 };
                for b in 0..k {
                    let pos = entry.nodes[b];
                    let g = [pm[0] as i64 + pos[0], pm[1] as i64 + pos[1]];
                    let gi = if n == 1 {
                        g[0] as usize
                    } else {
                        grid.node_index([g[0] as usize, g[1] as usize])
                    };
                    row[gi] += mult * entry.m[a * k + b];
                }
            }
        }
        // constants lie in the kernel exactly
        let off: f64 = row
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != node)
            .map(|(_, v)| v)
            .sum();
        row[node] = -off;
    });
    lap
}

fn tail_points(
    grid: &CellGrid,
    s: f64,
    omega_cells: &[bool],
    datum: &ExteriorDatum,
) -> Vec<TailPoint> {
    let n = grid.dim();
    let h = grid.h();
    let w = grid.half_width();
    let rule = GaussRule::legendre(5);
    let r_far = R_FAR_FACTOR * w;
    let cells: Vec<usize> = (0..grid.num_cells()).filter(|&c| omega_cells[c]).collect();
    cells
        .par_iter()
        .flat_map_iter(|&c| {
            let o = grid.cell_origin(c);
            let nodes = grid.cell_nodes(c);
            let mut pts: Vec<(Point, [f64; 2], f64)> = Vec::new();
            for (a, wa) in rule.mapped(0.0, 1.0) {
                if n == 1 {
                    pts.push(([o[0] + a * h, 0.0], [a, 0.0], wa * h));
                } else {
                    for (b, wb) in rule.mapped(0.0, 1.0) {
                        pts.push(([o[0] + a * h, o[1] + b * h], [a, b], wa * wb * h * h));
                    }
                }
            }
            pts.into_iter()
                .map(|(x, t, wt)| {
                    let hw = hat_weights(n, &t);
                    let mut ns = [0usize; 4];
                    let mut hs = [0.0; 4];
                    for k in 0..nodes.len() {
                        ns[k] = nodes[k];
                        hs[k] = hw[k];
                    }
                    let (tau, bound) = ray_moments(n, s, &x, w, r_far, datum);
                    TailPoint {
                        nodes: ns,
                        hats: hs,
                        weight: 2.0 * wt,
                        tau,
                        bound,
                    }
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

fn ray_moments(
    n: usize,
    s: f64,
    x: &Point,
    w: f64,
    r_far: f64,
    datum: &ExteriorDatum,
) -> ([f64; 3], [f64; 2]) {
    let two_s = 2.0 * s;
    let mut tau = [0.0; 3];
    let mut bound = [0.0; 2];
    let power = !datum.is_constant();
    let rule = GaussRule::legendre(8);
    for (dir, wd) in direction_rule(n, x, w, &[], 10) {
        let exit = box_exit_distance(n, x, &dir, w);
        tau[0] += wd * exit.powf(-two_s) / two_s;
        if !power {
            continue;
        }
        let g1 = |rho: f64| {
            let y = [x[0] + rho * dir[0], x[1] + rho * dir[1]];
            datum.coeff * crate::geometry::norm(n, &y).powf(datum.exponent)
        };
        // ρ = exit·e^t on [exit, R_far]
        let t_max = (r_far / exit).ln();
        let panels = (t_max / 0.5).ceil().max(1.0) as usize;
        let dt = t_max / panels as f64;
        let (mut m1, mut m2) = (0.0, 0.0);
        for k in 0..panels {
            for (t, wt) in rule.mapped(k as f64 * dt, (k + 1) as f64 * dt) {
                let rho = exit * t.exp();
                let g = g1(rho);
                let base = wt * rho.powf(-two_s);
                m1 += base * g;
                m2 += base * g * g;
            }
        }
        tau[1] += wd * m1;
        tau[2] += wd * m2;
        let p = datum.exponent;
        let c = datum.coeff.abs() * 2f64.powf(p.abs());
        bound[0] += wd * c * r_far.powf(p - two_s) / (two_s - p);
        bound[1] += wd * c * c * r_far.powf(2.0 * p - two_s) / (two_s - 2.0 * p);
    }
    (tau, bound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn setup(n: usize, s: f64, w: f64, m: usize) -> (Params, CellGrid, Ball) {
        (
            Params::new(n, s, 0.5).unwrap(),
            CellGrid::new(n, w, m).unwrap(),
            Ball::centered(1.0),
        )
    }

    #[test]
    fn constants_have_zero_energy() {
        for n in [1, 2] {
            let (p, g, om) = setup(n, 0.6, 2.0, if n == 1 { 16 } else { 4 });
            let u = NodeField::constant(&g, 3.7);
            let (e, _) = dirichlet_fractional(&p, &u, &om).unwrap();
            assert!(e.abs() <= 1e-12, "n = {n}: {e}");
        }
    }

    #[test]
    fn adding_a_constant_keeps_the_energy() {
        let (p, g, om) = setup(1, 0.4, 2.0, 16);
        let u = NodeField::from_fn(&g, ExteriorDatum::constant(0.5), |x| (3.0 * x[0]).sin());
        let (a, _) = dirichlet_fractional(&p, &u, &om).unwrap();
        let (b, _) = dirichlet_fractional(&p, &u.add_constant(2.5), &om).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-12);
    }

    #[test]
    fn matches_direct_quadrature_on_a_small_grid() {
        // piecewise linear u on [−2, 2] with h = 1/2 and datum 0; the energy over
        // Q_{B_1} is split into Ω×Ω, 2·Ω×(box∖Ω) and 2·Ω×outside, each integrated
        // independently with graded Gauss on the singular diagonal
        let s = 0.3;
        let (p, g, om) = setup(1, s, 2.0, 4);
        let u = NodeField::from_fn(&g, ExteriorDatum::zero(), |x| {
            (1.0 - x[0] * x[0] / 4.0).max(0.0)
        });
        let (got, _) = dirichlet_fractional(&p, &u, &om).unwrap();
        let f = |x: f64| u.eval(&[x, 0.0]);
        let rule = GaussRule::legendre(12);
        let kernel = |d: f64| d.abs().powf(-1.0 - 2.0 * s);
        // graded integral of h(y) over [a, b] with a singular point at x
        let graded = |x: f64, a: f64, b: f64, hfun: &dyn Fn(f64) -> f64| -> f64 {
            let mut total = 0.0;
            for (lo, hi) in [(a, x.clamp(a, b)), (x.clamp(a, b), b)] {
                if hi <= lo {
                    continue;
                }
                // panels shrinking towards x
                let mut pieces = vec![];
                let mut t = 1.0;
                for _ in 0..36 {
                    pieces.push((0.5 * t, t));
                    t *= 0.5;
                }
                for (p0, p1) in pieces {
                    let (u0, u1) = if lo == x.clamp(a, b) && hi > lo {
                        (lo + p0 * (hi - lo), lo + p1 * (hi - lo))
                    } else {
                        (hi - p1 * (hi - lo), hi - p0 * (hi - lo))
                    };
                    // break at the grid nodes for the kinks of u
                    let mut cuts = vec![u0];
                    for k in -8..=8 {
                        let z = k as f64 * 0.5;
                        if z > u0 && z < u1 {
                            cuts.push(z);
                        }
                    }
                    cuts.push(u1);
                    for win in cuts.windows(2) {
                        total += rule.integrate(win[0], win[1], |y| hfun(y));
                    }
                }
            }
            total
        };
        let inner = |a: f64, b: f64| -> f64 {
            let mut total = 0.0;
            for k in 0..4 {
                let x0 = -1.0 + 0.5 * k as f64;
                total += rule.integrate(x0, x0 + 0.5, |x| {
                    graded(x, a, b, &|y: f64| (f(x) - f(y)).powi(2) * kernel(x - y))
                });
            }
            total
        };
        let omega_omega = inner(-1.0, 1.0);
        let omega_box = inner(-2.0, -1.0) + inner(1.0, 2.0);
        let mut outside = 0.0;
        for k in 0..4 {
            let x0 = -1.0 + 0.5 * k as f64;
            outside += rule.integrate(x0, x0 + 0.5, |x| {
                f(x).powi(2) * ((2.0 - x).powf(-2.0 * s) + (2.0 + x).powf(-2.0 * s)) / (2.0 * s)
            });
        }
        let expected = omega_omega + 2.0 * omega_box + 2.0 * outside;
        assert_relative_eq!(got, expected, max_relative = 1e-6);
    }

    #[test]
    fn quadratic_parts_reproduce_the_energy() {
        let (p, g, om) = setup(2, 0.7, 1.5, 3);
        let u = NodeField::from_fn(&g, ExteriorDatum::constant(0.2), |x| {
            x[0] * x[1] + 0.3 * x[0]
        });
        let form = DirichletForm::assemble(&p, &g, &om, &u.datum).unwrap();
        let (a, b) = form.quadratic_parts();
        let nn = g.num_nodes();
        let quad = |v: &[f64]| -> f64 {
            let mut e = 0.0;
            for i in 0..nn {
                for j in 0..nn {
                    e += v[i] * a[i * nn + j] * v[j];
                }
                e += 2.0 * b[i] * v[i];
            }
            e
        };
        // E(u) − E(0) from both representations
        let zero = vec![0.0; nn];
        let direct = form.energy(&u.values) - form.energy(&zero);
        assert_relative_eq!(quad(&u.values), direct, max_relative = 1e-10);
    }

    #[test]
    fn power_datum_has_bounded_truncation() {
        let (p, g, om) = setup(1, 0.75, 2.0, 16);
        let u = NodeField::from_fn(&g, ExteriorDatum::power(0.0, 1.0, 0.25), |x| {
            x[0].abs().powf(0.25)
        });
        let (e, trunc) = dirichlet_fractional(&p, &u, &om).unwrap();
        assert!(e.is_finite() && e > 0.0);
        assert!(trunc > 0.0 && trunc < 1e-2 * e, "{trunc} vs {e}");
        let bad = NodeField::from_fn(&g, ExteriorDatum::power(0.0, 1.0, 0.8), |_| 0.0);
        assert_eq!(
            dirichlet_fractional(&p, &bad, &om).unwrap_err().kind(),
            "growth-violated"
        );
    }
}
