//! Jacobi-preconditioned conjugate gradients for symmetric positive definite
//! operators given as closures.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOutcome {
    pub iterations: usize,
    pub residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A x = b` starting from the contents of `x`.
///
/// Stops when `‖b − A x‖ ≤ rtol · ‖b‖` (or `≤ rtol` when `b = 0`).
pub fn pcg<F>(
    apply: F,
    diag: &[f64],
    b: &[f64],
    x: &mut [f64],
    rtol: f64,
    max_iter: usize,
) -> Result<CgOutcome>
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    assert_eq!(x.len(), n);
    assert_eq!(diag.len(), n);
    if n == 0 {
        return Ok(CgOutcome {
            iterations: 0,
            residual: 0.0,
        });
    }
    let bnorm = dot(b, b).sqrt();
    let scale = if bnorm > 0.0 { bnorm } else { 1.0 };
    let mut ax = vec![0.0; n];
    apply(x, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let inv: Vec<f64> = diag
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut z: Vec<f64> = r.iter().zip(&inv).map(|(ri, mi)| ri * mi).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut res = dot(&r, &r).sqrt() / scale;
    for it in 0..max_iter {
        if res <= rtol {
            return Ok(CgOutcome {
                iterations: it,
                residual: res,
            });
        }
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::SolverStagnation {
                residual: res,
                iterations: it,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        // refresh the residual now and then to limit drift
        if (it + 1) % 50 == 0 {
            apply(x, &mut ax);
            for i in 0..n {
                r[i] = b[i] - ax[i];
            }
        }
        for i in 0..n {
            z[i] = r[i] * inv[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        res = dot(&r, &r).sqrt() / scale;
    }
    if res <= rtol {
        return Ok(CgOutcome {
            iterations: max_iter,
            residual: res,
        });
    }
    Err(Error::SolverStagnation {
        residual: res,
        iterations: max_iter,
    })
}

/// Dense symmetric matrix–vector product with the matrix stored row-major.
#[cfg(test)]
pub(crate) fn dense_apply(a: &[f64], n: usize, x: &[f64], y: &mut [f64]) {
    use rayon::prelude::*;
    y.par_iter_mut().enumerate().for_each(|(i, yi)| {
        let row = &a[i * n..(i + 1) * n];
        *yi = row.iter().zip(x).map(|(r, v)| r * v).sum();
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn solves_random_spd_system_against_dense_factorization() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 30;
        let m: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = (0..n).map(|k| m[k * n + i] * m[k * n + j]).sum::<f64>();
            }
            a[i * n + i] += 0.5;
        }
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let diag: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
        let mut x = vec![0.0; n];
        pcg(
            |v, out| dense_apply(&a, n, v, out),
            &diag,
            &b,
            &mut x,
            1e-13,
            500,
        )
        .unwrap();
        let dense = nalgebra::DMatrix::from_row_slice(n, n, &a);
        let exact = dense
            .cholesky()
            .unwrap()
            .solve(&nalgebra::DVector::from_vec(b.clone()));
        for i in 0..n {
            assert!((x[i] - exact[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn reports_stagnation() {
        let a = [1.0, 0.0, 0.0, 1e-14];
        let mut x = [0.0; 2];
        let err = pcg(
            |v, out| dense_apply(&a, 2, v, out),
            &[1.0, 1.0],
            &[1.0, 1.0],
            &mut x,
            1e-15,
            1,
        )
        .unwrap_err();
        assert_eq!(err.kind(), "solver-stagnation");
    }
}
