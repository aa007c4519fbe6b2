use alloc::vec;
use alloc::vec::Vec;

use crate::math::{dot, norm2};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Jacobi-preconditioned conjugate gradients for a symmetric positive
/// definite operator given as a closure `y = A x`.
pub fn pcg<F>(apply: F, diag: &[f64], b: &[f64], x0: Option<&[f64]>, rtol: f64, max_iter: usize) -> Result<CgOutcome>
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    let mut x = x0.map_or_else(|| vec![0.0; n], |x| x.to_vec());
    let mut ax = vec![0.0; n];
    apply(&x, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let bnorm = norm2(b).max(f64::MIN_POSITIVE);
    let precond = |r: &[f64]| -> Vec<f64> {
        r.iter()
            .zip(diag)
            .map(|(ri, d)| if *d > 0.0 { ri / d } else { *ri })
            .collect()
    };
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 0..=max_iter {
        let res = norm2(&r) / bnorm;
        if res <= rtol {
            return Ok(CgOutcome {
                x,
                iterations: it,
                relative_residual: res,
            });
        }
        if it == max_iter {
            return Err(Error::NoConvergence {
                what: "conjugate gradients",
                iterations: max_iter,
                residual: res,
            });
        }
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::NotPositiveDefinite { pivot: it });
        }
        let a = rz / pap;
        for i in 0..n {
            x[i] += a * p[i];
            r[i] -= a * ap[i];
        }
        z = precond(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    unreachable!()
}
