//! Dense linear algebra helpers sized for the discretized operators here:
//! power iteration with a deflated second-modulus estimate, partial-pivot
//! LU, modified Gram-Schmidt, and a Jacobi eigensolver for small symmetric
//! oracles.

use crate::error::{Error, Result};
use num_complex::Complex64;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm2_complex(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Modified Gram-Schmidt with a drop tolerance relative to the original
/// vector norm; returns an orthonormal basis of the span.
pub fn orthonormalize(vectors: Vec<Vec<f64>>, tol: f64) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for mut v in vectors {
        let orig = norm2(&v);
        if orig == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for b in &basis {
                let d = dot(b, &v);
                for (vi, bi) in v.iter_mut().zip(b.iter()) {
                    *vi -= d * bi;
                }
            }
        }
        let n = norm2(&v);
        if n > tol.max(1e-12 * orig).max(1e-300) && n / orig > tol {
            for vi in v.iter_mut() {
                *vi /= n;
            }
            basis.push(v);
        }
    }
    basis
}

pub struct PowerResult {
    pub lambda: f64,
    pub vector: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

/// Power iteration for the dominant eigenpair of a linear map given as a
/// matrix-free application. The start vector must have a component along
/// the dominant direction; callers pass a strictly positive start for
/// positivity-improving operators.
pub fn power_iteration(
    n: usize,
    mut apply: impl FnMut(&[f64], &mut [f64]),
    start: Option<Vec<f64>>,
    tol: f64,
    max_iter: usize,
) -> Result<PowerResult> {
    let mut v = start.unwrap_or_else(|| vec![1.0; n]);
    let nv = norm2(&v);
    for x in v.iter_mut() {
        *x /= nv;
    }
    let mut w = vec![0.0; n];
    let mut lambda = 0.0;
    for it in 1..=max_iter {
        apply(&v, &mut w);
        let nw = norm2(&w);
        if nw == 0.0 {
            return Ok(PowerResult {
                lambda: 0.0,
                vector: v,
                residual: 0.0,
                iterations: it,
            });
        }
        lambda = dot(&v, &w);
        // residual |Av - lambda v|_inf
        let mut res: f64 = 0.0;
        for i in 0..n {
            res = res.max((w[i] - lambda * v[i]).abs());
        }
        for i in 0..n {
            v[i] = w[i] / nw;
        }
        if res < tol * lambda.abs().max(1.0) {
            return Ok(PowerResult {
                lambda,
                vector: v,
                residual: res,
                iterations: it,
            });
        }
    }
    Err(Error::Convergence(format!(
        "power iteration stalled after {} iterations (lambda ~ {})",
        max_iter, lambda
    )))
}

/// Second-modulus estimate by power iteration on the deflated operator
/// A - lambda (h nu^T) / (nu^T h), given left and right dominant vectors.
pub fn second_modulus(
    n: usize,
    mut apply: impl FnMut(&[f64], &mut [f64]),
    lambda: f64,
    right: &[f64],
    left: &[f64],
    iters: usize,
) -> f64 {
    let nh = dot(left, right);
    let mut v: Vec<f64> = (0..n)
        .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
        .collect();
    // remove the dominant component
    let mut w = vec![0.0; n];
    let mut rho: f64 = 0.0;
    for _ in 0..iters {
        let c = dot(left, &v) / nh;
        for i in 0..n {
            v[i] -= c * right[i];
        }
        let nv = norm2(&v);
        if nv < 1e-280 {
            return 0.0;
        }
        for x in v.iter_mut() {
            *x /= nv;
        }
        apply(&v, &mut w);
        let c = dot(left, &w) / nh;
        for i in 0..n {
            w[i] -= c * right[i];
        }
        rho = norm2(&w);
        std::mem::swap(&mut v, &mut w);
    }
    let _ = lambda;
    rho
}

/// Complex power iteration for Hermitian positive semidefinite operators
/// (used for largest singular values via the normal operator).
pub fn power_iteration_hermitian(
    n: usize,
    mut apply: impl FnMut(&[Complex64], &mut [Complex64]),
    start: Vec<Complex64>,
    iters: usize,
) -> f64 {
    let mut v = start;
    let nv = norm2_complex(&v);
    if nv == 0.0 {
        return 0.0;
    }
    for x in v.iter_mut() {
        *x /= nv;
    }
    let mut w = vec![Complex64::new(0.0, 0.0); n];
    let mut lambda = 0.0;
    for _ in 0..iters {
        apply(&v, &mut w);
        let nw = norm2_complex(&w);
        if nw < 1e-280 {
            return 0.0;
        }
        lambda = nw;
        for i in 0..n {
            v[i] = w[i] / nw;
        }
    }
    lambda
}

/// Solve A x = b in place by partial-pivot LU; A is row-major n x n.
pub fn lu_solve(a: &mut [f64], b: &mut [f64], n: usize) -> Result<()> {
    assert_eq!(a.len(), n * n);
    assert_eq!(b.len(), n);
    for col in 0..n {
        let mut piv = col;
        let mut best = a[col * n + col].abs();
        for r in (col + 1)..n {
            let v = a[r * n + col].abs();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best < 1e-300 {
            return Err(Error::Convergence("singular matrix in LU solve".into()));
        }
        if piv != col {
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
            }
            b.swap(col, piv);
        }
        let d = a[col * n + col];
        for r in (col + 1)..n {
            let f = a[r * n + col] / d;
            if f == 0.0 {
                continue;
            }
            a[r * n + col] = 0.0;
            for k in (col + 1)..n {
                a[r * n + k] -= f * a[col * n + k];
            }
            b[r] -= f * b[col];
        }
    }
    for col in (0..n).rev() {
        let mut s = b[col];
        for k in (col + 1)..n {
            s -= a[col * n + k] * b[k];
        }
        b[col] = s / a[col * n + col];
    }
    Ok(())
}

/// Eigenvalues of a small symmetric matrix by cyclic Jacobi rotations.
pub fn jacobi_eigenvalues(mut a: Vec<f64>, n: usize) -> Vec<f64> {
    assert_eq!(a.len(), n * n);
    for _sweep in 0..100 {
        let mut off: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[i * n + j] * a[i * n + j];
            }
        }
        if off.sqrt() < 1e-13 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = 0.5 * (aqq - app) / apq;
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    eig.sort_by(|x, y| y.partial_cmp(x).unwrap());
    eig
}
