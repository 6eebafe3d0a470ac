//! Small dense linear algebra for decoder training: just enough to assemble
//! normal equations and solve a symmetric positive-definite system in place.

use super::NefError;

/// Solve `M x = B` for symmetric positive-definite `M` (n x n, row-major)
/// with `k` right-hand sides stored row-major in `b` (n x k). `m` and `b` are
/// overwritten; on success `b` holds the solution.
pub fn cholesky_solve_in_place(
    n: usize,
    m: &mut [f64],
    k: usize,
    b: &mut [f64],
) -> Result<(), NefError> {
    assert_eq!(m.len(), n * n);
    assert_eq!(b.len(), n * k);
    // Factor M = L L^T, storing L in the lower triangle.
    for j in 0..n {
        let mut diag = m[j * n + j];
        for p in 0..j {
            diag -= m[j * n + p] * m[j * n + p];
        }
        if !(diag.is_finite() && diag > 0.0) {
            return Err(NefError::SingularSystem { pivot: j, value: diag });
        }
        let l_jj = diag.sqrt();
        m[j * n + j] = l_jj;
        for i in (j + 1)..n {
            let mut sum = m[i * n + j];
            for p in 0..j {
                sum -= m[i * n + p] * m[j * n + p];
            }
            m[i * n + j] = sum / l_jj;
        }
    }
    // Forward substitution: L y = B.
    for i in 0..n {
        for p in 0..i {
            let l_ip = m[i * n + p];
            for c in 0..k {
                let y_p = b[p * k + c];
                b[i * k + c] -= l_ip * y_p;
            }
        }
        let l_ii = m[i * n + i];
        for c in 0..k {
            b[i * k + c] /= l_ii;
        }
    }
    // Back substitution: L^T x = y.
    for i in (0..n).rev() {
        for p in (i + 1)..n {
            let l_pi = m[p * n + i];
            for c in 0..k {
                let x_p = b[p * k + c];
                b[i * k + c] -= l_pi * x_p;
            }
        }
        let l_ii = m[i * n + i];
        for c in 0..k {
            b[i * k + c] /= l_ii;
        }
    }
    Ok(())
}

/// `out = A^T A` for row-major `A` (rows x n). `out` must be `n * n`.
pub fn gram(rows: usize, n: usize, a: &[f64], out: &mut [f64]) {
    assert_eq!(a.len(), rows * n);
    assert_eq!(out.len(), n * n);
    out.fill(0.0);
    for r in 0..rows {
        let row = &a[r * n..(r + 1) * n];
        for i in 0..n {
            let ai = row[i];
            if ai == 0.0 {
                continue;
            }
            for j in i..n {
                out[i * n + j] += ai * row[j];
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            out[i * n + j] = out[j * n + i];
        }
    }
}

/// `out = A^T Y` for row-major `A` (rows x n) and `Y` (rows x k).
pub fn cross(rows: usize, n: usize, a: &[f64], k: usize, y: &[f64], out: &mut [f64]) {
    assert_eq!(a.len(), rows * n);
    assert_eq!(y.len(), rows * k);
    assert_eq!(out.len(), n * k);
    out.fill(0.0);
    for r in 0..rows {
        let arow = &a[r * n..(r + 1) * n];
        let yrow = &y[r * k..(r + 1) * k];
        for i in 0..n {
            let ai = arow[i];
            if ai == 0.0 {
                continue;
            }
            for c in 0..k {
                out[i * k + c] += ai * yrow[c];
            }
        }
    }
}
