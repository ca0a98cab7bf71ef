//! Small dense linear algebra used by jets and topology: Householder tangent
//! frames, Jacobi eigenvalues for tiny symmetric matrices, random orthogonal
//! matrices, and orthogonality checks.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Frobenius norm of `R^T R - I` for a square matrix given in row-major form.
pub fn orthogonality_defect(r: &[Vec<f64>]) -> f64 {
    let n = r.len();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let mut dot = 0.0;
            for k in 0..n {
                dot += r[k][i] * r[k][j];
            }
            let target = if i == j { 1.0 } else { 0.0 };
            acc += (dot - target) * (dot - target);
        }
    }
    acc.sqrt()
}

/// Deterministic orthonormal tangent frame at a unit point `x` on S^n.
///
/// Uses the Householder reflection through `v = x + s e_0` (s = sign of x_0,
/// avoiding cancellation), which maps `e_0` to `-s x`; the images of
/// `e_1, ..., e_n` are then an orthonormal basis of the tangent space at x.
/// Returns `n` vectors of length `n + 1`.
pub fn tangent_frame(x: &[f64]) -> Vec<Vec<f64>> {
    let v_len = x.len();
    let n = v_len - 1;
    let s = if x[0] >= 0.0 { 1.0 } else { -1.0 };
    let mut v = x.to_vec();
    v[0] += s;
    let vv: f64 = v.iter().map(|a| a * a).sum();
    let mut frame = Vec::with_capacity(n);
    for k in 1..=n {
        // column k of H = I - 2 v v^T / (v^T v)
        let mut col = vec![0.0; v_len];
        col[k] = 1.0;
        let factor = 2.0 * v[k] / vv;
        for i in 0..v_len {
            col[i] -= factor * v[i];
        }
        frame.push(col);
    }
    frame
}

/// Eigenvalues of a small symmetric matrix by cyclic Jacobi rotations.
///
/// Sizes here are at most a handful (tangential Hessians, Gram blocks), so
/// convergence is immediate. Returns eigenvalues in ascending order.
pub fn symmetric_eigenvalues(a: &[Vec<f64>]) -> Vec<f64> {
    let n = a.len();
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![a[0][0]];
    }
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let scale: f64 = m
        .iter()
        .flat_map(|row| row.iter().map(|x| x * x))
        .sum::<f64>()
        .sqrt()
        .max(1e-300);
    for _sweep in 0..60 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[i][j] * m[i][j];
            }
        }
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if m[p][q].abs() <= 1e-18 * scale {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut eigs: Vec<f64> = (0..n).map(|i| m[i][i]).collect();
    eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    eigs
}

/// Smallest singular value of an m x n matrix with m <= n, via eigenvalues
/// of the (tiny) Gram matrix A A^T.
pub fn smallest_singular_value(a: &[Vec<f64>]) -> f64 {
    let m = a.len();
    if m == 0 {
        return 0.0;
    }
    let mut gram = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in 0..m {
            gram[i][j] = a[i].iter().zip(&a[j]).map(|(x, y)| x * y).sum();
        }
    }
    let eigs = symmetric_eigenvalues(&gram);
    eigs[0].max(0.0).sqrt()
}

/// Haar-ish random orthogonal matrix from Gram-Schmidt on Gaussian columns.
pub fn random_orthogonal<R: Rng>(n: usize, rng: &mut R) -> Vec<Vec<f64>> {
    loop {
        let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n);
        for _ in 0..n {
            let col: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
            cols.push(col);
        }
        let mut ok = true;
        for i in 0..n {
            for j in 0..i {
                let dot: f64 = cols[i].iter().zip(&cols[j]).map(|(a, b)| a * b).sum();
                let prev = cols[j].clone();
                for (a, b) in cols[i].iter_mut().zip(prev) {
                    *a -= dot * b;
                }
            }
            let norm: f64 = cols[i].iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm < 1e-8 {
                ok = false;
                break;
            }
            for a in cols[i].iter_mut() {
                *a /= norm;
            }
        }
        if !ok {
            continue;
        }
        // store row-major: entry [i][j] = column j's i-th coordinate
        let mut rows = vec![vec![0.0; n]; n];
        for (j, col) in cols.iter().enumerate() {
            for i in 0..n {
                rows[i][j] = col[i];
            }
        }
        return rows;
    }
}

/// Matrix-vector product for a row-major square matrix.
pub fn mat_vec(r: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    r.iter().map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
}
