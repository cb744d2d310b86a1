//! Small-matrix and dense linear-algebra helpers used across the pipeline.
//!
//! Everything here is deterministic: fixed-size 2x2/4x4 work is done in
//! closed form or by LU/SVD, dense work goes through real Schur or symmetric
//! eigendecompositions.

use nalgebra::{DMatrix, Matrix2, Matrix4, Vector4};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub type Mat2 = Matrix2<C64>;
pub type Mat2r = Matrix2<f64>;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// 2x2 symplectic unit, the single-site block of the symplectic form.
pub fn sigma2() -> Mat2 {
    Mat2::new(c(0.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 0.0))
}

pub fn sigma2_real() -> Mat2r {
    Mat2r::new(0.0, 1.0, -1.0, 0.0)
}

pub fn frob2(m: &Mat2) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn frob2r(m: &Mat2r) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn max_imag2(m: &Mat2) -> f64 {
    m.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
}

pub fn real_part2(m: &Mat2) -> Mat2r {
    Mat2r::new(m[(0, 0)].re, m[(0, 1)].re, m[(1, 0)].re, m[(1, 1)].re)
}

pub fn complex_from_real2(m: &Mat2r) -> Mat2 {
    Mat2::new(c(m[(0, 0)], 0.0), c(m[(0, 1)], 0.0), c(m[(1, 0)], 0.0), c(m[(1, 1)], 0.0))
}

/// Eigenvalues of a 2x2 complex matrix, ordered lexicographically by
/// (Re, Im) so downstream bookkeeping is deterministic.
pub fn eig2(m: &Mat2) -> (C64, C64) {
    let tr = m[(0, 0)] + m[(1, 1)];
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let disc = tr * tr - det * 4.0;
    let s = disc.sqrt();
    let a = (tr + s) * 0.5;
    let b = (tr - s) * 0.5;
    order_pair(a, b)
}

pub fn order_pair(a: C64, b: C64) -> (C64, C64) {
    if (a.re, a.im) <= (b.re, b.im) {
        (a, b)
    } else {
        (b, a)
    }
}

/// Kronecker product of two 2x2 complex matrices.
pub fn kron2(a: &Mat2, b: &Mat2) -> Matrix4<C64> {
    let mut out = Matrix4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out[(2 * i + k, 2 * j + l)] = a[(i, j)] * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Column-major vectorization of a 2x2 matrix.
pub fn vec2(m: &Mat2) -> Vector4<C64> {
    Vector4::new(m[(0, 0)], m[(1, 0)], m[(0, 1)], m[(1, 1)])
}

pub fn unvec2(v: &Vector4<C64>) -> Mat2 {
    Mat2::new(v[0], v[2], v[1], v[3])
}

/// Solve a 4x4 complex linear system by LU, reporting the SVD condition
/// number. Fails with `Singular` when the condition number exceeds
/// `cond_cap`.
pub fn solve4(m: &Matrix4<C64>, rhs: &Vector4<C64>, cond_cap: f64, phi: C64) -> Result<(Vector4<C64>, f64)> {
    let svd = nalgebra::SVD::new(*m, false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !cond.is_finite() || cond > cond_cap {
        return Err(Error::Singular { phi, cond });
    }
    let lu = m.lu();
    let sol = lu.solve(rhs).ok_or(Error::Singular { phi, cond })?;
    Ok((sol, cond))
}

/// Minimum-norm least-squares solution of a (possibly singular) 4x4 system,
/// with iterative refinement to compensate the limited accuracy of the
/// small-matrix SVD solve.
pub fn solve4_min_norm(m: &Matrix4<C64>, rhs: &Vector4<C64>, rank_tol: f64) -> Vector4<C64> {
    let svd = nalgebra::SVD::new(*m, true, true);
    let smax = svd.singular_values.max();
    let eps = rank_tol * smax.max(1e-300);
    let mut sol = match svd.solve(rhs, eps) {
        Ok(s) => s,
        Err(_) => return Vector4::zeros(),
    };
    for _ in 0..2 {
        let r = rhs - m * sol;
        if let Ok(corr) = svd.solve(&r, eps) {
            sol += corr;
        }
    }
    sol
}

/// Eigenvalues of a real square matrix through its real Schur form.
pub fn complex_eigs_real(m: &DMatrix<f64>) -> Result<Vec<C64>> {
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let schur = nalgebra::linalg::Schur::try_new(m.clone(), 1e-14, 100_000)
        .ok_or_else(|| Error::Numeric("real Schur iteration failed to converge".into()))?;
    let (_, t) = schur.unpack();
    let mut eigs = Vec::with_capacity(n);
    let scale = t.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1.0);
    let mut i = 0;
    while i < n {
        if i + 1 < n && t[(i + 1, i)].abs() > 1e-14 * scale {
            let a = t[(i, i)];
            let b = t[(i, i + 1)];
            let cc = t[(i + 1, i)];
            let d = t[(i + 1, i + 1)];
            let tr = a + d;
            let det = a * d - b * cc;
            let disc = tr * tr - 4.0 * det;
            if disc < 0.0 {
                let re = tr / 2.0;
                let im = (-disc).sqrt() / 2.0;
                eigs.push(c(re, im));
                eigs.push(c(re, -im));
            } else {
                let s = disc.sqrt();
                eigs.push(c((tr + s) / 2.0, 0.0));
                eigs.push(c((tr - s) / 2.0, 0.0));
            }
            i += 2;
        } else {
            eigs.push(c(t[(i, i)], 0.0));
            i += 1;
        }
    }
    Ok(eigs)
}

/// Eigendecomposition of a real symmetric matrix; returns (values, vectors)
/// with values sorted ascending and vectors as columns in matching order.
pub fn sym_eig_sorted(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let se = nalgebra::SymmetricEigen::new(m.clone());
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].partial_cmp(&se.eigenvalues[b]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vecs = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vecs.set_column(col, &se.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Square root of a symmetric positive-definite matrix.
pub fn sqrt_spd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (vals, vecs) = sym_eig_sorted(m);
    if vals[0] <= 0.0 {
        return Err(Error::NotPositive { min_eig: vals[0] });
    }
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        vals.len(),
        vals.iter().map(|v| v.sqrt()),
    ));
    Ok(&vecs * d * vecs.transpose())
}

/// Minimum eigenvalue of a Hermitian complex matrix via the real symmetric
/// embedding [[A, -B], [B, A]] of H = A + iB.
pub fn hermitian_min_eig(h: &DMatrix<C64>) -> f64 {
    let n = h.nrows();
    let mut emb = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = h[(i, j)];
            emb[(i, j)] = z.re;
            emb[(n + i, n + j)] = z.re;
            emb[(i, n + j)] = -z.im;
            emb[(n + i, j)] = z.im;
        }
    }
    let (vals, _) = sym_eig_sorted(&emb);
    vals[0]
}

/// Entrywise l1 norm.
pub fn l1_norm(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|x| x.abs()).sum()
}

/// Relative residual of X^T G + G X = Y.
pub fn lyapunov_residual(x: &DMatrix<f64>, g: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
    let r = x.transpose() * g + g * x - y;
    let ny = y.norm().max(1e-300);
    r.norm() / ny
}

/// Solve X^T G + G X = Y by real Schur reduction (Bartels-Stewart).
///
/// Scales to a few hundred rows; fails with `Singular` when eigenvalue sums
/// of X vanish and the fixed point is not unique.
pub fn solve_lyapunov_schur(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = x.nrows();
    assert_eq!(x.ncols(), n);
    assert_eq!(y.nrows(), n);
    let schur = nalgebra::linalg::Schur::try_new(x.clone(), 1e-14, 100_000)
        .ok_or_else(|| Error::Numeric("real Schur iteration failed to converge".into()))?;
    let (q, t) = schur.unpack();
    let cmat = q.transpose() * y * &q;
    let gp = solve_quasi_triangular_sylvester(&t, &cmat)?;
    Ok(&q * gp * q.transpose())
}

/// Solve T^T G + G T = C with T quasi-upper-triangular.
fn solve_quasi_triangular_sylvester(t: &DMatrix<f64>, cmat: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = t.nrows();
    let scale = t.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1.0);
    // Diagonal block boundaries of the quasi-triangular factor.
    let mut blocks: Vec<(usize, usize)> = Vec::new();
    let mut i = 0;
    while i < n {
        if i + 1 < n && t[(i + 1, i)].abs() > 1e-14 * scale {
            blocks.push((i, 2));
            i += 2;
        } else {
            blocks.push((i, 1));
            i += 1;
        }
    }
    let nb = blocks.len();
    let mut g = DMatrix::<f64>::zeros(n, n);
    for bi in 0..nb {
        let (i0, ni) = blocks[bi];
        for bj in 0..nb {
            let (j0, nj) = blocks[bj];
            // RHS with already-computed couplings removed.
            let mut rhs = cmat.view((i0, j0), (ni, nj)).into_owned();
            for (k0, nk) in blocks.iter().take(bi).copied() {
                // (T^T)_{I,K} = T_{K,I}^T, nonzero for K < I.
                let a_ik = t.view((k0, i0), (nk, ni)).transpose();
                let g_kj = g.view((k0, j0), (nk, nj));
                rhs -= a_ik * g_kj;
            }
            for (k0, nk) in blocks.iter().take(bj).copied() {
                let g_ik = g.view((i0, k0), (ni, nk));
                let t_kj = t.view((k0, j0), (nk, nj));
                rhs -= g_ik * t_kj;
            }
            // Small Sylvester system A_II X + X T_JJ = rhs via Kronecker form.
            let a_ii = t.view((i0, i0), (ni, ni)).transpose().into_owned();
            let t_jj = t.view((j0, j0), (nj, nj)).into_owned();
            let dim = ni * nj;
            let mut m = DMatrix::<f64>::zeros(dim, dim);
            // vec is column-major over the (ni x nj) unknown block.
            for col in 0..nj {
                for row in 0..ni {
                    let r = col * ni + row;
                    for col2 in 0..nj {
                        for row2 in 0..ni {
                            let cidx = col2 * ni + row2;
                            let mut v = 0.0;
                            if col == col2 {
                                v += a_ii[(row, row2)];
                            }
                            if row == row2 {
                                v += t_jj[(col2, col)];
                            }
                            m[(r, cidx)] += v;
                        }
                    }
                }
            }
            let b = nalgebra::DVector::from_iterator(dim, rhs.iter().copied());
            let lu = m.clone().lu();
            let sol = lu.solve(&b).ok_or(Error::Singular {
                phi: c(f64::NAN, f64::NAN),
                cond: f64::INFINITY,
            })?;
            // Guard against near-singular small blocks that LU lets through.
            let res = (&m * &sol - &b).norm();
            if !res.is_finite() || res > 1e-8 * scale * sol.norm().max(1.0) {
                return Err(Error::Singular { phi: c(f64::NAN, f64::NAN), cond: f64::INFINITY });
            }
            for col in 0..nj {
                for row in 0..ni {
                    g[(i0 + row, j0 + col)] = sol[col * ni + row];
                }
            }
        }
    }
    Ok(g)
}

/// Solve X^T G + G X = Y by direct LU on the Kronecker-form linear system.
///
/// Memory grows as n^4; intended for modest n as an independent check of the
/// Schur-based route.
pub fn solve_lyapunov_vectorized(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = x.nrows();
    let dim = n * n;
    let xt = x.transpose();
    let mut m = DMatrix::<f64>::zeros(dim, dim);
    // vec(X^T G) = (I (x) X^T) vec G, vec(G X) = (X^T (x) I) vec G.
    for col in 0..n {
        for row in 0..n {
            let r = col * n + row;
            for k in 0..n {
                m[(r, col * n + k)] += xt[(row, k)];
                m[(r, k * n + row)] += xt[(col, k)];
            }
        }
    }
    let b = nalgebra::DVector::from_iterator(dim, y.iter().copied());
    let lu = m.clone().lu();
    let sol = lu.solve(&b).ok_or(Error::Singular {
        phi: c(f64::NAN, f64::NAN),
        cond: f64::INFINITY,
    })?;
    let res = (&m * &sol - &b).norm();
    if !res.is_finite() || res > 1e-7 * b.norm().max(sol.norm()).max(1.0) {
        return Err(Error::Singular { phi: c(f64::NAN, f64::NAN), cond: f64::INFINITY });
    }
    let mut g = DMatrix::<f64>::zeros(n, n);
    for col in 0..n {
        for row in 0..n {
            g[(row, col)] = sol[col * n + row];
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn eig2_trace_det_identity() {
        let m = Mat2::new(c(1.0, 0.5), c(-0.3, 2.0), c(0.7, -0.1), c(-2.0, 0.4));
        let (b1, b2) = eig2(&m);
        let tr = m[(0, 0)] + m[(1, 1)];
        let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
        assert!((b1 + b2 - tr).norm() < 1e-12);
        assert!((b1 * b2 - det).norm() < 1e-12);
    }

    #[test]
    fn eig2_zero_matrix() {
        let (b1, b2) = eig2(&Mat2::zeros());
        assert_eq!(b1, c(0.0, 0.0));
        assert_eq!(b2, c(0.0, 0.0));
    }

    #[test]
    fn lyapunov_schur_matches_vectorized() {
        // Deterministic pseudo-random stable X and symmetric Y.
        let n = 14;
        let mut seed = 0x9e3779b97f4a7c15u64;
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let mut x = DMatrix::<f64>::zeros(n, n);
        let mut y = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                x[(i, j)] = next();
                y[(i, j)] = next();
            }
            x[(i, i)] += 4.0; // push spectrum to the right half-plane
        }
        let ys = (&y + y.transpose()) * 0.5;
        let g1 = solve_lyapunov_schur(&x, &ys).unwrap();
        let g2 = solve_lyapunov_vectorized(&x, &ys).unwrap();
        assert_relative_eq!(g1, g2, epsilon = 1e-9);
        assert!(lyapunov_residual(&x, &g1, &ys) < 1e-11);
    }

    #[test]
    fn lyapunov_singular_detected() {
        // X with eigenvalues +1 and -1 makes beta_i + beta_j = 0 possible.
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let y = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
        assert!(solve_lyapunov_schur(&x, &y).is_err());
    }

    #[test]
    fn hermitian_min_eig_diagonal() {
        let mut h = DMatrix::<C64>::zeros(3, 3);
        h[(0, 0)] = c(2.0, 0.0);
        h[(1, 1)] = c(-0.5, 0.0);
        h[(2, 2)] = c(1.0, 0.0);
        h[(0, 1)] = c(0.0, 0.3);
        h[(1, 0)] = c(0.0, -0.3);
        let min = hermitian_min_eig(&h);
        assert!(min < -0.5 && min > -0.6);
    }

    #[test]
    fn complex_eigs_of_rotation_block() {
        let m = DMatrix::from_row_slice(2, 2, &[0.3, 2.0, -2.0, 0.3]);
        let eigs = complex_eigs_real(&m).unwrap();
        let mut ims: Vec<f64> = eigs.iter().map(|z| z.im).collect();
        ims.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_relative_eq!(ims[0], -2.0, epsilon = 1e-12);
        assert_relative_eq!(ims[1], 2.0, epsilon = 1e-12);
        assert_relative_eq!(eigs[0].re, 0.3, epsilon = 1e-12);
    }
}
