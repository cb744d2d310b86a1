//! Independent brute-force verifiers: dense finite-ring fixed-point solves
//! and exact master-equation steady states for tiny chains. These arbitrate
//! every sign and normalization convention in the symbol pipeline.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{
    c, complex_eigs_real, hermitian_min_eig, lyapunov_residual, sigma2_real,
    solve_lyapunov_schur, solve_lyapunov_vectorized, Mat2r,
};
use crate::model::{ModelSpec, Statistics};
use crate::steady::CovarianceField;

/// Dense real-space matrices of the covariance equation of motion on a
/// periodic ring of `l` sites: d gamma / dt = -(X^T gamma + gamma X) + Y.
/// Indexing is site-major: row 2 j + nu for site j and coordinate nu.
#[derive(Debug, Clone)]
pub struct FiniteRing {
    pub statistics: Statistics,
    pub l: usize,
    pub x: DMatrix<f64>,
    pub y: DMatrix<f64>,
}

/// Assembled block-circulant Hamiltonian of the ring, as a complex matrix
/// (real for bosons, purely imaginary for fermions).
pub fn ring_hamiltonian(spec: &ModelSpec, l: usize) -> Result<DMatrix<C64>> {
    let n = 2 * l;
    let mut h = DMatrix::<C64>::zeros(n, n);
    for d in spec.hamiltonian.offsets().collect::<Vec<_>>() {
        let blk = spec.hamiltonian.eval_block(d, &spec.params)?;
        for j in 0..l {
            let k = (j as i64 - d).rem_euclid(l as i64) as usize;
            for r in 0..2 {
                for s in 0..2 {
                    h[(2 * j + r, 2 * k + s)] += blk[(r, s)];
                }
            }
        }
    }
    Ok(h)
}

/// Assembled bath matrix M = sum over channels and translations of the
/// outer product l (x) conj(l) on the ring.
pub fn ring_bath(spec: &ModelSpec, l: usize) -> Result<DMatrix<C64>> {
    let n = 2 * l;
    let mut m = DMatrix::<C64>::zeros(n, n);
    for ch in &spec.lindblads {
        let offsets: Vec<i64> = ch.offsets().collect();
        for s in 0..l {
            let mut v = vec![c(0.0, 0.0); n];
            for &j in &offsets {
                let vals = ch.eval_vec(j, &spec.params)?;
                let site = (s as i64 + j).rem_euclid(l as i64) as usize;
                v[2 * site] += vals[0];
                v[2 * site + 1] += vals[1];
            }
            for a in 0..n {
                for b in 0..n {
                    m[(a, b)] += v[a] * v[b].conj();
                }
            }
        }
    }
    Ok(m)
}

fn assembled_sigma(l: usize) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(2 * l, 2 * l);
    let s2 = sigma2_real();
    for j in 0..l {
        for r in 0..2 {
            for q in 0..2 {
                s[(2 * j + r, 2 * j + q)] = s2[(r, q)];
            }
        }
    }
    s
}

/// Assemble the dense drift/forcing pair (X, Y) on a ring of `l` sites.
///
/// Fermions: X = -4i H + 2 M_r (real since H is purely imaginary),
///           Y = 4 M_i (real antisymmetric).
/// Bosons:   X = -(4 H + 2 M_i) sigma, Y = 4 sigma^T M_r sigma
///           (real symmetric positive semidefinite).
pub fn assemble_ring(spec: &ModelSpec, l: usize) -> Result<FiniteRing> {
    if l == 0 {
        return Err(Error::InvalidArg("ring size must be positive".into()));
    }
    let n = 2 * l;
    let h = ring_hamiltonian(spec, l)?;
    let m = ring_bath(spec, l)?;
    let m_r = m.map(|z| z.re);
    let m_i = m.map(|z| z.im);
    let (x, y) = match spec.statistics {
        Statistics::Fermion => {
            let max_re = h.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
            if max_re > 1e-12 {
                return Err(Error::InvalidModel("fermionic ring Hamiltonian not purely imaginary".into()));
            }
            let h_im = h.map(|z| z.im);
            let x = h_im * 4.0 + &m_r * 2.0;
            let y = &m_i * 4.0;
            (x, y)
        }
        Statistics::Boson => {
            let max_im = h.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
            if max_im > 1e-12 {
                return Err(Error::InvalidModel("bosonic ring Hamiltonian not real".into()));
            }
            let h_re = h.map(|z| z.re);
            let sig = assembled_sigma(l);
            let x = -(h_re * 4.0 + &m_i * 2.0) * &sig;
            let y = sig.transpose() * (&m_r * 4.0) * &sig;
            (x, y)
        }
    };
    // Forcing symmetry class.
    let dev = match spec.statistics {
        Statistics::Fermion => (&y + y.transpose()).norm(),
        Statistics::Boson => (&y - y.transpose()).norm(),
    };
    if dev > 1e-10 * y.norm().max(1.0) {
        return Err(Error::Numeric("assembled forcing has wrong symmetry".into()));
    }
    let _ = n;
    Ok(FiniteRing { statistics: spec.statistics, l, x, y })
}

/// Physicality diagnostics of a dense steady-state covariance.
#[derive(Debug, Clone)]
pub struct PhysicalCheck {
    /// All drift eigenvalues have nonnegative real part (relaxing dynamics).
    pub stable: bool,
    /// Statistics-specific positivity: min eig(gamma + i sigma) >= -1e-8 for
    /// bosons, max singular value <= 1 + 1e-8 for fermions.
    pub positivity_ok: bool,
    /// The metric behind `positivity_ok` (min eigenvalue resp. max singular
    /// value).
    pub metric: f64,
}

/// Steady-state covariance of a finite ring from a dense fixed-point solve.
#[derive(Debug, Clone)]
pub struct DenseSolution {
    pub statistics: Statistics,
    pub l: usize,
    pub gamma: DMatrix<f64>,
    pub residual: f64,
    pub check: PhysicalCheck,
}

impl DenseSolution {
    /// 2x2 block of gamma at (site r mod L, site 0).
    pub fn block(&self, r: i64) -> Mat2r {
        let j = r.rem_euclid(self.l as i64) as usize;
        let mut out = Mat2r::zeros();
        for a in 0..2 {
            for b in 0..2 {
                out[(a, b)] = self.gamma[(2 * j + a, b)];
            }
        }
        out
    }
}

fn physical_check(ring: &FiniteRing, gamma: &DMatrix<f64>) -> Result<PhysicalCheck> {
    let eigs = complex_eigs_real(&ring.x)?;
    let scale = eigs.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let stable = eigs.iter().all(|z| z.re >= -1e-10 * scale);
    let n = gamma.nrows();
    match ring.statistics {
        Statistics::Boson => {
            let sig = assembled_sigma(ring.l);
            let mut h = DMatrix::<C64>::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    h[(i, j)] = c(gamma[(i, j)], sig[(i, j)]);
                }
            }
            let min_eig = hermitian_min_eig(&h);
            Ok(PhysicalCheck { stable, positivity_ok: min_eig >= -1e-8, metric: min_eig })
        }
        Statistics::Fermion => {
            let svd = nalgebra::SVD::new(gamma.clone(), false, false);
            let max_sv = svd.singular_values.max();
            Ok(PhysicalCheck { stable, positivity_ok: max_sv <= 1.0 + 1e-8, metric: max_sv })
        }
    }
}

/// Solve the dense fixed-point equation X^T gamma + gamma X = Y by real
/// Schur reduction. The solution is returned even when unphysical (e.g. for
/// pumping bosonic parameters); `check` records the diagnosis.
pub fn dense_lyapunov(ring: &FiniteRing) -> Result<DenseSolution> {
    let gamma = solve_lyapunov_schur(&ring.x, &ring.y)?;
    let residual = lyapunov_residual(&ring.x, &gamma, &ring.y);
    if residual > 1e-10 {
        return Err(Error::Numeric(format!("dense fixed-point residual {residual:.3e} above 1e-10")));
    }
    let check = physical_check(ring, &gamma)?;
    Ok(DenseSolution { statistics: ring.statistics, l: ring.l, gamma, residual, check })
}

/// Same fixed point through the explicit Kronecker-form linear system
/// (memory grows as L^4; used to cross-check the Schur route at small L).
pub fn dense_lyapunov_vectorized(ring: &FiniteRing) -> Result<DenseSolution> {
    let gamma = solve_lyapunov_vectorized(&ring.x, &ring.y)?;
    let residual = lyapunov_residual(&ring.x, &gamma, &ring.y);
    if residual > 1e-10 {
        return Err(Error::Numeric(format!("dense fixed-point residual {residual:.3e} above 1e-10")));
    }
    let check = physical_check(ring, &gamma)?;
    Ok(DenseSolution { statistics: ring.statistics, l: ring.l, gamma, residual, check })
}

// ---------------------------------------------------------------------------
// Exact master equation on tiny chains.

fn kron_c(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    a.kronecker(b)
}

fn identity_c(n: usize) -> DMatrix<C64> {
    DMatrix::identity(n, n)
}

/// Majorana operators on the 2^L-dimensional fermionic Fock space, built
/// from Pauli strings: w_{1,j} = Z^j X, w_{2,j} = Z^j (i(f - f^dag)).
fn majorana_ops(l: usize) -> Vec<DMatrix<C64>> {
    let z = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]);
    let x = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
    let w2 = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(0.0, 0.0)]);
    let mut ops = Vec::with_capacity(2 * l);
    for j in 0..l {
        for local in [&x, &w2] {
            let mut op = DMatrix::from_element(1, 1, c(1.0, 0.0));
            for site in 0..l {
                let factor = if site < j {
                    z.clone()
                } else if site == j {
                    local.clone()
                } else {
                    identity_c(2)
                };
                op = kron_c(&op, &factor);
            }
            ops.push(op);
        }
    }
    ops
}

/// Single-site ladder operator truncated at `cutoff` occupations.
fn boson_annihilator(cutoff: usize) -> DMatrix<C64> {
    let mut b = DMatrix::<C64>::zeros(cutoff, cutoff);
    for n in 1..cutoff {
        b[(n - 1, n)] = c((n as f64).sqrt(), 0.0);
    }
    b
}

/// Quadrature operators u_{1,j}, u_{2,j} on the truncated L-site Fock space.
fn quadrature_ops(l: usize, cutoff: usize) -> Vec<DMatrix<C64>> {
    let b = boson_annihilator(cutoff);
    let u1 = &b + b.adjoint();
    let u2 = (&b - b.adjoint()).map(|z| z * c(0.0, 1.0));
    let mut ops = Vec::with_capacity(2 * l);
    for j in 0..l {
        for local in [&u1, &u2] {
            let mut op = DMatrix::from_element(1, 1, c(1.0, 0.0));
            for site in 0..l {
                let factor = if site == j { local.clone() } else { identity_c(cutoff) };
                op = kron_c(&op, &factor);
            }
            ops.push(op);
        }
    }
    ops
}

/// Build the full Liouvillian as a dim^2 x dim^2 matrix in column-stacking
/// vectorization from a Hamiltonian and a list of Lindblad operators.
fn liouvillian(h: &DMatrix<C64>, lindblads: &[DMatrix<C64>]) -> DMatrix<C64> {
    let d = h.nrows();
    let id = identity_c(d);
    let mut sup = kron_c(&id, h).map(|z| z * c(0.0, -1.0));
    sup += kron_c(&h.transpose(), &id).map(|z| z * c(0.0, 1.0));
    for lop in lindblads {
        let ldag_l = lop.adjoint() * lop;
        sup += kron_c(&lop.conjugate(), lop);
        sup += kron_c(&id, &ldag_l).map(|z| z * c(-0.5, 0.0));
        sup += kron_c(&ldag_l.transpose(), &id).map(|z| z * c(-0.5, 0.0));
    }
    sup
}

/// Steady state of a Liouvillian by shifted inverse iteration at eigenvalue
/// zero, normalized to unit trace. Fails with `DegenerateKernel` when a
/// second, independent kernel vector exists.
fn steady_density_matrix(sup: &DMatrix<C64>, dim: usize) -> Result<DMatrix<C64>> {
    let n = sup.nrows();
    let scale = sup.norm().max(1.0);
    let shift = c(1e-9 * scale, 0.0);
    let mut shifted = sup.clone();
    for i in 0..n {
        shifted[(i, i)] -= shift;
    }
    let lu = shifted.lu();

    let iterate = |start: nalgebra::DVector<C64>, deflate: Option<&nalgebra::DVector<C64>>| -> Result<(nalgebra::DVector<C64>, f64)> {
        let mut v = start;
        let norm = v.norm();
        if norm == 0.0 {
            return Err(Error::Numeric("zero start vector".into()));
        }
        v /= c(norm, 0.0);
        let mut res = f64::INFINITY;
        for _ in 0..60 {
            let mut w = lu
                .solve(&v)
                .ok_or_else(|| Error::Numeric("shifted Liouvillian is singular".into()))?;
            if let Some(d) = deflate {
                let overlap = d.dotc(&w);
                w -= d * overlap;
            }
            let norm = w.norm();
            if norm == 0.0 {
                return Err(Error::Numeric("inverse iteration collapsed".into()));
            }
            w /= c(norm, 0.0);
            res = (sup * &w).norm() / scale;
            let diff = (&w - &v).norm().min((&w + &v).norm());
            v = w;
            if res < 1e-13 && diff < 1e-12 {
                break;
            }
        }
        Ok((v, res))
    };

    // Start from the maximally mixed state, which overlaps the steady state
    // for relaxing dynamics.
    let mut start = nalgebra::DVector::<C64>::zeros(n);
    for i in 0..dim {
        start[i * dim + i] = c(1.0, 0.0);
    }
    let (v1, res1) = iterate(start, None)?;
    if res1 > 1e-10 {
        return Err(Error::Numeric(format!("steady-state residual {res1:.3e} did not converge")));
    }
    // Deflated second iteration detects kernel dimension > 1.
    let mut start2 = nalgebra::DVector::<C64>::zeros(n);
    for i in 0..n {
        let t = (i as f64 * 0.7391) % 1.0;
        start2[i] = c(t - 0.5, (t * t) - 0.3);
    }
    let overlap = v1.dotc(&start2);
    start2 -= &v1 * overlap;
    if start2.norm() > 1e-8 {
        if let Ok((_, res2)) = iterate(start2, Some(&v1)) {
            if res2 < 1e-10 {
                return Err(Error::DegenerateKernel);
            }
        }
    }

    let mut rho = DMatrix::<C64>::zeros(dim, dim);
    for col in 0..dim {
        for row in 0..dim {
            rho[(row, col)] = v1[col * dim + row];
        }
    }
    let rho_h = (rho.adjoint() + &rho) * c(0.5, 0.0);
    let tr: C64 = (0..dim).map(|i| rho_h[(i, i)]).sum();
    if tr.norm() < 1e-12 {
        return Err(Error::Numeric("steady-state candidate has vanishing trace".into()));
    }
    Ok(rho_h.map(|z| z / tr))
}

/// Exact steady state of a fermionic ring with L <= 5 sites: builds the full
/// Liouvillian on the 2^L-dimensional Fock space, extracts its kernel, and
/// returns the Majorana covariance gamma_{ab} = (i/2) tr(rho [w_a, w_b]).
pub fn exact_master_equation(spec: &ModelSpec, l: usize) -> Result<ExactSolution> {
    if spec.statistics != Statistics::Fermion {
        return Err(Error::InvalidArg("exact_master_equation expects a fermionic model; use exact_master_equation_boson for bosons".into()));
    }
    if l == 0 || l > 5 {
        return Err(Error::InvalidArg(format!("fermionic exact oracle supports 1..=5 sites, got {l}")));
    }
    let dim = 1usize << l;
    let w = majorana_ops(l);
    let hmat = ring_hamiltonian(spec, l)?;
    let mut h_op = DMatrix::<C64>::zeros(dim, dim);
    for a in 0..2 * l {
        for b in 0..2 * l {
            let coeff = hmat[(a, b)];
            if coeff.norm() > 0.0 {
                h_op += (&w[a] * &w[b]).map(|z| z * coeff);
            }
        }
    }
    let mut lops = Vec::new();
    for ch in &spec.lindblads {
        let offsets: Vec<i64> = ch.offsets().collect();
        for s in 0..l {
            let mut lop = DMatrix::<C64>::zeros(dim, dim);
            for &j in &offsets {
                let vals = ch.eval_vec(j, &spec.params)?;
                let site = (s as i64 + j).rem_euclid(l as i64) as usize;
                lop += w[2 * site].map(|z| z * vals[0]);
                lop += w[2 * site + 1].map(|z| z * vals[1]);
            }
            lops.push(lop);
        }
    }
    let sup = liouvillian(&h_op, &lops);
    let rho = steady_density_matrix(&sup, dim)?;
    // gamma_{ab} = (i/2) tr(rho (w_a w_b - w_b w_a)).
    let n = 2 * l;
    let mut gamma = DMatrix::<f64>::zeros(n, n);
    let mut max_im: f64 = 0.0;
    for a in 0..n {
        for b in (a + 1)..n {
            let m = &w[a] * &w[b];
            let tr: C64 = (0..dim).map(|i| (&rho * &m)[(i, i)]).sum();
            // tr(rho [w_a, w_b]) = 2 tr(rho w_a w_b) for a != b.
            let val = C64::i() * tr;
            gamma[(a, b)] = val.re;
            gamma[(b, a)] = -val.re;
            max_im = max_im.max(val.im.abs());
        }
    }
    if max_im > 1e-9 {
        return Err(Error::Numeric(format!("exact covariance not real: imag {max_im:.3e}")));
    }
    Ok(ExactSolution { statistics: Statistics::Fermion, l, gamma, purity_dim: dim })
}

/// Exact steady state of a bosonic ring in a truncated Fock space (cutoff
/// occupations per site). Intended for L <= 2 and moderate cutoffs; callers
/// should verify convergence by increasing the cutoff.
pub fn exact_master_equation_boson(spec: &ModelSpec, l: usize, cutoff: usize) -> Result<ExactSolution> {
    if spec.statistics != Statistics::Boson {
        return Err(Error::InvalidArg("exact_master_equation_boson expects a bosonic model".into()));
    }
    if l == 0 || l > 2 {
        return Err(Error::InvalidArg(format!("bosonic exact oracle supports 1..=2 sites, got {l}")));
    }
    if cutoff < 3 || cutoff > 24 {
        return Err(Error::InvalidArg("Fock cutoff must lie in 3..=24".into()));
    }
    let dim = cutoff.pow(l as u32);
    let u = quadrature_ops(l, cutoff);
    let hmat = ring_hamiltonian(spec, l)?;
    let mut h_op = DMatrix::<C64>::zeros(dim, dim);
    for a in 0..2 * l {
        for b in 0..2 * l {
            let coeff = hmat[(a, b)];
            if coeff.norm() > 0.0 {
                h_op += (&u[a] * &u[b]).map(|z| z * coeff);
            }
        }
    }
    let mut lops = Vec::new();
    for ch in &spec.lindblads {
        let offsets: Vec<i64> = ch.offsets().collect();
        for s in 0..l {
            let mut lop = DMatrix::<C64>::zeros(dim, dim);
            for &j in &offsets {
                let vals = ch.eval_vec(j, &spec.params)?;
                let site = (s as i64 + j).rem_euclid(l as i64) as usize;
                lop += u[2 * site].map(|z| z * vals[0]);
                lop += u[2 * site + 1].map(|z| z * vals[1]);
            }
            lops.push(lop);
        }
    }
    let sup = liouvillian(&h_op, &lops);
    let rho = steady_density_matrix(&sup, dim)?;
    // Symmetrized covariance with means subtracted.
    let n = 2 * l;
    let mut means = vec![c(0.0, 0.0); n];
    for a in 0..n {
        means[a] = (0..dim).map(|i| (&rho * &u[a])[(i, i)]).sum();
    }
    let mut gamma = DMatrix::<f64>::zeros(n, n);
    let mut max_im: f64 = 0.0;
    for a in 0..n {
        for b in 0..n {
            let m = &u[a] * &u[b] + &u[b] * &u[a];
            let tr: C64 = (0..dim).map(|i| (&rho * &m)[(i, i)]).sum();
            let val = tr * 0.5 - means[a] * means[b];
            gamma[(a, b)] = val.re;
            max_im = max_im.max(val.im.abs());
        }
    }
    if max_im > 1e-8 {
        return Err(Error::Numeric(format!("exact covariance not real: imag {max_im:.3e}")));
    }
    Ok(ExactSolution { statistics: Statistics::Boson, l, gamma, purity_dim: dim })
}

/// Covariance extracted from an exact master-equation steady state.
#[derive(Debug, Clone)]
pub struct ExactSolution {
    pub statistics: Statistics,
    pub l: usize,
    pub gamma: DMatrix<f64>,
    pub purity_dim: usize,
}

impl ExactSolution {
    pub fn block(&self, r: i64) -> Mat2r {
        let j = r.rem_euclid(self.l as i64) as usize;
        let mut out = Mat2r::zeros();
        for a in 0..2 {
            for b in 0..2 {
                out[(a, b)] = self.gamma[(2 * j + a, b)];
            }
        }
        out
    }
}

/// Report of a symbol-route vs dense-route comparison.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CompareReport {
    pub l: usize,
    pub r_checked: i64,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Compare symbol-route correlation blocks against a dense ring solution for
/// |r| <= L/4 at tolerance 1e-8. Statistics must match; for exact circulant
/// equivalence the field should come from a grid of the same size as the
/// ring (`steady::ring_correlations`).
pub fn compare(field: &CovarianceField, dense: &DenseSolution) -> Result<CompareReport> {
    if field.statistics != dense.statistics {
        return Err(Error::StatisticsMismatch(format!(
            "field is {}, dense solution is {}",
            field.statistics, dense.statistics
        )));
    }
    let r_checked = (dense.l as i64 / 4).min(field.r_max);
    let mut max_dev: f64 = 0.0;
    for r in -r_checked..=r_checked {
        let dev = crate::linalg::frob2r(&(field.block(r) - dense.block(r)));
        max_dev = max_dev.max(dev);
    }
    let tolerance = 1e-8;
    Ok(CompareReport { l: dense.l, r_checked, max_deviation: max_dev, tolerance, pass: max_dev <= tolerance })
}

/// Ring-exact field for oracle comparisons: blocks from the L-point ring
/// momenta, covering |r| <= L/2.
pub fn ring_field(spec: &ModelSpec, l: usize) -> Result<CovarianceField> {
    let blocks_vec = crate::steady::ring_correlations(spec, l)?;
    let r_max = (l / 2) as i64;
    let mut blocks = std::collections::BTreeMap::new();
    for r in -r_max..=r_max {
        let idx = r.rem_euclid(l as i64) as usize;
        blocks.insert(r, blocks_vec[idx]);
    }
    Ok(CovarianceField { statistics: spec.statistics, blocks, r_max, grid_n: l })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        preset_boson_hopping, preset_with_noise, preset_xy_fermion, NoiseKind,
    };
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn trivial_single_site_lyapunov() {
        let ring = FiniteRing {
            statistics: Statistics::Boson,
            l: 1,
            x: DMatrix::identity(2, 2),
            y: DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 4.0]),
        };
        let sol = dense_lyapunov(&ring).unwrap();
        assert_relative_eq!(sol.gamma[(0, 0)], 1.0, epsilon = 1e-12);
        assert_relative_eq!(sol.gamma[(1, 1)], 2.0, epsilon = 1e-12);
        assert!(sol.residual < 1e-12);
    }

    #[test]
    fn fermion_single_site_exact_matches_hand_value() {
        // On-site fermionic noise with no Hamiltonian: the steady covariance
        // is gamma_12 = -sin(g) (derived by hand from the two-level master
        // equation).
        let g = 0.8;
        let mut spec = crate::model::ModelSpec::new(Statistics::Fermion);
        spec = spec
            .with_channel(crate::model::preset_noise(NoiseKind::OnSiteFermion, 0.7, g).unwrap(), &[("eps", 0.7), ("g", g)]);
        let exact = exact_master_equation(&spec, 1).unwrap();
        assert_relative_eq!(exact.gamma[(0, 1)], -g.sin(), epsilon = 1e-10);

        let ring = assemble_ring(&spec, 1).unwrap();
        let dense = dense_lyapunov(&ring).unwrap();
        assert_relative_eq!(dense.gamma[(0, 1)], -g.sin(), epsilon = 1e-10);
        assert!((exact.gamma.clone() - dense.gamma.clone()).norm() < 1e-10);
    }

    #[test]
    fn boson_single_mode_exact_matches_hand_value() {
        // Single bosonic mode, pure noise (t scaled so the wrapped hopping
        // cancels: v = 1 makes the ring-1 Hamiltonian vanish). Steady
        // covariance is (1/sin g) [[1, -cos g], [-cos g, 1]], derived by hand
        // from the single-mode moment equations.
        let g = PI / 3.0;
        let spec =
            preset_with_noise(preset_boson_hopping(1.0, 1.0), NoiseKind::OnSiteBoson, 0.9, g).unwrap();
        let exact = exact_master_equation_boson(&spec, 1, 16).unwrap();
        let sg = g.sin();
        let cg = g.cos();
        assert_relative_eq!(exact.gamma[(0, 0)], 1.0 / sg, epsilon = 1e-6);
        assert_relative_eq!(exact.gamma[(1, 1)], 1.0 / sg, epsilon = 1e-6);
        assert_relative_eq!(exact.gamma[(0, 1)], -cg / sg, epsilon = 1e-6);

        let ring = assemble_ring(&spec, 1).unwrap();
        let dense = dense_lyapunov(&ring).unwrap();
        assert!((exact.gamma.clone() - dense.gamma.clone()).norm() < 3e-6);
        assert!(dense.check.stable && dense.check.positivity_ok);
    }

    #[test]
    fn boson_exact_cutoff_convergence() {
        let g = 1.0;
        let spec =
            preset_with_noise(preset_boson_hopping(1.0, 1.0), NoiseKind::OnSiteBoson, 0.8, g).unwrap();
        let a = exact_master_equation_boson(&spec, 1, 8).unwrap();
        let b = exact_master_equation_boson(&spec, 1, 16).unwrap();
        let c2 = exact_master_equation_boson(&spec, 1, 20).unwrap();
        let coarse = (a.gamma - &b.gamma).norm();
        let fine = (c2.gamma - &b.gamma).norm();
        assert!(coarse < 1e-2, "cutoff 8 vs 16 deviation {coarse:.3e}");
        assert!(fine < 3e-6, "cutoff 16 vs 20 deviation {fine:.3e}");
        assert!(fine < coarse);
    }

    #[test]
    fn fermion_ring_exact_vs_dense_vs_symbol() {
        // Three-site ring, chain Hamiltonian plus two-site noise: the exact
        // kernel covariance, the dense fixed point and the symbol route must
        // coincide. This pins every sign convention at once.
        let spec =
            preset_with_noise(preset_xy_fermion(1.1, 0.6), NoiseKind::TwoSiteFermion, 0.5, 0.9)
                .unwrap();
        let exact = exact_master_equation(&spec, 3).unwrap();
        let ring = assemble_ring(&spec, 3).unwrap();
        let dense = dense_lyapunov(&ring).unwrap();
        assert!(
            (exact.gamma.clone() - dense.gamma.clone()).norm() < 1e-9,
            "exact vs dense deviation {:.3e}",
            (exact.gamma.clone() - dense.gamma.clone()).norm()
        );
        let field = ring_field(&spec, 3).unwrap();
        for r in -1..=1 {
            let dev = crate::linalg::frob2r(&(field.block(r) - dense.block(r)));
            assert!(dev < 1e-9, "symbol vs dense at r={r}: {dev:.3e}");
        }
    }

    #[test]
    fn fermion_ring_exact_with_hamiltonian_on_site_noise() {
        // On-site noise makes the covariance depend on the Hamiltonian, so
        // this checks the Hamiltonian normalization inside the drift.
        let spec =
            preset_with_noise(preset_xy_fermion(0.7, 0.4), NoiseKind::OnSiteFermion, 0.6, 1.1)
                .unwrap();
        let exact = exact_master_equation(&spec, 3).unwrap();
        let ring = assemble_ring(&spec, 3).unwrap();
        let dense = dense_lyapunov(&ring).unwrap();
        let dev = (exact.gamma.clone() - dense.gamma.clone()).norm();
        assert!(dev < 1e-9, "exact vs dense deviation {dev:.3e}");
        let field = ring_field(&spec, 3).unwrap();
        for r in -1..=1 {
            let dev = crate::linalg::frob2r(&(field.block(r) - dense.block(r)));
            assert!(dev < 1e-9, "symbol vs dense at r={r}: {dev:.3e}");
        }
    }

    #[test]
    fn flipped_forcing_sign_breaks_oracle_match() {
        // Negative control: solving with -Y gives -gamma, which must fail
        // the exact-master comparison by a wide margin.
        let spec =
            preset_with_noise(preset_xy_fermion(1.1, 0.6), NoiseKind::TwoSiteFermion, 0.5, 0.9)
                .unwrap();
        let exact = exact_master_equation(&spec, 3).unwrap();
        let mut ring = assemble_ring(&spec, 3).unwrap();
        ring.y = -ring.y;
        let flipped = dense_lyapunov(&ring).unwrap();
        let dev = (exact.gamma.clone() - flipped.gamma.clone()).norm();
        assert!(dev > 1e-3, "sign flip went undetected: deviation {dev:.3e}");
    }

    #[test]
    fn zero_noise_kernel_degenerate() {
        let spec = preset_xy_fermion(1.0, 0.6);
        match exact_master_equation(&spec, 3) {
            Err(Error::DegenerateKernel) => {}
            other => panic!("expected DegenerateKernel, got {other:?}"),
        }
    }

    #[test]
    fn ring32_matches_infinite_symbol_route() {
        // Circulant exactness: with grid size = ring size the two routes
        // agree to solver precision.
        let spec =
            preset_with_noise(preset_xy_fermion(0.9, 0.7), NoiseKind::TwoSiteFermion, 0.8, 1.1)
                .unwrap();
        let ring = assemble_ring(&spec, 32).unwrap();
        let dense = dense_lyapunov(&ring).unwrap();
        let field = ring_field(&spec, 32).unwrap();
        let report = compare(&field, &dense).unwrap();
        assert!(report.pass, "max deviation {:.3e}", report.max_deviation);
        assert!(report.max_deviation < 1e-10);
    }

    #[test]
    fn schur_and_vectorized_routes_agree_on_ring() {
        let spec =
            preset_with_noise(preset_boson_hopping(1.0, 0.4), NoiseKind::OnSiteBoson, 0.8, 1.0)
                .unwrap();
        let ring = assemble_ring(&spec, 8).unwrap();
        let a = dense_lyapunov(&ring).unwrap();
        let b = dense_lyapunov_vectorized(&ring).unwrap();
        assert!((a.gamma - b.gamma).norm() < 1e-9);
    }

    #[test]
    fn unstable_boson_solution_flagged_unphysical() {
        // Pumping parameters g in (-pi, 0): the algebraic fixed point exists
        // but is not a physical state.
        let spec =
            preset_with_noise(preset_boson_hopping(1.0, 0.0), NoiseKind::OnSiteBoson, 1.0, -0.7)
                .unwrap();
        let ring = assemble_ring(&spec, 6).unwrap();
        let sol = dense_lyapunov(&ring).unwrap();
        assert!(!sol.check.stable);
        assert!(!sol.check.positivity_ok, "metric {}", sol.check.metric);
    }

    #[test]
    fn compare_rejects_statistics_mismatch() {
        let fspec =
            preset_with_noise(preset_xy_fermion(0.9, 0.7), NoiseKind::TwoSiteFermion, 0.8, 1.1)
                .unwrap();
        let bspec =
            preset_with_noise(preset_boson_hopping(1.0, 0.4), NoiseKind::OnSiteBoson, 0.8, 1.0)
                .unwrap();
        let field = ring_field(&fspec, 8).unwrap();
        let ring = assemble_ring(&bspec, 8).unwrap();
        let dense = dense_lyapunov(&ring).unwrap();
        assert!(matches!(compare(&field, &dense), Err(Error::StatisticsMismatch(_))));
    }
}
