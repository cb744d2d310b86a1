//! Momentum-space symbols of block-circulant operators as matrix-valued
//! trigonometric polynomials, with holomorphic extension to complex
//! quasi-momentum.
//!
//! A symbol with coefficients c(j) evaluates as sum_j c(j) e^{-i phi j};
//! finite support makes every symbol entire in phi.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{c, eig2, kron2, sigma2, Mat2};
use crate::model::{ModelSpec, Statistics};

/// A 2x2 matrix sample of a symbol at one (possibly complex) quasi-momentum.
#[derive(Debug, Clone, Copy)]
pub struct SymbolValue {
    pub phi: C64,
    pub matrix: Mat2,
}

/// Matrix-valued trigonometric polynomial sum_j c(j) e^{-i phi j} with
/// finitely many 2x2 coefficients.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrigPoly {
    pub coeffs: BTreeMap<i64, Mat2>,
}

impl TrigPoly {
    pub fn zero() -> Self {
        TrigPoly { coeffs: BTreeMap::new() }
    }

    pub fn constant(m: Mat2) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(0, m);
        TrigPoly { coeffs }
    }

    pub fn add_coeff(&mut self, j: i64, m: Mat2) {
        let entry = self.coeffs.entry(j).or_insert_with(Mat2::zeros);
        *entry += m;
    }

    pub fn max_offset(&self) -> i64 {
        self.coeffs.keys().map(|j| j.abs()).max().unwrap_or(0)
    }

    /// Evaluate at complex quasi-momentum (holomorphic extension).
    pub fn eval(&self, phi: C64) -> Mat2 {
        let mut out = Mat2::zeros();
        for (&j, m) in &self.coeffs {
            let w = (-C64::i() * phi * (j as f64)).exp();
            out += m * w;
        }
        out
    }

    pub fn eval_real(&self, phi: f64) -> Mat2 {
        self.eval(c(phi, 0.0))
    }

    /// Symbol of the transposed operator evaluated at -phi: the polynomial
    /// with coefficients c'(j) = c(-j)^T. Appearing on the left of the
    /// steady-state fixed-point equation.
    pub fn reflect_transpose(&self) -> TrigPoly {
        let mut out = TrigPoly::zero();
        for (&j, m) in &self.coeffs {
            out.add_coeff(-j, m.transpose());
        }
        out
    }

    /// The polynomial evaluated at -phi: coefficients reflected in offset.
    pub fn reflect(&self) -> TrigPoly {
        let mut out = TrigPoly::zero();
        for (&j, m) in &self.coeffs {
            out.add_coeff(-j, *m);
        }
        out
    }

    pub fn scale(&self, z: C64) -> TrigPoly {
        let mut out = self.clone();
        for m in out.coeffs.values_mut() {
            *m *= z;
        }
        out
    }

    /// Apply a constant matrix factor on the left / right of every
    /// coefficient.
    pub fn left_mul(&self, a: &Mat2) -> TrigPoly {
        let mut out = TrigPoly::zero();
        for (&j, m) in &self.coeffs {
            out.add_coeff(j, a * m);
        }
        out
    }

    pub fn right_mul(&self, a: &Mat2) -> TrigPoly {
        let mut out = TrigPoly::zero();
        for (&j, m) in &self.coeffs {
            out.add_coeff(j, m * a);
        }
        out
    }

    pub fn add(&self, other: &TrigPoly) -> TrigPoly {
        let mut out = self.clone();
        for (&j, m) in &other.coeffs {
            out.add_coeff(j, *m);
        }
        out
    }

    /// Component as a scalar polynomial.
    pub fn component(&self, row: usize, col: usize) -> ScalarTrigPoly {
        let mut out = ScalarTrigPoly::zero();
        for (&j, m) in &self.coeffs {
            out.add_coeff(j, m[(row, col)]);
        }
        out
    }

    pub fn trace_poly(&self) -> ScalarTrigPoly {
        let mut out = ScalarTrigPoly::zero();
        for (&j, m) in &self.coeffs {
            out.add_coeff(j, m[(0, 0)] + m[(1, 1)]);
        }
        out
    }

    pub fn det_poly(&self) -> ScalarTrigPoly {
        let a = self.component(0, 0);
        let b = self.component(0, 1);
        let cc = self.component(1, 0);
        let d = self.component(1, 1);
        a.mul(&d).sub(&b.mul(&cc))
    }
}

/// Scalar trigonometric polynomial sum_j c_j e^{-i phi j}.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScalarTrigPoly {
    pub coeffs: BTreeMap<i64, C64>,
}

impl ScalarTrigPoly {
    pub fn zero() -> Self {
        ScalarTrigPoly { coeffs: BTreeMap::new() }
    }

    pub fn add_coeff(&mut self, j: i64, z: C64) {
        let entry = self.coeffs.entry(j).or_insert_with(|| c(0.0, 0.0));
        *entry += z;
    }

    pub fn max_offset(&self) -> i64 {
        self.coeffs.keys().map(|j| j.abs()).max().unwrap_or(0)
    }

    pub fn eval(&self, phi: C64) -> C64 {
        let mut out = c(0.0, 0.0);
        for (&j, &z) in &self.coeffs {
            out += z * (-C64::i() * phi * (j as f64)).exp();
        }
        out
    }

    pub fn add(&self, other: &ScalarTrigPoly) -> ScalarTrigPoly {
        let mut out = self.clone();
        for (&j, &z) in &other.coeffs {
            out.add_coeff(j, z);
        }
        out
    }

    pub fn sub(&self, other: &ScalarTrigPoly) -> ScalarTrigPoly {
        let mut out = self.clone();
        for (&j, &z) in &other.coeffs {
            out.add_coeff(j, -z);
        }
        out
    }

    pub fn mul(&self, other: &ScalarTrigPoly) -> ScalarTrigPoly {
        let mut out = ScalarTrigPoly::zero();
        for (&j1, &z1) in &self.coeffs {
            for (&j2, &z2) in &other.coeffs {
                out.add_coeff(j1 + j2, z1 * z2);
            }
        }
        out
    }

    pub fn reflect(&self) -> ScalarTrigPoly {
        let mut out = ScalarTrigPoly::zero();
        for (&j, &z) in &self.coeffs {
            out.add_coeff(-j, z);
        }
        out
    }

    /// d/dphi: multiplies each coefficient by -i j.
    pub fn derivative(&self) -> ScalarTrigPoly {
        let mut out = ScalarTrigPoly::zero();
        for (&j, &z) in &self.coeffs {
            if j != 0 {
                out.add_coeff(j, z * c(0.0, -(j as f64)));
            }
        }
        out
    }

    /// Largest coefficient magnitude, a natural amplitude scale.
    pub fn amplitude(&self) -> f64 {
        self.coeffs.values().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

// ---------------------------------------------------------------------------
// Symbol construction from a model.

fn ensure_valid(spec: &ModelSpec) -> Result<()> {
    let report = crate::model::validate(spec);
    if report.all_pass() {
        Ok(())
    } else {
        let msgs: Vec<String> =
            report.failures().iter().map(|f| format!("{}: {}", f.name, f.detail)).collect();
        Err(Error::InvalidModel(msgs.join("; ")))
    }
}

/// Hamiltonian symbol h(phi) = sum_j h(j) e^{-i phi j}; Hermitian at real phi.
pub fn hamiltonian_symbol(spec: &ModelSpec) -> Result<TrigPoly> {
    let mut out = TrigPoly::zero();
    for j in spec.hamiltonian.offsets().collect::<Vec<_>>() {
        let m = spec.hamiltonian.eval_block(j, &spec.params)?;
        out.add_coeff(j, m);
    }
    Ok(out)
}

/// Noise symbol m(phi) = sum_mu l_mu(phi) (x) conj(l_mu(phi)), built at the
/// coefficient level: m(d) = sum_mu sum_t l_mu(t + d) (x) conj(l_mu(t)).
/// Positive semidefinite with rank at most the channel count at real phi.
pub fn bath_symbol(spec: &ModelSpec) -> Result<TrigPoly> {
    let mut out = TrigPoly::zero();
    for ch in &spec.lindblads {
        let offsets: Vec<i64> = ch.offsets().collect();
        for &j1 in &offsets {
            let v1 = ch.eval_vec(j1, &spec.params)?;
            for &j2 in &offsets {
                let v2 = ch.eval_vec(j2, &spec.params)?;
                let mut m = Mat2::zeros();
                for r in 0..2 {
                    for s in 0..2 {
                        m[(r, s)] = v1[r] * v2[s].conj();
                    }
                }
                out.add_coeff(j1 - j2, m);
            }
        }
    }
    Ok(out)
}

/// Split the noise symbol into m_r(phi) = (m(phi) + m^T(-phi)) / 2 and
/// m_i(phi) = -i (m(phi) - m^T(-phi)) / 2, so m = m_r + i m_i identically.
/// m_r corresponds to a real symmetric operator in real space, m_i to a real
/// antisymmetric one.
pub fn split_bath(m: &TrigPoly) -> (TrigPoly, TrigPoly) {
    let mt = m.reflect_transpose();
    let mut mr = TrigPoly::zero();
    let mut mi = TrigPoly::zero();
    let offsets: std::collections::BTreeSet<i64> =
        m.coeffs.keys().chain(mt.coeffs.keys()).copied().collect();
    for &j in &offsets {
        let a = m.coeffs.get(&j).copied().unwrap_or_else(Mat2::zeros);
        let b = mt.coeffs.get(&j).copied().unwrap_or_else(Mat2::zeros);
        mr.add_coeff(j, (a + b) * c(0.5, 0.0));
        mi.add_coeff(j, (a - b) * c(0.0, -0.5));
    }
    (mr, mi)
}

/// Drift and forcing symbols (x, y) of the covariance equation of motion
/// d gamma / dt = -(x^T(-phi) gamma + gamma x(phi)) + y(phi), per momentum.
///
/// Fermions: x = -4i h + 2 m_r,          y = 4 m_i.
/// Bosons:   x = -(4 h + 2 m_i) sigma2,  y = 4 sigma2^T m_r sigma2.
///
/// Relaxation corresponds to Re spec(x) > 0; the eigenvalues of x are the
/// per-momentum decay rates. The factors are fixed against the brute-force
/// master-equation oracle.
pub fn drift_and_forcing(spec: &ModelSpec) -> Result<(TrigPoly, TrigPoly)> {
    ensure_valid(spec)?;
    let h = hamiltonian_symbol(spec)?;
    let m = bath_symbol(spec)?;
    let (mr, mi) = split_bath(&m);
    match spec.statistics {
        Statistics::Fermion => {
            let x = h.scale(c(0.0, -4.0)).add(&mr.scale(c(2.0, 0.0)));
            let y = mi.scale(c(4.0, 0.0));
            Ok((x, y))
        }
        Statistics::Boson => {
            let s2 = sigma2();
            let x = h.scale(c(4.0, 0.0)).add(&mi.scale(c(2.0, 0.0))).right_mul(&s2).scale(c(-1.0, 0.0));
            let y = mr.scale(c(4.0, 0.0)).left_mul(&s2.transpose()).right_mul(&s2);
            Ok((x, y))
        }
    }
}

/// Forcing in the reporting normalization used by the steady-state solver.
///
/// For bosons this is the same y as `drift_and_forcing`. For fermions the
/// raw Majorana forcing 4 m_i is anti-Hermitian at real phi; the reported
/// covariance symbol is its Hermitian form, obtained by solving with
/// y = 2i m_i instead. Real-space correlation blocks are recovered from the
/// reported symbol by the inverse factor (see `steady::correlations`); the
/// dense-oracle comparison pins this convention.
pub fn covariance_forcing(spec: &ModelSpec) -> Result<TrigPoly> {
    let (_, y) = drift_and_forcing(spec)?;
    match spec.statistics {
        Statistics::Fermion => Ok(y.scale(c(0.0, 0.5))), // (i/2) * 4 m_i = 2i m_i
        Statistics::Boson => Ok(y),
    }
}

/// Factor converting the reported fermionic covariance symbol back to the
/// raw Majorana symbol whose inverse Fourier transform is the real-space
/// covariance: gamma_raw = -2i gamma_reported.
pub fn fermion_symbol_to_real_space() -> C64 {
    c(0.0, -2.0)
}

/// The two eigenvalues of the drift symbol at quasi-momentum phi, ordered
/// lexicographically by (Re, Im).
pub fn drift_eigenvalues(x: &TrigPoly, phi: C64) -> (C64, C64) {
    eig2(&x.eval(phi))
}

/// 4x4 coefficient matrix of the per-momentum fixed-point system
/// x^T(-phi) gamma + gamma x(phi) = y(phi) in column-major vectorization.
pub fn sylvester_matrix(x: &TrigPoly, phi: C64) -> nalgebra::Matrix4<C64> {
    let xl = x.eval(-phi).transpose();
    let xr = x.eval(phi);
    let id = Mat2::identity();
    kron2(&id, &xl) + kron2(&xr.transpose(), &id)
}

/// Determinant of the fixed-point system as an entire function of phi,
/// expressed through the elementary symmetric functions of the drift
/// spectrum: with e1/e2 the trace/determinant of x(phi) and f1/f2 those of
/// x(-phi),
///
///   det = e2^2 + e1 e2 f1 + e1^2 f2 - 2 e2 f2 + e2 f1^2 + e1 f1 f2 + f2^2.
///
/// Its zeros are exactly the momenta where some pair of drift eigenvalues
/// satisfies beta_a(phi) + beta_b(-phi) = 0.
pub fn sylvester_determinant(x: &TrigPoly) -> ScalarTrigPoly {
    let e1 = x.trace_poly();
    let e2 = x.det_poly();
    let f1 = e1.reflect();
    let f2 = e2.reflect();
    let mut out = e2.mul(&e2);
    out = out.add(&e1.mul(&e2).mul(&f1));
    out = out.add(&e1.mul(&e1).mul(&f2));
    out = out.sub(&e2.mul(&f2).mul(&ScalarTrigPoly { coeffs: [(0, c(2.0, 0.0))].into() }));
    out = out.add(&e2.mul(&f1).mul(&f1));
    out = out.add(&e1.mul(&f1).mul(&f2));
    out = out.add(&f2.mul(&f2));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        preset_boson_hopping, preset_with_noise, preset_xy_fermion, NoiseKind,
    };
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn grid(n: usize) -> impl Iterator<Item = f64> {
        (0..n).map(move |k| -PI + 2.0 * PI * k as f64 / n as f64)
    }

    #[test]
    fn empty_stencil_gives_zero_symbol() {
        let spec = crate::model::ModelSpec::new(Statistics::Fermion);
        let h = hamiltonian_symbol(&spec).unwrap();
        assert!(crate::linalg::frob2(&h.eval_real(0.7)) == 0.0);
    }

    #[test]
    fn boson_symbol_holomorphic_extension() {
        let spec = preset_boson_hopping(1.0, 0.0);
        let h = hamiltonian_symbol(&spec).unwrap();
        let v = h.eval(c(0.0, 1.0));
        // cos(i) = cosh(1)
        assert_relative_eq!(v[(0, 0)].re, 1.0f64.cosh(), epsilon = 1e-13);
        assert!(v[(0, 0)].im.abs() < 1e-13);
    }

    #[test]
    fn bath_symbol_on_site_boson() {
        let spec =
            preset_with_noise(preset_boson_hopping(1.0, 0.0), NoiseKind::OnSiteBoson, 1.0, PI / 2.0)
                .unwrap();
        let m = bath_symbol(&spec).unwrap();
        for phi in grid(16) {
            let v = m.eval_real(phi);
            // l = (1, -i): outer product [[1, i], [-i, 1]].
            assert!((v[(0, 0)] - c(1.0, 0.0)).norm() < 1e-14);
            assert!((v[(0, 1)] - c(0.0, 1.0)).norm() < 1e-14);
            assert!((v[(1, 0)] - c(0.0, -1.0)).norm() < 1e-14);
            assert!((v[(1, 1)] - c(1.0, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn bath_symbol_two_site_fermion() {
        let g = 0.8;
        let spec =
            preset_with_noise(preset_xy_fermion(1.0, 0.5), NoiseKind::TwoSiteFermion, 1.0, g)
                .unwrap();
        let m = bath_symbol(&spec).unwrap();
        for phi in grid(32) {
            let v = m.eval_real(phi);
            assert_relative_eq!(v[(0, 0)].re, 2.0 + 2.0 * (g - phi).cos(), epsilon = 1e-13);
            assert!(v[(0, 0)].im.abs() < 1e-14);
            assert!(v[(0, 1)].norm() < 1e-14);
            assert!(v[(1, 0)].norm() < 1e-14);
            assert!(v[(1, 1)].norm() < 1e-14);
            assert!(v[(0, 0)].re >= -1e-12);
        }
    }

    #[test]
    fn bath_symbol_psd_on_grid() {
        for spec in [
            preset_with_noise(preset_xy_fermion(1.0, 0.5), NoiseKind::TwoSiteFermion, 0.9, 1.3)
                .unwrap(),
            preset_with_noise(preset_xy_fermion(0.3, 0.9), NoiseKind::OnSiteFermion, 0.6, 2.5)
                .unwrap(),
            preset_with_noise(preset_boson_hopping(1.0, 0.4), NoiseKind::OnSiteBoson, 0.8, 0.4)
                .unwrap(),
        ] {
            let m = bath_symbol(&spec).unwrap();
            for phi in grid(1024) {
                let v = m.eval_real(phi);
                // Hermitian 2x2: min eigenvalue in closed form.
                let tr = (v[(0, 0)] + v[(1, 1)]).re;
                let det = (v[(0, 0)] * v[(1, 1)] - v[(0, 1)] * v[(1, 0)]).re;
                let disc = (tr * tr - 4.0 * det).max(0.0);
                let min_eig = 0.5 * (tr - disc.sqrt());
                assert!(min_eig >= -1e-12, "min eig {min_eig} at phi {phi}");
            }
        }
    }

    #[test]
    fn split_bath_recombines() {
        let spec = preset_with_noise(preset_xy_fermion(1.0, 0.5), NoiseKind::TwoSiteFermion, 1.0, 0.9)
            .unwrap();
        let m = bath_symbol(&spec).unwrap();
        let (mr, mi) = split_bath(&m);
        for phi in grid(256) {
            let lhs = mr.eval_real(phi) + mi.eval_real(phi) * c(0.0, 1.0);
            let rhs = m.eval_real(phi);
            assert!(crate::linalg::frob2(&(lhs - rhs)) < 1e-14);
        }
        // Real-space reality and symmetry classes at the coefficient level.
        for (&j, blk) in &mr.coeffs {
            assert!(crate::linalg::max_imag2(blk) < 1e-14);
            let other = mr.coeffs.get(&-j).copied().unwrap_or_else(Mat2::zeros);
            assert!(crate::linalg::frob2(&(other - blk.transpose())) < 1e-14);
        }
        for (&j, blk) in &mi.coeffs {
            assert!(crate::linalg::max_imag2(blk) < 1e-14);
            let other = mi.coeffs.get(&-j).copied().unwrap_or_else(Mat2::zeros);
            assert!(crate::linalg::frob2(&(other + blk.transpose())) < 1e-14);
        }
    }

    #[test]
    fn drift_zero_model_is_zero() {
        let spec = crate::model::ModelSpec::new(Statistics::Fermion);
        let (x, y) = drift_and_forcing(&spec).unwrap();
        assert!(crate::linalg::frob2(&x.eval_real(0.3)) == 0.0);
        assert!(crate::linalg::frob2(&y.eval_real(0.3)) == 0.0);
    }

    #[test]
    fn boson_drift_eigenvalues_closed_form() {
        let (t, v, eps, g) = (1.3, 0.4, 0.8, 1.1);
        let spec =
            preset_with_noise(preset_boson_hopping(t, v), NoiseKind::OnSiteBoson, eps, g).unwrap();
        let (x, _) = drift_and_forcing(&spec).unwrap();
        for phi in grid(64) {
            let (b1, b2) = drift_eigenvalues(&x, c(phi, 0.0));
            let re_expect = 2.0 * eps * eps * g.sin();
            let im_expect = 4.0 * t * (v - phi.cos()).abs();
            assert_relative_eq!(b1.re, re_expect, epsilon = 1e-11);
            assert_relative_eq!(b2.re, re_expect, epsilon = 1e-11);
            assert_relative_eq!(b1.im.abs(), im_expect, epsilon = 1e-11);
            assert_relative_eq!(b2.im.abs(), im_expect, epsilon = 1e-11);
            assert!((b1.im + b2.im).abs() < 1e-11);
        }
    }

    #[test]
    fn fermion_drift_spectrum_right_half_plane() {
        for (kind, eps, g) in [
            (NoiseKind::OnSiteFermion, 0.7, 2.1),
            (NoiseKind::TwoSiteFermion, 0.9, 0.6),
            (NoiseKind::TwoSiteFermion, 0.5, 2.9),
        ] {
            let spec = preset_with_noise(preset_xy_fermion(0.8, 0.6), kind, eps, g).unwrap();
            let (x, _) = drift_and_forcing(&spec).unwrap();
            for phi in grid(1024) {
                let (b1, b2) = drift_eigenvalues(&x, c(phi, 0.0));
                assert!(b1.re >= -1e-12 && b2.re >= -1e-12, "Re beta < 0 at phi {phi}");
            }
        }
    }

    #[test]
    fn drift_eigenvalue_degenerate_case() {
        // At cos(phi) = v the boson drift eigenvalues coincide.
        let (t, v, eps, g) = (1.0, 0.5, 0.7, 0.9);
        let spec =
            preset_with_noise(preset_boson_hopping(t, v), NoiseKind::OnSiteBoson, eps, g).unwrap();
        let (x, _) = drift_and_forcing(&spec).unwrap();
        let phi = v.acos();
        let (b1, b2) = drift_eigenvalues(&x, c(phi, 0.0));
        let expect = 2.0 * eps * eps * g.sin();
        assert!((b1 - c(expect, 0.0)).norm() < 1e-10);
        assert!((b2 - c(expect, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn sylvester_determinant_matches_matrix() {
        let spec = preset_with_noise(preset_xy_fermion(1.7, 0.8), NoiseKind::TwoSiteFermion, 0.8, 1.2)
            .unwrap();
        let (x, _) = drift_and_forcing(&spec).unwrap();
        let delta = sylvester_determinant(&x);
        for &phi in &[c(0.4, 0.0), c(-1.3, 0.5), c(2.9, -1.1), c(0.0, 2.0)] {
            let m = sylvester_matrix(&x, phi);
            let det_direct = m.determinant();
            let det_poly = delta.eval(phi);
            assert!(
                (det_direct - det_poly).norm() <= 1e-9 * (1.0 + det_direct.norm()),
                "mismatch at {phi}: {det_direct} vs {det_poly}"
            );
        }
    }

    #[test]
    fn sylvester_determinant_vanishes_at_pole() {
        // Two-site fermionic noise at g = pi/3: the fixed-point system is
        // singular where cos(phi) = -1/cos(g) = -2.
        let spec =
            preset_with_noise(preset_xy_fermion(1.0, 0.5), NoiseKind::TwoSiteFermion, 1.0, PI / 3.0)
                .unwrap();
        let (x, _) = drift_and_forcing(&spec).unwrap();
        let delta = sylvester_determinant(&x);
        let phi_star = c(PI, 2.0f64.acosh());
        let scale = delta.amplitude();
        assert!(delta.eval(phi_star).norm() < 1e-9 * scale);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn symbol_periodic_in_real_direction(
            re in -3.0f64..3.0,
            im in -2.0f64..2.0,
            b in 0.0f64..2.0,
            gamma in 0.0f64..1.5,
            eps in 0.1f64..1.2,
            g in -3.0f64..3.0,
        ) {
            let spec = preset_with_noise(preset_xy_fermion(b, gamma), NoiseKind::TwoSiteFermion, eps, g).unwrap();
            let (x, y) = drift_and_forcing(&spec).unwrap();
            let phi = c(re, im);
            let shifted = phi + c(2.0 * PI, 0.0);
            for poly in [&x, &y] {
                let a = poly.eval(phi);
                let bb = poly.eval(shifted);
                let scale = crate::linalg::frob2(&a).max(1.0);
                prop_assert!(crate::linalg::frob2(&(a - bb)) <= 1e-13 * scale);
            }
        }

        #[test]
        fn split_recombination_random_channels(
            g in -3.0f64..3.0,
            eps in 0.1f64..1.4,
            phi in -3.1f64..3.1,
        ) {
            let spec = preset_with_noise(preset_boson_hopping(1.0, 0.2), NoiseKind::OnSiteBoson, eps, g).unwrap();
            let m = bath_symbol(&spec).unwrap();
            let (mr, mi) = split_bath(&m);
            let lhs = mr.eval_real(phi) + mi.eval_real(phi) * c(0.0, 1.0);
            prop_assert!(crate::linalg::frob2(&(lhs - m.eval_real(phi))) < 1e-13);
        }
    }
}
