//! Steady-state covariance of a driven quasi-free model: per-momentum 2x2
//! fixed-point solves of
//!
//!   x^T(-phi) gamma(phi) + gamma(phi) x(phi) = y(phi)
//!
//! on a uniform quasi-momentum grid, followed by inverse Fourier transform
//! to real-space correlation blocks.

use std::collections::BTreeMap;

use nalgebra::Matrix4;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{
    c, frob2, kron2, max_imag2, real_part2, solve4, solve4_min_norm, unvec2, vec2, Mat2, Mat2r,
};
use crate::model::{ModelSpec, Statistics};
use crate::symbol::{
    covariance_forcing, drift_and_forcing, drift_eigenvalues, fermion_symbol_to_real_space,
    TrigPoly,
};

/// Condition-number cap beyond which a momentum is treated as singular.
pub const SINGULAR_COND_CAP: f64 = 1e12;

/// Uniform momentum grid phi_k = -pi + 2 pi k / n.
pub fn momentum_grid(n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| -std::f64::consts::PI + 2.0 * std::f64::consts::PI * k as f64 / n as f64)
        .collect()
}

/// Steady-state covariance symbol sampled on a uniform momentum grid.
///
/// Values are stored in the reporting normalization: Hermitian at real phi
/// for both statistics. Momenta where the fixed-point system is singular are
/// flagged rather than filled.
#[derive(Debug, Clone)]
pub struct CovarianceSymbol {
    pub statistics: Statistics,
    pub phis: Vec<f64>,
    pub values: Vec<Mat2>,
    pub flagged: Vec<bool>,
    pub max_residual: f64,
    pub max_cond: f64,
    pub(crate) drift: TrigPoly,
    pub(crate) forcing: TrigPoly,
}

impl CovarianceSymbol {
    pub fn n(&self) -> usize {
        self.phis.len()
    }

    pub fn flagged_momenta(&self) -> Vec<f64> {
        self.phis
            .iter()
            .zip(&self.flagged)
            .filter_map(|(&phi, &f)| if f { Some(phi) } else { None })
            .collect()
    }

    /// All-zero symbol on the same grid layout, usable as an initial
    /// condition for time evolution.
    pub fn zeros_like(&self) -> CovarianceSymbol {
        CovarianceSymbol {
            statistics: self.statistics,
            phis: self.phis.clone(),
            values: vec![Mat2::zeros(); self.n()],
            flagged: vec![false; self.n()],
            max_residual: 0.0,
            max_cond: 0.0,
            drift: self.drift.clone(),
            forcing: self.forcing.clone(),
        }
    }
}

/// Real-space correlation blocks gamma(r) for |r| <= r_max.
#[derive(Debug, Clone)]
pub struct CovarianceField {
    pub statistics: Statistics,
    pub blocks: BTreeMap<i64, Mat2r>,
    pub r_max: i64,
    pub grid_n: usize,
}

impl CovarianceField {
    pub fn block(&self, r: i64) -> Mat2r {
        self.blocks.get(&r).copied().unwrap_or_else(Mat2r::zeros)
    }

    /// Frobenius norm of the block at offset r.
    pub fn block_norm(&self, r: i64) -> f64 {
        crate::linalg::frob2r(&self.block(r))
    }
}

/// Solve the 2x2 fixed-point system at one momentum given the drift values
/// x(phi), x(-phi) and the forcing y(phi). Returns the covariance value and
/// the condition number of the 4x4 system; fails with `Singular` when the
/// condition number exceeds [`SINGULAR_COND_CAP`].
pub fn solve_sylvester_at(x_phi: &Mat2, x_mphi: &Mat2, y: &Mat2, phi: C64) -> Result<(Mat2, f64)> {
    let id = Mat2::identity();
    let m: Matrix4<C64> = kron2(&id, &x_mphi.transpose()) + kron2(&x_phi.transpose(), &id);
    let rhs = vec2(y);
    let (sol, cond) = solve4(&m, &rhs, SINGULAR_COND_CAP, phi)?;
    let gamma = unvec2(&sol);
    // Residual guard, relative to the larger of the forcing and solution
    // scales (the forcing vanishes at isolated momenta).
    let res = (m * sol - rhs).norm();
    let scale = rhs.norm().max(m.norm() * sol.norm()).max(1e-300);
    if res / scale > 1e-12 {
        return Err(Error::Singular { phi, cond });
    }
    Ok((gamma, cond))
}

/// Minimum-norm least-squares solution at a singular momentum, together
/// with its consistency residual relative to the problem scale. A small
/// residual means the singular system is consistent (removable singularity);
/// a large one signals a genuine pole of the covariance symbol.
fn solve_min_norm_with_residual(x: &TrigPoly, y: &TrigPoly, phi: C64) -> (Mat2, f64) {
    let id = Mat2::identity();
    let m = kron2(&id, &x.eval(-phi).transpose()) + kron2(&x.eval(phi).transpose(), &id);
    let rhs = vec2(&y.eval(phi));
    let sol = solve4_min_norm(&m, &rhs, 1e-10);
    let res = (m * sol - rhs).norm();
    let scale = rhs.norm().max(m.norm() * sol.norm()).max(1e-300);
    (unvec2(&sol), res / scale)
}

fn check_boson_stability(x: &TrigPoly, phis: &[f64]) -> Result<()> {
    let mut offending = Vec::new();
    for &phi in phis {
        let (b1, b2) = drift_eigenvalues(x, c(phi, 0.0));
        let scale = b1.norm().max(b2.norm()).max(1.0);
        if b1.re < -1e-12 * scale || b2.re < -1e-12 * scale {
            offending.push(phi);
        }
    }
    if offending.is_empty() {
        Ok(())
    } else {
        Err(Error::Unstable { momenta: offending })
    }
}

/// Compute the steady-state covariance symbol on an n-point uniform grid.
///
/// n must be a power of two (>= 16; field computations additionally want
/// n >= 8 r_max). Bosonic models are refused as `Unstable` when any grid
/// momentum has a drift eigenvalue with negative real part. Singular momenta
/// are flagged, not filled.
pub fn covariance_symbol(spec: &ModelSpec, n: usize) -> Result<CovarianceSymbol> {
    if n < 16 || !n.is_power_of_two() {
        return Err(Error::InvalidArg(format!("grid size must be a power of two >= 16, got {n}")));
    }
    let (x, _) = drift_and_forcing(spec)?;
    let y = covariance_forcing(spec)?;
    let phis = momentum_grid(n);
    if spec.statistics == Statistics::Boson {
        check_boson_stability(&x, &phis)?;
    }
    let solved: Vec<Option<(Mat2, f64)>> = phis
        .par_iter()
        .map(|&phi| {
            let phic = c(phi, 0.0);
            let xv = x.eval(phic);
            let xm = x.eval(-phic);
            let yv = y.eval(phic);
            solve_sylvester_at(&xv, &xm, &yv, phic).ok()
        })
        .collect();
    let mut values = Vec::with_capacity(n);
    let mut flagged = Vec::with_capacity(n);
    let mut max_cond: f64 = 0.0;
    let mut max_residual: f64 = 0.0;
    for (k, entry) in solved.into_iter().enumerate() {
        let phic = c(phis[k], 0.0);
        match entry {
            Some((gamma, cond)) => {
                values.push(gamma);
                flagged.push(false);
                max_cond = max_cond.max(cond);
                let res = frob2(
                    &(x.eval(-phic).transpose() * gamma + gamma * x.eval(phic) - y.eval(phic)),
                );
                let scale = frob2(&y.eval(phic))
                    .max(frob2(&x.eval(phic)) * frob2(&gamma))
                    .max(1e-300);
                max_residual = max_residual.max(res / scale);
            }
            None => {
                // Flagged momentum: store the minimum-norm pseudo-solution
                // (the finite part; exact when the singular system is
                // consistent) so pointwise consumers still see a value.
                let (gamma, _) = solve_min_norm_with_residual(&x, &y, phic);
                values.push(gamma);
                flagged.push(true);
            }
        }
    }
    Ok(CovarianceSymbol {
        statistics: spec.statistics,
        phis,
        values,
        flagged,
        max_residual,
        max_cond,
        drift: x,
        forcing: y,
    })
}

/// Minimum-norm solution of the fixed-point system at one momentum, usable
/// at singular momenta (where the system is consistent, e.g. at an exactly
/// critical point the solution vanishes there). Reporting normalization.
pub fn covariance_symbol_at(spec: &ModelSpec, phi: C64) -> Result<Mat2> {
    let (x, _) = drift_and_forcing(spec)?;
    let y = covariance_forcing(spec)?;
    let (gamma, _) = solve_min_norm_with_residual(&x, &y, phi);
    Ok(gamma)
}

/// Factor applied to reported symbol values before the inverse Fourier
/// transform so that real-space blocks are real.
fn real_space_factor(statistics: Statistics) -> C64 {
    match statistics {
        Statistics::Fermion => fermion_symbol_to_real_space(),
        Statistics::Boson => c(1.0, 0.0),
    }
}

/// Leaf panel of the adaptive refinement around a flagged momentum:
/// (lo, hi, samples at lo / mid / hi).
struct Panel {
    lo: f64,
    hi: f64,
    values: [Mat2; 3],
}

fn refine_cell(
    x: &TrigPoly,
    y: &TrigPoly,
    lo: f64,
    hi: f64,
    depth: usize,
    out: &mut Vec<Panel>,
) -> Result<()> {
    let solve_at = |phi: f64| -> Result<Mat2> {
        let phic = c(phi, 0.0);
        match solve_sylvester_at(&x.eval(phic), &x.eval(-phic), &y.eval(phic), phic) {
            Ok((g, _)) => Ok(g),
            Err(_) => {
                // Ill-conditioned sample: fall back to the minimum-norm
                // pseudo-solution, accepted only when the system is
                // consistent there (removable singularity). A genuine pole
                // on the real axis makes the integral diverge and is
                // reported as such.
                let (g, res) = solve_min_norm_with_residual(x, y, phic);
                if res <= 1e-8 {
                    Ok(g)
                } else {
                    Err(Error::Singular { phi: phic, cond: f64::INFINITY })
                }
            }
        }
    };
    let mid = 0.5 * (lo + hi);
    let vlo = solve_at(lo)?;
    let vmid = solve_at(mid)?;
    let vhi = solve_at(hi)?;
    let simpson = (vlo + vmid * c(4.0, 0.0) + vhi) * c((hi - lo) / 6.0, 0.0);
    let lmid = 0.5 * (lo + mid);
    let rmid = 0.5 * (mid + hi);
    let vlm = solve_at(lmid)?;
    let vrm = solve_at(rmid)?;
    let s_left = (vlo + vlm * c(4.0, 0.0) + vmid) * c((mid - lo) / 6.0, 0.0);
    let s_right = (vmid + vrm * c(4.0, 0.0) + vhi) * c((hi - mid) / 6.0, 0.0);
    let err = frob2(&(s_left + s_right - simpson));
    let scale = frob2(&vmid).max(1.0);
    if depth >= 14 || err <= 1e-11 * scale * (hi - lo) {
        out.push(Panel { lo, hi: mid, values: [vlo, vlm, vmid] });
        out.push(Panel { lo: mid, hi, values: [vmid, vrm, vhi] });
        return Ok(());
    }
    refine_cell(x, y, lo, mid, depth + 1, out)?;
    refine_cell(x, y, mid, hi, depth + 1, out)
}

/// Inverse Fourier transform of the covariance symbol to real-space blocks
/// gamma(r), |r| <= r_max, by the n-point trapezoid rule (exact for
/// trigonometric polynomials of degree < n, exponentially convergent here).
/// Requires n >= 8 r_max to keep aliasing below the correlation tail.
/// Cells around flagged momenta are integrated by local adaptive refinement
/// instead of the grid sample.
pub fn correlations(sym: &CovarianceSymbol, r_max: i64) -> Result<CovarianceField> {
    if r_max < 0 {
        return Err(Error::InvalidArg("r_max must be nonnegative".into()));
    }
    let n = sym.n();
    if (n as i64) < 8 * r_max.max(1) {
        return Err(Error::InvalidArg(format!(
            "grid size {n} too small for r_max {r_max}; need n >= 8 r_max"
        )));
    }
    let factor = real_space_factor(sym.statistics);
    let h = 2.0 * std::f64::consts::PI / n as f64;

    // Adaptive panels for flagged cells, shared across offsets r.
    let mut panels: Vec<Panel> = Vec::new();
    for (k, &bad) in sym.flagged.iter().enumerate() {
        if bad {
            let lo = sym.phis[k] - 0.5 * h;
            let hi = sym.phis[k] + 0.5 * h;
            refine_cell(&sym.drift, &sym.forcing, lo, hi, 0, &mut panels)?;
        }
    }

    let mut blocks = BTreeMap::new();
    let mut max_im: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for r in -r_max..=r_max {
        let mut acc = Mat2::zeros();
        for k in 0..n {
            if sym.flagged[k] {
                continue;
            }
            let w = (C64::i() * c(sym.phis[k] * r as f64, 0.0)).exp();
            acc += sym.values[k] * (w / n as f64);
        }
        // 1/(2 pi) times the adaptive cell integrals.
        for p in &panels {
            let mid = 0.5 * (p.lo + p.hi);
            let ws = [
                (C64::i() * c(p.lo * r as f64, 0.0)).exp(),
                (C64::i() * c(mid * r as f64, 0.0)).exp(),
                (C64::i() * c(p.hi * r as f64, 0.0)).exp(),
            ];
            let integral = (p.values[0] * ws[0] + p.values[1] * ws[1] * c(4.0, 0.0)
                + p.values[2] * ws[2])
                * c((p.hi - p.lo) / 6.0, 0.0);
            acc += integral / c(2.0 * std::f64::consts::PI, 0.0);
        }
        let val = acc * factor;
        max_im = max_im.max(max_imag2(&val));
        scale = scale.max(frob2(&val));
        blocks.insert(r, real_part2(&val));
    }
    if max_im > 1e-8 * scale.max(1e-30) {
        return Err(Error::Numeric(format!(
            "real-space covariance has imaginary contamination {max_im:.3e} (scale {scale:.3e})"
        )));
    }
    Ok(CovarianceField { statistics: sym.statistics, blocks, r_max, grid_n: n })
}

/// Exact covariance blocks of the translationally invariant steady state on
/// a finite ring of L sites, from the ring momenta 2 pi m / L. Offsets run
/// over 0..L-1 (block at (site j, site 0) is entry j). Used by the dense
/// oracle comparison, where grid and ring sizes coincide.
pub fn ring_correlations(spec: &ModelSpec, l: usize) -> Result<Vec<Mat2r>> {
    if l == 0 {
        return Err(Error::InvalidArg("ring size must be positive".into()));
    }
    let (x, _) = drift_and_forcing(spec)?;
    let y = covariance_forcing(spec)?;
    let phis: Vec<f64> = (0..l).map(|m| 2.0 * std::f64::consts::PI * m as f64 / l as f64).collect();
    if spec.statistics == Statistics::Boson {
        check_boson_stability(&x, &phis)?;
    }
    let mut gammas = Vec::with_capacity(l);
    for &phi in &phis {
        let phic = c(phi, 0.0);
        let (g, _) = solve_sylvester_at(&x.eval(phic), &x.eval(-phic), &y.eval(phic), phic)?;
        gammas.push(g);
    }
    let factor = real_space_factor(spec.statistics);
    let mut vals = Vec::with_capacity(l);
    for r in 0..l {
        let mut acc = Mat2::zeros();
        for (m, g) in gammas.iter().enumerate() {
            let w = (C64::i() * c(phis[m] * r as f64, 0.0)).exp();
            acc += g * (w / l as f64);
        }
        vals.push(acc * factor);
    }
    let scale = vals.iter().map(frob2).fold(1e-30, f64::max);
    let max_im = vals.iter().map(max_imag2).fold(0.0, f64::max);
    if max_im > 1e-8 * scale {
        return Err(Error::Numeric(format!(
            "ring covariance has imaginary contamination {max_im:.3e} (scale {scale:.3e})"
        )));
    }
    Ok(vals.iter().map(real_part2).collect())
}

/// Integrate the per-momentum covariance equation of motion
/// d gamma / dt = -(x^T(-phi) gamma + gamma x(phi)) + y(phi) with a fixed-step
/// classical 4th-order scheme from the initial symbol, independently at every
/// grid momentum. As T grows the result approaches the steady-state symbol.
pub fn evolve_symbol(
    spec: &ModelSpec,
    initial: &CovarianceSymbol,
    t_final: f64,
    steps: usize,
) -> Result<CovarianceSymbol> {
    if steps == 0 || t_final < 0.0 {
        return Err(Error::InvalidArg("evolution needs steps > 0 and T >= 0".into()));
    }
    let (x, _) = drift_and_forcing(spec)?;
    let y = covariance_forcing(spec)?;
    if spec.statistics != initial.statistics {
        return Err(Error::StatisticsMismatch("initial symbol has different statistics".into()));
    }
    if spec.statistics == Statistics::Boson {
        check_boson_stability(&x, &initial.phis)?;
    }
    let dt = t_final / steps as f64;
    let out: Vec<Mat2> = initial
        .phis
        .par_iter()
        .zip(&initial.values)
        .map(|(&phi, g0)| {
            let phic = c(phi, 0.0);
            let xl = x.eval(-phic).transpose();
            let xr = x.eval(phic);
            let yv = y.eval(phic);
            let rhs = |g: &Mat2| -> Mat2 { yv - (xl * g + g * xr) };
            let mut g = *g0;
            for _ in 0..steps {
                let k1 = rhs(&g);
                let k2 = rhs(&(g + k1 * c(0.5 * dt, 0.0)));
                let k3 = rhs(&(g + k2 * c(0.5 * dt, 0.0)));
                let k4 = rhs(&(g + k3 * c(dt, 0.0)));
                g += (k1 + k2 * c(2.0, 0.0) + k3 * c(2.0, 0.0) + k4) * c(dt / 6.0, 0.0);
            }
            g
        })
        .collect();
    Ok(CovarianceSymbol {
        statistics: initial.statistics,
        phis: initial.phis.clone(),
        values: out,
        flagged: vec![false; initial.n()],
        max_residual: f64::NAN,
        max_cond: f64::NAN,
        drift: x,
        forcing: y,
    })
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
    fn sylvester_identity_drift() {
        let x = Mat2::identity();
        let y = Mat2::new(c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(4.0, 0.0));
        let (g, _) = solve_sylvester_at(&x, &x, &y, c(0.0, 0.0)).unwrap();
        assert!((g[(0, 0)] - c(1.0, 0.0)).norm() < 1e-14);
        assert!((g[(1, 1)] - c(2.0, 0.0)).norm() < 1e-14);
        assert!(g[(0, 1)].norm() < 1e-14 && g[(1, 0)].norm() < 1e-14);
    }

    #[test]
    fn fermion_closed_form_at_special_point() {
        // Two-site noise, g = pi/2, phi = pi/2: reported symbol is identity/2,
        // independent of the chain parameters.
        for (b, gamma) in [(0.3, 0.7), (2.0, 1.0)] {
            let spec =
                preset_with_noise(preset_xy_fermion(b, gamma), NoiseKind::TwoSiteFermion, 1.0, PI / 2.0)
                    .unwrap();
            let (x, _) = drift_and_forcing(&spec).unwrap();
            let y = covariance_forcing(&spec).unwrap();
            let phi = c(PI / 2.0, 0.0);
            let (g, _) = solve_sylvester_at(&x.eval(phi), &x.eval(-phi), &y.eval(phi), phi).unwrap();
            assert!(frob2(&(g - Mat2::identity() * c(0.5, 0.0))) < 1e-12);
        }
    }

    #[test]
    fn boson_pure_loss_symbol_is_identity() {
        let spec =
            preset_with_noise(preset_boson_hopping(1.0, 0.3), NoiseKind::OnSiteBoson, 0.8, PI / 2.0)
                .unwrap();
        let sym = covariance_symbol(&spec, 64).unwrap();
        for v in &sym.values {
            assert!(frob2(&(v - Mat2::identity())) < 1e-11);
        }
        assert!(sym.max_residual < 1e-12);
    }

    #[test]
    fn fermion_symbol_closed_form_on_grid() {
        // gamma(phi) = sin g sin phi / (2 (1 + cos g cos phi)) * identity,
        // independent of the chain parameters.
        let g = 0.9;
        let spec =
            preset_with_noise(preset_xy_fermion(1.4, 0.7), NoiseKind::TwoSiteFermion, 0.8, g).unwrap();
        let sym = covariance_symbol(&spec, 256).unwrap();
        for (k, &phi) in sym.phis.iter().enumerate() {
            assert!(!sym.flagged[k]);
            let expect = g.sin() * phi.sin() / (2.0 * (1.0 + g.cos() * phi.cos()));
            let diff = frob2(&(sym.values[k] - Mat2::identity() * c(expect, 0.0)));
            assert!(diff < 1e-11, "phi={phi}: diff {diff:.3e}");
        }
    }

    #[test]
    fn boson_hermitian_on_grid() {
        let spec =
            preset_with_noise(preset_boson_hopping(1.0, 0.4), NoiseKind::OnSiteBoson, 0.9, 1.1)
                .unwrap();
        let sym = covariance_symbol(&spec, 256).unwrap();
        for v in &sym.values {
            assert!(frob2(&(v - v.adjoint())) < 1e-10);
        }
    }

    #[test]
    fn unstable_boson_refused() {
        let spec =
            preset_with_noise(preset_boson_hopping(1.0, 0.0), NoiseKind::OnSiteBoson, 1.0, -0.5)
                .unwrap();
        match covariance_symbol(&spec, 64) {
            Err(Error::Unstable { momenta }) => assert!(!momenta.is_empty()),
            other => panic!("expected Unstable, got {other:?}"),
        }
    }

    #[test]
    fn zero_noise_fermion_all_singular() {
        let spec = preset_xy_fermion(1.0, 0.5);
        let sym = covariance_symbol(&spec, 64).unwrap();
        assert!(sym.flagged.iter().all(|&f| f));
    }

    #[test]
    fn constant_symbol_transforms_to_delta() {
        let spec =
            preset_with_noise(preset_boson_hopping(1.0, 0.3), NoiseKind::OnSiteBoson, 0.8, PI / 2.0)
                .unwrap();
        let sym = covariance_symbol(&spec, 256).unwrap();
        let field = correlations(&sym, 16).unwrap();
        assert!(crate::linalg::frob2r(&(field.block(0) - Mat2r::identity())) < 1e-10);
        for r in 1..=16 {
            assert!(field.block_norm(r) < 1e-10);
            assert!(field.block_norm(-r) < 1e-10);
        }
    }

    #[test]
    fn fermion_blocks_real_antisymmetric_with_known_decay() {
        let g = PI / 3.0;
        let spec =
            preset_with_noise(preset_xy_fermion(0.9, 0.4), NoiseKind::TwoSiteFermion, 1.0, g).unwrap();
        let sym = covariance_symbol(&spec, 512).unwrap();
        let field = correlations(&sym, 40).unwrap();
        // Antisymmetry of the assembled restriction: gamma(-r) = -gamma(r)^T.
        for r in 0..=40 {
            let a = field.block(r);
            let b = field.block(-r);
            assert!(crate::linalg::frob2r(&(b + a.transpose())) < 1e-12);
        }
        // Tail ratio approaches exp(-arcosh(1/cos g)) = exp(-arcosh 2)
        // = 2 - sqrt(3); checked while the blocks are well above the f64
        // noise floor (block norms reach ~1e-12 by r = 20 here).
        let expect = 2.0 - 3.0f64.sqrt();
        for r in 5..=14 {
            let ratio = field.block_norm(r + 1) / field.block_norm(r);
            assert!((ratio - expect).abs() < 0.01, "r={r}: ratio {ratio}");
        }
    }

    #[test]
    fn long_range_decay_ratio_far_window() {
        // Weaker noise phase: the correlation length is long enough that the
        // exponential tail stays resolvable through r = 30.
        let g = 0.35;
        let spec =
            preset_with_noise(preset_xy_fermion(1.3, 0.6), NoiseKind::TwoSiteFermion, 0.9, g).unwrap();
        let sym = covariance_symbol(&spec, 512).unwrap();
        let field = correlations(&sym, 40).unwrap();
        let expect = (-(1.0 / g.cos()).acosh()).exp();
        for r in 10..=30 {
            let ratio = field.block_norm(r + 1) / field.block_norm(r);
            assert!((ratio - expect).abs() < 0.01, "r={r}: ratio {ratio} vs {expect}");
        }
    }

    #[test]
    fn critical_field_momentum_flagged_with_finite_value() {
        // At B = 1 (with Gamma = 0) the drift has an undamped mode at
        // phi = 0: the momentum is flagged, and the stored minimum-norm
        // value agrees with the closed form, which vanishes there.
        let spec =
            preset_with_noise(preset_xy_fermion(1.0, 0.0), NoiseKind::TwoSiteFermion, 0.8, 0.9)
                .unwrap();
        let sym = covariance_symbol(&spec, 64).unwrap();
        let k0 = sym.phis.iter().position(|&p| p.abs() < 1e-12).unwrap();
        assert!(sym.flagged[k0]);
        assert!(frob2(&sym.values[k0]) < 1e-10);
        // Every other momentum still matches the closed form.
        let g = 0.9f64;
        for (k, &phi) in sym.phis.iter().enumerate() {
            if k == k0 {
                continue;
            }
            let expect = g.sin() * phi.sin() / (2.0 * (1.0 + g.cos() * phi.cos()));
            assert!(
                frob2(&(sym.values[k] - Mat2::identity() * c(expect, 0.0))) < 1e-9,
                "phi = {phi}"
            );
        }
        // The field computation integrates through the flagged cell.
        let field = correlations(&sym, 8).unwrap();
        assert!(field.block_norm(1) > 1e-3);
    }

    #[test]
    fn grid_doubling_converged() {
        let spec =
            preset_with_noise(preset_xy_fermion(1.2, 0.5), NoiseKind::TwoSiteFermion, 0.8, 1.0)
                .unwrap();
        let f1 = correlations(&covariance_symbol(&spec, 512).unwrap(), 24).unwrap();
        let f2 = correlations(&covariance_symbol(&spec, 1024).unwrap(), 24).unwrap();
        let xi_inv = (1.0 / 1.0f64.cos()).acosh();
        let bound = (1e-9f64).max((-(512.0 / 2.0 - 24.0) * xi_inv).exp());
        for r in -24..=24 {
            let d = crate::linalg::frob2r(&(f1.block(r) - f2.block(r)));
            assert!(d <= bound * 10.0, "r={r}: {d:.3e} vs {bound:.3e}");
        }
    }

    #[test]
    fn evolve_fixed_point_is_stationary() {
        let spec =
            preset_with_noise(preset_xy_fermion(1.2, 0.5), NoiseKind::TwoSiteFermion, 0.8, 1.0)
                .unwrap();
        let sym = covariance_symbol(&spec, 64).unwrap();
        let evolved = evolve_symbol(&spec, &sym, 3.0, 600).unwrap();
        for (a, b) in sym.values.iter().zip(&evolved.values) {
            assert!(frob2(&(a - b)) < 1e-9);
        }
    }

    #[test]
    fn evolve_relaxes_to_fixed_point() {
        let spec =
            preset_with_noise(preset_xy_fermion(2.0, 0.5), NoiseKind::TwoSiteFermion, 0.8, 1.0)
                .unwrap();
        let sym = covariance_symbol(&spec, 64).unwrap();
        let from_zero = evolve_symbol(&spec, &sym.zeros_like(), 40.0, 4000).unwrap();
        for (a, b) in sym.values.iter().zip(&from_zero.values) {
            assert!(frob2(&(a - b)) < 1e-6);
        }
    }

    #[test]
    fn evolve_decay_rate_matches_drift_gap() {
        let spec =
            preset_with_noise(preset_xy_fermion(1.2, 0.5), NoiseKind::TwoSiteFermion, 0.8, 1.0)
                .unwrap();
        let sym = covariance_symbol(&spec, 64).unwrap();
        let (x, _) = drift_and_forcing(&spec).unwrap();
        // Pick an interior grid momentum and track the distance to the fixed
        // point at two times.
        let k = 10;
        let phi = sym.phis[k];
        let (b1, b2) = drift_eigenvalues(&x, c(phi, 0.0));
        let rate = 2.0 * b1.re.min(b2.re);
        let (t1, t2) = (1.0, 2.0);
        let e1 = evolve_symbol(&spec, &sym.zeros_like(), t1, 800).unwrap();
        let e2 = evolve_symbol(&spec, &sym.zeros_like(), t2, 1600).unwrap();
        let d1 = frob2(&(e1.values[k] - sym.values[k]));
        let d2 = frob2(&(e2.values[k] - sym.values[k]));
        let measured = (d1 / d2).ln() / (t2 - t1);
        assert!(
            measured > rate / 2.0 && measured < rate * 2.0,
            "measured {measured}, expected about {rate}"
        );
    }

    #[test]
    fn ring_momenta_match_infinite_symbol() {
        let spec =
            preset_with_noise(preset_xy_fermion(1.2, 0.5), NoiseKind::TwoSiteFermion, 0.8, 1.0)
                .unwrap();
        // On the ring the blocks are the L-point inverse DFT of the symbol.
        let blocks = ring_correlations(&spec, 12).unwrap();
        assert_eq!(blocks.len(), 12);
        // gamma(0) is antisymmetric for fermions, so its diagonal vanishes.
        assert!(blocks[0][(0, 0)].abs() < 1e-12);
        assert_relative_eq!(blocks[0][(0, 1)], -blocks[0][(1, 0)], epsilon = 1e-12);
    }
}
