//! Poles of the covariance symbol in the complex quasi-momentum strip,
//! correlation lengths, noise-driven critical exponents, and critical
//! slowing down.
//!
//! The singular momenta of the per-momentum fixed-point system are the zeros
//! of the entire function det(phi) built in `symbol::sylvester_determinant`;
//! they satisfy beta_a(phi*) + beta_b(-phi*) = 0 for some pair of drift
//! eigenvalue branches. Zeros are located by winding-number counting on
//! subdivided rectangles and polished by Newton iteration (on a derivative
//! of matching order for multiple zeros). A zero of the determinant need not
//! be a pole of the covariance symbol (the singular system can be
//! consistent), so each root is classified by the local growth of the
//! solution; correlation lengths use the nearest genuine pole,
//! xi^{-1} = |Im phi*|.

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{c, eig2, frob2, kron2, solve4, vec2, unvec2, Mat2};
use crate::model::{ModelSpec, Statistics};
use crate::steady::{correlations, covariance_symbol, momentum_grid};
use crate::symbol::{
    covariance_forcing, drift_and_forcing, sylvester_determinant, ScalarTrigPoly, TrigPoly,
};

/// Which eigenvalue-sum condition a root satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum PoleCondition {
    /// beta_nu(phi*) + beta_nu(-phi*) = 0 for branch nu in {1, 2}.
    SameBranch(u8),
    /// beta_1(phi*) + beta_2(-phi*) = 0.
    CrossBranch,
}

/// One root of the singularity conditions inside the searched strip.
#[derive(Debug, Clone)]
pub struct PoleReport {
    pub phi_star: C64,
    /// |Im phi*|; the inverse correlation length when this is the nearest
    /// genuine pole.
    pub im_abs: f64,
    pub condition: PoleCondition,
    /// |beta_a(phi*) + beta_b(-phi*)| of the matched condition, relative to
    /// the eigenvalue scale.
    pub residual: f64,
    /// Winding multiplicity of the determinant zero.
    pub multiplicity: usize,
    /// Whether the covariance symbol actually diverges here (the singular
    /// system can be consistent, in which case the root is not a pole).
    pub is_pole: bool,
    /// Root reached the real axis (criticality).
    pub critical: bool,
}

/// Result of a pole scan over the strip |Im phi| <= im_cap.
#[derive(Debug, Clone)]
pub struct PoleScan {
    /// All condition roots, sorted by |Im phi*| ascending.
    pub reports: Vec<PoleReport>,
    /// Two genuine poles tie in |Im phi*| within 1e-9.
    pub tie: bool,
    /// Winding recount over the sub-strip below the nearest pole found no
    /// unaccounted zero (no smaller pole was missed).
    pub verified_minimal: bool,
}

impl PoleScan {
    pub fn nearest_pole(&self) -> Option<&PoleReport> {
        self.reports.iter().find(|r| r.is_pole)
    }
}

// ---------------------------------------------------------------------------
// Winding-number machinery.

#[derive(Debug, Clone, Copy)]
struct Rect {
    re_lo: f64,
    re_hi: f64,
    im_lo: f64,
    im_hi: f64,
}

impl Rect {
    fn corners(&self) -> [C64; 4] {
        [
            c(self.re_lo, self.im_lo),
            c(self.re_hi, self.im_lo),
            c(self.re_hi, self.im_hi),
            c(self.re_lo, self.im_hi),
        ]
    }

    fn center(&self) -> C64 {
        c(0.5 * (self.re_lo + self.re_hi), 0.5 * (self.im_lo + self.im_hi))
    }

    fn diameter(&self) -> f64 {
        (self.re_hi - self.re_lo).max(self.im_hi - self.im_lo)
    }
}

/// Boundary passes too close to a zero; the caller perturbs the rectangle.
struct ContourHit;

/// Argument-principle zero count (with multiplicity) inside a rectangle:
/// accumulated argument of f along the boundary divided by 2 pi. Segments
/// are bisected until they are short compared to the inverse polynomial
/// degree (so the argument cannot alias by a full turn) and the increment
/// per step is below pi/2.
fn winding_count(f: &ScalarTrigPoly, rect: &Rect, floor: f64) -> std::result::Result<usize, ContourHit> {
    // The log-derivative of a trigonometric polynomial of degree K is O(K)
    // away from zeros, so steps of length 0.1/(K+1) change the argument by
    // well under pi/2 there; near-zero passes trigger further bisection.
    let k = f.max_offset().max(1) as f64;
    let min_len = 0.1 / (k + 1.0);
    let corners = rect.corners();
    let mut total = 0.0;
    for e in 0..4 {
        let z0 = corners[e];
        let z1 = corners[(e + 1) % 4];
        total += edge_arg_change(f, z0, z1, floor, min_len, 0)?;
    }
    let w = total / (2.0 * std::f64::consts::PI);
    let rounded = w.round();
    if (w - rounded).abs() > 0.25 || rounded < -0.25 {
        return Err(ContourHit);
    }
    Ok(rounded as usize)
}

fn edge_arg_change(
    f: &ScalarTrigPoly,
    z0: C64,
    z1: C64,
    floor: f64,
    min_len: f64,
    depth: usize,
) -> std::result::Result<f64, ContourHit> {
    let f0 = f.eval(z0);
    let f1 = f.eval(z1);
    if f0.norm() <= floor || f1.norm() <= floor {
        return Err(ContourHit);
    }
    let dphi = (f1 / f0).arg();
    if dphi.abs() <= std::f64::consts::FRAC_PI_2 && (z1 - z0).norm() <= min_len {
        return Ok(dphi);
    }
    if depth >= 48 {
        return Err(ContourHit);
    }
    let mid = (z0 + z1) * 0.5;
    Ok(edge_arg_change(f, z0, mid, floor, min_len, depth + 1)?
        + edge_arg_change(f, mid, z1, floor, min_len, depth + 1)?)
}

/// Newton polish of a zero of `f` of the given multiplicity, iterating on
/// the (m-1)-th derivative, which has a simple zero there.
fn polish_root(f: &ScalarTrigPoly, start: C64, multiplicity: usize) -> Option<C64> {
    let mut g = f.clone();
    for _ in 1..multiplicity {
        g = g.derivative();
    }
    let gp = g.derivative();
    let mut z = start;
    for _ in 0..80 {
        let gv = g.eval(z);
        let gpv = gp.eval(z);
        if gpv.norm() == 0.0 {
            return None;
        }
        let step = gv / gpv;
        z -= step;
        if step.norm() < 1e-14 * (1.0 + z.norm()) {
            return Some(z);
        }
    }
    Some(z)
}

fn subdivide(
    f: &ScalarTrigPoly,
    rect: Rect,
    floor: f64,
    out: &mut Vec<(C64, usize)>,
    depth: usize,
) -> Result<()> {
    // Perturb the rectangle slightly when a zero sits on the boundary.
    let mut count = None;
    let mut r = rect;
    for attempt in 0..6 {
        match winding_count(f, &r, floor) {
            Ok(w) => {
                count = Some((w, r));
                break;
            }
            Err(ContourHit) => {
                let bump = 1e-4 * rect.diameter() * (attempt + 1) as f64;
                r = Rect {
                    re_lo: rect.re_lo - bump,
                    re_hi: rect.re_hi + bump * 1.31,
                    im_lo: rect.im_lo - bump * 0.77,
                    im_hi: rect.im_hi + bump * 1.13,
                };
            }
        }
    }
    let (w, r) = count.ok_or_else(|| {
        Error::Numeric("winding count failed: zero persists on every perturbed contour".into())
    })?;
    if w == 0 {
        return Ok(());
    }
    if r.diameter() < 2e-2 || depth >= 40 {
        if let Some(z) = polish_root(f, r.center(), w) {
            out.push((z, w));
            return Ok(());
        }
        return Err(Error::Numeric("root polish failed to converge".into()));
    }
    let rm = 0.5 * (r.re_lo + r.re_hi);
    let im = 0.5 * (r.im_lo + r.im_hi);
    for (a, b, cc, d) in [
        (r.re_lo, rm, r.im_lo, im),
        (rm, r.re_hi, r.im_lo, im),
        (r.re_lo, rm, im, r.im_hi),
        (rm, r.re_hi, im, r.im_hi),
    ] {
        subdivide(f, Rect { re_lo: a, re_hi: b, im_lo: cc, im_hi: d }, floor, out, depth + 1)?;
    }
    Ok(())
}

fn canonical_re(re: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut r = re.rem_euclid(two_pi);
    if r >= std::f64::consts::PI {
        r -= two_pi;
    }
    r
}

fn roots_in_strip(delta: &ScalarTrigPoly, im_cap: f64) -> Result<Vec<(C64, usize)>> {
    let floor = 1e-280;
    let pad = 1e-7;
    // Shift the real window so no root sits on the left/right boundary
    // (they are identified by periodicity).
    let mut roots = Vec::new();
    let mut last_err = None;
    for &shift in &[0.0501, 0.1117, 0.2213, 0.3319] {
        roots.clear();
        let rect = Rect {
            re_lo: -std::f64::consts::PI + shift,
            re_hi: std::f64::consts::PI + shift,
            im_lo: -im_cap - pad,
            im_hi: im_cap + pad,
        };
        match subdivide(delta, rect, floor, &mut roots, 0) {
            Ok(()) => {
                last_err = None;
                break;
            }
            Err(e) => last_err = Some(e),
        }
    }
    if let Some(e) = last_err {
        return Err(e);
    }
    // Zeros of order m split under the rounding noise of the determinant
    // coefficients into clusters of radius roughly noise^(1/m). Cluster with
    // increasing radii, re-polishing each cluster on the derivative of
    // matching order, which has a simple, noise-robust zero there. Distinct
    // analytic roots closer than 1e-3 would be merged wrongly; the sub-strip
    // recount guards against such miscounts.
    let mut current: Vec<(C64, usize)> =
        roots.into_iter().map(|(z, m)| (c(canonical_re(z.re), z.im), m)).collect();
    for radius in [1e-4, 1e-3] {
        let mut clusters: Vec<(C64, usize, usize)> = Vec::new(); // (sum, count, mult)
        for (z, m) in current {
            let mut found = false;
            for (zsum, cnt, mm) in clusters.iter_mut() {
                let mean = *zsum / (*cnt as f64);
                if periodic_dist(z.re, mean.re) < radius && (z.im - mean.im).abs() < radius {
                    *zsum += c(mean.re + periodic_signed(z.re, mean.re), z.im);
                    *cnt += 1;
                    *mm += m;
                    found = true;
                    break;
                }
            }
            if !found {
                clusters.push((z, 1, m));
            }
        }
        current = clusters
            .into_iter()
            .map(|(zsum, cnt, m)| {
                let mean = zsum / (cnt as f64);
                let z = polish_root(delta, mean, m).unwrap_or(mean);
                (c(canonical_re(z.re), z.im), m)
            })
            .collect();
    }
    Ok(current)
}

/// Distance of two angles modulo 2 pi.
fn periodic_dist(a: f64, b: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let d = (a - b).rem_euclid(two_pi);
    d.min(two_pi - d)
}

/// Signed representative of a near b modulo 2 pi.
fn periodic_signed(a: f64, b: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut d = (a - b).rem_euclid(two_pi);
    if d > std::f64::consts::PI {
        d -= two_pi;
    }
    d
}

// ---------------------------------------------------------------------------
// Root classification.

fn classify_condition(x: &TrigPoly, phi: C64) -> (PoleCondition, f64) {
    let (b1p, b2p) = eig2(&x.eval(phi));
    let (b1m, b2m) = eig2(&x.eval(-phi));
    let scale = b1p.norm().max(b2p.norm()).max(b1m.norm()).max(b2m.norm()).max(1e-30);
    let combos = [
        (PoleCondition::SameBranch(1), (b1p + b1m).norm()),
        (PoleCondition::SameBranch(2), (b2p + b2m).norm()),
        (PoleCondition::CrossBranch, (b1p + b2m).norm().min((b2p + b1m).norm())),
    ];
    let mut best = combos[0];
    for cand in &combos[1..] {
        if cand.1 < best.1 {
            best = *cand;
        }
    }
    (best.0, best.1 / scale)
}

/// Norm of the fixed-point solution at a (complex) momentum; used to probe
/// growth toward a candidate pole.
fn solution_norm(x: &TrigPoly, y: &TrigPoly, phi: C64) -> Option<f64> {
    let id = Mat2::identity();
    let m = kron2(&id, &x.eval(-phi).transpose()) + kron2(&x.eval(phi).transpose(), &id);
    let rhs = vec2(&y.eval(phi));
    match solve4(&m, &rhs, 1e14, phi) {
        Ok((sol, _)) => Some(frob2(&unvec2(&sol))),
        Err(_) => None,
    }
}

/// Probe whether the covariance symbol diverges at the root: compare the
/// solution norm on circles of radius delta and 2 delta around it. A simple
/// pole doubles the norm; a consistent (removable) singular point does not.
fn is_genuine_pole(x: &TrigPoly, y: &TrigPoly, root: C64) -> bool {
    let delta = 1e-4;
    let mut grew = 0;
    let mut shrunk = 0;
    for k in 0..4 {
        let dir = C64::from_polar(1.0, 0.25 * std::f64::consts::PI + 0.5 * std::f64::consts::PI * k as f64);
        let near = solution_norm(x, y, root + dir * delta);
        let far = solution_norm(x, y, root + dir * (2.0 * delta));
        match (near, far) {
            (Some(n), Some(f)) if f > 1e-300 => {
                if n / f > 1.5 {
                    grew += 1;
                } else {
                    shrunk += 1;
                }
            }
            // Unsolvable that close to the root counts as divergence.
            (None, _) => grew += 1,
            _ => shrunk += 1,
        }
    }
    grew > shrunk
}

// ---------------------------------------------------------------------------
// Public operations.

/// Locate all roots of the eigenvalue-sum conditions in the strip
/// |Im phi| <= im_cap, classify them, and sort by |Im phi*|. Returns an
/// empty report list when the strip is clean.
pub fn pole_scan(spec: &ModelSpec, im_cap: f64) -> Result<PoleScan> {
    if spec.dimension != 1 {
        return Err(Error::InvalidArg("pole search is implemented for one dimension".into()));
    }
    if !(im_cap > 0.0) || im_cap > 20.0 {
        return Err(Error::InvalidArg("im_cap must lie in (0, 20]".into()));
    }
    let (x, _) = drift_and_forcing(spec)?;
    let y = covariance_forcing(spec)?;
    let delta = sylvester_determinant(&x);
    if delta.amplitude() < 1e-300 {
        // Identically singular (e.g. no noise at all): no isolated roots.
        return Ok(PoleScan { reports: Vec::new(), tie: false, verified_minimal: false });
    }
    let roots = roots_in_strip(&delta, im_cap)?;
    let mut reports: Vec<PoleReport> = roots
        .into_iter()
        .map(|(z, m)| {
            let (condition, residual) = classify_condition(&x, z);
            let critical = z.im.abs() <= 1e-9;
            let is_pole = if critical {
                // A root on the real axis: genuine criticality. The
                // solution cannot diverge pointwise (it vanishes instead for
                // fermions), but the decay length it controls is infinite.
                true
            } else {
                is_genuine_pole(&x, &y, z)
            };
            PoleReport {
                phi_star: z,
                im_abs: z.im.abs(),
                condition,
                residual,
                multiplicity: m,
                is_pole,
                critical,
            }
        })
        .collect();
    reports.sort_by(|a, b| a.im_abs.partial_cmp(&b.im_abs).unwrap());

    let poles: Vec<&PoleReport> = reports.iter().filter(|r| r.is_pole).collect();
    // Ambiguity flag: two poles tie in |Im phi*| without being images of
    // each other under phi -> -phi or conjugation (those always tie).
    let tie = poles.len() >= 2 && {
        let a = poles[0];
        poles[1..].iter().any(|b| {
            (a.im_abs - b.im_abs).abs() <= 1e-9
                && periodic_dist(a.phi_star.re.abs(), b.phi_star.re.abs()) > 1e-6
        })
    };

    // Recount the sub-strip below the nearest genuine pole: every zero there
    // must be one of the classified non-pole roots. The cap sits midway
    // between the pole and the largest root below it, clear of contour
    // perturbations.
    let mut verified_minimal = true;
    if let Some(p) = poles.first() {
        let below = reports
            .iter()
            .filter(|r| r.im_abs < p.im_abs - 1e-9)
            .map(|r| r.im_abs)
            .fold(0.0f64, f64::max);
        let sub_cap = 0.5 * (p.im_abs + below);
        if sub_cap > 1e-9 && sub_cap < p.im_abs - 1e-9 {
            let sub = roots_in_strip(&delta, sub_cap)?;
            let expected: usize = reports
                .iter()
                .filter(|r| !r.is_pole && r.im_abs < sub_cap)
                .map(|r| r.multiplicity)
                .sum();
            let counted: usize = sub
                .iter()
                .filter(|(z, _)| z.im.abs() <= sub_cap)
                .map(|(_, m)| m)
                .sum();
            verified_minimal = counted == expected;
        }
    }
    Ok(PoleScan { reports, tie, verified_minimal })
}

/// Like [`pole_scan`], but fails with `NoPoles` when no genuine pole exists
/// in the strip (the correlation length is then only bounded by the cap).
pub fn find_poles(spec: &ModelSpec, im_cap: f64) -> Result<PoleScan> {
    let scan = pole_scan(spec, im_cap)?;
    if scan.nearest_pole().is_none() {
        return Err(Error::NoPoles { im_cap });
    }
    Ok(scan)
}

/// Which route produced the primary inverse correlation length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum XiSource {
    Pole,
    TailFit,
}

/// Correlation length from the nearest pole, cross-checked by a linear fit
/// of the exponential tail of real-space correlations.
#[derive(Debug, Clone)]
pub struct CorrelationLength {
    pub xi_inv_pole: Option<f64>,
    pub xi_inv_tail: Option<f64>,
    pub source: XiSource,
    /// Relative disagreement between the two routes when both exist.
    pub agreement: Option<f64>,
    /// Fit window [r1, r2] in lattice offsets.
    pub window: Option<(i64, i64)>,
    pub pole: Option<PoleReport>,
}

impl CorrelationLength {
    pub fn xi_inv(&self) -> Option<f64> {
        match self.source {
            XiSource::Pole => self.xi_inv_pole,
            XiSource::TailFit => self.xi_inv_tail,
        }
    }
}

fn tail_fit(spec: &ModelSpec, xi_est: f64) -> Result<Option<(f64, (i64, i64))>> {
    // Window [max(5, 2 xi), min(r_max, 6 xi)] with the pole-route estimate,
    // clear of short-distance transients and of the quadrature noise floor.
    let r2 = ((6.0 * xi_est).ceil() as i64).clamp(12, 160);
    let r1 = ((2.0 * xi_est).ceil() as i64).max(5).min(r2 - 4);
    let r_max = r2;
    let mut n = (8 * r_max as usize).next_power_of_two().max(256);
    n = n.min(8192);
    let sym = covariance_symbol(spec, n)?;
    let field = correlations(&sym, r_max)?;
    let norm0 = (0..=r_max).map(|r| field.block_norm(r)).fold(0.0, f64::max);
    let floor = (1e-13 * norm0).max(1e-290);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for r in r1..=r2 {
        let v = field.block_norm(r);
        if v > floor {
            xs.push(r as f64);
            ys.push(v.ln());
        }
    }
    if xs.len() < 4 {
        return Ok(None);
    }
    let (slope, _) = linear_fit(&xs, &ys);
    Ok(Some((-slope, (r1, r2))))
}

fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let denom = n * sxx - sx * sx;
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    (slope, intercept)
}

/// Inverse correlation length xi^{-1} = |Im phi*| of the nearest pole, with
/// the independent tail-fit route as a cross-check. Falls back to the tail
/// fit when no pole lies within the default strip.
pub fn correlation_length(spec: &ModelSpec) -> Result<CorrelationLength> {
    let default_cap = 8.0;
    let scan = pole_scan(spec, default_cap)?;
    match scan.nearest_pole().cloned() {
        Some(pole) => {
            let xi_inv = pole.im_abs;
            if xi_inv <= 1e-9 {
                // Exactly critical: infinite correlation length; the tail
                // fit has nothing exponential to measure.
                return Ok(CorrelationLength {
                    xi_inv_pole: Some(0.0),
                    xi_inv_tail: None,
                    source: XiSource::Pole,
                    agreement: None,
                    window: None,
                    pole: Some(pole),
                });
            }
            let xi_est = 1.0 / xi_inv;
            let tail = tail_fit(spec, xi_est)?;
            let (xi_inv_tail, window) = match tail {
                Some((v, w)) => (Some(v), Some(w)),
                None => (None, None),
            };
            let agreement = xi_inv_tail.map(|t| (t - xi_inv).abs() / xi_inv);
            Ok(CorrelationLength {
                xi_inv_pole: Some(xi_inv),
                xi_inv_tail,
                source: XiSource::Pole,
                agreement,
                window,
                pole: Some(pole),
            })
        }
        None => {
            // No genuine pole in the strip (removable condition roots do not
            // bound the decay): tail route only, iterating the window from a
            // coarse estimate.
            let mut xi_est = 4.0;
            let mut result = None;
            for _ in 0..3 {
                match tail_fit(spec, xi_est)? {
                    Some((xi_inv_tail, window)) if xi_inv_tail > 1e-6 => {
                        xi_est = 1.0 / xi_inv_tail;
                        result = Some((xi_inv_tail, window));
                    }
                    _ => break,
                }
            }
            let (xi_inv_tail, window) = match result {
                Some((v, w)) => (Some(v), Some(w)),
                None => (None, None),
            };
            Ok(CorrelationLength {
                xi_inv_pole: None,
                xi_inv_tail,
                source: XiSource::TailFit,
                agreement: None,
                window,
                pole: None,
            })
        }
    }
}

/// Power-law fit xi^{-1} ~ amplitude |g - g_c|^lambda over a one-sided
/// parameter sweep.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SweepFit {
    /// (g, xi^{-1}) samples, ordered by g.
    pub samples: Vec<(f64, f64)>,
    pub g_c: f64,
    pub lambda: f64,
    pub amplitude: f64,
    /// RMS residual of log xi^{-1} vs log |g - g_c|.
    pub residual: f64,
    /// |g - g_c| range the fit used.
    pub window: (f64, f64),
}

fn check_stability_over_grid(spec: &ModelSpec) -> Result<()> {
    if spec.statistics != Statistics::Boson {
        return Ok(());
    }
    let (x, _) = drift_and_forcing(spec)?;
    let mut offending = Vec::new();
    for phi in momentum_grid(512) {
        let (b1, b2) = crate::symbol::drift_eigenvalues(&x, c(phi, 0.0));
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

/// Fit the noise-driven critical exponent: sweep the named parameter over
/// `grid` (all on one side of the critical point), compute pole-route
/// inverse correlation lengths, estimate g_c near `g_c_hint` by residual
/// minimization, then fit (lambda, amplitude) on log-log scale.
pub fn exponent_fit(
    spec: &ModelSpec,
    sweep_param: &str,
    grid: &[f64],
    g_c_hint: f64,
) -> Result<SweepFit> {
    if grid.len() < 10 {
        return Err(Error::InvalidArg(format!(
            "exponent fit needs at least 10 sweep points, got {}",
            grid.len()
        )));
    }
    let mut gs: Vec<f64> = grid.to_vec();
    gs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let one_side = gs.iter().all(|&g| g > g_c_hint) || gs.iter().all(|&g| g < g_c_hint);
    if !one_side {
        return Err(Error::InvalidArg("sweep grid must approach g_c from one side".into()));
    }
    let samples: Vec<(f64, f64)> = gs
        .par_iter()
        .map(|&g| -> Result<(f64, f64)> {
            let s = spec.with_param(sweep_param, g);
            check_stability_over_grid(&s)?;
            let scan = find_poles(&s, 8.0)?;
            let p = scan.nearest_pole().expect("find_poles guarantees a pole");
            Ok((g, p.im_abs))
        })
        .collect::<Result<Vec<_>>>()?;

    // Monotone divergence toward g_c with a meaningful span.
    let ordered: Vec<(f64, f64)> = {
        let mut v = samples.clone();
        v.sort_by(|a, b| {
            (a.0 - g_c_hint).abs().partial_cmp(&(b.0 - g_c_hint).abs()).unwrap()
        });
        v
    };
    let monotone = ordered.windows(2).all(|w| w[1].1 >= w[0].1 * (1.0 - 1e-9));
    let min_xi = ordered.first().map(|s| s.1).unwrap_or(0.0);
    let max_xi = ordered.last().map(|s| s.1).unwrap_or(0.0);
    if !monotone || max_xi <= 0.0 || (max_xi - min_xi) < 0.1 * max_xi {
        return Err(Error::FitDegenerate(format!(
            "xi^-1 does not diverge monotonically toward g_c (span {min_xi:.3e}..{max_xi:.3e})"
        )));
    }

    // g_c candidates on a fine sub-grid around the hint, keeping every
    // sample strictly on one side.
    let nearest = ordered.first().map(|s| s.0).unwrap();
    let d_min = (nearest - g_c_hint).abs().max(1e-12);
    let half = 0.9 * d_min;
    let mut best: Option<(f64, f64, f64, f64)> = None; // (residual, g_c, lambda, ln_amp)
    for k in 0..=200 {
        let g_c = g_c_hint - half + (2.0 * half) * k as f64 / 200.0;
        if !samples.iter().all(|&(g, _)| (g - g_c).abs() > 1e-12 && (g > g_c) == (nearest > g_c)) {
            continue;
        }
        let xs: Vec<f64> = samples.iter().map(|&(g, _)| (g - g_c).abs().ln()).collect();
        let ys: Vec<f64> = samples.iter().map(|&(_, x)| x.ln()).collect();
        let (slope, intercept) = linear_fit(&xs, &ys);
        let rms = (xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| {
                let e = y - (slope * x + intercept);
                e * e
            })
            .sum::<f64>()
            / xs.len() as f64)
            .sqrt();
        if best.map_or(true, |(r, ..)| rms < r) {
            best = Some((rms, g_c, slope, intercept));
        }
    }
    let (residual, g_c, lambda, ln_amp) =
        best.ok_or_else(|| Error::FitDegenerate("no admissible g_c candidate".into()))?;
    let dists: Vec<f64> = samples.iter().map(|&(g, _)| (g - g_c).abs()).collect();
    let window = (
        dists.iter().copied().fold(f64::INFINITY, f64::min),
        dists.iter().copied().fold(0.0, f64::max),
    );
    Ok(SweepFit { samples, g_c, lambda, amplitude: ln_amp.exp(), residual, window })
}

/// One sweep point of the slowing-down diagnostic.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SlowingDownRow {
    pub g: f64,
    /// Slowest relaxation time 1 / min_phi Re beta(phi).
    pub tau: f64,
    pub xi_inv: f64,
    /// tau / xi = tau * xi_inv.
    pub ratio: f64,
}

/// Relaxation time vs correlation length across a sweep.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SlowingDownReport {
    pub rows: Vec<SlowingDownRow>,
    /// inf_g tau(g) / xi(g); positive when slowing down tracks criticality.
    pub inf_ratio: f64,
    pub bounded_below: bool,
}

/// Compute tau(g) = 1 / min over real phi of Re eig(x(phi)) and xi(g) over a
/// sweep of the named parameter, reporting the empirical lower bound of
/// tau / xi.
pub fn slowing_down_check(spec: &ModelSpec, sweep_param: &str, grid: &[f64]) -> Result<SlowingDownReport> {
    let rows: Vec<SlowingDownRow> = grid
        .par_iter()
        .map(|&g| -> Result<SlowingDownRow> {
            let s = spec.with_param(sweep_param, g);
            check_stability_over_grid(&s)?;
            let (x, _) = drift_and_forcing(&s)?;
            let mut min_re = f64::INFINITY;
            for phi in momentum_grid(2048) {
                let (b1, b2) = crate::symbol::drift_eigenvalues(&x, c(phi, 0.0));
                min_re = min_re.min(b1.re).min(b2.re);
            }
            if min_re <= 0.0 {
                return Err(Error::Singular { phi: c(f64::NAN, 0.0), cond: f64::INFINITY });
            }
            let tau = 1.0 / min_re;
            let scan = find_poles(&s, 8.0)?;
            let xi_inv = scan.nearest_pole().expect("pole required").im_abs;
            Ok(SlowingDownRow { g, tau, xi_inv, ratio: tau * xi_inv })
        })
        .collect::<Result<Vec<_>>>()?;
    let inf_ratio = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    Ok(SlowingDownReport { rows, inf_ratio, bounded_below: inf_ratio > 0.0 })
}
