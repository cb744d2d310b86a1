//! Declarative descriptions of translationally invariant quasi-free lattice
//! models: a finite-range quadratic Hamiltonian stencil plus quasi-local
//! linear Lindblad channels, with named scalar parameters.
//!
//! Conventions. Site-local coordinates are ordered (u1, u2) with
//! u1 = b + b^dag, u2 = i(b - b^dag) for bosons and w1 = f + f^dag,
//! w2 = i(f - f^dag) for fermions (no 1/sqrt(2) in this normalization).
//! The Hamiltonian is the full quadratic form H = sum_{jk} u_j H_{jk} u_k
//! assembled from 2x2 blocks h(j - k); Lindblad operators are L = l^T u
//! with a length-2 coefficient vector per lattice offset, repeated at every
//! site by translation.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, frob2, Mat2};

/// Particle statistics of the model; selects the drift/forcing construction
/// and the covariance symmetry class downstream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistics {
    Boson,
    Fermion,
}

impl std::fmt::Display for Statistics {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Statistics::Boson => write!(f, "boson"),
            Statistics::Fermion => write!(f, "fermion"),
        }
    }
}

/// One term of a coupling amplitude: a complex scale times a product of
/// named parameters times a phase factor exp(i * sum_k c_k p_k).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingTerm {
    pub scale_re: f64,
    pub scale_im: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub factors: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub phase: Vec<(String, f64)>,
}

impl CouplingTerm {
    fn eval(&self, params: &BTreeMap<String, f64>) -> Result<C64> {
        let mut z = c(self.scale_re, self.scale_im);
        for name in &self.factors {
            let v = *params
                .get(name)
                .ok_or_else(|| Error::InvalidModel(format!("unbound parameter `{name}`")))?;
            z *= v;
        }
        let mut arg = 0.0;
        for (name, coeff) in &self.phase {
            let v = *params
                .get(name)
                .ok_or_else(|| Error::InvalidModel(format!("unbound parameter `{name}`")))?;
            arg += coeff * v;
        }
        if arg != 0.0 {
            z *= C64::from_polar(1.0, arg);
        }
        Ok(z)
    }
}

/// A coupling amplitude as a sum of product terms. Keeping parameter names
/// symbolic lets sweeps rebind one scalar without rebuilding stencils.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub terms: Vec<CouplingTerm>,
}

impl Coupling {
    pub fn zero() -> Self {
        Coupling { terms: Vec::new() }
    }

    pub fn constant(z: C64) -> Self {
        if z == c(0.0, 0.0) {
            return Self::zero();
        }
        Coupling {
            terms: vec![CouplingTerm { scale_re: z.re, scale_im: z.im, factors: vec![], phase: vec![] }],
        }
    }

    /// scale * p1 * p2 * ... for the named parameters.
    pub fn product(z: C64, factors: &[&str]) -> Self {
        Coupling {
            terms: vec![CouplingTerm {
                scale_re: z.re,
                scale_im: z.im,
                factors: factors.iter().map(|s| s.to_string()).collect(),
                phase: vec![],
            }],
        }
    }

    /// Multiply the last-added term by exp(i * coeff * param).
    pub fn with_phase(mut self, param: &str, coeff: f64) -> Self {
        if let Some(t) = self.terms.last_mut() {
            t.phase.push((param.to_string(), coeff));
        }
        self
    }

    pub fn plus(mut self, other: Coupling) -> Self {
        self.terms.extend(other.terms);
        self
    }

    pub fn eval(&self, params: &BTreeMap<String, f64>) -> Result<C64> {
        let mut z = c(0.0, 0.0);
        for t in &self.terms {
            z += t.eval(params)?;
        }
        Ok(z)
    }

    fn referenced(&self, out: &mut Vec<String>) {
        for t in &self.terms {
            out.extend(t.factors.iter().cloned());
            out.extend(t.phase.iter().map(|(n, _)| n.clone()));
        }
    }
}

/// 2x2 block of coupling amplitudes, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingBlock(pub [Coupling; 4]);

impl CouplingBlock {
    pub fn eval(&self, params: &BTreeMap<String, f64>) -> Result<Mat2> {
        Ok(Mat2::new(
            self.0[0].eval(params)?,
            self.0[1].eval(params)?,
            self.0[2].eval(params)?,
            self.0[3].eval(params)?,
        ))
    }
}

/// Finite-range quadratic Hamiltonian stencil: offset -> 2x2 block h(j).
///
/// Bosonic stencils satisfy h(-j) = h(j)^T with real blocks; fermionic ones
/// satisfy h(-j) = -h(j)^T with purely imaginary blocks.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianStencil {
    pub entries: BTreeMap<i64, CouplingBlock>,
}

impl HamiltonianStencil {
    pub fn eval_block(&self, j: i64, params: &BTreeMap<String, f64>) -> Result<Mat2> {
        match self.entries.get(&j) {
            Some(b) => b.eval(params),
            None => Ok(Mat2::zeros()),
        }
    }

    pub fn offsets(&self) -> impl Iterator<Item = i64> + '_ {
        self.entries.keys().copied()
    }

    pub fn range(&self) -> i64 {
        self.entries.keys().map(|j| j.abs()).max().unwrap_or(0)
    }
}

/// One quasi-local Lindblad channel: offset -> length-2 coefficient vector.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LindbladStencil {
    pub entries: BTreeMap<i64, [Coupling; 2]>,
}

impl LindbladStencil {
    pub fn eval_vec(&self, j: i64, params: &BTreeMap<String, f64>) -> Result<[C64; 2]> {
        match self.entries.get(&j) {
            Some([a, b]) => Ok([a.eval(params)?, b.eval(params)?]),
            None => Ok([c(0.0, 0.0), c(0.0, 0.0)]),
        }
    }

    pub fn offsets(&self) -> impl Iterator<Item = i64> + '_ {
        self.entries.keys().copied()
    }

    pub fn range(&self) -> i64 {
        self.entries.keys().map(|j| j.abs()).max().unwrap_or(0)
    }
}

/// A complete model: statistics, lattice dimension, Hamiltonian stencil,
/// Lindblad channels and bound parameter values. Immutable after
/// construction; parameter rebinding produces a new value, so specs are safe
/// to share across worker threads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub statistics: Statistics,
    pub dimension: usize,
    pub hamiltonian: HamiltonianStencil,
    pub lindblads: Vec<LindbladStencil>,
    pub params: BTreeMap<String, f64>,
}

impl ModelSpec {
    pub fn new(statistics: Statistics) -> Self {
        ModelSpec {
            statistics,
            dimension: 1,
            hamiltonian: HamiltonianStencil::default(),
            lindblads: Vec::new(),
            params: BTreeMap::new(),
        }
    }

    /// Rebind one named parameter, leaving stencils untouched.
    pub fn with_param(&self, name: &str, value: f64) -> Self {
        let mut out = self.clone();
        out.params.insert(name.to_string(), value);
        out
    }

    /// Attach a noise channel, binding any parameters it needs.
    pub fn with_channel(&self, channel: LindbladStencil, bindings: &[(&str, f64)]) -> Self {
        let mut out = self.clone();
        out.lindblads.push(channel);
        for (name, value) in bindings {
            out.params.insert(name.to_string(), *value);
        }
        out
    }

    pub fn param(&self, name: &str) -> Result<f64> {
        self.params
            .get(name)
            .copied()
            .ok_or_else(|| Error::InvalidModel(format!("unbound parameter `{name}`")))
    }

    pub fn hamiltonian_range(&self) -> i64 {
        self.hamiltonian.range()
    }

    pub fn noise_range(&self) -> i64 {
        self.lindblads.iter().map(|l| l.range()).max().unwrap_or(0)
    }

    /// Largest stencil offset appearing anywhere in the model.
    pub fn range(&self) -> i64 {
        self.hamiltonian_range().max(self.noise_range())
    }
}

/// Outcome of one structural check.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Diagnostics listing every structural invariant check; callers decide
/// whether failures abort.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> Vec<&CheckResult> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }

    fn push(&mut self, name: &str, pass: bool, detail: String) {
        self.checks.push(CheckResult { name: name.to_string(), pass, detail });
    }
}

/// Check structural invariants: parameter binding, lattice dimension, finite
/// support, statistics-appropriate block symmetry and reality, and
/// Hermiticity of the Hamiltonian symbol on a momentum grid.
pub fn validate(spec: &ModelSpec) -> ValidationReport {
    let mut report = ValidationReport { checks: Vec::new() };

    let mut referenced = Vec::new();
    for block in spec.hamiltonian.entries.values() {
        for coup in &block.0 {
            coup.referenced(&mut referenced);
        }
    }
    for ch in &spec.lindblads {
        for [a, b] in ch.entries.values() {
            a.referenced(&mut referenced);
            b.referenced(&mut referenced);
        }
    }
    referenced.sort();
    referenced.dedup();
    let unbound: Vec<String> =
        referenced.into_iter().filter(|n| !spec.params.contains_key(n)).collect();
    report.push(
        "parameter-binding",
        unbound.is_empty(),
        if unbound.is_empty() {
            "all referenced parameters bound".into()
        } else {
            format!("unbound: {unbound:?}")
        },
    );

    report.push(
        "dimension",
        spec.dimension == 1,
        format!("dimension = {} (operations beyond validation require 1)", spec.dimension),
    );

    report.push(
        "finite-support",
        true,
        format!(
            "hamiltonian range {}, noise range {}",
            spec.hamiltonian_range(),
            spec.noise_range()
        ),
    );

    if !unbound.is_empty() {
        return report;
    }

    let mut sym_ok = true;
    let mut sym_detail = String::new();
    let mut reality_ok = true;
    for j in spec.hamiltonian.offsets() {
        let hj = spec.hamiltonian.eval_block(j, &spec.params).unwrap();
        let hmj = spec.hamiltonian.eval_block(-j, &spec.params).unwrap();
        let target = match spec.statistics {
            Statistics::Boson => hj.transpose(),
            Statistics::Fermion => -hj.transpose(),
        };
        let dev = frob2(&(hmj - target));
        if dev > 1e-14 * (1.0 + frob2(&hj)) {
            sym_ok = false;
            sym_detail = format!("offset {j}: block symmetry violated by {dev:.3e}");
        }
        let bad_part = match spec.statistics {
            Statistics::Boson => hj.iter().map(|z| z.im.abs()).fold(0.0, f64::max),
            Statistics::Fermion => hj.iter().map(|z| z.re.abs()).fold(0.0, f64::max),
        };
        if bad_part > 1e-14 * (1.0 + frob2(&hj)) {
            reality_ok = false;
        }
    }
    report.push(
        "hamiltonian-symmetry",
        sym_ok,
        if sym_ok { "statistics-appropriate block symmetry holds".into() } else { sym_detail },
    );
    report.push(
        "hamiltonian-reality",
        reality_ok,
        match spec.statistics {
            Statistics::Boson => "bosonic blocks real".into(),
            Statistics::Fermion => "fermionic blocks purely imaginary".into(),
        },
    );

    let mut herm_dev: f64 = 0.0;
    if sym_ok {
        if let Ok(h) = crate::symbol::hamiltonian_symbol(spec) {
            let n = 1024;
            for k in 0..n {
                let phi = -std::f64::consts::PI + 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                let v = h.eval_real(phi);
                herm_dev = herm_dev.max(frob2(&(v - v.adjoint())));
            }
        }
    }
    report.push(
        "symbol-hermitian",
        sym_ok && herm_dev <= 1e-12,
        format!("max |h(phi) - h(phi)^dag| = {herm_dev:.3e} on 1024-point grid"),
    );

    report
}

// ---------------------------------------------------------------------------
// Built-in presets.

/// Kinds of built-in noise channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    OnSiteFermion,
    TwoSiteFermion,
    OnSiteBoson,
}

/// Fermionic chain with Hamiltonian symbol
/// h(phi) = (B - cos phi)/2 sigma_y + (Gamma/2) sin(phi) sigma_x.
/// Noise channels are attached separately via [`preset_noise`].
pub fn preset_xy_fermion(b: f64, gamma: f64) -> ModelSpec {
    let mut spec = ModelSpec::new(Statistics::Fermion);
    spec.params.insert("B".into(), b);
    spec.params.insert("Gamma".into(), gamma);

    // On-site block (B/2) sigma_y with sigma_y = [[0, -i], [i, 0]].
    spec.hamiltonian.entries.insert(
        0,
        CouplingBlock([
            Coupling::zero(),
            Coupling::product(c(0.0, -0.5), &["B"]),
            Coupling::product(c(0.0, 0.5), &["B"]),
            Coupling::zero(),
        ]),
    );
    // Offset +1 block: -(1/4) sigma_y + (i Gamma / 4) sigma_x.
    spec.hamiltonian.entries.insert(
        1,
        CouplingBlock([
            Coupling::zero(),
            Coupling::constant(c(0.0, 0.25)).plus(Coupling::product(c(0.0, 0.25), &["Gamma"])),
            Coupling::constant(c(0.0, -0.25)).plus(Coupling::product(c(0.0, 0.25), &["Gamma"])),
            Coupling::zero(),
        ]),
    );
    // Offset -1 block: -(1/4) sigma_y - (i Gamma / 4) sigma_x = -h(1)^T.
    spec.hamiltonian.entries.insert(
        -1,
        CouplingBlock([
            Coupling::zero(),
            Coupling::constant(c(0.0, 0.25)).plus(Coupling::product(c(0.0, -0.25), &["Gamma"])),
            Coupling::constant(c(0.0, -0.25)).plus(Coupling::product(c(0.0, -0.25), &["Gamma"])),
            Coupling::zero(),
        ]),
    );
    spec
}

/// Bosonic nearest-neighbour hopping chain with Hamiltonian symbol
/// h(phi) = t (cos phi - v) times the 2x2 identity block.
pub fn preset_boson_hopping(t: f64, v: f64) -> ModelSpec {
    let mut spec = ModelSpec::new(Statistics::Boson);
    spec.params.insert("t".into(), t);
    spec.params.insert("v".into(), v);
    let diag = |coup: Coupling| CouplingBlock([coup.clone(), Coupling::zero(), Coupling::zero(), coup]);
    spec.hamiltonian.entries.insert(1, diag(Coupling::product(c(0.5, 0.0), &["t"])));
    spec.hamiltonian.entries.insert(-1, diag(Coupling::product(c(0.5, 0.0), &["t"])));
    spec.hamiltonian.entries.insert(0, diag(Coupling::product(c(-1.0, 0.0), &["t", "v"])));
    spec
}

/// Build one of the built-in noise channels. The channel references the
/// parameters `eps` and `g`, to be bound on the owning `ModelSpec`
/// (see [`ModelSpec::with_channel`]).
///
/// On-site fermion:  L = eps (f + f^dag) + eps i (f - f^dag) e^{i g},
///   coefficient vector (eps, eps e^{i g}) at offset 0.
/// Two-site fermion: L = eps (f_j + f_j^dag) + eps (f_{j+1} + f_{j+1}^dag) e^{i g},
///   coefficients (eps, 0) at offset 0 and (eps e^{i g}, 0) at offset 1.
/// On-site boson:    coefficient vector (eps, eps e^{-i g}) at offset 0.
///   The phase sign is fixed so that g in (0, pi) is the damped (stable)
///   side and g = pi/2 is the pure-loss channel with the vacuum as its dark
///   state; the brute-force master-equation oracle pins this choice.
pub fn preset_noise(kind: NoiseKind, eps: f64, g: f64) -> Result<LindbladStencil> {
    if eps < 0.0 {
        return Err(Error::InvalidArg(format!("noise amplitude eps must be >= 0, got {eps}")));
    }
    let _ = g; // bound on the ModelSpec; the stencil refers to it by name
    let mut ch = LindbladStencil::default();
    let eps_c = || Coupling::product(c(1.0, 0.0), &["eps"]);
    match kind {
        NoiseKind::OnSiteFermion => {
            ch.entries.insert(0, [eps_c(), eps_c().with_phase("g", 1.0)]);
        }
        NoiseKind::TwoSiteFermion => {
            ch.entries.insert(0, [eps_c(), Coupling::zero()]);
            ch.entries.insert(1, [eps_c().with_phase("g", 1.0), Coupling::zero()]);
        }
        NoiseKind::OnSiteBoson => {
            ch.entries.insert(0, [eps_c(), eps_c().with_phase("g", -1.0)]);
        }
    }
    Ok(ch)
}

/// Convenience constructor: preset model with noise attached and `eps`, `g`
/// bound.
pub fn preset_with_noise(
    base: ModelSpec,
    kind: NoiseKind,
    eps: f64,
    g: f64,
) -> Result<ModelSpec> {
    let ch = preset_noise(kind, eps, g)?;
    Ok(base.with_channel(ch, &[("eps", eps), ("g", g)]))
}

// ---------------------------------------------------------------------------
// External configuration format (JSON). Stencil entries in files are plain
// numbers; parameters stay available for CLI overrides of noise amplitudes
// bound through presets, but file-defined stencils are concrete.

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    statistics: Statistics,
    dimension: usize,
    hamiltonian: BTreeMap<String, ConfigBlock>,
    lindblads: Vec<BTreeMap<String, [f64; 4]>>,
    params: BTreeMap<String, f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigBlock {
    re: [[f64; 2]; 2],
    im: [[f64; 2]; 2],
}

fn parse_offset(key: &str) -> Result<i64> {
    key.parse::<i64>()
        .map_err(|_| Error::Config(format!("stencil offset `{key}` is not an integer")))
}

/// Parse a model from the JSON configuration format. Unknown fields are
/// rejected.
pub fn from_config_json(text: &str) -> Result<ModelSpec> {
    let cfg: ConfigFile = serde_json::from_str(text)?;
    let mut spec = ModelSpec::new(cfg.statistics);
    spec.dimension = cfg.dimension;
    spec.params = cfg.params;
    for (key, block) in &cfg.hamiltonian {
        let j = parse_offset(key)?;
        let mut coups: Vec<Coupling> = Vec::with_capacity(4);
        for r in 0..2 {
            for cl in 0..2 {
                coups.push(Coupling::constant(c(block.re[r][cl], block.im[r][cl])));
            }
        }
        spec.hamiltonian.entries.insert(
            j,
            CouplingBlock([coups[0].clone(), coups[1].clone(), coups[2].clone(), coups[3].clone()]),
        );
    }
    for ch in &cfg.lindblads {
        let mut stencil = LindbladStencil::default();
        for (key, v) in ch {
            let j = parse_offset(key)?;
            stencil
                .entries
                .insert(j, [Coupling::constant(c(v[0], v[1])), Coupling::constant(c(v[2], v[3]))]);
        }
        spec.lindblads.push(stencil);
    }
    Ok(spec)
}

/// Serialize a model to the JSON configuration format, evaluating coupling
/// expressions at the currently bound parameter values.
pub fn to_config_json(spec: &ModelSpec) -> Result<String> {
    let mut hamiltonian = BTreeMap::new();
    for (&j, block) in &spec.hamiltonian.entries {
        let m = block.eval(&spec.params)?;
        hamiltonian.insert(
            j.to_string(),
            ConfigBlock {
                re: [[m[(0, 0)].re, m[(0, 1)].re], [m[(1, 0)].re, m[(1, 1)].re]],
                im: [[m[(0, 0)].im, m[(0, 1)].im], [m[(1, 0)].im, m[(1, 1)].im]],
            },
        );
    }
    let mut lindblads = Vec::new();
    for ch in &spec.lindblads {
        let mut map = BTreeMap::new();
        for &j in ch.entries.keys() {
            let v = ch.eval_vec(j, &spec.params)?;
            map.insert(j.to_string(), [v[0].re, v[0].im, v[1].re, v[1].im]);
        }
        lindblads.push(map);
    }
    let cfg = ConfigFile {
        statistics: spec.statistics,
        dimension: spec.dimension,
        hamiltonian,
        lindblads,
        params: spec.params.clone(),
    };
    Ok(serde_json::to_string_pretty(&cfg)?)
}
