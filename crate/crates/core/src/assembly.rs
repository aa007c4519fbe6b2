//! Bilinear forms, load functionals and thermal operators on the P1 spaces.
//!
//! Coefficients are constant per element, so every gradient-gradient and
//! mass integral is exact. Load data go through a 3-point edge-midpoint rule
//! on triangles and 2-point Gauss on boundary edges.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::data::{zero_boundary, zero_volume, BoundaryFn, VolumeFn};
use crate::friction::FrictionLaw;
use crate::linalg::{CsrMatrix, TripletBuilder};
use crate::math::sqrt;
use crate::mesh::{ElecTag, MechTag, Mesh};
use crate::spaces::{
    assemble_stiffness, boundary_mass, build_space, contact_nodes, gram_matrix, isotropic, mass_matrix, ContactNodes,
    FeSpace, SpaceKind,
};
use crate::{Error, Result};

/// The three constrained spaces on one mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceSet {
    pub v: FeSpace,
    pub w: FeSpace,
    pub e: FeSpace,
}

impl SpaceSet {
    pub fn build(mesh: &Mesh) -> Result<Self> {
        Ok(SpaceSet {
            v: build_space(mesh, SpaceKind::V)?,
            w: build_space(mesh, SpaceKind::W)?,
            e: build_space(mesh, SpaceKind::E)?,
        })
    }
}

/// Per-element material coefficients plus the per-boundary-edge exchange
/// coefficient (only read on contact edges).
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialField {
    pub alpha: Vec<f64>,
    pub mu: Vec<f64>,
    pub e: Vec<f64>,
    pub beta: Vec<f64>,
    pub thermal_expansion: Vec<[f64; 2]>,
    pub conductivity: Vec<[[f64; 2]; 2]>,
    pub exchange: Vec<f64>,
}

/// Spatially uniform material constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformMaterial {
    pub alpha: f64,
    pub mu: f64,
    pub e: f64,
    pub beta: f64,
    pub thermal_expansion: [f64; 2],
    pub conductivity: [[f64; 2]; 2],
    pub exchange: f64,
}

impl Default for UniformMaterial {
    fn default() -> Self {
        UniformMaterial {
            alpha: 1.0,
            mu: 1.0,
            e: 0.0,
            beta: 1.0,
            thermal_expansion: [0.0, 0.0],
            conductivity: isotropic(1.0),
            exchange: 1.0,
        }
    }
}

/// Lower and upper bounds recorded from a validated material.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialBounds {
    /// `α*`
    pub alpha_min: f64,
    pub alpha_max: f64,
    /// `β*`
    pub beta_min: f64,
    /// Smallest conductivity eigenvalue `m_K`.
    pub conductivity_min: f64,
}

impl MaterialField {
    pub fn uniform(mesh: &Mesh, m: &UniformMaterial) -> Self {
        let nt = mesh.triangle_count();
        MaterialField {
            alpha: vec![m.alpha; nt],
            mu: vec![m.mu; nt],
            e: vec![m.e; nt],
            beta: vec![m.beta; nt],
            thermal_expansion: vec![m.thermal_expansion; nt],
            conductivity: vec![m.conductivity; nt],
            exchange: vec![m.exchange; mesh.boundary_edges().len()],
        }
    }

    /// Checks the coefficient assumptions and records the bounds.
    pub fn validate(&self, mesh: &Mesh) -> Result<MaterialBounds> {
        let nt = mesh.triangle_count();
        for (len, what) in [
            (self.alpha.len(), "alpha"),
            (self.mu.len(), "mu"),
            (self.e.len(), "e"),
            (self.beta.len(), "beta"),
            (self.thermal_expansion.len(), "thermal expansion"),
            (self.conductivity.len(), "conductivity"),
        ] {
            if len != nt {
                return Err(Error::invalid(format!("{what}: {len} values for {nt} elements")));
            }
        }
        if self.exchange.len() != mesh.boundary_edges().len() {
            return Err(Error::invalid("exchange coefficient needs one value per boundary edge"));
        }
        let fail = |name: &'static str, detail: alloc::string::String| Err(Error::Assumption { name, detail });
        let finite = self.alpha.iter().chain(&self.mu).chain(&self.e).chain(&self.beta).all(|v| v.is_finite())
            && self.thermal_expansion.iter().flatten().all(|v| v.is_finite())
            && self.conductivity.iter().flatten().flatten().all(|v| v.is_finite())
            && self.exchange.iter().all(|v| v.is_finite());
        if !finite {
            return fail("bounded coefficients", "non-finite coefficient".into());
        }
        let alpha_min = self.alpha.iter().copied().fold(f64::INFINITY, f64::min);
        let alpha_max = self.alpha.iter().copied().fold(0.0, f64::max);
        if !(alpha_min > 0.0) {
            return fail("viscosity bounded below by α* > 0", format!("min α = {alpha_min}"));
        }
        let beta_min = self.beta.iter().copied().fold(f64::INFINITY, f64::min);
        if !(beta_min > 0.0) {
            return fail("permittivity bounded below by β* > 0", format!("min β = {beta_min}"));
        }
        if let Some(k) = self.mu.iter().position(|m| !(*m > 0.0)) {
            return fail("positive shear modulus", format!("μ = {} on element {k}", self.mu[k]));
        }
        let mut conductivity_min = f64::INFINITY;
        for (k, c) in self.conductivity.iter().enumerate() {
            if c[0][1] != c[1][0] {
                return fail("symmetric conductivity", format!("element {k}"));
            }
            let tr = 0.5 * (c[0][0] + c[1][1]);
            let dif = 0.5 * (c[0][0] - c[1][1]);
            let lmin = tr - sqrt(dif * dif + c[0][1] * c[0][1]);
            if !(lmin > 0.0) {
                return fail("uniformly elliptic conductivity m_K > 0", format!("element {k}, min eigenvalue {lmin}"));
            }
            conductivity_min = conductivity_min.min(lmin);
        }
        for (ei, e) in mesh.boundary_edges().iter().enumerate() {
            if e.mech == MechTag::G3 && self.exchange[ei] < 0.0 {
                return fail("nonnegative exchange coefficient", format!("boundary edge {ei}"));
            }
        }
        Ok(MaterialBounds {
            alpha_min,
            alpha_max,
            beta_min,
            conductivity_min,
        })
    }
}

/// Time-dependent volume and boundary data.
#[derive(Clone)]
pub struct BoundaryData {
    /// Body force density.
    pub f0: VolumeFn,
    /// Traction on `G2`.
    pub f2: BoundaryFn,
    /// Prescribed traction on `G3`, replacing friction (manufactured cases only).
    pub f3: Option<BoundaryFn>,
    /// Volume free charge.
    pub q0: VolumeFn,
    /// Surface charge on `Gb`.
    pub q2: BoundaryFn,
    /// Heat source.
    pub p: VolumeFn,
    /// Reference (foundation) temperature on `G3`.
    pub theta_r: BoundaryFn,
}

impl BoundaryData {
    pub fn zero() -> Self {
        BoundaryData {
            f0: zero_volume(),
            f2: zero_boundary(),
            f3: None,
            q0: zero_volume(),
            q2: zero_boundary(),
            p: zero_volume(),
            theta_r: zero_boundary(),
        }
    }
}

impl core::fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("BoundaryData").field("f3", &self.f3.is_some()).finish_non_exhaustive()
    }
}

/// Constant matrices of the discrete problem, on free dofs.
#[derive(Debug, Clone)]
pub struct AssembledOperators {
    pub a_alpha: CsrMatrix,
    pub a_mu: CsrMatrix,
    pub a_beta: CsrMatrix,
    /// `∫ e ∇u·∇ψ`, rows in `W`, columns in `V`.
    pub a_e: CsrMatrix,
    /// The same form assembled with rows in `V`.
    pub a_e_vw: CsrMatrix,
    /// `-∫ θ M_e·∇v`, rows in `V`, columns in `E`.
    pub a_m: CsrMatrix,
    pub gram_v: CsrMatrix,
    pub gram_w: CsrMatrix,
    pub gram_e: CsrMatrix,
    /// L² mass on `E` (pivot space of the heat equation).
    pub mass_e: CsrMatrix,
    /// Conduction plus `G3` exchange.
    pub k_tilde: CsrMatrix,
    /// Volume part of `M̃`: `-∫ (M_e·∇v) μ`, rows in `E`, columns in `V`.
    pub mtilde_volume: CsrMatrix,
    /// Contact nodes of `V` with lumped weights.
    pub contact: ContactNodes,
    pub bounds: MaterialBounds,
}

/// `-∫_K (M_e·∇φ_b) φ_a` for test index `a` in `test` and trial `b` in `trial`.
fn assemble_expansion(mesh: &Mesh, mat: &MaterialField, test: &FeSpace, trial: &FeSpace, transpose: bool) -> CsrMatrix {
    let (nr, nc) = if transpose { (trial.dim(), test.dim()) } else { (test.dim(), trial.dim()) };
    let mut t = TripletBuilder::new(nr, nc);
    for k in 0..mesh.triangle_count() {
        let g = mesh.hat_gradients(k);
        let area = mesh.triangle_area(k);
        let me = mat.thermal_expansion[k];
        let tri = mesh.triangles()[k];
        for a in 0..3 {
            let Some(i) = test.dof(tri[a]) else { continue };
            for b in 0..3 {
                let Some(j) = trial.dof(tri[b]) else { continue };
                let v = -area / 3.0 * (me[0] * g[b][0] + me[1] * g[b][1]);
                if transpose {
                    t.push(j, i, v);
                } else {
                    t.push(i, j, v);
                }
            }
        }
    }
    t.build()
}

pub fn assemble_forms(mesh: &Mesh, spaces: &SpaceSet, mat: &MaterialField) -> Result<AssembledOperators> {
    let bounds = mat.validate(mesh)?;
    let (v, w, e) = (&spaces.v, &spaces.w, &spaces.e);
    let a_alpha = assemble_stiffness(mesh, v, v, |k| isotropic(mat.alpha[k]));
    let a_mu = assemble_stiffness(mesh, v, v, |k| isotropic(mat.mu[k]));
    let a_beta = assemble_stiffness(mesh, w, w, |k| isotropic(mat.beta[k]));
    let a_e = assemble_stiffness(mesh, w, v, |k| isotropic(mat.e[k]));
    let a_e_vw = assemble_stiffness(mesh, v, w, |k| isotropic(mat.e[k]));
    // a_M(θ, v) carries the gradient on the V function
    let a_m = assemble_expansion(mesh, mat, e, v, true);
    let conduction = assemble_stiffness(mesh, e, e, |k| mat.conductivity[k]);
    let exchange = boundary_mass(mesh, e, MechTag::G3, |ei| mat.exchange[ei]);
    let k_tilde = conduction.add_scaled(1.0, &exchange);
    let mtilde_volume = assemble_expansion(mesh, mat, e, v, false);
    Ok(AssembledOperators {
        a_alpha,
        a_mu,
        a_beta,
        a_e,
        a_e_vw,
        a_m,
        gram_v: gram_matrix(mesh, v),
        gram_w: gram_matrix(mesh, w),
        gram_e: gram_matrix(mesh, e),
        mass_e: mass_matrix(mesh, e),
        k_tilde,
        mtilde_volume,
        contact: contact_nodes(mesh, v),
        bounds,
    })
}

const GAUSS2: [f64; 2] = [0.211_324_865_405_187_1, 0.788_675_134_594_812_9];

/// `∫_K f φ_a` by the edge-midpoint rule, accumulated into `out`.
fn add_volume_load(mesh: &Mesh, space: &FeSpace, f: &VolumeFn, t: f64, out: &mut [f64]) {
    for k in 0..mesh.triangle_count() {
        let tri = mesh.triangles()[k];
        let v = mesh.triangle_vertices(k);
        let area = mesh.triangle_area(k);
        let mut local = [0.0; 3];
        for a in 0..3 {
            let b = (a + 1) % 3;
            let mid = [0.5 * (v[a][0] + v[b][0]), 0.5 * (v[a][1] + v[b][1])];
            let val = f(mid, t) * area / 3.0 * 0.5;
            local[a] += val;
            local[b] += val;
        }
        for a in 0..3 {
            if let Some(d) = space.dof(tri[a]) {
                out[d] += local[a];
            }
        }
    }
}

/// `∫_e g φ_a` by 2-point Gauss over boundary edges selected by `pick`.
fn add_boundary_load(
    mesh: &Mesh,
    space: &FeSpace,
    g: &BoundaryFn,
    t: f64,
    pick: impl Fn(usize) -> Option<f64>,
    out: &mut [f64],
) {
    for (ei, e) in mesh.boundary_edges().iter().enumerate() {
        let Some(scale) = pick(ei) else { continue };
        let l = mesh.edge_length(e);
        let n = mesh.outward_normal(e);
        let (p, q) = (mesh.nodes()[e.nodes[0]], mesh.nodes()[e.nodes[1]]);
        for s in GAUSS2 {
            let x = [p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])];
            let val = scale * g(x, n, t) * 0.5 * l;
            if let Some(d) = space.dof(e.nodes[0]) {
                out[d] += val * (1.0 - s);
            }
            if let Some(d) = space.dof(e.nodes[1]) {
                out[d] += val * s;
            }
        }
    }
}

fn on_mech(mesh: &Mesh, tag: MechTag) -> impl Fn(usize) -> Option<f64> + '_ {
    move |ei| (mesh.boundary_edges()[ei].mech == tag).then_some(1.0)
}

/// `∫ f0 v + ∫_{G2} f2 v` (plus the `G3` traction when prescribed).
pub fn assemble_load_f(mesh: &Mesh, space: &FeSpace, data: &BoundaryData, t: f64) -> Vec<f64> {
    let mut out = vec![0.0; space.dim()];
    add_volume_load(mesh, space, &data.f0, t, &mut out);
    add_boundary_load(mesh, space, &data.f2, t, on_mech(mesh, MechTag::G2), &mut out);
    if let Some(f3) = &data.f3 {
        add_boundary_load(mesh, space, f3, t, on_mech(mesh, MechTag::G3), &mut out);
    }
    out
}

/// `∫_{Gb} q2 ψ + ∫ q0 ψ`
pub fn assemble_load_q(mesh: &Mesh, space: &FeSpace, data: &BoundaryData, t: f64) -> Vec<f64> {
    let mut out = vec![0.0; space.dim()];
    add_volume_load(mesh, space, &data.q0, t, &mut out);
    let gb = |ei: usize| (mesh.boundary_edges()[ei].elec == Some(ElecTag::Gb)).then_some(1.0);
    add_boundary_load(mesh, space, &data.q2, t, gb, &mut out);
    out
}

/// `⟨P(t), μ⟩ = ∫ p μ + ∫_{G3} K_e θ_R μ`
pub fn assemble_thermal_source(mesh: &Mesh, space: &FeSpace, mat: &MaterialField, data: &BoundaryData, t: f64) -> Vec<f64> {
    let mut out = vec![0.0; space.dim()];
    add_volume_load(mesh, space, &data.p, t, &mut out);
    let exch = |ei: usize| (mesh.boundary_edges()[ei].mech == MechTag::G3).then(|| mat.exchange[ei]);
    add_boundary_load(mesh, space, &data.theta_r, t, exch, &mut out);
    out
}

/// `⟨M̃ v̇, μ⟩ = -∫ (M_e·∇v̇) μ + ∫_{G3} h_τ(|v̇|) μ`
pub fn apply_mtilde(
    mesh: &Mesh,
    e_space: &FeSpace,
    v_space: &FeSpace,
    mat: &MaterialField,
    law: &FrictionLaw,
    vdot: &[f64],
) -> Vec<f64> {
    let mut out = vec![0.0; e_space.dim()];
    let nodal = v_space.expand(vdot);
    for k in 0..mesh.triangle_count() {
        let g = mesh.hat_gradients(k);
        let tri = mesh.triangles()[k];
        let me = mat.thermal_expansion[k];
        let mut grad = [0.0; 2];
        for a in 0..3 {
            grad[0] += nodal[tri[a]] * g[a][0];
            grad[1] += nodal[tri[a]] * g[a][1];
        }
        let val = -(me[0] * grad[0] + me[1] * grad[1]) * mesh.triangle_area(k) / 3.0;
        for a in 0..3 {
            if let Some(d) = e_space.dof(tri[a]) {
                out[d] += val;
            }
        }
    }
    if law.heat.is_active() {
        for e in mesh.boundary_edges().iter().filter(|e| e.mech == MechTag::G3) {
            let l = mesh.edge_length(e);
            let (p, q) = (mesh.nodes()[e.nodes[0]], mesh.nodes()[e.nodes[1]]);
            let (va, vb) = (nodal[e.nodes[0]], nodal[e.nodes[1]]);
            for s in GAUSS2 {
                let x = [p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])];
                let speed = ((1.0 - s) * va + s * vb).abs();
                let val = law.heat_generation(x, speed) * 0.5 * l;
                if let Some(d) = e_space.dof(e.nodes[0]) {
                    out[d] += val * (1.0 - s);
                }
                if let Some(d) = e_space.dof(e.nodes[1]) {
                    out[d] += val * s;
                }
            }
        }
    }
    out
}
