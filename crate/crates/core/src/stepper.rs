//! Time stepping of the coupled displacement, potential and temperature.
//!
//! Each step solves the velocity inequality with the potential eliminated
//! exactly and the temperature lagged, then updates the potential and
//! advances the temperature by backward Euler.

use alloc::vec;
use alloc::vec::Vec;

use crate::assembly::{
    apply_mtilde, assemble_forms, assemble_load_f, assemble_load_q, assemble_thermal_source, AssembledOperators,
    BoundaryData, MaterialField, SpaceSet,
};
use crate::friction::FrictionLaw;
use crate::linalg::{symmetric_eigen, DenseCholesky, Definiteness, SkylineLdl, SymmetricEigen};
use crate::math::{dot, exp, expm1, sqrt};
use crate::mesh::Mesh;
use crate::spaces::{estimate_trace_constant, TraceOptions, TraceQuadrature};
use crate::vi_solver::{
    check_gate, solve_step, GateReport, LinearSolverOptions, Piezo, SolverOptions, StepOperators, StepProblem, ViSolution,
};
use crate::{Error, Result};

/// Uniform grid on `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t_final: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(t_final: f64, steps: usize) -> Result<Self> {
        if !(t_final > 0.0) || !t_final.is_finite() || steps == 0 {
            return Err(Error::invalid("time grid needs T > 0 and N >= 1"));
        }
        Ok(TimeGrid { t_final, steps })
    }

    pub fn dt(&self) -> f64 {
        self.t_final / self.steps as f64
    }

    pub fn time(&self, n: usize) -> f64 {
        self.t_final * n as f64 / self.steps as f64
    }
}

/// Nodal unknowns at one time level (free dofs only).
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub step: usize,
    pub t: f64,
    pub u: Vec<f64>,
    pub phi: Vec<f64>,
    pub theta: Vec<f64>,
    /// Velocity of the last step, zero initially.
    pub w: Vec<f64>,
}

/// Mesh, coefficients, data and the time-independent operators.
pub struct Model {
    pub mesh: Mesh,
    pub spaces: SpaceSet,
    pub material: MaterialField,
    pub data: BoundaryData,
    pub law: FrictionLaw,
    pub forms: AssembledOperators,
    /// Trace constant for the lumped contact quadrature.
    pub trace_constant: f64,
    potential: Piezo,
}

impl core::fmt::Debug for Model {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Model")
            .field("nodes", &self.mesh.node_count())
            .field("law", &self.law)
            .field("trace_constant", &self.trace_constant)
            .finish_non_exhaustive()
    }
}

impl Model {
    pub fn new(mesh: Mesh, material: MaterialField, data: BoundaryData, law: FrictionLaw) -> Result<Self> {
        let spaces = SpaceSet::build(&mesh)?;
        let forms = assemble_forms(&mesh, &spaces, &material)?;
        let opts = TraceOptions {
            quadrature: TraceQuadrature::Lumped,
            ..Default::default()
        };
        let trace_constant = estimate_trace_constant(&mesh, &spaces.v, &opts)?.value;
        let potential = Piezo::new(forms.a_e.clone(), forms.a_beta.clone())?;
        Ok(Model {
            mesh,
            spaces,
            material,
            data,
            law,
            forms,
            trace_constant,
            potential,
        })
    }

    pub fn alpha_min(&self) -> f64 {
        self.forms.bounds.alpha_min
    }

    pub fn gate(&self) -> GateReport {
        crate::vi_solver::gate(self.alpha_min(), self.trace_constant, self.law.lipschitz())
    }

    pub fn has_piezo(&self) -> bool {
        self.forms.a_e.max_abs() > 0.0
    }

    pub fn norm_v(&self, x: &[f64]) -> f64 {
        sqrt(self.forms.gram_v.quad_form(x).max(0.0))
    }

    pub fn norm_w(&self, x: &[f64]) -> f64 {
        sqrt(self.forms.gram_w.quad_form(x).max(0.0))
    }

    pub fn norm_e(&self, x: &[f64]) -> f64 {
        sqrt(self.forms.gram_e.quad_form(x).max(0.0))
    }

    pub fn load_f(&self, t: f64) -> Vec<f64> {
        assemble_load_f(&self.mesh, &self.spaces.v, &self.data, t)
    }

    pub fn load_q(&self, t: f64) -> Vec<f64> {
        assemble_load_q(&self.mesh, &self.spaces.w, &self.data, t)
    }

    pub fn thermal_source(&self, t: f64) -> Vec<f64> {
        assemble_thermal_source(&self.mesh, &self.spaces.e, &self.material, &self.data, t)
    }

    pub fn mtilde(&self, w: &[f64]) -> Vec<f64> {
        apply_mtilde(&self.mesh, &self.spaces.e, &self.spaces.v, &self.material, &self.law, w)
    }
}

/// `A_β φ = A_e u + q(t)`
pub fn solve_potential(model: &Model, u: &[f64], t: f64) -> Result<Vec<f64>> {
    Error::check_len(model.spaces.v.dim(), u.len())?;
    let mut rhs = model.forms.a_e.mul_vec(u);
    for (r, q) in rhs.iter_mut().zip(model.load_q(t)) {
        *r += q;
    }
    Ok(model.potential.beta_solve(&rhs))
}

/// `‖A_β φ - A_e u - q(t)‖_∞`
pub fn potential_residual(model: &Model, u: &[f64], phi: &[f64], t: f64) -> f64 {
    let mut r = model.forms.a_beta.mul_vec(phi);
    let au = model.forms.a_e.mul_vec(u);
    let q = model.load_q(t);
    for i in 0..r.len() {
        r[i] -= au[i] + q[i];
    }
    crate::math::norm_inf(&r)
}

/// State at `t = 0`. The potential is computed from `u0`, never taken as input.
pub fn initialize(model: &Model, u0: &[f64], theta0: &[f64]) -> Result<SystemState> {
    Error::check_len(model.spaces.v.dim(), u0.len())?;
    Error::check_len(model.spaces.e.dim(), theta0.len())?;
    if u0.iter().chain(theta0).any(|x| !x.is_finite()) {
        return Err(Error::invalid("initial fields must be finite"));
    }
    let phi = solve_potential(model, u0, 0.0)?;
    Ok(SystemState {
        step: 0,
        t: 0.0,
        u: u0.to_vec(),
        phi,
        theta: theta0.to_vec(),
        w: vec![0.0; u0.len()],
    })
}

/// `‖φ0 - φ(u0)‖_W` for a user-supplied initial potential.
pub fn initial_potential_mismatch(model: &Model, state: &SystemState, phi0: &[f64]) -> Result<f64> {
    Error::check_len(state.phi.len(), phi0.len())?;
    Ok(model.norm_w(&crate::math::sub(phi0, &state.phi)))
}

/// How the temperature enters the velocity problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThetaCoupling {
    /// `θ_n` inside the step.
    Lagged,
    /// Fixed point between the velocity problem and the temperature step.
    Iterate { tol: f64, max_iter: usize },
}

/// Per-step diagnostics, in output column order.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    pub outer_iterations: usize,
    pub newton_iterations: usize,
    pub vi_residual: f64,
    pub norm_w: f64,
    pub norm_u: f64,
    pub norm_phi: f64,
    pub norm_theta: f64,
    pub stick: usize,
    pub slip: usize,
    /// Largest contact traction density `|λ_i| / w_i`.
    pub max_traction: f64,
    pub gate_margin: f64,
}

/// Everything fixed for a given time grid.
pub struct Stepper<'m> {
    pub model: &'m Model,
    pub grid: TimeGrid,
    pub ops: StepOperators,
    pub options: SolverOptions,
    pub coupling: ThetaCoupling,
    thermal: SkylineLdl,
}

impl core::fmt::Debug for Stepper<'_> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Stepper").field("grid", &self.grid).finish_non_exhaustive()
    }
}

impl<'m> Stepper<'m> {
    pub fn new(
        model: &'m Model,
        grid: TimeGrid,
        options: SolverOptions,
        coupling: ThetaCoupling,
        linear: LinearSolverOptions,
    ) -> Result<Self> {
        options.validate()?;
        let f = &model.forms;
        let dt = grid.dt();
        let piezo = if model.has_piezo() {
            Some(Piezo::new(f.a_e.clone(), f.a_beta.clone())?)
        } else {
            None
        };
        let ops = StepOperators::new(
            f.a_alpha.clone(),
            f.a_mu.clone(),
            piezo,
            dt,
            f.gram_v.clone(),
            f.contact.clone(),
            model.alpha_min(),
            model.trace_constant,
        )?
        .with_linear_solver(linear);
        let thermal = SkylineLdl::factor(&f.mass_e.add_scaled(dt, &f.k_tilde), Definiteness::Positive)?;
        Ok(Stepper {
            model,
            grid,
            ops,
            options,
            coupling,
            thermal,
        })
    }

    pub fn gate(&self) -> GateReport {
        check_gate(&self.ops, self.model.law.lipschitz())
    }

    /// `F = f(t) - A_eᵀ A_β⁻¹ q(t) - A_M θ`
    pub fn step_rhs(&self, t_next: f64, theta: &[f64]) -> Vec<f64> {
        let m = self.model;
        let mut rhs = m.load_f(t_next);
        if self.ops.piezo().is_some() {
            let q = m.load_q(t_next);
            let back = m.forms.a_e.transpose().mul_vec(&m.potential.beta_solve(&q));
            for (r, b) in rhs.iter_mut().zip(&back) {
                *r -= b;
            }
        }
        let am = m.forms.a_m.mul_vec(theta);
        for (r, a) in rhs.iter_mut().zip(&am) {
            *r -= a;
        }
        rhs
    }

    pub fn build_step_problem(&self, state: &SystemState, theta: &[f64]) -> Result<StepProblem<'_>> {
        let t_next = self.grid.time(state.step + 1);
        StepProblem::new(&self.ops, state.u.clone(), self.step_rhs(t_next, theta))
    }

    /// `(M + Δt K̃) θ_{n+1} = M θ_n + Δt (M̃ w + P(t_{n+1}))`
    pub fn step_temperature_be(&self, theta_n: &[f64], w: &[f64], t_next: f64) -> Vec<f64> {
        let m = self.model;
        let dt = self.grid.dt();
        let mut rhs = m.forms.mass_e.mul_vec(theta_n);
        let src = m.mtilde(w);
        let p = m.thermal_source(t_next);
        for i in 0..rhs.len() {
            rhs[i] += dt * (src[i] + p[i]);
        }
        self.thermal.solve(&rhs)
    }

    /// One time step.
    pub fn advance(&self, state: &SystemState) -> Result<(SystemState, StepRecord, ViSolution)> {
        let wrap = |e: Error| Error::Step {
            step: state.step + 1,
            source: alloc::boxed::Box::new(e),
        };
        let m = self.model;
        let dt = self.grid.dt();
        let t_next = self.grid.time(state.step + 1);
        let mut theta_guess = state.theta.clone();
        let (sol, theta_next) = loop_coupling(self, state, &mut theta_guess, t_next).map_err(wrap)?;
        let u: Vec<f64> = state.u.iter().zip(&sol.w).map(|(u, w)| u + dt * w).collect();
        let phi = solve_potential(m, &u, t_next).map_err(wrap)?;
        let contact = self.ops.contact();
        let max_traction = sol
            .contact_traction
            .iter()
            .zip(&contact.weights)
            .map(|(l, w)| if *w > 0.0 { l.abs() / w } else { 0.0 })
            .fold(0.0, f64::max);
        let record = StepRecord {
            step: state.step + 1,
            t: t_next,
            outer_iterations: sol.outer_iterations,
            newton_iterations: sol.total_newton,
            vi_residual: sol.kkt_residual,
            norm_w: m.norm_v(&sol.w),
            norm_u: m.norm_v(&u),
            norm_phi: m.norm_w(&phi),
            norm_theta: m.norm_e(&theta_next),
            stick: sol.stick,
            slip: sol.slip,
            max_traction,
            gate_margin: self.gate().margin,
        };
        let next = SystemState {
            step: state.step + 1,
            t: t_next,
            u,
            phi,
            theta: theta_next,
            w: sol.w.clone(),
        };
        Ok((next, record, sol))
    }

    /// Runs all steps from `state`, calling `observe` after each one.
    pub fn run(
        &self,
        mut state: SystemState,
        mut observe: impl FnMut(&SystemState, &StepRecord) -> bool,
    ) -> Result<SystemState> {
        while state.step < self.grid.steps {
            let (next, rec, _) = self.advance(&state)?;
            state = next;
            if !observe(&state, &rec) {
                break;
            }
        }
        Ok(state)
    }
}

fn loop_coupling(
    stepper: &Stepper<'_>,
    state: &SystemState,
    theta_guess: &mut Vec<f64>,
    t_next: f64,
) -> Result<(ViSolution, Vec<f64>)> {
    let m = stepper.model;
    let (tol, max_iter) = match stepper.coupling {
        ThetaCoupling::Lagged => (0.0, 1),
        ThetaCoupling::Iterate { tol, max_iter } => (tol, max_iter.max(1)),
    };
    let mut w_init = state.w.clone();
    let mut last = 0.0;
    for _ in 0..max_iter {
        let problem = stepper.build_step_problem(state, theta_guess)?;
        let sol = solve_step(&problem, &m.law, &w_init, &stepper.options)?;
        let theta = stepper.step_temperature_be(&state.theta, &sol.w, t_next);
        if stepper.coupling == ThetaCoupling::Lagged {
            return Ok((sol, theta));
        }
        last = m.norm_e(&crate::math::sub(&theta, theta_guess));
        let done = last <= tol * m.norm_e(&theta).max(1.0);
        *theta_guess = theta;
        w_init.clone_from(&sol.w);
        if done {
            let theta = theta_guess.clone();
            return Ok((sol, theta));
        }
    }
    Err(Error::NoConvergence {
        what: "temperature coupling loop",
        iterations: max_iter,
        residual: last,
    })
}

/// `exp(-t M⁻¹K̃)` through the generalized eigenproblem `K̃ x = λ M x`.
#[derive(Debug, Clone)]
pub struct ThermalExponential {
    chol: DenseCholesky,
    eig: SymmetricEigen,
}

impl ThermalExponential {
    pub fn new(model: &Model, dense_limit: usize) -> Result<Self> {
        let n = model.spaces.e.dim();
        if n > dense_limit {
            return Err(Error::SizeLimit {
                size: n,
                limit: dense_limit,
            });
        }
        let chol = DenseCholesky::factor(&model.forms.mass_e.to_dense())?;
        let k = model.forms.k_tilde.to_dense();
        let mut half = crate::linalg::DenseMatrix::zeros(n, n);
        for j in 0..n {
            let col = chol.solve_lower(&k.column(j));
            for i in 0..n {
                half[(i, j)] = col[i];
            }
        }
        let mut c = crate::linalg::DenseMatrix::zeros(n, n);
        for i in 0..n {
            let row = chol.solve_lower(half.row(i));
            for j in 0..n {
                c[(i, j)] = row[j];
            }
        }
        for i in 0..n {
            for j in 0..i {
                let avg = 0.5 * (c[(i, j)] + c[(j, i)]);
                c[(i, j)] = avg;
                c[(j, i)] = avg;
            }
        }
        let eig = symmetric_eigen(&c)?;
        Ok(ThermalExponential { chol, eig })
    }

    /// Generalized eigenvalues, ascending.
    pub fn rates(&self) -> &[f64] {
        &self.eig.values
    }

    /// `L⁻ᵀ Q e^{-tΛ} Qᵀ y`
    fn back(&self, mut z: Vec<f64>, t: f64) -> Vec<f64> {
        let n = z.len();
        for (zi, l) in z.iter_mut().zip(&self.eig.values) {
            *zi *= exp(-t * l);
        }
        let mut y = vec![0.0; n];
        for i in 0..n {
            y[i] = (0..n).map(|k| self.eig.vectors[(i, k)] * z[k]).sum();
        }
        self.chol.solve_upper(&y)
    }

    fn project(&self, y: &[f64]) -> Vec<f64> {
        let n = y.len();
        (0..n).map(|k| (0..n).map(|i| self.eig.vectors[(i, k)] * y[i]).sum()).collect()
    }

    /// `exp(-t M⁻¹K̃) θ`
    pub fn propagate(&self, theta: &[f64], t: f64) -> Vec<f64> {
        let l = self.chol.lower();
        let n = theta.len();
        // Lᵀ θ
        let y: Vec<f64> = (0..n).map(|i| (i..n).map(|j| l[(j, i)] * theta[j]).sum()).collect();
        self.back(self.project(&y), t)
    }

    /// `exp(-t M⁻¹K̃) M⁻¹ g`
    pub fn propagate_load(&self, g: &[f64], t: f64) -> Vec<f64> {
        let y = self.chol.solve_lower(g);
        self.back(self.project(&y), t)
    }

    /// `∫_a^{a+len} exp(-s M⁻¹K̃) ds M⁻¹ g`
    pub fn integrate_load(&self, g: &[f64], a: f64, len: f64) -> Vec<f64> {
        let y = self.chol.solve_lower(g);
        let mut z = self.project(&y);
        for (zi, l) in z.iter_mut().zip(&self.eig.values) {
            let x = len * l;
            let w = if x.abs() < 1e-12 { len } else { -expm1(-x) / l };
            *zi *= w;
        }
        self.back(z, a)
    }
}

/// Variation-of-constants temperature at `t_m` from the velocity history:
/// `w_history[k]` is the velocity on `(t_k, t_{k+1}]`. Each slab freezes the
/// source at `P(t_k)` plus the slab velocity and integrates the kernel
/// exactly.
pub fn step_temperature_expkernel(
    model: &Model,
    kernel: &ThermalExponential,
    grid: &TimeGrid,
    w_history: &[Vec<f64>],
    theta0: &[f64],
) -> Result<Vec<f64>> {
    if w_history.len() > grid.steps {
        return Err(Error::invalid("velocity history longer than the time grid"));
    }
    let dt = grid.dt();
    let m = w_history.len();
    let t_m = grid.time(m);
    let mut theta = kernel.propagate(theta0, t_m);
    for (k, w) in w_history.iter().enumerate() {
        let mut g = model.mtilde(w);
        let p = model.thermal_source(grid.time(k));
        for (gi, pi) in g.iter_mut().zip(&p) {
            *gi += pi;
        }
        let contrib = kernel.integrate_load(&g, t_m - grid.time(k + 1), dt);
        for (a, b) in theta.iter_mut().zip(&contrib) {
            *a += b;
        }
    }
    Ok(theta)
}

/// `‖θ‖²` in the L² mass of `E`.
pub fn mass_norm_sq(model: &Model, theta: &[f64]) -> f64 {
    dot(theta, &model.forms.mass_e.mul_vec(theta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::UniformMaterial;
    use crate::data::DataFamily;
    use crate::friction::{FrictionBound, HeatGeneration};
    use crate::mesh::{generate_rect_mesh, MechTag, ElecTag, SideTag, TaggingRule};
    use alloc::sync::Arc;

    fn model_with(n: usize, mat: UniformMaterial, data: BoundaryData, law: FrictionLaw, tags: &TaggingRule) -> Model {
        let mesh = generate_rect_mesh(1.0, 1.0, n, n, tags).unwrap();
        let material = MaterialField::uniform(&mesh, &mat);
        Model::new(mesh, material, data, law).unwrap()
    }

    fn default_model(n: usize, mat: UniformMaterial, data: BoundaryData) -> Model {
        model_with(n, mat, data, FrictionLaw::tresca(0.5).unwrap(), &TaggingRule::standard())
    }

    /// `G1` exactly on `Ga` (top), all other non-contact sides `G2`/`Gb`.
    fn aligned() -> TaggingRule {
        TaggingRule::standard()
    }

    fn stepper<'m>(model: &'m Model, t: f64, n: usize) -> Stepper<'m> {
        Stepper::new(
            model,
            TimeGrid::new(t, n).unwrap(),
            SolverOptions::default(),
            ThetaCoupling::Lagged,
            LinearSolverOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn time_grid() {
        assert!(TimeGrid::new(0.0, 3).is_err());
        assert!(TimeGrid::new(1.0, 0).is_err());
        let g = TimeGrid::new(2.0, 4).unwrap();
        assert_eq!(g.dt(), 0.5);
        assert_eq!(g.time(4), 2.0);
    }

    #[test]
    fn initialize_examples() {
        let m = default_model(4, UniformMaterial { e: 0.7, beta: 2.0, ..Default::default() }, BoundaryData::zero());
        let v = &m.spaces.v;
        let s = initialize(&m, &vec![0.0; v.dim()], &vec![0.0; m.spaces.e.dim()]).unwrap();
        assert!(s.phi.iter().all(|x| *x == 0.0));

        let u0 = v.interpolate(&m.mesh, |p| (1.0 - p[1]) * (0.5 + p[0] * p[0]));
        let th0: Vec<f64> = (0..m.spaces.e.dim()).map(|i| i as f64 * 0.1).collect();
        let s = initialize(&m, &u0, &th0).unwrap();
        assert_eq!(s.theta, th0);
        // φ = (e/β) u on the shared dofs
        let nodal_u = v.expand(&u0);
        let nodal_phi = m.spaces.w.expand(&s.phi);
        let scale = nodal_u.iter().map(|x| x.abs()).fold(0.0, f64::max);
        for i in 0..m.mesh.node_count() {
            assert!((nodal_phi[i] - 0.35 * nodal_u[i]).abs() <= 1e-10 * scale);
        }
        let mis = initial_potential_mismatch(&m, &s, &s.phi).unwrap();
        assert_eq!(mis, 0.0);
    }

    #[test]
    fn potential_linear_in_charge() {
        let mut data = BoundaryData::zero();
        data.q0 = DataFamily::Constant(1.0).volume();
        data.q2 = DataFamily::Constant(0.5).boundary();
        let m = default_model(4, UniformMaterial { e: 1.0, beta: 1.0, ..Default::default() }, data.clone());
        let u = m.spaces.v.interpolate(&m.mesh, |p| (1.0 - p[1]) * p[0]);
        let base = default_model(4, UniformMaterial { e: 1.0, ..Default::default() }, BoundaryData::zero());
        let phi_u = solve_potential(&base, &u, 0.0).unwrap();
        let phi1 = solve_potential(&m, &u, 0.0).unwrap();
        let mut data2 = data;
        data2.q0 = DataFamily::Constant(2.0).volume();
        data2.q2 = DataFamily::Constant(1.0).boundary();
        let m2 = default_model(4, UniformMaterial { e: 1.0, ..Default::default() }, data2);
        let phi2 = solve_potential(&m2, &u, 0.0).unwrap();
        for i in 0..phi1.len() {
            assert!(((phi2[i] - phi_u[i]) - 2.0 * (phi1[i] - phi_u[i])).abs() < 1e-12);
        }
        // e = β: φ = u
        let nodal_u = m.spaces.v.expand(&u);
        let nodal_phi = m.spaces.w.expand(&phi_u);
        for i in 0..nodal_u.len() {
            assert!((nodal_u[i] - nodal_phi[i]).abs() < 1e-12);
        }
        assert!(potential_residual(&m, &u, &phi1, 0.0) < 1e-12);
    }

    #[test]
    fn step_problem_limits() {
        let m = default_model(3, UniformMaterial { e: 0.5, ..Default::default() }, BoundaryData::zero());
        let s = Stepper::new(&m, TimeGrid::new(1e-12, 1).unwrap(), SolverOptions::default(), ThetaCoupling::Lagged, LinearSolverOptions::default()).unwrap();
        let x: Vec<f64> = (0..m.spaces.v.dim()).map(|i| (i as f64).sin()).collect();
        let y = s.ops.apply_step_matrix(&x);
        let z = m.forms.a_alpha.mul_vec(&x);
        for i in 0..x.len() {
            assert!((y[i] - z[i]).abs() < 1e-10);
        }
        let m0 = default_model(3, UniformMaterial::default(), BoundaryData::zero());
        let s0 = stepper(&m0, 1.0, 4);
        assert!(s0.ops.piezo().is_none());
        let a = s0.ops.apply_effective(&x);
        assert_eq!(a, m0.forms.a_mu.mul_vec(&x));
    }

    #[test]
    fn frictionless_backward_euler_surrogate() {
        // 4 free dofs: a 2x1 strip clamped on the left.
        let tags = TaggingRule {
            bottom: SideTag::new(MechTag::G3, None),
            right: SideTag::new(MechTag::G2, Some(ElecTag::Gb)),
            top: SideTag::new(MechTag::G3, None),
            left: SideTag::new(MechTag::G1, Some(ElecTag::Ga)),
        };
        let mut data = BoundaryData::zero();
        data.f0 = DataFamily::Constant(1.0).volume();
        let mesh = generate_rect_mesh(2.0, 1.0, 2, 1, &tags).unwrap();
        let mat = MaterialField::uniform(&mesh, &UniformMaterial { alpha: 0.5, mu: 2.0, ..Default::default() });
        let m = Model::new(mesh, mat, data, FrictionLaw::tresca(0.0).unwrap()).unwrap();
        let v = &m.spaces.v;
        assert_eq!(v.dim(), 4);
        let s = stepper(&m, 0.4, 2);
        let u0: Vec<f64> = vec![0.1, -0.2, 0.3, 0.05];
        let st = initialize(&m, &u0, &vec![0.0; m.spaces.e.dim()]).unwrap();
        let (next, _, _) = s.advance(&st).unwrap();
        // hand-assembled dense system
        let dt = 0.2;
        let h = m.forms.a_alpha.to_dense();
        let k = m.forms.a_mu.to_dense();
        let mut sys = h.clone();
        for i in 0..4 {
            for j in 0..4 {
                sys[(i, j)] += dt * k[(i, j)];
            }
        }
        let f = m.load_f(dt);
        let ku = k.mul_vec(&u0);
        let rhs: Vec<f64> = (0..4).map(|i| f[i] - ku[i]).collect();
        let w = DenseCholesky::factor(&sys).unwrap().solve(&rhs);
        for i in 0..4 {
            assert!((next.w[i] - w[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_state_stays_zero() {
        let m = default_model(4, UniformMaterial { e: 0.3, thermal_expansion: [0.2, 0.1], ..Default::default() }, BoundaryData::zero());
        let s = stepper(&m, 1.0, 5);
        let st = initialize(&m, &vec![0.0; m.spaces.v.dim()], &vec![0.0; m.spaces.e.dim()]).unwrap();
        let end = s
            .run(st, |state, rec| {
                assert!(state.u.iter().chain(&state.phi).chain(&state.theta).all(|x| *x == 0.0));
                assert_eq!(rec.norm_w, 0.0);
                true
            })
            .unwrap();
        assert_eq!(end.step, 5);
    }

    #[test]
    fn large_tresca_bound_sticks() {
        let mut data = BoundaryData::zero();
        data.f2 = DataFamily::Constant(0.5).boundary();
        // frictionless traction first, then a bound well above it
        let free = model_with(6, UniformMaterial::default(), data.clone(), FrictionLaw::tresca(0.0).unwrap(), &aligned());
        let s = stepper(&free, 1.0, 3);
        let st = initialize(&free, &vec![0.0; free.spaces.v.dim()], &vec![0.0; free.spaces.e.dim()]).unwrap();
        let (_, _, sol) = s.advance(&st).unwrap();
        let p = s.build_step_problem(&st, &st.theta).unwrap();
        let grad = p.smooth_gradient(&vec![0.0; free.spaces.v.dim()]);
        let c = &free.forms.contact;
        let need = c.dofs.iter().enumerate().map(|(k, &d)| grad[d].abs() / c.weights[k]).fold(0.0, f64::max);
        assert!(sol.slip > 0);
        let stuck = model_with(6, UniformMaterial::default(), data, FrictionLaw::tresca(2.0 * need + 1.0).unwrap(), &aligned());
        let s = stepper(&stuck, 1.0, 3);
        let st = initialize(&stuck, &vec![0.0; stuck.spaces.v.dim()], &vec![0.0; stuck.spaces.e.dim()]).unwrap();
        s.run(st, |state, rec| {
            assert_eq!(rec.slip, 0);
            assert!(c.dofs.iter().all(|&d| state.w[d].abs() <= 1e-10));
            true
        })
        .unwrap();
    }

    #[test]
    fn scalar_temperature_surrogates() {
        // one free E dof: the 2x2 square's E space has the bottom-middle and centre nodes
        let mut data = BoundaryData::zero();
        data.p = DataFamily::Constant(1.0).volume();
        let m = default_model(2, UniformMaterial { exchange: 0.0, ..Default::default() }, data);
        assert_eq!(m.spaces.e.dim(), 2);
        let s = stepper(&m, 0.5, 1);
        let th0 = vec![0.3, -0.1];
        let w = vec![0.0; m.spaces.v.dim()];
        let th1 = s.step_temperature_be(&th0, &w, 0.5);
        // independent dense solve
        let mut a = m.forms.mass_e.to_dense();
        let k = m.forms.k_tilde.to_dense();
        for i in 0..2 {
            for j in 0..2 {
                a[(i, j)] += 0.5 * k[(i, j)];
            }
        }
        let mut rhs = m.forms.mass_e.mul_vec(&th0);
        let p = m.thermal_source(0.5);
        for i in 0..2 {
            rhs[i] += 0.5 * p[i];
        }
        let want = DenseCholesky::factor(&a).unwrap().solve(&rhs);
        for i in 0..2 {
            assert!((th1[i] - want[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn temperature_dissipates_without_sources() {
        let m = default_model(5, UniformMaterial::default(), BoundaryData::zero());
        let s = stepper(&m, 1.0, 10);
        let mut th: Vec<f64> = (0..m.spaces.e.dim()).map(|i| ((i * 7) % 5) as f64 - 2.0).collect();
        let w = vec![0.0; m.spaces.v.dim()];
        for _ in 0..10 {
            let next = s.step_temperature_be(&th, &w, 0.0);
            assert!(mass_norm_sq(&m, &next) <= mass_norm_sq(&m, &th));
            th = next;
        }
    }

    #[test]
    fn robin_equilibrium() {
        let mut data = BoundaryData::zero();
        data.theta_r = DataFamily::Constant(2.0).boundary();
        let m = default_model(4, UniformMaterial { exchange: 3.0, ..Default::default() }, data);
        let s = stepper(&m, 40.0, 400);
        let mut th = vec![0.0; m.spaces.e.dim()];
        let w = vec![0.0; m.spaces.v.dim()];
        for n in 1..=400 {
            th = s.step_temperature_be(&th, &w, s.grid.time(n));
        }
        let steady = DenseCholesky::factor(&m.forms.k_tilde.to_dense()).unwrap().solve(&m.thermal_source(0.0));
        let err = crate::math::norm_inf(&crate::math::sub(&th, &steady));
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn expkernel_examples() {
        let mut data = BoundaryData::zero();
        data.p = DataFamily::Ramp(1.0).volume();
        let m = default_model(3, UniformMaterial::default(), data);
        let grid = TimeGrid::new(1.0, 8).unwrap();
        let kern = ThermalExponential::new(&m, 500).unwrap();
        assert!(kern.rates()[0] > 0.0);
        let th0: Vec<f64> = (0..m.spaces.e.dim()).map(|i| 0.1 * i as f64).collect();
        // propagate is a semigroup
        let a = kern.propagate(&kern.propagate(&th0, 0.3), 0.2);
        let b = kern.propagate(&th0, 0.5);
        for i in 0..a.len() {
            assert!((a[i] - b[i]).abs() < 1e-12);
        }
        let hist = vec![vec![0.0; m.spaces.v.dim()]; 8];
        let th = step_temperature_expkernel(&m, &kern, &grid, &hist, &th0).unwrap();
        assert!(th.iter().all(|x| x.is_finite()));
        let big = default_model(24, UniformMaterial::default(), BoundaryData::zero());
        assert!(matches!(ThermalExponential::new(&big, 500), Err(Error::SizeLimit { .. })));
    }

    #[test]
    fn scalar_expkernel_matches_closed_form() {
        // E space with a single free dof on the 2x1 strip
        let tags = TaggingRule {
            bottom: SideTag::new(MechTag::G3, None),
            right: SideTag::new(MechTag::G2, Some(ElecTag::Gb)),
            top: SideTag::new(MechTag::G1, Some(ElecTag::Ga)),
            left: SideTag::new(MechTag::G2, Some(ElecTag::Gb)),
        };
        let mut data = BoundaryData::zero();
        data.p = Arc::new(|_, t| 1.0 + t);
        let mesh = generate_rect_mesh(1.0, 1.0, 2, 1, &tags).unwrap();
        let mat = MaterialField::uniform(&mesh, &UniformMaterial::default());
        let m = Model::new(mesh, mat, data, FrictionLaw::tresca(0.0).unwrap()).unwrap();
        assert_eq!(m.spaces.e.dim(), 1);
        let mass = m.forms.mass_e.get(0, 0);
        let k = m.forms.k_tilde.get(0, 0) / mass;
        let p0 = m.thermal_source(0.0)[0] / mass; // P(t) = p0 (1 + t)
        let kern = ThermalExponential::new(&m, 500).unwrap();
        assert!((kern.rates()[0] - k).abs() < 1e-12 * k);
        let theta0 = 0.7;
        let exact = |t: f64| {
            theta0 * exp(-k * t) + p0 * ((1.0 - exp(-k * t)) / k + (t / k - (1.0 - exp(-k * t)) / (k * k)))
        };
        let mut errs = Vec::new();
        for steps in [128, 256, 512] {
            let grid = TimeGrid::new(1.0, steps).unwrap();
            let hist = vec![vec![0.0; m.spaces.v.dim()]; steps];
            let th = step_temperature_expkernel(&m, &kern, &grid, &hist, &[theta0]).unwrap();
            errs.push((th[0] - exact(1.0)).abs());
        }
        // left-endpoint quadrature: first order
        assert!(errs[0] / errs[1] > 1.8 && errs[1] / errs[2] > 1.8, "{errs:?}");
    }

    fn smooth_model() -> Model {
        let mut data = BoundaryData::zero();
        data.f2 = DataFamily::Ramp(0.6).boundary();
        data.p = DataFamily::Constant(0.2).volume();
        data.theta_r = DataFamily::Constant(0.1).boundary();
        let mat = UniformMaterial { e: 0.3, thermal_expansion: [0.5, 0.2], ..UniformMaterial::default() };
        let law = FrictionLaw::new(FrictionBound::AffineSaturating { a: 0.3, b: 0.2 }, HeatGeneration::FrictionalPower).unwrap();
        model_with(4, mat, data, law, &aligned())
    }

    fn final_state(model: &Model, steps: usize, coupling: ThetaCoupling) -> SystemState {
        let s = Stepper::new(
            model,
            TimeGrid::new(1.0, steps).unwrap(),
            SolverOptions::default(),
            coupling,
            LinearSolverOptions::default(),
        )
        .unwrap();
        let st = initialize(model, &vec![0.0; model.spaces.v.dim()], &vec![0.0; model.spaces.e.dim()]).unwrap();
        s.run(st, |_, _| true).unwrap()
    }

    #[test]
    fn temporal_self_convergence() {
        let m = smooth_model();
        let u: Vec<_> = [8, 16, 32].iter().map(|&n| final_state(&m, n, ThetaCoupling::Lagged).u).collect();
        let d1 = m.norm_v(&crate::math::sub(&u[0], &u[1]));
        let d2 = m.norm_v(&crate::math::sub(&u[1], &u[2]));
        assert!(d2 > 0.0);
        let order = crate::math::ln(d1 / d2) / crate::math::ln(2.0);
        assert!(order >= 0.9, "order {order}, {d1:e} {d2:e}");
    }

    #[test]
    fn iterated_coupling_is_consistent() {
        let m = smooth_model();
        let it = ThetaCoupling::Iterate { tol: 1e-12, max_iter: 50 };
        let gaps: Vec<f64> = [8, 16]
            .iter()
            .map(|&n| {
                let a = final_state(&m, n, ThetaCoupling::Lagged);
                let b = final_state(&m, n, it);
                assert!(b.u.iter().all(|x| x.is_finite()));
                m.norm_v(&crate::math::sub(&a.u, &b.u))
            })
            .collect();
        // lagging theta is an O(dt) perturbation
        assert!(gaps[1] < 0.75 * gaps[0], "{gaps:?}");
    }
}
