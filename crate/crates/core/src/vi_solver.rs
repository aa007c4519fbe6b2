//! Per-step quasi-variational inequality for the velocity `w = u̇`.
//!
//! With `u = u_n + Δt w` the step problem is the minimization of
//! `J(w) = ½ wᵀ(B + Δt A_eff) w + (A_eff u_n - F)·w + Σ w_i g_i |w_i|`
//! where `B = A_α` and `A_eff = A_μ + A_eᵀ A_β⁻¹ A_e`. The bounds `g_i` are
//! frozen at the previous slip rate and updated by a Picard loop.

use alloc::vec;
use alloc::vec::Vec;

use crate::friction::{regularized_j_gradient, FrictionLaw, RegularizedAbs};
use crate::linalg::{pcg, CsrMatrix, Definiteness, DenseMatrix, SkylineLdl};
use crate::math::{dot, sqrt};
use crate::spaces::ContactNodes;
use crate::{Error, Result};

/// Piezoelectric coupling eliminated through the potential equation.
#[derive(Debug, Clone)]
pub struct Piezo {
    /// Rows in `W`, columns in `V`.
    pub a_e: CsrMatrix,
    pub a_beta: CsrMatrix,
    beta_fact: SkylineLdl,
}

impl Piezo {
    pub fn new(a_e: CsrMatrix, a_beta: CsrMatrix) -> Result<Self> {
        Error::check_len(a_beta.nrows(), a_e.nrows())?;
        let beta_fact = SkylineLdl::factor(&a_beta, Definiteness::Positive)?;
        Ok(Piezo { a_e, a_beta, beta_fact })
    }

    /// `A_β⁻¹ A_e x`
    pub fn potential_of(&self, x: &[f64]) -> Vec<f64> {
        self.beta_fact.solve(&self.a_e.mul_vec(x))
    }

    pub fn beta_solve(&self, b: &[f64]) -> Vec<f64> {
        self.beta_fact.solve(b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSolverOptions {
    /// Systems with more velocity dofs than this use CG.
    pub cg_threshold: usize,
    pub cg_rtol: f64,
    pub cg_max_iter: usize,
}

impl Default for LinearSolverOptions {
    fn default() -> Self {
        LinearSolverOptions {
            cg_threshold: 20_000,
            cg_rtol: 1e-12,
            cg_max_iter: 20_000,
        }
    }
}

/// Step-independent part of the step problem.
#[derive(Debug, Clone)]
pub struct StepOperators {
    b: CsrMatrix,
    a_mu: CsrMatrix,
    piezo: Option<Piezo>,
    dt: f64,
    gram: CsrMatrix,
    gram_fact: SkylineLdl,
    contact: ContactNodes,
    alpha_min: f64,
    trace_constant: f64,
    base: CsrMatrix,
    linear: LinearSolverOptions,
}

impl StepOperators {
    /// `alpha_min` is `α*`; `trace_constant` is the discrete trace constant
    /// for the lumped contact quadrature.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        b: CsrMatrix,
        a_mu: CsrMatrix,
        piezo: Option<Piezo>,
        dt: f64,
        gram: CsrMatrix,
        contact: ContactNodes,
        alpha_min: f64,
        trace_constant: f64,
    ) -> Result<Self> {
        let n = b.nrows();
        Error::check_len(n, b.ncols())?;
        Error::check_len(n, a_mu.nrows())?;
        Error::check_len(n, gram.nrows())?;
        if let Some(p) = &piezo {
            Error::check_len(n, p.a_e.ncols())?;
        }
        if !(dt >= 0.0) || !dt.is_finite() {
            return Err(Error::invalid("time step must be finite and nonnegative"));
        }
        if !(alpha_min > 0.0) {
            return Err(Error::Assumption {
                name: "viscosity bounded below by α* > 0",
                detail: alloc::format!("α* = {alpha_min}"),
            });
        }
        if contact.dofs.iter().any(|&d| d >= n) || contact.weights.len() != contact.dofs.len() {
            return Err(Error::invalid("contact dofs out of range"));
        }
        if b.max_asymmetry() > 0.0 || SkylineLdl::factor(&b, Definiteness::Positive).is_err() {
            return Err(Error::Assumption {
                name: "elliptic viscous form",
                detail: "viscous form is not elliptic".into(),
            });
        }
        let gram_fact = SkylineLdl::factor(&gram, Definiteness::Positive)?;
        let base = b.add_scaled(dt, &a_mu);
        Ok(StepOperators {
            b,
            a_mu,
            piezo,
            dt,
            gram,
            gram_fact,
            contact,
            alpha_min,
            trace_constant,
            base,
            linear: LinearSolverOptions::default(),
        })
    }

    /// Algebraic problem `min ½wᵀBw + lin·w + Σ w_i g_i|w_i|` with the
    /// Euclidean inner product standing in for the `V` inner product.
    /// `α*` is the smallest eigenvalue of `B`, `c² = max weight`.
    pub fn surrogate(b: &DenseMatrix, contact_dofs: &[usize], weights: &[f64]) -> Result<Self> {
        let n = b.nrows();
        let eig = crate::linalg::symmetric_eigen(b)?;
        let contact = ContactNodes {
            dofs: contact_dofs.to_vec(),
            nodes: contact_dofs.to_vec(),
            positions: vec![[0.0; 2]; contact_dofs.len()],
            weights: weights.to_vec(),
        };
        let c = sqrt(weights.iter().copied().fold(0.0, f64::max));
        Self::new(
            CsrMatrix::from_dense(b),
            CsrMatrix::zeros(n, n),
            None,
            0.0,
            CsrMatrix::identity(n),
            contact,
            eig.values[0],
            c,
        )
    }

    pub fn with_linear_solver(mut self, opts: LinearSolverOptions) -> Self {
        self.linear = opts;
        self
    }

    pub fn dim(&self) -> usize {
        self.b.nrows()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn viscous(&self) -> &CsrMatrix {
        &self.b
    }

    pub fn elastic(&self) -> &CsrMatrix {
        &self.a_mu
    }

    pub fn piezo(&self) -> Option<&Piezo> {
        self.piezo.as_ref()
    }

    pub fn gram(&self) -> &CsrMatrix {
        &self.gram
    }

    pub fn contact(&self) -> &ContactNodes {
        &self.contact
    }

    pub fn alpha_min(&self) -> f64 {
        self.alpha_min
    }

    pub fn trace_constant(&self) -> f64 {
        self.trace_constant
    }

    /// `A_eff x`
    pub fn apply_effective(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.a_mu.mul_vec(x);
        if let Some(p) = &self.piezo {
            let phi = p.potential_of(x);
            let back = p.a_e.transpose().mul_vec(&phi);
            for (yi, bi) in y.iter_mut().zip(&back) {
                *yi += bi;
            }
        }
        y
    }

    /// `(B + Δt A_eff) x`
    pub fn apply_step_matrix(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.base.mul_vec(x);
        if let Some(p) = &self.piezo {
            let phi = p.potential_of(x);
            let back = p.a_e.transpose().mul_vec(&phi);
            for (yi, bi) in y.iter_mut().zip(&back) {
                *yi += self.dt * bi;
            }
        }
        y
    }

    /// `‖x‖_V`
    pub fn v_norm(&self, x: &[f64]) -> f64 {
        sqrt(self.gram.quad_form(x).max(0.0))
    }

    /// Norm dual to `‖·‖_V`: `sqrt(rᵀ G⁻¹ r)`.
    pub fn dual_norm(&self, r: &[f64]) -> f64 {
        sqrt(dot(r, &self.gram_fact.solve(r)).max(0.0))
    }

    /// Solver for `(B + Δt A_eff + diag(d)) x = r` with the dofs in
    /// `pinned` fixed to the right-hand side value.
    pub fn newton_solver(&self, d: &[f64], pinned: Option<&[bool]>) -> Result<NewtonSolver<'_>> {
        let n = self.dim();
        let top = self.base.add_diagonal(d);
        if n > self.linear.cg_threshold {
            let mut diag = top.diagonal();
            if let Some(p) = pinned {
                for i in 0..n {
                    if p[i] {
                        diag[i] = 1.0;
                    }
                }
            }
            return Ok(NewtonSolver {
                ops: self,
                kind: SolverKind::Cg {
                    top,
                    diag,
                    pinned: pinned.map(|p| p.to_vec()),
                },
            });
        }
        let top = match pinned {
            Some(p) => top.pin(p),
            None => top,
        };
        let kind = match &self.piezo {
            Some(pz) if self.dt > 0.0 => {
                let coupling = match pinned {
                    Some(p) => pz.a_e.drop_cols(p),
                    None => pz.a_e.clone(),
                };
                let block = CsrMatrix::block_symmetric(&top, &coupling, &pz.a_beta.scaled(-1.0 / self.dt));
                SolverKind::Block(SkylineLdl::factor(&block, Definiteness::QuasiDefinite)?)
            }
            _ => SolverKind::Direct(SkylineLdl::factor(&top, Definiteness::Positive)?),
        };
        Ok(NewtonSolver { ops: self, kind })
    }
}

#[derive(Debug)]
enum SolverKind {
    Direct(SkylineLdl),
    Block(SkylineLdl),
    Cg {
        top: CsrMatrix,
        diag: Vec<f64>,
        pinned: Option<Vec<bool>>,
    },
}

/// A factored (or CG-backed) Newton matrix.
#[derive(Debug)]
pub struct NewtonSolver<'a> {
    ops: &'a StepOperators,
    kind: SolverKind,
}

impl NewtonSolver<'_> {
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.ops.dim();
        match &self.kind {
            SolverKind::Direct(f) => Ok(f.solve(rhs)),
            SolverKind::Block(f) => {
                let mut ext = rhs.to_vec();
                ext.resize(f.dim(), 0.0);
                let mut x = f.solve(&ext);
                x.truncate(n);
                Ok(x)
            }
            SolverKind::Cg { top, diag, pinned } => {
                let ops = self.ops;
                let apply = |x: &[f64], y: &mut [f64]| {
                    let mut xs = x.to_vec();
                    if let Some(p) = pinned {
                        for i in 0..n {
                            if p[i] {
                                xs[i] = 0.0;
                            }
                        }
                    }
                    top.mul_vec_into(&xs, y);
                    if let Some(pz) = &ops.piezo {
                        let back = pz.a_e.transpose().mul_vec(&pz.potential_of(&xs));
                        for (yi, bi) in y.iter_mut().zip(&back) {
                            *yi += ops.dt * bi;
                        }
                    }
                    if let Some(p) = pinned {
                        for i in 0..n {
                            if p[i] {
                                y[i] = x[i];
                            }
                        }
                    }
                };
                let out = pcg(apply, diag, rhs, None, ops.linear.cg_rtol, ops.linear.cg_max_iter)?;
                Ok(out.x)
            }
        }
    }
}

/// One step's data on top of the shared operators.
#[derive(Debug, Clone)]
pub struct StepProblem<'a> {
    pub ops: &'a StepOperators,
    pub u_n: Vec<f64>,
    /// `F`
    pub rhs: Vec<f64>,
    linear: Vec<f64>,
}

impl<'a> StepProblem<'a> {
    pub fn new(ops: &'a StepOperators, u_n: Vec<f64>, rhs: Vec<f64>) -> Result<Self> {
        Error::check_len(ops.dim(), u_n.len())?;
        Error::check_len(ops.dim(), rhs.len())?;
        let mut linear = ops.apply_effective(&u_n);
        for (l, f) in linear.iter_mut().zip(&rhs) {
            *l -= f;
        }
        Ok(StepProblem { ops, u_n, rhs, linear })
    }

    /// `A_eff u_n - F`
    pub fn linear_part(&self) -> &[f64] {
        &self.linear
    }

    /// `(B + Δt A_eff) w + A_eff u_n - F`
    pub fn smooth_gradient(&self, w: &[f64]) -> Vec<f64> {
        let mut g = self.ops.apply_step_matrix(w);
        for (gi, l) in g.iter_mut().zip(&self.linear) {
            *gi += l;
        }
        g
    }

    fn weighted(&self, g: &[f64]) -> Vec<f64> {
        self.ops.contact.weights.iter().zip(g).map(|(w, g)| w * g).collect()
    }

    /// `J(w)` with frozen bounds `g` (one per contact node).
    pub fn objective(&self, w: &[f64], g: &[f64]) -> f64 {
        let hw = self.ops.apply_step_matrix(w);
        let mut j = 0.5 * dot(w, &hw) + dot(&self.linear, w);
        for (k, &d) in self.ops.contact.dofs.iter().enumerate() {
            j += self.ops.contact.weights[k] * g[k] * w[d].abs();
        }
        j
    }

    fn objective_regularized(&self, w: &[f64], wg: &[f64], reg: RegularizedAbs) -> f64 {
        let hw = self.ops.apply_step_matrix(w);
        let mut j = 0.5 * dot(w, &hw) + dot(&self.linear, w);
        for (k, &d) in self.ops.contact.dofs.iter().enumerate() {
            j += wg[k] * reg.value(w[d]);
        }
        j
    }

    /// KKT residual in the dual norm and the optimal subgradient weights
    /// `ξ_i` (so the contact traction is `-ξ_i`).
    pub fn kkt_residual(&self, w: &[f64], g: &[f64], slip_tol: f64) -> (f64, Vec<f64>) {
        let mut r = self.smooth_gradient(w);
        let wg = self.weighted(g);
        let mut xi = vec![0.0; wg.len()];
        for (k, &d) in self.ops.contact.dofs.iter().enumerate() {
            xi[k] = if w[d].abs() > slip_tol {
                wg[k] * w[d].signum()
            } else {
                (-r[d]).clamp(-wg[k], wg[k])
            };
            r[d] += xi[k];
        }
        (self.ops.dual_norm(&r), xi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GatePolicy {
    #[default]
    Warn,
    Abort,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// KKT tolerance of the frozen-bound solve (dual norm).
    pub tol: f64,
    /// Relative tolerance of the Picard loop.
    pub outer_tol: f64,
    /// Regularization lengths relative to `velocity_scale`.
    pub eps_schedule: Vec<f64>,
    pub velocity_scale: f64,
    pub max_newton: usize,
    pub max_active_set: usize,
    pub max_outer: usize,
    pub gate_policy: GatePolicy,
    /// Depth-one Anderson mixing of the Picard loop.
    pub anderson: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-10,
            outer_tol: 1e-8,
            eps_schedule: vec![1e-2, 1e-4, 1e-8],
            velocity_scale: 1.0,
            max_newton: 100,
            max_active_set: 100,
            max_outer: 200,
            gate_policy: GatePolicy::Warn,
            anderson: false,
        }
    }
}

impl SolverOptions {
    pub fn slip_tol(&self) -> f64 {
        1e-10 * self.velocity_scale
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.tol > 0.0
            && self.outer_tol > 0.0
            && self.velocity_scale > 0.0
            && !self.eps_schedule.is_empty()
            && self.eps_schedule.iter().all(|e| *e > 0.0)
            && self.max_newton > 0
            && self.max_outer > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::invalid("solver tolerances, regularization lengths and iteration caps must be positive"))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateReport {
    pub z0: f64,
    pub lipschitz: f64,
    /// `Z₀ - L_r`
    pub margin: f64,
    pub ok: bool,
}

/// `Z₀ = α*/c²`; the gate holds iff `L_r < Z₀`.
pub fn gate(alpha_min: f64, trace_constant: f64, lipschitz: f64) -> GateReport {
    let z0 = alpha_min / (trace_constant * trace_constant);
    GateReport {
        z0,
        lipschitz,
        margin: z0 - lipschitz,
        ok: lipschitz < z0,
    }
}

pub fn check_gate(ops: &StepOperators, lipschitz: f64) -> GateReport {
    gate(ops.alpha_min, ops.trace_constant, lipschitz)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViSolution {
    pub w: Vec<f64>,
    /// Frozen bounds used in the last solve, one per contact node.
    pub bounds: Vec<f64>,
    /// Contact multiplier per contact node, `|λ_i| ≤ w_i g_i`.
    pub contact_traction: Vec<f64>,
    pub stick: usize,
    pub slip: usize,
    pub kkt_residual: f64,
    /// Newton iterations per regularization stage (last solve).
    pub newton_iterations: Vec<usize>,
    pub active_set_iterations: usize,
    /// Unregularized objective after each stage and after the active-set finish.
    pub objective_history: Vec<f64>,
    /// Picard corrections after the initial frozen-bound solve.
    pub outer_iterations: usize,
    pub total_newton: usize,
    /// `‖w^k - w^{k-1}‖_V` per correction.
    pub increments: Vec<f64>,
    /// Increment ratios measured above the noise floor.
    pub contraction: Vec<f64>,
}

fn classify(w: &[f64], contact: &ContactNodes, slip_tol: f64) -> (usize, usize) {
    let slip = contact.dofs.iter().filter(|&&d| w[d].abs() > slip_tol).count();
    (contact.len() - slip, slip)
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum NodeState {
    Stick,
    Slip(bool),
}

/// Convex frozen-bound problem: ε-continuation Newton with Armijo line search
/// followed by a primal-dual active-set finish on the exact problem.
pub fn solve_frozen_bound(problem: &StepProblem<'_>, g: &[f64], w0: &[f64], opts: &SolverOptions) -> Result<ViSolution> {
    opts.validate()?;
    let ops = problem.ops;
    let n = ops.dim();
    let contact = &ops.contact;
    Error::check_len(contact.len(), g.len())?;
    Error::check_len(n, w0.len())?;
    if g.iter().any(|x| !(*x >= 0.0)) {
        return Err(Error::invalid("friction bounds must be nonnegative"));
    }
    let wg = problem.weighted(g);
    let slip_tol = opts.slip_tol();
    let mut newton_iterations = Vec::new();
    let mut objective_history = Vec::new();
    let mut w = w0.to_vec();

    if wg.iter().all(|x| *x == 0.0) {
        let solver = ops.newton_solver(&vec![0.0; n], None)?;
        let rhs: Vec<f64> = problem.linear.iter().map(|l| -l).collect();
        w = solver.solve(&rhs)?;
        newton_iterations.push(1);
        objective_history.push(problem.objective(&w, g));
    } else {
        let zero_d = vec![0.0; n];
        for &eps_rel in &opts.eps_schedule {
            let reg = RegularizedAbs::new(eps_rel * opts.velocity_scale)?;
            let mut its = 0;
            for _ in 0..opts.max_newton {
                let (gj, hj) = regularized_j_gradient(contact, &wg_as_bounds(&wg, contact), &w, reg);
                let mut grad = problem.smooth_gradient(&w);
                for (a, b) in grad.iter_mut().zip(&gj) {
                    *a += b;
                }
                if ops.dual_norm(&grad) <= opts.tol {
                    break;
                }
                its += 1;
                let solver = ops.newton_solver(if hj.is_empty() { &zero_d } else { &hj }, None)?;
                let neg: Vec<f64> = grad.iter().map(|x| -x).collect();
                let d = solver.solve(&neg)?;
                let slope = dot(&grad, &d);
                if !(slope < 0.0) {
                    break;
                }
                let f0 = problem.objective_regularized(&w, &wg, reg);
                let mut t = 1.0;
                let mut accepted = false;
                while t > 1e-12 {
                    let trial: Vec<f64> = w.iter().zip(&d).map(|(a, b)| a + t * b).collect();
                    let ft = problem.objective_regularized(&trial, &wg, reg);
                    if ft <= f0 + 1e-4 * t * slope + 1e-15 * f0.abs() {
                        w = trial;
                        accepted = true;
                        break;
                    }
                    t *= 0.5;
                }
                if !accepted {
                    break;
                }
            }
            newton_iterations.push(its);
            objective_history.push(problem.objective(&w, g));
        }

        // active-set finish on the unregularized problem
        let cdiag: Vec<f64> = contact.dofs.iter().map(|&d| ops.base.get(d, d)).collect();
        let grad = problem.smooth_gradient(&w);
        let mut xi: Vec<f64> = contact.dofs.iter().map(|&d| -grad[d]).collect();
        let mut state: Vec<NodeState> = Vec::new();
        let mut as_its = 0;
        let mut best = w.clone();
        for _ in 0..opts.max_active_set {
            let next: Vec<NodeState> = contact
                .dofs
                .iter()
                .enumerate()
                .map(|(k, &d)| {
                    let z = xi[k] + cdiag[k] * w[d];
                    if z.abs() <= wg[k] {
                        NodeState::Stick
                    } else {
                        NodeState::Slip(z > 0.0)
                    }
                })
                .collect();
            if next == state {
                break;
            }
            state = next;
            as_its += 1;
            let mut pinned = vec![false; n];
            let mut rhs: Vec<f64> = problem.linear.iter().map(|l| -l).collect();
            for (k, &d) in contact.dofs.iter().enumerate() {
                match state[k] {
                    NodeState::Stick => {
                        pinned[d] = true;
                        rhs[d] = 0.0;
                    }
                    NodeState::Slip(pos) => rhs[d] -= if pos { wg[k] } else { -wg[k] },
                }
            }
            let solver = ops.newton_solver(&vec![0.0; n], Some(&pinned))?;
            w = solver.solve(&rhs)?;
            let grad = problem.smooth_gradient(&w);
            for (k, &d) in contact.dofs.iter().enumerate() {
                xi[k] = match state[k] {
                    NodeState::Stick => -grad[d],
                    NodeState::Slip(pos) => {
                        if pos {
                            wg[k]
                        } else {
                            -wg[k]
                        }
                    }
                };
            }
            if problem.kkt_residual(&w, g, slip_tol).0 <= problem.kkt_residual(&best, g, slip_tol).0 {
                best.clone_from(&w);
            }
        }
        w = best;
        objective_history.push(problem.objective(&w, g));
        newton_iterations.push(as_its);
    }

    let (res, xi) = problem.kkt_residual(&w, g, slip_tol);
    if !(res <= opts.tol) {
        return Err(Error::NoConvergence {
            what: "frozen-bound solve",
            iterations: newton_iterations.iter().sum(),
            residual: res,
        });
    }
    let (stick, slip) = classify(&w, contact, slip_tol);
    let active_set_iterations = if wg.iter().all(|x| *x == 0.0) {
        0
    } else {
        newton_iterations.pop().unwrap_or(0)
    };
    let total_newton = newton_iterations.iter().sum();
    Ok(ViSolution {
        w,
        bounds: g.to_vec(),
        contact_traction: xi.iter().map(|x| -x).collect(),
        stick,
        slip,
        kkt_residual: res,
        newton_iterations,
        active_set_iterations,
        objective_history,
        outer_iterations: 0,
        total_newton,
        increments: Vec::new(),
        contraction: Vec::new(),
    })
}

// regularized_j_gradient multiplies by the contact weights itself
fn wg_as_bounds(wg: &[f64], contact: &ContactNodes) -> Vec<f64> {
    wg.iter()
        .zip(&contact.weights)
        .map(|(x, w)| if *w > 0.0 { x / w } else { 0.0 })
        .collect()
}

/// Picard loop on the friction bound around [`solve_frozen_bound`].
pub fn solve_step(problem: &StepProblem<'_>, law: &FrictionLaw, w_init: &[f64], opts: &SolverOptions) -> Result<ViSolution> {
    let ops = problem.ops;
    let report = check_gate(ops, law.lipschitz());
    if !report.ok && opts.gate_policy == GatePolicy::Abort {
        return Err(Error::GateViolated {
            lipschitz: report.lipschitz,
            z0: report.z0,
        });
    }
    let contact = &ops.contact;
    let mut x = w_init.to_vec();
    let mut gx = solve_frozen_bound(problem, &law.frozen_bounds(contact, &x), &x, opts)?;
    let mut total_newton = gx.total_newton;
    let mut increments = Vec::new();
    let mut contraction = Vec::new();
    let mut history: Option<(Vec<f64>, Vec<f64>)> = None;
    for k in 1..=opts.max_outer {
        let f: Vec<f64> = gx.w.iter().zip(&x).map(|(a, b)| a - b).collect();
        let next = match (&history, opts.anderson) {
            (Some((fp, gp)), true) => {
                let df: Vec<f64> = f.iter().zip(fp).map(|(a, b)| a - b).collect();
                let den = dot(&df, &df);
                let gamma = if den > 0.0 { dot(&f, &df) / den } else { 0.0 };
                gx.w.iter().zip(gp).map(|(a, b)| a - gamma * (a - b)).collect()
            }
            _ => gx.w.clone(),
        };
        history = Some((f, gx.w.clone()));
        x = next;
        let new = solve_frozen_bound(problem, &law.frozen_bounds(contact, &x), &x, opts)?;
        total_newton += new.total_newton;
        let diff: Vec<f64> = new.w.iter().zip(&x).map(|(a, b)| a - b).collect();
        let d = ops.v_norm(&diff);
        let wnorm = ops.v_norm(&new.w).max(1.0);
        if let Some(&prev) = increments.last() {
            if prev > 1e4 * opts.tol * wnorm {
                contraction.push(d / prev);
            }
        }
        increments.push(d);
        gx = new;
        if d <= opts.outer_tol * wnorm {
            gx.outer_iterations = k;
            gx.total_newton = total_newton;
            gx.increments = increments;
            gx.contraction = contraction;
            return Ok(gx);
        }
    }
    Err(Error::OuterLimit {
        max_outer: opts.max_outer,
        history: increments,
    })
}
