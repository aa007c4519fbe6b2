//! Independent solvers for the frozen-bound problem.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::friction::FrictionLaw;
use crate::linalg::{DenseCholesky, DenseMatrix};
use crate::vi_solver::{solve_frozen_bound, solve_step, SolverOptions, StepOperators, StepProblem, ViSolution};
use crate::{Error, Result};

/// Uzawa iteration on the scaled contact tractions `τ_i ∈ [-g_i, g_i]`:
/// `H w = -lin - Σ w_i τ_i e_i`, then `τ ← P(τ + ρ w)` with
/// `ρ = α*/(2c²)`.
pub fn uzawa_oracle(problem: &StepProblem<'_>, g: &[f64], tol: f64, max_iter: usize) -> Result<ViSolution> {
    let ops = problem.ops;
    let n = ops.dim();
    let contact = ops.contact();
    Error::check_len(contact.len(), g.len())?;
    let c = ops.trace_constant();
    let rho = if c > 0.0 { ops.alpha_min() / (2.0 * c * c) } else { ops.alpha_min() };
    let solver = ops.newton_solver(&vec![0.0; n], None)?;
    let mut tau = vec![0.0; contact.len()];
    let primal = |tau: &[f64]| -> Result<Vec<f64>> {
        let mut rhs: Vec<f64> = problem.linear_part().iter().map(|l| -l).collect();
        for (k, &d) in contact.dofs.iter().enumerate() {
            rhs[d] -= contact.weights[k] * tau[k];
        }
        solver.solve(&rhs)
    };
    let mut w = primal(&tau)?;
    for it in 1..=max_iter {
        for (k, &d) in contact.dofs.iter().enumerate() {
            tau[k] = (tau[k] + rho * w[d]).clamp(-g[k], g[k]);
        }
        let next = primal(&tau)?;
        let diff = ops.v_norm(&crate::math::sub(&next, &w));
        w = next;
        if diff <= 1e-3 * tol {
            let slip_tol = 1e-10;
            let stick = contact.dofs.iter().filter(|&&d| w[d].abs() <= slip_tol).count();
            return Ok(ViSolution {
                contact_traction: tau.iter().zip(&contact.weights).map(|(t, wt)| -t * wt).collect(),
                bounds: g.to_vec(),
                stick,
                slip: contact.len() - stick,
                kkt_residual: problem.kkt_residual(&w, g, slip_tol).0,
                newton_iterations: vec![it],
                active_set_iterations: 0,
                objective_history: vec![problem.objective(&w, g)],
                outer_iterations: 0,
                total_newton: it,
                increments: Vec::new(),
                contraction: Vec::new(),
                w,
            });
        }
    }
    Err(Error::NoConvergence {
        what: "Uzawa iteration",
        iterations: max_iter,
        residual: f64::NAN,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BruteForceOptions {
    /// Half-width of the initial box around the origin; `None` derives one
    /// from the data.
    pub half_width: Option<f64>,
    /// Grid points per axis.
    pub points: usize,
    /// Zoom refinements after the first scan.
    pub zoom_levels: usize,
}

impl Default for BruteForceOptions {
    fn default() -> Self {
        BruteForceOptions {
            half_width: None,
            points: 41,
            zoom_levels: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceResult {
    pub w: Vec<f64>,
    /// Grid spacing of the last scan.
    pub resolution: f64,
    pub value: f64,
}

/// Exhaustive grid minimization of `J` for at most three dofs. The first
/// scan covers a box that must contain the minimizer; each zoom rescans two
/// cells around the best point.
pub fn brute_force_oracle(problem: &StepProblem<'_>, g: &[f64], opts: &BruteForceOptions) -> Result<BruteForceResult> {
    let ops = problem.ops;
    let n = ops.dim();
    if n > 3 {
        return Err(Error::SizeLimit { size: n, limit: 3 });
    }
    if opts.points < 3 {
        return Err(Error::invalid("brute force needs at least 3 points per axis"));
    }
    let half = match opts.half_width {
        Some(h) => h,
        None => {
            // ‖w*‖ ≤ (‖lin‖ + Σ w_i g_i) / λ_min in the Euclidean norm
            let h = ops.viscous().add_scaled(ops.dt(), ops.elastic()).to_dense();
            let lmin = crate::linalg::symmetric_eigen(&h)?.values[0];
            let lin = crate::math::norm2(problem.linear_part());
            let wg: f64 = ops.contact().weights.iter().zip(g).map(|(w, g)| w * g).sum();
            2.0 * (lin + wg) / lmin + 1.0
        }
    };
    let mut center = vec![0.0; n];
    let mut width = half;
    let mut best = (f64::INFINITY, vec![0.0; n]);
    let m = opts.points;
    for level in 0..=opts.zoom_levels {
        let step = 2.0 * width / (m - 1) as f64;
        let total = m.pow(n as u32);
        let mut best_idx = vec![0usize; n];
        best.0 = f64::INFINITY;
        let mut w = vec![0.0; n];
        for flat in 0..total {
            let mut r = flat;
            let mut idx = vec![0usize; n];
            for a in 0..n {
                idx[a] = r % m;
                r /= m;
                w[a] = center[a] - width + step * idx[a] as f64;
            }
            let j = problem.objective(&w, g);
            if j < best.0 {
                best = (j, w.clone());
                best_idx = idx;
            }
        }
        if level == 0 {
            if let Some(axis) = best_idx.iter().position(|&i| i == 0 || i == m - 1) {
                return Err(Error::BoxTooSmall { axis });
            }
        }
        center.clone_from(&best.1);
        width = 2.0 * step;
        if level == opts.zoom_levels {
            return Ok(BruteForceResult {
                w: best.1,
                resolution: step,
                value: best.0,
            });
        }
    }
    unreachable!()
}

/// A small algebraic problem, optionally with a closed-form answer.
#[derive(Debug, Clone)]
pub struct Surrogate {
    pub name: String,
    pub b: DenseMatrix,
    pub linear: Vec<f64>,
    pub contact_dofs: Vec<usize>,
    pub weights: Vec<f64>,
    pub g: Vec<f64>,
    pub exact: Option<Vec<f64>>,
}

impl Surrogate {
    pub fn operators(&self) -> Result<StepOperators> {
        StepOperators::surrogate(&self.b, &self.contact_dofs, &self.weights)
    }

    pub fn problem<'a>(&self, ops: &'a StepOperators) -> Result<StepProblem<'a>> {
        let n = self.linear.len();
        StepProblem::new(ops, vec![0.0; n], self.linear.iter().map(|l| -l).collect())
    }
}

fn closed(name: &str, b: &[&[f64]], linear: &[f64], dofs: &[usize], weights: &[f64], g: &[f64], exact: Option<&[f64]>) -> Surrogate {
    Surrogate {
        name: name.into(),
        b: DenseMatrix::from_rows(b),
        linear: linear.to_vec(),
        contact_dofs: dofs.to_vec(),
        weights: weights.to_vec(),
        g: g.to_vec(),
        exact: exact.map(|e| e.to_vec()),
    }
}

/// Closed-form cases (1–3 dofs) followed by `random` randomized SPD
/// instances with `n ≤ 30` and five contact nodes.
pub fn surrogate_set(random: usize, seed: u64) -> Vec<Surrogate> {
    let mut set = vec![
        // scalar soft threshold: w = sign(b) max(|b| - g, 0)/a
        closed("1-dof slip", &[&[2.0]], &[-5.0], &[0], &[1.0], &[1.0], Some(&[2.0])),
        closed("1-dof slip negative", &[&[4.0]], &[3.0], &[0], &[0.5], &[2.0], Some(&[-0.5])),
        closed("1-dof stick", &[&[1.0]], &[-0.7], &[0], &[1.0], &[1.0], Some(&[0.0])),
        closed("2-dof soft threshold", &[&[2.0, 0.0], &[0.0, 2.0]], &[-3.0, 0.0], &[0], &[1.0], &[1.0], Some(&[1.0, 0.0])),
        // slip at node 0 with w0 > 0: [[2,1],[1,2]] w = (3 - 1, 0) → w = (4/3, -2/3)
        closed(
            "2-dof coupled slip",
            &[&[2.0, 1.0], &[1.0, 2.0]],
            &[-3.0, 0.0],
            &[0],
            &[1.0],
            &[1.0],
            Some(&[4.0 / 3.0, -2.0 / 3.0]),
        ),
        // stick at node 0: w0 = 0, 2 w1 = 1
        closed("2-dof coupled stick", &[&[2.0, 1.0], &[1.0, 2.0]], &[-1.0, -1.0], &[0], &[1.0], &[1.0], Some(&[0.0, 0.5])),
        // frictionless 3-dof: plain linear solve, diag(2,3,4) w = (2, 3, -4)
        closed(
            "3-dof frictionless",
            &[&[2.0, 0.0, 0.0], &[0.0, 3.0, 0.0], &[0.0, 0.0, 4.0]],
            &[-2.0, -3.0, 4.0],
            &[0, 2],
            &[1.0, 1.0],
            &[0.0, 0.0],
            Some(&[1.0, 1.0, -1.0]),
        ),
        // two slipping nodes, one sticking, uncoupled: w_i = soft(b_i, g_i)/a
        closed(
            "3-dof mixed",
            &[&[1.0, 0.0, 0.0], &[0.0, 2.0, 0.0], &[0.0, 0.0, 3.0]],
            &[-2.0, 1.0, -0.5],
            &[0, 1, 2],
            &[1.0, 0.5, 1.0],
            &[1.0, 0.4, 1.0],
            Some(&[1.0, -0.4, 0.0]),
        ),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 0..random {
        let n = rng.gen_range(5..=30usize);
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = rng.gen_range(-1.0..1.0);
            }
        }
        let mut b = m.transpose().matmul(&m);
        for i in 0..n {
            for j in 0..n {
                b[(i, j)] /= n as f64;
            }
            b[(i, i)] += rng.gen_range(0.2..1.0);
        }
        for i in 0..n {
            for j in 0..i {
                let avg = 0.5 * (b[(i, j)] + b[(j, i)]);
                b[(i, j)] = avg;
                b[(j, i)] = avg;
            }
        }
        let mut dofs: Vec<usize> = (0..n).collect();
        for i in 0..5 {
            let j = rng.gen_range(i..n);
            dofs.swap(i, j);
        }
        dofs.truncate(5);
        dofs.sort_unstable();
        set.push(Surrogate {
            name: format!("random {k} (n = {n})"),
            b,
            linear: (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect(),
            contact_dofs: dofs,
            weights: (0..5).map(|_| rng.gen_range(0.5..1.5)).collect(),
            g: (0..5).map(|_| rng.gen_range(0.0..1.5)).collect(),
            exact: None,
        });
    }
    set
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleCase {
    pub name: String,
    pub dofs: usize,
    /// `‖w_ssn - w_uzawa‖`
    pub ssn_vs_uzawa: f64,
    /// `‖w_ssn - w_grid‖` and the grid resolution.
    pub ssn_vs_grid: Option<(f64, f64)>,
    pub ssn_vs_exact: Option<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub tol: f64,
    pub cases: Vec<OracleCase>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        !self.cases.is_empty() && self.cases.iter().all(|c| c.passed)
    }
}

/// Primal solver against Uzawa on every surrogate, against the grid scan
/// where `n ≤ 3`, and against the closed form where one exists.
pub fn oracle_suite(set: &[Surrogate], tol: f64) -> Result<OracleReport> {
    let opts = SolverOptions {
        tol: tol * 1e-2,
        ..Default::default()
    };
    let mut cases = Vec::new();
    for s in set {
        let ops = s.operators()?;
        let p = s.problem(&ops)?;
        let n = s.linear.len();
        let ssn = solve_frozen_bound(&p, &s.g, &vec![0.0; n], &opts)?;
        let uz = uzawa_oracle(&p, &s.g, tol * 1e-2, 5_000_000)?;
        let d_uz = ops.v_norm(&crate::math::sub(&ssn.w, &uz.w));
        let mut passed = d_uz <= 10.0 * tol;
        let grid = if n <= 3 {
            let bf = brute_force_oracle(&p, &s.g, &BruteForceOptions::default())?;
            let d = crate::math::norm_inf(&crate::math::sub(&ssn.w, &bf.w));
            passed &= d <= bf.resolution;
            Some((d, bf.resolution))
        } else {
            None
        };
        let exact = s.exact.as_ref().map(|e| crate::math::norm_inf(&crate::math::sub(&ssn.w, e)));
        if let Some(d) = exact {
            passed &= d <= 10.0 * tol;
        }
        cases.push(OracleCase {
            name: s.name.clone(),
            dofs: n,
            ssn_vs_uzawa: d_uz,
            ssn_vs_grid: grid,
            ssn_vs_exact: exact,
            passed,
        });
    }
    Ok(OracleReport { tol, cases })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrescaReport {
    /// Outer corrections per problem with a constant bound.
    pub corrections: Vec<usize>,
    /// Relative distance to the plain linear solve with `g ≡ 0`.
    pub frictionless_error: Vec<f64>,
    pub passed: bool,
}

/// Step matrix assembled column by column from matrix-free products, then
/// factored densely: shares no code with the Newton factorization.
fn dense_step_solve(ops: &StepOperators, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = ops.dim();
    if n > 2000 {
        return Err(Error::SizeLimit { size: n, limit: 2000 });
    }
    let mut m = DenseMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        let col = ops.apply_step_matrix(&e);
        e[j] = 0.0;
        for i in 0..n {
            m[(i, j)] = col[i];
        }
    }
    for i in 0..n {
        for j in 0..i {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
    Ok(DenseCholesky::factor(&m)?.solve(rhs))
}

/// Constant bound ⇒ one correction; zero bound ⇒ the linear solve.
pub fn tresca_reduction(problems: &[(&StepProblem<'_>, f64)], opts: &SolverOptions) -> Result<TrescaReport> {
    let mut corrections = Vec::new();
    let mut frictionless_error = Vec::new();
    for (p, r0) in problems {
        let ops = p.ops;
        let n = ops.dim();
        let law = FrictionLaw::tresca(*r0)?;
        let sol = solve_step(p, &law, &vec![0.0; n], opts)?;
        corrections.push(sol.outer_iterations);
        let zero = vec![0.0; ops.contact().len()];
        let fr = solve_frozen_bound(p, &zero, &vec![0.0; n], opts)?;
        let rhs: Vec<f64> = p.linear_part().iter().map(|l| -l).collect();
        let direct = dense_step_solve(ops, &rhs)?;
        let scale = ops.v_norm(&direct).max(f64::MIN_POSITIVE);
        frictionless_error.push(ops.v_norm(&crate::math::sub(&fr.w, &direct)) / scale);
    }
    let passed = corrections.iter().all(|c| *c == 1) && frictionless_error.iter().all(|e| *e <= 1e-12);
    Ok(TrescaReport {
        corrections,
        frictionless_error,
        passed,
    })
}
