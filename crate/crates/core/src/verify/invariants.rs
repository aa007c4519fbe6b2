//! Structural checks on the assembled operators, the piezoelectric
//! decoupling identity and the two temperature integrators.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembly::{assemble_forms, BoundaryData, MaterialField, SpaceSet, UniformMaterial};
use crate::data::DataFamily;
use crate::friction::{check_four_term_bound, FourTermReport, FrictionBound, FrictionLaw, HeatGeneration};
use crate::linalg::CsrMatrix;
use crate::math::{cos, ln, sin, sub};
use crate::mesh::{generate_rect_mesh, TaggingRule};
use crate::spaces::{estimate_trace_constant, TraceOptions, TraceQuadrature};
use crate::stepper::{
    initialize, solve_potential, step_temperature_expkernel, Model, Stepper, ThermalExponential, ThetaCoupling,
    TimeGrid,
};
use crate::vi_solver::{LinearSolverOptions, SolverOptions};
use crate::{Error, Result};

const SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantReport {
    pub nx: usize,
    pub samples: usize,
    /// Largest `|a_ij - a_ji|` over the largest entry, per operator.
    pub asymmetry: Vec<(String, f64)>,
    /// `min vᵀA_αv / (α* ‖v‖²_V)` over the samples.
    pub viscous_ratio: f64,
    /// `min θᵀK̃θ / (m_K ‖θ‖²_E)` over the samples.
    pub conduction_ratio: f64,
    pub four_term: FourTermReport,
}

impl InvariantReport {
    pub fn passed(&self) -> bool {
        self.asymmetry.iter().all(|(_, a)| *a <= 1e-14)
            && self.viscous_ratio >= 1.0 - SLACK
            && self.conduction_ratio >= 1.0 - SLACK
            && self.four_term.passed
    }
}

fn random_material(nx: usize, rng: &mut ChaCha8Rng) -> Result<(crate::mesh::Mesh, MaterialField)> {
    let mesh = generate_rect_mesh(1.0, 1.0, nx, nx, &TaggingRule::standard())?;
    let mut mat = MaterialField::uniform(&mesh, &UniformMaterial { e: 0.4, ..Default::default() });
    for k in 0..mesh.triangle_count() {
        mat.alpha[k] = rng.gen_range(0.5..2.0);
        mat.mu[k] = rng.gen_range(0.5..2.0);
        mat.beta[k] = rng.gen_range(0.5..2.0);
        let a = rng.gen_range(0.0..core::f64::consts::PI);
        let (l1, l2) = (rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0));
        let (c, s) = (cos(a), sin(a));
        let off = (l1 - l2) * c * s;
        mat.conductivity[k] = [[l1 * c * c + l2 * s * s, off], [off, l1 * s * s + l2 * c * c]];
    }
    for x in mat.exchange.iter_mut() {
        *x = rng.gen_range(0.0..1.0);
    }
    Ok((mesh, mat))
}

fn relative_asymmetry(m: &CsrMatrix) -> f64 {
    let scale = m.max_abs();
    if scale == 0.0 {
        0.0
    } else {
        m.max_asymmetry() / scale
    }
}

fn min_ratio(a: &CsrMatrix, b: &CsrMatrix, samples: usize, rng: &mut ChaCha8Rng) -> f64 {
    let n = a.nrows();
    let mut worst = f64::INFINITY;
    for _ in 0..samples {
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let d = b.quad_form(&x);
        if d > 0.0 {
            worst = worst.min(a.quad_form(&x) / d);
        }
    }
    worst
}

/// Symmetry, ellipticity and the four-term friction bound on a random
/// heterogeneous material.
pub fn structural_invariants(nx: usize, samples: usize, seed: u64) -> Result<InvariantReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mesh, mat) = random_material(nx, &mut rng)?;
    let spaces = SpaceSet::build(&mesh)?;
    let f = assemble_forms(&mesh, &spaces, &mat)?;
    let asymmetry = vec![
        (String::from("A_alpha"), relative_asymmetry(&f.a_alpha)),
        (String::from("A_mu"), relative_asymmetry(&f.a_mu)),
        (String::from("A_beta"), relative_asymmetry(&f.a_beta)),
        (String::from("Gram_V"), relative_asymmetry(&f.gram_v)),
        (String::from("K_tilde"), relative_asymmetry(&f.k_tilde)),
    ];
    let viscous_ratio = min_ratio(&f.a_alpha, &f.gram_v.scaled(f.bounds.alpha_min), samples, &mut rng);
    let conduction_ratio = min_ratio(&f.k_tilde, &f.gram_e.scaled(f.bounds.conductivity_min), samples, &mut rng);

    let small = generate_rect_mesh(1.0, 1.0, 4, 4, &TaggingRule::standard())?;
    let v = SpaceSet::build(&small)?.v;
    let opts = TraceOptions {
        quadrature: TraceQuadrature::Lumped,
        ..Default::default()
    };
    let c = estimate_trace_constant(&small, &v, &opts)?.value;
    let law = FrictionLaw::new(FrictionBound::AffineSaturating { a: 0.5, b: 1.0 }, HeatGeneration::None)?;
    let four_term = check_four_term_bound(&small, &v, &law, c, samples, seed ^ 0x5eed);
    Ok(InvariantReport {
        nx,
        samples,
        asymmetry,
        viscous_ratio,
        conduction_ratio,
        four_term,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecouplingReport {
    pub steps: usize,
    /// `max_n ‖φ - (e/β)u - φ_q‖_W / ‖φ‖_W`
    pub max_relative: f64,
}

impl DecouplingReport {
    pub fn passed(&self) -> bool {
        self.max_relative <= 1e-10
    }
}

/// With constant `e` and `β` and matching Dirichlet parts of `V` and `W`,
/// the potential is `(e/β)u` plus the charge response.
pub fn decoupling_study(nx: usize, grid: TimeGrid) -> Result<DecouplingReport> {
    let (e, beta) = (0.6, 1.5);
    let mesh = generate_rect_mesh(1.0, 1.0, nx, nx, &TaggingRule::standard())?;
    let mat = MaterialField::uniform(&mesh, &UniformMaterial { e, beta, ..Default::default() });
    let mut data = BoundaryData::zero();
    data.f2 = DataFamily::Ramp(0.8).boundary();
    data.q0 = DataFamily::Constant(0.3).volume();
    data.q2 = DataFamily::Sinusoid {
        amplitude: 0.2,
        kx: 1.0,
        ky: 3.0,
        omega: 2.0,
        phase_x: 0.0,
        phase_y: 0.5,
        phase_t: 0.0,
    }
    .boundary();
    let law = FrictionLaw::new(FrictionBound::AffineSaturating { a: 0.2, b: 0.3 }, HeatGeneration::None)?;
    let model = Model::new(mesh, mat, data, law)?;
    let (vs, ws) = (&model.spaces.v, &model.spaces.w);
    if vs.free_dofs() != ws.free_dofs() {
        return Err(Error::invalid("V and W must share their Dirichlet part"));
    }
    let stepper = Stepper::new(
        &model,
        grid,
        SolverOptions::default(),
        ThetaCoupling::Lagged,
        LinearSolverOptions::default(),
    )?;
    let zero_u = vec![0.0; vs.dim()];
    let mut worst: f64 = 0.0;
    let mut failure = None;
    let state = initialize(&model, &zero_u, &vec![0.0; model.spaces.e.dim()])?;
    stepper.run(state, |s, _| match solve_potential(&model, &zero_u, s.t) {
        Ok(phi_q) => {
            let r: Vec<f64> = (0..s.phi.len()).map(|i| s.phi[i] - e / beta * s.u[i] - phi_q[i]).collect();
            worst = worst.max(model.norm_w(&r) / model.norm_w(&s.phi).max(f64::MIN_POSITIVE));
            true
        }
        Err(err) => {
            failure = Some(err);
            false
        }
    })?;
    if let Some(err) = failure {
        return Err(err);
    }
    Ok(DecouplingReport {
        steps: grid.steps,
        max_relative: worst,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemperatureCrossCheck {
    pub steps: Vec<usize>,
    /// Relative `E` difference at the final time between backward Euler and
    /// the exponential kernel on the same velocity history.
    pub differences: Vec<f64>,
    pub order: f64,
}

impl TemperatureCrossCheck {
    pub fn passed(&self) -> bool {
        self.order >= 0.9
    }
}

fn thermal_model(nx: usize) -> Result<Model> {
    let mesh = generate_rect_mesh(1.0, 1.0, nx, nx, &TaggingRule::standard())?;
    let mat = MaterialField::uniform(
        &mesh,
        &UniformMaterial {
            e: 0.3,
            thermal_expansion: [0.4, 0.3],
            ..Default::default()
        },
    );
    let mut data = BoundaryData::zero();
    data.f2 = DataFamily::Sinusoid {
        amplitude: 0.8,
        kx: 0.0,
        ky: 2.0,
        omega: 3.0,
        phase_x: core::f64::consts::FRAC_PI_2,
        phase_y: 0.3,
        phase_t: 0.0,
    }
    .boundary();
    data.p = DataFamily::Ramp(1.0).volume();
    data.theta_r = DataFamily::Constant(0.2).boundary();
    let law = FrictionLaw::new(
        FrictionBound::AffineSaturating { a: 0.2, b: 0.3 },
        HeatGeneration::FrictionalPower,
    )?;
    Model::new(mesh, mat, data, law)
}

/// Backward Euler against the exponential kernel over successive halvings
/// of `Δt`, both driven by the velocity history of the backward Euler run.
pub fn temperature_cross_check(nx: usize, t_final: f64, base_steps: usize, halvings: usize) -> Result<TemperatureCrossCheck> {
    if halvings == 0 {
        return Err(Error::invalid("need at least one halving"));
    }
    let model = thermal_model(nx)?;
    let kernel = ThermalExponential::new(&model, 2000)?;
    let theta0 = vec![0.0; model.spaces.e.dim()];
    let u0 = vec![0.0; model.spaces.v.dim()];
    let mut steps = Vec::new();
    let mut differences = Vec::new();
    for k in 0..=halvings {
        let n = base_steps << k;
        let grid = TimeGrid::new(t_final, n)?;
        let stepper = Stepper::new(
            &model,
            grid,
            SolverOptions::default(),
            ThetaCoupling::Lagged,
            LinearSolverOptions::default(),
        )?;
        let mut history = Vec::with_capacity(n);
        let last = stepper.run(initialize(&model, &u0, &theta0)?, |s, _| {
            history.push(s.w.clone());
            true
        })?;
        let theta_exp = step_temperature_expkernel(&model, &kernel, &grid, &history, &theta0)?;
        let d = model.norm_e(&sub(&last.theta, &theta_exp)) / model.norm_e(&last.theta).max(f64::MIN_POSITIVE);
        steps.push(n);
        differences.push(d);
    }
    let order = if differences.iter().all(|d| *d > 0.0) {
        let m = differences.len();
        ln(differences[0] / differences[m - 1]) / ln((steps[m - 1] / steps[0]) as f64)
    } else {
        f64::INFINITY
    };
    Ok(TemperatureCrossCheck {
        steps,
        differences,
        order,
    })
}
