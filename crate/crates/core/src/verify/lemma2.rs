//! Measured constant in `‖θ1(t) - θ2(t)‖_E ≤ c ∫₀ᵗ ‖u̇1 - u̇2‖²_V ds`.

use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::assembly::{BoundaryData, MaterialField, UniformMaterial};
use crate::data::DataFamily;
use crate::friction::{FrictionBound, FrictionLaw, HeatGeneration};
use crate::math::exp;
use crate::mesh::{generate_rect_mesh, TaggingRule};
use crate::stepper::{initialize, Model, Stepper, SystemState, ThetaCoupling, TimeGrid};
use crate::vi_solver::{LinearSolverOptions, SolverOptions};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Lemma2Run {
    pub nx: usize,
    pub steps: usize,
    /// `sup_t LHS / max(RHS, 1e-14)`
    pub ratio: f64,
    pub sup_lhs: f64,
    pub sup_rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lemma2Report {
    pub runs: Vec<Lemma2Run>,
    /// Largest over smallest ratio across meshes.
    pub variation: f64,
}

impl Lemma2Report {
    pub fn passed(&self) -> bool {
        self.runs.iter().all(|r| r.ratio.is_finite()) && self.variation <= 2.0
    }
}

/// The bundled pair: side traction, and the same plus a body-force bump.
pub fn bundled_pair() -> (BoundaryData, BoundaryData) {
    let mut base = BoundaryData::zero();
    base.f2 = DataFamily::Ramp(0.6).boundary();
    base.p = DataFamily::Constant(0.2).volume();
    base.theta_r = DataFamily::Constant(0.1).boundary();
    let mut bumped = base.clone();
    bumped.f0 = Arc::new(|p, t| {
        let r2 = (p[0] - 0.5) * (p[0] - 0.5) + (p[1] - 0.3) * (p[1] - 0.3);
        2.0 * t * exp(-r2 / 0.04)
    });
    (base, bumped)
}

fn trajectory(model: &Model, grid: TimeGrid) -> Result<Vec<SystemState>> {
    let stepper = Stepper::new(
        model,
        grid,
        SolverOptions::default(),
        ThetaCoupling::Lagged,
        LinearSolverOptions::default(),
    )?;
    let v = model.spaces.v.dim();
    let e = model.spaces.e.dim();
    let mut states = Vec::new();
    stepper.run(initialize(model, &alloc::vec![0.0; v], &alloc::vec![0.0; e])?, |s, _| {
        states.push(s.clone());
        true
    })?;
    Ok(states)
}

/// Two runs sharing mesh, coefficients and initial state.
pub fn lemma2_measure(nx: usize, grid: TimeGrid, pair: &(BoundaryData, BoundaryData)) -> Result<Lemma2Run> {
    let mesh = generate_rect_mesh(1.0, 1.0, nx, nx, &TaggingRule::standard())?;
    let mat = MaterialField::uniform(
        &mesh,
        &UniformMaterial {
            e: 0.3,
            thermal_expansion: [0.5, 0.2],
            ..Default::default()
        },
    );
    let law = FrictionLaw::new(
        FrictionBound::AffineSaturating { a: 0.3, b: 0.2 },
        HeatGeneration::FrictionalPower,
    )?;
    let m1 = Model::new(mesh.clone(), mat.clone(), pair.0.clone(), law)?;
    let m2 = Model::new(mesh, mat, pair.1.clone(), law)?;
    let s1 = trajectory(&m1, grid)?;
    let s2 = trajectory(&m2, grid)?;
    if s1.len() != s2.len() {
        return Err(Error::invalid("runs ended at different steps"));
    }
    let dt = grid.dt();
    let mut rhs = 0.0;
    let mut ratio: f64 = 0.0;
    let mut sup_lhs: f64 = 0.0;
    for (a, b) in s1.iter().zip(&s2) {
        let dw = m1.norm_v(&crate::math::sub(&a.w, &b.w));
        rhs += dt * dw * dw;
        let lhs = m1.norm_e(&crate::math::sub(&a.theta, &b.theta));
        sup_lhs = sup_lhs.max(lhs);
        ratio = ratio.max(lhs / rhs.max(1e-14));
    }
    Ok(Lemma2Run {
        nx,
        steps: grid.steps,
        ratio,
        sup_lhs,
        sup_rhs: rhs,
    })
}

pub fn lemma2_stability(levels: &[usize], grid: TimeGrid) -> Result<Lemma2Report> {
    let pair = bundled_pair();
    let runs = levels
        .iter()
        .map(|&nx| lemma2_measure(nx, grid, &pair))
        .collect::<Result<Vec<_>>>()?;
    Ok(Lemma2Report::from_runs(runs))
}

impl Lemma2Report {
    pub fn from_runs(runs: Vec<Lemma2Run>) -> Self {
        let hi = runs.iter().map(|r| r.ratio).fold(0.0, f64::max);
        let lo = runs.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
        let variation = if lo > 0.0 { hi / lo } else if hi == 0.0 { 1.0 } else { f64::INFINITY };
        Lemma2Report { runs, variation }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_data_gives_zero() {
        let (base, _) = bundled_pair();
        let run = lemma2_measure(3, TimeGrid::new(0.5, 3).unwrap(), &(base.clone(), base)).unwrap();
        assert_eq!(run.ratio, 0.0);
        assert_eq!(run.sup_rhs, 0.0);
    }

    #[test]
    fn ratio_stable_under_refinement() {
        let rep = lemma2_stability(&[4, 8], TimeGrid::new(1.0, 10).unwrap()).unwrap();
        assert!(rep.passed(), "{rep:?}");
        assert!(rep.runs.iter().all(|r| r.ratio > 0.0));
    }
}
