//! Manufactured solutions with the friction condition replaced by the
//! traction of the exact solution.

use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::assembly::{BoundaryData, MaterialField, UniformMaterial};
use crate::friction::FrictionLaw;
use crate::math::{cos, fit_slope, ln, sin, sqrt};
use crate::mesh::{generate_rect_mesh, ElecTag, MechTag, Mesh, SideTag, TaggingRule};
use crate::spaces::FeSpace;
use crate::stepper::{initialize, Model, Stepper, ThetaCoupling, TimeGrid};
use crate::vi_solver::{LinearSolverOptions, SolverOptions};
use crate::{Error, Result};

use core::f64::consts::PI;

/// `S(x) t`, with the gradient and Laplacian of `S`.
#[derive(Debug, Clone, Copy)]
pub struct SeparableField {
    pub s: fn([f64; 2]) -> f64,
    pub grad: fn([f64; 2]) -> [f64; 2],
    pub lap: fn([f64; 2]) -> f64,
}

impl SeparableField {
    pub fn zero() -> Self {
        SeparableField {
            s: |_| 0.0,
            grad: |_| [0.0, 0.0],
            lap: |_| 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MmsCase {
    pub name: &'static str,
    pub u: SeparableField,
    pub phi: SeparableField,
    pub theta: SeparableField,
    /// Conductivity must be isotropic.
    pub material: UniformMaterial,
    pub tagging: TaggingRule,
    pub t_final: f64,
}

fn dot2(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

impl MmsCase {
    pub fn zero() -> Self {
        MmsCase {
            name: "zero",
            u: SeparableField::zero(),
            phi: SeparableField::zero(),
            theta: SeparableField::zero(),
            material: UniformMaterial::default(),
            tagging: TaggingRule::standard(),
            t_final: 1.0,
        }
    }

    /// `u = x y t` with every coupling active; clamped on the left side.
    /// The contact side carries no electric tag, so the exact potential
    /// has zero charge flux there.
    pub fn polynomial() -> Self {
        MmsCase {
            name: "polynomial",
            u: SeparableField {
                s: |p| p[0] * p[1],
                grad: |p| [p[1], p[0]],
                lap: |_| 0.0,
            },
            // β ∂yφ = e ∂yu on the contact side, with e/β = 1/3
            phi: SeparableField {
                s: |p| p[0] * (0.5 + p[1] / 3.0 + 0.5 * p[1] * p[1]),
                grad: |p| [0.5 + p[1] / 3.0 + 0.5 * p[1] * p[1], p[0] * (1.0 / 3.0 + p[1])],
                lap: |p| p[0],
            },
            theta: SeparableField {
                s: |p| p[0] * (1.0 - p[0]) * (1.0 - p[1]),
                grad: |p| [(1.0 - 2.0 * p[0]) * (1.0 - p[1]), -p[0] * (1.0 - p[0])],
                lap: |p| -2.0 * (1.0 - p[1]),
            },
            material: UniformMaterial {
                alpha: 1.0,
                mu: 2.0,
                e: 0.5,
                beta: 1.5,
                thermal_expansion: [0.3, -0.2],
                conductivity: [[1.0, 0.0], [0.0, 1.0]],
                exchange: 2.0,
            },
            tagging: TaggingRule {
                bottom: SideTag::new(MechTag::G3, None),
                right: SideTag::new(MechTag::G2, Some(ElecTag::Gb)),
                top: SideTag::new(MechTag::G2, Some(ElecTag::Gb)),
                left: SideTag::new(MechTag::G1, Some(ElecTag::Ga)),
            },
            t_final: 1.0,
        }
    }

    /// `u = sin(πx) sin(πy) t`, no piezoelectric or thermal coupling.
    pub fn trigonometric() -> Self {
        MmsCase {
            name: "trigonometric",
            u: SeparableField {
                s: |p| sin(PI * p[0]) * sin(PI * p[1]),
                grad: |p| [PI * cos(PI * p[0]) * sin(PI * p[1]), PI * sin(PI * p[0]) * cos(PI * p[1])],
                lap: |p| -2.0 * PI * PI * sin(PI * p[0]) * sin(PI * p[1]),
            },
            phi: SeparableField {
                s: |p| sin(PI * p[0]) * cos(0.5 * PI * p[1]),
                grad: |p| {
                    [
                        PI * cos(PI * p[0]) * cos(0.5 * PI * p[1]),
                        -0.5 * PI * sin(PI * p[0]) * sin(0.5 * PI * p[1]),
                    ]
                },
                lap: |p| -1.25 * PI * PI * sin(PI * p[0]) * cos(0.5 * PI * p[1]),
            },
            theta: SeparableField {
                s: |p| sin(PI * p[0]) * (1.0 - p[1]),
                grad: |p| [PI * cos(PI * p[0]) * (1.0 - p[1]), -sin(PI * p[0])],
                lap: |p| -PI * PI * sin(PI * p[0]) * (1.0 - p[1]),
            },
            material: UniformMaterial {
                e: 0.0,
                thermal_expansion: [0.0, 0.0],
                ..Default::default()
            },
            tagging: TaggingRule::standard(),
            t_final: 1.0,
        }
    }

    fn conductivity(&self) -> Result<f64> {
        let k = self.material.conductivity;
        if k[0][1] != 0.0 || k[1][0] != 0.0 || k[0][0] != k[1][1] {
            return Err(Error::invalid("manufactured cases need isotropic conductivity"));
        }
        Ok(k[0][0])
    }

    /// Stress `α∇u̇ + μ∇u + e∇φ - θ M_e`.
    fn stress(&self, p: [f64; 2], t: f64) -> [f64; 2] {
        let m = &self.material;
        let (gu, gp) = ((self.u.grad)(p), (self.phi.grad)(p));
        let th = (self.theta.s)(p) * t;
        let me = m.thermal_expansion;
        [
            m.alpha * gu[0] + m.mu * t * gu[0] + m.e * t * gp[0] - th * me[0],
            m.alpha * gu[1] + m.mu * t * gu[1] + m.e * t * gp[1] - th * me[1],
        ]
    }

    /// Data obtained by substituting the exact fields into the strong form.
    pub fn data(&self) -> Result<BoundaryData> {
        let k = self.conductivity()?;
        let c = *self;
        let m = self.material;
        if m.exchange <= 0.0 {
            return Err(Error::invalid("manufactured cases need a positive exchange coefficient"));
        }
        Ok(BoundaryData {
            f0: Arc::new(move |p, t| {
                -(m.alpha * (c.u.lap)(p) + m.mu * t * (c.u.lap)(p) + m.e * t * (c.phi.lap)(p)
                    - t * dot2(m.thermal_expansion, (c.theta.grad)(p)))
            }),
            f2: Arc::new(move |p, n, t| dot2(c.stress(p, t), n)),
            f3: Some(Arc::new(move |p, n, t| dot2(c.stress(p, t), n))),
            q0: Arc::new(move |p, t| t * (m.e * (c.u.lap)(p) - m.beta * (c.phi.lap)(p))),
            q2: Arc::new(move |p, n, t| {
                let (gu, gp) = ((c.u.grad)(p), (c.phi.grad)(p));
                t * (m.beta * dot2(gp, n) - m.e * dot2(gu, n))
            }),
            p: Arc::new(move |p, t| {
                (c.theta.s)(p) - k * t * (c.theta.lap)(p) + dot2(m.thermal_expansion, (c.u.grad)(p))
            }),
            theta_r: Arc::new(move |p, n, t| t * ((c.theta.s)(p) + k * dot2((c.theta.grad)(p), n) / m.exchange)),
        })
    }
}

/// `‖∇(v_h - v)‖_{L²}` by the edge-midpoint rule.
pub fn gradient_error(mesh: &Mesh, space: &FeSpace, values: &[f64], exact: impl Fn([f64; 2]) -> [f64; 2]) -> f64 {
    let nodal = space.expand(values);
    let mut s = 0.0;
    for k in 0..mesh.triangle_count() {
        let g = mesh.hat_gradients(k);
        let tri = mesh.triangles()[k];
        let v = mesh.triangle_vertices(k);
        let mut gh = [0.0; 2];
        for a in 0..3 {
            gh[0] += nodal[tri[a]] * g[a][0];
            gh[1] += nodal[tri[a]] * g[a][1];
        }
        let area = mesh.triangle_area(k);
        for a in 0..3 {
            let b = (a + 1) % 3;
            let mid = [0.5 * (v[a][0] + v[b][0]), 0.5 * (v[a][1] + v[b][1])];
            let ge = exact(mid);
            let (dx, dy) = (gh[0] - ge[0], gh[1] - ge[1]);
            s += area / 3.0 * (dx * dx + dy * dy);
        }
    }
    sqrt(s)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmsLevel {
    pub nx: usize,
    pub h: f64,
    pub steps: usize,
    pub err_u: f64,
    pub err_phi: f64,
    pub err_theta: f64,
}

/// One refinement level with `Δt = T/nx`.
pub fn mms_level(case: &MmsCase, nx: usize) -> Result<MmsLevel> {
    let mesh = generate_rect_mesh(1.0, 1.0, nx, nx, &case.tagging)?;
    let h = mesh.max_edge_length();
    let material = MaterialField::uniform(&mesh, &case.material);
    let model = Model::new(mesh, material, case.data()?, FrictionLaw::tresca(0.0)?)?;
    let grid = TimeGrid::new(case.t_final, nx)?;
    let stepper = Stepper::new(
        &model,
        grid,
        SolverOptions::default(),
        ThetaCoupling::Lagged,
        LinearSolverOptions::default(),
    )?;
    let (v, e) = (&model.spaces.v, &model.spaces.e);
    let u0 = v.interpolate(&model.mesh, |p| (case.u.s)(p) * 0.0);
    let th0 = e.interpolate(&model.mesh, |p| (case.theta.s)(p) * 0.0);
    let state = initialize(&model, &u0, &th0)?;
    let end = stepper.run(state, |_, _| true)?;
    let t = end.t;
    let scaled = |f: fn([f64; 2]) -> [f64; 2]| move |p: [f64; 2]| {
        let g = f(p);
        [t * g[0], t * g[1]]
    };
    Ok(MmsLevel {
        nx,
        h,
        steps: nx,
        err_u: gradient_error(&model.mesh, v, &end.u, scaled(case.u.grad)),
        err_phi: gradient_error(&model.mesh, &model.spaces.w, &end.phi, scaled(case.phi.grad)),
        err_theta: gradient_error(&model.mesh, e, &end.theta, scaled(case.theta.grad)),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub case: &'static str,
    pub levels: Vec<MmsLevel>,
    /// Least-squares log-log slopes; infinite when a field is reproduced exactly.
    pub rate_u: f64,
    pub rate_phi: f64,
    pub rate_theta: f64,
    pub threshold: f64,
}

impl ConvergenceReport {
    pub fn from_levels(case: &'static str, levels: Vec<MmsLevel>, threshold: f64) -> Result<Self> {
        if levels.len() < 3 {
            return Err(Error::invalid("a convergence study needs at least 3 levels"));
        }
        let hs: Vec<f64> = levels.iter().map(|l| ln(l.h)).collect();
        let rate = |errs: Vec<f64>| -> f64 {
            if errs.iter().all(|e| *e <= 1e-12) {
                return f64::INFINITY;
            }
            let ys: Vec<f64> = errs.iter().map(|e| ln(e.max(1e-300))).collect();
            fit_slope(&hs, &ys)
        };
        Ok(ConvergenceReport {
            case,
            rate_u: rate(levels.iter().map(|l| l.err_u).collect()),
            rate_phi: rate(levels.iter().map(|l| l.err_phi).collect()),
            rate_theta: rate(levels.iter().map(|l| l.err_theta).collect()),
            levels,
            threshold,
        })
    }

    pub fn passed(&self) -> bool {
        self.rate_u >= self.threshold && self.rate_phi >= self.threshold && self.rate_theta >= self.threshold
    }
}

pub fn run_mms(case: &MmsCase, levels: &[usize]) -> Result<ConvergenceReport> {
    let runs = levels.iter().map(|&nx| mms_level(case, nx)).collect::<Result<Vec<_>>>()?;
    ConvergenceReport::from_levels(case.name, runs, 0.9)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strong_form_residuals_vanish() {
        // finite differences of the closed forms against the coded derivatives
        let h = 1e-5;
        for case in [MmsCase::polynomial(), MmsCase::trigonometric()] {
            for f in [case.u, case.phi, case.theta] {
                for p in [[0.3, 0.7], [0.81, 0.12], [0.5, 0.5]] {
                    let fx = ((f.s)([p[0] + h, p[1]]) - (f.s)([p[0] - h, p[1]])) / (2.0 * h);
                    let fy = ((f.s)([p[0], p[1] + h]) - (f.s)([p[0], p[1] - h])) / (2.0 * h);
                    let g = (f.grad)(p);
                    assert!((fx - g[0]).abs() < 1e-8 && (fy - g[1]).abs() < 1e-8);
                    let h2 = 1e-4;
                    let lap = ((f.s)([p[0] + h2, p[1]]) + (f.s)([p[0] - h2, p[1]]) + (f.s)([p[0], p[1] + h2])
                        + (f.s)([p[0], p[1] - h2])
                        - 4.0 * (f.s)(p))
                        / (h2 * h2);
                    assert!((lap - (f.lap)(p)).abs() < 1e-5, "{} {lap} {}", case.name, (f.lap)(p));
                }
            }
        }
    }

    #[test]
    fn exact_fields_respect_constraints() {
        for case in [MmsCase::polynomial(), MmsCase::trigonometric()] {
            let mesh = generate_rect_mesh(1.0, 1.0, 4, 4, &case.tagging).unwrap();
            let s = crate::assembly::SpaceSet::build(&mesh).unwrap();
            for (space, f) in [(&s.v, case.u), (&s.w, case.phi), (&s.e, case.theta)] {
                for node in 0..mesh.node_count() {
                    if space.is_dirichlet(node) {
                        assert!((f.s)(mesh.nodes()[node]).abs() < 1e-14, "{}", case.name);
                    }
                }
            }
        }
    }

    #[test]
    fn no_charge_flux_on_contact_side() {
        for case in [MmsCase::polynomial(), MmsCase::trigonometric()] {
            let m = case.material;
            for x in [0.1, 0.45, 0.9] {
                let p = [x, 0.0];
                let flux = m.beta * (case.phi.grad)(p)[1] - m.e * (case.u.grad)(p)[1];
                assert!(flux.abs() < 1e-14, "{}", case.name);
            }
        }
    }

    #[test]
    fn zero_case_is_exact() {
        let rep = run_mms(&MmsCase::zero(), &[2, 3, 4]).unwrap();
        assert!(rep.levels.iter().all(|l| l.err_u == 0.0 && l.err_phi == 0.0 && l.err_theta == 0.0));
        assert!(rep.passed());
    }

    #[test]
    fn trigonometric_rates() {
        let rep = run_mms(&MmsCase::trigonometric(), &[4, 8, 16]).unwrap();
        assert!(rep.passed(), "{rep:?}");
        assert!(rep.rate_u <= 1.2, "{rep:?}");
    }

    #[test]
    fn polynomial_rates() {
        let rep = run_mms(&MmsCase::polynomial(), &[4, 8, 16]).unwrap();
        assert!(rep.passed(), "{rep:?}");
    }
}
