//! TOML run configuration.

use std::path::{Path, PathBuf};

use antiplane_core::assembly::{BoundaryData, MaterialField, UniformMaterial};
use antiplane_core::data::DataFamily;
use antiplane_core::friction::{FrictionBound, FrictionLaw, HeatGeneration};
use antiplane_core::mesh::{generate_rect_mesh, Mesh};
use antiplane_core::stepper::{ThetaCoupling, TimeGrid};
use antiplane_core::vi_solver::{GatePolicy, LinearSolverOptions, SolverOptions};
use serde::Deserialize;

use crate::error::{input, CliError};
use crate::mesh_io::{load_mesh, parse_tagging};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Seed for randomized diagnostics.
    #[serde(default)]
    pub seed: u64,
    pub mesh: MeshSection,
    #[serde(default)]
    pub material: MaterialSection,
    pub friction: FrictionSection,
    pub time: TimeSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub data: DataSection,
    #[serde(default)]
    pub initial: InitialSection,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum MeshSection {
    Rect {
        #[serde(default = "one")]
        width: f64,
        #[serde(default = "one")]
        height: f64,
        nx: usize,
        ny: usize,
        #[serde(default = "standard_tags")]
        tags: String,
    },
    File {
        path: PathBuf,
    },
}

fn one() -> f64 {
    1.0
}

fn standard_tags() -> String {
    "bottom=G3,top=G1:Ga,left=G2:Gb,right=G2:Gb".into()
}

/// Either `k` (isotropic) or a full 2×2 tensor.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Conductivity {
    Isotropic(f64),
    Tensor([[f64; 2]; 2]),
}

impl Conductivity {
    fn tensor(self) -> [[f64; 2]; 2] {
        match self {
            Conductivity::Isotropic(k) => [[k, 0.0], [0.0, k]],
            Conductivity::Tensor(t) => t,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MaterialSection {
    pub alpha: f64,
    pub mu: f64,
    pub e: f64,
    pub beta: f64,
    pub thermal_expansion: [f64; 2],
    pub conductivity: Conductivity,
    pub exchange: f64,
    /// Later regions override earlier ones.
    pub regions: Vec<Region>,
}

impl Default for MaterialSection {
    fn default() -> Self {
        let d = UniformMaterial::default();
        MaterialSection {
            alpha: d.alpha,
            mu: d.mu,
            e: d.e,
            beta: d.beta,
            thermal_expansion: d.thermal_expansion,
            conductivity: Conductivity::Tensor(d.conductivity),
            exchange: d.exchange,
            regions: Vec::new(),
        }
    }
}

/// Axis-aligned box; element coefficients apply by centroid, the exchange
/// coefficient by edge midpoint.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
    pub alpha: Option<f64>,
    pub mu: Option<f64>,
    pub e: Option<f64>,
    pub beta: Option<f64>,
    pub thermal_expansion: Option<[f64; 2]>,
    pub conductivity: Option<Conductivity>,
    pub exchange: Option<f64>,
}

impl Region {
    fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.xmin && p[0] <= self.xmax && p[1] >= self.ymin && p[1] <= self.ymax
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyName {
    Constant,
    Affine,
    Capped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeatName {
    #[default]
    None,
    FrictionalPower,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrictionSection {
    pub family: FamilyName,
    pub r0: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub r_max: Option<f64>,
    /// Declared `L_r`; must not understate the family's constant.
    pub lipschitz: Option<f64>,
    #[serde(default)]
    pub heat: HeatName,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub t_final: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyName {
    #[default]
    Warn,
    Abort,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplingName {
    #[default]
    Lagged,
    Iterate,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub tol: f64,
    pub outer_tol: f64,
    pub eps_schedule: Vec<f64>,
    pub velocity_scale: f64,
    pub max_newton: usize,
    pub max_active_set: usize,
    pub max_outer: usize,
    pub gate_policy: PolicyName,
    pub anderson: bool,
    pub theta_coupling: CouplingName,
    pub coupling_tol: f64,
    pub coupling_max_iter: usize,
    pub cg_threshold: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        let s = SolverOptions::default();
        SolverSection {
            tol: s.tol,
            outer_tol: s.outer_tol,
            eps_schedule: s.eps_schedule.clone(),
            velocity_scale: s.velocity_scale,
            max_newton: s.max_newton,
            max_active_set: s.max_active_set,
            max_outer: s.max_outer,
            gate_policy: PolicyName::Warn,
            anderson: s.anderson,
            theta_coupling: CouplingName::Lagged,
            coupling_tol: 1e-10,
            coupling_max_iter: 50,
            cg_threshold: LinearSolverOptions::default().cg_threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub csv: Option<PathBuf>,
    pub vtk_dir: Option<PathBuf>,
    /// Snapshot every `stride` steps; 0 disables snapshots.
    pub stride: usize,
}

/// One of the built-in analytic families.
#[derive(Debug, Clone, Copy, PartialEq, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DataSpec {
    #[default]
    Zero,
    Constant {
        value: f64,
    },
    Ramp {
        rate: f64,
    },
    /// `amplitude sin(kx x + phase_x) sin(ky y + phase_y) sin(omega t + phase_t)`
    Sinusoid {
        amplitude: f64,
        #[serde(default)]
        kx: f64,
        #[serde(default)]
        ky: f64,
        #[serde(default)]
        omega: f64,
        #[serde(default)]
        phase_x: f64,
        #[serde(default)]
        phase_y: f64,
        #[serde(default)]
        phase_t: f64,
    },
}

impl DataSpec {
    pub fn family(self) -> DataFamily {
        match self {
            DataSpec::Zero => DataFamily::Zero,
            DataSpec::Constant { value } => DataFamily::Constant(value),
            DataSpec::Ramp { rate } => DataFamily::Ramp(rate),
            DataSpec::Sinusoid {
                amplitude,
                kx,
                ky,
                omega,
                phase_x,
                phase_y,
                phase_t,
            } => DataFamily::Sinusoid {
                amplitude,
                kx,
                ky,
                omega,
                phase_x,
                phase_y,
                phase_t,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSection {
    pub f0: DataSpec,
    pub f2: DataSpec,
    /// Prescribed contact traction; replaces friction when present.
    pub f3: Option<DataSpec>,
    pub q0: DataSpec,
    pub q2: DataSpec,
    pub p: DataSpec,
    pub theta_r: DataSpec,
    /// Reject a nonzero `q2`.
    pub strict_q2_zero: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialSection {
    pub u0: DataSpec,
    pub theta0: DataSpec,
    /// Only compared against the potential computed from `u0`.
    pub phi0: Option<DataSpec>,
}

fn positive(name: &str, x: f64) -> Result<(), CliError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} must be positive, got {x}")))
    }
}

fn need(name: &str, x: Option<f64>) -> Result<f64, CliError> {
    x.ok_or_else(|| CliError::Config(format!("friction.{name} is required for this family")))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<(Self, String), CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Ok((Self::parse(&text)?, text))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        positive("time.t_final", self.time.t_final)?;
        if self.time.steps == 0 {
            return Err(CliError::Config("time.steps must be at least 1".into()));
        }
        let s = &self.solver;
        positive("solver.tol", s.tol)?;
        positive("solver.outer_tol", s.outer_tol)?;
        positive("solver.velocity_scale", s.velocity_scale)?;
        positive("solver.coupling_tol", s.coupling_tol)?;
        for e in &s.eps_schedule {
            positive("solver.eps_schedule entries", *e)?;
        }
        if s.max_newton == 0 || s.max_outer == 0 || s.max_active_set == 0 || s.coupling_max_iter == 0 {
            return Err(CliError::Config("iteration limits must be at least 1".into()));
        }
        if self.data.strict_q2_zero && !self.data.q2.family().is_zero() {
            return Err(CliError::Config("data.q2 must vanish when strict_q2_zero is set".into()));
        }
        if let MeshSection::Rect { nx, ny, .. } = self.mesh {
            if nx == 0 || ny == 0 {
                return Err(CliError::Config("mesh.nx and mesh.ny must be at least 1".into()));
            }
        }
        self.friction_law()?;
        self.solver_options().validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(())
    }

    /// Relative mesh paths are resolved against `base`.
    pub fn build_mesh(&self, base: &Path) -> Result<Mesh, CliError> {
        match &self.mesh {
            MeshSection::Rect {
                width,
                height,
                nx,
                ny,
                tags,
            } => {
                let rule = parse_tagging(tags).map_err(|e| CliError::Config(format!("mesh.tags: {e}")))?;
                generate_rect_mesh(*width, *height, *nx, *ny, &rule).map_err(input)
            }
            MeshSection::File { path } => load_mesh(&base.join(path)),
        }
    }

    pub fn material(&self, mesh: &Mesh) -> MaterialField {
        let m = &self.material;
        let uniform = UniformMaterial {
            alpha: m.alpha,
            mu: m.mu,
            e: m.e,
            beta: m.beta,
            thermal_expansion: m.thermal_expansion,
            conductivity: m.conductivity.tensor(),
            exchange: m.exchange,
        };
        let mut field = MaterialField::uniform(mesh, &uniform);
        for r in &m.regions {
            for k in 0..mesh.triangle_count() {
                if !r.contains(mesh.centroid(k)) {
                    continue;
                }
                if let Some(x) = r.alpha {
                    field.alpha[k] = x;
                }
                if let Some(x) = r.mu {
                    field.mu[k] = x;
                }
                if let Some(x) = r.e {
                    field.e[k] = x;
                }
                if let Some(x) = r.beta {
                    field.beta[k] = x;
                }
                if let Some(x) = r.thermal_expansion {
                    field.thermal_expansion[k] = x;
                }
                if let Some(x) = r.conductivity {
                    field.conductivity[k] = x.tensor();
                }
            }
            if let Some(x) = r.exchange {
                for (j, e) in mesh.boundary_edges().iter().enumerate() {
                    let (a, b) = (mesh.nodes()[e.nodes[0]], mesh.nodes()[e.nodes[1]]);
                    if r.contains([0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]) {
                        field.exchange[j] = x;
                    }
                }
            }
        }
        field
    }

    pub fn friction_law(&self) -> Result<FrictionLaw, CliError> {
        let f = &self.friction;
        let bound = match f.family {
            FamilyName::Constant => FrictionBound::Constant { r0: need("r0", f.r0)? },
            FamilyName::Affine => FrictionBound::AffineSaturating {
                a: need("a", f.a)?,
                b: need("b", f.b)?,
            },
            FamilyName::Capped => FrictionBound::LinearCapped {
                a: need("a", f.a)?,
                b: need("b", f.b)?,
                r_max: need("r_max", f.r_max)?,
            },
        };
        let heat = match f.heat {
            HeatName::None => HeatGeneration::None,
            HeatName::FrictionalPower => HeatGeneration::FrictionalPower,
        };
        let law = FrictionLaw::new(bound, heat).map_err(|e| CliError::Config(e.to_string()))?;
        match f.lipschitz {
            Some(l) => law.with_lipschitz(l).map_err(|e| CliError::Config(e.to_string())),
            None => Ok(law),
        }
    }

    pub fn boundary_data(&self) -> BoundaryData {
        let d = &self.data;
        let mut b = BoundaryData::zero();
        b.f0 = d.f0.family().volume();
        b.f2 = d.f2.family().boundary();
        b.f3 = d.f3.map(|s| s.family().boundary());
        b.q0 = d.q0.family().volume();
        b.q2 = d.q2.family().boundary();
        b.p = d.p.family().volume();
        b.theta_r = d.theta_r.family().boundary();
        b
    }

    pub fn grid(&self) -> Result<TimeGrid, CliError> {
        TimeGrid::new(self.time.t_final, self.time.steps).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn solver_options(&self) -> SolverOptions {
        let s = &self.solver;
        SolverOptions {
            tol: s.tol,
            outer_tol: s.outer_tol,
            eps_schedule: s.eps_schedule.clone(),
            velocity_scale: s.velocity_scale,
            max_newton: s.max_newton,
            max_active_set: s.max_active_set,
            max_outer: s.max_outer,
            gate_policy: match s.gate_policy {
                PolicyName::Warn => GatePolicy::Warn,
                PolicyName::Abort => GatePolicy::Abort,
            },
            anderson: s.anderson,
        }
    }

    pub fn linear_options(&self) -> LinearSolverOptions {
        LinearSolverOptions {
            cg_threshold: self.solver.cg_threshold,
            ..Default::default()
        }
    }

    pub fn coupling(&self) -> ThetaCoupling {
        match self.solver.theta_coupling {
            CouplingName::Lagged => ThetaCoupling::Lagged,
            CouplingName::Iterate => ThetaCoupling::Iterate {
                tol: self.solver.coupling_tol,
                max_iter: self.solver.coupling_max_iter,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[mesh]
kind = "rect"
nx = 2
ny = 2

[friction]
family = "constant"
r0 = 1.0

[time]
t_final = 1.0
steps = 2
"#;

    #[test]
    fn minimal_config_defaults() {
        let c = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.solver.tol, 1e-10);
        assert_eq!(c.data.f0, DataSpec::Zero);
        assert_eq!(c.output.stride, 0);
        let mesh = c.build_mesh(Path::new(".")).unwrap();
        assert_eq!(mesh.triangle_count(), 8);
        assert!(c.friction_law().unwrap().is_constant());
    }

    #[test]
    fn rejects_bad_values() {
        for (from, to) in [
            ("steps = 2", "steps = 0"),
            ("t_final = 1.0", "t_final = -1.0"),
            ("r0 = 1.0", "a = 1.0"),
            ("nx = 2", "nx = 2\nbogus = 1"),
        ] {
            let text = MINIMAL.replace(from, to);
            assert!(matches!(RunConfig::parse(&text), Err(CliError::Config(_))), "{to}");
        }
        let strict = format!("{MINIMAL}\n[data]\nstrict_q2_zero = true\nq2 = {{ kind = \"constant\", value = 1.0 }}\n");
        assert!(RunConfig::parse(&strict).is_err());
    }

    #[test]
    fn regions_override_coefficients() {
        let text = format!(
            "{MINIMAL}\n[material]\nconductivity = 2.0\n[[material.regions]]\nxmin = 0.0\nxmax = 0.5\nymin = 0.0\nymax = 1.0\nalpha = 3.0\n"
        );
        let c = RunConfig::parse(&text).unwrap();
        let mesh = c.build_mesh(Path::new(".")).unwrap();
        let m = c.material(&mesh);
        for k in 0..mesh.triangle_count() {
            let expect = if mesh.centroid(k)[0] <= 0.5 { 3.0 } else { 1.0 };
            assert_eq!(m.alpha[k], expect);
            assert_eq!(m.conductivity[k], [[2.0, 0.0], [0.0, 2.0]]);
        }
    }
}
