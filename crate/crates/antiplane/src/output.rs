//! CSV time series and legacy VTK snapshots.

use std::io::{self, Write};

use antiplane_core::mesh::Mesh;
use antiplane_core::stepper::{StepRecord, SystemState};
use antiplane_core::assembly::SpaceSet;

pub const CSV_COLUMNS: [&str; 13] = [
    "step",
    "t",
    "outer_iterations",
    "newton_iterations",
    "vi_residual",
    "norm_w",
    "norm_u",
    "norm_phi",
    "norm_theta",
    "stick",
    "slip",
    "max_traction",
    "gate_margin",
];

/// Run metadata written as `# key = value` lines ahead of the column header.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub config_sha256: String,
    pub mesh_sha256: String,
    pub alpha_min: f64,
    pub trace_constant: f64,
    pub z0: f64,
    pub lipschitz: f64,
    pub gate_ok: bool,
    pub seed: u64,
    pub phi0_mismatch: Option<f64>,
}

pub fn write_csv_header(w: &mut dyn Write, p: &Provenance) -> io::Result<()> {
    writeln!(w, "# antiplane solve")?;
    writeln!(w, "# config_sha256 = {}", p.config_sha256)?;
    writeln!(w, "# mesh_sha256 = {}", p.mesh_sha256)?;
    writeln!(w, "# alpha_min = {:.12e}", p.alpha_min)?;
    writeln!(w, "# trace_constant = {:.12e}", p.trace_constant)?;
    writeln!(w, "# z0 = {:.12e}", p.z0)?;
    writeln!(w, "# lipschitz = {:.12e}", p.lipschitz)?;
    writeln!(w, "# gate = {}", if p.gate_ok { "ok" } else { "violated" })?;
    writeln!(w, "# seed = {}", p.seed)?;
    if let Some(m) = p.phi0_mismatch {
        writeln!(w, "# phi0_mismatch = {m:.12e}")?;
    }
    writeln!(w, "{}", CSV_COLUMNS.join(","))
}

pub fn write_csv_row(w: &mut dyn Write, r: &StepRecord) -> io::Result<()> {
    writeln!(
        w,
        "{},{:.12e},{},{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{},{},{:.12e},{:.12e}",
        r.step,
        r.t,
        r.outer_iterations,
        r.newton_iterations,
        r.vi_residual,
        r.norm_w,
        r.norm_u,
        r.norm_phi,
        r.norm_theta,
        r.stick,
        r.slip,
        r.max_traction,
        r.gate_margin
    )
}

/// Legacy ASCII unstructured grid with nodal `u`, `phi`, `theta` and `w`.
pub fn write_vtk(w: &mut dyn Write, mesh: &Mesh, spaces: &SpaceSet, state: &SystemState) -> io::Result<()> {
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "antiplane step {} t {:.12e}", state.step, state.t)?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", mesh.node_count())?;
    for p in mesh.nodes() {
        writeln!(w, "{:.12e} {:.12e} 0", p[0], p[1])?;
    }
    let nt = mesh.triangle_count();
    writeln!(w, "CELLS {} {}", nt, 4 * nt)?;
    for t in mesh.triangles() {
        writeln!(w, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    writeln!(w, "CELL_TYPES {nt}")?;
    for _ in 0..nt {
        writeln!(w, "5")?;
    }
    writeln!(w, "POINT_DATA {}", mesh.node_count())?;
    for (name, values) in [
        ("u", spaces.v.expand(&state.u)),
        ("phi", spaces.w.expand(&state.phi)),
        ("theta", spaces.e.expand(&state.theta)),
        ("w", spaces.v.expand(&state.w)),
    ] {
        writeln!(w, "SCALARS {name} double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for v in values {
            writeln!(w, "{v:.12e}")?;
        }
    }
    Ok(())
}
