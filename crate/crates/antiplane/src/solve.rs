//! The `solve` driver: config to CSV rows and snapshots.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};

use antiplane_core::stepper::{initial_potential_mismatch, initialize, Model, Stepper, SystemState};
use antiplane_core::vi_solver::{GatePolicy, GateReport};
use antiplane_core::Error as CoreError;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{input, solver, CliError};
use crate::mesh_io::format_mesh;
use crate::output::{write_csv_header, write_csv_row, write_vtk, Provenance};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug)]
pub struct SolveSummary {
    pub steps: usize,
    pub gate: GateReport,
    pub final_state: SystemState,
}

pub fn build_model(cfg: &RunConfig, base: &Path) -> Result<Model, CliError> {
    let mesh = cfg.build_mesh(base)?;
    let material = cfg.material(&mesh);
    Model::new(mesh, material, cfg.boundary_data(), cfg.friction_law()?).map_err(input)
}

/// Runs every step, writing one CSV row per step. Rows are flushed as they
/// are written so a failure or interrupt leaves the completed steps on disk.
pub fn run_solve(
    cfg: &RunConfig,
    config_text: &str,
    base: &Path,
    csv: &mut dyn Write,
    stop: &AtomicBool,
) -> Result<SolveSummary, CliError> {
    let model = build_model(cfg, base)?;
    let stepper = Stepper::new(&model, cfg.grid()?, cfg.solver_options(), cfg.coupling(), cfg.linear_options())
        .map_err(input)?;
    let gate = stepper.gate();
    if !gate.ok && cfg.solver_options().gate_policy == GatePolicy::Abort {
        return Err(solver(CoreError::GateViolated {
            lipschitz: gate.lipschitz,
            z0: gate.z0,
        }));
    }

    let v = &model.spaces.v;
    let e = &model.spaces.e;
    let u0 = v.interpolate(&model.mesh, |p| cfg.initial.u0.family().eval(p, 0.0));
    let theta0 = e.interpolate(&model.mesh, |p| cfg.initial.theta0.family().eval(p, 0.0));
    let state = initialize(&model, &u0, &theta0).map_err(input)?;
    let phi0_mismatch = match cfg.initial.phi0 {
        Some(spec) => {
            let phi0 = model.spaces.w.interpolate(&model.mesh, |p| spec.family().eval(p, 0.0));
            Some(initial_potential_mismatch(&model, &state, &phi0).map_err(input)?)
        }
        None => None,
    };

    let prov = Provenance {
        config_sha256: sha256_hex(config_text.as_bytes()),
        mesh_sha256: sha256_hex(format_mesh(&model.mesh).as_bytes()),
        alpha_min: model.alpha_min(),
        trace_constant: model.trace_constant,
        z0: gate.z0,
        lipschitz: gate.lipschitz,
        gate_ok: gate.ok,
        seed: cfg.seed,
        phi0_mismatch,
    };
    let io = |e| CliError::io("csv output", e);
    write_csv_header(csv, &prov).map_err(io)?;
    csv.flush().map_err(io)?;

    let snapshot = |s: &SystemState| -> Result<(), CliError> {
        let (Some(dir), stride) = (&cfg.output.vtk_dir, cfg.output.stride) else {
            return Ok(());
        };
        if stride == 0 || (!s.step.is_multiple_of(stride) && s.step != stepper.grid.steps) {
            return Ok(());
        }
        let dir = base.join(dir);
        std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        let path = dir.join(format!("state_{:06}.vtk", s.step));
        let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        let mut w = BufWriter::new(file);
        write_vtk(&mut w, &model.mesh, &model.spaces, s)
            .and_then(|_| w.flush())
            .map_err(|e| CliError::io(&path, e))
    };
    snapshot(&state)?;

    let mut state = state;
    while state.step < stepper.grid.steps {
        if stop.load(Ordering::SeqCst) {
            return Err(CliError::Interrupted { step: state.step });
        }
        let (next, record, _) = stepper.advance(&state).map_err(solver)?;
        write_csv_row(csv, &record).map_err(io)?;
        csv.flush().map_err(io)?;
        snapshot(&next)?;
        state = next;
    }
    Ok(SolveSummary {
        steps: state.step,
        gate,
        final_state: state,
    })
}
